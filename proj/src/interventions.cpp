#include "finclear/interventions.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>

namespace finclear {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void require_bank(const FinancialSystem& sys, const BankId& id) {
  if (!sys.find(id)) throw ActionError("unknown bank '" + id.str() + "'");
}

void require_amount(double amount, const char* what) {
  if (!std::isfinite(amount) || amount <= 0.0) {
    throw ActionError(std::string(what) + " amount must be positive");
  }
}

std::string fmt_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

double objective_value(const std::vector<double>& payoffs, PayoffObjective objective) {
  if (payoffs.empty()) return 0.0;
  if (objective == PayoffObjective::worst_case) {
    return *std::min_element(payoffs.begin(), payoffs.end());
  }
  return std::accumulate(payoffs.begin(), payoffs.end(), 0.0) /
         static_cast<double>(payoffs.size());
}

}  // namespace

const BankId& actor(const Action& action) {
  return std::visit(overloaded{[](const RemoveIncomingDebt& a) -> const BankId& { return a.creditor; },
                               [](const Donate& a) -> const BankId& { return a.from; },
                               [](const InjectOwnAssets& a) -> const BankId& { return a.bank; },
                               [](const Reprioritize& a) -> const BankId& { return a.bank; }},
                    action);
}

double action_cost(const Action& action) {
  return std::visit(overloaded{[](const RemoveIncomingDebt&) { return 0.0; },
                               [](const Donate& a) { return a.amount; },
                               [](const InjectOwnAssets& a) { return a.amount; },
                               [](const Reprioritize&) { return 0.0; }},
                    action);
}

std::string action_kind(const Action& action) {
  return std::visit(overloaded{[](const RemoveIncomingDebt&) { return "remove_incoming_debt"; },
                               [](const Donate&) { return "donate"; },
                               [](const InjectOwnAssets&) { return "inject_own_assets"; },
                               [](const Reprioritize&) { return "reprioritize"; }},
                    action);
}

std::string describe(const Action& action) {
  return std::visit(
      overloaded{
          [](const RemoveIncomingDebt& a) {
            return a.creditor.str() + " removes " + fmt_number(a.fraction) + " of the debt " +
                   a.debtor.str() + "->" + a.creditor.str();
          },
          [](const Donate& a) {
            return a.from.str() + " donates " + fmt_number(a.amount) + " to " + a.to.str();
          },
          [](const InjectOwnAssets& a) {
            return a.bank.str() + " injects " + fmt_number(a.amount);
          },
          [](const Reprioritize& a) {
            std::string s = a.bank.str() + " reprioritizes";
            for (const auto& p : a.assignments) {
              s += " " + a.bank.str() + "->" + p.creditor.str();
              if (p.reference) s += "[" + p.reference->str() + "]";
              s += "@" + std::to_string(p.priority);
            }
            return s;
          }},
      action);
}

FinancialSystem apply_action(const FinancialSystem& sys, const Action& action) {
  return std::visit(
      overloaded{
          [&](const RemoveIncomingDebt& a) {
            require_bank(sys, a.debtor);
            require_bank(sys, a.creditor);
            if (!(a.fraction >= 0.0 && a.fraction <= 1.0)) {
              throw ActionError("removal fraction must lie in [0,1]");
            }
            std::vector<Contract> contracts;
            bool matched = false;
            for (const auto& c : sys.contracts()) {
              if (c.is_debt() && c.debtor == a.debtor && c.creditor == a.creditor) {
                matched = true;
                if (a.fraction >= 1.0) continue;
                Contract scaled = c;
                scaled.notional = (1.0 - a.fraction) * c.notional;
                contracts.push_back(std::move(scaled));
              } else {
                contracts.push_back(c);
              }
            }
            if (!matched) {
              throw ActionError("no debt contract from '" + a.debtor.str() + "' to '" +
                                a.creditor.str() + "'");
            }
            return sys.with_contracts(std::move(contracts));
          },
          [&](const Donate& a) {
            require_bank(sys, a.from);
            require_bank(sys, a.to);
            require_amount(a.amount, "donation");
            if (a.from == a.to) throw ActionError("a bank cannot donate to itself");
            return sys.with_external_assets(a.to, sys.bank(a.to).external_assets + a.amount);
          },
          [&](const InjectOwnAssets& a) {
            require_bank(sys, a.bank);
            require_amount(a.amount, "injection");
            return sys.with_external_assets(a.bank, sys.bank(a.bank).external_assets + a.amount);
          },
          [&](const Reprioritize& a) {
            require_bank(sys, a.bank);
            std::vector<Contract> contracts = sys.contracts();
            for (const auto& p : a.assignments) {
              if (p.priority < 1 || p.priority > sys.priority_levels()) {
                throw ActionError("priority " + std::to_string(p.priority) + " outside 1.." +
                                  std::to_string(sys.priority_levels()));
              }
              bool matched = false;
              for (auto& c : contracts) {
                if (c.debtor == a.bank && c.creditor == p.creditor && c.reference == p.reference) {
                  c.priority = p.priority;
                  matched = true;
                }
              }
              if (!matched) {
                throw ActionError("'" + a.bank.str() + "' has no outgoing contract to '" +
                                  p.creditor.str() + "'" +
                                  (p.reference ? " in reference to '" + p.reference->str() + "'"
                                               : std::string()));
              }
            }
            return sys.with_contracts(std::move(contracts));
          }},
      action);
}

EffectReport assess(const FinancialSystem& sys, const Action& action, const BankId& acting,
                    const SolverConfig& cfg) {
  if (actor(action) != acting) {
    throw ActionError("'" + acting.str() + "' is not the acting bank of: " + describe(action));
  }
  const FinancialSystem modified = apply_action(sys, action);

  EffectReport report;
  report.acting = acting;
  report.action = action;
  report.cost = action_cost(action);
  report.before = find_solutions(sys, cfg);
  report.after = find_solutions(modified, cfg);
  report.payoffs_before = payoffs_of(report.before, acting);
  report.payoffs_after = payoffs_of(report.after, acting);
  report.recovery_before = recoveries_of(report.before, acting);
  report.recovery_after = recoveries_of(report.after, acting);
  if (!report.payoffs_before.empty() && !report.payoffs_after.empty()) {
    report.min_payoff_delta =
        report.payoffs_after.front() - report.cost - report.payoffs_before.front();
    report.max_payoff_delta =
        report.payoffs_after.back() - report.cost - report.payoffs_before.back();
  }
  return report;
}

PartialRemovalResult optimize_partial_removal(const FinancialSystem& sys, const BankId& debtor,
                                              const BankId& acting, std::size_t grid_steps,
                                              const SolverConfig& cfg,
                                              PayoffObjective objective) {
  if (grid_steps == 0) throw InputError("grid_steps must be positive");
  // Fails early when the debt does not exist.
  apply_action(sys, RemoveIncomingDebt{debtor, acting, 0.0});

  SolverConfig inner = cfg;
  inner.policy = ExecutionPolicy::serial;
  const long points = static_cast<long>(grid_steps) + 1;
  std::vector<double> values(static_cast<std::size_t>(points), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(points));

#pragma omp parallel for schedule(dynamic) if (cfg.policy == ExecutionPolicy::parallel)
  for (long k = 0; k < points; ++k) {
    try {
      const double fraction = static_cast<double>(k) / static_cast<double>(grid_steps);
      const auto modified = apply_action(sys, RemoveIncomingDebt{debtor, acting, fraction});
      values[k] = objective_value(payoffs_of(find_solutions(modified, inner), acting), objective);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PartialRemovalResult result;
  for (long k = 0; k < points; ++k) {
    const double fraction = static_cast<double>(k) / static_cast<double>(grid_steps);
    result.curve.emplace_back(fraction, values[k]);
    if (k == 0 || values[k] > result.best_payoff + 1e-12) {
      result.best_payoff = values[k];
      result.best_fraction = fraction;
    }
  }
  return result;
}

bool project_solution(const FinancialSystem& original, const FinancialSystem& modified,
                      const RecoveryVector& r, const BankId& acting, double tolerance) {
  if (original.bank_ids() != modified.bank_ids() ||
      original.contracts().size() != modified.contracts().size() ||
      original.priority_levels() != modified.priority_levels()) {
    throw InputError("modified system does not share the original's banks and contracts");
  }
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto& a = original.banks()[i];
    const auto& b = modified.banks()[i];
    if (a.id != acting && a.external_assets != b.external_assets) {
      throw InputError("external assets of '" + a.id.str() + "' differ between the systems");
    }
  }
  for (std::size_t k = 0; k < original.contracts().size(); ++k) {
    Contract a = original.contracts()[k];
    const Contract& b = modified.contracts()[k];
    if (a.debtor == acting) a.priority = b.priority;
    if (!(a == b)) {
      throw InputError("contract #" + std::to_string(k) + " differs beyond the acting bank's priorities");
    }
  }
  return verify_solution(original, r, tolerance).ok;
}

}  // namespace finclear
