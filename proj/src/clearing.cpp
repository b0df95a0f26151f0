#include "finclear/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace finclear {

namespace {

double lookup(const std::map<std::pair<std::size_t, std::size_t>, double>& m, std::size_t a,
              std::size_t b) {
  auto it = m.find({a, b});
  return it == m.end() ? 0.0 : it->second;
}

void require_covers(const FinancialSystem& sys, const RecoveryVector& r) {
  if (r.size() != sys.size()) {
    throw InputError("recovery vector has " + std::to_string(r.size()) + " entries, system has " +
                     std::to_string(sys.size()) + " banks");
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] >= 0.0 && r[i] <= 1.0)) {
      throw InputError("recovery rate of '" + sys.banks()[i].id.str() + "' is outside [0,1]");
    }
  }
}

}  // namespace

double LiabilityLedger::between(std::size_t debtor, std::size_t creditor) const {
  return lookup(pairwise, debtor, creditor);
}

double LiabilityLedger::cumulative(std::size_t bank, int level) const {
  double sum = 0.0;
  for (int i = 0; i < level && i < static_cast<int>(by_level[bank].size()); ++i) {
    sum += by_level[bank][i];
  }
  return sum;
}

double PaymentLedger::between(std::size_t debtor, std::size_t creditor) const {
  return lookup(pairwise, debtor, creditor);
}

double PaymentLedger::outgoing(std::size_t debtor) const {
  double sum = 0.0;
  for (auto it = pairwise.lower_bound({debtor, 0}); it != pairwise.end() && it->first.first == debtor;
       ++it) {
    sum += it->second;
  }
  return sum;
}

std::size_t ClearingState::index(const BankId& id) const {
  auto it = std::lower_bound(banks.begin(), banks.end(), id);
  if (it == banks.end() || *it != id) throw InputError("unknown bank '" + id.str() + "'");
  return static_cast<std::size_t>(it - banks.begin());
}

double ClearingState::payment(const BankId& debtor, const BankId& creditor) const {
  return payments.between(index(debtor), index(creditor));
}

std::vector<BankId> ClearingState::default_set(double tolerance) const {
  std::vector<BankId> out;
  for (std::size_t i = 0; i < banks.size(); ++i) {
    if (r[i] < 1.0 - tolerance) out.push_back(banks[i]);
  }
  return out;
}

Network::Network(const FinancialSystem& sys) {
  require_valid(sys);
  levels_ = static_cast<std::size_t>(sys.priority_levels());
  const std::size_t n = sys.size();
  ids_ = sys.bank_ids();
  external_.reserve(n);
  for (const auto& b : sys.banks()) external_.push_back(b.external_assets);

  edges_.reserve(sys.contracts().size());
  max_liability_.assign(n, 0.0);
  for (const auto& c : sys.contracts()) {
    Edge e{};
    e.debtor = static_cast<std::uint32_t>(sys.index_of(c.debtor));
    e.creditor = static_cast<std::uint32_t>(sys.index_of(c.creditor));
    e.reference = c.reference ? static_cast<std::int32_t>(sys.index_of(*c.reference)) : -1;
    e.notional = c.notional;
    e.level = static_cast<std::uint32_t>(c.priority - 1);
    edges_.push_back(e);
    max_liability_[e.debtor] += c.notional;
  }
}

Network::Workspace Network::make_workspace() const {
  Workspace ws;
  const std::size_t n = bank_count();
  ws.liability.resize(edges_.size());
  ws.payment.resize(edges_.size());
  ws.by_level.resize(n * levels_);
  ws.factor.resize(n * levels_);
  ws.total.resize(n);
  ws.assets.resize(n);
  ws.update.resize(n);
  return ws;
}

bool Network::never_defaults(std::size_t bank) const {
  return external_[bank] >= max_liability_[bank];
}

void Network::evaluate(std::span<const double> r, Workspace& ws) const {
  const std::size_t n = bank_count();
  const std::size_t L = levels_;
  if (ws.total.size() != n || ws.liability.size() != edges_.size()) ws = make_workspace();

  std::fill(ws.by_level.begin(), ws.by_level.end(), 0.0);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    const double l = e.reference < 0 ? e.notional : e.notional * (1.0 - r[e.reference]);
    ws.liability[k] = l;
    ws.by_level[e.debtor * L + e.level] += l;
  }

  for (std::size_t v = 0; v < n; ++v) {
    const double* lvl = &ws.by_level[v * L];
    double total = 0.0;
    for (std::size_t p = 0; p < L; ++p) total += lvl[p];
    ws.total[v] = total;

    // Waterfall over the payable amount. The cumulative sum is accumulated in
    // the same order as `total`, so r_v = 1 pays every level in full exactly.
    const double budget = r[v] * total;
    double cum = 0.0;
    double* factor = &ws.factor[v * L];
    for (std::size_t p = 0; p < L; ++p) {
      const double next = cum + lvl[p];
      if (budget >= next) {
        factor[p] = 1.0;
      } else if (budget <= cum) {
        factor[p] = 0.0;
      } else {
        factor[p] = (budget - cum) / lvl[p];
      }
      cum = next;
    }
  }

  std::copy(external_.begin(), external_.end(), ws.assets.begin());
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    const double p = ws.factor[e.debtor * L + e.level] * ws.liability[k];
    ws.payment[k] = p;
    ws.assets[e.creditor] += p;
  }

  for (std::size_t v = 0; v < n; ++v) {
    const double l = ws.total[v];
    const double a = ws.assets[v];
    ws.update[v] = (l <= 0.0 || a >= l) ? 1.0 : a / l;
  }
}

double Network::residual(std::span<const double> r, Workspace& ws) const {
  evaluate(r, ws);
  double res = 0.0;
  for (std::size_t v = 0; v < bank_count(); ++v) res = std::max(res, std::abs(ws.update[v] - r[v]));
  return res;
}

ClearingState Network::state(std::span<const double> r) const {
  Workspace ws = make_workspace();
  const double res = residual(r, ws);
  const std::size_t n = bank_count();

  ClearingState s;
  s.banks = ids_;
  s.r = RecoveryVector(std::vector<double>(r.begin(), r.end()));
  s.ledger.per_contract = ws.liability;
  s.ledger.total = ws.total;
  s.ledger.by_level.assign(n, std::vector<double>(levels_, 0.0));
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t p = 0; p < levels_; ++p) s.ledger.by_level[v][p] = ws.by_level[v * levels_ + p];
  }
  s.payments.per_contract = ws.payment;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto key = std::make_pair<std::size_t, std::size_t>(edges_[k].debtor, edges_[k].creditor);
    s.ledger.pairwise[key] += ws.liability[k];
    s.payments.pairwise[key] += ws.payment[k];
  }
  s.assets = ws.assets;
  s.payoffs.resize(n);
  for (std::size_t v = 0; v < n; ++v) s.payoffs[v] = std::max(ws.assets[v] - ws.total[v], 0.0);
  s.update = ws.update;
  s.residual = res;
  return s;
}

LiabilityLedger liabilities(const FinancialSystem& sys, const RecoveryVector& r) {
  require_covers(sys, r);
  return Network(sys).state(r.values()).ledger;
}

PaymentLedger payments(const FinancialSystem& sys, const RecoveryVector& r) {
  require_covers(sys, r);
  return Network(sys).state(r.values()).payments;
}

ClearingState clearing_state(const FinancialSystem& sys, const RecoveryVector& r) {
  require_covers(sys, r);
  return Network(sys).state(r.values());
}

RecoveryVector update(const FinancialSystem& sys, const RecoveryVector& r) {
  require_covers(sys, r);
  Network net(sys);
  auto ws = net.make_workspace();
  net.evaluate(r.values(), ws);
  return RecoveryVector(ws.update);
}

double residual(const FinancialSystem& sys, const RecoveryVector& r) {
  require_covers(sys, r);
  Network net(sys);
  auto ws = net.make_workspace();
  return net.residual(r.values(), ws);
}

std::vector<std::string> audit_clearing_state(const FinancialSystem& sys,
                                              const ClearingState& state, double tolerance) {
  std::vector<std::string> issues;
  auto report = [&](const std::string& bank, const std::string& what) {
    issues.push_back(bank + ": " + what);
  };
  const std::size_t n = sys.size();
  const auto& contracts = sys.contracts();
  if (state.r.size() != n || state.payments.per_contract.size() != contracts.size()) {
    issues.push_back("state does not belong to this system");
    return issues;
  }

  std::vector<double> incoming(n, 0.0), outgoing(n, 0.0);
  for (std::size_t k = 0; k < contracts.size(); ++k) {
    const auto d = sys.index_of(contracts[k].debtor);
    const auto c = sys.index_of(contracts[k].creditor);
    outgoing[d] += state.payments.per_contract[k];
    incoming[c] += state.payments.per_contract[k];
  }

  for (std::size_t v = 0; v < n; ++v) {
    const std::string& name = sys.banks()[v].id.str();
    const double a = state.assets[v];
    const double l = state.ledger.total[v];
    const double slack = tolerance * std::max(1.0, std::max(a, l));
    if (state.r[v] < 0.0 || state.r[v] > 1.0) report(name, "recovery rate outside [0,1]");
    if (state.update[v] < 0.0 || state.update[v] > 1.0) report(name, "update outside [0,1]");
    if (std::abs(a - (sys.banks()[v].external_assets + incoming[v])) > slack) {
      report(name, "assets differ from external assets plus incoming payments");
    }
    if (std::abs(state.payoffs[v] - std::max(a - l, 0.0)) > slack) {
      report(name, "payoff differs from max(a - l, 0)");
    }
    if (l > 0.0) {
      const double bound = tolerance * std::max(1.0, l) + state.residual * l;
      if (std::abs(outgoing[v] - std::min(a, l)) > bound) {
        std::ostringstream os;
        os << "conservation: pays " << outgoing[v] << " but min(a, l) = " << std::min(a, l);
        report(name, os.str());
      }
    } else if (outgoing[v] > tolerance) {
      report(name, "pays without liabilities");
    }
  }

  // Priority dominance and pro-rata payment inside each level.
  for (std::size_t k = 0; k < contracts.size(); ++k) {
    const double pk = state.payments.per_contract[k];
    const double lk = state.ledger.per_contract[k];
    if (pk > lk + tolerance * std::max(1.0, lk)) report(contracts[k].debtor.str(), "overpays a contract");
    for (std::size_t j = 0; j < contracts.size(); ++j) {
      if (j == k || contracts[j].debtor != contracts[k].debtor) continue;
      const double pj = state.payments.per_contract[j];
      const double lj = state.ledger.per_contract[j];
      if (contracts[j].priority < contracts[k].priority && pk > tolerance &&
          pj < lj - tolerance * std::max(1.0, lj)) {
        report(contracts[k].debtor.str(), "pays a lower level before a higher level is settled");
      }
      if (contracts[j].priority == contracts[k].priority && lk > tolerance && lj > tolerance &&
          std::abs(pk / lk - pj / lj) > tolerance) {
        report(contracts[k].debtor.str(), "unequal payment ratios inside one priority level");
      }
    }
  }
  return issues;
}

}  // namespace finclear
