#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "finclear/model.hpp"
#include "finclear/solver.hpp"

namespace finclear {

/// The creditor removes `fraction` of its incoming debt from `debtor`; the
/// remaining notional is (1 - fraction) times the old one and fraction 1
/// deletes the contract.
struct RemoveIncomingDebt {
  BankId debtor;
  BankId creditor;
  double fraction = 1.0;
};

/// `from` pays `amount` out of the model into the external assets of `to`.
struct Donate {
  BankId from;
  BankId to;
  double amount = 0.0;
};

struct InjectOwnAssets {
  BankId bank;
  double amount = 0.0;
};

/// Outgoing contract of the acting bank, addressed by creditor and (for a
/// CDS) reference entity, moved to a new priority level.
struct PriorityAssignment {
  BankId creditor;
  std::optional<BankId> reference;
  int priority = 1;
};

struct Reprioritize {
  BankId bank;
  std::vector<PriorityAssignment> assignments;
};

using Action = std::variant<RemoveIncomingDebt, Donate, InjectOwnAssets, Reprioritize>;

/// The bank executing the action.
const BankId& actor(const Action& action);
/// Money the actor spends on the action (donations and injections).
double action_cost(const Action& action);
std::string action_kind(const Action& action);
std::string describe(const Action& action);

/// Returns the modified system; the input is never changed. Throws
/// ActionError when the action does not fit the system. The result is not
/// re-validated: removing the last debt of a CDS reference entity yields a
/// system whose validation reports the violation.
FinancialSystem apply_action(const FinancialSystem& sys, const Action& action);

struct EffectReport {
  BankId acting;
  Action action;
  double cost = 0.0;
  SolutionSet before;
  SolutionSet after;
  std::vector<double> payoffs_before;  // sorted
  std::vector<double> payoffs_after;   // sorted, gross of cost
  std::vector<double> recovery_before;
  std::vector<double> recovery_after;
  double min_payoff_delta = 0.0;  // min(after) - cost - min(before)
  double max_payoff_delta = 0.0;  // max(after) - cost - max(before)
};

/// Solves the system before and after the action from the acting bank's
/// point of view. Throws ActionError when `acting` is not the action's actor.
EffectReport assess(const FinancialSystem& sys, const Action& action, const BankId& acting,
                    const SolverConfig& cfg = {});

/// How a solution set is reduced to one number for the acting bank.
enum class PayoffObjective { worst_case, expected };

struct PartialRemovalResult {
  double best_fraction = 0.0;
  double best_payoff = 0.0;
  std::vector<std::pair<double, double>> curve;  // (fraction, objective)
};

/// Scans fractions k / grid_steps for k = 0..grid_steps of the debt
/// debtor -> acting. Ties go to the smaller fraction.
PartialRemovalResult optimize_partial_removal(const FinancialSystem& sys, const BankId& debtor,
                                              const BankId& acting, std::size_t grid_steps,
                                              const SolverConfig& cfg = {},
                                              PayoffObjective objective =
                                                  PayoffObjective::worst_case);

/// Whether a solution of the modified system is already a solution of the
/// original one. `modified` must differ from `original` only in the acting
/// bank's external assets or the priorities of its outgoing contracts
/// (InputError otherwise).
bool project_solution(const FinancialSystem& original, const FinancialSystem& modified,
                      const RecoveryVector& r, const BankId& acting, double tolerance);

}  // namespace finclear
