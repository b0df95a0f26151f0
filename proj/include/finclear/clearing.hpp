#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finclear/model.hpp"

namespace finclear {

/// Liabilities induced by a recovery vector.
///
/// A contract from u to v contributes its notional (debt) or
/// notional * (1 - r_ref) (CDS). Totals are aggregated per debtor, and per
/// debtor and priority level; level indices in this struct are 0-based.
struct LiabilityLedger {
  std::vector<double> per_contract;          // aligned with FinancialSystem::contracts()
  std::vector<double> total;                 // l_v, per bank
  std::vector<std::vector<double>> by_level;  // [bank][level] = l_v^(level+1)
  std::map<std::pair<std::size_t, std::size_t>, double> pairwise;  // (debtor, creditor)

  double between(std::size_t debtor, std::size_t creditor) const;
  /// Sum of the levels 1..=level (1-based, level may be 0).
  double cumulative(std::size_t bank, int level) const;
};

struct PaymentLedger {
  std::vector<double> per_contract;
  std::map<std::pair<std::size_t, std::size_t>, double> pairwise;

  double between(std::size_t debtor, std::size_t creditor) const;
  double outgoing(std::size_t debtor) const;
};

/// A recovery vector together with everything it induces.
struct ClearingState {
  std::vector<BankId> banks;
  RecoveryVector r;
  LiabilityLedger ledger;
  PaymentLedger payments;
  std::vector<double> assets;
  std::vector<double> payoffs;
  std::vector<double> update;  // f(r)
  double residual = 0.0;       // max-norm of f(r) - r

  std::size_t index(const BankId& id) const;
  double recovery(const BankId& id) const { return r[index(id)]; }
  double asset(const BankId& id) const { return assets[index(id)]; }
  double liability(const BankId& id) const { return ledger.total[index(id)]; }
  double payoff(const BankId& id) const { return payoffs[index(id)]; }
  double payment(const BankId& debtor, const BankId& creditor) const;
  /// Banks with r_v < 1 - tolerance, in bank order.
  std::vector<BankId> default_set(double tolerance) const;
};

/// Flattened, validated form of a FinancialSystem used by every evaluation.
///
/// Payments under priorities follow a waterfall over the debtor's payable
/// amount r_v * l_v(r): full levels are paid in full, the marginal level pro
/// rata, lower levels nothing. With one level this is r_v * l_{v,u}(r), and at
/// a fixed point the payable amount equals min(a_v, l_v).
class Network {
 public:
  struct Edge {
    std::uint32_t debtor;
    std::uint32_t creditor;
    std::int32_t reference;  // -1 for debt
    double notional;
    std::uint32_t level;  // 0-based priority
  };

  /// Scratch space reused across evaluations.
  struct Workspace {
    std::vector<double> liability;  // per edge
    std::vector<double> payment;    // per edge
    std::vector<double> by_level;   // bank * levels
    std::vector<double> factor;     // bank * levels, paid fraction of each level
    std::vector<double> total;      // per bank
    std::vector<double> assets;     // per bank
    std::vector<double> update;     // per bank
  };

  /// Throws ValidationError for an invalid system.
  explicit Network(const FinancialSystem& sys);

  std::size_t bank_count() const { return external_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t levels() const { return levels_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const double> external_assets() const { return external_; }
  const std::vector<BankId>& bank_ids() const { return ids_; }

  Workspace make_workspace() const;

  /// Fills every buffer of `ws` for recovery vector `r`.
  void evaluate(std::span<const double> r, Workspace& ws) const;
  /// Evaluates and returns the max-norm of f(r) - r.
  double residual(std::span<const double> r, Workspace& ws) const;

  /// l_v at r = 0, the largest liability bank v can ever face.
  double max_liability(std::size_t bank) const { return max_liability_[bank]; }
  /// True when e_v >= max_liability(v): the bank is solvent under every r.
  bool never_defaults(std::size_t bank) const;

  ClearingState state(std::span<const double> r) const;

 private:
  std::vector<BankId> ids_;
  std::vector<double> external_;
  std::vector<Edge> edges_;
  std::vector<double> max_liability_;
  std::size_t levels_ = 1;
};

// Per-call conveniences. Each validates the system and checks that `r`
// covers it (InputError otherwise).
LiabilityLedger liabilities(const FinancialSystem& sys, const RecoveryVector& r);
PaymentLedger payments(const FinancialSystem& sys, const RecoveryVector& r);
ClearingState clearing_state(const FinancialSystem& sys, const RecoveryVector& r);
RecoveryVector update(const FinancialSystem& sys, const RecoveryVector& r);
double residual(const FinancialSystem& sys, const RecoveryVector& r);

/// Checks conservation, priority dominance, marginal pro-rata payment and
/// the payoff/asset identities of a state. Conservation compares outgoing
/// payments with min(a_v, l_v); off a fixed point the two differ by at most
/// |r_v - f_v(r)| * l_v, so the slack is tolerance * max(1, l_v) plus
/// residual * l_v. Returns human-readable violations (empty when all hold).
std::vector<std::string> audit_clearing_state(const FinancialSystem& sys,
                                              const ClearingState& state, double tolerance);

}  // namespace finclear
