#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace finclear {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent caller input (unknown bank, wrong vector size).
class InputError : public Error {
 public:
  using Error::Error;
};

/// The requested computation is outside the configured desk-scale budget.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// An intervention cannot be applied to the system it targets.
class ActionError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Identifiers and contracts
// ---------------------------------------------------------------------------

struct BankId {
  std::string value;

  BankId() = default;
  BankId(std::string v) : value(std::move(v)) {}  // NOLINT: implicit by intent
  BankId(const char* v) : value(v) {}              // NOLINT

  const std::string& str() const { return value; }
  auto operator<=>(const BankId&) const = default;
};

struct Bank {
  BankId id;
  double external_assets = 0.0;

  bool operator==(const Bank&) const = default;
};

enum class ContractKind { debt, cds };

struct Contract {
  BankId debtor;
  BankId creditor;
  double notional = 0.0;
  ContractKind kind = ContractKind::debt;
  std::optional<BankId> reference;  // set iff kind == cds
  int priority = 1;                 // 1 is paid first

  static Contract debt(BankId debtor, BankId creditor, double notional, int priority = 1);
  static Contract cds(BankId debtor, BankId creditor, BankId reference, double notional,
                      int priority = 1);

  bool is_debt() const { return kind == ContractKind::debt; }
  bool operator==(const Contract&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
  std::string code;  // stable machine-readable tag, e.g. "self-contract"
  std::string message;
  std::optional<std::size_t> contract;  // index into FinancialSystem::contracts()
  std::optional<BankId> bank;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view code) const;
  std::string summary() const;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

// ---------------------------------------------------------------------------
// FinancialSystem
// ---------------------------------------------------------------------------

/// Static network of banks and contracts. Banks are kept sorted by id, which
/// fixes the coordinate order of every recovery vector over this system.
/// Construction does not validate; call validate_system() or build a Network.
class FinancialSystem {
 public:
  FinancialSystem() = default;
  FinancialSystem(std::vector<Bank> banks, std::vector<Contract> contracts,
                  int priority_levels = 1);

  const std::vector<Bank>& banks() const { return banks_; }
  const std::vector<Contract>& contracts() const { return contracts_; }
  int priority_levels() const { return priority_levels_; }
  std::size_t size() const { return banks_.size(); }

  std::optional<std::size_t> find(const BankId& id) const;
  /// Throws InputError for an unknown id.
  std::size_t index_of(const BankId& id) const;
  const Bank& bank(const BankId& id) const { return banks_[index_of(id)]; }
  std::vector<BankId> bank_ids() const;

  FinancialSystem with_external_assets(const BankId& id, double value) const;
  FinancialSystem with_contracts(std::vector<Contract> contracts) const;
  FinancialSystem with_priority_levels(int levels) const;

  bool operator==(const FinancialSystem&) const = default;

 private:
  std::vector<Bank> banks_;
  std::vector<Contract> contracts_;
  int priority_levels_ = 1;
};

ValidationReport validate_system(const FinancialSystem& sys);

/// Throws ValidationError when the report is not ok.
void require_valid(const FinancialSystem& sys);

// ---------------------------------------------------------------------------
// RecoveryVector
// ---------------------------------------------------------------------------

/// Dense recovery rates in the bank order of the system they belong to.
class RecoveryVector {
 public:
  RecoveryVector() = default;
  explicit RecoveryVector(std::vector<double> rates);

  static RecoveryVector ones(std::size_t n) { return RecoveryVector(std::vector<double>(n, 1.0)); }
  /// Every bank must appear exactly once; rates must lie in [0,1].
  static RecoveryVector from_map(const FinancialSystem& sys, const std::map<BankId, double>& rates);

  std::size_t size() const { return rates_.size(); }
  double operator[](std::size_t i) const { return rates_[i]; }
  std::span<const double> values() const { return rates_; }
  double at(const FinancialSystem& sys, const BankId& id) const;

  bool operator==(const RecoveryVector&) const = default;

 private:
  std::vector<double> rates_;
};

/// Lexicographic order over coordinates; the canonical order of solutions.
bool lexicographic_less(std::span<const double> a, std::span<const double> b);
double max_norm_distance(std::span<const double> a, std::span<const double> b);

}  // namespace finclear
