#include "finclear/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace finclear {

Contract Contract::debt(BankId debtor, BankId creditor, double notional, int priority) {
  return Contract{std::move(debtor), std::move(creditor), notional, ContractKind::debt,
                  std::nullopt, priority};
}

Contract Contract::cds(BankId debtor, BankId creditor, BankId reference, double notional,
                       int priority) {
  return Contract{std::move(debtor), std::move(creditor), notional, ContractKind::cds,
                  std::move(reference), priority};
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].code << ": " << violations[i].message;
  }
  return os.str();
}

ValidationError::ValidationError(ValidationReport report)
    : Error("invalid financial system: " + report.summary()), report_(std::move(report)) {}

FinancialSystem::FinancialSystem(std::vector<Bank> banks, std::vector<Contract> contracts,
                                 int priority_levels)
    : banks_(std::move(banks)), contracts_(std::move(contracts)), priority_levels_(priority_levels) {
  std::stable_sort(banks_.begin(), banks_.end(),
                   [](const Bank& a, const Bank& b) { return a.id < b.id; });
}

std::optional<std::size_t> FinancialSystem::find(const BankId& id) const {
  auto it = std::lower_bound(banks_.begin(), banks_.end(), id,
                             [](const Bank& b, const BankId& key) { return b.id < key; });
  if (it == banks_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - banks_.begin());
}

std::size_t FinancialSystem::index_of(const BankId& id) const {
  if (auto i = find(id)) return *i;
  throw InputError("unknown bank '" + id.str() + "'");
}

std::vector<BankId> FinancialSystem::bank_ids() const {
  std::vector<BankId> ids;
  ids.reserve(banks_.size());
  for (const auto& b : banks_) ids.push_back(b.id);
  return ids;
}

FinancialSystem FinancialSystem::with_external_assets(const BankId& id, double value) const {
  FinancialSystem copy = *this;
  copy.banks_[index_of(id)].external_assets = value;
  return copy;
}

FinancialSystem FinancialSystem::with_contracts(std::vector<Contract> contracts) const {
  FinancialSystem copy = *this;
  copy.contracts_ = std::move(contracts);
  return copy;
}

FinancialSystem FinancialSystem::with_priority_levels(int levels) const {
  FinancialSystem copy = *this;
  copy.priority_levels_ = levels;
  return copy;
}

ValidationReport validate_system(const FinancialSystem& sys) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message, std::optional<std::size_t> contract,
                 std::optional<BankId> bank) {
    report.violations.push_back(
        Violation{std::move(code), std::move(message), contract, std::move(bank)});
  };

  if (sys.priority_levels() < 1) {
    add("bad-priority-levels", "priority_levels must be a positive integer", std::nullopt,
        std::nullopt);
  }

  const auto& banks = sys.banks();
  for (std::size_t i = 0; i < banks.size(); ++i) {
    const Bank& b = banks[i];
    if (b.id.str().empty()) add("empty-bank-id", "bank id must be non-empty", std::nullopt, b.id);
    if (i > 0 && banks[i - 1].id == b.id) {
      add("duplicate-bank", "bank '" + b.id.str() + "' declared more than once", std::nullopt,
          b.id);
    }
    if (!std::isfinite(b.external_assets) || b.external_assets < 0.0) {
      add("negative-external-assets",
          "bank '" + b.id.str() + "' must have finite, non-negative external assets",
          std::nullopt, b.id);
    }
  }

  std::set<BankId> debtors_with_debt;
  for (const auto& c : sys.contracts()) {
    if (c.is_debt() && c.notional > 0.0 && sys.find(c.debtor)) debtors_with_debt.insert(c.debtor);
  }

  const auto& contracts = sys.contracts();
  for (std::size_t k = 0; k < contracts.size(); ++k) {
    const Contract& c = contracts[k];
    const std::string where = "contract #" + std::to_string(k) + " (" + c.debtor.str() + " -> " +
                              c.creditor.str() + ")";
    for (const BankId* id : {&c.debtor, &c.creditor}) {
      if (!sys.find(*id)) {
        add("unknown-bank", where + " references unknown bank '" + id->str() + "'", k, *id);
      }
    }
    if (c.debtor == c.creditor) {
      add("self-contract", where + " is a contract of a bank with itself", k, c.debtor);
    }
    if (!std::isfinite(c.notional) || c.notional <= 0.0) {
      add("non-positive-notional", where + " must have a positive notional", k, std::nullopt);
    }
    if (c.priority < 1 || c.priority > sys.priority_levels()) {
      add("priority-out-of-range",
          where + " has priority " + std::to_string(c.priority) + " outside 1.." +
              std::to_string(sys.priority_levels()),
          k, std::nullopt);
    }
    if (c.kind == ContractKind::debt) {
      if (c.reference) add("debt-with-reference", where + " is a debt but names a reference", k,
                           *c.reference);
      continue;
    }
    if (!c.reference) {
      add("cds-missing-reference", where + " is a CDS without a reference entity", k,
          std::nullopt);
      continue;
    }
    const BankId& ref = *c.reference;
    if (!sys.find(ref)) {
      add("unknown-bank", where + " references unknown reference entity '" + ref.str() + "'", k,
          ref);
      continue;
    }
    if (ref == c.debtor || ref == c.creditor) {
      add("self-reference", where + " is a CDS in reference to one of its own parties", k, ref);
    }
    if (!debtors_with_debt.count(ref)) {
      add("reference-entity-has-no-debt",
          where + ": reference entity '" + ref.str() + "' is not the debtor of any positive debt",
          k, ref);
    }
  }
  return report;
}

void require_valid(const FinancialSystem& sys) {
  auto report = validate_system(sys);
  if (!report.ok()) throw ValidationError(std::move(report));
}

RecoveryVector::RecoveryVector(std::vector<double> rates) : rates_(std::move(rates)) {}

RecoveryVector RecoveryVector::from_map(const FinancialSystem& sys,
                                        const std::map<BankId, double>& rates) {
  std::vector<double> dense(sys.size(), -1.0);
  for (const auto& [id, rate] : rates) {
    const auto idx = sys.find(id);
    if (!idx) throw InputError("recovery vector names unknown bank '" + id.str() + "'");
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw InputError("recovery rate of '" + id.str() + "' is outside [0,1]");
    }
    dense[*idx] = rate;
  }
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] < 0.0) {
      throw InputError("recovery vector is missing bank '" + sys.banks()[i].id.str() + "'");
    }
  }
  return RecoveryVector(std::move(dense));
}

double RecoveryVector::at(const FinancialSystem& sys, const BankId& id) const {
  const auto i = sys.index_of(id);
  if (i >= rates_.size()) throw InputError("recovery vector does not cover bank '" + id.str() + "'");
  return rates_[i];
}

bool lexicographic_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

double max_norm_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace finclear
