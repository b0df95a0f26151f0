#pragma once

// Checks shared by the property tests and the acceptance binary. Each returns
// a list of failure descriptions; empty means the property held.

#include <random>
#include <string>
#include <vector>

#include "finclear/clearing.hpp"
#include "finclear/interventions.hpp"
#include "finclear/solver.hpp"
#include "oracle.hpp"

namespace reftest {

inline std::vector<std::string> audit_set(const finclear::FinancialSystem& sys, const finclear::SolutionSet& set,
                                          double tol = 1e-9) {
  std::vector<std::string> out;
  for (const auto& s : set.solutions) {
    for (auto& issue : finclear::audit_clearing_state(sys, s, tol)) out.push_back(std::move(issue));
  }
  return out;
}

/// At least one solution, each re-verified from scratch, each audited.
inline std::vector<std::string> check_existence(const finclear::FinancialSystem& sys,
                                                const finclear::SolverConfig& cfg = {}) {
  std::vector<std::string> out;
  const auto set = finclear::find_solutions(sys, cfg);
  if (set.empty()) out.push_back("no solution found");
  for (const auto& s : set.solutions) {
    const auto v = finclear::verify_solution(sys, s.r, cfg.tolerance);
    if (!v.ok) out.push_back("reported solution fails verification, residual " + std::to_string(v.residual));
  }
  for (auto& issue : audit_set(sys, set, cfg.tolerance)) out.push_back(std::move(issue));
  return out;
}

struct ProjectionOutcome {
  std::size_t qualifying = 0;
  std::vector<std::string> failures;
};

/// Injection and reprioritization by one randomly chosen bank with outgoing
/// contracts. Every solution of the modified system in which that bank keeps
/// the required surplus must also solve the original system.
inline ProjectionOutcome check_projections(const finclear::FinancialSystem& sys, std::mt19937_64& rng,
                                           double tol = 1e-8) {
  using namespace finclear;
  ProjectionOutcome out;
  std::vector<std::size_t> debtors;
  for (std::size_t v = 0; v < sys.size(); ++v) {
    for (const auto& c : sys.contracts()) {
      if (c.debtor == sys.banks()[v].id) {
        debtors.push_back(v);
        break;
      }
    }
  }
  if (debtors.empty()) return out;
  const std::size_t v = debtors[std::uniform_int_distribution<std::size_t>(0, debtors.size() - 1)(rng)];
  const BankId& bank = sys.banks()[v].id;

  auto run = [&](const Action& action, double margin, bool strict) {
    const auto modified = apply_action(sys, action);
    const auto set = find_solutions(modified);
    for (const auto& s : set.solutions) {
      const double a = s.assets[v], l = s.ledger.total[v];
      const bool qualifies = strict ? a > l + margin + tol : a >= l + margin + tol;
      if (!qualifies) continue;
      ++out.qualifying;
      if (!project_solution(sys, modified, s.r, bank, tol)) {
        out.failures.push_back(describe(action) + ": solution with residual " +
                               std::to_string(residual(sys, s.r)) + " on the original system");
      }
    }
  };

  const double x = 0.25 * std::uniform_int_distribution<int>(1, 8)(rng);
  run(InjectOwnAssets{bank, x}, x, false);

  Reprioritize moves{bank, {}};
  std::uniform_int_distribution<int> level(1, sys.priority_levels());
  for (const auto& c : sys.contracts()) {
    if (c.debtor == bank) moves.assignments.push_back({c.creditor, c.reference, level(rng)});
  }
  run(moves, 0.0, true);
  return out;
}

/// Every solution the grid oracle finds lies within `radius` of a reported
/// solution, or carries the default pattern of a reported solution family.
inline std::vector<std::string> check_oracle(const finclear::FinancialSystem& sys, const finclear::SolutionSet& set,
                                             double radius) {
  std::vector<std::string> out;
  const auto oracle = grid_oracle(sys);
  for (const auto& o : oracle.solutions) {
    bool covered = false;
    for (const auto& s : set.solutions) {
      if (finclear::max_norm_distance(o, s.r.values()) <= radius) covered = true;
    }
    if (!covered && !set.family_patterns.empty()) {
      std::vector<finclear::BankId> pattern;
      for (std::size_t v = 0; v < o.size(); ++v) {
        if (o[v] < 1.0 - set.tolerance) pattern.push_back(sys.banks()[v].id);
      }
      for (const auto& f : set.family_patterns) {
        if (f == pattern) covered = true;
      }
    }
    if (!covered) {
      std::string where;
      for (double x : o) where += (where.empty() ? "" : ", ") + std::to_string(x);
      out.push_back("oracle solution (" + where + ") not reported");
    }
  }
  if (oracle.solutions.empty()) out.push_back("oracle found nothing");
  return out;
}

}  // namespace reftest
