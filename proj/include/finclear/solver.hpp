#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finclear/clearing.hpp"
#include "finclear/model.hpp"

namespace finclear {

enum class ExecutionPolicy { serial, parallel };

/// Knobs of the clearing solver. All tolerances are max-norm.
struct SolverConfig {
  double tolerance = 1e-9;         // residual acceptance
  double damping = 0.5;            // r <- (1 - damping) r + damping f(r)
  std::size_t max_iterations = 100000;
  std::size_t stall_window = 2000;  // give up when the best residual stops improving

  std::size_t corner_bank_limit = 12;  // all corners of {0,1}^V are started up to this size
  std::size_t random_starts = 256;
  std::uint64_t seed = 0x5EEDC1EA;  // documented default seed for random starts

  double cluster_radius = 1e-6;
  std::size_t max_enumeration_banks = 20;
  bool multistart_only = false;  // skip default-set enumeration (no bank cap)

  std::size_t subproblem_random_starts = 2;
  std::size_t subproblem_max_iterations = 3000;

  std::size_t family_threshold = 8;     // more distinct solutions than this in one pattern
  std::size_t family_sample_cap = 16;   // samples kept per suspected family

  ExecutionPolicy policy = ExecutionPolicy::parallel;

  /// Throws InputError when a field is out of range.
  void validate() const;
};

/// Banks hypothesized to be in default.
struct DefaultSet {
  std::vector<BankId> members;
};

/// `none` only describes an empty set; existence makes it a solver failure.
enum class Multiplicity { none, unique, multiple, family_suspected };

std::string to_string(Multiplicity m);

/// Verified solutions in canonical (lexicographic) order.
struct SolutionSet {
  std::vector<ClearingState> solutions;
  Multiplicity multiplicity = Multiplicity::none;
  /// Default patterns flagged as solution families.
  std::vector<std::vector<BankId>> family_patterns;
  double tolerance = 0.0;

  bool empty() const { return solutions.empty(); }
  std::size_t size() const { return solutions.size(); }
};

struct IterationResult {
  bool converged = false;
  std::optional<ClearingState> state;  // set iff converged
  RecoveryVector last;                 // final iterate
  std::size_t iterations = 0;
  double residual = 0.0;
  std::string reason;                   // "converged", "max-iterations" or "stalled"
  std::vector<double> residual_trace;   // sampled residuals, for reporting
};

struct Verification {
  bool ok = false;
  double residual = 0.0;
};

/// Damped fixed-point iteration from `r0`. Non-convergence is reported in the
/// result, not thrown.
IterationResult iterate(const FinancialSystem& sys, const RecoveryVector& r0,
                        const SolverConfig& cfg = {});

/// Solves with r_v = 1 pinned outside `d`, accepting a solution only when
/// its default pattern agrees with `d` (ties within tolerance go either way).
std::optional<ClearingState> solve_with_default_set(const FinancialSystem& sys,
                                                    const DefaultSet& d,
                                                    const SolverConfig& cfg = {});

/// Union of multistart iteration and default-set enumeration, clustered and
/// canonically ordered. Throws CapabilityError when the system is larger
/// than cfg.max_enumeration_banks and cfg.multistart_only is false.
SolutionSet find_solutions(const FinancialSystem& sys, const SolverConfig& cfg = {});

Verification verify_solution(const FinancialSystem& sys, const RecoveryVector& r,
                             double tolerance);

/// Values of one bank across a solution set, sorted ascending.
std::vector<double> payoffs_of(const SolutionSet& set, const BankId& bank);
std::vector<double> recoveries_of(const SolutionSet& set, const BankId& bank);

}  // namespace finclear
