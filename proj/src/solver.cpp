#include "finclear/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace finclear {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform in [0,1) from the top 53 bits; identical on every platform.
double unit_interval(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

struct DampedOutcome {
  bool converged = false;
  std::size_t iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  const char* reason = "max-iterations";
};

// Residual over the free coordinates only; `ws` must hold a fresh evaluation.
double free_residual(const Network::Workspace& ws, std::span<const double> r,
                     std::span<const std::size_t> free) {
  double res = 0.0;
  for (std::size_t i : free) res = std::max(res, std::abs(ws.update[i] - r[i]));
  return res;
}

// Damped iteration moving only the `free` coordinates.
DampedOutcome damped_iteration(const Network& net, std::vector<double>& r,
                               std::span<const std::size_t> free, double damping,
                               std::size_t max_iterations, std::size_t stall_window,
                               double tolerance, Network::Workspace& ws,
                               std::vector<double>* trace = nullptr) {
  DampedOutcome out;
  double checkpoint_best = std::numeric_limits<double>::infinity();
  double best = checkpoint_best;
  std::size_t next_sample = 1;
  for (std::size_t it = 0;; ++it) {
    net.evaluate(r, ws);
    const double res = free_residual(ws, r, free);
    out.iterations = it;
    out.residual = res;
    if (trace && (it + 1 == next_sample)) {
      trace->push_back(res);
      next_sample *= 2;
    }
    if (res <= tolerance) {
      out.converged = true;
      out.reason = "converged";
      break;
    }
    if (it >= max_iterations) break;
    best = std::min(best, res);
    if (stall_window > 0 && it > 0 && it % stall_window == 0) {
      if (!(best < 0.99 * checkpoint_best)) {
        out.reason = "stalled";
        break;
      }
      checkpoint_best = best;
    }
    for (std::size_t i : free) r[i] = (1.0 - damping) * r[i] + damping * ws.update[i];
  }
  if (trace && (trace->empty() || trace->back() != out.residual)) trace->push_back(out.residual);
  return out;
}

// Newton's method on r_F - f_F(r) = 0 over the free coordinates, with a
// forward-difference Jacobian, least-squares steps and backtracking.
void newton_polish(const Network& net, std::vector<double>& r, std::span<const std::size_t> free,
                   Network::Workspace& ws) {
  const std::size_t m = free.size();
  if (m == 0) return;
  Eigen::VectorXd h(m), h_trial(m);
  Eigen::MatrixXd jac(m, m);
  std::vector<double> trial(r.size());

  auto eval_h = [&](const std::vector<double>& x, Eigen::VectorXd& out) {
    net.evaluate(x, ws);
    for (std::size_t i = 0; i < m; ++i) out[i] = x[free[i]] - ws.update[free[i]];
    return out.lpNorm<Eigen::Infinity>();
  };

  double norm = eval_h(r, h);
  for (int iter = 0; iter < 40 && norm > 1e-15; ++iter) {
    for (std::size_t j = 0; j < m; ++j) {
      trial = r;
      const double step = (r[free[j]] + 1e-7 <= 1.0) ? 1e-7 : -1e-7;
      trial[free[j]] += step;
      eval_h(trial, h_trial);
      jac.col(j) = (h_trial - h) / step;
    }
    const Eigen::VectorXd delta = jac.colPivHouseholderQr().solve(-h);
    if (!delta.allFinite()) break;

    bool accepted = false;
    for (double t = 1.0; t >= 1.0 / 1024.0; t *= 0.5) {
      trial = r;
      for (std::size_t i = 0; i < m; ++i) {
        trial[free[i]] = std::clamp(r[free[i]] + t * delta[i], 0.0, 1.0);
      }
      const double trial_norm = eval_h(trial, h_trial);
      if (trial_norm < norm) {
        r = trial;
        h = h_trial;
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
}

std::vector<std::size_t> defaulted_coordinates(std::span<const double> r) {
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < 1.0 - 1e-12) free.push_back(i);
  }
  return free;
}

// Polishes a verified candidate on its own default pattern; keeps the better.
void polish_candidate(const Network& net, std::vector<double>& r, Network::Workspace& ws) {
  std::vector<double> polished = r;
  // Iterates from the interior approach r_v = 1 only asymptotically; put
  // banks whose update is exactly 1 on the boundary first.
  for (int pass = 0; pass < 3; ++pass) {
    net.evaluate(polished, ws);
    bool moved = false;
    for (std::size_t i = 0; i < polished.size(); ++i) {
      if (ws.update[i] == 1.0 && polished[i] != 1.0) {
        polished[i] = 1.0;
        moved = true;
      }
    }
    if (!moved) break;
  }
  const auto free = defaulted_coordinates(polished);
  newton_polish(net, polished, free, ws);
  const double before = net.residual(r, ws);
  const double after = net.residual(polished, ws);
  if (after <= before) r = std::move(polished);
}

bool pattern_consistent(const Network& net, const Network::Workspace& ws,
                        const std::vector<char>& in_default, double tolerance) {
  for (std::size_t v = 0; v < net.bank_count(); ++v) {
    const double a = ws.assets[v];
    const double l = ws.total[v];
    const double tie = tolerance * std::max(1.0, l);
    if (in_default[v]) {
      if (a > l + tie) return false;
    } else if (a < l - tie) {
      return false;
    }
  }
  return true;
}

std::vector<std::vector<double>> solve_subproblem(const Network& net,
                                                  const std::vector<char>& in_default,
                                                  const SolverConfig& cfg, std::uint64_t seed,
                                                  Network::Workspace& ws) {
  const std::size_t n = net.bank_count();
  std::vector<std::size_t> free;
  for (std::size_t v = 0; v < n; ++v) {
    if (in_default[v]) free.push_back(v);
  }

  std::vector<std::vector<double>> starts;
  for (double value : {0.0, 0.5, 1.0}) {
    std::vector<double> s(n, 1.0);
    for (std::size_t i : free) s[i] = value;
    starts.push_back(std::move(s));
  }
  std::uint64_t state = seed;
  for (std::size_t k = 0; k < cfg.subproblem_random_starts; ++k) {
    std::vector<double> s(n, 1.0);
    for (std::size_t i : free) s[i] = unit_interval(state);
    starts.push_back(std::move(s));
  }

  std::vector<std::vector<double>> accepted;
  for (auto& r : starts) {
    damped_iteration(net, r, free, cfg.damping, cfg.subproblem_max_iterations, cfg.stall_window / 4,
                     cfg.tolerance, ws);
    newton_polish(net, r, free, ws);
    if (net.residual(r, ws) > cfg.tolerance) continue;
    if (!pattern_consistent(net, ws, in_default, cfg.tolerance)) continue;
    accepted.push_back(std::move(r));
  }
  return accepted;
}

std::vector<char> pattern_of(std::span<const double> r, double tolerance) {
  std::vector<char> p(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) p[i] = r[i] < 1.0 - tolerance;
  return p;
}

SolutionSet assemble(const Network& net, std::vector<std::vector<double>> candidates,
                     const SolverConfig& cfg) {
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return lexicographic_less(a, b); });
  std::vector<std::vector<double>> kept;
  for (auto& c : candidates) {
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const auto& k) {
      return max_norm_distance(k, c) < cfg.cluster_radius;
    });
    if (!duplicate) kept.push_back(std::move(c));
  }

  std::map<std::vector<char>, std::vector<std::size_t>> by_pattern;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    by_pattern[pattern_of(kept[i], cfg.tolerance)].push_back(i);
  }

  SolutionSet set;
  set.tolerance = cfg.tolerance;
  std::vector<char> drop(kept.size(), 0);
  for (const auto& [pattern, members] : by_pattern) {
    if (members.size() <= cfg.family_threshold) continue;
    std::vector<BankId> ids;
    for (std::size_t v = 0; v < pattern.size(); ++v) {
      if (pattern[v]) ids.push_back(net.bank_ids()[v]);
    }
    set.family_patterns.push_back(std::move(ids));
    // Evenly spaced representatives in canonical order, ends included.
    const std::size_t cap = std::max<std::size_t>(cfg.family_sample_cap, 2);
    std::vector<char> keep(members.size(), 0);
    for (std::size_t s = 0; s < cap; ++s) {
      keep[(s * (members.size() - 1) + (cap - 1) / 2) / (cap - 1)] = 1;
    }
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (!keep[j]) drop[members[j]] = 1;
    }
  }

  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (!drop[i]) set.solutions.push_back(net.state(kept[i]));
  }
  if (!set.family_patterns.empty()) {
    set.multiplicity = Multiplicity::family_suspected;
  } else if (set.solutions.size() == 1) {
    set.multiplicity = Multiplicity::unique;
  } else if (set.solutions.size() > 1) {
    set.multiplicity = Multiplicity::multiple;
  }
  return set;
}

bool run_parallel(const SolverConfig& cfg) { return cfg.policy == ExecutionPolicy::parallel; }

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw InputError("solver tolerance must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw InputError("damping must lie in (0, 1]");
  if (max_iterations == 0) throw InputError("max_iterations must be positive");
  if (!(cluster_radius > 0.0)) throw InputError("cluster_radius must be positive");
  if (max_enumeration_banks == 0) throw InputError("max_enumeration_banks must be positive");
  if (subproblem_max_iterations == 0) throw InputError("subproblem budget must be positive");
  if (family_sample_cap == 0) throw InputError("family_sample_cap must be positive");
}

std::string to_string(Multiplicity m) {
  switch (m) {
    case Multiplicity::none: return "none";
    case Multiplicity::unique: return "unique";
    case Multiplicity::multiple: return "multiple";
    case Multiplicity::family_suspected: return "family_suspected";
  }
  return "unknown";
}

IterationResult iterate(const FinancialSystem& sys, const RecoveryVector& r0,
                        const SolverConfig& cfg) {
  cfg.validate();
  Network net(sys);
  if (r0.size() != net.bank_count()) {
    throw InputError("start vector does not match the number of banks");
  }
  std::vector<double> r(r0.values().begin(), r0.values().end());
  for (double x : r) {
    if (!(x >= 0.0 && x <= 1.0)) throw InputError("start vector outside [0,1]");
  }
  std::vector<std::size_t> all(net.bank_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  auto ws = net.make_workspace();
  IterationResult result;
  const auto outcome = damped_iteration(net, r, all, cfg.damping, cfg.max_iterations,
                                        cfg.stall_window, cfg.tolerance, ws,
                                        &result.residual_trace);
  result.iterations = outcome.iterations;
  result.residual = outcome.residual;
  result.reason = outcome.reason;
  result.converged = outcome.converged;
  result.last = RecoveryVector(r);
  if (outcome.converged) result.state = net.state(r);
  return result;
}

std::optional<ClearingState> solve_with_default_set(const FinancialSystem& sys,
                                                    const DefaultSet& d,
                                                    const SolverConfig& cfg) {
  cfg.validate();
  Network net(sys);
  std::vector<char> in_default(net.bank_count(), 0);
  for (const auto& id : d.members) in_default[sys.index_of(id)] = 1;

  std::uint64_t seed = cfg.seed;
  for (std::size_t v = 0; v < in_default.size(); ++v) {
    if (in_default[v]) seed ^= splitmix64(seed) + v;
  }
  auto ws = net.make_workspace();
  auto accepted = solve_subproblem(net, in_default, cfg, seed, ws);
  if (accepted.empty()) return std::nullopt;
  auto best = std::min_element(accepted.begin(), accepted.end(),
                               [](const auto& a, const auto& b) { return lexicographic_less(a, b); });
  return net.state(*best);
}

SolutionSet find_solutions(const FinancialSystem& sys, const SolverConfig& cfg) {
  cfg.validate();
  Network net(sys);
  const std::size_t n = net.bank_count();
  const bool enumerate = !cfg.multistart_only;
  if (enumerate && n > cfg.max_enumeration_banks) {
    throw CapabilityError("system has " + std::to_string(n) +
                          " banks; default-set enumeration is limited to " +
                          std::to_string(cfg.max_enumeration_banks) +
                          " (use multistart-only mode)");
  }

  // Multistart: corners of the cube, then seeded interior points.
  std::vector<std::vector<double>> starts;
  if (n <= cfg.corner_bank_limit) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = (mask >> i) & 1U ? 0.0 : 1.0;
      starts.push_back(std::move(s));
    }
  }
  std::uint64_t state = cfg.seed;
  for (std::size_t k = 0; k < cfg.random_starts; ++k) {
    std::vector<double> s(n);
    for (auto& x : s) x = unit_interval(state);
    starts.push_back(std::move(s));
  }

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  std::vector<std::vector<std::vector<double>>> found(starts.size());
  const long start_count = static_cast<long>(starts.size());
#pragma omp parallel if (run_parallel(cfg))
  {
    auto ws = net.make_workspace();
#pragma omp for schedule(dynamic)
    for (long k = 0; k < start_count; ++k) {
      std::vector<double> r = starts[k];
      const auto out = damped_iteration(net, r, all, cfg.damping, cfg.max_iterations,
                                        cfg.stall_window, cfg.tolerance, ws);
      if (!out.converged) continue;
      polish_candidate(net, r, ws);
      found[k].push_back(std::move(r));
    }
  }

  // Default-set enumeration over banks that can default at all.
  std::vector<std::vector<std::vector<double>>> enumerated;
  if (enumerate) {
    std::vector<std::size_t> defaultable;
    for (std::size_t v = 0; v < n; ++v) {
      if (!net.never_defaults(v)) defaultable.push_back(v);
    }
    const long subsets = 1L << defaultable.size();
    enumerated.resize(static_cast<std::size_t>(subsets));
#pragma omp parallel if (run_parallel(cfg))
    {
      auto ws = net.make_workspace();
#pragma omp for schedule(dynamic)
      for (long mask = 0; mask < subsets; ++mask) {
        std::vector<char> in_default(n, 0);
        for (std::size_t j = 0; j < defaultable.size(); ++j) {
          if ((mask >> j) & 1L) in_default[defaultable[j]] = 1;
        }
        std::uint64_t seed = cfg.seed ^ (static_cast<std::uint64_t>(mask) * 0xD1B54A32D192ED03ULL);
        enumerated[mask] = solve_subproblem(net, in_default, cfg, seed, ws);
      }
    }
  }

  std::vector<std::vector<double>> candidates;
  for (auto* group : {&found, &enumerated}) {
    for (auto& list : *group) {
      for (auto& r : list) candidates.push_back(std::move(r));
    }
  }
  return assemble(net, std::move(candidates), cfg);
}

Verification verify_solution(const FinancialSystem& sys, const RecoveryVector& r,
                             double tolerance) {
  const double res = residual(sys, r);
  return Verification{res <= tolerance, res};
}

std::vector<double> payoffs_of(const SolutionSet& set, const BankId& bank) {
  std::vector<double> out;
  for (const auto& s : set.solutions) out.push_back(s.payoff(bank));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> recoveries_of(const SolutionSet& set, const BankId& bank) {
  std::vector<double> out;
  for (const auto& s : set.solutions) out.push_back(s.recovery(bank));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace finclear
