// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Figure systems are loaded from the bundled scenario files.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "finclear/document.hpp"
#include "finclear/games.hpp"
#include "finclear/interventions.hpp"
#include "properties.hpp"
#include "random_systems.hpp"

using namespace finclear;

namespace {

constexpr double kTol = 1e-9;

// Every clearing state the run produces goes through the audit.
std::vector<std::string> g_audit;
std::size_t g_audited = 0;

SolutionSet solve(const FinancialSystem& sys) {
  auto set = find_solutions(sys);
  g_audited += set.size();
  for (auto& issue : reftest::audit_set(sys, set)) g_audit.push_back(std::move(issue));
  return set;
}

PayoffMatrix matrix(const GameScenario& s) {
  auto m = payoff_matrix(s);
  for (const auto& cell : m.cells) {
    const auto sys = apply_profile(s, cell.profile);
    g_audited += cell.solutions.size();
    for (auto& issue : reftest::audit_set(sys, cell.solutions)) g_audit.push_back(std::move(issue));
  }
  return m;
}

LoadedDocument load(const std::string& name) {
  return load_document_file(std::string(FINCLEAR_SCENARIO_DIR) + "/" + name + ".json");
}

bool near(double a, double b, double tol = kTol) { return std::abs(a - b) <= tol; }

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

std::string list(std::span<const double> xs) {
  std::string out = "{";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + fmt(xs[i]);
  return out + "}";
}

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

Check figure1() {
  Check c;
  const auto sys = load("figure1").system;
  const auto set = solve(sys);
  c.require(set.multiplicity == Multiplicity::unique && set.size() == 1, "expected a unique solution");
  if (!c.ok) return c;
  const auto& s = set.solutions[0];
  c.require(near(s.recovery("u"), 0.5) && near(s.recovery("v"), 1) && near(s.recovery("w"), 1),
            "r = " + list(s.r.values()));
  c.require(near(s.payoff("u"), 0) && near(s.payoff("v"), 3) && near(s.payoff("w"), 0), "payoffs " + list(s.payoffs));
  return c;
}

Check figure1_priority() {
  Check c;
  const auto sys = load("figure1_priority").system;
  const auto set = solve(sys);
  c.require(set.size() == 1, "expected one solution");
  if (!c.ok) return c;
  const auto& s = set.solutions[0];
  c.require(near(s.payment("u", "v"), 0) && near(s.payment("u", "w"), 2),
            "p_uv = " + fmt(s.payment("u", "v")) + ", p_uw = " + fmt(s.payment("u", "w")));
  c.require(near(s.payoff("u"), 0) && near(s.payoff("v"), 2) && near(s.payoff("w"), 1), "payoffs " + list(s.payoffs));
  return c;
}

Check figure2() {
  Check c;
  const auto sys = load("remove_debt").system;
  const auto before = solve(sys);
  c.require(before.size() == 1 && near(before.solutions[0].payoff("v"), 0.5), "q_v before");
  const auto removed = solve(apply_action(sys, RemoveIncomingDebt{"u", "v", 1.0}));
  c.require(removed.size() == 1 && near(removed.solutions[0].payoff("v"), 2.0), "q_v after removal");
  const auto donated = solve(apply_action(sys, Donate{"v", "u", 1.0}));
  c.require(donated.size() == 1 && near(donated.solutions[0].payoff("v"), 3.0), "q_v after donation");
  return c;
}

Check figure3() {
  Check c;
  for (const char* g : {"0.25", "0.5", "0.75", "1.0"}) {
    const double g0 = std::stod(g);
    const auto sys = load(std::string("partial_removal_g") + g).system;
    const auto res = optimize_partial_removal(sys, "u", "v", 64);
    c.require(std::abs(res.best_fraction - g0) <= 1.0 / 64 + 1e-12,
              "gamma0 " + fmt(g0) + ": best fraction " + fmt(res.best_fraction));
    c.require(near(res.best_payoff, 3 - g0, 1e-6), "gamma0 " + fmt(g0) + ": peak " + fmt(res.best_payoff));
    // The optimum itself, solved and audited.
    solve(apply_action(sys, RemoveIncomingDebt{"u", "v", res.best_fraction}));
  }
  return c;
}

Check figure4() {
  Check c;
  const auto sys = load("inject").system;
  const auto before = solve(sys);
  const auto q = payoffs_of(before, "v");
  c.require(q.size() == 2 && near(q[0], 0) && near(q[1], 99), "v-payoffs before " + list(q));
  const auto after = solve(apply_action(sys, InjectOwnAssets{"v", 1.0}));
  const auto q2 = payoffs_of(after, "v");
  c.require(q2.size() == 1 && near(q2[0], 100), "v-payoffs after " + list(q2));
  return c;
}

Check figure5() {
  Check c;
  const Reprioritize move{"v", {{"u", std::nullopt, 1}}};
  {
    const auto sys = load("reprioritize_d0.5").system;
    const auto before = solve(sys);
    c.require(before.size() == 1 && near(before.solutions[0].recovery("v"), 0.5), "delta 1/2: r_v before");
    const auto after = solve(apply_action(sys, move));
    c.require(after.size() == 1 && near(after.solutions[0].recovery("v"), 0.75), "delta 1/2: r_v after");
  }
  {
    const auto sys = load("reprioritize_d100").system;
    const auto before = payoffs_of(solve(sys), "v");
    const auto after = payoffs_of(solve(apply_action(sys, move)), "v");
    const bool ok_before = before.size() == 2 && near(before[0], 0) && near(before[1], 98);
    const bool ok_after = after.size() == 1 && near(after[0], 98);
    c.require(ok_before && ok_after, "delta 100: expected v-payoffs {0, 98} -> {98}, got " + list(before) + " -> " +
                                         list(after));
  }
  return c;
}

ScenarioParams from_file(const std::string& name, GameScenario* out) {
  const auto doc = load(name);
  *out = *doc.scenario;
  return doc.scenario->params;
}

Check prisoners() {
  Check c;
  GameScenario s;
  from_file("prisoners", &s);
  const auto m = matrix(s);
  const double want[4][2] = {{3, 3}, {1.5, 4}, {4, 1.5}, {8.0 / 3, 8.0 / 3}};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& cell = m.cells[i];
    c.require(near(cell.payoffs[0], want[i][0]) && near(cell.payoffs[1], want[i][1]),
              m.profile_label(cell.profile) + " = " + list(cell.payoffs));
  }
  c.require(find_pure_nash(m) == std::vector<std::vector<std::size_t>>{{1, 1}}, "Nash set is not {DD}");
  c.require(find_dominant(m, 0) == std::optional<std::size_t>(1) && find_dominant(m, 1) == std::optional<std::size_t>(1),
            "defect not dominant");
  return c;
}

std::vector<std::vector<std::size_t>> one_cooperator(std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::size_t> p(k, 1);
    p[i] = 0;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Check coordination() {
  Check c;
  GameScenario s;
  from_file("stag_hunt", &s);
  c.require(find_pure_nash(matrix(s)) == std::vector<std::vector<std::size_t>>{{0, 0}, {1, 1}},
            "stag hunt Nash set is not {CC, DD}");
  from_file("chicken", &s);
  c.require(find_pure_nash(matrix(s)) == std::vector<std::vector<std::size_t>>{{0, 1}, {1, 0}},
            "chicken Nash set is not {CD, DC}");
  for (std::size_t k : {2, 3, 4}) {
    from_file("volunteer_k" + std::to_string(k), &s);
    auto nash = find_pure_nash(matrix(s));
    std::sort(nash.begin(), nash.end());
    c.require(nash == one_cooperator(k), "volunteer k=" + std::to_string(k) + ": Nash set differs");
  }
  return c;
}

Check auction() {
  Check c;
  GameScenario s;
  const auto params = from_file("dollar_auction_e0.01", &s);
  const double eps = *params.epsilon, delta = 6 * eps;
  auto state = make_auction(eps);
  c.require(near(state.delta, delta), "delta " + fmt(state.delta));
  c.require(state.system == s.system, "auction start differs from the bundled file");
  const auto run = auction_run(state, 10);
  c.require(run.history.size() == 10, "history has " + std::to_string(run.history.size()) + " moves");
  for (std::size_t i = 0; i < run.history.size(); ++i) {
    const auto& m = run.history[i];
    c.require(!m.passed && m.player == (i % 2 == 0 ? kAuctionU : kAuctionV), "round " + std::to_string(i + 1));
    c.require(m.payoff_after >= 3 * eps - kTol && m.payoff_after <= 6 * eps + kTol,
              "round " + std::to_string(i + 1) + " mover payoff " + fmt(m.payoff_after));
  }
  c.require(run.spent(kAuctionU) > delta && run.spent(kAuctionV) > delta,
            "spent " + fmt(run.spent(kAuctionU)) + ", " + fmt(run.spent(kAuctionV)));
  // The closed-form case analysis agrees with the solver after every round.
  auto replay = state;
  for (std::size_t i = 0; i <= run.history.size(); ++i) {
    if (i > 0) replay = auction_step(replay, run.history[i - 1].player);
    const auto summary = auction_solutions(replay);
    const auto set = solve(replay.system);
    if (summary.kind == AuctionCase::family) {
      c.require(set.multiplicity == Multiplicity::family_suspected, "round " + std::to_string(i) + ": no family");
    } else {
      c.require(set.size() == 1 && near(set.solutions[0].recovery("u"), summary.r_u) &&
                    near(set.solutions[0].recovery("v"), summary.r_v),
                "round " + std::to_string(i) + ": classifier " + to_string(summary.kind) + " disagrees");
    }
  }
  return c;
}

Check existence() {
  Check c;
  std::mt19937_64 rng(0xE415);
  for (int trial = 0; trial < 500; ++trial) {
    const auto sys = reftest::random_system(rng);
    const auto failures = reftest::check_existence(sys);
    g_audited += 1;
    c.require(failures.empty(), "system " + std::to_string(trial) + ": " + (failures.empty() ? "" : failures[0]));
  }
  return c;
}

Check projections() {
  Check c;
  std::mt19937_64 rng(0x9E07);
  std::size_t qualifying = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto sys = reftest::random_system(rng);
    const auto outcome = reftest::check_projections(sys, rng);
    qualifying += outcome.qualifying;
    c.require(outcome.failures.empty(),
              "system " + std::to_string(trial) + ": " + (outcome.failures.empty() ? "" : outcome.failures[0]));
  }
  c.require(qualifying > 0, "no qualifying solutions");
  if (c.ok) c.detail = std::to_string(qualifying) + " qualifying solutions";
  return c;
}

const std::vector<std::string> kFigureFiles = {
    "figure1",           "figure1_priority",  "remove_debt",      "partial_removal_g0.25", "partial_removal_g0.5",
    "partial_removal_g0.75", "partial_removal_g1.0", "inject",   "reprioritize_d0.5",     "reprioritize_d100",
    "prisoners",         "stag_hunt",         "chicken",          "volunteer_k2",          "volunteer_k3",
    "volunteer_k4",      "dollar_auction_e0.01"};

Check oracle() {
  Check c;
  const double radius = SolverConfig{}.cluster_radius;
  for (const auto& name : kFigureFiles) {
    const auto sys = load(name).system;
    const auto failures = reftest::check_oracle(sys, solve(sys), radius);
    c.require(failures.empty(), name + ": " + (failures.empty() ? "" : failures[0]));
  }
  return c;
}

Check conservation() {
  Check c;
  c.require(g_audit.empty(), std::to_string(g_audit.size()) + " violations, first: " +
                                 (g_audit.empty() ? "" : g_audit[0]));
  if (c.ok) c.detail = std::to_string(g_audited) + " solution sets and states audited";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"figure 1 golden", figure1},
      {"figure 1 priority variant", figure1_priority},
      {"figure 2 removal and donation witnesses", figure2},
      {"figure 3 partial-removal optimum", figure3},
      {"figure 4 injection", figure4},
      {"figure 5 reprioritization", figure5},
      {"prisoner's dilemma", prisoners},
      {"stag hunt, chicken, volunteer's dilemma", coordination},
      {"dollar auction", auction},
      {"existence on 500 random systems", existence},
      {"injection and reprioritization projections on 200 random systems", projections},
      {"oracle equivalence on bundled systems", oracle},
      // Last, so that it covers every state produced above.
      {"conservation and priority audit", conservation},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check result;
    try {
      result = run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!result.ok) ++failed;
    std::printf("%s  %s (%.1fs)%s%s\n", result.ok ? "PASS" : "FAIL", name.c_str(), secs,
                result.detail.empty() ? "" : ": ", result.detail.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
