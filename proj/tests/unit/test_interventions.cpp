#include <doctest.h>

#include "finclear/games.hpp"
#include "finclear/interventions.hpp"

using namespace finclear;

namespace {

FinancialSystem fig(const char* name, ScenarioParams p = {}) { return build_scenario(name, p).system; }

ScenarioParams gamma(double g) {
  ScenarioParams p;
  p.gamma0 = g;
  return p;
}

ScenarioParams delta(double d) {
  ScenarioParams p;
  p.delta = d;
  return p;
}

}  // namespace

TEST_CASE("removing a debt entirely") {
  const auto sys = fig("remove_debt");
  const auto after = apply_action(sys, RemoveIncomingDebt{"u", "v", 1.0});
  CHECK(after.contracts().size() == sys.contracts().size() - 1);
  const auto set = find_solutions(after);
  REQUIRE(set.size() == 1);
  CHECK(set.solutions[0].liability("u") == 1.0);
  CHECK(set.solutions[0].recovery("u") == 1.0);
  // Second removal of the deleted contract fails; the input is untouched.
  CHECK_THROWS_AS(apply_action(after, RemoveIncomingDebt{"u", "v", 1.0}), ActionError);
  CHECK(sys == fig("remove_debt"));
}

TEST_CASE("partial removal scales one notional and nothing else") {
  const auto sys = fig("remove_debt");
  const auto after = apply_action(sys, RemoveIncomingDebt{"u", "v", 0.25});
  REQUIRE(after.contracts().size() == sys.contracts().size());
  for (std::size_t k = 0; k < sys.contracts().size(); ++k) {
    const auto& a = sys.contracts()[k];
    const auto& b = after.contracts()[k];
    if (a.is_debt() && a.debtor == "u" && a.creditor == "v") {
      CHECK(b.notional == 0.75 * a.notional);
      Contract same = b;
      same.notional = a.notional;
      CHECK(same == a);
    } else {
      CHECK(a == b);
    }
  }
  CHECK(after.banks() == sys.banks());
}

TEST_CASE("action errors") {
  const auto sys = fig("remove_debt");
  CHECK_THROWS_AS(apply_action(sys, RemoveIncomingDebt{"w", "v", 1.0}), ActionError);  // no such debt
  CHECK_THROWS_AS(apply_action(sys, RemoveIncomingDebt{"x_writer", "v", 1.0}), ActionError);  // a CDS, not a debt
  CHECK_THROWS_AS(apply_action(sys, RemoveIncomingDebt{"u", "v", 1.5}), ActionError);
  CHECK_THROWS_AS(apply_action(sys, RemoveIncomingDebt{"u", "nobody", 1.0}), ActionError);
  CHECK_THROWS_AS(apply_action(sys, Donate{"v", "u", 0.0}), ActionError);
  CHECK_THROWS_AS(apply_action(sys, Donate{"v", "v", 1.0}), ActionError);
  CHECK_THROWS_AS(apply_action(sys, InjectOwnAssets{"v", -1.0}), ActionError);
  CHECK_THROWS_AS(apply_action(sys, Reprioritize{"u", {{"v", std::nullopt, 2}}}), ActionError);  // P = 1
  CHECK_THROWS_AS(apply_action(fig("reprioritize"), Reprioritize{"v", {{"w", std::nullopt, 1}}}), ActionError);
  // Wrong creditor: only v can remove the debt owed to v.
  CHECK_THROWS_AS(assess(sys, RemoveIncomingDebt{"u", "v", 1.0}, "w"), ActionError);
}

TEST_CASE("removing the last debt of a reference entity is reported by validation") {
  const auto sys = fig("remove_debt");
  const auto after = apply_action(sys, RemoveIncomingDebt{"w", "x_sink", 1.0});
  CHECK(validate_system(after).has("reference-entity-has-no-debt"));
  CHECK_THROWS_AS(find_solutions(after), ValidationError);
}

TEST_CASE("donation only raises the recipient's external assets") {
  const auto sys = fig("remove_debt");
  const auto after = apply_action(sys, Donate{"v", "u", 1.0});
  CHECK(after.bank("u").external_assets == 2.0);
  CHECK(after.bank("v").external_assets == sys.bank("v").external_assets);
  CHECK(after.contracts() == sys.contracts());
}

TEST_CASE("assess: removal and donation on figure 2") {
  const auto sys = fig("remove_debt");
  const auto removal = assess(sys, RemoveIncomingDebt{"u", "v", 1.0}, "v");
  REQUIRE(removal.payoffs_before.size() == 1);
  CHECK(removal.payoffs_before[0] == doctest::Approx(0.5));
  REQUIRE(removal.payoffs_after.size() == 1);
  CHECK(removal.payoffs_after[0] == doctest::Approx(2.0));
  CHECK(removal.cost == 0.0);

  const auto donation = assess(sys, Donate{"v", "u", 1.0}, "v");
  REQUIRE(donation.payoffs_after.size() == 1);
  CHECK(donation.payoffs_after[0] == doctest::Approx(3.0));
  CHECK(donation.cost == 1.0);
  CHECK(donation.min_payoff_delta == doctest::Approx(1.5));
  CHECK(donation.max_payoff_delta == doctest::Approx(1.5));
}

TEST_CASE("assess: injection removes the unfavourable solution of figure 4") {
  const auto report = assess(fig("inject"), InjectOwnAssets{"v", 1.0}, "v");
  REQUIRE(report.payoffs_before.size() == 2);
  CHECK(report.payoffs_before[0] == doctest::Approx(0.0));
  CHECK(report.payoffs_before[1] == doctest::Approx(99.0));
  REQUIRE(report.payoffs_after.size() == 1);
  CHECK(report.payoffs_after[0] == doctest::Approx(100.0));
  CHECK(report.after.multiplicity == Multiplicity::unique);
}

TEST_CASE("assess: reprioritization raises v's recovery rate in figure 5") {
  const auto sys = fig("reprioritize", delta(0.5));
  const auto action = Reprioritize{"v", {{"u", std::nullopt, 1}}};
  const auto after = apply_action(sys, action);
  for (std::size_t k = 0; k < sys.contracts().size(); ++k) {
    const auto& c = sys.contracts()[k];
    CHECK(after.contracts()[k].priority == ((c.debtor == "v" && c.creditor == "u") ? 1 : c.priority));
  }
  const auto report = assess(sys, action, "v");
  REQUIRE(report.recovery_before.size() == 1);
  REQUIRE(report.recovery_after.size() == 1);
  CHECK(report.recovery_before[0] == doctest::Approx(0.5));
  CHECK(report.recovery_after[0] == doctest::Approx(0.75));
}

TEST_CASE("partial-removal optimizer on figure 3") {
  for (double g0 : {0.25, 0.5, 1.0}) {
    CAPTURE(g0);
    const auto sys = fig("partial_removal", gamma(g0));
    const auto res = optimize_partial_removal(sys, "u", "v", 64);
    CHECK(res.curve.size() == 65);
    CHECK(std::abs(res.best_fraction - g0) <= 1.0 / 64 + 1e-12);
    CHECK(res.best_payoff == doctest::Approx(3.0 - g0).epsilon(1e-6));
  }
  // Beyond gamma0 the payoff is 3 - gamma.
  const auto sys = fig("partial_removal", gamma(0.25));
  const auto after = find_solutions(apply_action(sys, RemoveIncomingDebt{"u", "v", 0.35}));
  REQUIRE(after.size() == 1);
  CHECK(after.solutions[0].payoff("v") == doctest::Approx(3.0 - 0.35));
  CHECK(after.solutions[0].payoff("v") < 3.0 - 0.25);

  SolverConfig serial;
  serial.policy = ExecutionPolicy::serial;
  const auto a = optimize_partial_removal(sys, "u", "v", 16, serial);
  const auto b = optimize_partial_removal(sys, "u", "v", 16);
  CHECK(a.curve == b.curve);
  CHECK_THROWS_AS(optimize_partial_removal(sys, "w", "v", 16), ActionError);
}

TEST_CASE("partial-removal ties go to the smaller fraction") {
  // Removing any part of the debt of a solvent debtor only loses money; a
  // constant curve keeps fraction 0.
  const FinancialSystem flat({{"a", 5}, {"b", 0}, {"c", 0}}, {Contract::debt("a", "b", 1), Contract::debt("c", "b", 1)});
  const auto res = optimize_partial_removal(flat, "c", "b", 8, {}, PayoffObjective::expected);
  CHECK(res.best_fraction == 0.0);
}

TEST_CASE("project_solution on figures 4 and 5") {
  const auto sys4 = fig("inject");
  const auto injected = apply_action(sys4, InjectOwnAssets{"v", 1.0});
  const auto set = find_solutions(injected);
  REQUIRE(set.size() == 1);
  CHECK(set.solutions[0].payoff("v") == doctest::Approx(100.0));
  CHECK(project_solution(sys4, injected, set.solutions[0].r, "v", 1e-8));

  const auto sys5 = fig("reprioritize", delta(100));
  const auto moved = apply_action(sys5, Reprioritize{"v", {{"u", std::nullopt, 1}}});
  for (const auto& s : find_solutions(moved).solutions) {
    if (s.payoff("v") > 0) CHECK(project_solution(sys5, moved, s.r, "v", 1e-8));
  }

  CHECK_THROWS_AS(project_solution(sys4, fig("remove_debt"), set.solutions[0].r, "v", 1e-8), InputError);
  CHECK_THROWS_AS(project_solution(sys4, apply_action(sys4, InjectOwnAssets{"u", 1.0}), set.solutions[0].r, "v", 1e-8),
                  InputError);
}

TEST_CASE("describe and kinds") {
  CHECK(action_kind(Donate{"v", "u", 1}) == "donate");
  CHECK(actor(RemoveIncomingDebt{"u", "v", 1}) == BankId("v"));
  CHECK(describe(InjectOwnAssets{"v", 1}) == "v injects 1");
  CHECK(action_cost(InjectOwnAssets{"v", 2}) == 2.0);
  CHECK(action_cost(Reprioritize{"v", {}}) == 0.0);
}
