#include <doctest.h>

#include <random>

#include "finclear/clearing.hpp"
#include "finclear/games.hpp"
#include "random_systems.hpp"
#include "reference.hpp"

using namespace finclear;

namespace {

RecoveryVector rv(const FinancialSystem& sys, std::map<BankId, double> m) {
  for (const auto& id : sys.bank_ids()) m.try_emplace(id, 1.0);
  return RecoveryVector::from_map(sys, m);
}

void check_audit(const FinancialSystem& sys, const ClearingState& s) {
  const auto issues = audit_clearing_state(sys, s, 1e-9);
  INFO((issues.empty() ? std::string() : issues.front()));
  CHECK(issues.empty());
}

}  // namespace

TEST_CASE("figure 1 liabilities, payments and payoffs") {
  const auto sys = build_scenario("figure1").system;
  const auto r = rv(sys, {{"u", 0.5}});

  const auto ledger = liabilities(sys, r);
  CHECK(ledger.between(2, 1) == doctest::Approx(1.0));  // w -> v: 2 (1 - 1/2)
  CHECK(ledger.total[0] == 4.0);
  CHECK(ledger.cumulative(0, 1) == 4.0);

  const auto pay = payments(sys, r);
  CHECK(pay.between(0, 1) == doctest::Approx(1.0));
  CHECK(pay.between(0, 2) == doctest::Approx(1.0));
  CHECK(pay.outgoing(0) == doctest::Approx(2.0));

  const auto s = clearing_state(sys, r);
  CHECK(s.asset("v") == doctest::Approx(3.0));
  CHECK(s.payoff("v") == doctest::Approx(3.0));
  CHECK(s.payoff("u") == 0.0);
  CHECK(s.payoff("w") == doctest::Approx(0.0));
  CHECK(s.residual == doctest::Approx(0.0));
  CHECK(residual(sys, r) == 0.0);
  check_audit(sys, s);

  const auto f = update(sys, r);
  CHECK(f == r);
}

TEST_CASE("figure 1 update from all ones") {
  const auto sys = build_scenario("figure1").system;
  const auto ones = RecoveryVector::ones(3);
  const auto f = update(sys, ones);
  CHECK(f[0] == 0.5);  // a_u = 2, l_u = 4
  CHECK(f[1] == 1.0);
  CHECK(f[2] == 1.0);
  CHECK(residual(sys, ones) == 0.5);
}

TEST_CASE("priority variant of figure 1") {
  const auto sys = build_scenario("figure1_priority").system;
  const auto s = clearing_state(sys, rv(sys, {{"u", 0.5}}));
  CHECK(s.payment("u", "v") == 0.0);
  CHECK(s.payment("u", "w") == 2.0);
  CHECK(s.payoff("u") == 0.0);
  CHECK(s.payoff("w") == doctest::Approx(1.0));
  CHECK(s.payoff("v") == doctest::Approx(2.0));
  CHECK(s.residual == 0.0);
  CHECK(s.ledger.by_level[0] == std::vector<double>{2.0, 2.0});
  CHECK(s.ledger.cumulative(0, 1) == 2.0);
  CHECK(s.ledger.cumulative(0, 2) == 4.0);
  check_audit(sys, s);
}

TEST_CASE("all ones: no CDS liability, debts at notional") {
  const auto sys = build_scenario("prisoners").system;
  const auto s = clearing_state(sys, RecoveryVector::ones(sys.size()));
  for (std::size_t k = 0; k < sys.contracts().size(); ++k) {
    const auto& c = sys.contracts()[k];
    CHECK(s.ledger.per_contract[k] == (c.is_debt() ? c.notional : 0.0));
  }
}

TEST_CASE("figure 4 CDS liability into v at r_w = 0") {
  const auto sys = build_scenario("inject").system;
  const auto s = clearing_state(sys, rv(sys, {{"w", 0.0}}));
  CHECK(s.ledger.between(sys.index_of("x_writer"), sys.index_of("v")) == 100.0);
}

TEST_CASE("solvent banks pay every liability in full") {
  const auto sys = build_scenario("figure1_priority").system.with_external_assets("u", 10);
  const auto s = clearing_state(sys, RecoveryVector::ones(3));
  CHECK(s.payment("u", "v") == 2.0);
  CHECK(s.payment("u", "w") == 2.0);
  CHECK(s.update[0] == 1.0);
}

TEST_CASE("bank without incoming contracts holds its external assets; no liabilities means f = 1") {
  const auto sys = build_scenario("figure1").system;
  const auto s = clearing_state(sys, rv(sys, {{"u", 0.3}}));
  CHECK(s.asset("u") == 2.0);
  CHECK(s.liability("v") == 0.0);
  CHECK(s.update[1] == 1.0);
}

TEST_CASE("input errors") {
  const auto sys = build_scenario("figure1").system;
  CHECK_THROWS_AS(update(sys, RecoveryVector(std::vector<double>{1, 1})), InputError);
  CHECK_THROWS_AS(update(sys, RecoveryVector(std::vector<double>{1, 1, 2})), InputError);
  const FinancialSystem bad({{"u", 1}}, {Contract::debt("u", "u", 1)});
  CHECK_THROWS_AS(clearing_state(bad, RecoveryVector::ones(1)), ValidationError);
}

TEST_CASE("library evaluation agrees with the reference evaluation") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto sys = reftest::random_system(rng);
    REQUIRE(validate_system(sys).ok());
    const reftest::Reference ref(sys);
    std::vector<double> r(sys.size());
    for (auto& x : r) x = unit(rng) < 0.2 ? 1.0 : unit(rng);
    const auto s = clearing_state(sys, RecoveryVector(r));
    const auto e = ref.evaluate(r);
    for (std::size_t k = 0; k < sys.contracts().size(); ++k) {
      CHECK(s.ledger.per_contract[k] == doctest::Approx(e.liability[k]).epsilon(1e-12));
      CHECK(s.payments.per_contract[k] == doctest::Approx(e.payment[k]).epsilon(1e-12));
    }
    for (std::size_t v = 0; v < sys.size(); ++v) {
      CHECK(s.assets[v] == doctest::Approx(e.assets[v]).epsilon(1e-12));
      CHECK(s.update[v] == doctest::Approx(e.update[v]).epsilon(1e-12));
      CHECK(s.update[v] >= 0.0);
      CHECK(s.update[v] <= 1.0);
    }
    // Off a fixed point conservation holds up to the residual; the audit allows for it.
    check_audit(sys, s);
  }
}

TEST_CASE("liabilities are affine in the reference entity's recovery rate") {
  const auto sys = build_scenario("stag_hunt").system;
  const auto base = clearing_state(sys, RecoveryVector::ones(sys.size()));
  const double h = 0.25;
  for (std::size_t w = 0; w < sys.size(); ++w) {
    std::vector<double> r(sys.size(), 1.0);
    r[w] = 1.0 - h;
    const auto moved = clearing_state(sys, RecoveryVector(r));
    for (std::size_t k = 0; k < sys.contracts().size(); ++k) {
      const auto& c = sys.contracts()[k];
      const double slope = (moved.ledger.per_contract[k] - base.ledger.per_contract[k]) / -h;
      const bool refers = c.reference && sys.index_of(*c.reference) == w;
      CHECK(slope == doctest::Approx(refers ? -c.notional : 0.0));
    }
  }
}
