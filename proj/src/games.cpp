#include "finclear/games.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <sstream>

namespace finclear {

namespace {

constexpr int kMaxVolunteers = 8;

Contract debt(const char* d, const char* c, double w, int p = 1) { return Contract::debt(d, c, w, p); }
Contract cds(const char* d, const char* c, const char* ref, double w, int p = 1) {
  return Contract::cds(d, c, ref, w, p);
}

std::vector<Strategy> unilateral(std::string label, Action action) {
  return {Strategy{std::move(label), std::move(action)}, Strategy{"none", std::nullopt}};
}

std::vector<Strategy> cooperate_or_defect(Action cooperate) {
  return {Strategy{"cooperate", std::move(cooperate)}, Strategy{"defect", std::nullopt}};
}

double require_param(const std::optional<double>& value, double fallback, const char* name) {
  const double x = value.value_or(fallback);
  if (!std::isfinite(x)) throw InputError(std::string(name) + " must be finite");
  return x;
}

GameScenario figure1(bool prioritized) {
  GameScenario s;
  s.name = prioritized ? "figure1_priority" : "figure1";
  const int low = prioritized ? 2 : 1;
  s.system = FinancialSystem({{"u", 2}, {"v", 1}, {"w", 0}},
                             {debt("u", "v", 2, low), debt("u", "w", 2, 1), cds("w", "v", "u", 2, low)},
                             prioritized ? 2 : 1);
  return s;
}

// Removing u -> v (or donating to u) moves u out of default, which defaults w
// and triggers the CDS paying v.
GameScenario figure2() {
  GameScenario s;
  s.name = "remove_debt";
  s.system = FinancialSystem({{"u", 1}, {"v", 0}, {"w", 0}, {"x_sink", 0}, {"x_writer", 4}},
                             {debt("u", "v", 1), debt("u", "x_sink", 1), debt("w", "x_sink", 1),
                              cds("x_writer", "w", "u", 2), cds("x_writer", "v", "w", 2)});
  s.players = {"v"};
  s.strategies = {{Strategy{"remove", RemoveIncomingDebt{"u", "v", 1.0}},
                   Strategy{"donate", Donate{"v", "u", 1.0}}, Strategy{"none", std::nullopt}}};
  return s;
}

GameScenario figure3(double gamma0) {
  if (!(gamma0 > 0.0 && gamma0 <= 1.0)) {
    throw InputError("gamma0 must lie in (0,1]; the CDS weight 2/gamma0 is unbounded at 0");
  }
  GameScenario s;
  s.name = "partial_removal";
  s.params.gamma0 = gamma0;
  const double weight = 2.0 / gamma0;
  s.system = FinancialSystem(
      {{"u", 2.0 - gamma0}, {"v", 0}, {"w", 0}, {"x_sink", 0}, {"x_writer", weight + 2.0}},
      {debt("u", "v", 1), debt("u", "x_sink", 1), debt("w", "x_sink", 1),
       cds("x_writer", "w", "u", weight), cds("x_writer", "v", "w", 2)});
  s.players = {"v"};
  s.strategies = {unilateral("remove", RemoveIncomingDebt{"u", "v", gamma0})};
  return s;
}

GameScenario figure4() {
  GameScenario s;
  s.name = "inject";
  s.system = FinancialSystem({{"u", 0}, {"v", 0}, {"w", 0}, {"x_sink", 0}, {"x_writer", 101}},
                             {debt("v", "u", 1), debt("u", "x_sink", 1), debt("w", "x_sink", 1),
                              cds("x_writer", "w", "u", 1), cds("x_writer", "v", "w", 100)});
  s.players = {"v"};
  s.strategies = {unilateral("inject", InjectOwnAssets{"v", 1.0})};
  return s;
}

GameScenario figure5(double delta) {
  if (!(delta > 0.0)) throw InputError("delta must be positive");
  GameScenario s;
  s.name = "reprioritize";
  s.params.delta = delta;
  s.system = FinancialSystem(
      {{"u", 0}, {"v", 1}, {"w", 0}, {"x_sink", 0}, {"x_writer", 2.0 + delta}},
      {debt("v", "u", 1, 2), debt("v", "x_sink", 1, 2), debt("u", "x_sink", 1, 2),
       debt("w", "x_sink", 1, 2), cds("x_writer", "w", "u", 2, 2), cds("x_writer", "v", "w", delta, 2)},
      2);
  s.players = {"v"};
  s.strategies = {unilateral("reprioritize", Reprioritize{"v", {PriorityAssignment{"u", std::nullopt, 1}}})};
  return s;
}

GameScenario prisoners() {
  GameScenario s;
  s.name = "prisoners";
  s.system = FinancialSystem(
      {{"u", 5}, {"v1", 0}, {"v2", 0}, {"w", 0}, {"x_sink", 0}, {"x_writer", 7}},
      {debt("u", "v1", 5), debt("u", "v2", 5), debt("u", "x_sink", 5), debt("w", "x_sink", 1),
       cds("x_writer", "w", "u", 1), cds("x_writer", "v1", "w", 3), cds("x_writer", "v2", "w", 3)});
  s.players = {"v1", "v2"};
  s.strategies = {cooperate_or_defect(RemoveIncomingDebt{"u", "v1", 1.0}),
                  cooperate_or_defect(RemoveIncomingDebt{"u", "v2", 1.0})};
  return s;
}

GameScenario stag_hunt() {
  GameScenario s;
  s.name = "stag_hunt";
  s.system = FinancialSystem(
      {{"u1", 2}, {"u2", 2}, {"v1", 0}, {"v2", 0}, {"w", 0}, {"x_sink", 0}, {"x_writer", 10}},
      {debt("u1", "v1", 2), debt("u2", "v2", 2), debt("u1", "x_sink", 2), debt("u2", "x_sink", 2),
       debt("w", "x_sink", 1), cds("x_writer", "w", "u1", 2), cds("x_writer", "w", "u2", 2),
       cds("x_writer", "v1", "w", 3), cds("x_writer", "v2", "w", 3)});
  s.players = {"v1", "v2"};
  s.strategies = {cooperate_or_defect(RemoveIncomingDebt{"u1", "v1", 1.0}),
                  cooperate_or_defect(RemoveIncomingDebt{"u2", "v2", 1.0})};
  return s;
}

GameScenario volunteer(int k, std::string name) {
  if (k < 2 || k > kMaxVolunteers) {
    throw InputError("k must lie in 2.." + std::to_string(kMaxVolunteers));
  }
  GameScenario s;
  s.name = std::move(name);
  std::vector<Bank> banks{{"u", 0}, {"w", 0}, {"x_sink", 0}, {"x_writer", 1.0 + 3.0 * k}};
  std::vector<Contract> contracts{debt("u", "x_sink", 1), debt("w", "x_sink", 1),
                                  cds("x_writer", "w", "u", 1)};
  for (int i = 1; i <= k; ++i) {
    const std::string v = "v" + std::to_string(i);
    banks.push_back({v, 0});
    contracts.push_back(Contract::cds("x_writer", v, "w", 3));
    s.players.push_back(v);
    s.strategies.push_back(cooperate_or_defect(Donate{v, "u", 1.0}));
  }
  s.system = FinancialSystem(std::move(banks), std::move(contracts));
  return s;
}

GameScenario dollar_auction(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= kAuctionBudget)) {
    throw InputError("epsilon must lie in (0, 0.5]");
  }
  GameScenario s;
  s.name = "dollar_auction";
  s.params.epsilon = epsilon;
  const double delta = 6.0 * epsilon;
  s.system = FinancialSystem(
      {{"u", 0}, {"v", 0}, {kAuctionU, 0}, {kAuctionV, 0}, {"x_sink", 0}, {"x_writer", 2.0 + 2.0 * delta}},
      {debt("u", "x_sink", 1), debt("v", "x_sink", 1), cds("x_writer", "u", "v", 1),
       cds("x_writer", "v", "u", 1), Contract::cds("x_writer", kAuctionU, "u", delta),
       Contract::cds("x_writer", kAuctionV, "v", delta)});
  s.players = {kAuctionU, kAuctionV};
  s.strategies = {{Strategy{"donate", Donate{kAuctionU, "v", epsilon}}, Strategy{"pass", std::nullopt}},
                  {Strategy{"donate", Donate{kAuctionV, "u", epsilon}}, Strategy{"pass", std::nullopt}}};
  return s;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{
      "figure1",   "figure1_priority", "remove_debt", "partial_removal", "inject",
      "reprioritize", "prisoners",     "stag_hunt",   "chicken",         "volunteer",
      "dollar_auction"};
  return names;
}

std::string scenario_summary(const std::string& name) {
  static const std::map<std::string, std::string> summaries{
      {"figure1", "three banks, one debt default and a CDS on it"},
      {"figure1_priority", "figure1 with u's debt to w paid first"},
      {"remove_debt", "v gains by releasing u from its debt or by donating to u"},
      {"partial_removal", "v's payoff peaks at removing the fraction gamma0 of u's debt"},
      {"inject", "two solutions; v's injection removes the unfavourable one"},
      {"reprioritize", "v raises its recovery rate by paying u first (parameter delta)"},
      {"prisoners", "prisoner's dilemma between v1 and v2"},
      {"stag_hunt", "stag hunt between v1 and v2"},
      {"chicken", "game of chicken between v1 and v2"},
      {"volunteer", "volunteer's dilemma among k banks"},
      {"dollar_auction", "u' and v' outbid each other by donations (parameter epsilon)"}};
  auto it = summaries.find(name);
  if (it == summaries.end()) throw InputError("unknown scenario '" + name + "'");
  return it->second;
}

GameScenario build_scenario(const std::string& name, const ScenarioParams& params) {
  GameScenario s;
  if (name == "figure1") {
    s = figure1(false);
  } else if (name == "figure1_priority") {
    s = figure1(true);
  } else if (name == "remove_debt") {
    s = figure2();
  } else if (name == "partial_removal") {
    s = figure3(require_param(params.gamma0, 0.5, "gamma0"));
  } else if (name == "inject") {
    s = figure4();
  } else if (name == "reprioritize") {
    s = figure5(require_param(params.delta, 0.5, "delta"));
  } else if (name == "prisoners") {
    s = prisoners();
  } else if (name == "stag_hunt") {
    s = stag_hunt();
  } else if (name == "chicken") {
    s = volunteer(2, "chicken");
  } else if (name == "volunteer") {
    s = volunteer(params.k.value_or(3), "volunteer");
    s.params.k = params.k.value_or(3);
  } else if (name == "dollar_auction") {
    s = dollar_auction(require_param(params.epsilon, 0.01, "epsilon"));
  } else {
    throw InputError("unknown scenario '" + name + "'");
  }
  check_scenario(s);
  return s;
}

void check_scenario(const GameScenario& scenario) {
  require_valid(scenario.system);
  if (scenario.players.size() != scenario.strategies.size()) {
    throw InputError("scenario '" + scenario.name + "' needs one strategy list per player");
  }
  for (std::size_t i = 0; i < scenario.players.size(); ++i) {
    if (scenario.strategies[i].empty()) {
      throw InputError("player '" + scenario.players[i].str() + "' has no strategies");
    }
    for (const auto& st : scenario.strategies[i]) {
      if (!st.action) continue;
      if (actor(*st.action) != scenario.players[i]) {
        throw ActionError("strategy '" + st.label + "' is not executed by '" +
                          scenario.players[i].str() + "'");
      }
      apply_action(scenario.system, *st.action);
    }
  }
}

FinancialSystem apply_profile(const GameScenario& scenario, const std::vector<std::size_t>& profile) {
  if (profile.size() != scenario.players.size()) {
    throw InputError("profile has " + std::to_string(profile.size()) + " entries for " +
                     std::to_string(scenario.players.size()) + " players");
  }
  FinancialSystem sys = scenario.system;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] >= scenario.strategies[i].size()) throw InputError("strategy index out of range");
    const auto& st = scenario.strategies[i][profile[i]];
    if (st.action) sys = apply_action(sys, *st.action);
  }
  return sys;
}

std::size_t PayoffMatrix::cell_index(const std::vector<std::size_t>& profile) const {
  if (profile.size() != labels.size()) throw InputError("profile does not match the players");
  std::size_t index = 0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] >= labels[i].size()) throw InputError("strategy index out of range");
    index = index * labels[i].size() + profile[i];
  }
  return index;
}

const MatrixCell& PayoffMatrix::at(const std::vector<std::size_t>& profile) const {
  return cells[cell_index(profile)];
}

std::string PayoffMatrix::profile_label(const std::vector<std::size_t>& profile) const {
  std::string out;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (i) out += "/";
    out += labels[i].at(profile[i]);
  }
  return out;
}

PayoffMatrix payoff_matrix(const GameScenario& scenario, const SolverConfig& cfg) {
  PayoffMatrix m;
  m.scenario = scenario.name;
  m.players = scenario.players;
  std::size_t total = 1;
  for (const auto& list : scenario.strategies) {
    std::vector<std::string> labels;
    for (const auto& st : list) labels.push_back(st.label);
    m.labels.push_back(std::move(labels));
    total *= list.size();
  }

  std::vector<std::vector<std::size_t>> profiles(total);
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<std::size_t> profile(m.labels.size());
    std::size_t rest = c;
    for (std::size_t i = m.labels.size(); i-- > 0;) {
      profile[i] = rest % m.labels[i].size();
      rest /= m.labels[i].size();
    }
    profiles[c] = std::move(profile);
  }

  SolverConfig inner = cfg;
  inner.policy = ExecutionPolicy::serial;
  m.cells.resize(total);
  std::vector<std::exception_ptr> errors(total);

#pragma omp parallel for schedule(dynamic) if (cfg.policy == ExecutionPolicy::parallel)
  for (long c = 0; c < static_cast<long>(total); ++c) {
    try {
      MatrixCell cell;
      cell.profile = profiles[c];
      cell.solutions = find_solutions(apply_profile(scenario, cell.profile), inner);
      for (std::size_t i = 0; i < cell.profile.size(); ++i) {
        const auto& st = scenario.strategies[i][cell.profile[i]];
        const double cost = st.action ? action_cost(*st.action) : 0.0;
        const auto q = payoffs_of(cell.solutions, scenario.players[i]);
        cell.costs.push_back(cost);
        cell.payoffs.push_back((q.empty() ? 0.0 : q.front()) - cost);
      }
      m.cells[c] = std::move(cell);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return m;
}

std::vector<std::vector<std::size_t>> find_pure_nash(const PayoffMatrix& matrix, double tolerance) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& cell : matrix.cells) {
    bool stable = true;
    for (std::size_t i = 0; i < cell.profile.size() && stable; ++i) {
      auto deviation = cell.profile;
      for (std::size_t s = 0; s < matrix.labels[i].size(); ++s) {
        if (s == cell.profile[i]) continue;
        deviation[i] = s;
        if (matrix.at(deviation).payoffs[i] > cell.payoffs[i] + tolerance) {
          stable = false;
          break;
        }
      }
    }
    if (stable) out.push_back(cell.profile);
  }
  return out;
}

std::optional<std::size_t> find_dominant(const PayoffMatrix& matrix, std::size_t player,
                                         double tolerance) {
  if (player >= matrix.labels.size()) throw InputError("player index out of range");
  const std::size_t options = matrix.labels[player].size();
  for (std::size_t s = 0; s < options; ++s) {
    bool dominant = options > 1;
    for (const auto& cell : matrix.cells) {
      if (!dominant) break;
      if (cell.profile[player] != s) continue;
      auto other = cell.profile;
      for (std::size_t t = 0; t < options; ++t) {
        if (t == s) continue;
        other[player] = t;
        if (!(cell.payoffs[player] > matrix.at(other).payoffs[player] + tolerance)) {
          dominant = false;
          break;
        }
      }
    }
    if (dominant) return s;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Dollar auction
// ---------------------------------------------------------------------------

double AuctionState::spent(const BankId& player) const {
  if (player == kAuctionU) return e_v();
  if (player == kAuctionV) return e_u();
  throw InputError("'" + player.str() + "' does not take part in the auction");
}

AuctionState make_auction(double epsilon) {
  AuctionState state;
  ScenarioParams params;
  params.epsilon = epsilon;
  const auto scenario = build_scenario("dollar_auction", params);
  state.epsilon = epsilon;
  state.delta = 6.0 * epsilon;
  state.system = scenario.system;
  return state;
}

std::string to_string(AuctionCase c) {
  switch (c) {
    case AuctionCase::u_defaults: return "u_defaults";
    case AuctionCase::v_defaults: return "v_defaults";
    case AuctionCase::family: return "family";
  }
  return "unknown";
}

AuctionSummary auction_solutions(const AuctionState& state) {
  AuctionSummary s;
  s.e_u = state.e_u();
  s.e_v = state.e_v();
  if (!(s.e_u >= 0.0 && s.e_u < 1.0 && s.e_v >= 0.0 && s.e_v < 1.0)) {
    throw InputError("auction needs e_u and e_v in [0,1)");
  }
  const double d = state.delta;
  if (state.units_u < state.units_v) {
    s.kind = AuctionCase::u_defaults;
    s.r_u = s.e_u;
    s.r_v = 1.0;
    s.worst_u_prime = s.best_u_prime = d * (1.0 - s.e_u);
  } else if (state.units_u > state.units_v) {
    s.kind = AuctionCase::v_defaults;
    s.r_u = 1.0;
    s.r_v = s.e_v;
    s.worst_v_prime = s.best_v_prime = d * (1.0 - s.e_v);
  } else {
    // Any r_u in [e, 1] with r_v = 1 + e - r_u; the symmetric point stands in.
    s.kind = AuctionCase::family;
    s.family_sum = 1.0 + s.e_u;
    s.r_u = s.r_v = 0.5 * s.family_sum;
    s.best_u_prime = d * (1.0 - s.e_u);
    s.best_v_prime = d * (1.0 - s.e_v);
  }
  return s;
}

AuctionState auction_step(const AuctionState& state, const BankId& player) {
  const bool is_u = player == kAuctionU;
  if (!is_u && player != kAuctionV) {
    throw InputError("'" + player.str() + "' does not take part in the auction");
  }
  const long own = is_u ? state.units_v : state.units_u;    // the target's units
  const long rival = is_u ? state.units_u : state.units_v;  // the other target's units
  const auto before = auction_solutions(state);

  AuctionMove move;
  move.player = player;
  move.payoff_before = is_u ? before.worst_u_prime : before.worst_v_prime;

  const long needed = rival - own + 1;
  const long budget_units = static_cast<long>(std::floor(kAuctionBudget / state.epsilon + 1e-9));
  // The mover has spent exactly its target's units so far.
  bool execute = needed > 0 && own + needed <= budget_units &&
                 static_cast<double>(own + needed) * state.epsilon < 1.0;
  if (execute) {
    const double gain = state.delta * (1.0 - static_cast<double>(rival) * state.epsilon) - move.payoff_before;
    execute = gain > static_cast<double>(needed) * state.epsilon;
  }

  AuctionState next = state;
  if (execute) {
    move.units = needed;
    move.amount = static_cast<double>(needed) * state.epsilon;
    next.system = apply_action(state.system, Donate{player, is_u ? "v" : "u", move.amount});
    (is_u ? next.units_v : next.units_u) += needed;
    const auto after = auction_solutions(next);
    move.payoff_after = is_u ? after.worst_u_prime : after.worst_v_prime;
  } else {
    move.passed = true;
    move.payoff_after = move.payoff_before;
  }
  move.spent = next.spent(player);
  move.e_u = next.e_u();
  move.e_v = next.e_v();
  next.history.push_back(move);
  return next;
}

AuctionState auction_run(const AuctionState& state, std::size_t rounds) {
  AuctionState s = state;
  for (std::size_t i = 0; i < rounds; ++i) {
    const BankId& player = (s.history.size() % 2 == 0) ? kAuctionU : kAuctionV;
    s = auction_step(s, player);
    if (s.history.back().passed) break;
  }
  return s;
}

}  // namespace finclear
