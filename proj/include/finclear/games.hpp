#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finclear/interventions.hpp"
#include "finclear/model.hpp"
#include "finclear/solver.hpp"

namespace finclear {

/// A named option of one player; no action means "do nothing".
struct Strategy {
  std::string label;
  std::optional<Action> action;
};

struct ScenarioParams {
  std::optional<double> gamma0;   // partial_removal
  std::optional<double> delta;    // reprioritize
  std::optional<double> epsilon;  // dollar_auction
  std::optional<int> k;           // volunteer

  bool operator==(const ScenarioParams&) const = default;
};

struct GameScenario {
  std::string name;
  FinancialSystem system;
  std::vector<BankId> players;
  std::vector<std::vector<Strategy>> strategies;  // per player
  ScenarioParams params;                          // every parameter the scenario uses, resolved
};

/// Names accepted by build_scenario, in catalogue order.
const std::vector<std::string>& scenario_names();

/// One-line description of a catalogue entry.
std::string scenario_summary(const std::string& name);

/// Missing parameters take their defaults (gamma0 0.5, delta 0.5, epsilon
/// 0.01, k 3). Throws InputError for an unknown name or an out-of-range
/// parameter.
GameScenario build_scenario(const std::string& name, const ScenarioParams& params = {});

/// Checks that every strategy applies cleanly to the base system and that the
/// system validates. Throws ActionError / ValidationError otherwise.
void check_scenario(const GameScenario& scenario);

/// Applies the chosen strategy of every player, in player order.
FinancialSystem apply_profile(const GameScenario& scenario, const std::vector<std::size_t>& profile);

struct MatrixCell {
  std::vector<std::size_t> profile;  // strategy index per player
  std::vector<double> payoffs;       // worst-case q over the cell's solutions, net of cost
  std::vector<double> costs;
  SolutionSet solutions;
};

struct PayoffMatrix {
  std::string scenario;
  std::vector<BankId> players;
  std::vector<std::vector<std::string>> labels;
  std::vector<MatrixCell> cells;  // the last player's strategy varies fastest

  std::size_t cell_index(const std::vector<std::size_t>& profile) const;
  const MatrixCell& at(const std::vector<std::size_t>& profile) const;
  std::string profile_label(const std::vector<std::size_t>& profile) const;
};

PayoffMatrix payoff_matrix(const GameScenario& scenario, const SolverConfig& cfg = {});

/// Profiles where no player gains more than `tolerance` by deviating alone.
std::vector<std::vector<std::size_t>> find_pure_nash(const PayoffMatrix& matrix,
                                                     double tolerance = 1e-9);

/// A strategy strictly better (by more than `tolerance`) than every other
/// strategy of the player against every choice of the others.
std::optional<std::size_t> find_dominant(const PayoffMatrix& matrix, std::size_t player,
                                         double tolerance = 1e-9);

// ---------------------------------------------------------------------------
// Dollar auction
// ---------------------------------------------------------------------------

/// u' holds a CDS on u and donates to v; v' holds a CDS on v and donates to u.
struct AuctionMove {
  BankId player;
  bool passed = false;
  long units = 0;               // donated multiples of epsilon
  double amount = 0.0;
  double payoff_before = 0.0;   // mover's worst-case payoff
  double payoff_after = 0.0;
  double spent = 0.0;           // mover's cumulative spend after the move
  double e_u = 0.0;
  double e_v = 0.0;
};

struct AuctionState {
  double epsilon = 0.01;
  double delta = 0.06;
  long units_u = 0;  // e_u / epsilon, donated by v'
  long units_v = 0;  // e_v / epsilon, donated by u'
  FinancialSystem system;
  std::vector<AuctionMove> history;

  double e_u() const { return static_cast<double>(units_u) * epsilon; }
  double e_v() const { return static_cast<double>(units_v) * epsilon; }
  /// Cumulative spend of u' (== e_v) or v' (== e_u).
  double spent(const BankId& player) const;
  bool halted() const { return !history.empty() && history.back().passed; }
};

inline const BankId kAuctionU{"u'"};
inline const BankId kAuctionV{"v'"};
inline constexpr double kAuctionBudget = 0.5;

AuctionState make_auction(double epsilon);

enum class AuctionCase { u_defaults, v_defaults, family };
std::string to_string(AuctionCase c);

struct AuctionSummary {
  AuctionCase kind = AuctionCase::family;
  double e_u = 0.0;
  double e_v = 0.0;
  // Unique solution: the recovery rates. Family: r_u + r_v = 1 + e_u with r_u in [e_u, 1].
  double r_u = 1.0;
  double r_v = 1.0;
  double family_sum = 0.0;
  double worst_u_prime = 0.0;  // worst-case payoff of u' over the solutions
  double worst_v_prime = 0.0;
  double best_u_prime = 0.0;
  double best_v_prime = 0.0;
};

/// Closed-form case analysis over (e_u, e_v). Throws InputError outside [0,1).
AuctionSummary auction_solutions(const AuctionState& state);

/// One best-response move of `player`. A pass is recorded in the history.
AuctionState auction_step(const AuctionState& state, const BankId& player);

/// Alternating moves starting with u', stopping early after a pass.
AuctionState auction_run(const AuctionState& state, std::size_t rounds);

}  // namespace finclear
