#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "finclear/games.hpp"
#include "finclear/interventions.hpp"
#include "finclear/model.hpp"
#include "finclear/solver.hpp"

namespace finclear {

/// Insertion-ordered so that documents come out in the order they are built.
using Json = nlohmann::ordered_json;

/// Parses JSON text; syntax errors become InputError with line and column.
Json parse_json_text(const std::string& text);

// The parse_* functions check the schema only and throw InputError naming the
// offending field (e.g. "contracts[2].notional"). Numbers are accepted as
// JSON numbers or as decimal strings.

FinancialSystem parse_system(const Json& doc);
Json system_to_json(const FinancialSystem& sys);

Action parse_action(const Json& doc);
Json action_to_json(const Action& action);

ScenarioParams parse_params(const Json& doc);
Json params_to_json(const ScenarioParams& params);

GameScenario parse_scenario(const Json& doc);
Json scenario_to_json(const GameScenario& scenario);

/// A file holding either a bare system document or a scenario document
/// (which embeds one under "system"). The system is validated.
struct LoadedDocument {
  FinancialSystem system;
  std::optional<GameScenario> scenario;
};
LoadedDocument load_document(const std::string& text);
LoadedDocument load_document_file(const std::string& path);

Json validation_to_json(const ValidationReport& report);
Json state_to_json(const ClearingState& state, double tolerance);
/// With `all` false only the canonical first solution is listed.
Json solutions_to_json(const SolutionSet& set, bool all = true);
Json effect_to_json(const EffectReport& report);
Json curve_to_json(const PartialRemovalResult& result, const BankId& debtor, const BankId& acting);
Json matrix_to_json(const PayoffMatrix& matrix);
Json auction_to_json(const AuctionState& state);

}  // namespace finclear
