#include "finclear/document.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace finclear {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError((path.empty() ? std::string("document") : path) + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string item(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void expect_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void expect_array(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
}

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) fail(join(path, it.key()), "unknown field");
  }
}

const Json& field(const Json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(join(path, key), "missing field");
  return *it;
}

const Json* optional_field(const Json& j, const char* key) {
  auto it = j.find(key);
  return (it == j.end() || it->is_null()) ? nullptr : &*it;
}

double read_number(const Json& j, const std::string& path) {
  double x = 0.0;
  if (j.is_number()) {
    x = j.get<double>();
  } else if (j.is_string()) {
    static const std::regex decimal(R"(^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$)");
    const auto& s = j.get_ref<const std::string&>();
    if (!std::regex_match(s, decimal)) fail(path, "'" + s + "' is not a decimal number");
    x = std::strtod(s.c_str(), nullptr);
  } else {
    fail(path, "expected a number");
  }
  if (!std::isfinite(x)) fail(path, "number is not finite");
  return x;
}

int read_int(const Json& j, const std::string& path) {
  const double x = read_number(j, path);
  if (x != std::floor(x) || std::abs(x) > 1e9) fail(path, "expected an integer");
  return static_cast<int>(x);
}

std::string read_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Json bank_map(const std::vector<BankId>& banks, const std::vector<double>& values) {
  Json out = Json::object();
  for (std::size_t i = 0; i < banks.size(); ++i) out[banks[i].str()] = values[i];
  return out;
}

Json id_list(const std::vector<BankId>& ids) {
  Json out = Json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

Action parse_action_at(const Json& j, const std::string& path) {
  expect_object(j, path);
  const std::string kind = read_string(field(j, path, "kind"), join(path, "kind"));
  if (kind == "remove_incoming_debt") {
    check_keys(j, path, {"kind", "debtor", "creditor", "fraction"});
    RemoveIncomingDebt a;
    a.debtor = read_string(field(j, path, "debtor"), join(path, "debtor"));
    a.creditor = read_string(field(j, path, "creditor"), join(path, "creditor"));
    if (const Json* f = optional_field(j, "fraction")) a.fraction = read_number(*f, join(path, "fraction"));
    return a;
  }
  if (kind == "donate") {
    check_keys(j, path, {"kind", "from", "to", "amount"});
    return Donate{read_string(field(j, path, "from"), join(path, "from")),
                  read_string(field(j, path, "to"), join(path, "to")),
                  read_number(field(j, path, "amount"), join(path, "amount"))};
  }
  if (kind == "inject_own_assets") {
    check_keys(j, path, {"kind", "bank", "amount"});
    return InjectOwnAssets{read_string(field(j, path, "bank"), join(path, "bank")),
                           read_number(field(j, path, "amount"), join(path, "amount"))};
  }
  if (kind == "reprioritize") {
    check_keys(j, path, {"kind", "bank", "assignments"});
    Reprioritize a;
    a.bank = read_string(field(j, path, "bank"), join(path, "bank"));
    const std::string apath = join(path, "assignments");
    const Json& list = field(j, path, "assignments");
    expect_array(list, apath);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = item(apath, i);
      expect_object(list[i], p);
      check_keys(list[i], p, {"creditor", "reference", "priority"});
      PriorityAssignment pa;
      pa.creditor = read_string(field(list[i], p, "creditor"), join(p, "creditor"));
      if (const Json* r = optional_field(list[i], "reference")) pa.reference = BankId(read_string(*r, join(p, "reference")));
      pa.priority = read_int(field(list[i], p, "priority"), join(p, "priority"));
      a.assignments.push_back(std::move(pa));
    }
    return a;
  }
  fail(join(path, "kind"), "unknown action kind '" + kind + "'");
}

FinancialSystem parse_system_at(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"priority_levels", "banks", "contracts"});
  int levels = 1;
  if (const Json* p = optional_field(j, "priority_levels")) levels = read_int(*p, join(path, "priority_levels"));

  std::vector<Bank> banks;
  const std::string bpath = join(path, "banks");
  const Json& blist = field(j, path, "banks");
  expect_array(blist, bpath);
  for (std::size_t i = 0; i < blist.size(); ++i) {
    const std::string p = item(bpath, i);
    expect_object(blist[i], p);
    check_keys(blist[i], p, {"id", "external_assets"});
    Bank b;
    b.id = read_string(field(blist[i], p, "id"), join(p, "id"));
    if (const Json* e = optional_field(blist[i], "external_assets")) {
      b.external_assets = read_number(*e, join(p, "external_assets"));
    }
    banks.push_back(std::move(b));
  }

  std::vector<Contract> contracts;
  const std::string cpath = join(path, "contracts");
  const Json* clist = optional_field(j, "contracts");
  if (clist) {
    expect_array(*clist, cpath);
    for (std::size_t i = 0; i < clist->size(); ++i) {
      const Json& c = (*clist)[i];
      const std::string p = item(cpath, i);
      expect_object(c, p);
      check_keys(c, p, {"debtor", "creditor", "notional", "kind", "reference", "priority"});
      Contract k;
      k.debtor = read_string(field(c, p, "debtor"), join(p, "debtor"));
      k.creditor = read_string(field(c, p, "creditor"), join(p, "creditor"));
      k.notional = read_number(field(c, p, "notional"), join(p, "notional"));
      const std::string kind = read_string(field(c, p, "kind"), join(p, "kind"));
      if (kind == "debt") {
        k.kind = ContractKind::debt;
      } else if (kind == "cds") {
        k.kind = ContractKind::cds;
      } else {
        fail(join(p, "kind"), "expected \"debt\" or \"cds\", got \"" + kind + "\"");
      }
      if (const Json* r = optional_field(c, "reference")) k.reference = BankId(read_string(*r, join(p, "reference")));
      if (const Json* pr = optional_field(c, "priority")) k.priority = read_int(*pr, join(p, "priority"));
      contracts.push_back(std::move(k));
    }
  }
  return FinancialSystem(std::move(banks), std::move(contracts), levels);
}

ScenarioParams parse_params_at(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"gamma0", "delta", "epsilon", "k"});
  ScenarioParams p;
  if (const Json* x = optional_field(j, "gamma0")) p.gamma0 = read_number(*x, join(path, "gamma0"));
  if (const Json* x = optional_field(j, "delta")) p.delta = read_number(*x, join(path, "delta"));
  if (const Json* x = optional_field(j, "epsilon")) p.epsilon = read_number(*x, join(path, "epsilon"));
  if (const Json* x = optional_field(j, "k")) p.k = read_int(*x, join(path, "k"));
  return p;
}

}  // namespace

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    // Drop nlohmann's "[json.exception.parse_error.101] parse error at ...: " prefix.
    if (auto pos = what.rfind(": "); pos != std::string::npos) what = what.substr(pos + 2);
    throw InputError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
  }
}

FinancialSystem parse_system(const Json& doc) { return parse_system_at(doc, ""); }

Json system_to_json(const FinancialSystem& sys) {
  Json banks = Json::array();
  for (const auto& b : sys.banks()) banks.push_back({{"id", b.id.str()}, {"external_assets", b.external_assets}});
  Json contracts = Json::array();
  for (const auto& c : sys.contracts()) {
    Json j;
    j["debtor"] = c.debtor.str();
    j["creditor"] = c.creditor.str();
    j["notional"] = c.notional;
    j["kind"] = c.is_debt() ? "debt" : "cds";
    if (c.reference) j["reference"] = c.reference->str();
    j["priority"] = c.priority;
    contracts.push_back(std::move(j));
  }
  Json out;
  out["priority_levels"] = sys.priority_levels();
  out["banks"] = std::move(banks);
  out["contracts"] = std::move(contracts);
  return out;
}

Action parse_action(const Json& doc) { return parse_action_at(doc, ""); }

Json action_to_json(const Action& action) {
  return std::visit(
      overloaded{[](const RemoveIncomingDebt& a) {
                   return Json{{"kind", "remove_incoming_debt"},
                               {"debtor", a.debtor.str()},
                               {"creditor", a.creditor.str()},
                               {"fraction", a.fraction}};
                 },
                 [](const Donate& a) {
                   return Json{{"kind", "donate"}, {"from", a.from.str()}, {"to", a.to.str()}, {"amount", a.amount}};
                 },
                 [](const InjectOwnAssets& a) {
                   return Json{{"kind", "inject_own_assets"}, {"bank", a.bank.str()}, {"amount", a.amount}};
                 },
                 [](const Reprioritize& a) {
                   Json list = Json::array();
                   for (const auto& p : a.assignments) {
                     Json j;
                     j["creditor"] = p.creditor.str();
                     if (p.reference) j["reference"] = p.reference->str();
                     j["priority"] = p.priority;
                     list.push_back(std::move(j));
                   }
                   return Json{{"kind", "reprioritize"}, {"bank", a.bank.str()}, {"assignments", list}};
                 }},
      action);
}

ScenarioParams parse_params(const Json& doc) { return parse_params_at(doc, "params"); }

Json params_to_json(const ScenarioParams& params) {
  Json out = Json::object();
  if (params.gamma0) out["gamma0"] = *params.gamma0;
  if (params.delta) out["delta"] = *params.delta;
  if (params.epsilon) out["epsilon"] = *params.epsilon;
  if (params.k) out["k"] = *params.k;
  return out;
}

GameScenario parse_scenario(const Json& doc) {
  expect_object(doc, "");
  check_keys(doc, "", {"scenario", "params", "players", "strategies", "system"});
  GameScenario s;
  s.name = read_string(field(doc, "", "scenario"), "scenario");
  if (const Json* p = optional_field(doc, "params")) s.params = parse_params(*p);
  s.system = parse_system_at(field(doc, "", "system"), "system");
  if (const Json* players = optional_field(doc, "players")) {
    expect_array(*players, "players");
    for (std::size_t i = 0; i < players->size(); ++i) s.players.push_back(read_string((*players)[i], item("players", i)));
  }
  if (const Json* strategies = optional_field(doc, "strategies")) {
    expect_array(*strategies, "strategies");
    for (std::size_t i = 0; i < strategies->size(); ++i) {
      const std::string p = item("strategies", i);
      expect_array((*strategies)[i], p);
      std::vector<Strategy> list;
      for (std::size_t k = 0; k < (*strategies)[i].size(); ++k) {
        const Json& st = (*strategies)[i][k];
        const std::string sp = item(p, k);
        expect_object(st, sp);
        check_keys(st, sp, {"label", "action"});
        Strategy strategy;
        strategy.label = read_string(field(st, sp, "label"), join(sp, "label"));
        if (const Json* a = optional_field(st, "action")) strategy.action = parse_action_at(*a, join(sp, "action"));
        list.push_back(std::move(strategy));
      }
      s.strategies.push_back(std::move(list));
    }
  }
  if (s.players.size() != s.strategies.size()) fail("strategies", "expected one list per player");
  return s;
}

Json scenario_to_json(const GameScenario& scenario) {
  Json strategies = Json::array();
  for (const auto& list : scenario.strategies) {
    Json arr = Json::array();
    for (const auto& st : list) {
      arr.push_back({{"label", st.label}, {"action", st.action ? action_to_json(*st.action) : Json(nullptr)}});
    }
    strategies.push_back(std::move(arr));
  }
  Json out;
  out["scenario"] = scenario.name;
  out["params"] = params_to_json(scenario.params);
  out["players"] = id_list(scenario.players);
  out["strategies"] = std::move(strategies);
  out["system"] = system_to_json(scenario.system);
  return out;
}

LoadedDocument load_document(const std::string& text) {
  const Json doc = parse_json_text(text);
  LoadedDocument out;
  if (doc.is_object() && doc.contains("scenario")) {
    out.scenario = parse_scenario(doc);
    require_valid(out.scenario->system);
    check_scenario(*out.scenario);
    out.system = out.scenario->system;
  } else {
    out.system = parse_system(doc);
    require_valid(out.system);
  }
  return out;
}

LoadedDocument load_document_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return load_document(buf.str());
  } catch (const ValidationError&) {
    throw;
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

Json validation_to_json(const ValidationReport& report) {
  Json violations = Json::array();
  for (const auto& v : report.violations) {
    Json j;
    j["code"] = v.code;
    j["message"] = v.message;
    if (v.contract) j["contract"] = *v.contract;
    if (v.bank) j["bank"] = v.bank->str();
    violations.push_back(std::move(j));
  }
  return Json{{"ok", report.ok()}, {"violations", std::move(violations)}};
}

Json state_to_json(const ClearingState& state, double tolerance) {
  Json payments = Json::array();
  for (const auto& [key, amount] : state.payments.pairwise) {
    payments.push_back({{"debtor", state.banks[key.first].str()},
                        {"creditor", state.banks[key.second].str()},
                        {"amount", amount}});
  }
  Json out;
  out["recovery"] = bank_map(state.banks, std::vector<double>(state.r.values().begin(), state.r.values().end()));
  out["assets"] = bank_map(state.banks, state.assets);
  out["liabilities"] = bank_map(state.banks, state.ledger.total);
  out["payoffs"] = bank_map(state.banks, state.payoffs);
  out["default_set"] = id_list(state.default_set(tolerance));
  out["residual"] = state.residual;
  out["payments"] = std::move(payments);
  return out;
}

Json solutions_to_json(const SolutionSet& set, bool all) {
  Json solutions = Json::array();
  for (std::size_t i = 0; i < set.solutions.size() && (all || i == 0); ++i) {
    solutions.push_back(state_to_json(set.solutions[i], set.tolerance));
  }
  Json families = Json::array();
  for (const auto& pattern : set.family_patterns) families.push_back(id_list(pattern));
  Json out;
  out["multiplicity"] = to_string(set.multiplicity);
  out["count"] = set.solutions.size();
  out["tolerance"] = set.tolerance;
  out["family_patterns"] = std::move(families);
  out["solutions"] = std::move(solutions);
  return out;
}

Json effect_to_json(const EffectReport& report) {
  Json out;
  out["acting"] = report.acting.str();
  out["action"] = action_to_json(report.action);
  out["description"] = describe(report.action);
  out["cost"] = report.cost;
  out["payoffs_before"] = report.payoffs_before;
  out["payoffs_after"] = report.payoffs_after;
  out["recovery_before"] = report.recovery_before;
  out["recovery_after"] = report.recovery_after;
  out["min_payoff_delta"] = report.min_payoff_delta;
  out["max_payoff_delta"] = report.max_payoff_delta;
  out["before"] = solutions_to_json(report.before);
  out["after"] = solutions_to_json(report.after);
  return out;
}

Json curve_to_json(const PartialRemovalResult& result, const BankId& debtor, const BankId& acting) {
  Json curve = Json::array();
  for (const auto& [fraction, value] : result.curve) curve.push_back({{"fraction", fraction}, {"payoff", value}});
  Json out;
  out["debtor"] = debtor.str();
  out["acting"] = acting.str();
  out["best_fraction"] = result.best_fraction;
  out["best_payoff"] = result.best_payoff;
  out["curve"] = std::move(curve);
  return out;
}

Json matrix_to_json(const PayoffMatrix& matrix) {
  auto labels_of = [&](const std::vector<std::size_t>& profile) {
    Json arr = Json::array();
    for (std::size_t i = 0; i < profile.size(); ++i) arr.push_back(matrix.labels[i][profile[i]]);
    return arr;
  };
  Json cells = Json::array();
  for (const auto& cell : matrix.cells) {
    Json j;
    j["profile"] = labels_of(cell.profile);
    j["payoffs"] = bank_map(matrix.players, cell.payoffs);
    j["costs"] = bank_map(matrix.players, cell.costs);
    j["multiplicity"] = to_string(cell.solutions.multiplicity);
    j["solutions"] = solutions_to_json(cell.solutions);
    cells.push_back(std::move(j));
  }
  Json nash = Json::array();
  for (const auto& profile : find_pure_nash(matrix)) nash.push_back(labels_of(profile));
  Json dominant = Json::object();
  for (std::size_t i = 0; i < matrix.players.size(); ++i) {
    const auto d = find_dominant(matrix, i);
    dominant[matrix.players[i].str()] = d ? Json(matrix.labels[i][*d]) : Json(nullptr);
  }
  Json out;
  out["scenario"] = matrix.scenario;
  out["players"] = id_list(matrix.players);
  out["strategies"] = matrix.labels;
  out["cells"] = std::move(cells);
  out["nash"] = std::move(nash);
  out["dominant"] = std::move(dominant);
  return out;
}

Json auction_to_json(const AuctionState& state) {
  const auto summary = auction_solutions(state);
  Json history = Json::array();
  for (const auto& m : state.history) {
    history.push_back({{"player", m.player.str()},
                       {"passed", m.passed},
                       {"units", m.units},
                       {"amount", m.amount},
                       {"payoff_before", m.payoff_before},
                       {"payoff_after", m.payoff_after},
                       {"spent", m.spent},
                       {"e_u", m.e_u},
                       {"e_v", m.e_v}});
  }
  Json s;
  s["case"] = to_string(summary.kind);
  s["r_u"] = summary.r_u;
  s["r_v"] = summary.r_v;
  if (summary.kind == AuctionCase::family) s["family_sum"] = summary.family_sum;
  s["worst"] = {{kAuctionU.str(), summary.worst_u_prime}, {kAuctionV.str(), summary.worst_v_prime}};
  s["best"] = {{kAuctionU.str(), summary.best_u_prime}, {kAuctionV.str(), summary.best_v_prime}};

  Json out;
  out["epsilon"] = state.epsilon;
  out["delta"] = state.delta;
  out["e_u"] = state.e_u();
  out["e_v"] = state.e_v();
  out["spent"] = {{kAuctionU.str(), state.spent(kAuctionU)}, {kAuctionV.str(), state.spent(kAuctionV)}};
  out["halted"] = state.halted();
  out["summary"] = std::move(s);
  out["history"] = std::move(history);
  return out;
}

}  // namespace finclear
