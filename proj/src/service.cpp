#include "finclear/service.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include <httplib.h>

namespace finclear {

namespace {

class NotFound : public Error {
 public:
  using Error::Error;
};

Json error_body(int status, const std::string& type, const std::string& message) {
  return Json{{"error", {{"status", status}, {"type", type}, {"message", message}}}};
}

template <class F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const NotFound& e) {
    return {404, error_body(404, "not_found", e.what())};
  } catch (const ValidationError& e) {
    Json body = error_body(422, "validation", e.what());
    body["error"]["violations"] = validation_to_json(e.report())["violations"];
    return {422, std::move(body)};
  } catch (const ActionError& e) {
    return {409, error_body(409, "action", e.what())};
  } catch (const CapabilityError& e) {
    return {503, error_body(503, "capability", e.what())};
  } catch (const InputError& e) {
    return {400, error_body(400, "input", e.what())};
  } catch (const std::exception& e) {
    return {500, error_body(500, "internal", e.what())};
  }
}

Json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  return parse_json_text(body);
}

std::pair<Action, BankId> parse_action_request(const std::string& body) {
  const Json doc = parse_body(body);
  if (doc.is_object() && doc.contains("action")) {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (it.key() != "action" && it.key() != "acting") throw InputError(it.key() + ": unknown field");
    }
    Action action = parse_action(doc["action"]);
    BankId acting = actor(action);
    if (doc.contains("acting")) {
      if (!doc["acting"].is_string()) throw InputError("acting: expected a string");
      acting = doc["acting"].get<std::string>();
    }
    return {std::move(action), std::move(acting)};
  }
  Action action = parse_action(doc);
  BankId acting = actor(action);
  return {std::move(action), std::move(acting)};
}

ScenarioParams params_from_query(const std::map<std::string, std::string>& query) {
  Json doc = Json::object();
  for (const auto& [key, value] : query) doc[key] = value;
  return parse_params(doc);
}

}  // namespace

struct Service::Session {
  struct Entry {
    std::optional<Action> action;
    std::optional<BankId> auction_player;
  };

  std::mutex mutex;
  FinancialSystem initial;
  FinancialSystem current;
  std::optional<std::string> scenario;
  ScenarioParams params;
  std::optional<AuctionState> auction;
  std::vector<Entry> journal;

  void replay() {
    current = initial;
    if (auction) auction = make_auction(auction->epsilon);
    for (const auto& e : journal) {
      if (e.auction_player) {
        auction = finclear::auction_step(*auction, *e.auction_player);
        current = auction->system;
      } else {
        current = apply_action(current, *e.action);
      }
    }
  }

  Json describe(const std::string& id) const {
    Json history = Json::array();
    for (const auto& e : journal) {
      if (e.auction_player) {
        history.push_back({{"auction_player", e.auction_player->str()}});
      } else {
        history.push_back({{"action", action_to_json(*e.action)}});
      }
    }
    Json out;
    out["id"] = id;
    out["scenario"] = scenario ? Json(*scenario) : Json(nullptr);
    out["params"] = params_to_json(params);
    out["system"] = system_to_json(current);
    out["history"] = std::move(history);
    if (auction) out["auction"] = auction_to_json(*auction);
    return out;
  }
};

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  options_.solver.validate();
  if (options_.snapshot_dir) restore();
}

Service::~Service() = default;

std::size_t Service::session_count() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown system id '" + id + "'");
  return it->second;
}

std::string Service::insert(std::shared_ptr<Session> session) {
  std::string id;
  {
    std::unique_lock lock(mutex_);
    id = "s" + std::to_string(next_id_++);
    sessions_[id] = session;
  }
  std::lock_guard guard(session->mutex);
  snapshot(id, *session);
  return id;
}

void Service::snapshot(const std::string& id, const Session& session) const {
  if (!options_.snapshot_dir) return;
  Json journal = Json::array();
  for (const auto& e : session.journal) {
    journal.push_back(e.auction_player ? Json{{"auction_player", e.auction_player->str()}}
                                       : Json{{"action", action_to_json(*e.action)}});
  }
  Json doc;
  doc["id"] = id;
  doc["scenario"] = session.scenario ? Json(*session.scenario) : Json(nullptr);
  doc["params"] = params_to_json(session.params);
  doc["initial"] = system_to_json(session.initial);
  doc["journal"] = std::move(journal);

  namespace fs = std::filesystem;
  const fs::path dir(*options_.snapshot_dir);
  fs::create_directories(dir);
  const fs::path tmp = dir / (id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << '\n';
  }
  fs::rename(tmp, dir / (id + ".json"));
}

void Service::restore() {
  namespace fs = std::filesystem;
  const fs::path dir(*options_.snapshot_dir);
  if (!fs::exists(dir)) return;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const Json doc = parse_json_text(buf.str());
    const std::string id = doc.at("id").get<std::string>();

    auto session = std::make_shared<Session>();
    session->initial = parse_system(doc.at("initial"));
    require_valid(session->initial);
    if (doc.contains("scenario") && doc["scenario"].is_string()) session->scenario = doc["scenario"].get<std::string>();
    if (doc.contains("params")) session->params = parse_params(doc["params"]);
    if (session->scenario == "dollar_auction") session->auction = make_auction(session->params.epsilon.value_or(0.01));
    for (const auto& e : doc.at("journal")) {
      Session::Entry entry;
      if (e.contains("auction_player")) {
        entry.auction_player = BankId(e["auction_player"].get<std::string>());
      } else {
        entry.action = parse_action(e.at("action"));
      }
      session->journal.push_back(std::move(entry));
    }
    session->replay();

    std::unique_lock lock(mutex_);
    sessions_[id] = session;
    if (id.size() > 1 && id[0] == 's') {
      try {
        next_id_ = std::max(next_id_, static_cast<std::size_t>(std::stoul(id.substr(1))) + 1);
      } catch (const std::exception&) {
      }
    }
  }
}

ApiResponse Service::create_system(const std::string& body) {
  return guarded([&]() -> ApiResponse {
    FinancialSystem sys = parse_system(parse_body(body));
    require_valid(sys);
    auto session = std::make_shared<Session>();
    session->initial = sys;
    session->current = sys;
    const std::string id = insert(session);
    std::lock_guard guard(session->mutex);
    return {201, session->describe(id)};
  });
}

ApiResponse Service::get_system(const std::string& id) {
  return guarded([&]() -> ApiResponse {
    auto session = find(id);
    std::lock_guard guard(session->mutex);
    Json out = session->describe(id);
    out["validation"] = validation_to_json(validate_system(session->current));
    return {200, std::move(out)};
  });
}

ApiResponse Service::solutions(const std::string& id, bool all) {
  return guarded([&]() -> ApiResponse {
    auto session = find(id);
    FinancialSystem sys;
    {
      std::lock_guard guard(session->mutex);
      sys = session->current;
    }
    Json out = solutions_to_json(find_solutions(sys, options_.solver), all);
    out["id"] = id;
    return {200, std::move(out)};
  });
}

ApiResponse Service::preview(const std::string& id, const std::string& body) {
  return guarded([&]() -> ApiResponse {
    auto session = find(id);
    auto [action, acting] = parse_action_request(body);
    FinancialSystem sys;
    {
      std::lock_guard guard(session->mutex);
      sys = session->current;
    }
    return {200, effect_to_json(assess(sys, action, acting, options_.solver))};
  });
}

ApiResponse Service::commit(const std::string& id, const std::string& body) {
  return guarded([&]() -> ApiResponse {
    auto session = find(id);
    auto [action, acting] = parse_action_request(body);
    if (actor(action) != acting) {
      throw ActionError("'" + acting.str() + "' is not the acting bank of: " + describe(action));
    }
    // Held for the whole solve so that commits to one session apply in order.
    std::lock_guard guard(session->mutex);
    FinancialSystem next = apply_action(session->current, action);
    const SolutionSet after = find_solutions(next, options_.solver);
    session->current = std::move(next);
    session->journal.push_back({action, std::nullopt});
    snapshot(id, *session);
    Json out;
    out["id"] = id;
    out["action"] = action_to_json(action);
    out["system"] = system_to_json(session->current);
    out["solutions"] = solutions_to_json(after);
    return {200, std::move(out)};
  });
}

ApiResponse Service::undo(const std::string& id) {
  return guarded([&]() -> ApiResponse {
    auto session = find(id);
    std::lock_guard guard(session->mutex);
    if (session->journal.empty()) throw ActionError("nothing to undo");
    auto saved = session->journal;
    session->journal.pop_back();
    try {
      session->replay();
    } catch (...) {
      session->journal = std::move(saved);
      session->replay();
      throw;
    }
    const SolutionSet set = find_solutions(session->current, options_.solver);
    snapshot(id, *session);
    Json out = session->describe(id);
    out["solutions"] = solutions_to_json(set);
    return {200, std::move(out)};
  });
}

ApiResponse Service::list_scenarios() {
  return guarded([&]() -> ApiResponse {
    Json list = Json::array();
    for (const auto& name : scenario_names()) {
      const auto s = build_scenario(name);
      list.push_back({{"name", name},
                      {"summary", scenario_summary(name)},
                      {"params", params_to_json(s.params)},
                      {"players", s.players.size()}});
    }
    return {200, Json{{"scenarios", std::move(list)}}};
  });
}

ApiResponse Service::create_scenario(const std::string& name, const std::string& body) {
  return guarded([&]() -> ApiResponse {
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw NotFound("unknown scenario '" + name + "'");
    }
    const Json doc = parse_body(body);
    const ScenarioParams params = parse_params(doc.is_object() && doc.contains("params") ? doc["params"] : doc);
    const GameScenario scenario = build_scenario(name, params);

    auto session = std::make_shared<Session>();
    session->initial = scenario.system;
    session->current = scenario.system;
    session->scenario = name;
    session->params = scenario.params;
    if (name == "dollar_auction") session->auction = make_auction(*scenario.params.epsilon);
    const std::string id = insert(session);
    std::lock_guard guard(session->mutex);
    Json out = session->describe(id);
    out["definition"] = scenario_to_json(scenario);
    return {201, std::move(out)};
  });
}

ApiResponse Service::game_matrix(const std::string& name, const std::map<std::string, std::string>& query) {
  return guarded([&]() -> ApiResponse {
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw NotFound("unknown scenario '" + name + "'");
    }
    const GameScenario scenario = build_scenario(name, params_from_query(query));
    Json out = matrix_to_json(payoff_matrix(scenario, options_.solver));
    out["params"] = params_to_json(scenario.params);
    return {200, std::move(out)};
  });
}

ApiResponse Service::auction_step(const std::string& id, const std::string& body) {
  return guarded([&]() -> ApiResponse {
    auto session = find(id);
    const Json doc = parse_body(body);
    if (!doc.is_object()) throw InputError("expected an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (it.key() != "player") throw InputError(it.key() + ": unknown field");
    }
    std::lock_guard guard(session->mutex);
    if (!session->auction) throw ActionError("session '" + id + "' is not a dollar auction");
    if (!(session->auction->system == session->current)) {
      throw ActionError("the system was changed outside the auction");
    }
    BankId player = session->auction->history.size() % 2 == 0 ? kAuctionU : kAuctionV;
    if (doc.contains("player")) {
      if (!doc["player"].is_string()) throw InputError("player: expected a string");
      player = doc["player"].get<std::string>();
      if (player != kAuctionU && player != kAuctionV) {
        throw InputError("player: expected \"" + kAuctionU.str() + "\" or \"" + kAuctionV.str() + "\"");
      }
    }
    AuctionState next = finclear::auction_step(*session->auction, player);
    const SolutionSet set = find_solutions(next.system, options_.solver);
    session->auction = next;
    session->current = next.system;
    session->journal.push_back({std::nullopt, player});
    snapshot(id, *session);
    Json out;
    out["id"] = id;
    out["move"] = auction_to_json(next)["history"].back();
    out["auction"] = auction_to_json(next);
    out["system"] = system_to_json(next.system);
    out["solutions"] = solutions_to_json(set);
    return {200, std::move(out)};
  });
}

void Service::bind(httplib::Server& server) {
  using httplib::Request;
  using httplib::Response;
  auto reply = [](Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(".*", [](const Request&, Response& res) { res.status = 204; });

  server.Post("/systems", [this, reply](const Request& req, Response& res) { reply(res, create_system(req.body)); });
  server.Get(R"(/systems/([^/]+))", [this, reply](const Request& req, Response& res) {
    reply(res, get_system(req.matches[1]));
  });
  server.Get(R"(/systems/([^/]+)/solutions)", [this, reply](const Request& req, Response& res) {
    const bool all = req.has_param("all") && req.get_param_value("all") != "false" && req.get_param_value("all") != "0";
    reply(res, solutions(req.matches[1], all));
  });
  server.Post(R"(/systems/([^/]+)/actions/preview)", [this, reply](const Request& req, Response& res) {
    reply(res, preview(req.matches[1], req.body));
  });
  server.Post(R"(/systems/([^/]+)/actions/commit)", [this, reply](const Request& req, Response& res) {
    reply(res, commit(req.matches[1], req.body));
  });
  server.Post(R"(/systems/([^/]+)/undo)", [this, reply](const Request& req, Response& res) {
    reply(res, undo(req.matches[1]));
  });
  server.Get("/scenarios", [this, reply](const Request&, Response& res) { reply(res, list_scenarios()); });
  server.Post(R"(/scenarios/([^/]+))", [this, reply](const Request& req, Response& res) {
    reply(res, create_scenario(req.matches[1], req.body));
  });
  server.Get(R"(/games/([^/]+)/matrix)", [this, reply](const Request& req, Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    reply(res, game_matrix(req.matches[1], query));
  });
  server.Post(R"(/auction/([^/]+)/step)", [this, reply](const Request& req, Response& res) {
    reply(res, auction_step(req.matches[1], req.body));
  });
}

int serve(const std::string& host, int port, ServiceOptions options) {
  Service service(std::move(options));
  httplib::Server server;
  service.bind(server);
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace finclear
