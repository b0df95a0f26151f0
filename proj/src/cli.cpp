#include "finclear/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "finclear/document.hpp"
#include "finclear/games.hpp"
#include "finclear/service.hpp"

namespace finclear {

namespace {

std::string fixed(double x, int precision) {
  if (std::abs(x) < 0.5 * std::pow(10.0, -precision)) x = 0.0;
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << x;
  return os.str();
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

double default_tolerance() {
  const char* env = std::getenv("FINCLEAR_TOLERANCE");
  if (!env || !*env) return SolverConfig{}.tolerance;
  char* end = nullptr;
  const double tol = std::strtod(env, &end);
  if (*end != '\0' || !(tol > 0.0) || !std::isfinite(tol)) {
    throw CLI::ValidationError("FINCLEAR_TOLERANCE", std::string("not a positive number: ") + env);
  }
  return tol;
}

BankId split_pair(const std::string& text, const char* flag, std::string& second) {
  const auto pos = text.find(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == text.size()) {
    throw CLI::ValidationError(flag, "expected A:B, got '" + text + "'");
  }
  second = text.substr(pos + 1);
  return text.substr(0, pos);
}

double parse_amount(const std::string& text, const char* flag) {
  char* end = nullptr;
  const double x = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || !std::isfinite(x)) {
    throw CLI::ValidationError(flag, "not a number: '" + text + "'");
  }
  return x;
}

void print_solutions(std::ostream& out, const FinancialSystem& sys, const SolutionSet& set, bool all) {
  out << "multiplicity: " << to_string(set.multiplicity) << " (" << set.size()
      << (set.size() == 1 ? " solution" : " solutions") << ")\n";
  for (const auto& pattern : set.family_patterns) {
    out << "suspected solution family with default set {";
    for (std::size_t i = 0; i < pattern.size(); ++i) out << (i ? ", " : "") << pattern[i].str();
    out << "}\n";
  }
  for (std::size_t s = 0; s < set.size() && (all || s == 0); ++s) {
    const auto& st = set.solutions[s];
    out << "solution " << s + 1 << " (residual " << std::scientific << std::setprecision(2) << st.residual
        << std::defaultfloat << ")\n";
    out << "  " << pad("bank", 12) << pad("recovery", 12) << pad("assets", 12) << pad("liabilities", 13)
        << "payoff\n";
    for (std::size_t i = 0; i < sys.size(); ++i) {
      out << "  " << pad(st.banks[i].str(), 12) << pad(fixed(st.r[i], 6), 12) << pad(fixed(st.assets[i], 6), 12)
          << pad(fixed(st.ledger.total[i], 6), 13) << fixed(st.payoffs[i], 6) << "\n";
    }
  }
  if (!all && set.size() > 1) out << "(" << set.size() - 1 << " more; use --all)\n";
}

std::string list_values(const std::vector<double>& xs, int precision) {
  std::string s = "{";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fixed(xs[i], precision);
  return s + "}";
}

std::string payoff_tuple(const std::vector<double>& xs) {
  std::string s = "(";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fixed(xs[i], 3);
  return s + ")";
}

void emit(std::ostream& out, const Json& doc) { out << doc.dump(2) << "\n"; }

struct Common {
  std::string format = "text";
  double tolerance = 0.0;
  bool json() const { return format == "json"; }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clearing, interventions and games on financial networks of debts and CDSs", "finclear"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--format", common.format, "Output format")->check(CLI::IsMember({"text", "json"}));

  SolverConfig cfg;
  bool explicit_tol = false;
  double tol = 0.0;
  std::uint64_t seed = cfg.seed;
  bool multistart_only = false;
  auto add_solver_flags = [&](CLI::App* sub) {
    sub->add_option("--tol", tol, "Residual tolerance (default 1e-9 or FINCLEAR_TOLERANCE)")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { explicit_tol = true; });
    sub->add_option("--seed", seed, "Seed of the random multistarts");
    sub->add_flag("--multistart-only", multistart_only, "Skip default-set enumeration (no size cap)");
  };

  std::string path;

  auto* validate = app.add_subcommand("validate", "Check a system document");
  validate->add_option("path", path, "System or scenario document")->required();

  bool all = false;
  auto* solve = app.add_subcommand("solve", "Find the clearing solutions of a system");
  solve->add_option("path", path, "System or scenario document")->required();
  solve->add_flag("--all", all, "List every solution, not only the first");
  add_solver_flags(solve);

  std::string bank, remove_from, donate_spec, action_json;
  std::vector<std::string> reprioritize_specs;
  double fraction = 1.0, inject_amount = 0.0;
  bool inject = false;
  auto* assess_cmd = app.add_subcommand("assess", "Compare the solutions before and after an action");
  assess_cmd->add_option("path", path, "System or scenario document")->required();
  assess_cmd->add_option("--bank", bank, "Acting bank")->required();
  auto* o_remove = assess_cmd->add_option("--remove", remove_from, "Remove the incoming debt from DEBTOR");
  assess_cmd->add_option("--fraction", fraction, "Fraction of the debt to remove")->check(CLI::Range(0.0, 1.0));
  auto* o_donate = assess_cmd->add_option("--donate", donate_spec, "Donate to a bank, as BANK:AMOUNT");
  auto* o_inject = assess_cmd->add_option("--inject", inject_amount, "Add AMOUNT to the bank's own external assets")
                       ->each([&](const std::string&) { inject = true; });
  auto* o_repr = assess_cmd->add_option("--reprioritize", reprioritize_specs,
                                        "Move an outgoing contract, as CREDITOR[/REFERENCE]:PRIORITY (repeatable)");
  auto* o_json = assess_cmd->add_option("--action-json", action_json, "Action as a JSON object");
  add_solver_flags(assess_cmd);

  std::string contract, objective = "worst";
  std::size_t steps = 64;
  auto* scan = app.add_subcommand("scan-gamma", "Payoff of the acting bank over removed fractions of a debt");
  scan->add_option("path", path, "System or scenario document")->required();
  scan->add_option("--contract", contract, "Debt as DEBTOR:CREDITOR")->required();
  scan->add_option("--bank", bank, "Acting bank (must be the creditor; default: the creditor)");
  scan->add_option("--steps", steps, "Grid steps")->check(CLI::Range(1, 100000));
  scan->add_option("--objective", objective, "worst or expected payoff over solutions")
      ->check(CLI::IsMember({"worst", "expected"}));
  add_solver_flags(scan);

  std::string name;
  ScenarioParams params;
  double gamma0 = 0, delta = 0, epsilon = 0;
  int k = 0;
  std::vector<std::function<void()>> resolve_params;
  auto add_params = [&](CLI::App* sub) {
    auto* g = sub->add_option("--gamma0", gamma0, "Removed fraction of partial_removal");
    auto* d = sub->add_option("--delta", delta, "CDS weight of reprioritize");
    auto* e = sub->add_option("--epsilon", epsilon, "Donation step of dollar_auction");
    auto* n = sub->add_option("--k", k, "Number of volunteers");
    resolve_params.push_back([&, g, d, e, n] {
      if (g->count()) params.gamma0 = gamma0;
      if (d->count()) params.delta = delta;
      if (e->count()) params.epsilon = epsilon;
      if (n->count()) params.k = k;
    });
  };

  bool show_matrix = false, show_nash = false;
  auto* game = app.add_subcommand("game", "Payoff matrix and equilibria of a scenario");
  game->add_option("name", name, "Scenario name")->required();
  game->add_flag("--matrix", show_matrix, "Print the payoff matrix");
  game->add_flag("--nash", show_nash, "Print pure Nash equilibria and dominant strategies");
  add_params(game);
  add_solver_flags(game);

  double auction_epsilon = 0.01;
  std::size_t rounds = 10;
  auto* auction = app.add_subcommand("auction", "Simulate the dollar-auction escalation");
  auction->add_option("--epsilon", auction_epsilon, "Minimum donation step")->check(CLI::PositiveNumber);
  auction->add_option("--rounds", rounds, "Number of moves");

  std::string output;
  bool list = false;
  auto* scenario = app.add_subcommand("scenario", "Export a scenario document");
  scenario->add_option("name", name, "Scenario name");
  scenario->add_flag("--list", list, "List the scenario catalogue");
  scenario->add_option("-o,--output", output, "Write to a file instead of stdout");
  add_params(scenario);

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string snapshot_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--host", host, "Interface to bind");
  serve_cmd->add_option("--port", port, "Port (default 8080 or FINCLEAR_PORT)")->envname("FINCLEAR_PORT");
  serve_cmd->add_option("--snapshot-dir", snapshot_dir, "Persist sessions to this directory");
  add_solver_flags(serve_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    for (const auto& f : resolve_params) f();
    common.tolerance = explicit_tol ? tol : default_tolerance();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }
  cfg.tolerance = common.tolerance;
  cfg.seed = seed;
  cfg.multistart_only = multistart_only;

  try {
    if (validate->parsed()) {
      ValidationReport report;
      try {
        report = validate_system(load_document_file(path).system);
      } catch (const ValidationError& e) {
        report = e.report();
      }
      if (common.json()) {
        emit(out, validation_to_json(report));
      } else if (report.ok()) {
        out << "ok\n";
      } else {
        for (const auto& v : report.violations) out << v.code << ": " << v.message << "\n";
      }
      return report.ok() ? exit_ok : exit_validation;
    }

    if (solve->parsed()) {
      const auto doc = load_document_file(path);
      const auto set = find_solutions(doc.system, cfg);
      if (common.json()) {
        Json j;
        j["system"] = system_to_json(doc.system);
        j["solutions"] = solutions_to_json(set, all);
        emit(out, j);
      } else {
        print_solutions(out, doc.system, set, all);
      }
      return exit_ok;
    }

    if (assess_cmd->parsed()) {
      const auto doc = load_document_file(path);
      const int chosen = static_cast<int>(o_remove->count() > 0) + static_cast<int>(o_donate->count() > 0) +
                         static_cast<int>(o_inject->count() > 0) + static_cast<int>(o_repr->count() > 0) +
                         static_cast<int>(o_json->count() > 0);
      if (chosen != 1) {
        err << "assess needs exactly one of --remove, --donate, --inject, --reprioritize, --action-json\n";
        return exit_usage;
      }
      Action action;
      try {
        if (!remove_from.empty()) {
          action = RemoveIncomingDebt{remove_from, bank, fraction};
        } else if (!donate_spec.empty()) {
          std::string amount;
          const BankId to = split_pair(donate_spec, "--donate", amount);
          action = Donate{bank, to, parse_amount(amount, "--donate")};
        } else if (inject) {
          action = InjectOwnAssets{bank, inject_amount};
        } else if (!reprioritize_specs.empty()) {
          Reprioritize r{bank, {}};
          for (const auto& spec : reprioritize_specs) {
            std::string level;
            std::string target = split_pair(spec, "--reprioritize", level).str();
            PriorityAssignment pa;
            if (auto slash = target.find('/'); slash != std::string::npos) {
              pa.reference = BankId(target.substr(slash + 1));
              target = target.substr(0, slash);
            }
            pa.creditor = target;
            const double p = parse_amount(level, "--reprioritize");
            if (p != std::floor(p)) throw CLI::ValidationError("--reprioritize", "priority must be an integer");
            pa.priority = static_cast<int>(p);
            r.assignments.push_back(std::move(pa));
          }
          action = r;
        } else {
          action = parse_action(parse_json_text(action_json));
        }
      } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
      }
      const auto report = assess(doc.system, action, bank, cfg);
      if (common.json()) {
        emit(out, effect_to_json(report));
      } else {
        out << describe(action) << "\n";
        out << "cost: " << fixed(report.cost, 6) << "\n";
        out << "before: " << to_string(report.before.multiplicity) << ", payoffs of " << bank.c_str() << " "
            << list_values(report.payoffs_before, 6) << ", recovery " << list_values(report.recovery_before, 6) << "\n";
        out << "after:  " << to_string(report.after.multiplicity) << ", payoffs of " << bank.c_str() << " "
            << list_values(report.payoffs_after, 6) << ", recovery " << list_values(report.recovery_after, 6) << "\n";
        out << "net change: worst " << fixed(report.min_payoff_delta, 6) << ", best "
            << fixed(report.max_payoff_delta, 6) << "\n";
      }
      return exit_ok;
    }

    if (scan->parsed()) {
      const auto doc = load_document_file(path);
      std::string creditor;
      BankId debtor;
      try {
        debtor = split_pair(contract, "--contract", creditor);
      } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
      }
      if (bank.empty()) bank = creditor;
      if (bank != creditor) throw ActionError("only the creditor '" + creditor + "' can remove this debt");
      const auto result = optimize_partial_removal(
          doc.system, debtor, bank, steps, cfg,
          objective == "worst" ? PayoffObjective::worst_case : PayoffObjective::expected);
      if (common.json()) {
        emit(out, curve_to_json(result, debtor, bank));
      } else {
        out << pad("fraction", 12) << "payoff\n";
        for (const auto& [g, q] : result.curve) out << pad(fixed(g, 6), 12) << fixed(q, 6) << "\n";
        out << "best fraction " << fixed(result.best_fraction, 6) << " with payoff " << fixed(result.best_payoff, 6)
            << "\n";
      }
      return exit_ok;
    }

    if (game->parsed()) {
      const auto sc = build_scenario(name, params);
      const auto matrix = payoff_matrix(sc, cfg);
      if (common.json()) {
        Json j = matrix_to_json(matrix);
        j["params"] = params_to_json(sc.params);
        emit(out, j);
        return exit_ok;
      }
      if (!show_matrix && !show_nash) show_matrix = show_nash = true;
      out << sc.name << ": players";
      for (std::size_t i = 0; i < sc.players.size(); ++i) out << (i ? ", " : " ") << sc.players[i].str();
      out << "\n";
      if (show_matrix) {
        out << "payoffs net of costs:\n";
        for (const auto& cell : matrix.cells) {
          out << "  " << pad(matrix.profile_label(cell.profile), 28) << payoff_tuple(cell.payoffs);
          if (cell.solutions.size() > 1) out << "  [" << to_string(cell.solutions.multiplicity) << ", worst case]";
          out << "\n";
        }
      }
      if (show_nash) {
        out << "pure Nash equilibria:\n";
        const auto nash = find_pure_nash(matrix);
        if (nash.empty()) out << "  none\n";
        for (const auto& p : nash) {
          out << "  " << pad(matrix.profile_label(p), 28) << payoff_tuple(matrix.at(p).payoffs) << "\n";
        }
        out << "dominant strategies:\n";
        for (std::size_t i = 0; i < sc.players.size(); ++i) {
          const auto d = find_dominant(matrix, i);
          out << "  " << sc.players[i].str() << ": " << (d ? matrix.labels[i][*d] : std::string("none")) << "\n";
        }
      }
      return exit_ok;
    }

    if (auction->parsed()) {
      const auto state = auction_run(make_auction(auction_epsilon), rounds);
      if (common.json()) {
        emit(out, auction_to_json(state));
        return exit_ok;
      }
      out << "epsilon " << fixed(state.epsilon, 4) << ", delta " << fixed(state.delta, 4) << "\n";
      out << pad("round", 7) << pad("player", 8) << pad("move", 16) << pad("e_u", 9) << pad("e_v", 9)
          << pad("payoff", 9) << "spent\n";
      for (std::size_t i = 0; i < state.history.size(); ++i) {
        const auto& m = state.history[i];
        out << pad(std::to_string(i + 1), 7) << pad(m.player.str(), 8)
            << pad(m.passed ? "pass" : "donate " + fixed(m.amount, 4), 16) << pad(fixed(m.e_u, 4), 9)
            << pad(fixed(m.e_v, 4), 9) << pad(fixed(m.payoff_after, 4), 9) << fixed(m.spent, 4) << "\n";
      }
      const auto summary = auction_solutions(state);
      out << "final: " << to_string(summary.kind) << ", spent " << kAuctionU.str() << " "
          << fixed(state.spent(kAuctionU), 4) << ", " << kAuctionV.str() << " " << fixed(state.spent(kAuctionV), 4)
          << "\n";
      return exit_ok;
    }

    if (scenario->parsed()) {
      if (list) {
        for (const auto& n : scenario_names()) out << pad(n, 18) << scenario_summary(n) << "\n";
        return exit_ok;
      }
      if (name.empty()) {
        err << "scenario needs a name (or --list)\n";
        return exit_usage;
      }
      const std::string text = scenario_to_json(build_scenario(name, params)).dump(2) + "\n";
      if (output.empty()) {
        out << text;
      } else {
        std::ofstream file(output, std::ios::binary | std::ios::trunc);
        if (!file) throw InputError("cannot write '" + output + "'");
        file << text;
      }
      return exit_ok;
    }

    if (serve_cmd->parsed()) {
      ServiceOptions options;
      options.solver = cfg;
      if (!snapshot_dir.empty()) options.snapshot_dir = snapshot_dir;
      err << "serving on http://" << host << ":" << port << "\n";
      if (serve(host, port, options) != 0) {
        err << "cannot listen on " << host << ":" << port << "\n";
        return exit_usage;
      }
      return exit_ok;
    }
  } catch (const ValidationError& e) {
    err << "validation failed: " << e.what() << "\n";
    return exit_validation;
  } catch (const CapabilityError& e) {
    err << e.what() << "\n";
    return exit_capability;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_validation;
  }
  return exit_usage;
}

}  // namespace finclear
