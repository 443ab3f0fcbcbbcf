#include "dqops/cli.hpp"

#include <csignal>
#include <filesystem>
#include <sstream>

#include "CLI11.hpp"
#include "dqops/reports.hpp"
#include "dqops/service.hpp"

namespace dqops {

namespace {

namespace fs = std::filesystem;

struct CleanArgs {
  std::string data, candidates, validation, truth;
  std::string policy = "cpclean";
  std::string stop = "all_certain";
  std::string normalization = "minmax";
  std::string counting = "enumerate";
  std::vector<std::string> generators{"mean", "median", "class_mean", "observed_top_k"};
  std::uint64_t seed = 0;
  std::size_t k = 1;
  std::uint64_t max_worlds = 1'000'000;
};

struct FeasibilityArgs {
  std::string train, validation;
  std::vector<std::string> embeddings{"identity"};
  std::string noise_sweep;
  std::string normalization = "minmax";
  std::uint64_t seed = 0;
};

struct CiArgs {
  std::string condition;
  double delta = 0.05;
  std::string mode = "adaptive_binary";
  std::uint64_t test_size = 0;
  std::string ledger, old_preds, new_preds, truth;
  std::uint64_t reuses = 1;
  std::string ill_defined = "force_reject";
  bool json = false;
  bool force = false;
};

struct PickArgs {
  std::string stream, truth;
  std::uint64_t budget = 0;
  std::optional<double> eta;
  double q_min = 0.0;
  std::uint64_t seed = 0;
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
};

std::vector<double> parse_rho_list(const std::string& text) {
  std::vector<double> out;
  for (auto tok : split(text, ',')) {
    if (trim(tok).empty()) continue;
    const auto v = parse_double(trim(tok));
    if (!v) throw ConfigError("bad noise rate '" + std::string(tok) + "'");
    out.push_back(*v);
  }
  return out;
}

int clean_simulate(const CleanArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<RepairGenerator> generators;
  for (const auto& g : a.generators) generators.push_back(repair_generator_from_string(g));
  const auto candidates = a.candidates.empty() ? std::string{} : read_file(a.candidates);
  auto data = load_incomplete(read_file(a.data), candidates, generators);
  auto validation = load_feature_table(a.validation);
  const auto truth = parse_cell_truth(read_file(a.truth), data);

  CleaningConfig cfg;
  cfg.knn = KnnConfig{a.k, normalization_from_string(a.normalization)};
  cfg.world_cap = a.max_worlds;
  cfg.method = counting_method_from_string(a.counting);
  CleaningSession session(std::move(data), std::move(validation), cfg);
  const std::size_t total = session.validation().size();
  const double initial = session.prediction_entropy();
  std::optional<std::size_t> certain_at;
  if (session.certain_count() == total) certain_at = 0;

  const auto steps = simulate_cleaning(session, truth, cleaning_policy_from_string(a.policy), Seed{a.seed},
                                       stop_condition_from_string(a.stop));
  for (const auto& s : steps) {
    out << cleaning_step_json(s).dump() << '\n';
    if (!certain_at && s.certain == total) certain_at = s.step;
  }
  err << "policy " << a.policy << ", " << session.world_count() << " worlds, initial entropy "
      << format_double(initial) << " bits\n";
  err << "repairs: " << steps.size() << '\n';
  if (certain_at) {
    err << "steps to all-certain: " << *certain_at << '\n';
  } else {
    err << "steps to all-certain: not reached\n";
  }
  return exit_ok;
}

int run_feasibility(const FeasibilityArgs& a, std::ostream& out, std::ostream& err) {
  const auto train = parse_dataset_auto(read_file(a.train));
  const auto validation = parse_dataset_auto(read_file(a.validation), train.classes);
  std::vector<Embedding> embeddings;
  for (const auto& spec : a.embeddings) embeddings.push_back(load_embedding(spec));
  const auto report = feasibility_job(train, validation, embeddings, parse_rho_list(a.noise_sweep), Seed{a.seed},
                                      normalization_from_string(a.normalization));
  out << report.dump() << '\n';
  const auto& best = report.at("overall");
  err << "best embedding " << best.at("embedding").get<std::string>() << ": BER in ["
      << format_double(best.at("ber_lower").get<double>()) << ", " << format_double(best.at("ber_upper").get<double>())
      << "], max accuracy " << format_double(best.at("max_accuracy").get<double>()) << '\n';
  return exit_ok;
}

int ci_plan(const CiArgs& a, std::ostream& out, std::ostream& err) {
  const auto cond = parse_condition(a.condition);
  const auto mode = reuse_mode_from_string(a.mode);
  ReusePolicy{1, a.delta, mode}.validate();
  const auto plan = ci_plan_job(cond, a.delta, mode, a.test_size);
  if (a.json) {
    out << plan.dump() << '\n';
  } else {
    out << plan.at("max_reuses").get<std::uint64_t>() << '\n';
  }
  err << "one use needs " << plan.at("single_use_requirement").get<std::uint64_t>() << " samples for `"
      << cond.to_string() << "`\n";
  return exit_ok;
}

int ci_init(const CiArgs& a, std::ostream& out, std::ostream& err) {
  if (fs::exists(a.ledger) && !a.force) throw ConfigError("ledger '" + a.ledger + "' exists (use --force)");
  const ReusePolicy policy{a.reuses, a.delta, reuse_mode_from_string(a.mode), ill_defined_from_string(a.ill_defined)};
  const auto ledger = make_ledger(policy, parse_dataset_auto(read_file(a.truth)));
  write_file(a.ledger, ledger_to_json(ledger));
  if (a.json) out << ledger_to_json(ledger) << '\n';
  err << "ledger " << a.ledger << ": " << a.reuses << " uses, test set " << ledger.fingerprint.substr(0, 12) << '\n';
  return exit_ok;
}

int ci_commit(const CiArgs& a, std::ostream& out, std::ostream& err) {
  const auto cond = parse_condition(a.condition);
  const auto ledger = ledger_from_json(read_file(a.ledger));
  const auto truth = parse_dataset_auto(read_file(a.truth));
  const auto old_preds = parse_prediction_column(read_file(a.old_preds), truth.classes);
  const auto new_preds = parse_prediction_column(read_file(a.new_preds), truth.classes);
  const auto outcome = ci_commit_job(ledger, truth, old_preds, new_preds, cond);
  const auto status = outcome.result.at("status").get<std::string>();
  if (a.json) out << outcome.result.dump() << '\n';
  if (!outcome.ledger) {
    err << "test set refresh required\n";
    return exit_refresh;
  }
  write_file(a.ledger, ledger_to_json(*outcome.ledger));
  if (!a.json) out << status << '\n';
  err << "score " << format_double(outcome.result.at("score").get<double>()) << " for `" << cond.to_string()
      << "`, use " << outcome.ledger->used << " of " << outcome.ledger->policy.reuses
      << (outcome.result.at("ill_defined").get<bool>() ? ", inside the epsilon band" : "") << '\n';
  return status == "pass" ? exit_ok : exit_fail;
}

int pick_simulate(const PickArgs& a, std::ostream& out, std::ostream& err) {
  const auto stream = parse_stream_csv(read_file(a.stream));
  const auto truths = parse_truth_csv(read_file(a.truth), stream);
  const std::size_t m = stream.front().predictions.size();
  PredictionMatrix matrix(stream.size(), m);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    for (std::size_t i = 0; i < m; ++i) matrix.at(t, i) = stream[t].predictions[i];
  }
  PickerConfig cfg{m, a.budget, a.eta.value_or(default_eta(m, a.budget)), Seed{a.seed}, a.q_min};
  const auto sim = simulate_picker(matrix, truths, cfg);
  for (const auto& row : sim.trace) out << picker_trace_json(row).dump() << '\n';
  out << Json{{"final_pick", sim.final_pick}, {"queries", sim.queries}}.dump() << '\n';
  err << "final pick: model " << sim.final_pick << ", " << sim.queries << " queries of budget " << a.budget
      << ", regret " << format_double(sim.trace.empty() ? 0.0 : sim.trace.back().regret) << '\n';
  return exit_ok;
}

HttpService* active_server = nullptr;

void stop_server(int) {
  if (active_server) active_server->stop();
}

int serve(const ServeArgs& a, std::ostream&, std::ostream& err) {
  ServiceOptions options;
  options.data_dir = a.data_dir.empty() ? default_data_dir() : fs::path(a.data_dir);
  ServiceCore core(options);
  HttpService http(core);
  const int port = http.bind(a.host, a.port);
  err << "listening on " << a.host << ':' << port << ", data in " << options.data_dir.string() << std::endl;
  active_server = &http;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  http.listen();
  active_server = nullptr;
  return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data-quality tooling for ML pipelines", "dqops"};
  app.set_version_flag("--version", version_string);
  app.require_subcommand(1);

  CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "Cleaning prioritization over incomplete training data");
  clean_cmd->require_subcommand(1);
  auto* clean_sim = clean_cmd->add_subcommand("simulate", "Replay a cleaning policy against known clean values");
  clean_sim->add_option("--data", clean.data, "Training CSV with ? for missing cells")->required();
  clean_sim->add_option("--candidates", clean.candidates, "Candidate repairs JSON sidecar");
  clean_sim->add_option("--validation", clean.validation, "Validation feature CSV")->required();
  clean_sim->add_option("--truth", clean.truth, "Clean values: JSON {\"values\":{\"r,c\":v}} or clean CSV")->required();
  clean_sim->add_option("--policy", clean.policy, "cpclean or random")->capture_default_str();
  clean_sim->add_option("--seed", clean.seed, "Seed for the random policy")->capture_default_str();
  clean_sim->add_option("--stop", clean.stop, "all_certain or all_clean")->capture_default_str();
  clean_sim->add_option("-k,--k", clean.k, "Neighbors (odd)")->capture_default_str();
  clean_sim->add_option("--normalization", clean.normalization, "minmax or none")->capture_default_str();
  clean_sim->add_option("--counting", clean.counting, "enumerate or sort_count")->capture_default_str();
  clean_sim->add_option("--max-worlds", clean.max_worlds, "World cap for enumeration")->capture_default_str();
  clean_sim->add_option("--generators", clean.generators, "Candidate generators for cells the sidecar omits")
      ->delimiter(',')
      ->capture_default_str();

  FeasibilityArgs feas;
  auto* feas_cmd = app.add_subcommand("feasibility", "Bayes error bounds from 1-NN holdout error");
  feas_cmd->add_option("--train", feas.train, "Training dataset (CSV or JSON)")->required();
  feas_cmd->add_option("--validation", feas.validation, "Validation dataset (CSV or JSON)")->required();
  feas_cmd->add_option("--embeddings", feas.embeddings, "identity or NAME:TRAIN_CSV:VALIDATION_CSV")
      ->capture_default_str();
  feas_cmd->add_option("--noise-sweep", feas.noise_sweep, "Comma-separated label noise rates");
  feas_cmd->add_option("--seed", feas.seed, "Noise seed")->capture_default_str();
  feas_cmd->add_option("--normalization", feas.normalization, "minmax or none")->capture_default_str();

  CiArgs ci;
  auto* ci_cmd = app.add_subcommand("ci", "Statistically bounded model gating");
  ci_cmd->require_subcommand(1);
  auto* plan_cmd = ci_cmd->add_subcommand("plan", "How many commits a test set supports");
  plan_cmd->add_option("--condition", ci.condition, "e.g. \"n - o > 0.02 +/- 0.01\"")->required();
  plan_cmd->add_option("--delta", ci.delta, "Total error probability")->capture_default_str();
  plan_cmd->add_option("--mode", ci.mode, "non_adaptive or adaptive_binary")->capture_default_str();
  plan_cmd->add_option("--test-size", ci.test_size, "Test set size")->required();
  plan_cmd->add_flag("--json", ci.json, "Print the full plan as JSON");
  auto* init_cmd = ci_cmd->add_subcommand("init", "Create a ledger bound to a test set");
  init_cmd->add_option("--ledger", ci.ledger, "Ledger file to create")->required();
  init_cmd->add_option("--truth", ci.truth, "Test set (CSV or JSON)")->required();
  init_cmd->add_option("--reuses", ci.reuses, "Commits allowed on this test set")->capture_default_str();
  init_cmd->add_option("--delta", ci.delta, "Total error probability")->capture_default_str();
  init_cmd->add_option("--mode", ci.mode, "non_adaptive or adaptive_binary")->capture_default_str();
  init_cmd->add_option("--ill-defined", ci.ill_defined, "force_accept or force_reject")->capture_default_str();
  init_cmd->add_flag("--force", ci.force, "Overwrite an existing ledger");
  init_cmd->add_flag("--json", ci.json, "Print the ledger");
  auto* commit_cmd = ci_cmd->add_subcommand("commit", "Gate a new model against the old one");
  commit_cmd->add_option("--ledger", ci.ledger, "Ledger file")->required();
  commit_cmd->add_option("--old", ci.old_preds, "Old model predictions, one label per line")->required();
  commit_cmd->add_option("--new", ci.new_preds, "New model predictions, one label per line")->required();
  commit_cmd->add_option("--truth", ci.truth, "Test set (CSV or JSON)")->required();
  commit_cmd->add_option("--condition", ci.condition, "Test condition")->required();
  commit_cmd->add_flag("--json", ci.json, "Print the result as JSON");

  PickArgs pick;
  auto* pick_cmd = app.add_subcommand("pick", "Label-efficient online model selection");
  pick_cmd->require_subcommand(1);
  auto* pick_sim = pick_cmd->add_subcommand("simulate", "Replay a labeled stream");
  pick_sim->add_option("--stream", pick.stream, "item_id,pred_0,...,pred_{m-1}")->required();
  pick_sim->add_option("--truth", pick.truth, "item_id,label")->required();
  pick_sim->add_option("--budget", pick.budget, "Label budget")->required();
  pick_sim->add_option("--eta", pick.eta, "Learning rate (default sqrt(8 ln m / budget))");
  pick_sim->add_option("--seed", pick.seed, "Query coin seed")->capture_default_str();
  pick_sim->add_option("--q-min", pick.q_min, "Query probability floor on disagreement")->capture_default_str();

  ServeArgs srv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--port", srv.port, "Port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--host", srv.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--data-dir", srv.data_dir, "Persistence root (default $DQOPS_DATA_DIR)");

  std::vector<std::string> storage{"dqops"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (clean_sim->parsed()) return clean_simulate(clean, out, err);
    if (feas_cmd->parsed()) return run_feasibility(feas, out, err);
    if (plan_cmd->parsed()) return ci_plan(ci, out, err);
    if (init_cmd->parsed()) return ci_init(ci, out, err);
    if (commit_cmd->parsed()) return ci_commit(ci, out, err);
    if (pick_sim->parsed()) return pick_simulate(pick, out, err);
    if (serve_cmd->parsed()) return serve(srv, out, err);
  } catch (const RefreshRequired& e) {
    err << e.what() << '\n';
    return exit_refresh;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const ConditionParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_data;
  }
  err << app.help();
  return exit_usage;
}

}  // namespace dqops
