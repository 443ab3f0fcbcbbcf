#include "dqops/service.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <random>

#include "dqops/rng.hpp"
#include "httplib.h"

namespace dqops {

namespace {

namespace fs = std::filesystem;

struct HttpError : Error {
  HttpError(int status, const std::string& what, Json extra = Json::object())
      : Error(what), status(status), extra(std::move(extra)) {}
  int status;
  Json extra;
};

Response error(int status, const std::string& message, Json extra = Json::object()) {
  extra["error"] = message;
  return {status, std::move(extra)};
}

std::string now_text() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_token(std::string_view s) {
  if (s.empty() || s.size() > 128) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
  }
  return s.find("..") == std::string_view::npos && s.front() != '.';
}

const Json& field(const Json& req, const char* name) {
  if (!req.is_object() || !req.contains(name)) throw HttpError(400, std::string("missing field '") + name + "'");
  return req.at(name);
}

std::string string_field(const Json& req, const char* name) {
  const auto& v = field(req, name);
  if (!v.is_string()) throw HttpError(400, std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t uint_field(const Json& req, const char* name) {
  const auto& v = field(req, name);
  if (!v.is_number_unsigned()) throw HttpError(400, std::string("field '") + name + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

double number_field(const Json& req, const char* name) {
  const auto& v = field(req, name);
  if (!v.is_number()) throw HttpError(400, std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

CellId cell_field(const Json& req) {
  const auto& v = field(req, "cell");
  if (v.is_string()) return parse_cell_key(v.get<std::string>());
  if (v.is_array() && v.size() == 2 && v[0].is_number_unsigned() && v[1].is_number_unsigned()) {
    return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  }
  throw HttpError(400, "field 'cell' must be [row, col] or \"row,col\"");
}

Json cell_json(CellId cell) { return Json::array({cell.row, cell.col}); }

Json rows_json(const std::vector<FeatureVector>& rows) {
  Json out = Json::array();
  for (const auto& row : rows) {
    Json r = Json::array();
    for (double v : row) r.push_back(std::isnan(v) ? Json(nullptr) : Json(v));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<FeatureVector> rows_from_json(const Json& doc) {
  std::vector<FeatureVector> rows;
  for (const auto& r : doc) {
    FeatureVector row;
    for (const auto& v : r) row.push_back(v.is_null() ? std::nan("") : v.get<double>());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

fs::path default_data_dir() {
  if (const char* env = std::getenv("DQOPS_DATA_DIR"); env && *env) return env;
  return "dqops-data";
}

struct ServiceCore::Session {
  std::string id;
  std::string kind;
  std::uint64_t version = 0;
  std::string created;
  std::string updated;
  std::mutex mutex;

  std::optional<CleaningSession> cleaning;

  std::string stream_ref;
  std::vector<StreamItem> stream;
  std::size_t position = 0;  // next stream item to observe
  PickerConfig picker_cfg;
  std::optional<PickerState> picker;

  Json snapshot() const;
};

Json ServiceCore::Session::snapshot() const {
  Json doc{{"id", id}, {"kind", kind}, {"version", version}, {"created", created}, {"updated", updated}};
  if (cleaning) {
    const auto& s = *cleaning;
    const auto& d = s.data();
    doc["knn"] = {{"k", s.config().knn.k}, {"normalization", to_string(s.config().knn.normalization)}};
    doc["world_cap"] = s.config().world_cap;
    doc["counting"] = to_string(s.config().method);
    doc["classes"] = d.classes().names();
    doc["rows"] = rows_json(d.rows());
    doc["labels"] = d.labels();
    doc["candidates"] = Json::parse(candidates_to_json(d.candidates()));
    doc["validation"] = rows_json(s.validation());
    doc["scaler"] = {{"lower", s.scaler().lower()}, {"upper", s.scaler().upper()}};
    Json log = Json::array();
    for (const auto& r : s.log()) log.push_back({{"cell", cell_json(r.cell)}, {"value", r.value}});
    doc["log"] = std::move(log);
    doc["entropy_trace"] = s.entropy_trace();
  } else {
    const auto& p = *picker;
    doc["stream"] = stream_ref;
    doc["position"] = position;
    doc["config"] = {{"model_count", picker_cfg.model_count},
                     {"budget", picker_cfg.budget},
                     {"eta", picker_cfg.eta},
                     {"seed", picker_cfg.seed.value},
                     {"q_min", picker_cfg.q_min}};
    doc["log_weights"] = p.log_weights();
    doc["budget_remaining"] = p.budget_remaining();
    Json log = Json::array();
    for (const auto& q : p.query_log()) {
      log.push_back({{"round", q.round},
                     {"queried", q.queried},
                     {"label", q.label ? Json(*q.label) : Json(nullptr)},
                     {"probability", q.probability}});
    }
    doc["query_log"] = std::move(log);
    doc["pending"] = p.pending_item() ? Json(*p.pending_item()) : Json(nullptr);
  }
  return doc;
}

struct ServiceCore::Job {
  std::string status = "running";
  Json result;
  std::string error;
  std::chrono::steady_clock::time_point finished;
};

ServiceCore::ServiceCore(ServiceOptions options) : options_(std::move(options)) {
  fs::create_directories(options_.data_dir / "artifacts");
  fs::create_directories(options_.data_dir / "sessions");
  fs::create_directories(options_.data_dir / "ledgers");
}

ServiceCore::~ServiceCore() { wait_for_jobs(); }

void ServiceCore::wait_for_jobs() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

std::string ServiceCore::new_id() {
  static constexpr char hex[] = "0123456789abcdef";
  std::random_device rd;
  std::uint64_t bits = (std::uint64_t{rd()} << 32) ^ rd();
  {
    std::lock_guard lock(mutex_);
    bits ^= mix64(++id_counter_);
  }
  std::string id(16, '0');
  for (int i = 15; i >= 0; --i, bits >>= 4) id[static_cast<std::size_t>(i)] = hex[bits & 0xf];
  return id;
}

std::string ServiceCore::read_artifact(const std::string& ref) const {
  if (!is_token(ref)) throw HttpError(400, "malformed artifact ref '" + ref + "'");
  const auto path = options_.data_dir / "artifacts" / ref;
  if (!fs::exists(path)) throw HttpError(404, "unknown artifact '" + ref + "'");
  return read_file(path);
}

void ServiceCore::persist(const Session& session) const {
  const auto path = options_.data_dir / "sessions" / (session.id + ".json");
  const auto tmp = path.string() + ".tmp";
  write_file(tmp, session.snapshot().dump());
  fs::rename(tmp, path);
}

std::shared_ptr<ServiceCore::Session> ServiceCore::load_session(const std::string& id) {
  const auto path = options_.data_dir / "sessions" / (id + ".json");
  if (!fs::exists(path)) return nullptr;
  const auto doc = Json::parse(read_file(path));
  auto s = std::make_shared<Session>();
  s->id = id;
  s->kind = doc.at("kind").get<std::string>();
  s->version = doc.at("version").get<std::uint64_t>();
  s->created = doc.at("created").get<std::string>();
  s->updated = doc.at("updated").get<std::string>();
  if (s->kind == "cleaning") {
    IncompleteDataset data(LabelSpace(doc.at("classes").get<std::vector<std::string>>()),
                           rows_from_json(doc.at("rows")), doc.at("labels").get<std::vector<Label>>(),
                           parse_candidates_json(doc.at("candidates").dump()));
    CleaningConfig cfg;
    cfg.knn.k = doc.at("knn").at("k").get<std::size_t>();
    cfg.knn.normalization = normalization_from_string(doc.at("knn").at("normalization").get<std::string>());
    cfg.world_cap = doc.at("world_cap").get<std::uint64_t>();
    cfg.method = counting_method_from_string(doc.at("counting").get<std::string>());
    MinMaxScaler scaler(doc.at("scaler").at("lower").get<std::vector<double>>(),
                        doc.at("scaler").at("upper").get<std::vector<double>>());
    std::vector<RepairRecord> log;
    for (const auto& r : doc.at("log")) {
      log.push_back({{r.at("cell")[0].get<std::size_t>(), r.at("cell")[1].get<std::size_t>()},
                     r.at("value").get<double>()});
    }
    s->cleaning = CleaningSession::restore(std::move(data), rows_from_json(doc.at("validation")), cfg,
                                           std::move(scaler), std::move(log),
                                           doc.at("entropy_trace").get<std::vector<double>>());
  } else {
    s->stream_ref = doc.at("stream").get<std::string>();
    s->stream = parse_stream_csv(read_artifact(s->stream_ref));
    s->position = doc.at("position").get<std::size_t>();
    const auto& c = doc.at("config");
    s->picker_cfg = PickerConfig{c.at("model_count").get<std::size_t>(), c.at("budget").get<std::uint64_t>(),
                                 c.at("eta").get<double>(), Seed{c.at("seed").get<std::uint64_t>()},
                                 c.at("q_min").get<double>()};
    std::vector<QueryRecord> log;
    for (const auto& q : doc.at("query_log")) {
      QueryRecord rec{q.at("round").get<std::uint64_t>(), q.at("queried").get<bool>(), std::nullopt,
                      q.at("probability").get<double>()};
      if (!q.at("label").is_null()) rec.label = q.at("label").get<Label>();
      log.push_back(rec);
    }
    std::optional<std::string> pending;
    if (!doc.at("pending").is_null()) pending = doc.at("pending").get<std::string>();
    s->picker = PickerState::restore(s->picker_cfg, doc.at("log_weights").get<std::vector<double>>(),
                                     doc.at("budget_remaining").get<std::uint64_t>(), std::move(log),
                                     std::move(pending));
  }
  return s;
}

std::shared_ptr<ServiceCore::Session> ServiceCore::find_session(const std::string& id, const char* kind) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    if (auto it = sessions_.find(id); it != sessions_.end()) s = it->second;
  }
  if (!s && is_token(id)) {
    s = load_session(id);
    if (s) {
      std::lock_guard lock(mutex_);
      s = sessions_.try_emplace(id, s).first->second;
    }
  }
  if (!s || s->kind != kind) throw HttpError(404, std::string("unknown ") + kind + " session '" + id + "'");
  return s;
}

Response ServiceCore::put_artifact(std::string_view body) {
  const auto ref = sha256_hex(body);
  const auto path = options_.data_dir / "artifacts" / ref;
  if (!fs::exists(path)) {
    const auto tmp = path.string() + "." + new_id() + ".tmp";
    write_file(tmp, body);
    fs::rename(tmp, path);
  }
  return {201, Json{{"ref", ref}, {"size", body.size()}}};
}

// Cleaning sessions.

namespace {

Json cleaning_metrics(const CleaningSession& s) {
  return Json{{"world_count", s.world_count()},
              {"entropy", s.prediction_entropy()},
              {"certain_count", s.certain_count()},
              {"validation_size", s.validation().size()}};
}

bool cleaning_done(const CleaningSession& s) {
  return s.dirty_cells().empty() || s.certain_count() == s.validation().size();
}

}  // namespace

Response ServiceCore::create_cleaning(const Json& req) {
  const auto dataset_text = read_artifact(string_field(req, "dataset"));
  const auto validation_text = read_artifact(string_field(req, "validation"));
  std::string candidates_text;
  if (req.contains("candidates") && !req.at("candidates").is_null()) {
    candidates_text = read_artifact(string_field(req, "candidates"));
  }
  std::vector<RepairGenerator> generators;
  if (req.contains("generators")) {
    for (const auto& g : req.at("generators")) generators.push_back(repair_generator_from_string(g.get<std::string>()));
  }
  CleaningConfig cfg;
  if (req.contains("knn")) {
    const auto& knn = req.at("knn");
    if (knn.contains("k")) cfg.knn.k = uint_field(knn, "k");
    if (knn.contains("normalization")) cfg.knn.normalization = normalization_from_string(string_field(knn, "normalization"));
  }
  if (req.contains("world_cap")) cfg.world_cap = uint_field(req, "world_cap");
  if (req.contains("counting")) cfg.method = counting_method_from_string(string_field(req, "counting"));

  auto data = load_incomplete(dataset_text, candidates_text, generators);
  auto validation = parse_feature_table(validation_text);

  auto s = std::make_shared<Session>();
  s->id = new_id();
  s->kind = "cleaning";
  s->created = s->updated = now_text();
  try {
    s->cleaning.emplace(std::move(data), std::move(validation), cfg);
  } catch (const WorldCapExceeded& e) {
    return error(413, e.what(), Json{{"cap", e.cap()}, {"world_count", e.worlds()}});
  } catch (const WorldCountOverflow& e) {
    return error(413, e.what(), Json{{"cap", cfg.world_cap}});
  }
  persist(*s);
  {
    std::lock_guard lock(mutex_);
    sessions_[s->id] = s;
  }
  auto body = cleaning_metrics(*s->cleaning);
  body["session_id"] = s->id;
  body["version"] = s->version;
  return {201, std::move(body)};
}

Response ServiceCore::get_cleaning(const std::string& id) {
  auto s = find_session(id, "cleaning");
  std::lock_guard lock(s->mutex);
  const auto& c = *s->cleaning;
  auto body = cleaning_metrics(c);
  body["session_id"] = s->id;
  body["version"] = s->version;
  body["created"] = s->created;
  body["updated"] = s->updated;
  Json dirty = Json::array();
  for (auto cell : c.dirty_cells()) dirty.push_back(cell_json(cell));
  body["dirty_cells"] = std::move(dirty);
  body["entropy_trace"] = c.entropy_trace();
  Json repairs = Json::array();
  for (const auto& r : c.log()) repairs.push_back({{"cell", cell_json(r.cell)}, {"value", r.value}});
  body["repairs"] = std::move(repairs);
  return {200, std::move(body)};
}

Response ServiceCore::cleaning_suggestion(const std::string& id) {
  auto s = find_session(id, "cleaning");
  std::lock_guard lock(s->mutex);
  const auto& c = *s->cleaning;
  if (cleaning_done(c)) return {204, nullptr};
  const auto cell = c.suggest_next();
  return {200, Json{{"cell", cell_json(cell)},
                    {"candidates", c.data().candidates(cell)},
                    {"conditional_entropy", c.conditional_entropy(cell)},
                    {"version", s->version}}};
}

Response ServiceCore::cleaning_repair(const std::string& id, const Json& req) {
  auto s = find_session(id, "cleaning");
  const auto cell = cell_field(req);
  const double value = number_field(req, "value");
  const auto expected = uint_field(req, "expected_version");
  std::lock_guard lock(s->mutex);
  auto& c = *s->cleaning;
  if (expected != s->version) {
    return error(409, "version conflict", Json{{"version", s->version}});
  }
  if (!c.data().is_missing(cell)) return error(404, "unknown cell " + to_string(cell));
  if (!c.is_dirty(cell)) return error(409, "cell " + to_string(cell) + " is already repaired", Json{{"version", s->version}});
  c.apply_repair(cell, value);
  ++s->version;
  s->updated = now_text();
  persist(*s);
  auto body = cleaning_metrics(c);
  body["version"] = s->version;
  return {200, std::move(body)};
}

// Labeling sessions.

namespace {

Json picker_metrics(const PickerState& p) {
  return Json{{"pick", p.current_pick()}, {"weights", p.weights()}, {"budget_remaining", p.budget_remaining()}};
}

}  // namespace

Response ServiceCore::create_labeling(const Json& req) {
  auto s = std::make_shared<Session>();
  s->stream_ref = string_field(req, "stream");
  s->stream = parse_stream_csv(read_artifact(s->stream_ref));
  const std::size_t m = s->stream.front().predictions.size();
  if (req.contains("m") && uint_field(req, "m") != m) {
    throw HttpError(400, "stream carries " + std::to_string(m) + " models, request says " +
                             std::to_string(uint_field(req, "m")));
  }
  PickerConfig cfg;
  cfg.model_count = m;
  cfg.budget = uint_field(req, "budget");
  cfg.eta = req.contains("eta") && !req.at("eta").is_null() ? number_field(req, "eta") : default_eta(m, cfg.budget);
  cfg.seed = Seed{req.contains("seed") ? uint_field(req, "seed") : 0};
  if (req.contains("q_min")) cfg.q_min = number_field(req, "q_min");
  s->picker_cfg = cfg;
  s->picker.emplace(cfg);
  s->id = new_id();
  s->kind = "labeling";
  s->created = s->updated = now_text();
  persist(*s);
  {
    std::lock_guard lock(mutex_);
    sessions_[s->id] = s;
  }
  auto body = picker_metrics(*s->picker);
  body["session_id"] = s->id;
  body["version"] = s->version;
  body["eta"] = cfg.eta;
  body["stream_length"] = s->stream.size();
  return {201, std::move(body)};
}

Response ServiceCore::get_labeling(const std::string& id) {
  auto s = find_session(id, "labeling");
  std::lock_guard lock(s->mutex);
  const auto& p = *s->picker;
  auto body = picker_metrics(p);
  body["session_id"] = s->id;
  body["version"] = s->version;
  body["created"] = s->created;
  body["updated"] = s->updated;
  body["round"] = p.round();
  body["position"] = s->position;
  body["stream_length"] = s->stream.size();
  body["pending"] = p.pending_item() ? Json(*p.pending_item()) : Json(nullptr);
  body["done"] = !p.pending_item() && (p.budget_remaining() == 0 || s->position >= s->stream.size());
  return {200, std::move(body)};
}

Response ServiceCore::labeling_next(const std::string& id) {
  auto s = find_session(id, "labeling");
  std::lock_guard lock(s->mutex);
  auto& p = *s->picker;
  auto item_body = [&](const StreamItem& item) {
    return Response{200, Json{{"item", item.id},
                              {"predictions", item.predictions},
                              {"round", p.round()},
                              {"version", s->version}}};
  };
  if (p.pending_item()) return item_body(s->stream[s->position - 1]);
  if (p.budget_remaining() == 0) return {204, nullptr};
  const auto start = s->position;
  while (s->position < s->stream.size()) {
    const auto& item = s->stream[s->position++];
    if (p.observe(item) == PickerDecision::query) {
      ++s->version;
      s->updated = now_text();
      persist(*s);
      return item_body(item);
    }
  }
  if (s->position != start) {
    ++s->version;
    s->updated = now_text();
    persist(*s);
  }
  return {204, nullptr};
}

Response ServiceCore::labeling_label(const std::string& id, const Json& req) {
  auto s = find_session(id, "labeling");
  const auto item_id = req.contains("item_id") ? string_field(req, "item_id") : string_field(req, "item");
  const auto label = uint_field(req, "label");
  const auto expected = uint_field(req, "expected_version");
  std::lock_guard lock(s->mutex);
  auto& p = *s->picker;
  const auto it = std::find_if(s->stream.begin(), s->stream.end(), [&](const StreamItem& x) { return x.id == item_id; });
  if (it == s->stream.end()) return error(404, "unknown item '" + item_id + "'");
  if (expected != s->version) return error(409, "version conflict", Json{{"version", s->version}});
  if (!p.pending_item() || *p.pending_item() != item_id) {
    return error(409, "item '" + item_id + "' is not awaiting a label", Json{{"version", s->version}});
  }
  p.feed_label(*it, static_cast<Label>(label));
  ++s->version;
  s->updated = now_text();
  persist(*s);
  auto body = picker_metrics(p);
  body["version"] = s->version;
  return {200, std::move(body)};
}

// Jobs.

Response ServiceCore::submit_job(std::function<Json()> work) {
  auto job = std::make_shared<Job>();
  const auto id = new_id();
  std::lock_guard lock(mutex_);
  jobs_[id] = job;
  workers_.emplace_back([this, job, work = std::move(work)] {
    Json result;
    std::string failure;
    try {
      result = work();
    } catch (const std::exception& e) {
      failure = e.what();
    }
    std::lock_guard done(mutex_);
    if (failure.empty()) {
      job->status = "done";
      job->result = std::move(result);
    } else {
      job->status = "failed";
      job->error = failure;
    }
    job->finished = std::chrono::steady_clock::now();
  });
  return {202, Json{{"job_id", id}}};
}

Response ServiceCore::submit_feasibility(const Json& req) {
  auto train = parse_dataset_auto(read_artifact(string_field(req, "train")));
  auto validation = parse_dataset_auto(read_artifact(string_field(req, "validation")), train.classes);
  std::vector<Embedding> embeddings;
  if (req.contains("embeddings")) {
    for (const auto& e : req.at("embeddings")) {
      if (e.is_string() && e.get<std::string>() == "identity") {
        embeddings.push_back(Embedding::identity());
      } else if (e.is_object()) {
        embeddings.push_back(Embedding{string_field(e, "name"), parse_feature_table(read_artifact(string_field(e, "train"))),
                                       parse_feature_table(read_artifact(string_field(e, "validation")))});
      } else {
        throw HttpError(400, "embeddings are \"identity\" or {name, train, validation}");
      }
    }
  }
  if (embeddings.empty()) embeddings.push_back(Embedding::identity());
  std::vector<double> sweep;
  if (req.contains("noise_sweep")) sweep = req.at("noise_sweep").get<std::vector<double>>();
  const Seed seed{req.contains("seed") ? uint_field(req, "seed") : 0};
  const auto normalization = req.contains("normalization")
                                 ? normalization_from_string(string_field(req, "normalization"))
                                 : Normalization::minmax;
  return submit_job([=] { return feasibility_job(train, validation, embeddings, sweep, seed, normalization); });
}

Response ServiceCore::submit_ci(const Json& req) {
  const auto action = string_field(req, "action");
  const auto cond = parse_condition(string_field(req, "condition"));
  if (action == "plan") {
    const double delta = number_field(req, "delta");
    const auto mode = reuse_mode_from_string(req.contains("mode") ? string_field(req, "mode") : "adaptive_binary");
    const auto test_size = uint_field(req, "test_size");
    ReusePolicy{1, delta, mode}.validate();
    return submit_job([=] { return ci_plan_job(cond, delta, mode, test_size); });
  }
  if (action != "commit") throw HttpError(400, "action must be 'plan' or 'commit'");
  const auto name = string_field(req, "ledger");
  if (!is_token(name)) throw HttpError(400, "malformed ledger name '" + name + "'");
  auto truth = parse_dataset_auto(read_artifact(string_field(req, "truth")));
  auto old_preds = parse_prediction_column(read_artifact(string_field(req, "old")), truth.classes);
  auto new_preds = parse_prediction_column(read_artifact(string_field(req, "new")), truth.classes);
  std::optional<ReusePolicy> create;
  if (req.contains("policy")) {
    const auto& p = req.at("policy");
    ReusePolicy policy;
    if (p.contains("reuses")) policy.reuses = uint_field(p, "reuses");
    if (p.contains("delta")) policy.delta = number_field(p, "delta");
    if (p.contains("mode")) policy.mode = reuse_mode_from_string(string_field(p, "mode"));
    if (p.contains("ill_defined")) policy.ill_defined = ill_defined_from_string(string_field(p, "ill_defined"));
    policy.validate();
    create = policy;
  }
  const auto path = options_.data_dir / "ledgers" / (name + ".json");
  if (!create && !fs::exists(path)) throw HttpError(400, "unknown ledger '" + name + "'");
  return submit_job([=, this] {
    std::lock_guard lock(ledger_mutex_);
    const auto ledger = fs::exists(path) ? ledger_from_json(read_file(path)) : make_ledger(*create, truth);
    auto outcome = ci_commit_job(ledger, truth, old_preds, new_preds, cond);
    if (outcome.ledger) write_file(path, ledger_to_json(*outcome.ledger));
    return outcome.result;
  });
}

Response ServiceCore::get_job(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return error(404, "unknown job '" + id + "'");
  const auto& job = *it->second;
  if (job.status != "running" && std::chrono::steady_clock::now() - job.finished > options_.job_ttl) {
    return error(410, "job '" + id + "' expired");
  }
  Json body{{"job_id", id}, {"status", job.status}};
  if (job.status == "done") body["result"] = job.result;
  if (job.status == "failed") body["error"] = job.error;
  return {200, std::move(body)};
}

// Routing.

Response ServiceCore::handle(std::string_view method, std::string_view path, std::string_view body) {
  std::vector<std::string> parts;
  for (auto p : split(path, '/')) {
    if (!p.empty()) parts.emplace_back(p);
  }
  auto json_body = [&] {
    try {
      return body.empty() ? Json::object() : Json::parse(body);
    } catch (const Json::parse_error& e) {
      throw HttpError(400, std::string("malformed JSON body: ") + e.what());
    }
  };
  const bool get = method == "GET";
  const bool post = method == "POST";
  try {
    const auto n = parts.size();
    if (n == 1 && parts[0] == "artifacts") {
      if (method == "PUT" || post) return put_artifact(body);
    } else if (n >= 2 && parts[0] == "sessions" && parts[1] == "cleaning") {
      if (n == 2 && post) return create_cleaning(json_body());
      if (n == 3 && get) return get_cleaning(parts[2]);
      if (n == 4 && get && parts[3] == "suggestion") return cleaning_suggestion(parts[2]);
      if (n == 4 && post && parts[3] == "repairs") return cleaning_repair(parts[2], json_body());
    } else if (n >= 2 && parts[0] == "sessions" && parts[1] == "labeling") {
      if (n == 2 && post) return create_labeling(json_body());
      if (n == 3 && get) return get_labeling(parts[2]);
      if (n == 4 && get && parts[3] == "next") return labeling_next(parts[2]);
      if (n == 4 && post && parts[3] == "labels") return labeling_label(parts[2], json_body());
    } else if (n == 2 && parts[0] == "jobs") {
      if (post && parts[1] == "feasibility") return submit_feasibility(json_body());
      if (post && parts[1] == "ci") return submit_ci(json_body());
      if (get) return get_job(parts[1]);
    }
    return error(404, "no route for " + std::string(method) + " " + std::string(path));
  } catch (const HttpError& e) {
    return error(e.status, e.what(), e.extra);
  } catch (const DataError& e) {
    return error(400, e.what());
  } catch (const ConfigError& e) {
    return error(400, e.what());
  } catch (const ConditionParseError& e) {
    return error(400, e.what());
  } catch (const Json::exception& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

HttpService::HttpService(ServiceCore& core) : core_(core), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    auto r = core_.handle(req.method, req.path, req.body);
    res.status = r.status;
    if (!r.body.is_null()) res.set_content(r.body.dump(), "application/json");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Put(".*", handler);
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpService::listen() { server_->listen_after_bind(); }

void HttpService::stop() {
  if (server_) server_->stop();
}

}  // namespace dqops
