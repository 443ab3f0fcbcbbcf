#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dqops/reports.hpp"

namespace httplib {
class Server;
}

namespace dqops {

struct ServiceOptions {
  std::filesystem::path data_dir = "dqops-data";
  /// Finished jobs answer 410 once older than this.
  std::chrono::milliseconds job_ttl = std::chrono::hours(1);
};

/// Data directory from DQOPS_DATA_DIR, else "dqops-data".
std::filesystem::path default_data_dir();

struct Response {
  int status = 200;
  Json body;  // null for bodiless responses (204)
};

/// Request handling without any transport, so tests can drive every endpoint
/// directly. Sessions are persisted as JSON snapshots under data_dir after each
/// mutation and reloaded lazily, so a new instance over the same directory
/// resumes them.
class ServiceCore {
 public:
  explicit ServiceCore(ServiceOptions options);
  ~ServiceCore();
  ServiceCore(const ServiceCore&) = delete;
  ServiceCore& operator=(const ServiceCore&) = delete;

  Response handle(std::string_view method, std::string_view path, std::string_view body);

  Response put_artifact(std::string_view body);

  Response create_cleaning(const Json& req);
  Response get_cleaning(const std::string& id);
  Response cleaning_suggestion(const std::string& id);
  Response cleaning_repair(const std::string& id, const Json& req);

  Response create_labeling(const Json& req);
  Response get_labeling(const std::string& id);
  Response labeling_next(const std::string& id);
  Response labeling_label(const std::string& id, const Json& req);

  Response submit_feasibility(const Json& req);
  Response submit_ci(const Json& req);
  Response get_job(const std::string& id);

  /// Blocks until every submitted job has finished.
  void wait_for_jobs();

  const ServiceOptions& options() const noexcept { return options_; }

 private:
  struct Session;
  struct Job;

  std::string read_artifact(const std::string& ref) const;
  std::shared_ptr<Session> find_session(const std::string& id, const char* kind);
  std::shared_ptr<Session> load_session(const std::string& id);
  void persist(const Session& session) const;
  std::string new_id();
  Response submit_job(std::function<Json()> work);

  ServiceOptions options_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::vector<std::thread> workers_;
  std::mutex ledger_mutex_;
  std::uint64_t id_counter_ = 0;
};

/// cpp-httplib transport over a ServiceCore.
class HttpService {
 public:
  explicit HttpService(ServiceCore& core);
  ~HttpService();

  /// Binds the port (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  ServiceCore& core_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace dqops
