#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "sufgram/infgram.hpp"
#include "sufgram/query_engine.hpp"

namespace httplib {
class Server;
}

namespace sufgram {

inline constexpr int kApiVersion = 1;

/// Error with an HTTP status and a typed JSON payload.
class RequestError : public Error {
 public:
  RequestError(int status, ErrorCode code, const std::string& what, nlohmann::json details = nlohmann::json::object())
      : Error(code, what), status_(status), details_(std::move(details)) {}

  int status() const noexcept { return status_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  int status_;
  nlohmann::json details_;
};

struct ServiceLimits {
  std::uint64_t term_ceiling = 500000;
  std::size_t snippet_tokens = 128;
  std::size_t max_context = 1024;
  std::uint64_t max_documents = 100;
  bool prefetch = false;
};

/// An opened index with its engine and model. Not movable: the engine and
/// model point into the index.
class IndexHandle {
 public:
  IndexHandle(std::string name, const std::vector<IndexMember>& members, const ServiceLimits& limits);
  IndexHandle(const IndexHandle&) = delete;
  IndexHandle& operator=(const IndexHandle&) = delete;

  const std::string& name() const noexcept { return name_; }
  const CorpusIndex& index() const noexcept { return index_; }
  const QueryEngine& engine() const noexcept { return engine_; }
  const InfgramModel& model() const noexcept { return model_; }
  const std::vector<IndexMember>& members() const noexcept { return members_; }

 private:
  std::string name_;
  std::vector<IndexMember> members_;
  CorpusIndex index_;
  QueryEngine engine_;
  InfgramModel model_;
};

/// The six query types: count, ngram_prob, ngram_dist, infgram_prob,
/// infgram_dist, search_docs. Returns {"v", "index", "query_type", "result"};
/// throws RequestError on malformed input.
nlohmann::json run_query(const IndexHandle& handle, const nlohmann::json& request, const ServiceLimits& limits);

nlohmann::json index_summary(const IndexHandle& handle);

/// `{ "bind": "127.0.0.1", "port": 8080, "threads": 8, "term_ceiling": ...,
///    "snippet_tokens": ..., "max_context": ..., "prefetch": false,
///    "indexes": { "name": "dir" | ["dirA", "-dirB"] } }`
struct ServiceConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::size_t threads = 8;
  ServiceLimits limits;
  std::map<std::string, std::vector<IndexMember>> indexes;

  static ServiceConfig load(const std::filesystem::path& path);
  static ServiceConfig from_json(const nlohmann::json& j);
};

struct LatencySummary {
  std::uint64_t requests = 0;
  std::uint64_t errors = 0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
};

class QueryService {
 public:
  explicit QueryService(const ServiceConfig& config);
  ~QueryService();

  /// Runs a request and wraps the result with `latency_ms`. Throws
  /// RequestError.
  nlohmann::json handle(const nlohmann::json& request) const;
  /// Result without timing; identical to run_query on the named index.
  nlohmann::json execute(const nlohmann::json& request) const;
  nlohmann::json list_indexes() const;
  LatencySummary latency() const;

  /// Builds an httplib server with /v1/query, /v1/indexes, /healthz and
  /// /v1/metrics routes. The caller binds and listens.
  std::unique_ptr<httplib::Server> make_server() const;

  /// Blocks serving on config.bind:config.port.
  void serve() const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  const IndexHandle& lookup(const nlohmann::json& request) const;
  void record(double ms, bool error) const;

  ServiceConfig config_;
  std::map<std::string, std::unique_ptr<IndexHandle>> handles_;
  mutable std::mutex latency_mutex_;
  mutable std::vector<double> latencies_;
  mutable std::uint64_t errors_ = 0;
};

nlohmann::json error_payload(const RequestError& e);

}  // namespace sufgram
