#include "sufgram/service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <httplib.h>

#include "sufgram/query_syntax.hpp"

namespace sufgram {

using nlohmann::json;

namespace {

const char* const kQueryTypes[] = {"count", "ngram_prob", "ngram_dist", "infgram_prob", "infgram_dist", "search_docs"};

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kFormat:
    case ErrorCode::kUnsupported:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kClauseTooFrequent:
      return 422;
    case ErrorCode::kIo:
    case ErrorCode::kIntegrity:
      return 500;
  }
  return 500;
}

[[noreturn]] void bad_field(const std::string& field, const std::string& msg) {
  throw RequestError(400, ErrorCode::kInvalidArgument, field + ": " + msg, {{"field", field}});
}

json prob_json(const Ratio& r) {
  return {{"num", std::to_string(r.num)}, {"den", std::to_string(r.den)}, {"decimal", r.value()}};
}

std::uint64_t optional_uint(const json& req, const char* field, std::uint64_t fallback) {
  auto it = req.find(field);
  if (it == req.end() || it->is_null()) return fallback;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
    bad_field(field, "must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

std::vector<TokenId> parse_tokens(const json& value, const Tokenizer& tokenizer, const char* field) {
  try {
    if (value.is_array()) {
      std::vector<TokenId> out;
      for (const auto& v : value) {
        if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > kMaxTokenId) {
          bad_field(field, "token ids must be integers in [0, 65534]");
        }
        out.push_back(static_cast<TokenId>(v.get<long long>()));
      }
      return out;
    }
    if (value.is_string()) return parse_ngram(value.get<std::string>(), tokenizer);
    if (value.is_number_integer()) return parse_tokens(json::array({value}), tokenizer, field);
  } catch (const RequestError&) {
    throw;
  } catch (const Error& e) {
    bad_field(field, e.what());
  }
  bad_field(field, "expected a string or an array of token ids");
}

json dist_json(const NextTokenDistribution& d, const Tokenizer& tokenizer) {
  std::vector<DistEntry> entries = d.entries;
  std::stable_sort(entries.begin(), entries.end(),
                   [](const DistEntry& a, const DistEntry& b) { return a.count > b.count; });
  json rows = json::array();
  for (const auto& e : entries) {
    rows.push_back({{"token", e.token},
                    {"text", tokenizer.detokenize({e.token})},
                    {"count", e.count},
                    {"prob", prob_json(d.prob(e))}});
  }
  return {{"total", d.total}, {"effective_n", d.effective_n}, {"sparse", d.entries.size() == 1}, {"entries", rows}};
}

json doc_json(const IndexHandle& h, const DocRef& doc, std::size_t budget) {
  auto tokens = h.engine().document_tokens(doc);
  std::size_t center = 0;
  std::size_t span = 0;
  if (!doc.matches.empty() && !doc.matches.front().positions.empty()) {
    center = doc.matches.front().positions.front();
    const auto& terms = doc.matches.front();
    (void)terms;
    span = 1;
  }
  std::size_t begin = 0;
  if (budget && tokens.size() > budget) {
    std::size_t mid = center + span / 2;
    begin = mid > budget / 2 ? mid - budget / 2 : 0;
    begin = std::min(begin, tokens.size() - budget);
  }
  std::size_t end = budget ? std::min(tokens.size(), begin + budget) : tokens.size();
  std::vector<TokenId> snippet(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                               tokens.begin() + static_cast<std::ptrdiff_t>(end));
  json matches = json::array();
  for (const auto& m : doc.matches) {
    matches.push_back({{"clause", m.clause}, {"term", m.term}, {"positions", m.positions}});
  }
  return {{"index_dir", h.members().at(doc.dir).path.string()},
          {"dir", doc.dir},
          {"ordinal", doc.ordinal},
          {"metadata", doc.metadata},
          {"byte_span", {doc.begin, doc.end}},
          {"token_count", tokens.size()},
          {"snippet", {{"begin", begin}, {"tokens", snippet}, {"text", h.index().tokenizer().detokenize(snippet)}}},
          {"matches", matches}};
}

}  // namespace

nlohmann::json error_payload(const RequestError& e) {
  json err = {{"type", to_string(e.code())}, {"message", e.what()}};
  for (auto it = e.details().begin(); it != e.details().end(); ++it) err[it.key()] = it.value();
  return {{"v", kApiVersion}, {"error", err}};
}

IndexHandle::IndexHandle(std::string name, const std::vector<IndexMember>& members, const ServiceLimits& limits)
    : name_(std::move(name)),
      members_(members),
      index_(CorpusIndex::open(members)),
      engine_(index_, QueryOptions{limits.prefetch, limits.term_ceiling}),
      model_(engine_, LmOptions{limits.max_context, 1}) {}

json index_summary(const IndexHandle& h) {
  IndexStats s = stats(h.index());
  json dirs = json::array();
  for (const auto& m : h.members()) dirs.push_back({{"path", m.path.string()}, {"sign", m.sign}});
  return {{"name", h.name()},
          {"tokenizer", h.index().tokenizer_id()},
          {"directories", dirs},
          {"N", s.tokens},
          {"D", s.documents},
          {"shards", s.shards},
          {"index_bytes", s.index_bytes},
          {"bytes_on_disk", s.bytes_on_disk},
          {"bytes_per_token", s.bytes_per_token},
          {"unique_ngram_lower_bound", s.unique_ngram_lower_bound}};
}

json run_query(const IndexHandle& h, const json& request, const ServiceLimits& limits) {
  if (!request.is_object()) bad_field("body", "request must be a JSON object");
  if (auto v = request.find("v"); v != request.end() && *v != kApiVersion) {
    bad_field("v", "unsupported API version " + v->dump());
  }
  auto qt_it = request.find("query_type");
  if (qt_it == request.end() || !qt_it->is_string()) bad_field("query_type", "required string");
  const std::string type = qt_it->get<std::string>();
  if (std::find(std::begin(kQueryTypes), std::end(kQueryTypes), type) == std::end(kQueryTypes)) {
    bad_field("query_type", "unknown query type '" + type + "'");
  }
  auto q_it = request.find("query");
  if (q_it == request.end()) bad_field("query", "required");

  const Tokenizer& tokenizer = h.index().tokenizer();
  json result;
  try {
    if (type == "search_docs") {
      CnfQuery cnf;
      if (q_it->is_string()) {
        try {
          cnf = parse_cnf(q_it->get<std::string>(), tokenizer);
        } catch (const Error& e) {
          bad_field("query", e.what());
        }
      } else {
        cnf.clauses = {{parse_tokens(*q_it, tokenizer, "query")}};
      }
      std::uint64_t maxnum = optional_uint(request, "maxnum", 10);
      if (maxnum == 0) bad_field("maxnum", "must be >= 1");
      maxnum = std::min(maxnum, limits.max_documents);
      std::uint64_t seed = optional_uint(request, "seed", 0);
      std::uint64_t matching = 0;
      auto docs = h.engine().search_docs(cnf, maxnum, seed, &matching);
      json clauses = json::array();
      for (const auto& c : cnf.clauses) clauses.push_back(c);
      json out = json::array();
      for (const auto& d : docs) out.push_back(doc_json(h, d, limits.snippet_tokens));
      result = {{"cnf", clauses}, {"matching_documents", matching}, {"sampled", matching > docs.size()},
                {"documents", out}};
    } else {
      std::vector<TokenId> tokens = parse_tokens(*q_it, tokenizer, "query");
      if (type == "count") {
        result = {{"tokens", tokens}, {"count", h.engine().count(tokens)}};
      } else if (type == "ngram_dist" || type == "infgram_dist") {
        if (type == "ngram_dist") {
          std::uint64_t n = optional_uint(request, "n", tokens.size() + 1);
          if (n == 0 || n > tokens.size() + 1) bad_field("n", "must be in [1, context length + 1]");
          auto dist = h.model().ngram_dist(tokens, n);
          result = {{"context", tokens}, {"n", n}, {"defined", dist.has_value()}};
          if (dist) result["distribution"] = dist_json(*dist, tokenizer);
        } else {
          LmOptions lo{limits.max_context, optional_uint(request, "min_count", 1)};
          InfgramModel model(h.engine(), lo);
          result = {{"context", tokens}, {"max_context", limits.max_context},
                    {"distribution", dist_json(model.infgram_dist(tokens), tokenizer)}};
        }
      } else {
        // Probability queries: explicit token, or the last query token.
        std::optional<TokenId> token;
        if (auto t = request.find("token"); t != request.end() && !t->is_null()) {
          auto ids = parse_tokens(*t, tokenizer, "token");
          if (ids.size() != 1) bad_field("token", "must be exactly one token");
          token = ids.front();
        } else {
          if (tokens.empty()) bad_field("query", "needs at least one token when 'token' is absent");
          token = tokens.back();
          tokens.pop_back();
        }
        if (type == "ngram_prob") {
          std::uint64_t n = optional_uint(request, "n", tokens.size() + 1);
          if (n == 0 || n > tokens.size() + 1) bad_field("n", "must be in [1, context length + 1]");
          auto est = h.model().ngram_prob(tokens, *token, n);
          result = {{"context", tokens}, {"token", *token}, {"n", n}, {"defined", est.has_value()}};
          if (est) {
            result["prob"] = prob_json(est->prob());
            result["cont_count"] = est->cont_count;
            result["context_count"] = est->context_count;
          } else {
            result["prob"] = nullptr;
          }
        } else {
          LmOptions lo{limits.max_context, optional_uint(request, "min_count", 1)};
          InfgramModel model(h.engine(), lo);
          InfgramResult r = model.infgram_prob(tokens, *token);
          result = {{"context", tokens},
                    {"token", *token},
                    {"prob", prob_json(r.prob())},
                    {"effective_n", r.effective_n},
                    {"suffix_count", r.suffix_count},
                    {"cont_count", r.cont_count},
                    {"sparse", r.sparse},
                    {"max_context", limits.max_context}};
        }
      }
    }
  } catch (const RequestError&) {
    throw;
  } catch (const ClauseTooFrequent& e) {
    throw RequestError(422, e.code(), e.what(), {{"ceiling", e.ceiling()}, {"clause", e.clause()}});
  } catch (const Error& e) {
    throw RequestError(status_for(e.code()), e.code(), e.what());
  }
  return {{"v", kApiVersion}, {"index", h.name()}, {"query_type", type}, {"approximate", false}, {"result", result}};
}

ServiceConfig ServiceConfig::from_json(const json& j) {
  ServiceConfig c;
  c.bind = j.value("bind", c.bind);
  c.port = j.value("port", c.port);
  c.threads = j.value("threads", c.threads);
  c.limits.term_ceiling = j.value("term_ceiling", c.limits.term_ceiling);
  c.limits.snippet_tokens = j.value("snippet_tokens", c.limits.snippet_tokens);
  c.limits.max_context = j.value("max_context", c.limits.max_context);
  c.limits.max_documents = j.value("max_documents", c.limits.max_documents);
  c.limits.prefetch = j.value("prefetch", c.limits.prefetch);
  if (!j.contains("indexes") || !j["indexes"].is_object() || j["indexes"].empty()) {
    throw Error(ErrorCode::kInvalidArgument, "service config needs a non-empty 'indexes' object");
  }
  for (auto it = j["indexes"].begin(); it != j["indexes"].end(); ++it) {
    std::vector<IndexMember> members;
    if (it->is_string()) {
      members = parse_index_list(it->get<std::string>());
    } else if (it->is_array()) {
      for (const auto& s : *it) {
        auto part = parse_index_list(s.get<std::string>());
        members.insert(members.end(), part.begin(), part.end());
      }
    } else {
      throw Error(ErrorCode::kInvalidArgument, "index '" + it.key() + "' must be a path or a list of paths");
    }
    c.indexes[it.key()] = std::move(members);
  }
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read service config " + path.string());
  try {
    json j = json::parse(in);
    ServiceConfig c = from_json(j);
    // Relative index paths resolve against the config file's directory.
    for (auto& [name, members] : c.indexes) {
      for (auto& m : members) {
        if (m.path.is_relative()) m.path = path.parent_path() / m.path;
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "service config " + path.string() + ": " + e.what());
  }
}

QueryService::QueryService(const ServiceConfig& config) : config_(config) {
  for (const auto& [name, members] : config_.indexes) {
    handles_.emplace(name, std::make_unique<IndexHandle>(name, members, config_.limits));
  }
}

QueryService::~QueryService() = default;

const IndexHandle& QueryService::lookup(const json& request) const {
  if (!request.is_object()) bad_field("body", "request must be a JSON object");
  std::string name;
  if (auto it = request.find("index"); it != request.end()) {
    if (!it->is_string()) bad_field("index", "must be a string");
    name = it->get<std::string>();
  } else if (handles_.size() == 1) {
    name = handles_.begin()->first;
  } else {
    bad_field("index", "required when several indexes are served");
  }
  auto h = handles_.find(name);
  if (h == handles_.end()) {
    throw RequestError(404, ErrorCode::kNotFound, "unknown index '" + name + "'", {{"field", "index"}});
  }
  return *h->second;
}

json QueryService::execute(const json& request) const {
  return run_query(lookup(request), request, config_.limits);
}

json QueryService::handle(const json& request) const {
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    json out = execute(request);
    double ms = elapsed();
    record(ms, false);
    out["latency_ms"] = ms;
    return out;
  } catch (...) {
    record(elapsed(), true);
    throw;
  }
}

void QueryService::record(double ms, bool error) const {
  std::lock_guard lock(latency_mutex_);
  latencies_.push_back(ms);
  if (error) ++errors_;
}

LatencySummary QueryService::latency() const {
  std::vector<double> copy;
  LatencySummary s;
  {
    std::lock_guard lock(latency_mutex_);
    copy = latencies_;
    s.errors = errors_;
  }
  s.requests = copy.size();
  if (!copy.empty()) {
    std::sort(copy.begin(), copy.end());
    s.p50_ms = copy[(copy.size() - 1) / 2];
    s.p99_ms = copy[std::min(copy.size() - 1, static_cast<std::size_t>(0.99 * static_cast<double>(copy.size())))];
  }
  return s;
}

json QueryService::list_indexes() const {
  json out = json::array();
  for (const auto& [name, h] : handles_) out.push_back(index_summary(*h));
  return {{"v", kApiVersion}, {"indexes", out}};
}

std::unique_ptr<httplib::Server> QueryService::make_server() const {
  auto server = std::make_unique<httplib::Server>();
  const std::size_t threads = std::max<std::size_t>(1, config_.threads);
  server->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  server->set_keep_alive_max_count(1u << 20);
  server->set_keep_alive_timeout(30);
  server->set_tcp_nodelay(true);

  auto send = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };

  server->Post("/v1/query", [this, send](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      record(0.0, true);
      send(res, 400, error_payload(RequestError(400, ErrorCode::kInvalidArgument,
                                                std::string("body is not JSON: ") + e.what(), {{"field", "body"}})));
      return;
    }
    try {
      send(res, 200, handle(body));
    } catch (const RequestError& e) {
      send(res, e.status(), error_payload(e));
    } catch (const Error& e) {
      send(res, status_for(e.code()), error_payload(RequestError(status_for(e.code()), e.code(), e.what())));
    } catch (const std::exception& e) {
      send(res, 500, error_payload(RequestError(500, ErrorCode::kIo, e.what())));
    }
  });
  server->Get("/v1/indexes", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, 200, list_indexes());
  });
  server->Get("/healthz", [send](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"status", "ok"}});
  });
  server->Get("/v1/metrics", [this, send](const httplib::Request&, httplib::Response& res) {
    LatencySummary s = latency();
    send(res, 200, {{"requests", s.requests}, {"errors", s.errors}, {"p50_ms", s.p50_ms}, {"p99_ms", s.p99_ms}});
  });
  return server;
}

void QueryService::serve() const {
  auto server = make_server();
  if (!server->listen(config_.bind, config_.port)) {
    throw Error(ErrorCode::kIo, "cannot listen on " + config_.bind + ":" + std::to_string(config_.port));
  }
}

}  // namespace sufgram
