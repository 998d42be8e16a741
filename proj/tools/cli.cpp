#include "cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "sufgram/decontam.hpp"
#include "sufgram/eval.hpp"
#include "sufgram/index.hpp"
#include "sufgram/ingest.hpp"
#include "sufgram/query_syntax.hpp"
#include "sufgram/sa_builder.hpp"
#include "sufgram/service.hpp"

namespace sufgram {

namespace {

using nlohmann::json;

struct QueryArgs {
  std::string index;
  std::string query;
  std::string context;
  std::optional<std::string> token;
  std::optional<std::uint64_t> n;
  std::uint64_t maxnum = 10;
  std::uint64_t seed = 0;
  std::uint64_t min_count = 1;
  std::uint64_t limit = 100;
  std::uint64_t term_ceiling = 500000;
  std::size_t snippet_tokens = 128;
  std::size_t max_context = 1024;
};

ServiceLimits limits_of(const QueryArgs& a) {
  ServiceLimits l;
  l.term_ceiling = a.term_ceiling;
  l.snippet_tokens = a.snippet_tokens;
  l.max_context = a.max_context;
  l.max_documents = std::max<std::uint64_t>(a.maxnum, l.max_documents);
  return l;
}

// "name=dirA,-dirB" or a bare list named after itself.
std::pair<std::string, std::vector<IndexMember>> named_index(const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos) return {spec, parse_index_list(spec)};
  return {spec.substr(0, eq), parse_index_list(spec.substr(eq + 1))};
}

json service_request(const std::string& type, const QueryArgs& a) {
  json req = {{"v", kApiVersion}, {"index", a.index}, {"query_type", type}};
  if (type == "count" || type == "search_docs") {
    req["query"] = a.query;
  } else {
    req["query"] = a.context;
    if (a.token) req["token"] = *a.token;
    if (a.n) req["n"] = *a.n;
  }
  if (type == "search_docs") {
    req["maxnum"] = a.maxnum;
    req["seed"] = a.seed;
  }
  if (type.rfind("infgram", 0) == 0) req["min_count"] = a.min_count;
  return req;
}

void emit(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

ServiceConfig service_config(const std::optional<std::string>& config_path, const std::vector<std::string>& indexes) {
  ServiceConfig c;
  if (config_path) c = ServiceConfig::load(*config_path);
  for (const auto& spec : indexes) {
    auto [name, members] = named_index(spec);
    c.indexes[name] = std::move(members);
  }
  if (c.indexes.empty()) throw Error(ErrorCode::kInvalidArgument, "no index given (use --config or --index)");
  return c;
}

std::string single_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Suffix-array n-gram engine", "engine"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // ingest
  IngestOptions ingest;
  std::string tokenizer_name = "pretokenized";
  std::string vocab;
  auto* c_ingest = app.add_subcommand("ingest", "Tokenize records into a token array");
  c_ingest->add_option("--input", ingest.input, "Newline-delimited JSON records")->required();
  c_ingest->add_option("--tokenizer", tokenizer_name, "reference-word | pretokenized")
      ->check(CLI::IsMember({"reference-word", "pretokenized"}));
  c_ingest->add_option("--out", ingest.out, "Index directory")->required();
  c_ingest->add_option("--vocab", vocab, "Reuse this vocab.txt (reference-word)");

  // build-sa
  std::string sa_index;
  std::uint64_t max_shard_tokens = 0;
  auto* c_build = app.add_subcommand("build-sa", "Build suffix arrays for an ingested directory");
  c_build->add_option("--index", sa_index, "Index directory")->required();
  c_build->add_option("--max-shard-tokens", max_shard_tokens, "Shard size limit in tokens (0: one shard)");

  // verify
  VerifyOptions verify_opts;
  auto* c_verify = app.add_subcommand("verify", "Check suffix-array order and permutation");
  c_verify->add_option("--index", sa_index, "Index directory")->required();
  c_verify->add_option("--sample-pairs", verify_opts.sample_pairs, "Adjacent pairs sampled in large shards");
  c_verify->add_option("--seed", verify_opts.seed);

  // query commands
  QueryArgs qa;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--index", qa.index, "Index directories: dirA[,dirB][,-dirC]")->required();
    c->add_option("--term-ceiling", qa.term_ceiling);
    c->add_option("--max-context", qa.max_context);
  };
  auto* c_stats = app.add_subcommand("stats", "Index size and shape");
  c_stats->add_option("--index", qa.index, "Index directories")->required();

  auto* c_count = app.add_subcommand("count", "Count an n-gram");
  auto* c_positions = app.add_subcommand("positions", "Occurrence positions of an n-gram");
  auto* c_search = app.add_subcommand("search", "Documents matching a CNF query");
  for (auto* c : {c_count, c_positions, c_search}) {
    add_common(c);
    c->add_option("--query", qa.query, "Token IDs and/or quoted text; CNF for search")->required();
  }
  c_positions->add_option("--limit", qa.limit, "Sample this many positions when there are more");
  c_positions->add_option("--seed", qa.seed);
  c_search->add_option("--maxnum", qa.maxnum, "Documents to return");
  c_search->add_option("--seed", qa.seed);
  c_search->add_option("--snippet-tokens", qa.snippet_tokens);

  auto* c_prob = app.add_subcommand("prob", "Fixed-n probability");
  auto* c_dist = app.add_subcommand("dist", "Fixed-n next-token distribution");
  auto* c_iprob = app.add_subcommand("infgram-prob", "Backoff probability");
  auto* c_idist = app.add_subcommand("infgram-dist", "Backoff next-token distribution");
  for (auto* c : {c_prob, c_dist, c_iprob, c_idist}) {
    add_common(c);
    c->add_option("--context", qa.context, "Context as token IDs and/or quoted text")->required();
  }
  for (auto* c : {c_prob, c_iprob}) c->add_option("--token", qa.token, "Next token (defaults to the last context token)");
  for (auto* c : {c_prob, c_dist}) c->add_option("--n", qa.n, "Order of the estimate");
  for (auto* c : {c_iprob, c_idist}) c->add_option("--min-count", qa.min_count, "Minimum usable suffix count");

  // ppl
  std::string docs_path;
  std::string neural_path;
  InterpolationConfig lambdas;
  WindowConfig windows;
  bool tune = false;
  auto* c_ppl = app.add_subcommand("ppl", "Perplexity of a neural stream interpolated with the backoff model");
  c_ppl->add_option("--index", qa.index)->required();
  c_ppl->add_option("--docs", docs_path, "Evaluation records")->required();
  c_ppl->add_option("--neural", neural_path, "Per-token probability stream")->required();
  c_ppl->add_option("--lambda1", lambdas.lambda_sparse, "Weight on sparse estimates")->check(CLI::Range(0.0, 1.0));
  c_ppl->add_option("--lambda2", lambdas.lambda_dense, "Weight on dense estimates")->check(CLI::Range(0.0, 1.0));
  c_ppl->add_option("--window", windows.window);
  c_ppl->add_option("--stride", windows.stride);
  c_ppl->add_option("--max-context", qa.max_context);
  c_ppl->add_flag("--tune", tune, "Pick the weights on the default grid instead");

  // agree
  std::optional<std::size_t> fixed_n;
  std::string report_path;
  auto* c_agree = app.add_subcommand("agree", "Next-token agreement of the backoff model on documents");
  c_agree->add_option("--index", qa.index)->required();
  c_agree->add_option("--docs", docs_path)->required();
  c_agree->add_option("--fixed-n", fixed_n, "Also report a fixed-n model");
  c_agree->add_option("--report", report_path, "Write the JSON report here")->required();
  c_agree->add_option("--max-context", qa.max_context);

  // decontam
  ContaminationSpec cspec;
  std::string corpus_path, eval_path, kept_path, removed_path, stats_path;
  bool exact = false;
  double fpr = 1e-4;
  auto* c_decon = app.add_subcommand("decontam", "Remove documents overlapping an evaluation set");
  c_decon->add_option("--corpus", corpus_path)->required();
  c_decon->add_option("--eval", eval_path)->required();
  c_decon->add_option("--n", cspec.n);
  c_decon->add_option("--threshold", cspec.threshold);
  c_decon->add_flag("--lowercase", cspec.lowercase);
  c_decon->add_option("--kept", kept_path)->required();
  c_decon->add_option("--removed", removed_path)->required();
  c_decon->add_option("--stats", stats_path)->required();
  c_decon->add_flag("--exact", exact, "Exact n-gram set instead of a Bloom filter");
  c_decon->add_option("--fpr", fpr, "Bloom filter false-positive rate");

  // serve / replay
  std::optional<std::string> config_path;
  std::vector<std::string> served;
  std::optional<std::string> bind;
  std::optional<int> port;
  std::optional<std::size_t> threads;
  std::string transcript;
  auto* c_serve = app.add_subcommand("serve", "HTTP query service");
  auto* c_replay = app.add_subcommand("replay", "Re-run a request/response transcript and compare");
  for (auto* c : {c_serve, c_replay}) {
    c->add_option("--config", config_path, "JSON service config");
    c->add_option("--index", served, "name=dirA[,dirB] (repeatable)");
  }
  c_serve->add_option("--bind", bind);
  c_serve->add_option("--port", port);
  c_serve->add_option("--threads", threads);
  c_replay->add_option("--transcript", transcript, "Newline-delimited {request, response} pairs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e, out, err) == 0) return 0;
    err << app.help();
    return 2;
  }

  try {
    if (*c_ingest) {
      ingest.tokenizer = *parse_tokenizer_kind(tokenizer_name);
      if (!vocab.empty()) ingest.vocab = vocab;
      IngestResult r = ingest_corpus(ingest);
      emit(out, {{"out", ingest.out.string()}, {"N", r.tokens}, {"D", r.documents}});
    } else if (*c_build) {
      auto shards = build_suffix_arrays(sa_index, max_shard_tokens);
      json rows = json::array();
      for (const auto& s : shards) {
        rows.push_back({{"path", s.path}, {"N", s.tokens}, {"P", s.width}, {"start", s.start}, {"end", s.end}});
      }
      emit(out, {{"index", sa_index}, {"shards", rows}});
    } else if (*c_verify) {
      VerifyReport r = verify_index(sa_index, verify_opts);
      emit(out, {{"index", sa_index},
                 {"ok", r.ok},
                 {"violation", r.violation},
                 {"entries_checked", r.entries_checked},
                 {"pairs_checked", r.pairs_checked}});
      return r.ok ? 0 : 1;
    } else if (*c_stats) {
      IndexHandle h(qa.index, parse_index_list(qa.index), limits_of(qa));
      emit(out, index_summary(h));
    } else if (*c_positions) {
      CorpusIndex index = CorpusIndex::open(parse_index_list(qa.index));
      QueryEngine engine(index, QueryOptions{false, qa.term_ceiling});
      auto q = parse_ngram(qa.query, index.tokenizer());
      std::uint64_t total = engine.count(q);
      json rows = json::array();
      for (const auto& p : engine.positions(q, qa.limit, qa.seed)) {
        DocRef d = engine.doc_of(p.dir, p.byte);
        rows.push_back({{"dir", p.dir}, {"byte", p.byte}, {"document", d.ordinal},
                        {"token_offset", (p.byte - d.begin) / 2}});
      }
      emit(out, {{"query", q}, {"count", total}, {"sampled", total > rows.size()}, {"positions", rows}});
    } else if (*c_count || *c_search || *c_prob || *c_dist || *c_iprob || *c_idist) {
      const char* type = *c_count    ? "count"
                         : *c_search ? "search_docs"
                         : *c_prob   ? "ngram_prob"
                         : *c_dist   ? "ngram_dist"
                         : *c_iprob  ? "infgram_prob"
                                     : "infgram_dist";
      ServiceLimits limits = limits_of(qa);
      IndexHandle h(qa.index, parse_index_list(qa.index), limits);
      emit(out, run_query(h, service_request(type, qa), limits));
    } else if (*c_ppl) {
      CorpusIndex index = CorpusIndex::open(parse_index_list(qa.index));
      QueryEngine engine(index);
      InfgramModel model(engine, LmOptions{qa.max_context, 1});
      auto docs = load_eval_documents(docs_path, index.tokenizer());
      auto neural = read_neural_stream(neural_path);
      ScoredCorpus scored = score_corpus(model, docs, neural, windows);
      if (tune) lambdas = tune_lambdas(scored, default_lambda_grid());
      json j = to_json(perplexity(scored, lambdas));
      if (tune) {
        InterpolationConfig best = optimal_lambdas(scored);
        j["continuous_optimum"] = to_json(perplexity(scored, best));
      }
      emit(out, j);
    } else if (*c_agree) {
      CorpusIndex index = CorpusIndex::open(parse_index_list(qa.index));
      QueryEngine engine(index);
      InfgramModel model(engine, LmOptions{qa.max_context, 1});
      auto docs = load_eval_documents(docs_path, index.tokenizer());
      json j = to_json(agreement_analysis(model, docs, fixed_n));
      std::ofstream rep(report_path);
      rep << j.dump(2) << '\n';
      if (!rep) throw Error(ErrorCode::kIo, "cannot write report " + report_path);
      emit(out, j);
    } else if (*c_decon) {
      cspec.validate();
      DecontamStats s = decontaminate_files(corpus_path, eval_path, cspec,
                                            exact ? MembershipMode::kExact : MembershipMode::kBloom, kept_path,
                                            removed_path, stats_path, fpr);
      emit(out, to_json(s));
    } else if (*c_serve) {
      ServiceConfig c = service_config(config_path, served);
      if (bind) c.bind = *bind;
      if (port) c.port = *port;
      if (threads) c.threads = *threads;
      QueryService service(c);
      emit(out, {{"listening", c.bind + ":" + std::to_string(c.port)}, {"indexes", service.list_indexes()["indexes"]}});
      out.flush();
      service.serve();
    } else if (*c_replay) {
      QueryService service(service_config(config_path, served));
      std::ifstream in(transcript);
      if (!in) throw Error(ErrorCode::kIo, "cannot read transcript " + transcript);
      std::string line;
      std::uint64_t entries = 0, mismatches = 0;
      while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json entry = json::parse(line);
        json expected = entry.at("response");
        expected.erase("latency_ms");
        json actual;
        try {
          actual = service.execute(entry.at("request"));
        } catch (const RequestError& e) {
          actual = error_payload(e);
        }
        bool same = actual == expected;
        mismatches += same ? 0 : 1;
        emit(out, {{"entry", entries++}, {"identical", same}});
      }
      emit(out, {{"entries", entries}, {"mismatches", mismatches}});
      return mismatches == 0 ? 0 : 1;
    }
  } catch (const RequestError& e) {
    err << "error: " << single_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << single_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sufgram
