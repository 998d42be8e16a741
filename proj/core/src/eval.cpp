#include "sufgram/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sufgram/ingest.hpp"
#include "sufgram/records.hpp"

namespace sufgram {

using nlohmann::json;

double interpolate(const InfgramResult& estimate, double p_neural, const InterpolationConfig& config) {
  if (!(p_neural > 0.0 && p_neural <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "neural probability must be in (0, 1], got " + std::to_string(p_neural));
  }
  for (double l : {config.lambda_sparse, config.lambda_dense}) {
    if (!(l >= 0.0 && l <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "interpolation weight outside [0, 1]");
  }
  const double lambda = estimate.sparse ? config.lambda_sparse : config.lambda_dense;
  return lambda * estimate.prob().value() + (1.0 - lambda) * p_neural;
}

double relative_improvement(double ppl, double baseline_ppl) noexcept {
  if (baseline_ppl == 1.0) return ppl == 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return (1.0 - (ppl - 1.0) / (baseline_ppl - 1.0)) * 100.0;
}

std::vector<ScoreWindow> sliding_windows(std::size_t length, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0 || stride > window) {
    throw Error(ErrorCode::kInvalidArgument, "window schedule needs 0 < stride <= window");
  }
  std::vector<ScoreWindow> out;
  if (length == 0) return out;
  out.push_back({0, 0, std::min(window, length)});
  for (std::size_t start = stride; out.back().score_end < length; start += stride) {
    std::size_t end = std::min(start + window, length);
    std::size_t score_begin = out.back().score_end;
    out.push_back({start, score_begin, end});
  }
  return out;
}

std::vector<NeuralRecord> read_neural_stream(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read neural stream " + path.string());
  std::vector<NeuralRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      NeuralRecord r;
      if (j.contains("doc_id")) r.doc_id = j["doc_id"].is_string() ? j["doc_id"].get<std::string>() : j["doc_id"].dump();
      for (const auto& t : j.at("token_ids")) {
        auto v = t.get<long long>();
        if (v < 0 || v > kMaxTokenId) throw Error(ErrorCode::kFormat, "token id out of range");
        r.tokens.push_back(static_cast<TokenId>(v));
      }
      r.probs = j.at("probs").get<std::vector<double>>();
      r.model = j.value("model", "");
      r.tokenizer = j.value("tokenizer", "");
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_neural_stream(const std::filesystem::path& path, const std::vector<NeuralRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& r : records) {
    json j = {{"doc_id", r.doc_id}, {"token_ids", r.tokens}, {"probs", r.probs}};
    if (!r.model.empty()) j["model"] = r.model;
    if (!r.tokenizer.empty()) j["tokenizer"] = r.tokenizer;
    out << j.dump() << '\n';
  }
}

std::vector<EvalDocument> load_eval_documents(const std::filesystem::path& path, const Tokenizer& tokenizer) {
  std::vector<EvalDocument> docs;
  for_each_record(path, [&](Document&& d) {
    EvalDocument e;
    e.id = d.id.empty() ? std::to_string(docs.size()) : d.id;
    e.tokens = tokenize(d, tokenizer);
    docs.push_back(std::move(e));
  });
  return docs;
}

ScoredCorpus score_corpus(const InfgramModel& model, const std::vector<EvalDocument>& docs,
                          const std::vector<NeuralRecord>& neural, const WindowConfig& windows) {
  if (neural.size() != docs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "alignment: " + std::to_string(docs.size()) + " documents but " +
                                                 std::to_string(neural.size()) + " neural records");
  }
  ScoredCorpus out;
  out.documents = docs.size();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    const auto& rec = neural[d];
    auto where = [&](std::size_t pos) {
      return "document " + std::to_string(d) + " ('" + doc.id + "') position " + std::to_string(pos);
    };
    if (!rec.doc_id.empty() && !doc.id.empty() && rec.doc_id != doc.id) {
      throw Error(ErrorCode::kInvalidArgument, "alignment: " + where(0) + " has neural doc_id '" + rec.doc_id + "'");
    }
    if (!rec.tokens.empty()) {
      auto [a, b] = std::mismatch(doc.tokens.begin(), doc.tokens.end(), rec.tokens.begin(), rec.tokens.end());
      if (a != doc.tokens.end() || b != rec.tokens.end()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "alignment: " + where(static_cast<std::size_t>(a - doc.tokens.begin())) + " token mismatch");
      }
    }
    if (rec.probs.size() != doc.tokens.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "alignment: " + where(std::min(rec.probs.size(), doc.tokens.size())) + ": " +
                      std::to_string(rec.probs.size()) + " probabilities for " + std::to_string(doc.tokens.size()) +
                      " tokens");
    }

    auto estimates = model.dense_scan(doc.tokens);
    std::size_t scored = 0;
    for (const auto& w : sliding_windows(doc.tokens.size(), windows.window, windows.stride)) {
      for (std::size_t pos = w.score_begin; pos < w.score_end; ++pos) {
        out.tokens.push_back({estimates[pos], rec.probs[pos]});
        ++scored;
      }
    }
    if (scored != doc.tokens.size()) {
      throw Error(ErrorCode::kIntegrity, "window schedule scored " + std::to_string(scored) + " of " +
                                             std::to_string(doc.tokens.size()) + " tokens");
    }
  }
  return out;
}

namespace {

struct NllSum {
  double sum = 0.0;
  std::uint64_t zeros = 0;
};

NllSum nll(const ScoredCorpus& scored, const InterpolationConfig& config) {
  NllSum s;
  for (const auto& t : scored.tokens) {
    double p = interpolate(t.estimate, t.p_neural, config);
    if (p <= 0.0) {
      ++s.zeros;
    } else {
      s.sum -= std::log(p);
    }
  }
  return s;
}

double ppl_of(const NllSum& s, std::uint64_t n) {
  if (n == 0) return 1.0;
  if (s.zeros) return std::numeric_limits<double>::infinity();
  return std::exp(s.sum / static_cast<double>(n));
}

}  // namespace

PerplexityReport perplexity(const ScoredCorpus& scored, const InterpolationConfig& config) {
  PerplexityReport r;
  r.config = config;
  r.tokens = scored.tokens.size();
  NllSum combined = nll(scored, config);
  NllSum base = nll(scored, {0.0, 0.0});
  r.infinite_surprise = combined.zeros;
  r.mean_nll = r.tokens ? (combined.zeros ? std::numeric_limits<double>::infinity()
                                           : combined.sum / static_cast<double>(r.tokens))
                        : 0.0;
  r.ppl = ppl_of(combined, r.tokens);
  r.baseline_ppl = ppl_of(base, r.tokens);
  r.relative_improvement = relative_improvement(r.ppl, r.baseline_ppl);
  return r;
}

PerplexityReport evaluate_ppl(const InfgramModel& model, const std::vector<EvalDocument>& docs,
                              const std::vector<NeuralRecord>& neural, const InterpolationConfig& config,
                              const WindowConfig& windows) {
  return perplexity(score_corpus(model, docs, neural, windows), config);
}

std::vector<InterpolationConfig> default_lambda_grid() {
  std::vector<InterpolationConfig> grid;
  for (int a = 0; a <= 20; ++a) {
    for (int b = 0; b <= a; ++b) grid.push_back({a / 20.0, b / 20.0});
  }
  return grid;
}

InterpolationConfig tune_lambdas(const ScoredCorpus& scored, std::vector<InterpolationConfig> grid) {
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (!std::binary_search(grid.begin(), grid.end(), InterpolationConfig{0.0, 0.0})) {
    throw Error(ErrorCode::kInvalidArgument, "lambda grid must contain (0, 0)");
  }
  InterpolationConfig best = grid.front();
  double best_ppl = perplexity(scored, best).ppl;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double p = perplexity(scored, grid[i]).ppl;
    if (p < best_ppl) {
      best_ppl = p;
      best = grid[i];
    }
  }
  return best;
}

InterpolationConfig optimal_lambdas(const ScoredCorpus& scored) {
  auto minimize = [&](bool sparse) {
    auto f = [&](double lambda) {
      double s = 0.0;
      for (const auto& t : scored.tokens) {
        if (t.estimate.sparse != sparse) continue;
        double p = lambda * t.estimate.prob().value() + (1.0 - lambda) * t.p_neural;
        if (p <= 0.0) return std::numeric_limits<double>::infinity();
        s -= std::log(p);
      }
      return s;
    };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = 1.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = f(d);
      }
    }
    double x = (a + b) / 2.0;
    // The minimum may sit on the boundary.
    double best = x, fbest = f(x);
    for (double edge : {0.0, 1.0}) {
      double fe = f(edge);
      if (fe < fbest) {
        fbest = fe;
        best = edge;
      }
    }
    return best;
  };
  return {minimize(true), minimize(false)};
}

AgreementReport agreement_analysis(const InfgramModel& model, const std::vector<EvalDocument>& docs,
                                   std::optional<std::size_t> fixed_n) {
  AgreementReport report;
  if (fixed_n) {
    if (*fixed_n == 0) throw Error(ErrorCode::kInvalidArgument, "fixed n must be >= 1");
    report.fixed_n.emplace();
    report.fixed_n->n = *fixed_n;
  }
  for (const auto& doc : docs) {
    auto results = model.dense_scan(doc.tokens);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      const bool ok = agrees(r);
      report.overall.add(ok);
      report.by_effective_n[r.effective_n].add(ok);
      if (r.sparse) {
        report.sparse.add(ok);
        report.sparse_by_effective_n[r.effective_n].add(ok);
      }
      auto magnitude = static_cast<std::uint32_t>(std::floor(std::log10(static_cast<double>(r.suffix_count))));
      report.by_effective_n_and_frequency[{r.effective_n, magnitude}].add(ok);

      if (report.fixed_n) {
        std::size_t n = std::min(*fixed_n, i + 1);
        Ngram ctx(doc.tokens.data(), i);
        auto est = model.ngram_prob(ctx, doc.tokens[i], n);
        bool fixed_ok = est && 2 * est->cont_count > est->context_count;
        if (!est) ++report.fixed_n->undefined;
        report.fixed_n->overall.add(fixed_ok);
        report.fixed_n->by_effective_n[r.effective_n].add(fixed_ok);
      }
    }
  }
  return report;
}

namespace {

json bucket_json(const AgreementBucket& b) {
  return {{"tokens", b.tokens}, {"agreed", b.agreed}, {"rate", b.rate()}};
}

json bucket_table(const std::map<std::uint32_t, AgreementBucket>& m) {
  json rows = json::array();
  for (const auto& [n, b] : m) {
    json row = bucket_json(b);
    row["effective_n"] = n;
    rows.push_back(row);
  }
  return rows;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const PerplexityReport& r) {
  return {{"tokens", r.tokens},
          {"mean_nll", finite_or_null(r.mean_nll)},
          {"ppl", finite_or_null(r.ppl)},
          {"baseline_ppl", finite_or_null(r.baseline_ppl)},
          {"relative_improvement", finite_or_null(r.relative_improvement)},
          {"infinite_surprise", r.infinite_surprise},
          {"lambda1", r.config.lambda_sparse},
          {"lambda2", r.config.lambda_dense}};
}

json to_json(const AgreementReport& r) {
  json j;
  j["overall"] = bucket_json(r.overall);
  j["by_effective_n"] = bucket_table(r.by_effective_n);
  j["sparse"] = bucket_json(r.sparse);
  j["sparse_by_effective_n"] = bucket_table(r.sparse_by_effective_n);
  json grid = json::array();
  for (const auto& [key, b] : r.by_effective_n_and_frequency) {
    json row = bucket_json(b);
    row["effective_n"] = key.first;
    row["log10_suffix_count"] = key.second;
    grid.push_back(row);
  }
  j["by_effective_n_and_frequency"] = grid;
  if (r.fixed_n) {
    j["fixed_n"] = {{"n", r.fixed_n->n},
                    {"overall", bucket_json(r.fixed_n->overall)},
                    {"undefined", r.fixed_n->undefined},
                    {"by_effective_n", bucket_table(r.fixed_n->by_effective_n)}};
  }
  return j;
}

}  // namespace sufgram
