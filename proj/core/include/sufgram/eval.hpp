#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sufgram/infgram.hpp"

namespace sufgram {

/// Mixture weights for the backoff model: lambda_sparse applies when the
/// estimate is sparse, lambda_dense otherwise.
struct InterpolationConfig {
  double lambda_sparse = 0.0;
  double lambda_dense = 0.0;

  bool operator==(const InterpolationConfig&) const = default;
  auto operator<=>(const InterpolationConfig&) const = default;
};

/// lambda * P_backoff + (1 - lambda) * p_neural. Throws if p_neural is outside
/// (0, 1] or a weight is outside [0, 1].
double interpolate(const InfgramResult& estimate, double p_neural, const InterpolationConfig& config);

/// (1 - (ppl - 1) / (baseline - 1)) * 100: percentage of the gap to a
/// perfect model (PPL 1) that is closed.
double relative_improvement(double ppl, double baseline_ppl) noexcept;

struct ScoreWindow {
  std::size_t window_begin = 0;
  std::size_t score_begin = 0;
  std::size_t score_end = 0;  // exclusive
};

/// Sliding windows of `window` tokens advanced by `stride`. The first window
/// scores all of its tokens, later ones only their last `stride` tokens, so
/// every position is scored exactly once.
std::vector<ScoreWindow> sliding_windows(std::size_t length, std::size_t window = 1024,
                                         std::size_t stride = 512);

struct EvalDocument {
  std::string id;
  std::vector<TokenId> tokens;
};

/// Precomputed per-token probabilities from an external model. One JSON
/// object per line: {"doc_id", "token_ids", "probs"} plus optional
/// "model" and "tokenizer".
struct NeuralRecord {
  std::string doc_id;
  std::vector<TokenId> tokens;
  std::vector<double> probs;
  std::string model;
  std::string tokenizer;
};

std::vector<NeuralRecord> read_neural_stream(const std::filesystem::path& path);
void write_neural_stream(const std::filesystem::path& path, const std::vector<NeuralRecord>& records);

/// Reads documents from newline-delimited records and tokenizes them with
/// the index tokenizer.
std::vector<EvalDocument> load_eval_documents(const std::filesystem::path& path, const Tokenizer& tokenizer);

struct ScoredToken {
  InfgramResult estimate;
  double p_neural = 1.0;
};

struct ScoredCorpus {
  std::vector<ScoredToken> tokens;
  std::size_t documents = 0;
};

struct WindowConfig {
  std::size_t window = 1024;
  std::size_t stride = 512;
};

/// Scores every token once under the sliding-window schedule. Throws
/// kInvalidArgument naming the first misaligned document/position when the
/// stream does not match the documents.
ScoredCorpus score_corpus(const InfgramModel& model, const std::vector<EvalDocument>& docs,
                          const std::vector<NeuralRecord>& neural, const WindowConfig& windows = {});

struct PerplexityReport {
  std::uint64_t tokens = 0;
  double mean_nll = 0.0;  // natural log
  double ppl = 0.0;
  double baseline_ppl = 0.0;  // neural alone (both weights 0)
  double relative_improvement = 0.0;
  std::uint64_t infinite_surprise = 0;  // tokens given probability 0
  InterpolationConfig config;
};

PerplexityReport perplexity(const ScoredCorpus& scored, const InterpolationConfig& config);

PerplexityReport evaluate_ppl(const InfgramModel& model, const std::vector<EvalDocument>& docs,
                              const std::vector<NeuralRecord>& neural, const InterpolationConfig& config,
                              const WindowConfig& windows = {});

/// {0, 0.05, ..., 1}^2 restricted to lambda_sparse >= lambda_dense (which
/// contains the diagonal), in lexicographic order.
std::vector<InterpolationConfig> default_lambda_grid();

/// Grid point with the lowest perplexity; ties go to the lexicographically
/// smallest (lambda_sparse, lambda_dense). The grid must contain (0, 0).
InterpolationConfig tune_lambdas(const ScoredCorpus& scored, std::vector<InterpolationConfig> grid);

/// Continuous minimizer over [0, 1]^2. The objective separates into a sparse
/// and a dense part, each convex in its weight, so each is minimized by
/// golden-section search.
InterpolationConfig optimal_lambdas(const ScoredCorpus& scored);

struct AgreementBucket {
  std::uint64_t tokens = 0;
  std::uint64_t agreed = 0;

  double rate() const noexcept { return tokens ? static_cast<double>(agreed) / static_cast<double>(tokens) : 0.0; }
  void add(bool ok) noexcept {
    ++tokens;
    agreed += ok ? 1 : 0;
  }
  bool operator==(const AgreementBucket&) const = default;
};

struct AgreementReport {
  AgreementBucket overall;
  std::map<std::uint32_t, AgreementBucket> by_effective_n;
  AgreementBucket sparse;
  std::map<std::uint32_t, AgreementBucket> sparse_by_effective_n;
  /// (effective n, floor(log10 suffix count)) -> bucket.
  std::map<std::pair<std::uint32_t, std::uint32_t>, AgreementBucket> by_effective_n_and_frequency;

  struct FixedN {
    std::size_t n = 0;
    AgreementBucket overall;
    std::map<std::uint32_t, AgreementBucket> by_effective_n;  // keyed by backoff effective n
    std::uint64_t undefined = 0;  // zero-count contexts, counted as disagreement
    bool operator==(const FixedN&) const = default;
  };
  std::optional<FixedN> fixed_n;

  bool operator==(const AgreementReport&) const = default;
};

/// A token agrees when its backoff probability exceeds 1/2 (exactly:
/// 2 * cont_count > suffix_count).
inline bool agrees(const InfgramResult& r) noexcept { return 2 * r.cont_count > r.suffix_count; }

AgreementReport agreement_analysis(const InfgramModel& model, const std::vector<EvalDocument>& docs,
                                   std::optional<std::size_t> fixed_n = std::nullopt);

nlohmann::json to_json(const PerplexityReport& report);
nlohmann::json to_json(const AgreementReport& report);

}  // namespace sufgram
