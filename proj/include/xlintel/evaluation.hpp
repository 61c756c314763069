#ifndef XLINTEL_EVALUATION_HPP_
#define XLINTEL_EVALUATION_HPP_

#include <cmath>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xlintel/alignment.hpp"
#include "xlintel/corpus.hpp"
#include "xlintel/embeddings.hpp"
#include "xlintel/translator/train.hpp"

namespace xlintel {

// Matched positions over reference positions, compared position-wise;
// positions missing from a prediction count as mismatches.
double token_accuracy(const std::vector<Tokens>& predictions, const std::vector<Tokens>& references);

// Clipped n-gram statistics of one candidate against its references.
struct BleuStats {
  std::vector<long long> matches;  // clipped counts, n = 1..max_n
  std::vector<long long> totals;   // candidate n-gram counts
  long long candidate_length = 0;
  long long reference_length = 0;  // closest reference length (shorter on ties)

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const Tokens& candidate, const std::vector<Tokens>& references, int max_n = 4);

// Geometric mean of clipped precisions times the brevity penalty, on a
// 0-100 scale. For n >= 2 a zero clipped count is smoothed to 1/(total+1);
// a zero unigram precision gives 0.
double bleu_from_stats(const BleuStats& stats);
double bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n = 4);

// Micro-averaged: n-gram statistics are summed before the score is formed.
double corpus_bleu(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
                   int max_n = 4);

// Fraction of aligned pairs whose normalized token sequences are identical.
double syntactic_correlation(const std::vector<Tokens>& ours, const std::vector<Tokens>& reference_system);

enum class SemanticFlag { equal, similar, dissimilar, indeterminate };
std::string_view to_string(SemanticFlag flag);

// Cosine of the mean embedding vectors of two sentences (tokens missing from
// the space are skipped); empty when either side has no known token.
std::optional<double> sentence_cosine(const Tokens& a, const Tokens& b, const EmbeddingSpace& space);

struct SemanticResult {
  std::optional<double> fraction;  // similar / (similar + dissimilar)
  std::vector<SemanticFlag> flags;
};

// Embedding-cosine proxy for analyst judgment over syntactically unequal
// pairs: similar iff cosine >= threshold.
SemanticResult semantic_relevance(const std::vector<Tokens>& ours, const std::vector<Tokens>& reference_system,
                                  const EmbeddingSpace& en_space, double threshold = 0.7);

struct EvalReport {
  double token_accuracy = 0;
  double perplexity = 1;
  double bleu = 0;  // corpus-level
  double sentence_bleu_mean = 0;
  std::optional<double> syntactic_correlation;
  std::optional<double> semantic_relevance;
  double semantic_threshold = 0.7;
  std::size_t evaluated_pairs = 0;
  std::size_t reference_pairs = 0;
  bool robust = false;
};

// accuracy > 0.60, perplexity < 6 and 15 <= BLEU <= 36.
bool is_robust(double token_accuracy, double perplexity, double bleu);

void write_report_json(std::ostream& out, const EvalReport& report);

// exp(mean token cross-entropy) under teacher forcing.
template <typename Scalar>
double perplexity(const Seq2SeqModel<Scalar>& model, const std::vector<TermPair>& pairs) {
  if (pairs.empty()) throw InputError("perplexity: no pairs");
  const auto data = encode_pairs(model, pairs);
  double loss = 0;
  std::size_t tokens = 0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(data.size(), start + kChunk); ++i) idx.push_back(i);
    const BatchLoss bl = batch_loss<Scalar>(model, make_batch<Scalar>(data, idx), nullptr);
    loss += bl.loss_sum;
    tokens += bl.tokens;
  }
  const double mean = loss / static_cast<double>(tokens);
  if (!std::isfinite(mean)) throw NumericError("perplexity: non-finite cross-entropy");
  return std::exp(mean);
}

// Reference file: "source_text<TAB>reference_translation" per line.
struct ReferenceRow {
  std::string source;
  std::string reference;
};
std::vector<ReferenceRow> read_reference_tsv(std::istream& in);

}  // namespace xlintel

#endif  // XLINTEL_EVALUATION_HPP_
