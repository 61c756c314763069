#include "xlintel/evaluation.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

namespace xlintel {

namespace {

using NgramCounts = std::map<std::vector<std::string>, long long>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

Tokens renormalize(const Tokens& tokens) { return normalize_text(join_tokens(tokens)); }

}  // namespace

double token_accuracy(const std::vector<Tokens>& predictions, const std::vector<Tokens>& references) {
  if (predictions.size() != references.size())
    throw InputError("token_accuracy: prediction and reference counts differ");
  std::size_t matched = 0, total = 0;
  for (std::size_t k = 0; k < references.size(); ++k) {
    const auto& pred = predictions[k];
    const auto& ref = references[k];
    total += ref.size();
    const std::size_t common = std::min(pred.size(), ref.size());
    for (std::size_t i = 0; i < common; ++i) matched += pred[i] == ref[i];
  }
  if (total == 0) throw InputError("token_accuracy: empty reference set");
  return static_cast<double>(matched) / static_cast<double>(total);
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  if (matches.size() < other.matches.size()) {
    matches.resize(other.matches.size(), 0);
    totals.resize(other.totals.size(), 0);
  }
  for (std::size_t n = 0; n < other.matches.size(); ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(const Tokens& candidate, const std::vector<Tokens>& references, int max_n) {
  if (max_n < 1) throw ConfigError("bleu: max_n must be >= 1");
  if (references.empty()) throw InputError("bleu: at least one reference is required");
  BleuStats stats;
  stats.matches.assign(static_cast<std::size_t>(max_n), 0);
  stats.totals.assign(static_cast<std::size_t>(max_n), 0);
  stats.candidate_length = static_cast<long long>(candidate.size());

  const auto c = static_cast<long long>(candidate.size());
  long long best = -1;
  for (const auto& ref : references) {
    const auto r = static_cast<long long>(ref.size());
    if (best < 0 || std::llabs(r - c) < std::llabs(best - c) || (std::llabs(r - c) == std::llabs(best - c) && r < best))
      best = r;
  }
  stats.reference_length = best;

  for (int n = 1; n <= max_n; ++n) {
    const auto cand = count_ngrams(candidate, static_cast<std::size_t>(n));
    NgramCounts max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, count] : count_ngrams(ref, static_cast<std::size_t>(n))) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    long long clipped = 0, total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    stats.matches[static_cast<std::size_t>(n - 1)] = clipped;
    stats.totals[static_cast<std::size_t>(n - 1)] = total;
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats) {
  if (stats.candidate_length == 0 || stats.matches.empty()) return 0.0;
  if (stats.matches[0] == 0) return 0.0;
  double log_sum = 0;
  for (std::size_t n = 0; n < stats.matches.size(); ++n) {
    double num = static_cast<double>(stats.matches[n]);
    double den = static_cast<double>(stats.totals[n]);
    if (n >= 1 && stats.matches[n] == 0) {
      num += 1;
      den += 1;
    }
    log_sum += std::log(num / den);
  }
  const double geo = std::exp(log_sum / static_cast<double>(stats.matches.size()));
  const double ratio = static_cast<double>(stats.reference_length) / static_cast<double>(stats.candidate_length);
  const double bp = std::min(1.0, std::exp(1.0 - ratio));
  return 100.0 * bp * geo;
}

double bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n) {
  if (candidate.empty()) return 0.0;
  return bleu_from_stats(bleu_stats(candidate, references, max_n));
}

double corpus_bleu(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
                   int max_n) {
  if (candidates.size() != references.size()) throw InputError("corpus_bleu: candidate/reference count mismatch");
  if (candidates.empty()) throw InputError("corpus_bleu: no candidates");
  BleuStats total;
  for (std::size_t i = 0; i < candidates.size(); ++i) total += bleu_stats(candidates[i], references[i], max_n);
  return bleu_from_stats(total);
}

double syntactic_correlation(const std::vector<Tokens>& ours, const std::vector<Tokens>& reference_system) {
  if (ours.size() != reference_system.size())
    throw InputError("syntactic_correlation: translation lists differ in length");
  if (ours.empty()) throw InputError("syntactic_correlation: no translations");
  std::size_t equal = 0;
  for (std::size_t i = 0; i < ours.size(); ++i) equal += renormalize(ours[i]) == renormalize(reference_system[i]);
  return static_cast<double>(equal) / static_cast<double>(ours.size());
}

std::string_view to_string(SemanticFlag flag) {
  switch (flag) {
    case SemanticFlag::equal:
      return "equal";
    case SemanticFlag::similar:
      return "similar";
    case SemanticFlag::dissimilar:
      return "dissimilar";
    case SemanticFlag::indeterminate:
      return "indeterminate";
  }
  return "indeterminate";
}

std::optional<double> sentence_cosine(const Tokens& a, const Tokens& b, const EmbeddingSpace& space) {
  auto mean_vector = [&](const Tokens& tokens) -> std::optional<Vector<double>> {
    Vector<double> sum = Vector<double>::Zero(space.dim);
    int known = 0;
    for (const auto& tok : tokens) {
      auto id = space.vocab.find(tok);
      if (!id || Vocabulary::is_special(*id)) continue;
      sum += space.vectors.row(*id).transpose();
      ++known;
    }
    if (known == 0) return std::nullopt;
    return sum / known;
  };
  const auto va = mean_vector(renormalize(a));
  const auto vb = mean_vector(renormalize(b));
  if (!va || !vb) return std::nullopt;
  try {
    return cosine_similarity(*va, *vb);
  } catch (const UndefinedSimilarityError&) {
    return std::nullopt;
  }
}

SemanticResult semantic_relevance(const std::vector<Tokens>& ours, const std::vector<Tokens>& reference_system,
                                  const EmbeddingSpace& en_space, double threshold) {
  if (ours.size() != reference_system.size())
    throw InputError("semantic_relevance: translation lists differ in length");
  SemanticResult result;
  std::size_t similar = 0, judged = 0;
  for (std::size_t i = 0; i < ours.size(); ++i) {
    if (renormalize(ours[i]) == renormalize(reference_system[i])) {
      result.flags.push_back(SemanticFlag::equal);
      continue;
    }
    const auto cos = sentence_cosine(ours[i], reference_system[i], en_space);
    if (!cos) {
      result.flags.push_back(SemanticFlag::indeterminate);
      continue;
    }
    ++judged;
    if (*cos >= threshold) {
      ++similar;
      result.flags.push_back(SemanticFlag::similar);
    } else {
      result.flags.push_back(SemanticFlag::dissimilar);
    }
  }
  if (judged) result.fraction = static_cast<double>(similar) / static_cast<double>(judged);
  return result;
}

bool is_robust(double token_accuracy, double perplexity, double bleu) {
  return token_accuracy > 0.60 && perplexity < 6.0 && bleu >= 15.0 && bleu <= 36.0;
}

void write_report_json(std::ostream& out, const EvalReport& r) {
  using json = nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {
      {"token_accuracy", r.token_accuracy},
      {"perplexity", r.perplexity},
      {"bleu", r.bleu},
      {"sentence_bleu_mean", r.sentence_bleu_mean},
      {"syntactic_correlation", opt(r.syntactic_correlation)},
      {"semantic_relevance", opt(r.semantic_relevance)},
      {"semantic_threshold", r.semantic_threshold},
      {"evaluated_pairs", r.evaluated_pairs},
      {"reference_pairs", r.reference_pairs},
      {"robust", r.robust},
      {"definitions",
       {{"token_accuracy",
         "token-level: matched positions / reference tokens, position-wise, greedy decoding; missing positions "
         "count as mismatches"},
        {"perplexity", "exp(mean per-token cross-entropy) under teacher forcing over non-PAD target positions"},
        {"bleu", "corpus-level BLEU-4 (micro-averaged n-gram statistics), 0-100, add-one smoothing for n>=2 "
                 "when the clipped count is zero, brevity penalty min(1, exp(1 - r/c))"},
        {"sentence_bleu_mean", "mean of sentence-level BLEU-4 with the same smoothing"},
        {"syntactic_correlation", "fraction of reference rows whose normalized translation equals the reference"},
        {"semantic_relevance",
         "PROXY for analyst judgment: among syntactically unequal rows, fraction whose mean-embedding cosine is "
         ">= semantic_threshold; rows without known tokens are indeterminate and excluded"},
        {"robust", "token_accuracy > 0.60 and perplexity < 6 and 15 <= bleu <= 36"}}}};
  out << j.dump(2) << '\n';
}

std::vector<ReferenceRow> read_reference_tsv(std::istream& in) {
  std::vector<ReferenceRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw FormatError("reference TSV line " + std::to_string(lineno) + " must have exactly two columns");
    rows.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return rows;
}

}  // namespace xlintel
