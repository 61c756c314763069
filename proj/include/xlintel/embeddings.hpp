#ifndef XLINTEL_EMBEDDINGS_HPP_
#define XLINTEL_EMBEDDINGS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "xlintel/corpus.hpp"
#include "xlintel/errors.hpp"
#include "xlintel/tensor.hpp"

namespace xlintel {

struct SgnsConfig {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double initial_lr = 0.025;
  double min_lr = 0.025 * 1e-4;
  double subsample_t = 1e-4;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

// Target vectors for one language. Rows are indexed by vocabulary id; the
// four special rows are zero and never persisted.
struct EmbeddingSpace {
  Lang lang = Lang::en;
  int dim = 0;
  Vocabulary vocab;
  RowMatrix<double> vectors;

  // Throws UnknownTokenError.
  Eigen::Ref<const Vector<double>> row(const std::string& token) const;
};

struct SkipgramResult {
  EmbeddingSpace space;
  std::vector<double> epoch_loss;  // mean SGNS loss per (center, context) pair
};

// Skip-gram with negative sampling, single-threaded and bit-reproducible for a
// fixed seed. Out-of-vocabulary tokens are dropped from the stream.
SkipgramResult train_skipgram(const std::vector<Tokens>& corpus, const Vocabulary& vocab,
                              const SgnsConfig& config, Lang lang = Lang::en);

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw InputError("cosine_similarity: dimension mismatch");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0))
    throw UndefinedSimilarityError("cosine_similarity: zero vector");
  // Products commute and the norm pair is ordered, so cos(a,b) == cos(b,a).
  const Scalar denom = na < nb ? na * nb : nb * na;
  const Scalar c = a.dot(b) / denom;
  return std::clamp(c, Scalar(-1), Scalar(1));
}

struct Neighbor {
  std::string token;
  double similarity;
};

// Top-k regular tokens by cosine, descending with lexicographic ties. The
// query token itself is excluded.
std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space, const std::string& token,
                                        int k);
std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space,
                                        const Eigen::Ref<const Vector<double>>& query, int k);

// "V dim" header, then "token v_1 ... v_dim" per regular token.
void save_embeddings(std::ostream& out, const EmbeddingSpace& space);
EmbeddingSpace load_embeddings(std::istream& in, Lang lang = Lang::en);
void save_embeddings(const std::string& path, const EmbeddingSpace& space);
EmbeddingSpace load_embeddings(const std::string& path, Lang lang = Lang::en);

namespace sgns {

template <typename Scalar>
Scalar log_sigmoid(Scalar x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// Loss of one (center, context, negatives) sample:
//   -log s(u_ctx . v) - sum_k log s(-u_k . v)
template <typename Scalar>
Scalar loss(const RowMatrix<Scalar>& input, const RowMatrix<Scalar>& output, int center,
            int context, std::span<const int> negatives) {
  const auto v = input.row(center);
  Scalar total = -log_sigmoid<Scalar>(output.row(context).dot(v));
  for (int neg : negatives) total -= log_sigmoid<Scalar>(-output.row(neg).dot(v));
  return total;
}

// Analytic gradient of `loss`. grad_output row 0 belongs to the context
// token, row 1 + k to negatives[k]; callers accumulate rows that share ids.
template <typename Scalar>
Scalar loss_and_gradients(const RowMatrix<Scalar>& input, const RowMatrix<Scalar>& output,
                          int center, int context, std::span<const int> negatives,
                          Vector<Scalar>& grad_center, RowMatrix<Scalar>& grad_output) {
  const auto v = input.row(center);
  const Eigen::Index n = static_cast<Eigen::Index>(negatives.size()) + 1;
  grad_center.setZero(input.cols());
  grad_output.resize(n, input.cols());
  Scalar total = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int id = j == 0 ? context : negatives[static_cast<std::size_t>(j - 1)];
    const Scalar label = j == 0 ? Scalar(1) : Scalar(0);
    const Scalar score = output.row(id).dot(v);
    total -= j == 0 ? log_sigmoid<Scalar>(score) : log_sigmoid<Scalar>(-score);
    const Scalar coeff = sigmoid<Scalar>(score) - label;
    grad_center.noalias() += coeff * output.row(id).transpose();
    grad_output.row(j) = coeff * v;
  }
  return total;
}

}  // namespace sgns

}  // namespace xlintel

#endif  // XLINTEL_EMBEDDINGS_HPP_
