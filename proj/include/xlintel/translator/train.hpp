#ifndef XLINTEL_TRANSLATOR_TRAIN_HPP_
#define XLINTEL_TRANSLATOR_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "xlintel/alignment.hpp"
#include "xlintel/translator/seq2seq.hpp"

namespace xlintel {

// Adaptive moment estimation over every parameter tensor.
template <typename Scalar>
class Adam {
 public:
  Adam(const Seq2SeqParams<Scalar>& like, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8)
      : m_(like.zeros_like()), v_(like.zeros_like()), lr_(learning_rate), beta1_(beta1), beta2_(beta2),
        eps_(epsilon) {}

  void step(Seq2SeqParams<Scalar>& params, Seq2SeqParams<Scalar>& grad) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
    const Scalar corr1 = static_cast<Scalar>(1.0 - std::pow(beta1_, t_));
    const Scalar corr2 = static_cast<Scalar>(1.0 - std::pow(beta2_, t_));
    const Scalar lr = static_cast<Scalar>(lr_), eps = static_cast<Scalar>(eps_);
    auto p = params.tensors();
    auto g = grad.tensors();
    auto m = m_.tensors();
    auto v = v_.tensors();
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto pk = p[k].flat();
      auto gk = g[k].flat();
      auto mk = m[k].flat();
      auto vk = v[k].flat();
      mk = b1 * mk + (Scalar(1) - b1) * gk;
      vk = b2 * vk + (Scalar(1) - b2) * gk.cwiseAbs2();
      pk.array() -= lr * (mk.array() / corr1) / ((vk.array() / corr2).sqrt() + eps);
    }
  }

 private:
  Seq2SeqParams<Scalar> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

// Scales `grad` so its global L2 norm is at most `max_norm`; returns the
// norm before clipping.
template <typename Scalar>
double clip_global_norm(Seq2SeqParams<Scalar>& grad, double max_norm) {
  double sq = 0;
  for (const auto& t : grad.tensors()) sq += static_cast<double>(t.cflat().squaredNorm());
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const auto scale = static_cast<Scalar>(max_norm / norm);
    for (auto& t : grad.tensors()) t.flat() *= scale;
  }
  return norm;
}

struct EncodedPair {
  TokenIds src;
  TokenIds tgt;
};

template <typename Scalar>
std::vector<EncodedPair> encode_pairs(const Seq2SeqModel<Scalar>& model, const std::vector<TermPair>& pairs) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({encode_sequence(model.src_vocab, p.ru, model.hyper.max_len),
                   encode_sequence(model.tgt_vocab, p.en, model.hyper.max_len)});
  }
  return out;
}

template <typename Scalar>
Batch make_batch(const std::vector<EncodedPair>& data, std::span<const std::size_t> order) {
  std::vector<const TokenIds*> src, tgt;
  src.reserve(order.size());
  tgt.reserve(order.size());
  for (std::size_t i : order) {
    src.push_back(&data[i].src);
    tgt.push_back(&data[i].tgt);
  }
  return make_batch(src, tgt);
}

template <typename Scalar>
struct TrainResult {
  Seq2SeqModel<Scalar> model;
  std::vector<double> epoch_loss;  // token-weighted mean cross-entropy
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Mini-batch training with teacher forcing, full BPTT, global-norm clipping
// and Adam. Uses the first hyper.max_pairs pairs; the shuffle schedule is a
// pure function of hyper.seed.
template <typename Scalar>
TrainResult<Scalar> train_translator(Seq2SeqModel<Scalar> model, const std::vector<TermPair>& pairs,
                                     const EpochCallback& on_epoch = {}) {
  const TrainConfig& cfg = model.hyper;
  cfg.validate();
  if (pairs.empty()) throw EmptyTrainingSetError("train_translator: no training pairs");
  const std::vector<TermPair> capped(pairs.begin(),
                                     pairs.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                                                         pairs.size(), static_cast<std::size_t>(cfg.max_pairs))));
  const auto data = encode_pairs(model, capped);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  Adam<Scalar> adam(model.params, cfg.learning_rate);
  Seq2SeqParams<Scalar> grad = model.params.zeros_like();

  TrainResult<Scalar> result{std::move(model), {}};
  auto& m = result.model;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const Batch batch = make_batch<Scalar>(data, std::span<const std::size_t>(order).subspan(start, end - start));
      const BatchLoss bl = batch_loss(m, batch, &grad);
      if (!std::isfinite(bl.loss_sum))
        throw DivergenceError(epoch, "train_translator: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += bl.loss_sum;
      tokens += bl.tokens;
      clip_global_norm(grad, cfg.grad_clip);
      adam.step(m.params, grad);
    }
    const double mean = tokens ? loss_sum / static_cast<double>(tokens) : 0.0;
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

}  // namespace xlintel

#endif  // XLINTEL_TRANSLATOR_TRAIN_HPP_
