#ifndef XLINTEL_TRANSLATOR_SEQ2SEQ_HPP_
#define XLINTEL_TRANSLATOR_SEQ2SEQ_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "xlintel/corpus.hpp"
#include "xlintel/embeddings.hpp"
#include "xlintel/errors.hpp"
#include "xlintel/tensor.hpp"
#include "xlintel/translator/lstm.hpp"

namespace xlintel {

struct TrainConfig {
  int batch_size = 64;
  int epochs = 100;
  int latent_dim = 256;
  int max_pairs = 10000;
  int max_len = 20;
  double learning_rate = 0.001;
  double grad_clip = 5.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (batch_size < 1) throw ConfigError("translator: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("translator: epochs must be >= 1");
    if (latent_dim < 1) throw ConfigError("translator: latent_dim must be >= 1");
    if (max_pairs < 1) throw ConfigError("translator: max_pairs must be >= 1");
    if (max_len < 3) throw ConfigError("translator: max_len must be >= 3");
    if (!(learning_rate > 0)) throw ConfigError("translator: learning_rate must be > 0");
    if (!(grad_clip > 0)) throw ConfigError("translator: grad_clip must be > 0");
  }
};

template <typename Scalar>
struct TensorView {
  std::string_view name;
  Scalar* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<Vector<std::remove_const_t<Scalar>>, Eigen::Unaligned> flat() const
    requires(!std::is_const_v<Scalar>)
  {
    return {data, size()};
  }
  Eigen::Map<const Vector<std::remove_const_t<Scalar>>, Eigen::Unaligned> cflat() const { return {data, size()}; }
};

template <typename Scalar>
struct Seq2SeqParams {
  RowMatrix<Scalar> src_embed;  // |Vs| x d
  RowMatrix<Scalar> tgt_embed;  // |Vt| x d
  LstmCell<Scalar> encoder;
  LstmCell<Scalar> decoder;
  RowMatrix<Scalar> W_out;  // |Vt| x h
  Vector<Scalar> b_out;     // |Vt|

  Seq2SeqParams() = default;
  Seq2SeqParams(Eigen::Index src_vocab, Eigen::Index tgt_vocab, Eigen::Index embed_dim, Eigen::Index hidden)
      : src_embed(RowMatrix<Scalar>::Zero(src_vocab, embed_dim)),
        tgt_embed(RowMatrix<Scalar>::Zero(tgt_vocab, embed_dim)),
        encoder(embed_dim, hidden),
        decoder(embed_dim, hidden),
        W_out(RowMatrix<Scalar>::Zero(tgt_vocab, hidden)),
        b_out(Vector<Scalar>::Zero(tgt_vocab)) {}

  Seq2SeqParams zeros_like() const {
    return Seq2SeqParams(src_embed.rows(), tgt_embed.rows(), src_embed.cols(), W_out.cols());
  }

  // Fixed order; checkpoints and optimizers rely on it.
  std::vector<TensorView<Scalar>> tensors() { return views<Scalar>(*this); }
  std::vector<TensorView<const Scalar>> tensors() const { return views<const Scalar>(*this); }

  template <typename U>
  Seq2SeqParams<U> cast() const {
    Seq2SeqParams<U> out;
    out.src_embed = src_embed.template cast<U>();
    out.tgt_embed = tgt_embed.template cast<U>();
    out.encoder = encoder.template cast<U>();
    out.decoder = decoder.template cast<U>();
    out.W_out = W_out.template cast<U>();
    out.b_out = b_out.template cast<U>();
    return out;
  }

 private:
  template <typename S, typename Self>
  static std::vector<TensorView<S>> views(Self& self) {
    auto mat = [](std::string_view name, auto& m) {
      return TensorView<S>{name, m.data(), m.rows(), m.cols()};
    };
    return {mat("src_embed", self.src_embed),     mat("tgt_embed", self.tgt_embed),
            mat("encoder.W_x", self.encoder.W_x), mat("encoder.W_h", self.encoder.W_h),
            mat("encoder.b", self.encoder.b),     mat("decoder.W_x", self.decoder.W_x),
            mat("decoder.W_h", self.decoder.W_h), mat("decoder.b", self.decoder.b),
            mat("W_out", self.W_out),             mat("b_out", self.b_out)};
  }
};

template <typename Scalar>
struct Seq2SeqModel {
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  Seq2SeqParams<Scalar> params;
  TrainConfig hyper;

  Eigen::Index embed_dim() const { return params.src_embed.cols(); }
  Eigen::Index hidden() const { return params.W_out.cols(); }

  template <typename U>
  Seq2SeqModel<U> cast() const {
    return Seq2SeqModel<U>{src_vocab, tgt_vocab, params.template cast<U>(), hyper};
  }
};

// Builds the model vocabularies' parameter tables. Rows of tokens known to a
// space are copied from it; specials and unknown tokens draw from U(-0.05,
// 0.05); LSTM and output weights draw from U(-1/sqrt(h), 1/sqrt(h)).
template <typename Scalar>
Seq2SeqModel<Scalar> init_model(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                const EmbeddingSpace& src_space, const EmbeddingSpace& tgt_space,
                                const TrainConfig& config) {
  config.validate();
  if (src_space.dim != tgt_space.dim)
    throw ConfigError("init_model: source dim " + std::to_string(src_space.dim) + " != target dim " +
                      std::to_string(tgt_space.dim));
  if (src_space.dim < 1) throw ConfigError("init_model: embedding spaces are empty");
  const Eigen::Index d = src_space.dim;
  const Eigen::Index h = config.latent_dim;

  Seq2SeqModel<Scalar> model{src_vocab, tgt_vocab,
                             Seq2SeqParams<Scalar>(src_vocab.size(), tgt_vocab.size(), d, h), config};
  std::mt19937_64 rng(config.seed);

  auto fill_table = [&](RowMatrix<Scalar>& table, const Vocabulary& vocab, const EmbeddingSpace& space) {
    std::uniform_real_distribution<double> small(-0.05, 0.05);
    for (int w = 0; w < vocab.size(); ++w) {
      std::optional<int> src_row;
      if (!Vocabulary::is_special(w)) src_row = space.vocab.find(vocab.token(w));
      if (src_row && !Vocabulary::is_special(*src_row)) {
        table.row(w) = space.vectors.row(*src_row).template cast<Scalar>();
      } else {
        for (Eigen::Index j = 0; j < d; ++j) table(w, j) = static_cast<Scalar>(small(rng));
      }
    }
  };
  fill_table(model.params.src_embed, src_vocab, src_space);
  fill_table(model.params.tgt_embed, tgt_vocab, tgt_space);

  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  std::uniform_real_distribution<double> weight(-bound, bound);
  auto views = model.params.tensors();
  for (std::size_t t = 2; t < views.size(); ++t) {
    auto flat = views[t].flat();
    for (Eigen::Index k = 0; k < flat.size(); ++k) flat[k] = static_cast<Scalar>(weight(rng));
  }
  return model;
}

// Index matrices, one column per sequence (T x B), right-padded with PAD.
struct Batch {
  Eigen::MatrixXi src;
  Eigen::MatrixXi tgt;
};

inline Batch make_batch(const std::vector<const TokenIds*>& src, const std::vector<const TokenIds*>& tgt) {
  Batch batch;
  const auto B = static_cast<Eigen::Index>(src.size());
  std::size_t src_len = 0, tgt_len = 0;
  for (const auto* s : src) src_len = std::max(src_len, s->size());
  for (const auto* t : tgt) tgt_len = std::max(tgt_len, t->size());
  batch.src.setConstant(static_cast<Eigen::Index>(src_len), B, Vocabulary::kPad);
  batch.tgt.setConstant(static_cast<Eigen::Index>(tgt_len), B, Vocabulary::kPad);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& s = *src[static_cast<std::size_t>(b)];
    const auto& t = *tgt[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i < s.size(); ++i) batch.src(static_cast<Eigen::Index>(i), b) = s[i];
    for (std::size_t i = 0; i < t.size(); ++i) batch.tgt(static_cast<Eigen::Index>(i), b) = t[i];
  }
  return batch;
}

namespace detail {

inline void check_ids(const Eigen::MatrixXi& ids, int vocab_size, const char* what) {
  if (ids.size() && (ids.minCoeff() < 0 || ids.maxCoeff() >= vocab_size))
    throw InputError(std::string(what) + ": token index out of range");
}

template <typename Scalar>
Matrix<Scalar> gather(const RowMatrix<Scalar>& table, const Eigen::MatrixXi& ids, Eigen::Index t) {
  Matrix<Scalar> x(table.cols(), ids.cols());
  for (Eigen::Index b = 0; b < ids.cols(); ++b) x.col(b) = table.row(ids(t, b)).transpose();
  return x;
}

// Column-wise log-softmax.
template <typename Scalar>
Matrix<Scalar> log_softmax(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.cols(); ++b) {
    const Scalar m = logits.col(b).maxCoeff();
    const Scalar lse = m + std::log((logits.col(b).array() - m).exp().sum());
    out.col(b) = logits.col(b).array() - lse;
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits) {
  return detail::log_softmax<Scalar>(logits).col(0).array().exp().matrix();
}

template <typename Scalar>
struct LstmState {
  Vector<Scalar> h;
  Vector<Scalar> c;
};

// Runs the encoder over the non-PAD prefix of `src_indices`.
template <typename Scalar>
LstmState<Scalar> encode(const Seq2SeqModel<Scalar>& model, const TokenIds& src_indices) {
  const auto h = model.hidden();
  LstmState<Scalar> state{Vector<Scalar>::Zero(h), Vector<Scalar>::Zero(h)};
  for (int id : src_indices) {
    if (id < 0 || id >= model.src_vocab.size()) throw InputError("encode: token index out of range");
  }
  for (int id : src_indices) {
    if (id == Vocabulary::kPad) break;
    auto [h_next, c_next] =
        lstm_step<Scalar>(model.params.encoder, model.params.src_embed.row(id).transpose(), state.h, state.c);
    state.h = std::move(h_next);
    state.c = std::move(c_next);
  }
  return state;
}

// Teacher forcing: row t holds the logits predicting tgt[t + 1] from gold
// input tgt[t]. One row per non-PAD target position after the first.
template <typename Scalar>
Matrix<Scalar> decode_train(const Seq2SeqModel<Scalar>& model, const TokenIds& tgt_indices,
                            const LstmState<Scalar>& init) {
  if (tgt_indices.empty() || tgt_indices.front() != Vocabulary::kSos)
    throw InputError("decode_train: target must begin with SOS");
  for (int id : tgt_indices) {
    if (id < 0 || id >= model.tgt_vocab.size()) throw InputError("decode_train: token index out of range");
  }
  std::size_t steps = 0;
  while (steps + 1 < tgt_indices.size() && tgt_indices[steps + 1] != Vocabulary::kPad) ++steps;

  Matrix<Scalar> logits(static_cast<Eigen::Index>(steps), model.tgt_vocab.size());
  LstmState<Scalar> state = init;
  for (std::size_t t = 0; t < steps; ++t) {
    auto [h_next, c_next] = lstm_step<Scalar>(
        model.params.decoder, model.params.tgt_embed.row(tgt_indices[t]).transpose(), state.h, state.c);
    state.h = std::move(h_next);
    state.c = std::move(c_next);
    logits.row(static_cast<Eigen::Index>(t)) = (model.params.W_out * state.h + model.params.b_out).transpose();
  }
  return logits;
}

struct BatchLoss {
  double loss_sum = 0;     // summed token cross-entropy
  std::size_t tokens = 0;  // predicted (non-PAD) target positions
  double mean() const { return tokens ? loss_sum / static_cast<double>(tokens) : 0.0; }
};

// Mean token cross-entropy of a batch under teacher forcing. When `grad` is
// given it receives the exact gradient of that mean (BPTT over full
// sequences); `grad` must be shaped like the model and is overwritten.
template <typename Scalar>
BatchLoss batch_loss(const Seq2SeqModel<Scalar>& model, const Batch& batch, Seq2SeqParams<Scalar>* grad) {
  const auto& p = model.params;
  const Eigen::Index H = model.hidden();
  const Eigen::Index B = batch.src.cols();
  detail::check_ids(batch.src, model.src_vocab.size(), "batch_loss");
  detail::check_ids(batch.tgt, model.tgt_vocab.size(), "batch_loss");

  // Encoder; finished columns carry their state forward unchanged.
  Matrix<Scalar> h = Matrix<Scalar>::Zero(H, B);
  Matrix<Scalar> c = Matrix<Scalar>::Zero(H, B);
  std::vector<LstmStepCache<Scalar>> enc_cache;
  std::vector<Eigen::Array<bool, 1, Eigen::Dynamic>> enc_mask;
  for (Eigen::Index t = 0; t < batch.src.rows(); ++t) {
    Eigen::Array<bool, 1, Eigen::Dynamic> active = (batch.src.row(t).array() != Vocabulary::kPad);
    if (!active.any()) break;
    enc_cache.emplace_back();
    auto& cache = enc_cache.back();
    lstm_forward<Scalar>(p.encoder, detail::gather(p.src_embed, batch.src, t), h, c, cache);
    for (Eigen::Index b = 0; b < B; ++b) {
      if (active(b)) {
        h.col(b) = cache.h.col(b);
        c.col(b) = cache.c.col(b);
      }
    }
    enc_mask.push_back(std::move(active));
  }

  // Decoder with teacher forcing.
  BatchLoss result;
  std::vector<LstmStepCache<Scalar>> dec_cache;
  std::vector<Matrix<Scalar>> dec_probs;
  for (Eigen::Index t = 0; t + 1 < batch.tgt.rows(); ++t) {
    if (!(batch.tgt.row(t + 1).array() != Vocabulary::kPad).any()) break;
    dec_cache.emplace_back();
    auto& cache = dec_cache.back();
    lstm_forward<Scalar>(p.decoder, detail::gather(p.tgt_embed, batch.tgt, t), h, c, cache);
    h = cache.h;
    c = cache.c;
    Matrix<Scalar> logits = p.W_out * h;
    logits.colwise() += p.b_out;
    Matrix<Scalar> logp = detail::log_softmax<Scalar>(logits);
    for (Eigen::Index b = 0; b < B; ++b) {
      const int gold = batch.tgt(t + 1, b);
      if (gold == Vocabulary::kPad) continue;
      result.loss_sum -= static_cast<double>(logp(gold, b));
      ++result.tokens;
    }
    if (grad) dec_probs.push_back(logp.array().exp().matrix());
  }
  if (!grad || result.tokens == 0) {
    if (grad) *grad = p.zeros_like();
    return result;
  }

  Seq2SeqParams<Scalar>& g = *grad;
  g = p.zeros_like();
  const Scalar inv_tokens = Scalar(1) / static_cast<Scalar>(result.tokens);
  Matrix<Scalar> dh = Matrix<Scalar>::Zero(H, B);
  Matrix<Scalar> dc = Matrix<Scalar>::Zero(H, B);
  Matrix<Scalar> dx, dh_prev, dc_prev;

  for (auto t = static_cast<Eigen::Index>(dec_cache.size()) - 1; t >= 0; --t) {
    Matrix<Scalar>& dlogits = dec_probs[static_cast<std::size_t>(t)];
    for (Eigen::Index b = 0; b < B; ++b) {
      const int gold = batch.tgt(t + 1, b);
      if (gold == Vocabulary::kPad) {
        dlogits.col(b).setZero();
      } else {
        dlogits(gold, b) -= Scalar(1);
      }
    }
    dlogits *= inv_tokens;
    const auto& cache = dec_cache[static_cast<std::size_t>(t)];
    g.W_out.noalias() += dlogits * cache.h.transpose();
    g.b_out.noalias() += dlogits.rowwise().sum();
    dh.noalias() += p.W_out.transpose() * dlogits;
    lstm_backward<Scalar>(p.decoder, cache, dh, dc, g.decoder, &dx, dh_prev, dc_prev);
    for (Eigen::Index b = 0; b < B; ++b) g.tgt_embed.row(batch.tgt(t, b)) += dx.col(b).transpose();
    dh.swap(dh_prev);
    dc.swap(dc_prev);
  }

  for (auto t = static_cast<Eigen::Index>(enc_cache.size()) - 1; t >= 0; --t) {
    const auto& active = enc_mask[static_cast<std::size_t>(t)];
    Matrix<Scalar> dh_cell = dh;
    Matrix<Scalar> dc_cell = dc;
    for (Eigen::Index b = 0; b < B; ++b) {
      if (!active(b)) {
        dh_cell.col(b).setZero();
        dc_cell.col(b).setZero();
      }
    }
    lstm_backward<Scalar>(p.encoder, enc_cache[static_cast<std::size_t>(t)], dh_cell, dc_cell, g.encoder, &dx,
                          dh_prev, dc_prev);
    for (Eigen::Index b = 0; b < B; ++b) {
      if (active(b)) {
        g.src_embed.row(batch.src(t, b)) += dx.col(b).transpose();
        dh.col(b) = dh_prev.col(b);
        dc.col(b) = dc_prev.col(b);
      }
    }
  }
  return result;
}

// Greedy decoding: feed back the argmax (PAD and SOS excluded, lowest index
// on ties) until EOS or `max_len` emitted tokens.
template <typename Scalar>
Tokens translate_greedy(const Seq2SeqModel<Scalar>& model, const Tokens& src, int max_len) {
  if (src.empty() || max_len <= 0) return {};
  const TokenIds src_ids = encode_sequence(model.src_vocab, src, model.hyper.max_len);
  LstmState<Scalar> state = encode(model, src_ids);
  Tokens out;
  int input = Vocabulary::kSos;
  const auto& p = model.params;
  while (static_cast<int>(out.size()) < max_len) {
    auto [h_next, c_next] = lstm_step<Scalar>(p.decoder, p.tgt_embed.row(input).transpose(), state.h, state.c);
    state.h = std::move(h_next);
    state.c = std::move(c_next);
    const Vector<Scalar> logits = p.W_out * state.h + p.b_out;
    int best = Vocabulary::kEos;
    for (int w = Vocabulary::kEos; w < logits.size(); ++w) {
      if (logits(w) > logits(best)) best = w;
    }
    if (best == Vocabulary::kEos) break;
    out.push_back(model.tgt_vocab.token(best));
    input = best;
  }
  return out;
}

}  // namespace xlintel

#endif  // XLINTEL_TRANSLATOR_SEQ2SEQ_HPP_
