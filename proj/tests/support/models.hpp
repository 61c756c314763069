// Small hand-built models shared by the unit and acceptance tests.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xlintel/translator/seq2seq.hpp"

namespace testmodels {

using namespace xlintel;

// Regular tokens "a", "b", ... after the four specials.
inline Vocabulary letters_vocab(int regular) {
  std::vector<std::string> toks;
  for (int i = 0; i < regular; ++i) toks.push_back(std::string(1, static_cast<char>('a' + i)));
  return Vocabulary::from_tokens(toks);
}

// Every parameter drawn from U(-scale, scale).
template <typename Scalar>
Seq2SeqModel<Scalar> random_model(int regular, int d, int h, std::uint64_t seed, double scale) {
  TrainConfig cfg;
  cfg.latent_dim = h;
  cfg.max_len = 10;
  cfg.seed = seed;
  Seq2SeqModel<Scalar> m{letters_vocab(regular), letters_vocab(regular),
                         Seq2SeqParams<Scalar>(regular + 4, regular + 4, d, h), cfg};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& t : m.params.tensors()) {
    auto f = t.flat();
    for (Eigen::Index k = 0; k < f.size(); ++k) f[k] = static_cast<Scalar>(u(rng));
  }
  return m;
}

}  // namespace testmodels
