#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "support/models.hpp"
#include "xlintel/embeddings.hpp"
#include "xlintel/evaluation.hpp"
#include "xlintel/pipeline.hpp"
#include "xlintel/translator/checkpoint.hpp"
#include "xlintel/translator/gradient_check.hpp"
#include "xlintel/translator/train.hpp"

namespace fs = std::filesystem;
using namespace xlintel;
using testmodels::random_model;

namespace {

Vector<double> random_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector<double> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

LstmCell<double> random_cell(std::mt19937_64& rng, Eigen::Index d, Eigen::Index h, double scale) {
  LstmCell<double> cell(d, h);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto* m : {&cell.W_x, &cell.W_h})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = u(rng);
  for (Eigen::Index i = 0; i < cell.b.size(); ++i) cell.b(i) = u(rng);
  return cell;
}

// Copy language: both sides are the same sentence over 50 words.
struct CopyFixture {
  std::vector<TermPair> pairs;
  EmbeddingSpace space;
  TrainConfig cfg;
};

const CopyFixture& copy_fixture() {
  static const CopyFixture fx = [] {
    CopyFixture f;
    std::vector<std::string> words = {"attack"};
    for (int i = 1; i < 50; ++i) words.push_back("w" + std::to_string(i));
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> len(1, 4), w(0, 49);
    f.pairs.push_back({{"attack"}, {"attack"}});
    while (f.pairs.size() < 500) {
      Tokens t;
      const int n = len(rng);
      for (int i = 0; i < n; ++i) t.push_back(words[static_cast<std::size_t>(w(rng))]);
      f.pairs.push_back({t, t});
    }
    std::vector<Tokens> side;
    for (const auto& p : f.pairs) side.push_back(p.en);
    SgnsConfig sg;
    sg.dim = 16;
    f.space = train_skipgram(side, build_vocabulary(side, 1), sg).space;
    f.cfg.batch_size = 16;
    f.cfg.latent_dim = 64;
    f.cfg.learning_rate = 0.01;
    f.cfg.epochs = 30;
    f.cfg.max_len = 8;
    f.cfg.seed = 3;
    return f;
  }();
  return fx;
}

Seq2SeqModel<float> copy_init() {
  const auto& f = copy_fixture();
  return init_model<float>(f.space.vocab, f.space.vocab, f.space, f.space, f.cfg);
}

const TrainResult<float>& copy_trained() {
  static const auto r = train_translator(copy_init(), copy_fixture().pairs);
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("xlintel_unit_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::remove_all(p);
  return p;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(LstmStep, ZeroParametersZeroState) {
  LstmCell<double> cell(5, 4);
  std::mt19937_64 rng(51);
  const auto [h, c] = lstm_step<double>(cell, random_vector(rng, 5, 3.0), Vector<double>::Zero(4), Vector<double>::Zero(4));
  EXPECT_TRUE(h.isZero(0));
  EXPECT_TRUE(c.isZero(0));
}

TEST(LstmStep, ZeroParametersCarryHalfTheCell) {
  LstmCell<double> cell(3, 4);
  Vector<double> v(4);
  v << 1.0, -2.0, 0.25, 7.0;
  const auto [h, c] = lstm_step<double>(cell, Vector<double>::Ones(3), Vector<double>::Zero(4), v);
  for (int j = 0; j < 4; ++j) {
    EXPECT_DOUBLE_EQ(c(j), 0.5 * v(j));
    EXPECT_DOUBLE_EQ(h(j), 0.5 * std::tanh(0.5 * v(j)));
  }
}

TEST(LstmStep, HiddenOutputBounded) {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto cell = random_cell(rng, 6, 5, 4.0);
    const auto [h, c] = lstm_step<double>(cell, random_vector(rng, 6, 10.0), random_vector(rng, 5, 1.0),
                                          random_vector(rng, 5, 20.0));
    // tanh saturates to exactly 1.0 in double.
    ASSERT_LE(h.cwiseAbs().maxCoeff(), 1.0);
    ASSERT_TRUE(c.allFinite());
  }
}

TEST(LstmStep, Errors) {
  LstmCell<double> cell(2, 2);
  Vector<double> x(2);
  x << 1.0, std::nan("");
  EXPECT_THROW(lstm_step<double>(cell, x, Vector<double>::Zero(2), Vector<double>::Zero(2)), NumericError);
  EXPECT_THROW(lstm_step<double>(cell, Vector<double>::Zero(3), Vector<double>::Zero(2), Vector<double>::Zero(2)),
               InputError);
}

TEST(Encode, AllPadGivesZeroState) {
  const auto m = random_model<double>(6, 4, 5, 1, 0.5);
  const auto s = encode(m, {0, 0, 0});
  EXPECT_TRUE(s.h.isZero(0));
  EXPECT_TRUE(s.c.isZero(0));
}

TEST(Encode, SingleTokenIsOneStep) {
  const auto m = random_model<double>(6, 4, 5, 2, 0.5);
  const auto s = encode(m, {7, 0});
  const auto [h, c] = lstm_step<double>(m.params.encoder, m.params.src_embed.row(7).transpose(),
                                        Vector<double>::Zero(5), Vector<double>::Zero(5));
  EXPECT_EQ(s.h, h);
  EXPECT_EQ(s.c, c);
}

TEST(Encode, PureAndRangeChecked) {
  const auto m = random_model<double>(6, 4, 5, 3, 0.5);
  const TokenIds ids = {1, 5, 6, 9, 2, 0};
  const auto a = encode(m, ids), b = encode(m, ids);
  EXPECT_EQ(std::memcmp(a.h.data(), b.h.data(), sizeof(double) * 5), 0);
  EXPECT_EQ(std::memcmp(a.c.data(), b.c.data(), sizeof(double) * 5), 0);
  EXPECT_THROW(encode(m, {1, 10}), InputError);
  EXPECT_THROW(encode(m, {-1}), InputError);
}

TEST(DecodeTrain, OneRowPerPredictedPosition) {
  const auto m = random_model<double>(6, 4, 5, 4, 0.5);
  const LstmState<double> init{Vector<double>::Zero(5), Vector<double>::Zero(5)};
  const auto logits = decode_train(m, encode_sequence(m.tgt_vocab, {"a", "b", "c"}, 8), init);
  // [SOS a b c EOS PAD PAD PAD]: 5 non-PAD positions
  EXPECT_EQ(logits.rows(), 4);
  EXPECT_EQ(logits.cols(), m.tgt_vocab.size());
  EXPECT_THROW(decode_train(m, {5, 2}, init), InputError);
}

TEST(DecodeTrain, SoftmaxRowsAreDistributions) {
  const auto m = random_model<double>(10, 4, 6, 5, 2.0);
  const LstmState<double> init{Vector<double>::Zero(6), Vector<double>::Zero(6)};
  const auto logits = decode_train(m, encode_sequence(m.tgt_vocab, {"a", "j", "c", "d", "e"}, 10), init);
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Vector<double> p = softmax<double>(logits.row(t).transpose());
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    EXPECT_GT(p.minCoeff(), 0.0);
    EXPECT_LT(p.maxCoeff(), 1.0);
  }
  const Vector<double> flat = softmax<double>(Vector<double>::Zero(9));
  for (Eigen::Index i = 0; i < 9; ++i) EXPECT_NEAR(flat(i), 1.0 / 9.0, 1e-15);
}

TEST(BatchLoss, UniformPredictionsCostLogV) {
  auto m = random_model<double>(9, 4, 4, 6, 0.5);
  m.params.W_out.setZero();
  m.params.b_out.setZero();
  const auto src = encode_sequence(m.src_vocab, {"a", "b"}, 10);
  const auto tgt = encode_sequence(m.tgt_vocab, {"c", "d", "e"}, 10);
  const auto bl = batch_loss<double>(m, make_batch({&src}, {&tgt}), nullptr);
  EXPECT_EQ(bl.tokens, 4u);
  EXPECT_NEAR(bl.mean(), std::log(13.0), 1e-12);
}

TEST(BatchLoss, MatchesPerVectorDecoder) {
  const auto m = random_model<double>(8, 5, 6, 7, 0.7);
  const auto src = encode_sequence(m.src_vocab, {"a", "h", "c"}, 10);
  const auto tgt = encode_sequence(m.tgt_vocab, {"b", "d"}, 10);
  const auto logits = decode_train(m, tgt, encode(m, src));
  double expected = 0;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Vector<double> p = softmax<double>(logits.row(t).transpose());
    expected -= std::log(p(tgt[static_cast<std::size_t>(t) + 1]));
  }
  const auto bl = batch_loss<double>(m, make_batch({&src}, {&tgt}), nullptr);
  EXPECT_NEAR(bl.loss_sum, expected, 1e-12);
}

TEST(BatchLoss, PaddingDoesNotLeakAcrossColumns) {
  const auto m = random_model<double>(8, 5, 6, 8, 0.7);
  std::mt19937_64 rng(53);
  std::uniform_int_distribution<int> len(1, 7), tok(0, 7);
  std::vector<TokenIds> src, tgt;
  for (int i = 0; i < 5; ++i) {
    Tokens s, t;
    for (int k = len(rng); k > 0; --k) s.push_back(m.src_vocab.token(4 + tok(rng)));
    for (int k = len(rng); k > 0; --k) t.push_back(m.tgt_vocab.token(4 + tok(rng)));
    src.push_back(encode_sequence(m.src_vocab, s, 10));
    tgt.push_back(encode_sequence(m.tgt_vocab, t, 10));
  }
  std::vector<const TokenIds*> ps, pt;
  for (int i = 0; i < 5; ++i) {
    ps.push_back(&src[static_cast<std::size_t>(i)]);
    pt.push_back(&tgt[static_cast<std::size_t>(i)]);
  }
  Seq2SeqParams<double> g_batch;
  const auto whole = batch_loss<double>(m, make_batch(ps, pt), &g_batch);

  double sum = 0;
  std::size_t tokens = 0;
  Seq2SeqParams<double> g_sum = m.params.zeros_like();
  for (int i = 0; i < 5; ++i) {
    Seq2SeqParams<double> g;
    const auto one = batch_loss<double>(m, make_batch({ps[static_cast<std::size_t>(i)]}, {pt[static_cast<std::size_t>(i)]}), &g);
    sum += one.loss_sum;
    tokens += one.tokens;
    auto acc = g_sum.tensors();
    const auto part = g.tensors();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k].flat() += static_cast<double>(one.tokens) * part[k].cflat();
  }
  EXPECT_EQ(whole.tokens, tokens);
  EXPECT_NEAR(whole.loss_sum, sum, 1e-10);
  const auto a = g_batch.tensors();
  const auto b = g_sum.tensors();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Vector<double> lhs = a[k].cflat() * static_cast<double>(tokens);
    EXPECT_LT((lhs - b[k].cflat()).cwiseAbs().maxCoeff(), 1e-10) << a[k].name;
  }
}

TEST(InitModel, CopiesKnownRowsAndBoundsTheRest) {
  const auto& f = copy_fixture();
  const auto tgt_vocab = Vocabulary::from_tokens({"attack", "unseen"});
  const auto m = init_model<double>(f.space.vocab, tgt_vocab, f.space, f.space, f.cfg);
  for (int i = Vocabulary::kNumSpecials; i < f.space.vocab.size(); ++i)
    EXPECT_EQ(m.params.src_embed.row(i), f.space.vectors.row(i));
  EXPECT_EQ(m.params.tgt_embed.row(4), f.space.row("attack").transpose());
  EXPECT_LE(m.params.tgt_embed.row(5).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LE(m.params.src_embed.row(Vocabulary::kPad).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_GT(m.params.src_embed.row(Vocabulary::kPad).norm(), 0.0);
}

TEST(InitModel, DeterministicForASeed) {
  const auto a = copy_init(), b = copy_init();
  const auto ta = a.params.tensors(), tb = b.params.tensors();
  for (std::size_t k = 0; k < ta.size(); ++k)
    EXPECT_EQ(std::memcmp(ta[k].data, tb[k].data, sizeof(float) * static_cast<std::size_t>(ta[k].size())), 0);
}

TEST(InitModel, DimensionMismatch) {
  const auto& f = copy_fixture();
  EmbeddingSpace other = f.space;
  other.dim = 8;
  other.vectors = RowMatrix<double>::Ones(other.vocab.size(), 8);
  EXPECT_THROW(init_model<float>(f.space.vocab, f.space.vocab, f.space, other, f.cfg), ConfigError);
}

TEST(GradientCheck, TinyModelAllTensors) {
  const auto m = random_model<double>(8, 8, 8, 42, 0.5);
  const auto src = encode_sequence(m.src_vocab, {"a", "c", "h"}, 10);
  const auto tgt = encode_sequence(m.tgt_vocab, {"b", "g", "d", "e"}, 10);
  GradientCheckOptions opt;
  opt.coords_per_tensor = 30;
  const auto r = gradient_check(m, src, tgt, opt);
  ASSERT_EQ(r.tensors.size(), 10u);
  for (const auto& t : r.tensors) {
    EXPECT_GT(t.coordinates, 0) << t.name;
    EXPECT_LT(t.max_relative_error, 1e-4) << t.name;
  }
}

TEST(GradientCheck, DetectsCorruptedOutputGradient) {
  const auto m = random_model<double>(8, 8, 8, 43, 0.5);
  const auto src = encode_sequence(m.src_vocab, {"a", "b"}, 10);
  const auto tgt = encode_sequence(m.tgt_vocab, {"c", "d"}, 10);
  GradientCheckOptions opt;
  opt.coords_per_tensor = 200;
  opt.corrupt = [](Seq2SeqParams<double>& g) { g.W_out *= 2.0; };
  const auto r = gradient_check(m, src, tgt, opt);
  EXPECT_GT(r.max_relative_error, 0.1);
  for (const auto& t : r.tensors)
    if (t.name == "W_out") EXPECT_GT(t.max_relative_error, 0.1);
}

TEST(GradientCheck, StationaryAtZeroLoss) {
  // One-token target is EOS alone; a huge EOS bias makes the loss vanish.
  auto m = random_model<double>(4, 4, 4, 44, 0.3);
  m.params.b_out.setZero();
  m.params.b_out(Vocabulary::kEos) = 1000.0;
  const auto src = encode_sequence(m.src_vocab, {"a"}, 10);
  const auto tgt = encode_sequence(m.tgt_vocab, {}, 10);
  const auto r = gradient_check(m, src, tgt);
  EXPECT_LT(r.analytic_norm, 1e-8);
  EXPECT_LT(r.numeric_norm, 1e-8);
}

TEST(GradientCheck, EpsilonRange) {
  const auto m = random_model<double>(4, 4, 4, 45, 0.3);
  GradientCheckOptions opt;
  opt.epsilon = 1e-2;
  EXPECT_THROW(gradient_check(m, {1, 4, 2}, {1, 5, 2}, opt), ConfigError);
}

TEST(Train, LossDecreasesAndIsFinite) {
  const auto& r = copy_trained();
  ASSERT_EQ(r.epoch_loss.size(), 30u);
  for (double l : r.epoch_loss) EXPECT_TRUE(std::isfinite(l));
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST(Train, SameSeedSameTrace) {
  auto cfg = copy_fixture().cfg;
  cfg.epochs = 3;
  const auto& f = copy_fixture();
  auto run = [&] { return train_translator(init_model<float>(f.space.vocab, f.space.vocab, f.space, f.space, cfg), f.pairs).epoch_loss; };
  EXPECT_EQ(run(), run());
}

TEST(Train, CopyLanguageIsLearned) {
  const auto& m = copy_trained().model;
  const auto r = evaluate_model(m, copy_fixture().pairs, {}, nullptr, 0.7);
  EXPECT_GE(r.token_accuracy, 0.95);
  EXPECT_LT(r.perplexity, 1.5);
  EXPECT_EQ(translate_greedy(m, {"attack"}, 8), (Tokens{"attack"}));
}

TEST(Train, EmptyPairs) { EXPECT_THROW(train_translator(copy_init(), {}), EmptyTrainingSetError); }

TEST(Train, NonFiniteLossReportsEpoch) {
  auto m = copy_init();
  m.params.b_out(5) = std::numeric_limits<float>::quiet_NaN();
  try {
    train_translator(std::move(m), copy_fixture().pairs);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 0);
  }
}

TEST(Translate, TerminatesAndRespectsLength) {
  const auto& m = copy_trained().model;
  std::mt19937_64 rng(54);
  std::uniform_int_distribution<int> len(0, 9), tok(0, m.src_vocab.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    Tokens src;
    for (int k = len(rng); k > 0; --k) src.push_back(m.src_vocab.token(tok(rng)));
    const int cap = 1 + trial % 6;
    const auto out = translate_greedy(m, src, cap);
    EXPECT_LE(static_cast<int>(out.size()), cap);
    EXPECT_EQ(out, translate_greedy(m, src, cap));
    for (const auto& t : out) EXPECT_NE(t, "<s>");
  }
  EXPECT_TRUE(translate_greedy(m, {}, 8).empty());
  EXPECT_LE(translate_greedy(m, {"qqq", "zzz", "xxx"}, 8).size(), 8u);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto dir = scratch_dir("ckpt");
  const auto& m = copy_trained().model;
  save_model(m, (dir / "a").string());
  const auto back = load_model<float>((dir / "a").string());
  save_model(back, (dir / "b").string());
  for (const char* f : {"params.bin", "manifest.json", "src.vocab", "tgt.vocab"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  for (const auto& src : copy_fixture().pairs) EXPECT_EQ(translate_greedy(back, src.ru, 8), translate_greedy(m, src.ru, 8));
  fs::remove_all(dir);
}

TEST(Checkpoint, ManifestBlobMismatch) {
  const auto dir = scratch_dir("mismatch");
  const auto m = random_model<float>(6, 4, 8, 46, 0.5);
  save_model(m, dir.string());
  nlohmann::json manifest;
  {
    std::ifstream in(dir / "manifest.json");
    in >> manifest;
  }
  manifest["h"] = 16;
  {
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2);
  }
  EXPECT_THROW(load_model<float>(dir.string()), FormatError);
  fs::remove_all(dir);
}

TEST(Checkpoint, TruncatedBlob) {
  const auto dir = scratch_dir("trunc");
  save_model(random_model<double>(6, 4, 8, 47, 0.5), dir.string());
  fs::resize_file(dir / "params.bin", fs::file_size(dir / "params.bin") / 2);
  EXPECT_THROW(load_model<double>(dir.string()), FormatError);
  EXPECT_THROW(load_model<double>((dir / "missing").string()), FormatError);
  fs::remove_all(dir);
}
