#include "xlintel/embeddings.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace xlintel {

void SgnsConfig::validate() const {
  if (dim < 1) throw ConfigError("sgns: dim must be >= 1");
  if (window < 1) throw ConfigError("sgns: window must be >= 1");
  if (negatives < 1) throw ConfigError("sgns: negatives must be >= 1");
  if (epochs < 1) throw ConfigError("sgns: epochs must be >= 1");
  if (!(min_lr > 0) || !(min_lr <= initial_lr)) throw ConfigError("sgns: need 0 < min_lr <= initial_lr");
  if (!(subsample_t >= 0)) throw ConfigError("sgns: subsample_t must be >= 0");
}

Eigen::Ref<const Vector<double>> EmbeddingSpace::row(const std::string& token) const {
  auto id = vocab.find(token);
  if (!id || Vocabulary::is_special(*id)) throw UnknownTokenError("unknown token '" + token + "'");
  return vectors.row(*id).transpose();
}

SkipgramResult train_skipgram(const std::vector<Tokens>& corpus, const Vocabulary& vocab,
                              const SgnsConfig& config, Lang lang) {
  config.validate();
  const int V = vocab.size();

  std::vector<std::vector<int>> sentences;
  sentences.reserve(corpus.size());
  std::vector<std::int64_t> freq(static_cast<std::size_t>(V), 0);
  std::int64_t total_words = 0;
  for (const auto& seq : corpus) {
    std::vector<int> ids;
    ids.reserve(seq.size());
    for (const auto& tok : seq) {
      const int id = vocab.index_or_unk(tok);
      if (id == Vocabulary::kUnk) continue;
      ids.push_back(id);
      ++freq[static_cast<std::size_t>(id)];
    }
    total_words += static_cast<std::int64_t>(ids.size());
    if (!ids.empty()) sentences.push_back(std::move(ids));
  }
  if (total_words == 0) throw EmptyCorpusError("skip-gram corpus has no in-vocabulary tokens");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SkipgramResult result;
  auto& space = result.space;
  space.lang = lang;
  space.dim = config.dim;
  space.vocab = vocab;
  RowMatrix<double>& input = space.vectors;
  input.setZero(V, config.dim);
  for (int w = Vocabulary::kNumSpecials; w < V; ++w)
    for (int j = 0; j < config.dim; ++j) input(w, j) = (unit(rng) - 0.5) / config.dim;
  RowMatrix<double> output = RowMatrix<double>::Zero(V, config.dim);

  std::vector<double> weights(static_cast<std::size_t>(V), 0.0);
  for (int w = Vocabulary::kNumSpecials; w < V; ++w)
    weights[static_cast<std::size_t>(w)] = std::pow(static_cast<double>(freq[static_cast<std::size_t>(w)]), 0.75);
  std::discrete_distribution<int> noise(weights.begin(), weights.end());

  const double threshold = config.subsample_t * static_cast<double>(total_words);
  auto keep_prob = [&](int id) {
    if (config.subsample_t <= 0) return 1.0;
    const double f = static_cast<double>(freq[static_cast<std::size_t>(id)]);
    return (std::sqrt(f / threshold) + 1.0) * threshold / f;
  };

  const double total_steps = static_cast<double>(config.epochs) * static_cast<double>(total_words);
  double processed = 0;
  std::vector<int> kept;
  std::vector<int> negatives(static_cast<std::size_t>(config.negatives));
  Vector<double> grad_center;
  RowMatrix<double> grad_output;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0;
    std::int64_t samples = 0;
    for (const auto& sentence : sentences) {
      kept.clear();
      for (int id : sentence) {
        if (unit(rng) < keep_prob(id)) kept.push_back(id);
      }
      const double lr = std::max(
          config.min_lr, config.initial_lr - (config.initial_lr - config.min_lr) * processed / total_steps);
      processed += static_cast<double>(sentence.size());

      const int n = static_cast<int>(kept.size());
      for (int pos = 0; pos < n; ++pos) {
        const int span = std::uniform_int_distribution<int>(1, config.window)(rng);
        const int center = kept[static_cast<std::size_t>(pos)];
        for (int c = std::max(0, pos - span); c <= std::min(n - 1, pos + span); ++c) {
          if (c == pos) continue;
          const int context = kept[static_cast<std::size_t>(c)];
          for (auto& neg : negatives) {
            // Redraw collisions with the positive token; bounded for tiny vocabularies.
            neg = noise(rng);
            for (int tries = 0; neg == context && tries < 8; ++tries) neg = noise(rng);
          }
          loss_sum += sgns::loss_and_gradients<double>(input, output, center, context, negatives,
                                                       grad_center, grad_output);
          ++samples;
          output.row(context).noalias() -= lr * grad_output.row(0);
          for (std::size_t k = 0; k < negatives.size(); ++k)
            output.row(negatives[k]).noalias() -= lr * grad_output.row(static_cast<Eigen::Index>(k + 1));
          input.row(center).noalias() -= lr * grad_center.transpose();
        }
      }
    }
    const double mean = samples ? loss_sum / static_cast<double>(samples) : 0.0;
    if (!std::isfinite(mean)) throw NumericError("skip-gram loss diverged at epoch " + std::to_string(epoch));
    result.epoch_loss.push_back(mean);
  }
  return result;
}

namespace {

std::vector<Neighbor> rank(const EmbeddingSpace& space, const Eigen::Ref<const Vector<double>>& query,
                           int exclude, int k) {
  if (k < 1) throw ConfigError("nearest_neighbors: k must be >= 1");
  if (query.size() != space.dim) throw InputError("nearest_neighbors: query dimension mismatch");
  std::vector<Neighbor> all;
  for (int w = Vocabulary::kNumSpecials; w < space.vocab.size(); ++w) {
    if (w == exclude) continue;
    const auto row = space.vectors.row(w).transpose();
    if (row.isZero(0)) continue;
    all.push_back({space.vocab.token(w), cosine_similarity(query, row)});
  }
  auto cmp = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.token < b.token;
  };
  const auto take = std::min<std::size_t>(all.size(), static_cast<std::size_t>(k));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), cmp);
  all.resize(take);
  return all;
}

}  // namespace

std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space, const std::string& token, int k) {
  auto id = space.vocab.find(token);
  if (!id || Vocabulary::is_special(*id)) throw UnknownTokenError("unknown token '" + token + "'");
  return rank(space, space.vectors.row(*id).transpose(), *id, k);
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space,
                                        const Eigen::Ref<const Vector<double>>& query, int k) {
  return rank(space, query, -1, k);
}

void save_embeddings(std::ostream& out, const EmbeddingSpace& space) {
  out << space.vocab.regular_size() << ' ' << space.dim << '\n';
  char buf[32];
  for (int w = Vocabulary::kNumSpecials; w < space.vocab.size(); ++w) {
    out << space.vocab.token(w);
    for (int j = 0; j < space.dim; ++j) {
      std::snprintf(buf, sizeof buf, " %.17g", space.vectors(w, j));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw SerializationError("failed writing embeddings");
}

EmbeddingSpace load_embeddings(std::istream& in, Lang lang) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embedding file is empty");
  long long count = -1, dim = -1;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> dim) || (header >> extra) || count < 0 || dim < 1)
      throw FormatError("embedding header must be 'V dim'");
  }
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> values;
    std::string field;
    while (fields >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') throw FormatError("bad real '" + field + "' for token " + token);
      values.push_back(v);
    }
    if (static_cast<long long>(values.size()) != dim)
      throw FormatError("token '" + token + "' has " + std::to_string(values.size()) + " components, expected " +
                        std::to_string(dim));
    tokens.push_back(std::move(token));
    rows.push_back(std::move(values));
  }
  if (static_cast<long long>(tokens.size()) != count)
    throw FormatError("header declares " + std::to_string(count) + " vectors, file has " +
                      std::to_string(tokens.size()));

  EmbeddingSpace space;
  space.lang = lang;
  space.dim = static_cast<int>(dim);
  try {
    space.vocab = Vocabulary::from_tokens(tokens);
  } catch (const InputError& e) {
    throw FormatError(e.what());
  }
  space.vectors.setZero(space.vocab.size(), space.dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < space.dim; ++j)
      space.vectors(static_cast<Eigen::Index>(i) + Vocabulary::kNumSpecials, j) = rows[i][static_cast<std::size_t>(j)];
  return space;
}

void save_embeddings(const std::string& path, const EmbeddingSpace& space) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SerializationError("cannot write " + path);
  save_embeddings(out, space);
}

EmbeddingSpace load_embeddings(const std::string& path, Lang lang) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path);
  return load_embeddings(in, lang);
}

}  // namespace xlintel
