#ifndef XLINTEL_TRANSLATOR_GRADIENT_CHECK_HPP_
#define XLINTEL_TRANSLATOR_GRADIENT_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "xlintel/translator/seq2seq.hpp"

namespace xlintel {

struct GradientCheckOptions {
  double epsilon = 1e-5;
  int coords_per_tensor = 20;
  std::uint64_t seed = 0;
  // Applied to the analytic gradient before comparison (fault injection).
  std::function<void(Seq2SeqParams<double>&)> corrupt;
};

struct TensorCheck {
  std::string name;
  double max_relative_error = 0;
  int coordinates = 0;
};

struct GradientCheckResult {
  double max_relative_error = 0;
  double analytic_norm = 0;  // over the sampled coordinates
  double numeric_norm = 0;
  std::vector<TensorCheck> tensors;
};

// Compares the BPTT gradient of the single-pair loss with central finite
// differences on a random coordinate subset of every tensor. Embedding
// coordinates are drawn from rows the pair actually reads.
inline GradientCheckResult gradient_check(const Seq2SeqModel<double>& model, const TokenIds& src,
                                          const TokenIds& tgt, const GradientCheckOptions& options = {}) {
  if (!(options.epsilon >= 1e-6 && options.epsilon <= 1e-4))
    throw ConfigError("gradient_check: epsilon must lie in [1e-6, 1e-4]");
  const Batch batch = make_batch({&src}, {&tgt});

  Seq2SeqParams<double> analytic;
  batch_loss(model, batch, &analytic);
  if (options.corrupt) options.corrupt(analytic);

  Seq2SeqModel<double> probe = model;
  auto probe_views = probe.params.tensors();
  const auto grad_views = analytic.tensors();

  std::set<int> src_rows, tgt_rows;
  for (int id : src) {
    if (id == Vocabulary::kPad) break;
    src_rows.insert(id);
  }
  for (std::size_t t = 0; t + 1 < tgt.size() && tgt[t + 1] != Vocabulary::kPad; ++t) tgt_rows.insert(tgt[t]);

  std::mt19937_64 rng(options.seed);
  GradientCheckResult result;
  double analytic_sq = 0, numeric_sq = 0;
  for (std::size_t k = 0; k < probe_views.size(); ++k) {
    auto& view = probe_views[k];
    std::vector<Eigen::Index> candidates;
    if (k < 2) {
      const auto& rows = k == 0 ? src_rows : tgt_rows;
      for (int r : rows)
        for (Eigen::Index j = 0; j < view.cols; ++j) candidates.push_back(r * view.cols + j);
    } else {
      candidates.resize(static_cast<std::size_t>(view.size()));
      std::iota(candidates.begin(), candidates.end(), Eigen::Index{0});
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(std::min(candidates.size(), static_cast<std::size_t>(options.coords_per_tensor)));

    TensorCheck check{std::string(view.name), 0.0, static_cast<int>(candidates.size())};
    for (Eigen::Index idx : candidates) {
      double& theta = view.data[idx];
      const double saved = theta;
      theta = saved + options.epsilon;
      const double plus = batch_loss<double>(probe, batch, nullptr).mean();
      theta = saved - options.epsilon;
      const double minus = batch_loss<double>(probe, batch, nullptr).mean();
      theta = saved;
      const double numeric = (plus - minus) / (2 * options.epsilon);
      const double exact = grad_views[k].data[idx];
      if (!std::isfinite(numeric) || !std::isfinite(exact)) throw NumericError("gradient_check: non-finite gradient");
      const double rel = std::abs(exact - numeric) / std::max(1e-12, std::abs(exact) + std::abs(numeric));
      check.max_relative_error = std::max(check.max_relative_error, rel);
      analytic_sq += exact * exact;
      numeric_sq += numeric * numeric;
    }
    result.max_relative_error = std::max(result.max_relative_error, check.max_relative_error);
    result.tensors.push_back(std::move(check));
  }
  result.analytic_norm = std::sqrt(analytic_sq);
  result.numeric_norm = std::sqrt(numeric_sq);
  return result;
}

}  // namespace xlintel

#endif  // XLINTEL_TRANSLATOR_GRADIENT_CHECK_HPP_
