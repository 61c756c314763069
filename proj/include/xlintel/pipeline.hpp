#ifndef XLINTEL_PIPELINE_HPP_
#define XLINTEL_PIPELINE_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "xlintel/corpus.hpp"
#include "xlintel/embeddings.hpp"
#include "xlintel/errors.hpp"
#include "xlintel/evaluation.hpp"
#include "xlintel/translator/seq2seq.hpp"

namespace xlintel {

// A failure inside one named stage; what() carries the stage prefix.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelinePaths {
  std::string tweets_ru;
  std::string tweets_en;
  std::string keywords;
  std::string ru_synsets;
  std::string en_synsets;
  std::string pairing;
  std::string labels;
  std::optional<std::string> refs;
  std::string out_dir;
};

struct PipelineConfig {
  PipelinePaths paths;
  int min_count = 5;
  SgnsConfig embeddings;
  double kappa_threshold = 0.66;
  TrainConfig translator;
  double semantic_threshold = 0.7;
  std::uint64_t seed = 1;

  // Throws ConfigError on out-of-range values or missing input files.
  void validate() const;
};

// JSON sections: seed, paths, corpus, embeddings, alignment, translator,
// evaluation. Relative paths resolve against the config file's directory.
// Unknown keys are rejected.
PipelineConfig parse_pipeline_config(std::istream& in, const std::string& base_dir = ".");
PipelineConfig load_pipeline_config(const std::string& path);

// Stage seeds derived from the config seed.
std::uint64_t embed_seed(std::uint64_t seed, Lang lang);
std::uint64_t train_seed(std::uint64_t seed);

struct IngestSummary {
  std::size_t parsed = 0;
  std::size_t skipped = 0;
  std::size_t kept = 0;
};
IngestSummary run_ingest(const std::string& input, Lang lang, const std::string& keywords, const std::string& out);

// Builds the vocabulary from the corpus tokens and trains SGNS.
EmbeddingSpace run_embed(const std::string& corpus, Lang lang, int min_count, const SgnsConfig& config,
                         const std::string& out);

struct AlignSummary {
  std::size_t entries = 0;
  std::size_t accepted = 0;
  std::size_t pairs = 0;
};
AlignSummary run_align(const std::string& ru_synsets, const std::string& en_synsets, const std::string& pairing,
                       const std::string& labels, double threshold, const std::string& db_out,
                       const std::string& pairs_out);

// Vocabularies come from the pairs (min_count 1); embeddings seed the tables.
Seq2SeqModel<float> run_train(const std::string& pairs, const std::string& src_emb, const std::string& tgt_emb,
                              const TrainConfig& config, const std::string& out_dir, std::ostream* log = nullptr);

struct EvaluateOptions {
  std::optional<std::string> refs;
  std::optional<std::string> en_emb;
  double semantic_threshold = 0.7;
};

EvalReport evaluate_model(const Seq2SeqModel<float>& model, const std::vector<TermPair>& pairs,
                          const std::vector<ReferenceRow>& refs, const EmbeddingSpace* en_space,
                          double semantic_threshold);
EvalReport run_evaluate(const std::string& model_dir, const std::string& pairs, const EvaluateOptions& options,
                        const std::string& report_out);

// ingest -> embed -> align -> train -> evaluate, every artifact under
// paths.out_dir. Failures surface as StageError.
EvalReport run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

}  // namespace xlintel

#endif  // XLINTEL_PIPELINE_HPP_
