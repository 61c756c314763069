#include "xlintel/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "xlintel/alignment.hpp"
#include "xlintel/translator/checkpoint.hpp"
#include "xlintel/translator/train.hpp"

namespace xlintel {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SerializationError("cannot write " + path);
  return out;
}

std::vector<TermPair> load_pairs(const std::string& path) {
  auto in = open_in(path);
  return read_pairs(in);
}

void check_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string("config: '") + section + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string("config: unknown key '") + key + "' in '" + section + "'");
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& target) {
  if (auto it = obj.find(key); it != obj.end()) target = it->get<T>();
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (min_count < 1) throw ConfigError("corpus.min_count must be >= 1");
  embeddings.validate();
  translator.validate();
  if (!(kappa_threshold >= -1 && kappa_threshold <= 1)) throw ConfigError("alignment.kappa_threshold must lie in [-1, 1]");
  if (!(semantic_threshold >= -1 && semantic_threshold <= 1))
    throw ConfigError("evaluation.semantic_threshold must lie in [-1, 1]");
  if (paths.out_dir.empty()) throw ConfigError("paths.out_dir is required");
  std::vector<std::pair<const char*, std::string>> inputs = {
      {"tweets_ru", paths.tweets_ru},   {"tweets_en", paths.tweets_en},   {"keywords", paths.keywords},
      {"ru_synsets", paths.ru_synsets}, {"en_synsets", paths.en_synsets}, {"pairing", paths.pairing},
      {"labels", paths.labels}};
  if (paths.refs) inputs.emplace_back("refs", *paths.refs);
  for (const auto& [key, path] : inputs) {
    if (path.empty()) throw ConfigError(std::string("paths.") + key + " is required");
    if (!fs::is_regular_file(path)) throw ConfigError(std::string("paths.") + key + ": no such file " + path);
  }
}

PipelineConfig parse_pipeline_config(std::istream& in, const std::string& base_dir) {
  const json root = json::parse(in, nullptr, false);
  if (!root.is_object()) throw ConfigError("config is not a JSON object");
  PipelineConfig c;
  try {
    check_keys(root, "<root>", {"seed", "paths", "corpus", "embeddings", "alignment", "translator", "evaluation"});
    read_opt(root, "seed", c.seed);

    const fs::path base(base_dir);
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).lexically_normal().string(); };
    if (auto it = root.find("paths"); it != root.end()) {
      check_keys(*it, "paths",
                 {"tweets_ru", "tweets_en", "keywords", "ru_synsets", "en_synsets", "pairing", "labels", "refs", "out_dir"});
      auto path = [&](const char* key, std::string& target) {
        if (auto p = it->find(key); p != it->end()) target = resolve(p->get<std::string>());
      };
      path("tweets_ru", c.paths.tweets_ru);
      path("tweets_en", c.paths.tweets_en);
      path("keywords", c.paths.keywords);
      path("ru_synsets", c.paths.ru_synsets);
      path("en_synsets", c.paths.en_synsets);
      path("pairing", c.paths.pairing);
      path("labels", c.paths.labels);
      path("out_dir", c.paths.out_dir);
      if (auto p = it->find("refs"); p != it->end() && !p->is_null()) c.paths.refs = resolve(p->get<std::string>());
    }
    if (auto it = root.find("corpus"); it != root.end()) {
      check_keys(*it, "corpus", {"min_count"});
      read_opt(*it, "min_count", c.min_count);
    }
    if (auto it = root.find("embeddings"); it != root.end()) {
      check_keys(*it, "embeddings", {"dim", "window", "negatives", "epochs", "initial_lr", "min_lr", "subsample_t"});
      read_opt(*it, "dim", c.embeddings.dim);
      read_opt(*it, "window", c.embeddings.window);
      read_opt(*it, "negatives", c.embeddings.negatives);
      read_opt(*it, "epochs", c.embeddings.epochs);
      read_opt(*it, "initial_lr", c.embeddings.initial_lr);
      read_opt(*it, "min_lr", c.embeddings.min_lr);
      read_opt(*it, "subsample_t", c.embeddings.subsample_t);
    }
    if (auto it = root.find("alignment"); it != root.end()) {
      check_keys(*it, "alignment", {"kappa_threshold"});
      read_opt(*it, "kappa_threshold", c.kappa_threshold);
    }
    if (auto it = root.find("translator"); it != root.end()) {
      check_keys(*it, "translator",
                 {"batch_size", "epochs", "latent_dim", "max_pairs", "max_len", "learning_rate", "grad_clip"});
      read_opt(*it, "batch_size", c.translator.batch_size);
      read_opt(*it, "epochs", c.translator.epochs);
      read_opt(*it, "latent_dim", c.translator.latent_dim);
      read_opt(*it, "max_pairs", c.translator.max_pairs);
      read_opt(*it, "max_len", c.translator.max_len);
      read_opt(*it, "learning_rate", c.translator.learning_rate);
      read_opt(*it, "grad_clip", c.translator.grad_clip);
    }
    if (auto it = root.find("evaluation"); it != root.end()) {
      check_keys(*it, "evaluation", {"semantic_threshold"});
      read_opt(*it, "semantic_threshold", c.semantic_threshold);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.embeddings.seed = c.seed;
  c.translator.seed = c.seed;
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_pipeline_config(in, fs::path(path).parent_path().string());
}

std::uint64_t embed_seed(std::uint64_t seed, Lang lang) { return seed + (lang == Lang::ru ? 1 : 2); }
std::uint64_t train_seed(std::uint64_t seed) { return seed + 3; }

IngestSummary run_ingest(const std::string& input, Lang lang, const std::string& keywords, const std::string& out) {
  std::set<std::string> kw;
  {
    auto in = open_in(keywords);
    kw = read_keywords(in);
  }
  auto in = open_in(input);
  const IngestResult parsed = parse_tweet_jsonl(in, lang);
  const auto kept = filter_by_keywords(parsed.records, kw);
  if (kept.empty()) throw EmptyCorpusError("no record matched the keyword list");
  auto os = open_out(out);
  write_corpus_jsonl(os, kept);
  if (!os) throw SerializationError("cannot write " + out);
  return {parsed.records.size(), parsed.skipped, kept.size()};
}

EmbeddingSpace run_embed(const std::string& corpus, Lang lang, int min_count, const SgnsConfig& config,
                         const std::string& out) {
  auto in = open_in(corpus);
  const IngestResult parsed = parse_tweet_jsonl(in, lang);
  std::vector<Tokens> sequences;
  sequences.reserve(parsed.records.size());
  for (const auto& r : parsed.records) sequences.push_back(normalize_text(r.text));
  const Vocabulary vocab = build_vocabulary(sequences, min_count);
  SkipgramResult result = train_skipgram(sequences, vocab, config, lang);
  save_embeddings(out, result.space);
  return std::move(result.space);
}

AlignSummary run_align(const std::string& ru_synsets, const std::string& en_synsets, const std::string& pairing,
                       const std::string& labels, double threshold, const std::string& db_out,
                       const std::string& pairs_out) {
  auto ru_in = open_in(ru_synsets);
  auto en_in = open_in(en_synsets);
  auto pairing_in = open_in(pairing);
  auto labels_in = open_in(labels);
  const auto entries = build_alignment_db(read_synsets(ru_in), read_synsets(en_in), read_pairing_index(pairing_in),
                                          read_labels(labels_in), threshold);
  {
    auto os = open_out(db_out);
    write_alignment_db(os, entries);
  }
  const auto pairs = generate_training_pairs(entries);
  if (!pairs_out.empty()) {
    auto os = open_out(pairs_out);
    write_pairs(os, pairs);
  }
  AlignSummary s;
  s.entries = entries.size();
  for (const auto& e : entries) s.accepted += e.accepted;
  s.pairs = pairs.size();
  return s;
}

Seq2SeqModel<float> run_train(const std::string& pairs_path, const std::string& src_emb, const std::string& tgt_emb,
                              const TrainConfig& config, const std::string& out_dir, std::ostream* log) {
  config.validate();
  const auto pairs = load_pairs(pairs_path);
  if (pairs.empty()) throw EmptyTrainingSetError("no training pairs in " + pairs_path);
  const auto src_space = load_embeddings(src_emb, Lang::ru);
  const auto tgt_space = load_embeddings(tgt_emb, Lang::en);
  std::vector<Tokens> src_seqs, tgt_seqs;
  for (const auto& p : pairs) {
    src_seqs.push_back(p.ru);
    tgt_seqs.push_back(p.en);
  }
  const Vocabulary src_vocab = build_vocabulary(src_seqs, 1);
  const Vocabulary tgt_vocab = build_vocabulary(tgt_seqs, 1);
  auto model = init_model<float>(src_vocab, tgt_vocab, src_space, tgt_space, config);
  auto result = train_translator(std::move(model), pairs, [&](int epoch, double loss) {
    if (log) *log << "train: epoch " << epoch + 1 << "/" << config.epochs << " loss " << loss << '\n';
  });
  save_model(result.model, out_dir);
  return std::move(result.model);
}

EvalReport evaluate_model(const Seq2SeqModel<float>& model, const std::vector<TermPair>& pairs,
                          const std::vector<ReferenceRow>& refs, const EmbeddingSpace* en_space,
                          double semantic_threshold) {
  if (pairs.empty()) throw InputError("evaluate: no pairs");
  EvalReport r;
  r.semantic_threshold = semantic_threshold;
  std::vector<Tokens> predictions, references;
  std::vector<std::vector<Tokens>> ref_sets;
  double sentence_sum = 0;
  for (const auto& p : pairs) {
    predictions.push_back(translate_greedy(model, p.ru, model.hyper.max_len));
    references.push_back(p.en);
    ref_sets.push_back({p.en});
    sentence_sum += bleu(predictions.back(), ref_sets.back());
  }
  r.token_accuracy = token_accuracy(predictions, references);
  r.perplexity = perplexity(model, pairs);
  r.bleu = corpus_bleu(predictions, ref_sets);
  r.sentence_bleu_mean = sentence_sum / static_cast<double>(pairs.size());
  r.evaluated_pairs = pairs.size();

  if (!refs.empty()) {
    std::vector<Tokens> ours, theirs;
    for (const auto& row : refs) {
      ours.push_back(translate_greedy(model, normalize_text(row.source), model.hyper.max_len));
      theirs.push_back(normalize_text(row.reference));
    }
    r.syntactic_correlation = syntactic_correlation(ours, theirs);
    if (en_space) r.semantic_relevance = semantic_relevance(ours, theirs, *en_space, semantic_threshold).fraction;
    r.reference_pairs = refs.size();
  }
  r.robust = is_robust(r.token_accuracy, r.perplexity, r.bleu);
  return r;
}

EvalReport run_evaluate(const std::string& model_dir, const std::string& pairs, const EvaluateOptions& options,
                        const std::string& report_out) {
  const auto model = load_model<float>(model_dir);
  std::vector<ReferenceRow> refs;
  if (options.refs) {
    auto in = open_in(*options.refs);
    refs = read_reference_tsv(in);
  }
  std::optional<EmbeddingSpace> en_space;
  if (options.en_emb) en_space = load_embeddings(*options.en_emb, Lang::en);
  const EvalReport report =
      evaluate_model(model, load_pairs(pairs), refs, en_space ? &*en_space : nullptr, options.semantic_threshold);
  if (!report_out.empty()) {
    auto os = open_out(report_out);
    write_report_json(os, report);
  }
  return report;
}

EvalReport run_pipeline(const PipelineConfig& config, std::ostream* log) {
  stage("config", [&] { config.validate(); });
  const fs::path out(config.paths.out_dir);
  const auto at = [&](const char* name) { return (out / name).string(); };
  auto say = [&](const std::string& msg) {
    if (log) *log << msg << '\n';
  };

  stage("ingest", [&] {
    for (Lang lang : {Lang::ru, Lang::en}) {
      const std::string name = std::string("corpus.") + std::string(to_string(lang)) + ".jsonl";
      const auto s = run_ingest(lang == Lang::ru ? config.paths.tweets_ru : config.paths.tweets_en, lang,
                                config.paths.keywords, at(name.c_str()));
      say("ingest: " + std::string(to_string(lang)) + " kept " + std::to_string(s.kept) + " of " +
          std::to_string(s.parsed) + " (" + std::to_string(s.skipped) + " skipped)");
    }
  });
  stage("embed", [&] {
    for (Lang lang : {Lang::ru, Lang::en}) {
      SgnsConfig sg = config.embeddings;
      sg.seed = embed_seed(config.seed, lang);
      const std::string l(to_string(lang));
      const auto space = run_embed(at(("corpus." + l + ".jsonl").c_str()), lang, config.min_count, sg,
                                   at(("emb." + l + ".txt").c_str()));
      say("embed: " + l + " vocabulary " + std::to_string(space.vocab.regular_size()));
    }
  });
  stage("align", [&] {
    const auto s = run_align(config.paths.ru_synsets, config.paths.en_synsets, config.paths.pairing, config.paths.labels,
                             config.kappa_threshold, at("alignment.jsonl"), at("pairs.jsonl"));
    say("align: accepted " + std::to_string(s.accepted) + " of " + std::to_string(s.entries) + " entries, " +
        std::to_string(s.pairs) + " pairs");
  });
  stage("train", [&] {
    TrainConfig tc = config.translator;
    tc.seed = train_seed(config.seed);
    run_train(at("pairs.jsonl"), at("emb.ru.txt"), at("emb.en.txt"), tc, at("model"), log);
  });
  return stage("evaluate", [&] {
    EvaluateOptions opts;
    opts.refs = config.paths.refs;
    opts.en_emb = at("emb.en.txt");
    opts.semantic_threshold = config.semantic_threshold;
    const auto report = run_evaluate(at("model"), at("pairs.jsonl"), opts, at("report.json"));
    say("evaluate: report written to " + at("report.json"));
    return report;
  });
}

}  // namespace xlintel
