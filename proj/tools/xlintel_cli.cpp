// xlintel: command-line front end for the translation and intelligence pipeline.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "xlintel/alignment.hpp"
#include "xlintel/corpus.hpp"
#include "xlintel/embeddings.hpp"
#include "xlintel/errors.hpp"
#include "xlintel/evaluation.hpp"
#include "xlintel/intel.hpp"
#include "xlintel/pipeline.hpp"
#include "xlintel/translator/checkpoint.hpp"

namespace {

using namespace xlintel;

void add_sgns_flags(CLI::App* cmd, SgnsConfig& c) {
  cmd->add_option("--dim", c.dim, "Embedding dimension")->capture_default_str();
  cmd->add_option("--window", c.window, "Maximum context window")->capture_default_str();
  cmd->add_option("--negatives", c.negatives, "Negative samples per pair")->capture_default_str();
  cmd->add_option("--epochs", c.epochs, "Passes over the corpus")->capture_default_str();
  cmd->add_option("--initial-lr", c.initial_lr, "Initial learning rate")->capture_default_str();
  cmd->add_option("--min-lr", c.min_lr, "Final learning rate")->capture_default_str();
  cmd->add_option("--subsample", c.subsample_t, "Frequent-word subsampling threshold")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

void add_train_flags(CLI::App* cmd, TrainConfig& c) {
  cmd->add_option("--batch-size", c.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--latent-dim", c.latent_dim, "LSTM hidden size")->capture_default_str();
  cmd->add_option("--max-pairs", c.max_pairs, "Use at most this many pairs")->capture_default_str();
  cmd->add_option("--max-len", c.max_len, "Sequence length including SOS/EOS")->capture_default_str();
  cmd->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--grad-clip", c.grad_clip, "Global gradient norm clip")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

Lang lang_option(const std::string& s) { return parse_lang(s); }

std::ostream& out_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) throw SerializationError("cannot write " + path);
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Russian-to-English cyber threat intelligence translation"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // ingest
  std::string ingest_input, ingest_lang, ingest_keywords, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Filter tweet JSONL by language and keywords");
  ingest->add_option("--input", ingest_input, "Tweet JSONL")->required()->check(CLI::ExistingFile);
  ingest->add_option("--lang", ingest_lang, "en or ru")->required();
  ingest->add_option("--keywords", ingest_keywords, "Keyword list")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Output corpus JSONL")->required();

  // embed
  std::string embed_corpus, embed_lang, embed_out;
  int embed_min_count = 5;
  SgnsConfig sgns;
  auto* embed = app.add_subcommand("embed", "Train skip-gram embeddings for one language");
  embed->add_option("--corpus", embed_corpus, "Corpus JSONL from ingest")->required()->check(CLI::ExistingFile);
  embed->add_option("--lang", embed_lang, "en or ru")->required();
  embed->add_option("--out", embed_out, "Output embedding text file")->required();
  embed->add_option("--min-count", embed_min_count, "Vocabulary count threshold")->capture_default_str();
  add_sgns_flags(embed, sgns);

  // align
  std::string ru_synsets, en_synsets, pairing, labels, align_out, pairs_out;
  double kappa_threshold = 0.66;
  auto* align = app.add_subcommand("align", "Build the kappa-gated alignment database");
  align->add_option("--ru-synsets", ru_synsets, "Russian synsets JSONL")->required()->check(CLI::ExistingFile);
  align->add_option("--en-synsets", en_synsets, "English synsets JSONL")->required()->check(CLI::ExistingFile);
  align->add_option("--pairs", pairing, "Sense pairing index")->required()->check(CLI::ExistingFile);
  align->add_option("--labels", labels, "Annotator labels JSONL")->required()->check(CLI::ExistingFile);
  align->add_option("--kappa-threshold", kappa_threshold, "Accept entries with kappa above this")
      ->capture_default_str();
  align->add_option("--out", align_out, "Alignment database JSONL")->required();
  align->add_option("--pairs-out", pairs_out, "Training pairs JSONL");

  // train
  std::string train_pairs, src_emb, tgt_emb, train_out;
  TrainConfig train_cfg;
  bool train_quiet = false;
  auto* train = app.add_subcommand("train", "Train the encoder-decoder translator");
  train->add_option("--pairs", train_pairs, "Training pairs JSONL")->required()->check(CLI::ExistingFile);
  train->add_option("--src-emb", src_emb, "Russian embeddings")->required()->check(CLI::ExistingFile);
  train->add_option("--tgt-emb", tgt_emb, "English embeddings")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Checkpoint directory")->required();
  train->add_flag("--quiet", train_quiet, "Suppress per-epoch loss");
  add_train_flags(train, train_cfg);

  // translate
  std::string translate_model, translate_text, translate_input;
  int translate_max_len = 0;
  auto* translate = app.add_subcommand("translate", "Translate Russian text with a checkpoint");
  translate->add_option("--model", translate_model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  auto* text_opt = translate->add_option("--text", translate_text, "Text to translate");
  auto* input_opt = translate->add_option("--input", translate_input, "File with one text per line")
                        ->check(CLI::ExistingFile);
  text_opt->excludes(input_opt);
  translate->add_option("--max-len", translate_max_len, "Maximum output tokens (default: model max_len)");

  // evaluate
  std::string eval_model, eval_pairs, eval_refs, eval_report, eval_en_emb;
  double semantic_threshold = 0.7;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint and write an EvalReport");
  evaluate->add_option("--model", eval_model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--pairs", eval_pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--refs", eval_refs, "Reference translation TSV")->check(CLI::ExistingFile);
  evaluate->add_option("--en-emb", eval_en_emb, "English embeddings for the semantic proxy")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--semantic-threshold", semantic_threshold, "Cosine threshold")->capture_default_str();
  evaluate->add_option("--report", eval_report, "Report JSON (default stdout)");

  // rdf
  std::string rdf_text, rdf_gazetteer, rdf_out, rdf_id;
  auto* rdf = app.add_subcommand("rdf", "Emit Turtle for an English intelligence text");
  rdf->add_option("--text", rdf_text, "English text")->required();
  rdf->add_option("--gazetteer", rdf_gazetteer, "Gazetteer JSONL")->required()->check(CLI::ExistingFile);
  rdf->add_option("--out", rdf_out, "Turtle output (default stdout)");
  rdf->add_option("--intel-id", rdf_id, "Intelligence node id (default: content hash)");

  // neighbors
  std::string nn_emb, nn_token;
  int nn_k = 10;
  auto* neighbors = app.add_subcommand("neighbors", "Nearest neighbors of a token");
  neighbors->add_option("--emb", nn_emb, "Embedding file")->required()->check(CLI::ExistingFile);
  neighbors->add_option("--token", nn_token, "Query token")->required();
  neighbors->add_option("-k", nn_k, "Number of neighbors")->capture_default_str()->check(CLI::PositiveNumber);

  // pipeline
  std::string config_path, out_dir_override;
  std::optional<std::uint64_t> seed_override;
  auto* pipeline = app.add_subcommand("pipeline", "Run ingest, embed, align, train and evaluate");
  pipeline->add_option("--config", config_path, "Pipeline JSON config")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--seed", seed_override, "Override the config seed");
  pipeline->add_option("--out-dir", out_dir_override, "Override paths.out_dir");

  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == argv[1];
    if (!known) {
      std::cerr << "xlintel: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
      return 2;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "xlintel: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*ingest) {
      const auto s = run_ingest(ingest_input, lang_option(ingest_lang), ingest_keywords, ingest_out);
      std::cerr << "ingest: kept " << s.kept << " of " << s.parsed << " records (" << s.skipped << " skipped)\n";
    } else if (*embed) {
      const Lang lang = lang_option(embed_lang);
      const auto space = run_embed(embed_corpus, lang, embed_min_count, sgns, embed_out);
      std::cerr << "embed: " << space.vocab.regular_size() << " tokens, dim " << space.dim << '\n';
    } else if (*align) {
      const auto s = run_align(ru_synsets, en_synsets, pairing, labels, kappa_threshold, align_out, pairs_out);
      std::cerr << "align: accepted " << s.accepted << " of " << s.entries << " entries, " << s.pairs << " pairs\n";
    } else if (*train) {
      run_train(train_pairs, src_emb, tgt_emb, train_cfg, train_out, train_quiet ? nullptr : &std::cerr);
    } else if (*translate) {
      if (translate_text.empty() && translate_input.empty()) {
        std::cerr << "xlintel: translate needs --text or --input\n\n" << translate->help();
        return 2;
      }
      const auto model = load_model<float>(translate_model);
      const int max_len = translate_max_len > 0 ? translate_max_len : model.hyper.max_len;
      auto emit = [&](const std::string& line) {
        std::cout << join_tokens(translate_greedy(model, normalize_text(line), max_len)) << '\n';
      };
      if (!translate_input.empty()) {
        std::ifstream in(translate_input);
        std::string line;
        while (std::getline(in, line)) emit(line);
      } else {
        emit(translate_text);
      }
    } else if (*evaluate) {
      EvaluateOptions opts;
      if (!eval_refs.empty()) opts.refs = eval_refs;
      if (!eval_en_emb.empty()) opts.en_emb = eval_en_emb;
      opts.semantic_threshold = semantic_threshold;
      const auto report = run_evaluate(eval_model, eval_pairs, opts, eval_report);
      if (eval_report.empty()) write_report_json(std::cout, report);
    } else if (*rdf) {
      const Gazetteer gaz = read_gazetteer(rdf_gazetteer);
      const auto concepts = extract_concepts(normalize_text(rdf_text), gaz);
      const auto graph = build_intel_graph(concepts, rdf_id.empty() ? default_intel_id(rdf_text) : rdf_id);
      std::ofstream file;
      out_or_stdout(rdf_out, file) << serialize_turtle(graph);
    } else if (*neighbors) {
      const auto space = load_embeddings(nn_emb);
      for (const auto& n : nearest_neighbors(space, nn_token, nn_k)) std::cout << n.token << '\t' << n.similarity << '\n';
    } else if (*pipeline) {
      PipelineConfig cfg = load_pipeline_config(config_path);
      if (seed_override) cfg.seed = *seed_override;
      if (!out_dir_override.empty()) cfg.paths.out_dir = out_dir_override;
      const auto report = run_pipeline(cfg, &std::cerr);
      write_report_json(std::cout, report);
    }
  } catch (const StageError& e) {
    std::cerr << "xlintel: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "xlintel: " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
