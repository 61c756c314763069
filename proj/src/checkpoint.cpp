#include "xlintel/translator/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <type_traits>

#include <json.hpp>

namespace xlintel {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr const char* kManifest = "manifest.json";
constexpr const char* kBlob = "params.bin";
constexpr const char* kSrcVocab = "src.vocab";
constexpr const char* kTgtVocab = "tgt.vocab";

template <typename T>
void append_le(std::string& out, T value) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const auto bits = std::bit_cast<Bits>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T read_le(const char* p) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  Bits bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<Bits>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<T>(bits);
}

template <typename Scalar>
constexpr const char* scalar_name() {
  return std::is_same_v<Scalar, float> ? "float32" : "float64";
}

json config_to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"epochs", c.epochs},       {"latent_dim", c.latent_dim},
          {"max_pairs", c.max_pairs},   {"max_len", c.max_len},     {"learning_rate", c.learning_rate},
          {"grad_clip", c.grad_clip},   {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.max_pairs = j.at("max_pairs").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SerializationError("cannot write " + path.string());
}

}  // namespace

template <typename Scalar>
void save_model(const Seq2SeqModel<Scalar>& model, const std::string& dir) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw SerializationError("cannot create checkpoint directory " + dir + ": " + ec.message());

  std::string blob;
  json tensors = json::array();
  for (const auto& view : model.params.tensors()) {
    tensors.push_back({{"name", std::string(view.name)}, {"shape", {view.rows, view.cols}}, {"offset", blob.size()}});
    for (Eigen::Index k = 0; k < view.size(); ++k) append_le(blob, view.data[k]);
  }
  json manifest = {{"format_version", kFormatVersion},
                   {"scalar", scalar_name<Scalar>()},
                   {"d", model.embed_dim()},
                   {"h", model.hidden()},
                   {"src_vocab", kSrcVocab},
                   {"tgt_vocab", kTgtVocab},
                   {"blob", kBlob},
                   {"blob_bytes", blob.size()},
                   {"tensors", tensors},
                   {"config", config_to_json(model.hyper)}};

  std::ostringstream src, tgt;
  model.src_vocab.save(src);
  model.tgt_vocab.save(tgt);
  write_file(root / kSrcVocab, src.str());
  write_file(root / kTgtVocab, tgt.str());
  write_file(root / kBlob, blob);
  write_file(root / kManifest, manifest.dump(2) + "\n");
}

template <typename Scalar>
Seq2SeqModel<Scalar> load_model(const std::string& dir) {
  const fs::path root(dir);
  const json manifest = json::parse(read_file(root / kManifest), nullptr, false);
  if (!manifest.is_object()) throw FormatError("checkpoint manifest is not valid JSON");

  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion)
      throw FormatError("unsupported checkpoint format version");
    const std::string scalar = manifest.at("scalar").get<std::string>();
    if (scalar != "float32" && scalar != "float64") throw FormatError("unknown scalar type " + scalar);
    const std::size_t width = scalar == "float32" ? 4 : 8;
    const auto d = manifest.at("d").get<Eigen::Index>();
    const auto h = manifest.at("h").get<Eigen::Index>();
    if (d < 1 || h < 1) throw FormatError("manifest dimensions must be positive");

    Seq2SeqModel<Scalar> model;
    {
      std::istringstream src(read_file(root / manifest.at("src_vocab").get<std::string>()));
      std::istringstream tgt(read_file(root / manifest.at("tgt_vocab").get<std::string>()));
      model.src_vocab = Vocabulary::load(src);
      model.tgt_vocab = Vocabulary::load(tgt);
    }
    model.hyper = config_from_json(manifest.at("config"));
    if (model.hyper.latent_dim != h) throw FormatError("manifest h disagrees with config latent_dim");
    model.params = Seq2SeqParams<Scalar>(model.src_vocab.size(), model.tgt_vocab.size(), d, h);

    const std::string blob = read_file(root / manifest.at("blob").get<std::string>());
    const auto& entries = manifest.at("tensors");
    auto views = model.params.tensors();
    if (entries.size() != views.size()) throw FormatError("manifest lists the wrong number of tensors");
    std::size_t expected_offset = 0;
    for (std::size_t k = 0; k < views.size(); ++k) {
      const auto& e = entries[k];
      auto& view = views[k];
      if (e.at("name").get<std::string>() != view.name)
        throw FormatError("tensor " + std::to_string(k) + " should be " + std::string(view.name));
      const auto shape = e.at("shape").get<std::vector<Eigen::Index>>();
      if (shape.size() != 2 || shape[0] != view.rows || shape[1] != view.cols)
        throw FormatError("tensor " + std::string(view.name) + " has shape inconsistent with d=" +
                          std::to_string(d) + ", h=" + std::to_string(h) + " and the vocabularies");
      const auto offset = e.at("offset").get<std::size_t>();
      if (offset != expected_offset) throw FormatError("tensor " + std::string(view.name) + " has a bad offset");
      const std::size_t bytes = static_cast<std::size_t>(view.size()) * width;
      if (offset + bytes > blob.size())
        throw FormatError("blob is too small for tensor " + std::string(view.name));
      for (Eigen::Index i = 0; i < view.size(); ++i) {
        const char* p = blob.data() + offset + static_cast<std::size_t>(i) * width;
        view.data[i] = width == 4 ? static_cast<Scalar>(read_le<float>(p)) : static_cast<Scalar>(read_le<double>(p));
      }
      expected_offset += bytes;
    }
    if (expected_offset != blob.size()) throw FormatError("blob size does not match the manifest tensors");
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

template void save_model<float>(const Seq2SeqModel<float>&, const std::string&);
template void save_model<double>(const Seq2SeqModel<double>&, const std::string&);
template Seq2SeqModel<float> load_model<float>(const std::string&);
template Seq2SeqModel<double> load_model<double>(const std::string&);

}  // namespace xlintel
