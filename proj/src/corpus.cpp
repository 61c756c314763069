#include "xlintel/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "xlintel/errors.hpp"
#include "xlintel/unicode.hpp"

namespace xlintel {

namespace {

using json = nlohmann::json;

const char* const kSpecialNames[Vocabulary::kNumSpecials] = {"<pad>", "<s>", "</s>", "<unk>"};

bool is_space(char32_t cp) {
  return cp == U' ' || (cp >= U'\t' && cp <= U'\r') || cp == 0x85 || cp == 0xA0 ||
         cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000 || cp == 0xFEFF;
}

bool starts_with_at(const std::u32string& s, std::size_t pos, std::u32string_view prefix) {
  return s.size() - pos >= prefix.size() && s.compare(pos, prefix.size(), prefix) == 0;
}

// Position where a URL starts inside a lowercased chunk, or npos.
std::size_t find_url(const std::u32string& chunk) {
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    if (i > 0 && unicode::is_word_char(chunk[i - 1])) continue;
    if (starts_with_at(chunk, i, U"http://") || starts_with_at(chunk, i, U"https://") ||
        starts_with_at(chunk, i, U"www.")) {
      return i;
    }
  }
  return std::u32string::npos;
}

void split_chunk(const std::u32string& chunk, Tokens& out) {
  std::u32string current;
  auto flush = [&] {
    if (current.empty()) return;
    std::string token = unicode::encode_utf8(current);
    if (token != "rt") out.push_back(std::move(token));
    current.clear();
  };
  std::size_t i = 0;
  while (i < chunk.size()) {
    const char32_t cp = chunk[i];
    if (cp == U'@' && i + 1 < chunk.size() && unicode::is_word_char(chunk[i + 1])) {
      flush();
      ++i;
      while (i < chunk.size() && unicode::is_word_char(chunk[i])) ++i;
      continue;
    }
    if (unicode::is_word_char(cp)) {
      current.push_back(cp);
    } else if (cp == U'-' && !current.empty() && i + 1 < chunk.size() &&
               unicode::is_word_char(chunk[i + 1])) {
      current.push_back(cp);
    } else {
      flush();
    }
    ++i;
  }
  flush();
}

std::optional<TweetRecord> parse_record(const std::string& line) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!obj.is_object()) return std::nullopt;
  auto id = obj.find("id");
  auto text = obj.find("text");
  auto lang = obj.find("lang");
  if (id == obj.end() || text == obj.end() || lang == obj.end()) return std::nullopt;
  if (!id->is_string() || !text->is_string() || !lang->is_string()) return std::nullopt;
  TweetRecord rec;
  rec.id = id->get<std::string>();
  if (rec.id.empty()) return std::nullopt;
  rec.text = text->get<std::string>();
  const auto lang_str = lang->get<std::string>();
  if (lang_str == "en") {
    rec.lang = Lang::en;
  } else if (lang_str == "ru") {
    rec.lang = Lang::ru;
  } else {
    return std::nullopt;
  }
  if (auto created = obj.find("created_at"); created != obj.end() && !created->is_null()) {
    if (!created->is_string()) return std::nullopt;
    rec.created_at = created->get<std::string>();
  }
  return rec;
}

}  // namespace

std::string_view to_string(Lang lang) { return lang == Lang::en ? "en" : "ru"; }

Lang parse_lang(std::string_view text) {
  if (text == "en") return Lang::en;
  if (text == "ru") return Lang::ru;
  throw InputError("unknown language '" + std::string(text) + "' (expected en or ru)");
}

IngestResult parse_tweet_jsonl(std::istream& in, std::optional<Lang> lang_filter) {
  if (!in) throw IngestionError("input stream is not readable");
  IngestResult result;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    auto rec = parse_record(line);
    if (!rec || !seen_ids.insert(rec->id).second) {
      ++result.skipped;
      continue;
    }
    if (lang_filter && rec->lang != *lang_filter) continue;
    result.records.push_back(std::move(*rec));
  }
  if (in.bad()) throw IngestionError("read failure while ingesting tweets");
  if (result.records.empty()) throw EmptyCorpusError("no valid tweet records in input");
  return result;
}

std::vector<TweetRecord> filter_by_keywords(const std::vector<TweetRecord>& records,
                                            const std::set<std::string>& keywords) {
  if (keywords.empty()) throw ConfigError("keyword set is empty");
  std::vector<TweetRecord> kept;
  for (const auto& rec : records) {
    TweetRecord out = rec;
    out.tokens = normalize_text(rec.text);
    out.matched_keywords.clear();
    for (const auto& tok : out.tokens) {
      if (keywords.count(tok)) out.matched_keywords.insert(tok);
    }
    if (!out.matched_keywords.empty()) kept.push_back(std::move(out));
  }
  return kept;
}

Tokens normalize_text(std::string_view raw) {
  std::u32string text = unicode::decode_utf8(raw);
  for (auto& cp : text) cp = unicode::to_lower(cp);

  Tokens tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t end = i;
    while (end < text.size() && !is_space(text[end])) ++end;
    if (end > i) {
      std::u32string chunk = text.substr(i, end - i);
      if (auto url = find_url(chunk); url != std::u32string::npos) chunk.resize(url);
      split_chunk(chunk, tokens);
    }
    i = end;
  }
  return tokens;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::set<std::string> read_keywords(std::istream& in) {
  std::set<std::string> keywords;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    for (auto& tok : normalize_text(line)) keywords.insert(std::move(tok));
  }
  return keywords;
}

void write_corpus_jsonl(std::ostream& out, const std::vector<TweetRecord>& records) {
  for (const auto& rec : records) {
    json obj;
    obj["id"] = rec.id;
    obj["text"] = rec.text;
    obj["lang"] = std::string(to_string(rec.lang));
    if (rec.created_at) obj["created_at"] = *rec.created_at;
    obj["matched_keywords"] = json::array();
    for (const auto& kw : rec.matched_keywords) obj["matched_keywords"].push_back(kw);
    obj["tokens"] = rec.tokens;
    out << obj.dump() << '\n';
  }
}

// Vocabulary

Vocabulary::Vocabulary() {
  for (int i = 0; i < kNumSpecials; ++i) {
    tokens_.emplace_back(kSpecialNames[i]);
    index_.emplace(kSpecialNames[i], i);
  }
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens,
                                   const std::vector<std::int64_t>& counts) {
  if (!counts.empty() && counts.size() != tokens.size())
    throw InputError("vocabulary token/count length mismatch");
  Vocabulary vocab;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    if (tok.empty()) throw InputError("empty vocabulary token");
    if (!vocab.index_.emplace(tok, vocab.size()).second)
      throw InputError("duplicate or reserved vocabulary token '" + tok + "'");
    vocab.tokens_.push_back(tok);
    if (!counts.empty()) vocab.counts_[tok] = counts[i];
  }
  return vocab;
}

std::optional<int> Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::index_or_unk(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end() || it->second == kPad || it->second == kSos || it->second == kEos)
    return kUnk;
  return it->second;
}

std::int64_t Vocabulary::count(const std::string& token) const {
  auto it = counts_.find(token);
  return it == counts_.end() ? 0 : it->second;
}

void Vocabulary::save(std::ostream& out) const {
  for (int i = kNumSpecials; i < size(); ++i) {
    out << tokens_[static_cast<std::size_t>(i)] << '\t' << count(tokens_[static_cast<std::size_t>(i)])
        << '\n';
  }
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::vector<std::int64_t> counts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw FormatError("vocabulary line " + std::to_string(lineno) + " lacks token<TAB>count");
    tokens.push_back(line.substr(0, tab));
    try {
      counts.push_back(std::stoll(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw FormatError("vocabulary line " + std::to_string(lineno) + " has a bad count");
    }
  }
  try {
    return from_tokens(tokens, counts);
  } catch (const InputError& e) {
    throw FormatError(e.what());
  }
}

Vocabulary build_vocabulary(const std::vector<Tokens>& token_sequences, int min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, std::int64_t> counts;
  for (const auto& seq : token_sequences)
    for (const auto& tok : seq) ++counts[tok];

  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  if (kept.empty()) throw EmptyVocabularyError("no token reaches min_count " + std::to_string(min_count));
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens;
  std::vector<std::int64_t> token_counts;
  for (auto& [tok, n] : kept) {
    tokens.push_back(tok);
    token_counts.push_back(n);
  }
  return Vocabulary::from_tokens(tokens, token_counts);
}

TokenIds encode_sequence(const Vocabulary& vocab, const Tokens& tokens, int max_len) {
  if (max_len < 3) throw ConfigError("max_len must be >= 3");
  TokenIds ids(static_cast<std::size_t>(max_len), Vocabulary::kPad);
  ids[0] = Vocabulary::kSos;
  const std::size_t body = std::min(tokens.size(), static_cast<std::size_t>(max_len - 2));
  for (std::size_t i = 0; i < body; ++i) ids[i + 1] = vocab.index_or_unk(tokens[i]);
  ids[body + 1] = Vocabulary::kEos;
  return ids;
}

Tokens decode_sequence(const Vocabulary& vocab, const TokenIds& ids) {
  Tokens out;
  for (int id : ids) {
    if (id == Vocabulary::kSos || id == Vocabulary::kPad) continue;
    if (id == Vocabulary::kEos) break;
    out.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace xlintel
