#ifndef XLINTEL_CORPUS_HPP_
#define XLINTEL_CORPUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xlintel {

enum class Lang { en, ru };

std::string_view to_string(Lang lang);
Lang parse_lang(std::string_view text);  // throws InputError

using Tokens = std::vector<std::string>;
using TokenIds = std::vector<int>;

struct TweetRecord {
  std::string id;
  std::string text;
  Lang lang = Lang::en;
  std::optional<std::string> created_at;
  std::set<std::string> matched_keywords;
  Tokens tokens;
};

struct IngestResult {
  std::vector<TweetRecord> records;
  std::size_t skipped = 0;  // malformed lines and duplicate ids
};

// Parses line-delimited JSON. Malformed lines are counted and skipped.
// Throws IngestionError if the stream fails and EmptyCorpusError when no
// valid record matches the filter.
IngestResult parse_tweet_jsonl(std::istream& in, std::optional<Lang> lang_filter = std::nullopt);

// Keeps the records whose normalized tokens intersect `keywords` and fills
// their matched_keywords (and tokens). Throws ConfigError on an empty set.
std::vector<TweetRecord> filter_by_keywords(const std::vector<TweetRecord>& records,
                                            const std::set<std::string>& keywords);

// Lowercases, strips URLs, @-mentions and RT markers, then splits on
// whitespace and punctuation. Hyphens survive only between word characters.
Tokens normalize_text(std::string_view raw);

std::string join_tokens(const Tokens& tokens);

// One keyword per line; blank lines and '#' comments ignored.
std::set<std::string> read_keywords(std::istream& in);

void write_corpus_jsonl(std::ostream& out, const std::vector<TweetRecord>& records);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  Vocabulary();

  // Regular tokens in index order (index = position + kNumSpecials).
  // Throws InputError on duplicates or special names.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens,
                                const std::vector<std::int64_t>& counts = {});

  int size() const { return static_cast<int>(tokens_.size()); }
  int regular_size() const { return size() - kNumSpecials; }
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<int> find(const std::string& token) const;
  int index_or_unk(const std::string& token) const;
  std::int64_t count(const std::string& token) const;
  const std::map<std::string, std::int64_t>& counts() const { return counts_; }
  static bool is_special(int index) { return index >= 0 && index < kNumSpecials; }

  // "token<TAB>count" per regular token, index order.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::map<std::string, std::int64_t> counts_;
};

// Descending count, ties lexicographic. Throws ConfigError when
// min_count < 1 and EmptyVocabularyError when nothing survives.
Vocabulary build_vocabulary(const std::vector<Tokens>& token_sequences, int min_count);

// [SOS, ids..., EOS] truncated to max_len (EOS kept last) and PAD-filled.
TokenIds encode_sequence(const Vocabulary& vocab, const Tokens& tokens, int max_len);

// Inverse of encode_sequence for the part between SOS and EOS.
Tokens decode_sequence(const Vocabulary& vocab, const TokenIds& ids);

}  // namespace xlintel

#endif  // XLINTEL_CORPUS_HPP_
