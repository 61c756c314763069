#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "xlintel/corpus.hpp"
#include "xlintel/errors.hpp"
#include "xlintel/unicode.hpp"

using namespace xlintel;

namespace {

// Noisy tweet-like text: mixed case in two scripts, URLs, mentions, RT
// markers, punctuation and hyphenated compounds.
std::string random_tweet(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "DDoS",  "атака", "Malware", "Вирус", "exploit", "CVE-2017-0144", "уязвимость", "Ботнет", "zero-day",
      "RT",    "rt",    "@acme",   "@Хакер", "https://t.co/x", "http://example.com/a?b=1", "www.test.org/x",
      "!!",    "...",   "—",       "«кибер»", "#infosec", "e-mail", "-dash", "tail-", "ПРИВЕТ", "Straße", "42"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<int> sep(0, 3);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    out += pieces[pick(rng)];
    static const char* seps[] = {" ", ", ", ":", "  "};
    out += seps[sep(rng)];
  }
  return out;
}

std::string tweet_line(const std::string& id, const std::string& lang, const std::string& text) {
  return R"({"id": ")" + id + R"(", "lang": ")" + lang + R"(", "text": ")" + text + "\"}\n";
}

}  // namespace

TEST(Normalize, StripsMarkersMentionsAndUrls) {
  EXPECT_EQ(normalize_text("RT @acme: DDoS-атака! https://t.co/x"), (Tokens{"ddos-атака"}));
}

TEST(Normalize, EmptyInput) { EXPECT_TRUE(normalize_text("").empty()); }

TEST(Normalize, IdempotentOverRandomTweets) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 500; ++i) {
    const std::string raw = random_tweet(rng);
    const Tokens once = normalize_text(raw);
    EXPECT_EQ(normalize_text(join_tokens(once)), once) << raw;
  }
}

TEST(Normalize, OutputHasNoUppercaseUrlsOrMentions) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 500; ++i) {
    const std::string raw = random_tweet(rng);
    for (const auto& tok : normalize_text(raw)) {
      ASSERT_FALSE(tok.empty());
      for (char32_t cp : unicode::decode_utf8(tok)) EXPECT_EQ(unicode::to_lower(cp), cp) << tok;
      EXPECT_EQ(tok.find('@'), std::string::npos) << raw;
      EXPECT_EQ(tok.find("http"), std::string::npos) << raw;
      EXPECT_EQ(tok.find("www"), std::string::npos) << raw;
      EXPECT_EQ(tok.find("://"), std::string::npos) << raw;
    }
  }
}

TEST(ParseTweets, LanguageFilter) {
  std::istringstream in(tweet_line("1", "en", "hello") + tweet_line("2", "ru", "привет"));
  const auto r = parse_tweet_jsonl(in, Lang::ru);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].lang, Lang::ru);
  EXPECT_EQ(r.records[0].id, "2");
}

TEST(ParseTweets, MissingTextIsSkipped) {
  std::istringstream in(tweet_line("1", "en", "ok") + R"({"id": "2", "lang": "en"})" + "\n");
  const auto r = parse_tweet_jsonl(in);
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.skipped, 1u);
}

TEST(ParseTweets, MalformedLinesAndDuplicatesAreCounted) {
  std::istringstream in(tweet_line("1", "en", "a") + "{not json\n" + tweet_line("1", "en", "b") +
                        tweet_line("3", "xx", "c"));
  const auto r = parse_tweet_jsonl(in);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].text, "a");
  EXPECT_EQ(r.skipped, 3u);
}

TEST(ParseTweets, ThousandLinesKeepOrder) {
  std::string text;
  for (int i = 0; i < 1000; ++i) text += tweet_line("t" + std::to_string(i), i % 2 ? "ru" : "en", "w" + std::to_string(i));
  std::istringstream in(text);
  const auto r = parse_tweet_jsonl(in);
  ASSERT_EQ(r.records.size(), 1000u);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(r.records[static_cast<std::size_t>(i)].id, "t" + std::to_string(i));
}

TEST(ParseTweets, NothingValidIsAnError) {
  std::istringstream empty("");
  EXPECT_THROW(parse_tweet_jsonl(empty), EmptyCorpusError);
  std::istringstream wrong_lang(tweet_line("1", "en", "a"));
  EXPECT_THROW(parse_tweet_jsonl(wrong_lang, Lang::ru), EmptyCorpusError);
}

TEST(Keywords, CaseFoldedMatch) {
  TweetRecord r;
  r.id = "1";
  r.text = "Новая DDoS атака";
  r.lang = Lang::ru;
  const auto kept = filter_by_keywords({r}, {"ddos"});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].matched_keywords, (std::set<std::string>{"ddos"}));
}

TEST(Keywords, NoMatchIsDropped) {
  TweetRecord r;
  r.text = "nice weather today";
  EXPECT_TRUE(filter_by_keywords({r}, {"ddos"}).empty());
}

TEST(Keywords, CountsConstructedMatches) {
  std::vector<TweetRecord> records;
  for (int i = 0; i < 10; ++i) {
    TweetRecord r;
    r.id = std::to_string(i);
    r.text = i % 3 == 0 ? "new Malware sample " + std::to_string(i) : "quiet day " + std::to_string(i);
    records.push_back(r);
  }
  // ids 0, 3, 6, 9
  EXPECT_EQ(filter_by_keywords(records, {"malware"}).size(), 4u);
}

TEST(Keywords, EmptySetIsConfigError) { EXPECT_THROW(filter_by_keywords({}, {}), ConfigError); }

TEST(Keywords, FilterIsIdempotentAndExact) {
  std::mt19937_64 rng(23);
  std::vector<TweetRecord> records;
  for (int i = 0; i < 300; ++i) {
    TweetRecord r;
    r.id = std::to_string(i);
    r.text = random_tweet(rng);
    records.push_back(r);
  }
  const std::set<std::string> keywords = {"ddos", "атака", "malware", "zero-day"};
  const auto once = filter_by_keywords(records, keywords);
  const auto twice = filter_by_keywords(once, keywords);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_EQ(once[i].id, twice[i].id);
    EXPECT_EQ(once[i].matched_keywords, twice[i].matched_keywords);
  }
  std::size_t expected = 0;
  for (const auto& r : records) {
    const auto toks = normalize_text(r.text);
    bool hit = false;
    for (const auto& t : toks) hit = hit || keywords.count(t);
    expected += hit;
  }
  EXPECT_EQ(once.size(), expected);
}

TEST(Keywords, ReadSkipsCommentsAndBlanks) {
  std::istringstream in("# header\n\nDDoS\n  malware  \n# trailing\n");
  EXPECT_EQ(read_keywords(in), (std::set<std::string>{"ddos", "malware"}));
}

TEST(Vocab, MinCountThreshold) {
  const auto v = build_vocabulary({{"a", "b", "a"}}, 2);
  EXPECT_TRUE(v.find("a").has_value());
  EXPECT_FALSE(v.find("b").has_value());
}

TEST(Vocab, NothingSurvives) { EXPECT_THROW(build_vocabulary({{"x"}}, 2), EmptyVocabularyError); }

TEST(Vocab, BadMinCount) { EXPECT_THROW(build_vocabulary({{"x"}}, 0), ConfigError); }

TEST(Vocab, TiesAreLexicographic) {
  std::vector<Tokens> seqs;
  for (int i = 0; i < 5; ++i) seqs.push_back({"b", "a"});
  seqs.push_back({"c"});
  const auto v = build_vocabulary(seqs, 2);
  ASSERT_EQ(v.regular_size(), 2);
  EXPECT_EQ(v.token(Vocabulary::kNumSpecials), "a");
  EXPECT_EQ(v.token(Vocabulary::kNumSpecials + 1), "b");
  EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
}

TEST(Vocab, DeterministicSerialization) {
  std::mt19937_64 rng(24);
  std::vector<Tokens> seqs;
  for (int i = 0; i < 200; ++i) seqs.push_back(normalize_text(random_tweet(rng)));
  std::ostringstream a, b;
  build_vocabulary(seqs, 1).save(a);
  build_vocabulary(seqs, 1).save(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Vocab, SaveLoadRoundTrip) {
  const auto v = build_vocabulary({{"атака", "ddos", "атака"}, {"x"}}, 1);
  std::stringstream buf;
  v.save(buf);
  const auto back = Vocabulary::load(buf);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.count("атака"), 2);
}

TEST(Vocab, LoadRejectsGarbage) {
  std::istringstream in("token-without-count\n");
  EXPECT_THROW(Vocabulary::load(in), FormatError);
}

TEST(Encode, KnownToken) {
  // Position 3 after the four specials.
  const auto v = Vocabulary::from_tokens({"p", "q", "r", "ddos"});
  ASSERT_EQ(v.find("ddos"), 7);
  EXPECT_EQ(encode_sequence(v, {"ddos"}, 4), (TokenIds{1, 7, 2, 0}));
}

TEST(Encode, UnknownToken) {
  const auto v = Vocabulary::from_tokens({"ddos"});
  EXPECT_EQ(encode_sequence(v, {"zzz"}, 4), (TokenIds{1, 3, 2, 0}));
}

TEST(Encode, TruncatesKeepingEos) {
  const auto v = Vocabulary::from_tokens({"w"});
  const auto ids = encode_sequence(v, Tokens(25, "w"), 20);
  ASSERT_EQ(ids.size(), 20u);
  EXPECT_EQ(ids[19], Vocabulary::kEos);
}

TEST(Encode, MaxLenTooSmall) {
  const auto v = Vocabulary::from_tokens({"w"});
  EXPECT_THROW(encode_sequence(v, {"w"}, 2), ConfigError);
}

TEST(Encode, ShapeProperty) {
  const auto v = Vocabulary::from_tokens({"a", "b", "c"});
  std::mt19937_64 rng(25);
  std::uniform_int_distribution<int> len(0, 30), max_len(3, 25), tok(0, 4);
  const std::vector<std::string> words = {"a", "b", "c", "zz", "yy"};
  for (int trial = 0; trial < 1000; ++trial) {
    Tokens toks;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) toks.push_back(words[static_cast<std::size_t>(tok(rng))]);
    const int m = max_len(rng);
    const auto ids = encode_sequence(v, toks, m);
    ASSERT_EQ(static_cast<int>(ids.size()), m);
    EXPECT_EQ(ids[0], Vocabulary::kSos);
    const auto eos_count = std::count(ids.begin(), ids.end(), Vocabulary::kEos);
    ASSERT_EQ(eos_count, 1);
    const auto eos = std::find(ids.begin(), ids.end(), Vocabulary::kEos);
    for (auto it = eos + 1; it != ids.end(); ++it) EXPECT_EQ(*it, Vocabulary::kPad);
    for (auto it = ids.begin() + 1; it != eos; ++it) EXPECT_GE(*it, Vocabulary::kUnk);
    // Decoding recovers the kept prefix, UNK aside.
    const auto back = decode_sequence(v, ids);
    ASSERT_EQ(static_cast<int>(back.size()), std::min(n, m - 2));
    for (std::size_t i = 0; i < back.size(); ++i)
      if (v.find(toks[i])) EXPECT_EQ(back[i], toks[i]);
  }
}
