#include "xlintel/alignment.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "xlintel/errors.hpp"

namespace xlintel {

namespace {

using json = nlohmann::json;

json parse_line(const std::string& line, std::size_t lineno, const char* what) {
  json obj = json::parse(line, nullptr, false);
  if (!obj.is_object())
    throw FormatError(std::string(what) + " line " + std::to_string(lineno) + " is not a JSON object");
  return obj;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(line, lineno);
  }
  if (in.bad()) throw FormatError("read failure");
}

std::string require_string(const json& obj, const char* key, std::size_t lineno) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw FormatError("line " + std::to_string(lineno) + ": missing string field '" + key + "'");
  return it->get<std::string>();
}

}  // namespace

double cohens_kappa(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size())
    throw InputError("cohens_kappa: label lists differ in length");
  if (labels_a.empty()) throw InputError("cohens_kappa: empty label lists");
  const auto n = static_cast<long long>(labels_a.size());
  long long agree = 0, a1 = 0, b1 = 0;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    const int a = labels_a[i], b = labels_b[i];
    if ((a != 0 && a != 1) || (b != 0 && b != 1)) throw InputError("cohens_kappa: labels must be 0 or 1");
    agree += a == b;
    a1 += a;
    b1 += b;
  }
  // Scaled by n^2 so the result is one correctly rounded division:
  //   kappa = (n * agree - E) / (n^2 - E),  E = n^2 * p_e
  const long long chance = a1 * b1 + (n - a1) * (n - b1);
  const long long denom = n * n - chance;
  if (denom == 0) {
    if (agree == n) return 1.0;
    throw DegenerateLabelsError("cohens_kappa: chance agreement is 1 but observed agreement is not");
  }
  return static_cast<double>(n * agree - chance) / static_cast<double>(denom);
}

std::vector<AlignmentEntry> build_alignment_db(const std::vector<Synset>& ru_synsets,
                                               const std::vector<Synset>& en_synsets,
                                               const std::vector<SensePair>& pairing_index,
                                               const std::vector<EntryLabels>& labels,
                                               double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0)) throw ConfigError("kappa threshold must lie in [-1, 1]");

  std::map<std::string, const Synset*> ru_by_id, en_by_id;
  for (const auto& s : ru_synsets) {
    if (s.lang != Lang::ru) throw InputError("synset " + s.sense_id + " is not Russian");
    ru_by_id[s.sense_id] = &s;
  }
  for (const auto& s : en_synsets) {
    if (s.lang != Lang::en) throw InputError("synset " + s.sense_id + " is not English");
    en_by_id[s.sense_id] = &s;
  }
  std::map<std::pair<std::string, std::string>, const EntryLabels*> labels_by_pair;
  for (const auto& l : labels) labels_by_pair[{l.ru_sense_id, l.en_sense_id}] = &l;

  std::vector<AlignmentEntry> entries;
  entries.reserve(pairing_index.size());
  for (const auto& pair : pairing_index) {
    auto ru = ru_by_id.find(pair.ru_sense_id);
    if (ru == ru_by_id.end()) throw ReferenceError("unknown Russian sense_id '" + pair.ru_sense_id + "'");
    auto en = en_by_id.find(pair.en_sense_id);
    if (en == en_by_id.end()) throw ReferenceError("unknown English sense_id '" + pair.en_sense_id + "'");
    auto lab = labels_by_pair.find({pair.ru_sense_id, pair.en_sense_id});
    if (lab == labels_by_pair.end())
      throw InputError("no labels for pairing " + pair.ru_sense_id + " / " + pair.en_sense_id);

    AlignmentEntry entry;
    entry.ru = *ru->second;
    entry.en = *en->second;
    for (const auto& r : entry.ru.terms)
      for (const auto& e : entry.en.terms) entry.items.push_back({r, e});

    const auto& matrix = lab->second->labels;
    if (matrix.size() < 2) throw InputError("pairing " + pair.ru_sense_id + " needs at least two annotators");
    for (const auto& row : matrix) {
      if (row.size() != entry.items.size())
        throw InputError("pairing " + pair.ru_sense_id + " / " + pair.en_sense_id + ": expected " +
                         std::to_string(entry.items.size()) + " labels per annotator, got " +
                         std::to_string(row.size()));
    }
    entry.annotator_labels = matrix;

    double sum = 0;
    int pairs = 0;
    try {
      for (std::size_t a = 0; a < matrix.size(); ++a) {
        for (std::size_t b = a + 1; b < matrix.size(); ++b) {
          sum += cohens_kappa(matrix[a], matrix[b]);
          ++pairs;
        }
      }
      entry.kappa = sum / pairs;
      entry.accepted = *entry.kappa > threshold;
    } catch (const DegenerateLabelsError&) {
      entry.degenerate = true;
      entry.accepted = false;
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<TermPair> generate_training_pairs(const std::vector<AlignmentEntry>& entries) {
  std::vector<TermPair> pairs;
  std::set<std::pair<Tokens, Tokens>> seen;
  for (const auto& entry : entries) {
    if (!entry.accepted) continue;
    const auto annotators = entry.annotator_labels.size();
    for (std::size_t i = 0; i < entry.items.size(); ++i) {
      std::size_t votes = 0;
      for (const auto& row : entry.annotator_labels) votes += row[i] == 1;
      if (2 * votes <= annotators) continue;
      const auto& item = entry.items[i];
      if (seen.insert({item.ru, item.en}).second) pairs.push_back(item);
    }
  }
  if (pairs.empty()) throw EmptyTrainingSetError("alignment produced no training pairs");
  return pairs;
}

std::vector<Synset> read_synsets(std::istream& in) {
  std::vector<Synset> synsets;
  for_each_line(in, [&](const std::string& line, std::size_t lineno) {
    json obj = parse_line(line, lineno, "synset");
    Synset s;
    try {
      s.lang = parse_lang(require_string(obj, "lang", lineno));
    } catch (const InputError& e) {
      throw FormatError("synset line " + std::to_string(lineno) + ": " + e.what());
    }
    s.sense_id = require_string(obj, "sense_id", lineno);
    auto terms = obj.find("terms");
    if (terms == obj.end() || !terms->is_array() || terms->empty())
      throw FormatError("synset line " + std::to_string(lineno) + ": 'terms' must be a non-empty array");
    std::set<Tokens> unique;
    for (const auto& t : *terms) {
      if (!t.is_string()) throw FormatError("synset line " + std::to_string(lineno) + ": term is not a string");
      Tokens toks = normalize_text(t.get<std::string>());
      if (toks.empty()) throw FormatError("synset line " + std::to_string(lineno) + ": term normalizes to nothing");
      if (!unique.insert(toks).second)
        throw FormatError("synset " + s.sense_id + ": duplicate term '" + join_tokens(toks) + "'");
      s.terms.push_back(std::move(toks));
    }
    if (auto gloss = obj.find("gloss"); gloss != obj.end() && gloss->is_string())
      s.gloss = gloss->get<std::string>();
    synsets.push_back(std::move(s));
  });
  return synsets;
}

std::vector<SensePair> read_pairing_index(std::istream& in) {
  std::vector<SensePair> pairs;
  for_each_line(in, [&](const std::string& line, std::size_t lineno) {
    json obj = parse_line(line, lineno, "pairing");
    pairs.push_back({require_string(obj, "ru_sense_id", lineno), require_string(obj, "en_sense_id", lineno)});
  });
  return pairs;
}

std::vector<EntryLabels> read_labels(std::istream& in) {
  std::vector<EntryLabels> out;
  for_each_line(in, [&](const std::string& line, std::size_t lineno) {
    json obj = parse_line(line, lineno, "labels");
    EntryLabels l;
    l.ru_sense_id = require_string(obj, "ru_sense_id", lineno);
    l.en_sense_id = require_string(obj, "en_sense_id", lineno);
    auto labels = obj.find("labels");
    if (labels == obj.end() || !labels->is_array())
      throw FormatError("labels line " + std::to_string(lineno) + ": 'labels' must be an array of arrays");
    for (const auto& row : *labels) {
      if (!row.is_array()) throw FormatError("labels line " + std::to_string(lineno) + ": annotator row is not an array");
      std::vector<int> r;
      for (const auto& v : row) {
        if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
          throw FormatError("labels line " + std::to_string(lineno) + ": labels must be 0 or 1");
        r.push_back(v.get<int>());
      }
      l.labels.push_back(std::move(r));
    }
    out.push_back(std::move(l));
  });
  return out;
}

void write_alignment_db(std::ostream& out, const std::vector<AlignmentEntry>& entries) {
  auto synset_json = [](const Synset& s) {
    json j;
    j["lang"] = std::string(to_string(s.lang));
    j["sense_id"] = s.sense_id;
    j["terms"] = json::array();
    for (const auto& t : s.terms) j["terms"].push_back(join_tokens(t));
    if (s.gloss) j["gloss"] = *s.gloss;
    return j;
  };
  for (const auto& e : entries) {
    json j;
    j["ru"] = synset_json(e.ru);
    j["en"] = synset_json(e.en);
    j["items"] = json::array();
    for (const auto& item : e.items) j["items"].push_back({join_tokens(item.ru), join_tokens(item.en)});
    j["labels"] = e.annotator_labels;
    j["kappa"] = e.kappa ? json(*e.kappa) : json(nullptr);
    j["accepted"] = e.accepted;
    j["degenerate"] = e.degenerate;
    out << j.dump() << '\n';
  }
}

void write_pairs(std::ostream& out, const std::vector<TermPair>& pairs) {
  for (const auto& p : pairs) {
    json j;
    j["src"] = p.ru;
    j["tgt"] = p.en;
    out << j.dump() << '\n';
  }
}

std::vector<TermPair> read_pairs(std::istream& in) {
  std::vector<TermPair> pairs;
  for_each_line(in, [&](const std::string& line, std::size_t lineno) {
    json obj = parse_line(line, lineno, "pairs");
    auto src = obj.find("src");
    auto tgt = obj.find("tgt");
    if (src == obj.end() || tgt == obj.end() || !src->is_array() || !tgt->is_array())
      throw FormatError("pairs line " + std::to_string(lineno) + ": need 'src' and 'tgt' arrays");
    TermPair p;
    try {
      p.ru = src->get<Tokens>();
      p.en = tgt->get<Tokens>();
    } catch (const json::exception&) {
      throw FormatError("pairs line " + std::to_string(lineno) + ": tokens must be strings");
    }
    pairs.push_back(std::move(p));
  });
  return pairs;
}

}  // namespace xlintel
