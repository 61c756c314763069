#ifndef XLINTEL_ALIGNMENT_HPP_
#define XLINTEL_ALIGNMENT_HPP_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlintel/corpus.hpp"

namespace xlintel {

// Terms are normalized token lists so multi-word lemmas survive.
struct Synset {
  Lang lang = Lang::en;
  std::string sense_id;
  std::vector<Tokens> terms;
  std::optional<std::string> gloss;
};

struct TermPair {
  Tokens ru;
  Tokens en;
  bool operator==(const TermPair&) const = default;
};

struct AlignmentEntry {
  Synset ru;
  Synset en;
  std::vector<TermPair> items;  // ru-term-major cross product
  std::vector<std::vector<int>> annotator_labels;  // A x |items|, 1 = accept
  std::optional<double> kappa;  // empty when a pairwise kappa is degenerate
  bool accepted = false;
  bool degenerate = false;
};

struct SensePair {
  std::string ru_sense_id;
  std::string en_sense_id;
};

struct EntryLabels {
  std::string ru_sense_id;
  std::string en_sense_id;
  std::vector<std::vector<int>> labels;
};

// (p_o - p_e) / (1 - p_e) over binary labels. Throws InputError on length
// mismatch and DegenerateLabelsError when p_e = 1 but p_o < 1.
double cohens_kappa(std::span<const int> labels_a, std::span<const int> labels_b);

// Entry kappa is the mean pairwise Cohen's kappa across annotators; an entry
// is accepted iff that mean is strictly greater than `threshold`.
std::vector<AlignmentEntry> build_alignment_db(const std::vector<Synset>& ru_synsets,
                                               const std::vector<Synset>& en_synsets,
                                               const std::vector<SensePair>& pairing_index,
                                               const std::vector<EntryLabels>& labels,
                                               double threshold);

// One pair per majority-accepted item of each accepted entry, deduplicated,
// in entry then item order. Throws EmptyTrainingSetError.
std::vector<TermPair> generate_training_pairs(const std::vector<AlignmentEntry>& entries);

std::vector<Synset> read_synsets(std::istream& in);
std::vector<SensePair> read_pairing_index(std::istream& in);
std::vector<EntryLabels> read_labels(std::istream& in);
void write_alignment_db(std::ostream& out, const std::vector<AlignmentEntry>& entries);

// {"src": [...], "tgt": [...]} per line.
void write_pairs(std::ostream& out, const std::vector<TermPair>& pairs);
std::vector<TermPair> read_pairs(std::istream& in);

}  // namespace xlintel

#endif  // XLINTEL_ALIGNMENT_HPP_
