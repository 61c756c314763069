#ifndef XLINTEL_INTEL_HPP_
#define XLINTEL_INTEL_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xlintel/corpus.hpp"

namespace xlintel {

enum class ConceptType { Vulnerability, Product, Means };

std::string_view to_string(ConceptType type);
ConceptType parse_concept_type(std::string_view text);  // throws FormatError

struct GazetteerEntry {
  Tokens phrase;  // normalized, non-empty
  ConceptType type = ConceptType::Vulnerability;
  std::string canonical_id;  // [A-Za-z0-9_]+
  std::optional<std::string> sameas;  // prefixed name (dbp:Skype) or IRI
};

struct Gazetteer {
  std::vector<GazetteerEntry> entries;
};

// JSONL: {"phrase", "type", "canonical_id", "sameas"?}. Phrases are
// normalized on load. Throws FormatError.
Gazetteer read_gazetteer(std::istream& in);
Gazetteer read_gazetteer(const std::string& path);

struct Concept {
  ConceptType type = ConceptType::Vulnerability;
  std::string canonical_id;
  std::optional<std::string> sameas;
  std::size_t begin = 0;  // token span [begin, end)
  std::size_t end = 0;

  bool operator==(const Concept&) const = default;
};

// Longest match first, left to right, non-overlapping.
// Throws ConfigError on an empty gazetteer.
std::vector<Concept> extract_concepts(const Tokens& tokens, const Gazetteer& gazetteer);

enum class Predicate { hasVulnerability, affectsProduct, hasMeans, sameAs };
std::string_view to_string(Predicate predicate);

enum class NodeClass { Intelligence, Means, Product, Vulnerability };

struct IntelNode {
  std::string id;
  NodeClass cls = NodeClass::Intelligence;
  std::optional<std::string> sameas;
  bool operator==(const IntelNode&) const = default;
};

struct IntelEdge {
  std::string subject;
  Predicate predicate = Predicate::hasVulnerability;
  std::string object;
  bool operator==(const IntelEdge&) const = default;
  auto operator<=>(const IntelEdge&) const = default;
};

struct IntelGraph {
  std::string intel_id;
  std::vector<IntelNode> nodes;  // Intelligence first, then Means, Products, Vulnerabilities
  std::vector<IntelEdge> edges;
  bool operator==(const IntelGraph&) const = default;
};

// "Int" followed by the decimal 32-bit FNV-1a hash of the text.
std::string default_intel_id(std::string_view source_text);

// Throws EmptyIntelError when `concepts` is empty and InputError when one
// canonical_id arrives with conflicting type or sameas.
IntelGraph build_intel_graph(const std::vector<Concept>& concepts, const std::string& intel_id);

// Throws SerializationError when the graph breaks its invariants.
void validate_graph(const IntelGraph& graph);

std::string serialize_turtle(const IntelGraph& graph);

// Namespace IRIs of the output vocabulary, in declaration order.
struct TurtlePrefix {
  std::string_view name;
  std::string_view iri;
};
const std::vector<TurtlePrefix>& turtle_prefixes();

}  // namespace xlintel

#endif  // XLINTEL_INTEL_HPP_
