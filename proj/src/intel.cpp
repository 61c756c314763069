#include "xlintel/intel.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xlintel/errors.hpp"

namespace xlintel {

namespace {

using json = nlohmann::json;

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool is_full_iri(std::string_view s) { return s.find("://") != std::string_view::npos; }

bool is_known_prefixed_name(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) return false;
  const auto prefix = s.substr(0, colon);
  const auto local = s.substr(colon + 1);
  const auto& prefixes = turtle_prefixes();
  const bool known = std::any_of(prefixes.begin(), prefixes.end(), [&](const TurtlePrefix& p) { return p.name == prefix; });
  if (!known || local.empty()) return false;
  return std::all_of(local.begin(), local.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

bool valid_sameas(std::string_view s) {
  if (is_full_iri(s)) return s.find_first_of("<>\"{}|^`\\ \t\n") == std::string_view::npos;
  return is_known_prefixed_name(s);
}

std::string_view class_name(NodeClass cls) {
  switch (cls) {
    case NodeClass::Intelligence:
      return "intel:Intelligence";
    case NodeClass::Means:
      return "uco:Means";
    case NodeClass::Product:
      return "uco:Product";
    case NodeClass::Vulnerability:
      return "uco:Vulnerability";
  }
  return "";
}

NodeClass node_class(ConceptType type) {
  switch (type) {
    case ConceptType::Means:
      return NodeClass::Means;
    case ConceptType::Product:
      return NodeClass::Product;
    case ConceptType::Vulnerability:
      return NodeClass::Vulnerability;
  }
  return NodeClass::Vulnerability;
}

}  // namespace

std::string_view to_string(ConceptType type) {
  switch (type) {
    case ConceptType::Vulnerability:
      return "Vulnerability";
    case ConceptType::Product:
      return "Product";
    case ConceptType::Means:
      return "Means";
  }
  return "";
}

ConceptType parse_concept_type(std::string_view text) {
  if (text == "Vulnerability") return ConceptType::Vulnerability;
  if (text == "Product") return ConceptType::Product;
  if (text == "Means") return ConceptType::Means;
  throw FormatError("unknown concept type '" + std::string(text) + "'");
}

std::string_view to_string(Predicate predicate) {
  switch (predicate) {
    case Predicate::hasVulnerability:
      return "hasVulnerability";
    case Predicate::affectsProduct:
      return "affectsProduct";
    case Predicate::hasMeans:
      return "hasMeans";
    case Predicate::sameAs:
      return "sameAs";
  }
  return "";
}

const std::vector<TurtlePrefix>& turtle_prefixes() {
  static const std::vector<TurtlePrefix> prefixes = {
      {"uco", "http://accl.umbc.edu/ns/ontology/uco#"},
      {"intel", "http://accl.umbc.edu/ns/ontology/intelligence#"},
      {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
      {"rdfs", "http://www.w3.org/2000/01/rdf-schema#"},
      {"xml", "http://www.w3.org/XML/1998/namespace"},
      {"xsd", "http://www.w3.org/2001/XMLSchema#"},
      {"dbp", "http://dbpedia.org/resource#"},
      {"owl", "http://www.w3.org/2002/07/owl#"},
  };
  return prefixes;
}

Gazetteer read_gazetteer(std::istream& in) {
  Gazetteer gaz;
  std::map<std::string, std::pair<ConceptType, std::optional<std::string>>> id_info;
  std::set<Tokens> phrases;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "gazetteer line " + std::to_string(lineno);
    const json obj = json::parse(line, nullptr, false);
    if (!obj.is_object()) throw FormatError(where + " is not a JSON object");
    auto str = [&](const char* key) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string()) throw FormatError(where + ": missing string field '" + key + "'");
      return it->get<std::string>();
    };
    GazetteerEntry e;
    e.phrase = normalize_text(str("phrase"));
    if (e.phrase.empty()) throw FormatError(where + ": phrase normalizes to nothing");
    e.type = parse_concept_type(str("type"));
    e.canonical_id = str("canonical_id");
    if (!is_identifier(e.canonical_id)) throw FormatError(where + ": canonical_id must match [A-Za-z0-9_]+");
    if (auto it = obj.find("sameas"); it != obj.end() && !it->is_null()) {
      if (!it->is_string() || !valid_sameas(it->get<std::string>()))
        throw FormatError(where + ": sameas must be a known prefixed name or an absolute IRI");
      e.sameas = it->get<std::string>();
    }
    if (!phrases.insert(e.phrase).second) throw FormatError(where + ": duplicate phrase");
    auto [slot, fresh] = id_info.emplace(e.canonical_id, std::pair{e.type, e.sameas});
    if (!fresh && slot->second.first != e.type) throw FormatError(where + ": canonical_id reused with another type");
    if (!fresh && slot->second.second != e.sameas) throw FormatError(where + ": canonical_id reused with another sameas");
    gaz.entries.push_back(std::move(e));
  }
  if (in.bad()) throw FormatError("gazetteer read failure");
  return gaz;
}

Gazetteer read_gazetteer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open gazetteer " + path);
  return read_gazetteer(in);
}

std::vector<Concept> extract_concepts(const Tokens& tokens, const Gazetteer& gazetteer) {
  if (gazetteer.entries.empty()) throw ConfigError("extract_concepts: empty gazetteer");
  std::vector<Concept> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const GazetteerEntry* best = nullptr;
    for (const auto& e : gazetteer.entries) {
      const std::size_t n = e.phrase.size();
      if (i + n > tokens.size()) continue;
      if (best && n <= best->phrase.size()) continue;
      if (std::equal(e.phrase.begin(), e.phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) best = &e;
    }
    if (!best) {
      ++i;
      continue;
    }
    out.push_back({best->type, best->canonical_id, best->sameas, i, i + best->phrase.size()});
    i += best->phrase.size();
  }
  return out;
}

std::string default_intel_id(std::string_view source_text) {
  std::uint32_t hash = 2166136261u;
  for (unsigned char c : source_text) {
    hash ^= c;
    hash *= 16777619u;
  }
  return "Int" + std::to_string(hash);
}

IntelGraph build_intel_graph(const std::vector<Concept>& concepts, const std::string& intel_id) {
  if (concepts.empty()) throw EmptyIntelError("no concepts extracted; nothing to represent");
  if (!is_identifier(intel_id)) throw InputError("intel id must match [A-Za-z0-9_]+");

  std::map<std::string, const Concept*> by_id;
  for (const auto& c : concepts) {
    auto [slot, fresh] = by_id.emplace(c.canonical_id, &c);
    if (!fresh && (slot->second->type != c.type || slot->second->sameas != c.sameas))
      throw InputError("concept '" + c.canonical_id + "' appears with conflicting type or sameas");
  }

  std::vector<IntelNode> means, products, vulns;
  for (const auto& [id, c] : by_id) {
    IntelNode node{id, node_class(c->type), c->sameas};
    switch (c->type) {
      case ConceptType::Means:
        means.push_back(std::move(node));
        break;
      case ConceptType::Product:
        products.push_back(std::move(node));
        break;
      case ConceptType::Vulnerability:
        vulns.push_back(std::move(node));
        break;
    }
  }

  IntelGraph g;
  g.intel_id = intel_id;
  g.nodes.push_back({intel_id, NodeClass::Intelligence, std::nullopt});
  for (auto* group : {&means, &products, &vulns}) g.nodes.insert(g.nodes.end(), group->begin(), group->end());

  // Edges follow node order, then predicate order, then object order.
  for (const auto& v : vulns) g.edges.push_back({intel_id, Predicate::hasVulnerability, v.id});
  for (const auto& m : means)
    if (m.sameas) g.edges.push_back({m.id, Predicate::sameAs, *m.sameas});
  for (const auto& p : products) {
    for (const auto& v : vulns) g.edges.push_back({p.id, Predicate::hasVulnerability, v.id});
    if (p.sameas) g.edges.push_back({p.id, Predicate::sameAs, *p.sameas});
  }
  for (const auto& v : vulns) {
    for (const auto& p : products) g.edges.push_back({v.id, Predicate::affectsProduct, p.id});
    for (const auto& m : means) g.edges.push_back({v.id, Predicate::hasMeans, m.id});
    if (v.sameas) g.edges.push_back({v.id, Predicate::sameAs, *v.sameas});
  }
  return g;
}

void validate_graph(const IntelGraph& g) {
  auto fail = [](const std::string& what) { throw SerializationError("invalid intel graph: " + what); };
  if (g.nodes.empty() || g.nodes.front().cls != NodeClass::Intelligence || g.nodes.front().id != g.intel_id)
    fail("the first node must be the Intelligence node named by intel_id");
  std::map<std::string, NodeClass> ids;
  int intelligence = 0;
  for (const auto& n : g.nodes) {
    if (!is_identifier(n.id)) fail("node id '" + n.id + "' must match [A-Za-z0-9_]+");
    if (!ids.emplace(n.id, n.cls).second) fail("duplicate node '" + n.id + "'");
    intelligence += n.cls == NodeClass::Intelligence;
    if (n.sameas && !valid_sameas(*n.sameas)) fail("bad sameAs target '" + *n.sameas + "'");
  }
  if (intelligence != 1) fail("exactly one Intelligence node is required");
  std::set<IntelEdge> seen;
  for (const auto& e : g.edges) {
    if (!ids.count(e.subject)) fail("edge subject '" + e.subject + "' is not a node");
    if (e.predicate == Predicate::sameAs) {
      if (!valid_sameas(e.object)) fail("bad sameAs target '" + e.object + "'");
    } else if (!ids.count(e.object)) {
      fail("edge object '" + e.object + "' is not a node");
    }
    if (!seen.insert(e).second) fail("duplicate edge");
  }
}

std::string serialize_turtle(const IntelGraph& g) {
  validate_graph(g);
  std::ostringstream out;
  for (const auto& p : turtle_prefixes()) out << "@prefix " << p.name << ": <" << p.iri << "> .\n";

  for (const auto& node : g.nodes) {
    out << "\n<" << node.id << "> a " << class_name(node.cls);
    for (const auto& e : g.edges) {
      if (e.subject != node.id) continue;
      out << " ;\n    ";
      switch (e.predicate) {
        case Predicate::hasVulnerability:
          out << (node.cls == NodeClass::Intelligence ? "intel:" : "uco:") << "hasVulnerability <" << e.object << '>';
          break;
        case Predicate::affectsProduct:
          out << "uco:affectsProduct <" << e.object << '>';
          break;
        case Predicate::hasMeans:
          out << "uco:hasMeans <" << e.object << '>';
          break;
        case Predicate::sameAs:
          out << "owl:sameAs ";
          if (is_full_iri(e.object))
            out << '<' << e.object << '>';
          else
            out << e.object;
          break;
      }
    }
    out << " .\n";
  }
  return out.str();
}

}  // namespace xlintel
