#pragma once

// JSON interchange for diagrams, formal sums and Hepp trees. Field order is
// fixed, so output is byte-stable for golden files.

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "anderson/bphz.hpp"
#include "anderson/hepp.hpp"

namespace anderson {

using Json = nlohmann::ordered_json;

struct MalformedJson : Error { using Error::Error; };

// Always "p/q", also for integers.
inline std::string rational_token(const Rational& q) {
  Rational c = q;
  c.canonicalize();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

inline Rational parse_rational_token(const Json& j) {
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (!j.is_string()) throw MalformedJson("rational must be a \"p/q\" string");
  try {
    return parse_rational(j.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw MalformedJson(e.what());
  }
}

// {"d", "internal", "leaves", "edges", "legs", "types"} and, when any leaf
// carries a tag, a trailing "tags" object.
inline Json to_json(const Diagram& d) {
  Json j;
  j["d"] = d.d;
  j["internal"] = d.internal;
  j["leaves"] = d.leaves;
  Json edges = Json::array(), legs = Json::array(), types = Json::object();
  for (std::size_t i = 0; i < d.edges.size(); ++i) {
    auto& e = d.edges[i];
    edges.push_back({e.tail, e.head, e.mult});
    types[std::to_string(i)] = rational_token(e.type);
  }
  for (auto& l : d.legs) legs.push_back({l.tail, l.head});
  j["edges"] = edges;
  j["legs"] = legs;
  j["types"] = types;
  if (!d.tags.empty()) {
    Json tags = Json::object();
    for (auto& [leaf, tag] : d.tags) tags[std::to_string(leaf)] = tag;
    j["tags"] = tags;
  }
  return j;
}

inline Diagram diagram_from_json(const Json& j) {
  auto ints = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array()) throw MalformedJson(std::string("diagram: missing array ") + key);
    return j[key].get<std::vector<int>>();
  };
  try {
    if (!j.is_object()) throw MalformedJson("diagram must be an object");
    Diagram d;
    d.d = j.value("d", 4);
    d.internal = ints("internal");
    d.leaves = ints("leaves");
    if (!j.contains("edges") || !j.contains("legs")) throw MalformedJson("diagram: missing edges or legs");
    for (auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 3) throw MalformedJson("edge must be [tail, head, mult]");
      Edge x{e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), Rational(-2)};
      if (x.mult < 1) throw MalformedJson("edge multiplicity must be positive");
      d.edges.push_back(x);
    }
    if (j.contains("types"))
      for (auto& [k, v] : j["types"].items()) {
        std::size_t i = std::stoul(k);
        if (i >= d.edges.size()) throw MalformedJson("type index out of range: " + k);
        d.edges[i].type = parse_rational_token(v);
      }
    for (auto& l : j["legs"]) {
      if (!l.is_array() || l.size() != 2) throw MalformedJson("leg must be [tail, head]");
      d.legs.push_back({l[0].get<int>(), l[1].get<int>()});
    }
    if (j.contains("tags"))
      for (auto& [k, v] : j["tags"].items()) d.tags[std::stoi(k)] = v.get<std::string>();
    d.normalize();
    for (auto& e : d.edges)
      if (!d.is_internal(e.tail) || !d.is_internal(e.head)) throw MalformedJson("edge endpoint is not internal");
    // Unpaired noise leaves may be joined to each other.
    auto known = [&](int v) { return d.is_leaf(v) || d.is_internal(v); };
    for (auto& l : d.legs)
      if (!known(l.tail) || !known(l.head) || !(d.is_leaf(l.tail) || d.is_leaf(l.head)))
        throw MalformedJson("leg must touch a leaf");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedJson(std::string("diagram: ") + e.what());
  } catch (const std::logic_error& e) {
    throw MalformedJson(std::string("diagram: ") + e.what());
  }
}

// Terms in canonical order: by the isomorphism key of the product, then by
// coefficient. Pass a reduced sum for a canonical document.
inline Json to_json(const FormalSum& fs) {
  std::vector<std::pair<std::string, const Term*>> order;
  for (auto& t : fs.terms) {
    ProductKey key;
    normal_form(t.product, &key);
    order.push_back({key.str(), &t});
  }
  std::stable_sort(order.begin(), order.end(), [](auto& a, auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->coeff < b.second->coeff;
  });
  Json out = Json::array();
  for (auto& [key, t] : order) {
    Json term;
    term["coeff"] = rational_token(t->coeff);
    Json factors = Json::array();
    for (auto& f : t->product.factors) factors.push_back(to_json(f));
    term["factors"] = factors;
    out.push_back(term);
  }
  return out;
}

inline FormalSum formal_sum_from_json(const Json& j) {
  if (!j.is_array()) throw MalformedJson("formal sum must be an array");
  FormalSum fs;
  for (auto& t : j) {
    if (!t.is_object() || !t.contains("coeff") || !t.contains("factors") || !t["factors"].is_array())
      throw MalformedJson("term must be {\"coeff\", \"factors\"}");
    Term term{parse_rational_token(t["coeff"]), {}};
    for (auto& f : t["factors"]) term.product.factors.push_back(diagram_from_json(f));
    fs.terms.push_back(std::move(term));
  }
  return fs;
}

inline Json hepp_tree_to_json(const HeppTree& t) { return t.str(); }

inline HeppTree hepp_tree_from_json(const Json& j) {
  if (!j.is_string()) throw MalformedJson("hepp tree must be a string");
  try {
    return parse_hepp_tree(j.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw MalformedJson(e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedJson("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedJson(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace anderson
