#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "anderson/json_io.hpp"

using namespace anderson;

namespace {

const std::string kFixtures = ANDERSON_SOURCE_DIR "/data/fixtures/";

bool same_labelled(const Diagram& a, const Diagram& b) { return to_json(a).dump() == to_json(b).dump(); }

}  // namespace

TEST_CASE("rational tokens") {
  CHECK(rational_token(Rational(-2)) == "-2/1");
  CHECK(rational_token(Rational(6, 4)) == "3/2");
  CHECK(parse_rational_token(Json("3/2")) == Rational(3, 2));
  CHECK(parse_rational_token(Json("-7")) == Rational(-7));
  CHECK(parse_rational_token(Json(5)) == Rational(5));
  CHECK_THROWS_AS(parse_rational_token(Json("1/0")), MalformedJson);
  CHECK_THROWS_AS(parse_rational_token(Json("x")), MalformedJson);
  CHECK_THROWS_AS(parse_rational_token(Json(1.5)), MalformedJson);
}

TEST_CASE("field order is fixed") {
  Json j = to_json(named_diagram("bubble4"));
  std::vector<std::string> keys;
  for (auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"d", "internal", "leaves", "edges", "legs", "types", "tags"});
  CHECK(j["edges"][0] == Json::array({1, 2, 2}));
  CHECK(j["types"]["0"] == "-2/1");
}

TEST_CASE("golden fixtures of the named diagrams") {
  for (auto& name : named_diagram_list()) {
    CAPTURE(name);
    Json golden = read_json_file(kFixtures + name + ".json");
    Diagram d = named_diagram(name);
    CHECK(to_json(d) == golden);
    CHECK(same_labelled(diagram_from_json(golden), d));
  }
  Json golden = read_json_file(kFixtures + "sunset2_renormalised.json");
  CHECK(to_json(reduce(zimmermann(named_diagram("sunset2")))) == golden);
  FormalSum back = formal_sum_from_json(golden);
  CHECK(back.size() == 2);
  CHECK(is_formally_zero(back + Rational(-1) * zimmermann(named_diagram("sunset2"))));
}

TEST_CASE("round trips over enumerated diagrams") {
  int count = 0;
  using Case = std::pair<std::vector<int>, PairingMode>;
  for (auto& [sizes, mode] : std::vector<Case>{{{2, 2}, PairingMode::Complete},
                                               {{4, 2}, PairingMode::Complete},
                                               {{3, 3}, PairingMode::ConnectedComplete},
                                               {{2, 2, 2}, PairingMode::Complete},
                                               {{6}, PairingMode::Internal},
                                               {{8}, PairingMode::Internal}}) {
    auto trees = ladder_trees(sizes);
    for (auto& k : enumerate_pairings(trees, mode)) {
      Diagram d = build_paired_diagram(trees, k);
      Json j = to_json(d);
      Diagram e = diagram_from_json(Json::parse(j.dump()));
      CHECK(same_labelled(d, e));
      CHECK(is_isomorphic(d, e, true));
      ++count;
    }
  }
  CHECK(count > 50);
}

TEST_CASE("typed edges and tags survive") {
  Diagram d = named_diagram("nested4");
  d.edges[0].type = Rational(-5, 2);
  d.edges[1].type = Rational(1);
  Diagram e = diagram_from_json(to_json(d));
  CHECK(e.edges[0].type == Rational(-5, 2));
  CHECK(e.edges[1].type == 1);
  CHECK(e.tags == d.tags);
}

TEST_CASE("formal sums are written canonically") {
  FormalSum fs = zimmermann(named_diagram("chain2sunset"));
  FormalSum shuffled = fs;
  std::mt19937 rng(3);
  std::shuffle(shuffled.terms.begin(), shuffled.terms.end(), rng);
  CHECK(to_json(fs).dump() == to_json(shuffled).dump());
  FormalSum back = formal_sum_from_json(to_json(fs));
  CHECK(is_formally_zero(back + Rational(-1) * fs));
  CHECK(to_json(FormalSum{}) == Json::array());
}

TEST_CASE("hepp tree strings") {
  for (auto& t : enumerate_hepp_trees(std::vector<int>{1, 2, 3, 4})) {
    Json j = hepp_tree_to_json(t);
    CHECK(hepp_tree_from_json(j).str() == t.str());
  }
  CHECK_THROWS_AS(hepp_tree_from_json(Json("((1,2)")), MalformedJson);
  CHECK_THROWS_AS(hepp_tree_from_json(Json(3)), MalformedJson);
}

TEST_CASE("malformed documents") {
  Json good = to_json(named_diagram("bubble4"));
  CHECK_THROWS_AS(diagram_from_json(Json::array()), MalformedJson);
  Json j = good;
  j.erase("edges");
  CHECK_THROWS_AS(diagram_from_json(j), MalformedJson);
  j = good;
  j["edges"][0] = Json::array({1, 2});
  CHECK_THROWS_AS(diagram_from_json(j), MalformedJson);
  j = good;
  j["edges"][0] = Json::array({1, 9, 1});
  CHECK_THROWS_AS(diagram_from_json(j), MalformedJson);
  j = good;
  j["types"]["7"] = "1/1";
  CHECK_THROWS_AS(diagram_from_json(j), MalformedJson);
  j = good;
  j["legs"][0] = Json::array({1, 2});
  CHECK_THROWS_AS(diagram_from_json(j), MalformedJson);
  CHECK_THROWS_AS(formal_sum_from_json(Json::object()), MalformedJson);
  CHECK_THROWS_AS(formal_sum_from_json(Json::parse(R"([{"coeff":"1/2"}])")), MalformedJson);
  CHECK_THROWS_AS(read_json_file(kFixtures + "missing.json"), MalformedJson);
}
