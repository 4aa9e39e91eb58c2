#include <doctest.h>

#include "semcube/error.hpp"
#include "semcube/schema.hpp"
#include "support/oracles.hpp"

using namespace semcube;
using namespace semcube::schema;
using taxonomy::Concept;
using taxonomy::Ontology;

namespace {

Concept C(std::string id, std::vector<std::string> parents, std::string group) {
  Concept c;
  c.id = std::move(id);
  c.parents = std::move(parents);
  c.group = std::move(group);
  return c;
}

Ontology sample() {
  return Ontology::build({
      C("D0", {}, "Dis"), C("D1", {"D0"}, "Dis"), C("D2", {"D0"}, "Dis"), C("D11", {"D1"}, "Dis"),
      C("D12", {"D1", "D2"}, "Dis"), C("P0", {}, "Pro"), C("P1", {"P0"}, "Pro"), C("X", {}, "Other"),
  });
}

}  // namespace

TEST_CASE("dimensions are carved from the signature per group") {
  auto o = sample();
  auto dims = build_schema(o, {"D11", "D12", "P1", "X"}, {{"Dis", "Disease"}, {"Pro", "Protein"}});
  REQUIRE(dims.size() == 2);
  CHECK(dims[0].id == "Disease");
  CHECK(dims[0].member_concepts == std::set<std::string>{"D0", "D1", "D11", "D12", "D2"});
  CHECK(dims[1].member_concepts == std::set<std::string>{"P0", "P1"});
  CHECK_FALSE(dims[0].has("X"));
  CHECK(validate_schema(dims).empty());
}

TEST_CASE("categories are antichain strata") {
  auto o = sample();
  auto dims = build_schema(o, {"D11", "D12", "D2"}, {{"Dis", "Disease"}});
  const auto& cats = dims[0].categories;
  REQUIRE(cats.size() == 3);
  CHECK(cats[0].concepts == std::vector<std::string>{"D0"});
  CHECK(cats[1].concepts == std::vector<std::string>{"D1", "D2"});
  CHECK(cats[2].concepts == std::vector<std::string>{"D11", "D12"});
  for (std::size_t k = 0; k < cats.size(); ++k) {
    CHECK(cats[k].level == k);
    CHECK(cats[k].dimension_id == "Disease");
  }
}

TEST_CASE("a concept comparable to an accepted one moves down a level") {
  // B is a tree child of A at depth 1 and also a parent of C; C's tree parent
  // is A, so C sits at depth 1 next to B though C <= B.
  auto o = Ontology::build({C("A", {}, "g"), C("B", {"A"}, "g"), C("C", {"A", "B"}, "g")});
  auto dims = build_schema(o, {"C"}, {{"g", "G"}});
  const auto& cats = dims[0].categories;
  REQUIRE(cats.size() == 3);
  CHECK(cats[1].concepts == std::vector<std::string>{"B"});
  CHECK(cats[2].concepts == std::vector<std::string>{"C"});
  CHECK(validate_schema(dims).empty());
}

TEST_CASE("partition violations are rejected") {
  // P1 (group Pro) sits below a Dis concept, so the Protein fragment pulls in a Disease concept
  auto o = Ontology::build({C("D0", {}, "Dis"), C("P1", {"D0"}, "Pro")});
  try {
    build_schema(o, {"P1"}, {{"Dis", "Disease"}, {"Pro", "Protein"}});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_input);
    CHECK(e.context() == "P1");
  }
}

TEST_CASE("validate_schema detects broken categories") {
  auto o = sample();
  auto dims = build_schema(o, {"D11", "D12"}, {{"Dis", "Disease"}});
  auto bad = dims;
  bad[0].categories[1].concepts.push_back("D11");  // D11 <= D1, and D11 now twice
  auto v = validate_schema(bad);
  auto has = [&](Violation::Kind k) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
  };
  CHECK(has(Violation::Kind::antichain));
  CHECK(has(Violation::Kind::partition));

  auto missing = dims;
  missing[0].categories.pop_back();
  CHECK_FALSE(validate_schema(missing).empty());
}

TEST_CASE("random schemas validate") {
  testing::Rng rng(17);
  for (int i = 0; i < 30; ++i) {
    auto f = testing::random_schema_fixture(rng, 1 + rng() % 4, 25, 10);
    auto o = Ontology::build(f.concepts);
    std::set<std::string> sig;
    for (const auto& d : f.documents) {
      for (const auto& [c, _] : d.frequencies) sig.insert(c);
    }
    auto dims = build_schema(o, sig, f.groups);
    CHECK(validate_schema(dims).empty());
  }
}
