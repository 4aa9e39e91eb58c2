// Acceptance gate: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "semcube/api.hpp"
#include "semcube/error.hpp"
#include "semcube/facts.hpp"
#include "semcube/map.hpp"
#include "support/oracles.hpp"
#include "support/schema_check.hpp"

using namespace semcube;
using nlohmann::json;
using testing::Graph;
using testing::Rng;

namespace {

struct Failure {
  std::string what;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

template <class A, class B>
void expect_eq(const A& a, const B& b, const std::string& what) {
  if (!(a == b)) throw Failure{what};
}

int run(const char* name, const std::function<void()>& body) {
  try {
    body();
    std::cout << "PASS " << name << "\n";
    return 0;
  } catch (const Failure& f) {
    std::cout << "FAIL " << name << ": " << f.what << "\n";
  } catch (const std::exception& e) {
    std::cout << "FAIL " << name << ": exception: " << e.what() << "\n";
  }
  return 1;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// ---------------------------------------------------------------------------

void interval_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240601);
  for (int dag = 0; dag < 50; ++dag) {
    const auto n = 1 + rng() % 200;
    auto cs = testing::random_dag(rng, n, 0.35, 4);
    auto onto = taxonomy::Ontology::build(cs);
    Graph g(cs);
    for (int q = 0; q < 1000; ++q) {
      const auto& a = cs[rng() % n].id;
      const auto& b = cs[rng() % n].id;
      switch (rng() % 3) {
        case 0:
          expect_eq(onto.is_descendant(a, b), g.below(a, b), "is_descendant(" + a + "," + b + ")");
          break;
        case 1:
          expect_eq(as_set(onto.descendants_of(a)), g.descendants(a), "descendants_of(" + a + ")");
          break;
        default:
          expect_eq(as_set(onto.ancestors_of(a)), g.ancestors(a), "ancestors_of(" + a + ")");
      }
    }
  }
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  expect(secs < 10.0, "took " + std::to_string(secs) + " s");
}

facts::DenseMatrix random_affinity(Rng& rng, std::size_t n) {
  facts::DenseMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      switch (rng() % 4) {
        case 0: m(i, j) = m(j, i) = 1.0; break;
        case 1: m(i, j) = 0.5; m(j, i) = 1.0; break;
        default: break;
      }
    }
  }
  return m;
}

std::vector<double> random_y(Rng& rng, std::size_t n) {
  std::vector<double> y(n);
  for (auto& v : y) v = static_cast<double>(1 + rng() % 6);
  return facts::normalize_frequencies(y);
}

void rank_closed_form() {
  Rng rng(77);
  for (int i = 0; i < 100; ++i) {
    const auto n = 1 + rng() % 20;
    auto s = facts::normalize_laplacian(random_affinity(rng, n));
    auto y = random_y(rng, n);
    auto zero = facts::rank_concepts(s, y, 0.0);
    for (std::size_t k = 0; k < n; ++k) expect(std::abs(zero.rank[k] - y[k]) <= 1e-12, "alpha=0 differs from Y");
    auto closed = facts::rank_concepts(s, y, 0.9);
    auto iter = facts::propagate(s, y, 0.9, 1000);
    for (std::size_t k = 0; k < n; ++k) {
      expect(std::abs(closed.rank[k] - iter[k]) <= 1e-8,
             "closed form vs propagation: " + std::to_string(closed.rank[k]) + " vs " + std::to_string(iter[k]));
    }
  }
  facts::DenseMatrix s(2, {0.5, 0.5, 0.5, 0.5});
  std::vector<double> y{0.5, 0.5};
  auto r = facts::rank_concepts(s, y, 0.9);
  expect(std::abs(r.rank[0] - 0.5) <= 1e-9 && std::abs(r.rank[1] - 0.5) <= 1e-9, "symmetric fixture");
}

void affinity_rules() {
  Rng rng(4242);
  std::size_t taxonomic_cells = 0, overlap_cells = 0;
  for (int round = 0; round < 200; ++round) {
    auto cs = testing::random_dag(rng, 2 + rng() % 15, 0.4, 2);
    auto onto = taxonomy::Ontology::build(cs);
    Graph g(cs);
    std::vector<std::string> pool;
    for (const auto& c : cs) pool.push_back(c.id);
    pool.push_back("UNKNOWN");
    auto doc = iexml::parse_iexml("d", "t", testing::random_iexml(rng, pool));

    // sentence membership straight from the mentions
    std::map<std::string, std::set<std::size_t>> sentences;
    for (const auto& m : doc.mentions) {
      for (const auto& r : m.readings) sentences[r.cui].insert(m.sentence_index);
    }
    auto aff = facts::build_affinity(doc, onto);
    std::vector<std::string> expected_ids;
    for (const auto& [cui, _] : sentences) {
      if (cui != "UNKNOWN") expected_ids.push_back(cui);
    }
    expect_eq(aff.concepts, expected_ids, "affinity concept list");
    for (std::size_t i = 0; i < aff.concepts.size(); ++i) {
      for (std::size_t j = 0; j < aff.concepts.size(); ++j) {
        const auto& ci = aff.concepts[i];
        const auto& cj = aff.concepts[j];
        double want = 0.0;
        if (i == j) {
          want = 1.0;
        } else {
          std::vector<std::size_t> shared;
          std::set_intersection(sentences[ci].begin(), sentences[ci].end(), sentences[cj].begin(), sentences[cj].end(),
                                std::back_inserter(shared));
          if (!shared.empty()) want = std::max(want, 1.0);
          if (g.below(ci, cj)) want = std::max(want, 0.5);  // c_i <= c_j
          if (g.below(cj, ci)) want = std::max(want, 1.0);  // c_j <= c_i
          if (g.below(ci, cj) && shared.empty()) ++taxonomic_cells;
          if (g.below(ci, cj) && !shared.empty()) ++overlap_cells;
        }
        expect(aff.m(i, j) == want, "cell (" + ci + "," + cj + ") = " + std::to_string(aff.m(i, j)) + ", want " +
                                        std::to_string(want));
      }
    }
  }
  expect(taxonomic_cells > 0 && overlap_cells > 0, "generator never produced the asymmetric or overlap case");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void figure_fixture() {
  const auto dir = testing::fixtures_dir() + "/figure";
  auto doc = iexml::parse_iexml("figure", "pubmed", slurp(dir + "/figure.xml"));
  expect_eq(doc.mentions.size(), std::size_t{15}, "mention count " + std::to_string(doc.mentions.size()));
  expect_eq(doc.reading_count(), std::size_t{18}, "reading count " + std::to_string(doc.reading_count()));
  auto snap = testing::load_fixture("figure");
  const auto& fact = snap.index->facts().at(0);
  const std::map<std::string, std::string> printed{{"ResearchActivity", "C1709323"},
                                                   {"PopulationGroup", "C0007457"},
                                                   {"AgeGroup", "C0008059"},
                                                   {"Disease", "C1384600"},
                                                   {"ImmunologyFactor", "C0063717"}};
  for (const auto& [dim, cui] : printed) {
    const auto& got = fact.assignments.at(dim);
    expect(got && *got == cui, dim + " assigned " + (got ? *got : std::string("null")));
  }
}

// One mention per dimension per document, so facts are exactly the chosen concepts.
testing::SchemaFixture designed_corpus(Rng& rng, bool independent) {
  testing::SchemaFixture f;
  auto add = [&](std::string id, std::vector<std::string> parents, std::string group) {
    taxonomy::Concept c;
    c.id = std::move(id);
    c.parents = std::move(parents);
    c.group = std::move(group);
    f.concepts.push_back(std::move(c));
  };
  add("A0", {}, "A");
  add("A1", {"A0"}, "A");
  add("A2", {"A0"}, "A");
  add("A11", {"A1"}, "A");
  add("A12", {"A1", "A2"}, "A");
  add("B0", {}, "B");
  add("B1", {"B0"}, "B");
  add("B2", {"B0"}, "B");
  add("B21", {"B2"}, "B");
  f.groups = {{"A", "A"}, {"B", "B"}};
  const std::vector<std::string> a_leaf{"A1", "A2", "A11", "A12"};
  const std::vector<std::string> b_leaf{"B1", "B2", "B21"};
  for (std::size_t d = 0; d < 50; ++d) {
    std::string a, b;
    if (independent) {
      a = d < 10 ? "A1" : "A2";
      b = d % 2 == 0 ? "B1" : "B2";
    } else {
      a = a_leaf[rng() % a_leaf.size()];
      b = b_leaf[rng() % b_leaf.size()];
    }
    auto text = "<s>" + testing::mention(a) + " " + testing::mention(b) + "</s>";
    f.documents.push_back(iexml::parse_iexml(testing::node_id("d", d), "pubmed", text));
  }
  return f;
}

void check_cube_against_loop(const engine::Snapshot& snap) {
  const auto& idx = *snap.index;
  Graph g(*snap.ontology);
  const auto& da = idx.dimension("A");
  const auto& db = idx.dimension("B");
  std::vector<std::string> ca(da.member_concepts.begin(), da.member_concepts.end());
  std::vector<std::string> cb(db.member_concepts.begin(), db.member_concepts.end());
  auto cube = cube::build_cube(idx, "A", ca, "B", cb);
  expect_eq(cube.n_col, std::uint64_t{50}, "N_col");
  for (const auto& a : ca) {
    for (const auto& b : cb) {
      auto got = cube.cell(a, b);
      auto want = testing::brute_cell(idx, g, "A", a, "B", b);
      expect(got == want, "cell " + a + "/" + b + ": " + std::to_string(got.n_ij) + "," + std::to_string(got.n_i) +
                              "," + std::to_string(got.n_j) + " vs " + std::to_string(want.n_ij) + "," +
                              std::to_string(want.n_i) + "," + std::to_string(want.n_j));
      expect(got.n_ij <= std::min(got.n_i, got.n_j) && std::min(got.n_i, got.n_j) <= cube.n_col, "cell bounds");
    }
  }
  for (auto m : {cube::Measure::interest_factor, cube::Measure::log_likelihood_ratio, cube::Measure::mutual_information,
                 cube::Measure::f1}) {
    std::vector<cube::Bridge> previous;
    bool first = true;
    for (double delta = 8.0; delta >= -1.0; delta -= 0.25) {
      auto cur = cube::bridges(cube, m, delta);
      for (const auto& b : cur) expect(b.score > delta, "bridge at or below delta");
      if (!first) {
        for (const auto& b : previous) {
          expect(std::find(cur.begin(), cur.end(), b) != cur.end(), "bridges not monotone in delta");
        }
      }
      previous = std::move(cur);
      first = false;
    }
  }
}

void cube_oracle() {
  Rng rng(5150);
  auto random = testing::snapshot_of(designed_corpus(rng, false));
  check_cube_against_loop(random);

  auto indep = testing::snapshot_of(designed_corpus(rng, true));
  check_cube_against_loop(indep);
  std::vector<std::string> a{"A1"}, b{"B1"};
  auto cube = cube::build_cube(*indep.index, "A", a, "B", b);
  auto cell = cube.cell("A1", "B1");
  expect(cell == cube::ContingencyCell{"A1", "B1", 5, 10, 25}, "independence cell counts");
  const double lift = cube::measure_score(cell, cube.n_col, cube::Measure::interest_factor);
  const double g2 = cube::measure_score(cell, cube.n_col, cube::Measure::log_likelihood_ratio);
  const double mi = cube::measure_score(cell, cube.n_col, cube::Measure::mutual_information);
  expect(std::abs(lift - 1.0) <= 1e-9, "interest factor " + std::to_string(lift));
  expect(std::abs(g2) <= 1e-9, "G2 " + std::to_string(g2));
  expect(std::abs(mi) <= 1e-9, "MI " + std::to_string(mi));
}

void schema_constraints() {
  Rng rng(90210);
  for (int i = 0; i < 100; ++i) {
    auto f = testing::random_schema_fixture(rng, 1 + rng() % 5, 40, 15);
    auto snap = testing::snapshot_of(f);
    auto v = schema::validate_schema(*snap.dimensions);
    expect(v.empty(), "fixture " + std::to_string(i) + ": " + (v.empty() ? "" : v.front().message));
    // every signature concept with a mapped group is in exactly one dimension
    for (const auto& d : f.documents) {
      for (const auto& [cui, _] : d.frequencies) {
        int owners = 0;
        for (const auto& dim : *snap.dimensions) owners += dim.has(cui);
        expect(owners == 1, cui + " owned by " + std::to_string(owners) + " dimensions");
      }
    }
  }
}

void check_map_invariants(const cube::CorpusIndex& idx, const map::ConceptMap& m, const std::string& step) {
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const auto& layer = m.layers[k];
    const auto& frag = idx.dimension(layer.dimension).fragment;
    for (const auto& a : layer.balls) {
      for (const auto& b : layer.balls) {
        if (a.concept_id == b.concept_id) continue;
        expect(!frag.is_descendant(a.concept_id, b.concept_id),
               step + ": " + a.concept_id + " and its ancestor " + b.concept_id + " share layer " + std::to_string(k));
      }
    }
  }
  for (std::size_t k = 0; k < m.bridges.size(); ++k) {
    for (const auto& b : m.bridges[k]) {
      expect(m.layers[k].position_of(b.c_i) && m.layers[k + 1].position_of(b.c_j),
             step + ": dangling bridge " + b.c_i + "-" + b.c_j);
    }
  }
  auto fresh = map::build_map(idx, m.id, m.layers, m.settings, m.query);
  expect(fresh.bridges == m.bridges, step + ": bridges differ from a fresh build");
}

void browsing_invariants() {
  Rng rng(8675309);
  int sequences = 0;
  std::size_t applied = 0, drilled = 0;
  while (sequences < 20) {
    auto f = testing::random_schema_fixture(rng, 3, 30, 60);
    auto snap = testing::snapshot_of(f);
    const auto& idx = *snap.index;
    if (idx.dimensions().size() < 2) continue;
    const auto& d0 = idx.dimensions()[0];
    const auto& d1 = idx.dimensions()[1];
    if (d0.categories.size() < 2 || d1.categories.size() < 2) continue;
    ++sequences;

    map::MapSettings settings;
    settings.delta = 0.8;
    auto fresh_map = [&] {
      std::vector<map::MapLayer> layers{map::define_layer(idx, d0.id, rng() % 2, settings),
                                        map::define_layer(idx, d1.id, 1, settings),
                                        map::define_layer(idx, d0.id, 1, settings)};
      return map::build_map(idx, "m", std::move(layers), settings);
    };
    auto m = fresh_map();
    for (int op = 0; op < 100; ++op) {
      const auto step = "seq " + std::to_string(sequences) + " op " + std::to_string(op);
      std::vector<std::size_t> nonempty;
      for (std::size_t k = 0; k < m.layers.size(); ++k) {
        if (!m.layers[k].balls.empty()) nonempty.push_back(k);
      }
      if (nonempty.size() < m.layers.size()) {
        m = fresh_map();
        check_map_invariants(idx, m, step + " (rebuilt)");
        continue;
      }
      const auto k = nonempty[rng() % nonempty.size()];
      const auto c = m.layers[k].balls[rng() % m.layers[k].balls.size()].concept_id;
      const auto kind = rng() % 10;
      try {
        if (kind < 6) {
          map::drill_down(idx, m, k, c);
          ++drilled;
        } else if (kind < 7) {
          map::keep_only(idx, m, k, c, rng() % 2 ? map::KeepScope::adjacent : map::KeepScope::layer);
        } else if (kind < 8) {
          map::remove_concept(idx, m, k, c);
        } else {
          map::roll_up(idx, m, k, c);
        }
        ++applied;
      } catch (const Error& e) {
        // leaf drill-down and roll-up without an expansion are refused; the map must be untouched
        expect(e.code() == ErrorCode::invalid_operation, step + ": unexpected error " + e.what());
      }
      check_map_invariants(idx, m, step);
    }
  }
  expect(applied >= 1000 && drilled >= 500,
         "too few operations applied: " + std::to_string(applied) + " (" + std::to_string(drilled) + " drill-downs)");
}

struct ApiClient {
  api::Api& api;
  json call(const std::string& method, const std::string& path, const json& body = nullptr,
            const api::Params& params = {}, const char* schema = "map") {
    auto r = api.handle(method, path, params, body.is_null() ? std::string() : body.dump());
    expect(r.status == 200, method + " " + path + " -> " + std::to_string(r.status) + " " + r.body);
    auto j = json::parse(r.body);
    auto problem = testing::check_schema(j, testing::load_schema(schema));
    expect(problem.empty(), path + " response not schema-valid: " + problem);
    return j;
  }
};

const json* find_ball(const json& layer, const std::string& id) {
  for (const auto& b : layer["balls"]) {
    if (b["concept"] == id) return &b;
  }
  return nullptr;
}

void walkthroughs() {
  // Procedures vs findings: query marking, drill-down, keep-only, bridge objects.
  {
    engine::EngineConfig config;
    auto snap = testing::load_fixture("tof", &config);
    api::Api api(snap, config);
    ApiClient c{api};
    c.call("GET", "/tree", nullptr, {}, "tree");
    auto m = c.call("POST", "/maps",
                    {{"layers", {{{"dimension", "Health_Procedures"}, {"category", 1}}, {{"dimension", "Finding"}, {"category", 1}}}},
                     {"query", "repair"}});
    const std::string id = m["map_id"];
    const auto& procs = m["layers"][0];
    expect((*find_ball(procs, "P100"))["state"] == "query-match", "Cardiac surgical procedures not marked");
    expect((*find_ball(procs, "P200"))["state"] == "normal", "Catheterisation marked");

    m = c.call("POST", "/maps/" + id + "/drill-down", {{"concept", "P100"}});
    const auto* rft = find_ball(m["layers"][0], "P110");
    expect(rft && (*rft)["state"] == "query-match", "Repair Fallot Tetralogy not marked after expansion");
    expect((*find_ball(m["layers"][0], "P120"))["state"] == "expanded-child", "sibling state");

    m = c.call("POST", "/maps/" + id + "/keep-only", {{"concept", "P110"}});
    std::set<std::string> findings;
    for (const auto& b : m["layers"][1]["balls"]) findings.insert(b["concept"]);
    expect(findings == std::set<std::string>{"F100", "F400"}, "keep-only left " + m["layers"][1].dump());
    bool death_bridge = false;
    for (const auto& b : m["bridges"][0]["items"]) death_bridge |= b["from"] == "P110" && b["to"] == "F100";
    expect(death_bridge, "no bridge Repair Fallot Tetralogy - Death");

    auto objs = c.call("GET", "/maps/" + id + "/bridges/objects", nullptr, {{"from", "P110"}, {"to", "F100"}}, "objects");
    std::set<std::string> docs;
    for (const auto& o : objs["items"]) docs.insert(o["doc_id"]);
    expect(docs == std::set<std::string>{"tof01", "tof02", "tof03"}, "bridge objects " + objs.dump());
    for (const auto& o : objs["items"]) {
      expect(o.contains("link"), "missing deep link");
    }
  }
  // Disease subtypes: keyword layer without a dimension.
  {
    engine::EngineConfig config;
    auto snap = testing::load_fixture("brain_tumour", &config);
    api::Api api(snap, config);
    ApiClient c{api};
    auto m = c.call("POST", "/maps", {{"layers", {{{"query", "epilepsy"}}}}});
    expect(m["layers"].size() == 1, "expected one keyword layer, got " + std::to_string(m["layers"].size()));
    std::vector<std::string> labels;
    for (const auto& b : m["layers"][0]["balls"]) {
      labels.push_back(b["label"]);
      expect(b["state"] == "query-match", "ball not marked");
    }
    std::sort(labels.begin(), labels.end());
    const std::vector<std::string> want{"attack epileptic", "epilepsy extratemporal", "epilepsy focal",
                                        "epilepsy intractable", "epilepsy lobe temporal"};
    std::ostringstream got;
    for (const auto& l : labels) got << l << ";";
    expect(labels == want, "balls " + got.str());
  }
}

}  // namespace

int main() {
  int failed = 0;
  failed += run("interval-algebra oracle (50 random DAGs x 1000 queries, < 10 s)", interval_oracle);
  failed += run("rank closed form (alpha=0, closed form vs propagation, symmetric fixture)", rank_closed_form);
  failed += run("affinity rules cell by cell", affinity_rules);
  failed += run("figure fixture (15 mentions, 18 readings, printed fact)", figure_fixture);
  failed += run("cube oracle (brute-force counts, independence, delta monotonicity)", cube_oracle);
  failed += run("schema constraints on 100 random fixtures", schema_constraints);
  failed += run("browsing invariants over random operation sequences", browsing_invariants);
  failed += run("use-case walkthroughs through the API", walkthroughs);
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " failing\n";
  return failed;
}
