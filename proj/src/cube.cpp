#include "semcube/cube.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "semcube/error.hpp"
#include "semcube/kernels.hpp"

namespace semcube::cube {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::interest_factor: return "interest_factor";
    case Measure::log_likelihood_ratio: return "log_likelihood_ratio";
    case Measure::mutual_information: return "mutual_information";
    case Measure::f1: return "f1";
  }
  return "";
}

std::string_view to_string(Contingency c) { return c == Contingency::standard ? "standard" : "paper-literal"; }

std::string_view to_string(Aggregator a) {
  switch (a) {
    case Aggregator::sum: return "sum";
    case Aggregator::avg: return "avg";
    case Aggregator::max: return "max";
  }
  return "";
}

std::string_view to_string(Scorer s) { return s == Scorer::hits ? "hits" : "score_sum"; }

Measure parse_measure(std::string_view s) {
  for (auto m : {Measure::interest_factor, Measure::log_likelihood_ratio, Measure::mutual_information, Measure::f1}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::invalid_input, "unknown measure '" + std::string(s) + "'");
}

Contingency parse_contingency(std::string_view s) {
  if (s == "standard") return Contingency::standard;
  if (s == "paper-literal") return Contingency::paper_literal;
  throw Error(ErrorCode::invalid_input, "unknown contingency mode '" + std::string(s) + "'");
}

Aggregator parse_aggregator(std::string_view s) {
  for (auto a : {Aggregator::sum, Aggregator::avg, Aggregator::max}) {
    if (to_string(a) == s) return a;
  }
  throw Error(ErrorCode::invalid_input, "unknown aggregator '" + std::string(s) + "'");
}

Scorer parse_scorer(std::string_view s) {
  if (s == "hits") return Scorer::hits;
  if (s == "score_sum") return Scorer::score_sum;
  throw Error(ErrorCode::invalid_input, "unknown scorer '" + std::string(s) + "'");
}

CorpusIndex CorpusIndex::build(std::vector<DocumentInfo> documents, std::vector<facts::DocumentFact> facts,
                               std::shared_ptr<const taxonomy::Ontology> ontology,
                               std::shared_ptr<const std::vector<schema::Dimension>> dimensions) {
  if (documents.size() != facts.size()) {
    throw Error(ErrorCode::invalid_input, "document manifest and facts differ in length");
  }
  CorpusIndex idx;
  idx.documents_ = std::move(documents);
  idx.facts_ = std::move(facts);
  idx.ontology_ = std::move(ontology);
  idx.dimensions_ = std::move(dimensions);

  const auto words = idx.bitset_words();
  for (std::size_t k = 0; k < idx.dimensions_->size(); ++k) {
    const auto& dim = (*idx.dimensions_)[k];
    auto& table = idx.per_dimension_[dim.id];
    for (const auto& c : dim.member_concepts) {
      idx.dimension_of_.emplace(c, k);
      table[c].postings.bits.assign(words, 0);
    }
  }

  for (std::uint32_t d = 0; d < idx.facts_.size(); ++d) {
    const auto& fact = idx.facts_[d];
    for (const auto& [dim_id, assigned] : fact.assignments) {
      auto t = idx.per_dimension_.find(dim_id);
      if (t == idx.per_dimension_.end()) {
        throw Error(ErrorCode::unknown_id, "fact references unknown dimension '" + dim_id + "'", fact.doc_id);
      }
      if (!assigned) continue;
      const auto& dim = idx.dimension(dim_id);
      auto node = dim.fragment.index_of(*assigned);
      if (!node) {
        throw Error(ErrorCode::unknown_id, "fact assigns " + *assigned + " outside dimension " + dim_id, fact.doc_id);
      }
      auto& exact = t->second.at(*assigned);
      ++exact.point_hits;
      auto r = fact.rank.find(*assigned);
      if (r != fact.rank.end()) exact.point_score += r->second;
      for (auto a : dim.fragment.ancestor_nodes(*node)) {
        auto& p = t->second.at(dim.fragment.concept_at(a).id).postings;
        p.docs.push_back(d);
        p.bits[d / 64] |= std::uint64_t{1} << (d % 64);
      }
    }
  }
  return idx;
}

CorpusIndex index_corpus(std::vector<DocumentInfo> documents, std::vector<facts::DocumentFact> facts,
                         std::shared_ptr<const taxonomy::Ontology> ontology,
                         std::shared_ptr<const std::vector<schema::Dimension>> dimensions) {
  return CorpusIndex::build(std::move(documents), std::move(facts), std::move(ontology), std::move(dimensions));
}

const schema::Dimension& CorpusIndex::dimension(std::string_view id) const {
  for (const auto& d : *dimensions_) {
    if (d.id == id) return d;
  }
  throw Error(ErrorCode::unknown_id, "unknown dimension", std::string(id));
}

const schema::Dimension* CorpusIndex::dimension_of(std::string_view concept_id) const {
  auto it = dimension_of_.find(std::string(concept_id));
  return it == dimension_of_.end() ? nullptr : &(*dimensions_)[it->second];
}

const CorpusIndex::PerConcept* CorpusIndex::lookup(std::string_view dimension, std::string_view concept_id) const {
  auto t = per_dimension_.find(dimension);
  if (t == per_dimension_.end()) return nullptr;
  auto c = t->second.find(std::string(concept_id));
  return c == t->second.end() ? nullptr : &c->second;
}

const Postings& CorpusIndex::postings(std::string_view dimension, std::string_view concept_id) const {
  static const Postings empty;
  const auto* pc = lookup(dimension, concept_id);
  return pc ? pc->postings : empty;
}

std::size_t CorpusIndex::point_hits(std::string_view dimension, std::string_view concept_id) const {
  const auto* pc = lookup(dimension, concept_id);
  return pc ? pc->point_hits : 0;
}

double CorpusIndex::point_score(std::string_view dimension, std::string_view concept_id) const {
  const auto* pc = lookup(dimension, concept_id);
  return pc ? pc->point_score : 0.0;
}

std::size_t hits(const CorpusIndex& index, std::string_view concept_id, std::string_view dimension) {
  return index.postings(dimension, concept_id).size();
}

double score_sum(const CorpusIndex& index, std::string_view concept_id, std::string_view dimension) {
  const auto& dim = index.dimension(dimension);
  auto node = dim.fragment.index_of(concept_id);
  if (!node) return 0.0;
  double total = 0.0;
  for (auto v : dim.fragment.descendant_nodes(*node)) total += index.point_score(dimension, dim.fragment.concept_at(v).id);
  return total;
}

double concept_relevance(const CorpusIndex& index, std::string_view concept_id, std::string_view dimension,
                         Aggregator aggregator, Scorer scorer) {
  const auto& dim = index.dimension(dimension);
  auto node = dim.fragment.index_of(concept_id);
  if (!node) {
    throw Error(ErrorCode::unknown_id, "concept not in dimension " + std::string(dimension), std::string(concept_id));
  }
  const auto desc = dim.fragment.descendant_nodes(*node);
  double acc = 0.0;
  for (auto v : desc) {
    const auto& id = dim.fragment.concept_at(v).id;
    double value = scorer == Scorer::hits ? static_cast<double>(index.point_hits(dimension, id))
                                          : index.point_score(dimension, id);
    acc = aggregator == Aggregator::max ? std::max(acc, value) : acc + value;
  }
  if (aggregator == Aggregator::avg && !desc.empty()) acc /= static_cast<double>(desc.size());
  return acc;
}

ContingencyCell Cube::cell(const std::string& c_i, const std::string& c_j) const {
  for (const auto& c : cells) {
    if (c.c_i == c_i && c.c_j == c_j) return c;
  }
  auto i = marginal_i.find(c_i);
  auto j = marginal_j.find(c_j);
  if (i == marginal_i.end() || j == marginal_j.end()) {
    throw Error(ErrorCode::unknown_id, "pair not in cube", c_i + "/" + c_j);
  }
  return {c_i, c_j, 0, i->second, j->second};
}

Cube build_cube(const CorpusIndex& index, std::string_view dimension_i, std::span<const std::string> concepts_i,
                std::string_view dimension_j, std::span<const std::string> concepts_j) {
  if (dimension_i == dimension_j) {
    throw Error(ErrorCode::invalid_operation, "cube needs two distinct dimensions", std::string(dimension_i));
  }
  const auto& di = index.dimension(dimension_i);
  const auto& dj = index.dimension(dimension_j);
  for (const auto& c : concepts_i) {
    if (!di.has(c)) throw Error(ErrorCode::unknown_id, "concept not in dimension " + di.id, c);
  }
  for (const auto& c : concepts_j) {
    if (!dj.has(c)) throw Error(ErrorCode::unknown_id, "concept not in dimension " + dj.id, c);
  }
  Cube cube;
  cube.dimension_i = di.id;
  cube.dimension_j = dj.id;
  cube.n_col = index.size();
  for (const auto& c : concepts_i) cube.marginal_i[c] = index.postings(di.id, c).size();
  for (const auto& c : concepts_j) cube.marginal_j[c] = index.postings(dj.id, c).size();
  for (const auto& ci : concepts_i) {
    const auto& pi = index.postings(di.id, ci);
    if (pi.size() == 0) continue;
    for (const auto& cj : concepts_j) {
      const auto& pj = index.postings(dj.id, cj);
      if (pj.size() == 0) continue;
      auto n_ij = kernels::and_popcount(pi.bits, pj.bits);
      if (n_ij > 0) cube.cells.push_back({ci, cj, n_ij, pi.size(), pj.size()});
    }
  }
  return cube;
}

Cube build_cube(const CorpusIndex& index, const schema::Category& level_i, const schema::Category& level_j) {
  return build_cube(index, level_i.dimension_id, level_i.concepts, level_j.dimension_id, level_j.concepts);
}

namespace {

double g_squared(const ContingencyCell& c, std::uint64_t n_col, Contingency contingency) {
  const double nij = static_cast<double>(c.n_ij);
  const double ni = static_cast<double>(c.n_i);
  const double nj = static_cast<double>(c.n_j);
  const double n = static_cast<double>(n_col);
  // rows: c_j present / absent; columns: c_i present / absent
  const double o[2][2] = {
      {nij, nj - nij},
      {ni - nij, contingency == Contingency::standard ? n - ni - nj + nij : n - ni - nj},
  };
  double total = 0.0;
  for (const auto& r : o) {
    for (double v : r) {
      if (v < 0.0) return std::numeric_limits<double>::quiet_NaN();
      total += v;
    }
  }
  if (total <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double row[2] = {o[0][0] + o[0][1], o[1][0] + o[1][1]};
  const double col[2] = {o[0][0] + o[1][0], o[0][1] + o[1][1]};
  double g = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int k = 0; k < 2; ++k) {
      if (o[r][k] == 0.0) continue;
      const double expected = row[r] * col[k] / total;
      g += o[r][k] * std::log(o[r][k] / expected);
    }
  }
  return 2.0 * g;
}

}  // namespace

double measure_score(const ContingencyCell& cell, std::uint64_t n_col, Measure measure, Contingency contingency) {
  if (cell.n_i == 0 || cell.n_j == 0) {
    throw Error(ErrorCode::invalid_input, "zero marginal", cell.c_i + "/" + cell.c_j);
  }
  const double nij = static_cast<double>(cell.n_ij);
  const double ni = static_cast<double>(cell.n_i);
  const double nj = static_cast<double>(cell.n_j);
  switch (measure) {
    case Measure::interest_factor: return nij * static_cast<double>(n_col) / (ni * nj);
    case Measure::f1: return 2.0 * nij / (ni + nj);
    case Measure::mutual_information:
      if (cell.n_ij == 0) return -std::numeric_limits<double>::infinity();
      return std::log2(nij * static_cast<double>(n_col) / (ni * nj));
    case Measure::log_likelihood_ratio: return g_squared(cell, n_col, contingency);
  }
  return 0.0;
}

void sort_bridges(std::vector<Bridge>& items) {
  std::sort(items.begin(), items.end(), [](const Bridge& a, const Bridge& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.c_i != b.c_i) return a.c_i < b.c_i;
    return a.c_j < b.c_j;
  });
}

std::vector<Bridge> bridges(const Cube& cube, Measure measure, double delta, Contingency contingency) {
  std::vector<Bridge> out;
  for (const auto& cell : cube.cells) {
    double s = measure_score(cell, cube.n_col, measure, contingency);
    if (s > delta) out.push_back({cell.c_i, cell.c_j, measure, s});
  }
  sort_bridges(out);
  return out;
}

void write_cube_tsv(std::ostream& out, const Cube& cube, Measure measure, Contingency contingency) {
  out << "c_i\tc_j\tn_ij\tn_i\tn_j\t" << to_string(measure) << '\n';
  for (const auto& c : cube.cells) {
    out << c.c_i << '\t' << c.c_j << '\t' << c.n_ij << '\t' << c.n_i << '\t' << c.n_j << '\t'
        << measure_score(c, cube.n_col, measure, contingency) << '\n';
  }
}

std::shared_ptr<const Cube> CubeCache::get(const schema::Category& level_i, const schema::Category& level_j) {
  Key key{level_i.dimension_id, level_i.level, level_j.dimension_id, level_j.level};
  {
    std::shared_lock lock(mutex_);
    auto it = cubes_.find(key);
    if (it != cubes_.end()) return it->second;
  }
  auto fresh = std::make_shared<const Cube>(build_cube(*index_, level_i, level_j));
  std::unique_lock lock(mutex_);
  auto [it, _] = cubes_.emplace(std::move(key), std::move(fresh));
  return it->second;
}

std::vector<Bridge> CubeCache::bridges(const schema::Category& level_i, const schema::Category& level_j,
                                       Measure measure, double delta, Contingency contingency) {
  return cube::bridges(*get(level_i, level_j), measure, delta, contingency);
}

std::size_t CubeCache::size() const {
  std::shared_lock lock(mutex_);
  return cubes_.size();
}

}  // namespace semcube::cube
