#include "semcube/facts.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "semcube/error.hpp"
#include "semcube/kernels.hpp"

namespace semcube::facts {

namespace {
constexpr double kResidualLimit = 1e-8;
constexpr std::size_t kFallbackIterations = 10000;
constexpr double kTieTolerance = 1e-10;
}  // namespace

DenseMatrix::DenseMatrix(std::size_t n, std::initializer_list<double> values) : n_(n), data_(values) {
  if (data_.size() != n * n) throw Error(ErrorCode::invalid_input, "matrix initializer has wrong size");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = kernels::dot(row(i), x);
  return out;
}

bool DenseMatrix::symmetric() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if ((*this)(i, j) != (*this)(j, i)) return false;
    }
  }
  return true;
}

AffinityMatrix build_affinity(const iexml::AnnotatedDocument& doc, const taxonomy::Ontology& ontology) {
  AffinityMatrix a;
  std::map<std::string, std::size_t> slot;
  std::vector<taxonomy::Ontology::Node> nodes;
  for (const auto& [cui, _] : iexml::concept_frequencies(doc)) {
    auto n = ontology.index_of(cui);
    if (!n) {
      ++a.dropped;
      continue;
    }
    slot.emplace(cui, a.concepts.size());
    a.concepts.push_back(cui);
    nodes.push_back(*n);
  }
  const auto n = a.concepts.size();
  a.m = DenseMatrix(n);
  auto raise = [&](std::size_t i, std::size_t j, double v) { a.m(i, j) = std::max(a.m(i, j), v); };
  for (std::size_t i = 0; i < n; ++i) a.m(i, i) = 1.0;
  for (const auto& [x, y] : iexml::sentence_cooccurrences(doc)) {
    auto ix = slot.find(x);
    auto iy = slot.find(y);
    if (ix == slot.end() || iy == slot.end()) continue;
    raise(ix->second, iy->second, 1.0);
    raise(iy->second, ix->second, 1.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && ontology.is_descendant(nodes[i], nodes[j])) {
        raise(i, j, 0.5);
        raise(j, i, 1.0);
      }
    }
  }
  return a;
}

DenseMatrix normalize_laplacian(const DenseMatrix& m) {
  const auto n = m.size();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = kernels::sum(m.row(i));
    assert(d > 0.0);
    if (!(d > 0.0)) throw Error(ErrorCode::degenerate, "affinity row " + std::to_string(i) + " sums to zero");
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  DenseMatrix s(n);
  for (std::size_t i = 0; i < n; ++i) kernels::scale_mul(m.row(i), inv_sqrt, inv_sqrt[i], s.row(i));
  return s;
}

std::vector<double> normalize_frequencies(std::span<const double> y) {
  std::vector<double> out(y.begin(), y.end());
  double total = kernels::sum(y);
  if (total != 0.0) {
    for (auto& v : out) v /= total;
  }
  return out;
}

std::vector<double> solve_dense(DenseMatrix a, std::vector<double> b) {
  const auto n = a.size();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : a.row(i)) scale = std::max(scale, std::abs(v));
  }
  const double tiny = 1e-14 * std::max(scale, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    }
    if (std::abs(a(pivot, k)) <= tiny) throw Error(ErrorCode::degenerate, "singular system");
    if (pivot != k) {
      std::swap_ranges(a.row(k).begin(), a.row(k).end(), a.row(pivot).begin());
      std::swap(b[k], b[pivot]);
    }
    auto pivot_row = a.row(k).subspan(k);
    for (std::size_t i = k + 1; i < n; ++i) {
      double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      kernels::axpy(-f, pivot_row, a.row(i).subspan(k));
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double acc = b[k] - kernels::dot(a.row(k).subspan(k + 1), std::span<const double>(x).subspan(k + 1));
    x[k] = acc / a(k, k);
  }
  return x;
}

std::vector<double> propagate(const DenseMatrix& s, std::span<const double> y, double alpha, std::size_t iterations) {
  std::vector<double> f(y.begin(), y.end());
  for (std::size_t it = 0; it < iterations; ++it) {
    auto sf = s.multiply(f);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = alpha * sf[i] + (1.0 - alpha) * y[i];
  }
  return f;
}

RankResult rank_concepts(const DenseMatrix& s, std::span<const double> y, double alpha) {
  const auto n = s.size();
  if (y.size() != n) throw Error(ErrorCode::invalid_input, "rank: frequency vector does not match matrix size");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorCode::invalid_input, "rank: alpha must lie in [0,1)");
  if (n == 0) return {};

  DenseMatrix system(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) system(i, j) = (i == j ? 1.0 : 0.0) - alpha * s(i, j);
  }
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = (1.0 - alpha) * y[i];

  try {
    auto x = solve_dense(system, rhs);
    auto back = system.multiply(x);
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(back[i] - rhs[i]));
    if (residual <= kResidualLimit) return {std::move(x), false};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate) throw;
  }

  auto f = propagate(s, y, alpha, kFallbackIterations);
  if (!std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::degenerate, "rank propagation diverged");
  }
  return {std::move(f), true};
}

std::map<std::string, std::optional<std::string>> select_assignments(const RankVector& rank,
                                                                     const taxonomy::Ontology& ontology,
                                                                     std::span<const schema::Dimension> dimensions) {
  std::map<std::string, std::optional<std::string>> out;
  for (const auto& dim : dimensions) {
    std::optional<std::string> best;
    double best_score = 0.0;
    std::uint32_t best_pre = 0;
    for (const auto& [cui, score] : rank) {
      if (!dim.has(cui)) continue;
      const auto pre = ontology.descriptor(cui).pre_index;
      if (!best) {
        best = cui;
        best_score = score;
        best_pre = pre;
        continue;
      }
      const double tol = kTieTolerance * std::max(std::abs(score), std::abs(best_score));
      if (score > best_score + tol || (std::abs(score - best_score) <= tol && pre < best_pre)) {
        best = cui;
        best_score = score;
        best_pre = pre;
      }
    }
    out[dim.id] = best;
  }
  return out;
}

DocumentFact build_fact(const iexml::AnnotatedDocument& doc, const taxonomy::Ontology& ontology,
                        std::span<const schema::Dimension> dimensions, double alpha) {
  DocumentFact fact;
  fact.doc_id = doc.doc_id;
  auto affinity = build_affinity(doc, ontology);
  const auto freq = iexml::concept_frequencies(doc);
  std::vector<double> y;
  y.reserve(affinity.concepts.size());
  for (const auto& c : affinity.concepts) y.push_back(static_cast<double>(freq.at(c)));
  y = normalize_frequencies(y);

  auto s = normalize_laplacian(affinity.m);
  auto ranked = rank_concepts(s, y, alpha);
  fact.flagged = ranked.flagged;
  for (std::size_t i = 0; i < affinity.concepts.size(); ++i) fact.rank[affinity.concepts[i]] = ranked.rank[i];
  fact.assignments = select_assignments(fact.rank, ontology, dimensions);
  return fact;
}

}  // namespace semcube::facts
