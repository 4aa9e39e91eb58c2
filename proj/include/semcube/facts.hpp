#pragma once

// Per-document normalization: a concept affinity matrix built from sentence
// co-occurrence and taxonomy, smoothed by graph regularization
//
//   R = (1 - alpha) * (I - alpha * S)^-1 * Y,   S = D^-1/2 * M * D^-1/2
//
// and reduced to one top-ranked concept per dimension.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semcube/iexml.hpp"
#include "semcube/schema.hpp"
#include "semcube/taxonomy.hpp"

namespace semcube::facts {

inline constexpr double kDefaultAlpha = 0.9;

// Row-major square matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  DenseMatrix(std::size_t n, std::initializer_list<double> values);

  static DenseMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * n_, n_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

  std::vector<double> multiply(std::span<const double> x) const;
  bool symmetric() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct AffinityMatrix {
  std::vector<std::string> concepts;  // distinct known cuis, ascending id
  DenseMatrix m;
  std::size_t dropped = 0;            // distinct cuis absent from the ontology
};

using RankVector = std::map<std::string, double>;

struct DocumentFact {
  std::string doc_id;
  std::map<std::string, std::optional<std::string>> assignments;  // dimension id -> concept
  RankVector rank;
  bool flagged = false;  // closed form rejected, iterative fallback used

  friend bool operator==(const DocumentFact&, const DocumentFact&) = default;
};

// M_ii = 1; 1 both ways for sentence co-occurrence; M_ij = 0.5 and
// M_ji = 1 when c_i <= c_j; 0 otherwise. Overlapping rules take the max.
AffinityMatrix build_affinity(const iexml::AnnotatedDocument& doc, const taxonomy::Ontology& ontology);

// D^-1/2 M D^-1/2 with D the row sums of M.
DenseMatrix normalize_laplacian(const DenseMatrix& m);

// Frequencies divided by their sum; all-zero input is returned unchanged.
std::vector<double> normalize_frequencies(std::span<const double> y);

// Solves a x = b by Gaussian elimination with partial pivoting.
// Throws Error(degenerate) when a pivot vanishes.
std::vector<double> solve_dense(DenseMatrix a, std::vector<double> b);

// F <- alpha S F + (1 - alpha) Y, starting from F = Y.
std::vector<double> propagate(const DenseMatrix& s, std::span<const double> y, double alpha,
                              std::size_t iterations);

struct RankResult {
  std::vector<double> rank;
  bool flagged = false;
};

// Closed form by dense solve. If (I - alpha S) is singular or the residual
// exceeds 1e-8, falls back to 10000 propagation steps and flags the result.
RankResult rank_concepts(const DenseMatrix& s, std::span<const double> y, double alpha = kDefaultAlpha);

// Picks, for every dimension, the document concept of that dimension with
// the highest rank; near-equal scores go to the smaller pre_index.
std::map<std::string, std::optional<std::string>> select_assignments(const RankVector& rank,
                                                                     const taxonomy::Ontology& ontology,
                                                                     std::span<const schema::Dimension> dimensions);

// Full pipeline for one document.
DocumentFact build_fact(const iexml::AnnotatedDocument& doc, const taxonomy::Ontology& ontology,
                        std::span<const schema::Dimension> dimensions, double alpha = kDefaultAlpha);

}  // namespace semcube::facts
