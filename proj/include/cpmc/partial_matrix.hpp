#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpmc {

// Index set E of specified positions of a partial symmetric matrix.
// Positions are 0-based with i <= j < n.
struct IndexSet {
  int n = 0;
  std::vector<std::pair<int, int>> pairs;  // sorted, unique

  IndexSet() = default;
  IndexSet(int order, std::vector<std::pair<int, int>> p) : n(order), pairs(std::move(p)) {
    if (n < 1) throw std::invalid_argument("IndexSet: order must be positive");
    std::sort(pairs.begin(), pairs.end());
    for (size_t k = 0; k < pairs.size(); ++k) {
      auto [i, j] = pairs[k];
      if (i < 0 || i > j || j >= n) throw std::invalid_argument("IndexSet: need 0 <= i <= j < n");
      if (k > 0 && pairs[k] == pairs[k - 1]) throw std::invalid_argument("IndexSet: duplicate pair");
    }
  }

  bool contains(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(pairs.begin(), pairs.end(), std::make_pair(i, j));
  }

  size_t size() const { return pairs.size(); }
};

// An E-matrix: index set plus the identifying vector a, one value per pair.
struct PartialSymMatrix {
  IndexSet index_set;
  std::vector<double> values;  // aligned with index_set.pairs

  PartialSymMatrix() = default;
  PartialSymMatrix(IndexSet E, std::vector<double> vals)
      : index_set(std::move(E)), values(std::move(vals)) {
    if (values.size() != index_set.pairs.size())
      throw std::invalid_argument("PartialSymMatrix: values must align with index set");
  }

  int order() const { return index_set.n; }

  std::optional<double> value(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(index_set.pairs.begin(), index_set.pairs.end(), std::make_pair(i, j));
    if (it == index_set.pairs.end() || *it != std::make_pair(i, j)) return std::nullopt;
    return values[it - index_set.pairs.begin()];
  }

  std::vector<int> given_diagonals() const {
    std::vector<int> d;
    for (size_t k = 0; k < index_set.pairs.size(); ++k)
      if (index_set.pairs[k].first == index_set.pairs[k].second) d.push_back(index_set.pairs[k].first);
    return d;
  }
};

// Atoms u_i in the simplex with positive weights rho_i; represents
// C = sum_i rho_i u_i u_i^T.
struct CpDecomposition {
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> weights;

  int length() const { return static_cast<int>(atoms.size()); }
};

inline Eigen::MatrixXd assemble_completion(const CpDecomposition& dec, int n) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < dec.length(); ++i) C += dec.weights[i] * dec.atoms[i] * dec.atoms[i].transpose();
  return C;
}

// Normalizes a nonnegative, nonzero vector into the simplex; the weight picks
// up the square of the coordinate sum so w * u u^T is unchanged.
inline void push_atom(CpDecomposition& dec, Eigen::VectorXd v, double weight) {
  const double s = v.sum();
  if (s <= 0.0) throw std::invalid_argument("push_atom: atom must have positive coordinate sum");
  dec.atoms.push_back(v / s);
  dec.weights.push_back(weight * s * s);
}

struct ReduceResult {
  bool completable = true;            // false: rejected outright
  std::string reason;                 // set when not completable
  PartialSymMatrix reduced;           // valid when completable
  std::vector<int> removed_indices;   // original row/column indices deleted
};

// Validation and zero-diagonal reduction. A negative given entry, or a zero
// diagonal with a positive given entry in its row, rules out any CP
// completion. A zero diagonal whose row has no positive given entries is
// deleted (completions re-embed with zero rows).
inline ReduceResult validate_and_reduce(const PartialSymMatrix& A) {
  ReduceResult res;
  for (double v : A.values) {
    if (v < 0.0) {
      res.completable = false;
      res.reason = "negative given entry";
      return res;
    }
  }

  const int n = A.order();
  std::vector<bool> removed(n, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t k = 0; k < A.index_set.pairs.size(); ++k) {
      auto [i, j] = A.index_set.pairs[k];
      if (i != j || removed[i] || A.values[k] != 0.0) continue;
      // zero diagonal at i: all given entries in row/col i must be zero
      for (size_t l = 0; l < A.index_set.pairs.size(); ++l) {
        auto [p, q] = A.index_set.pairs[l];
        if ((p == i || q == i) && A.values[l] > 0.0 && !removed[p] && !removed[q]) {
          res.completable = false;
          res.reason = "zero diagonal with positive entry in its row";
          return res;
        }
      }
      removed[i] = true;
      changed = true;
    }
  }

  std::vector<int> newpos(n, -1);
  int m = 0;
  for (int i = 0; i < n; ++i) {
    if (removed[i]) res.removed_indices.push_back(i);
    else newpos[i] = m++;
  }
  if (m == 0) throw std::invalid_argument("validate_and_reduce: every row removed");

  std::vector<std::pair<int, int>> pairs;
  std::vector<double> vals;
  for (size_t k = 0; k < A.index_set.pairs.size(); ++k) {
    auto [i, j] = A.index_set.pairs[k];
    if (removed[i] || removed[j]) continue;
    pairs.emplace_back(newpos[i], newpos[j]);
    vals.push_back(A.values[k]);
  }
  res.reduced = PartialSymMatrix(IndexSet(m, std::move(pairs)), std::move(vals));
  return res;
}

// Re-embed a completion of the reduced matrix into the original order,
// inserting zero rows/columns at the removed indices.
inline Eigen::MatrixXd embed_completion(const Eigen::MatrixXd& C, int n,
                                        const std::vector<int>& removed_indices) {
  std::set<int> rem(removed_indices.begin(), removed_indices.end());
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (!rem.count(i)) keep.push_back(i);
  for (int i = 0; i < static_cast<int>(keep.size()); ++i)
    for (int j = 0; j < static_cast<int>(keep.size()); ++j) F(keep[i], keep[j]) = C(i, j);
  return F;
}

inline Eigen::VectorXd embed_atom(const Eigen::VectorXd& u, int n,
                                  const std::vector<int>& removed_indices) {
  std::set<int> rem(removed_indices.begin(), removed_indices.end());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    if (!rem.count(i)) v(i) = u(k++);
  return v;
}

// The monomial span R[x]_E is full on the simplex iff every diagonal
// position is specified.
inline bool is_delta_full(const IndexSet& E) {
  for (int i = 0; i < E.n; ++i)
    if (!E.contains(i, i)) return false;
  return true;
}

// Restriction of A to the rows/columns whose diagonal entries are given,
// together with the index map back into the original ordering.
struct PrincipalSubmatrix {
  PartialSymMatrix matrix;
  std::vector<int> rows;  // original indices, ascending
};

inline PrincipalSubmatrix max_principal_submatrix(const PartialSymMatrix& A) {
  PrincipalSubmatrix out;
  out.rows = A.given_diagonals();
  if (out.rows.empty())
    throw std::invalid_argument("max_principal_submatrix: no given diagonal entry");
  std::vector<int> newpos(A.order(), -1);
  for (size_t k = 0; k < out.rows.size(); ++k) newpos[out.rows[k]] = static_cast<int>(k);
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> vals;
  for (size_t k = 0; k < A.index_set.pairs.size(); ++k) {
    auto [i, j] = A.index_set.pairs[k];
    if (newpos[i] < 0 || newpos[j] < 0) continue;
    pairs.emplace_back(newpos[i], newpos[j]);
    vals.push_back(A.values[k]);
  }
  out.matrix = PartialSymMatrix(IndexSet(static_cast<int>(out.rows.size()), std::move(pairs)),
                                std::move(vals));
  return out;
}

// Closed-form completion when no diagonal entry is given:
// C = sum_{(i,j) in E} A_ij (e_i + e_j)(e_i + e_j)^T.
inline CpDecomposition trivial_completion_all_diagonals_missing(const PartialSymMatrix& A) {
  const int n = A.order();
  CpDecomposition dec;
  for (size_t k = 0; k < A.index_set.pairs.size(); ++k) {
    auto [i, j] = A.index_set.pairs[k];
    if (i == j) throw std::invalid_argument("trivial completion: diagonal entry present");
    if (A.values[k] < 0.0) throw std::invalid_argument("trivial completion: negative entry");
    if (A.values[k] == 0.0) continue;  // zero terms contribute nothing
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v(i) = v(j) = 1.0;
    push_atom(dec, v, A.values[k]);
  }
  return dec;
}

// Closed-form completion when exactly one diagonal entry is given (and
// positive). Follows the two-branch rank-one construction keyed on the
// number of given entries in that row.
inline CpDecomposition trivial_completion_one_diagonal(const PartialSymMatrix& A) {
  const int n = A.order();
  auto diags = A.given_diagonals();
  if (diags.size() != 1)
    throw std::invalid_argument("trivial_completion_one_diagonal: need exactly one given diagonal");
  const int p = diags[0];
  const double app = *A.value(p, p);
  if (app <= 0.0) throw std::invalid_argument("trivial_completion_one_diagonal: diagonal must be positive");
  for (double v : A.values)
    if (v < 0.0) throw std::invalid_argument("trivial_completion_one_diagonal: negative entry");

  // given entries in row p (including (p,p) itself)
  std::vector<std::pair<int, double>> row_entries;  // (other index j, value)
  for (size_t k = 0; k < A.index_set.pairs.size(); ++k) {
    auto [i, j] = A.index_set.pairs[k];
    if (i == p && j != p) row_entries.emplace_back(j, A.values[k]);
    else if (j == p && i != p) row_entries.emplace_back(i, A.values[k]);
  }
  const int ntilde = static_cast<int>(row_entries.size()) + 1;

  CpDecomposition dec;
  if (ntilde == 1) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(p) = 1.0;
    push_atom(dec, e, app);
  } else {
    const double c1 = std::sqrt(app / (ntilde - 1));
    const double c2 = std::sqrt((ntilde - 1) / app);
    for (auto [j, apj] : row_entries) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      v(p) = c1;
      v(j) = c2 * apj;
      push_atom(dec, v, 1.0);
    }
  }
  for (size_t k = 0; k < A.index_set.pairs.size(); ++k) {
    auto [i, j] = A.index_set.pairs[k];
    if (i == p || j == p || i == j) continue;
    if (A.values[k] == 0.0) continue;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v(i) = v(j) = 1.0;
    push_atom(dec, v, A.values[k]);
  }
  return dec;
}

// Adds eps to every given diagonal entry (all of which lie in the maximum
// principal submatrix); other entries unchanged.
inline PartialSymMatrix perturb_given_diagonals(const PartialSymMatrix& A, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("perturb_given_diagonals: eps must be positive");
  PartialSymMatrix B = A;
  for (size_t k = 0; k < B.index_set.pairs.size(); ++k)
    if (B.index_set.pairs[k].first == B.index_set.pairs[k].second) B.values[k] += eps;
  return B;
}

// Explicit CP completion when exactly one diagonal entry is missing, built
// from a CP completion of the maximum principal submatrix. The missing
// diagonal is moved to the last position internally; missing off-diagonals
// in that row are assigned the value 1. The given diagonals of the result
// are shifted by eps relative to A.
inline Eigen::MatrixXd complete_one_missing_diagonal(const PartialSymMatrix& A,
                                                     const Eigen::MatrixXd& completion_of_submatrix,
                                                     double eps) {
  if (eps <= 0.0) throw std::invalid_argument("complete_one_missing_diagonal: eps must be positive");
  const int n = A.order();
  auto diags = A.given_diagonals();
  if (static_cast<int>(diags.size()) != n - 1)
    throw std::invalid_argument("complete_one_missing_diagonal: exactly one diagonal must be missing");
  int missing = -1;
  {
    std::vector<bool> has(n, false);
    for (int d : diags) has[d] = true;
    for (int i = 0; i < n; ++i)
      if (!has[i]) missing = i;
  }
  if (completion_of_submatrix.rows() != n - 1 || completion_of_submatrix.cols() != n - 1)
    throw std::invalid_argument("complete_one_missing_diagonal: submatrix completion has wrong order");

  // permutation: original index -> position with `missing` last
  std::vector<int> perm;  // perm[newpos] = original index
  for (int i = 0; i < n; ++i)
    if (i != missing) perm.push_back(i);
  perm.push_back(missing);

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  C.topLeftCorner(n - 1, n - 1) = completion_of_submatrix;
  C(n - 1, n - 1) = 1.0;
  const double se = std::sqrt(eps);
  for (int i = 0; i < n - 1; ++i) {
    auto a_in = A.value(perm[i], missing);
    const double coupling = a_in ? *a_in : 1.0;  // missing off-diagonals get 1
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v(i) = se;
    v(n - 1) = coupling / se;
    C += v * v.transpose();
  }

  // undo the permutation
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(perm[i], perm[j]) = C(i, j);
  return out;
}

// Recomputes C|_E vs a, atom simplex residuals, and the minimum weight.
struct DecompositionReport {
  double max_entry_error = 0.0;    // ||(sum rho u u^T)|_E - a||_inf
  double max_simplex_residual = 0.0;  // max over atoms of |sum(u)-1| and max(0,-u_i)
  double min_weight = 0.0;
  bool pass(double tol) const {
    return max_entry_error <= tol && max_simplex_residual <= tol && min_weight > 0.0;
  }
};

inline DecompositionReport verify_decomposition(const PartialSymMatrix& A,
                                                const CpDecomposition& dec) {
  DecompositionReport rep;
  const int n = A.order();
  Eigen::MatrixXd C = assemble_completion(dec, n);
  for (size_t k = 0; k < A.index_set.pairs.size(); ++k) {
    auto [i, j] = A.index_set.pairs[k];
    rep.max_entry_error = std::max(rep.max_entry_error, std::abs(C(i, j) - A.values[k]));
  }
  rep.min_weight = dec.weights.empty() ? 0.0 : *std::min_element(dec.weights.begin(), dec.weights.end());
  if (dec.weights.empty()) rep.min_weight = 1.0;  // empty decomposition: vacuously fine
  for (const auto& u : dec.atoms) {
    rep.max_simplex_residual = std::max(rep.max_simplex_residual, std::abs(u.sum() - 1.0));
    rep.max_simplex_residual = std::max(rep.max_simplex_residual, std::max(0.0, -u.minCoeff()));
  }
  return rep;
}

}  // namespace cpmc
