#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "multi_index.hpp"
#include "partial_matrix.hpp"

namespace cpmc {

// Sparse polynomial: multi-index -> coefficient, no explicit zeros.
struct Polynomial {
  int n = 0;
  std::map<MultiIndex, double> coeffs;

  Polynomial() = default;
  explicit Polynomial(int nvars) : n(nvars) {}

  void add_term(const MultiIndex& a, double c) {
    if (c == 0.0) return;
    auto [it, fresh] = coeffs.emplace(a, c);
    if (!fresh) {
      it->second += c;
      if (it->second == 0.0) coeffs.erase(it);
    }
  }

  int deg() const {
    int d = 0;
    for (const auto& [a, c] : coeffs) d = std::max(d, degree(a));
    return d;
  }
};

inline Polynomial poly_one(int n) {
  Polynomial p(n);
  p.add_term(MultiIndex(n, 0), 1.0);
  return p;
}

inline Polynomial poly_var(int n, int i) {
  Polynomial p(n);
  MultiIndex a(n, 0);
  a[i] = 1;
  p.add_term(a, 1.0);
  return p;
}

// h(x) = x_1 + ... + x_n - 1, the simplex hyperplane.
inline Polynomial poly_simplex_plane(int n) {
  Polynomial p(n);
  for (int i = 0; i < n; ++i) {
    MultiIndex a(n, 0);
    a[i] = 1;
    p.add_term(a, 1.0);
  }
  p.add_term(MultiIndex(n, 0), -1.0);
  return p;
}

// 1 - ||x||^2, the enclosing unit ball.
inline Polynomial poly_unit_ball(int n) {
  Polynomial p(n);
  p.add_term(MultiIndex(n, 0), 1.0);
  for (int i = 0; i < n; ++i) {
    MultiIndex a(n, 0);
    a[i] = 2;
    p.add_term(a, -1.0);
  }
  return p;
}

// Truncated moment sequence: values aligned with a full monomial basis.
struct TruncatedMomentSequence {
  MonomialBasis basis;
  Eigen::VectorXd values;

  TruncatedMomentSequence() = default;
  TruncatedMomentSequence(MonomialBasis b, Eigen::VectorXd v)
      : basis(std::move(b)), values(std::move(v)) {
    if (values.size() != basis.size())
      throw std::invalid_argument("TruncatedMomentSequence: length mismatch");
  }

  // z|_d: head slice, since graded order lists low degrees first.
  TruncatedMomentSequence truncate(int d) const {
    if (d > basis.max_degree()) throw std::invalid_argument("truncate: degree exceeds basis");
    MonomialBasis b(basis.n(), d);
    return TruncatedMomentSequence(b, values.head(b.size()));
  }
};

// Riesz functional: <p, z> = sum_a p_a z_a.
inline double riesz_apply(const TruncatedMomentSequence& z, const Polynomial& p) {
  double s = 0.0;
  for (const auto& [a, c] : p.coeffs) s += c * z.values(z.basis.position(a));
  return s;
}

// The degree-2 multi-index set of E: alpha = e_i + e_j for (i,j) in E.
struct SupportSet {
  std::vector<MultiIndex> members;            // aligned with pairs
  std::vector<std::pair<int, int>> pairs;
};

inline SupportSet support_set(const IndexSet& E) {
  SupportSet s;
  for (auto [i, j] : E.pairs) {
    MultiIndex a(E.n, 0);
    a[i] += 1;
    a[j] += 1;
    s.members.push_back(a);
    s.pairs.emplace_back(i, j);
  }
  return s;
}

// A symmetric matrix whose entries are sparse linear functionals of a moment
// vector z; realizes the moment matrix M_k(z) and localizing matrices
// L_q^(k)(z). Entries are stored for i <= j only.
class LinearMatrixStructure {
 public:
  struct Term {
    int var;
    double coeff;
  };

  LinearMatrixStructure() = default;
  LinearMatrixStructure(int side, int nvars) : side_(side), nvars_(nvars), entries_(idx(side - 1, side - 1) + 1) {}

  int side() const { return side_; }
  int nvars() const { return nvars_; }

  std::vector<Term>& entry(int i, int j) { return entries_[idx(i, j)]; }
  const std::vector<Term>& entry(int i, int j) const { return entries_[idx(i, j)]; }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd M(side_, side_);
    for (int i = 0; i < side_; ++i) {
      for (int j = i; j < side_; ++j) {
        double v = 0.0;
        for (const auto& t : entries_[idx(i, j)]) v += t.coeff * z(t.var);
        M(i, j) = M(j, i) = v;
      }
    }
    return M;
  }

  // adjoint: out_var += sum over entries referencing var of coeff * Z(i,j),
  // counting off-diagonal entries twice (Z symmetric).
  void add_adjoint(const Eigen::MatrixXd& Z, Eigen::VectorXd& out, double scale = 1.0) const {
    for (int i = 0; i < side_; ++i) {
      for (int j = i; j < side_; ++j) {
        const double w = (i == j ? 1.0 : 2.0) * scale * Z(i, j);
        for (const auto& t : entries_[idx(i, j)]) out(t.var) += t.coeff * w;
      }
    }
  }

 private:
  static size_t idx(int i, int j) {
    // i <= j; column-major packed upper triangle
    return static_cast<size_t>(j) * (j + 1) / 2 + i;
  }

  int side_ = 0, nvars_ = 0;
  std::vector<std::vector<Term>> entries_;
};

// k-th localizing matrix structure of q over z in R^{N^n_{2k}}:
// entry (beta, gamma) = sum_theta q_theta z_{beta+gamma+theta}, with beta,
// gamma ranging over N^n_{k - ceil(deg q / 2)}. q = 1 yields M_k(z).
inline LinearMatrixStructure localizing_structure(const Polynomial& q, int n, int k) {
  const int dq = q.deg();
  const int half = (dq + 1) / 2;
  if (k < half) throw std::invalid_argument("localizing_structure: k < ceil(deg(q)/2)");
  MonomialBasis rows(n, k - half);
  MonomialBasis full(n, 2 * k);
  LinearMatrixStructure L(rows.size(), full.size());
  MultiIndex sum(n);
  for (int i = 0; i < rows.size(); ++i) {
    for (int j = i; j < rows.size(); ++j) {
      auto& terms = L.entry(i, j);
      for (const auto& [theta, c] : q.coeffs) {
        for (int t = 0; t < n; ++t) sum[t] = rows.at(i)[t] + rows.at(j)[t] + theta[t];
        terms.push_back({full.position(sum), c});
      }
    }
  }
  return L;
}

inline LinearMatrixStructure moment_structure(int n, int k) {
  return localizing_structure(poly_one(n), n, k);
}

// Moments of the finitely atomic measure sum_i rho_i * delta(u_i).
inline TruncatedMomentSequence atomic_tms(const std::vector<Eigen::VectorXd>& atoms,
                                          const std::vector<double>& weights, int n, int deg) {
  if (atoms.size() != weights.size()) throw std::invalid_argument("atomic_tms: length mismatch");
  MonomialBasis b(n, deg);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(b.size());
  for (size_t m = 0; m < atoms.size(); ++m) {
    for (int i = 0; i < b.size(); ++i) {
      double mono = 1.0;
      const MultiIndex& a = b.at(i);
      for (int t = 0; t < n; ++t) mono *= std::pow(atoms[m](t), a[t]);
      z(i) += weights[m] * mono;
    }
  }
  return TruncatedMomentSequence(std::move(b), std::move(z));
}

inline TruncatedMomentSequence atomic_tms(const CpDecomposition& dec, int n, int deg) {
  return atomic_tms(dec.atoms, dec.weights, n, deg);
}

// Seeded Gaussian source. Uses an explicit Box-Muller transform so runs are
// reproducible across standard library implementations.
class GaussianRng {
 public:
  explicit GaussianRng(uint64_t seed) : eng_(seed) {}

  double uniform() {  // (0, 1)
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = uniform(), v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * M_PI * v);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * v);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// R = [x]_{d/2}^T (J^T J) [x]_{d/2} expanded into coefficients.
inline Polynomial sos_objective_from_factor(int n, int d, const Eigen::MatrixXd& J) {
  if (d % 2 != 0 || d <= 2) throw std::invalid_argument("sos objective: d must be even and > 2");
  MonomialBasis half(n, d / 2);
  if (J.rows() != half.size() || J.cols() != half.size())
    throw std::invalid_argument("sos objective: J must be square of basis size");
  Eigen::MatrixXd G = J.transpose() * J;
  Polynomial R(n);
  MultiIndex sum(n);
  for (int i = 0; i < half.size(); ++i) {
    for (int j = 0; j < half.size(); ++j) {
      for (int t = 0; t < n; ++t) sum[t] = half.at(i)[t] + half.at(j)[t];
      R.add_term(sum, G(i, j));
    }
  }
  return R;
}

// Generic positive definite objective: J has i.i.d. standard normal entries,
// filled row by row from the seeded generator.
inline Polynomial random_sos_objective(int n, int d, GaussianRng& rng) {
  MonomialBasis half(n, d / 2);
  Eigen::MatrixXd J(half.size(), half.size());
  for (int i = 0; i < half.size(); ++i)
    for (int j = 0; j < half.size(); ++j) J(i, j) = rng.normal();
  return sos_objective_from_factor(n, d, J);
}

inline Polynomial random_sos_objective(int n, int d, uint64_t seed) {
  GaussianRng rng(seed);
  return random_sos_objective(n, d, rng);
}

}  // namespace cpmc
