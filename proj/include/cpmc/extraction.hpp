#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "moment.hpp"
#include "partial_matrix.hpp"
#include "sdp.hpp"

namespace cpmc {

struct ExtractionFailed : std::runtime_error {
  explicit ExtractionFailed(const std::string& what) : std::runtime_error(what) {}
};

// A truncated moment sequence of degree 2t whose moment matrices satisfy the
// rank condition rank M_{t-1} = rank M_t = r, hence carry a unique r-atomic
// representing measure on the simplex.
struct FlatWitness {
  TruncatedMomentSequence w;  // degree exactly 2t
  int t = 0;
  int r = 0;
  double rank_tol = 1e-6;
};

// Recover the r-atomic measure from a flat witness: truncated factorization
// M_t = VV', column-echelon monomial basis, shift operators, joint
// diagonalization through the Schur form of a random convex combination,
// then weights by least squares on the degree <= 2 moments.
inline CpDecomposition extract_atoms(const FlatWitness& witness, GaussianRng& rng) {
  const int n = witness.w.basis.n();
  const int t = witness.t;
  const int r = witness.r;
  if (witness.w.basis.max_degree() != 2 * t)
    throw std::invalid_argument("extract_atoms: witness degree mismatch");
  if (r <= 0) throw std::invalid_argument("extract_atoms: empty rank");

  const MonomialBasis basis_t(n, t);
  const int st = basis_t.size();
  Eigen::MatrixXd M = moment_structure(n, t).evaluate(witness.w.values);

  // (1) factor M ~ VV' from the r dominant eigenpairs
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw ExtractionFailed("eigendecomposition failed");
  Eigen::MatrixXd V(st, r);
  for (int j = 0; j < r; ++j) {
    const double lam = es.eigenvalues()(st - 1 - j);  // ascending order
    if (lam <= 0.0) throw ExtractionFailed("dominant eigenvalue not positive");
    V.col(j) = std::sqrt(lam) * es.eigenvectors().col(st - 1 - j);
  }

  // (2) column-echelon reduction; pivot rows scanned in graded order so the
  // chosen monomial basis has the lowest possible degrees
  const double piv_tol = 1e-8 * std::max(1.0, V.cwiseAbs().maxCoeff());
  std::vector<int> pivot_rows;
  int col = 0;
  for (int row = 0; row < st && col < r; ++row) {
    int best = -1;
    double best_abs = piv_tol;
    for (int j = col; j < r; ++j) {
      if (std::abs(V(row, j)) > best_abs) {
        best_abs = std::abs(V(row, j));
        best = j;
      }
    }
    if (best < 0) continue;
    V.col(col).swap(V.col(best));
    V.col(col) /= V(row, col);
    for (int j = 0; j < r; ++j) {
      if (j == col) continue;
      V.col(j) -= V(row, j) * V.col(col);
    }
    pivot_rows.push_back(row);
    ++col;
  }
  if (col < r) throw ExtractionFailed("rank-deficient factor (no monomial basis of size r)");

  // (3) shift operators N_j on the pivot basis: row i of N_j is the
  // representation of x_j * beta_i in echelon coordinates
  std::vector<Eigen::MatrixXd> Nx(n);
  for (int j = 0; j < n; ++j) Nx[j].resize(r, r);
  for (int i = 0; i < r; ++i) {
    MultiIndex beta = basis_t.at(pivot_rows[i]);
    for (int j = 0; j < n; ++j) {
      MultiIndex shifted = beta;
      shifted[j] += 1;
      if (!basis_t.contains(shifted))
        throw ExtractionFailed("pivot monomial of top degree (witness not usably flat)");
      Nx[j].row(i) = V.row(basis_t.position(shifted));
    }
  }

  // (4)+(5) random convex combination, Schur vectors, atoms; retry the
  // combination if the Schur form shows complex eigenvalue pairs
  std::vector<Eigen::VectorXd> atoms;
  const int max_tries = 5;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Eigen::VectorXd cvec(n);
    for (int j = 0; j < n; ++j) cvec(j) = rng.uniform();
    cvec /= cvec.sum();
    Eigen::MatrixXd Nmix = Eigen::MatrixXd::Zero(r, r);
    for (int j = 0; j < n; ++j) Nmix += cvec(j) * Nx[j];

    Eigen::RealSchur<Eigen::MatrixXd> schur(Nmix);
    if (schur.info() != Eigen::Success) continue;
    const Eigen::MatrixXd& T = schur.matrixT();
    const Eigen::MatrixXd& Q = schur.matrixU();
    const double scale = std::max(1.0, T.cwiseAbs().maxCoeff());
    bool real_spectrum = true;
    for (int i = 0; i + 1 < r; ++i)
      if (std::abs(T(i + 1, i)) > 1e-9 * scale) real_spectrum = false;
    if (!real_spectrum) continue;

    atoms.clear();
    for (int i = 0; i < r; ++i) {
      Eigen::VectorXd u(n);
      for (int j = 0; j < n; ++j) u(j) = Q.col(i).dot(Nx[j] * Q.col(i));
      atoms.push_back(u);
    }
    break;
  }
  if (atoms.empty()) throw ExtractionFailed("no real joint spectrum found");

  // (6) clamp into the simplex
  const double clamp_tol = 1e-6;
  for (auto& u : atoms) {
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
      if (u(j) < 0.0) {
        worst = std::max(worst, -u(j));
        u(j) = 0.0;
      }
    }
    const double s = u.sum();
    worst = std::max(worst, std::abs(s - 1.0));
    if (worst > clamp_tol) throw ExtractionFailed("atom too far outside the simplex");
    if (s <= 0.0) throw ExtractionFailed("degenerate atom");
    u /= s;
  }

  // weights: least squares against the moments of degree <= 2
  const MonomialBasis basis2(n, 2);
  Eigen::MatrixXd Phi(basis2.size(), r);
  Eigen::VectorXd rhs(basis2.size());
  for (int a = 0; a < basis2.size(); ++a) {
    const MultiIndex& alpha = basis2.at(a);
    rhs(a) = witness.w.values(witness.w.basis.position(alpha));
    for (int i = 0; i < r; ++i) {
      double v = 1.0;
      for (int j = 0; j < n; ++j)
        for (int rep = 0; rep < alpha[j]; ++rep) v *= atoms[i](j);
      Phi(a, i) = v;
    }
  }
  Eigen::VectorXd rho = Phi.colPivHouseholderQr().solve(rhs);
  for (int i = 0; i < r; ++i)
    if (rho(i) <= 1e-9) throw ExtractionFailed("nonpositive weight in least-squares solve");

  CpDecomposition dec;
  dec.atoms = atoms;
  dec.weights.assign(rho.data(), rho.data() + r);

  // full-degree moment reproduction check
  TruncatedMomentSequence recon = atomic_tms(dec.atoms, dec.weights, n, 2 * t);
  const double mismatch = (recon.values - witness.w.values).lpNorm<Eigen::Infinity>();
  if (mismatch > 1e-6) throw ExtractionFailed("moment mismatch after extraction");
  return dec;
}

}  // namespace cpmc
