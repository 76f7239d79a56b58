#pragma once

#include <Eigen/Dense>
#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "moment.hpp"

namespace cpmc {

// Linear SDP over a free variable vector z:
//   min c'z  s.t.  (eq_rows) z = b,  blocks[j](z) >= 0 (PSD) for all j.
struct SdpProblem {
  int N = 0;                                            // variable dimension
  Eigen::VectorXd c;                                    // objective
  std::vector<std::vector<std::pair<int, double>>> eq_rows;
  Eigen::VectorXd b;                                    // equality right-hand sides
  std::vector<LinearMatrixStructure> blocks;
  // Bound on ||z||_inf over the feasible set, when one is known (used to make
  // certificate margins rigorous); 0 means unknown.
  double z_bound = 0.0;

  int m() const { return static_cast<int>(eq_rows.size()); }

  void validate() const {
    if (N <= 0) throw std::invalid_argument("SdpProblem: empty variable space");
    if (c.size() != N) throw std::invalid_argument("SdpProblem: objective length mismatch");
    if (b.size() != m()) throw std::invalid_argument("SdpProblem: rhs length mismatch");
    for (const auto& row : eq_rows)
      for (auto [v, co] : row)
        if (v < 0 || v >= N) throw std::invalid_argument("SdpProblem: equality column out of range");
    for (const auto& blk : blocks) {
      if (blk.nvars() != N) throw std::invalid_argument("SdpProblem: block variable space mismatch");
      for (int i = 0; i < blk.side(); ++i)
        for (int j = i; j < blk.side(); ++j)
          for (const auto& t : blk.entry(i, j))
            if (t.var < 0 || t.var >= N) throw std::invalid_argument("SdpProblem: block column out of range");
    }
  }

  // Self-describing text dump for cross-checking against external solvers.
  void dump(std::ostream& os) const {
    os.precision(17);
    os << "sdp-problem\n";
    os << "variables " << N << "\n";
    os << "objective";
    for (int i = 0; i < N; ++i)
      if (c(i) != 0.0) os << " " << i << ":" << c(i);
    os << "\n";
    os << "equalities " << m() << "\n";
    for (int r = 0; r < m(); ++r) {
      os << "eq " << r << " rhs " << b(r) << " :";
      for (auto [v, co] : eq_rows[r]) os << " " << v << ":" << co;
      os << "\n";
    }
    os << "blocks " << blocks.size() << "\n";
    for (size_t bi = 0; bi < blocks.size(); ++bi) {
      const auto& blk = blocks[bi];
      os << "block " << bi << " side " << blk.side() << "\n";
      for (int i = 0; i < blk.side(); ++i)
        for (int j = i; j < blk.side(); ++j)
          for (const auto& t : blk.entry(i, j))
            os << "entry " << i << " " << j << " " << t.var << " " << t.coeff << "\n";
    }
    os << "end\n";
  }
};

struct SdpSettings {
  double tol_feas = 1e-8;
  double tol_psd = 1e-8;
  double tol_cert = 1e-8;
  double tol_gap = 1e-7;
  int max_iter = 200;
  bool verbose = false;
};

// Farkas-type dual improving ray: Z >= 0 with M*(Z) = A'y and b'y < 0, which
// contradicts <blocks(z), Z> >= 0 for any z satisfying the equalities.
struct InfeasibilityCertificate {
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> Z;
  double margin = 0.0;
};

struct SdpOutcome {
  enum class Status { Optimal, Infeasible, NumericalFailure };
  Status status = Status::NumericalFailure;
  Eigen::VectorXd z;          // Optimal: the minimizer
  double objective = 0.0;
  double eq_residual = 0.0;   // ||A z - b||_inf at z
  double min_block_eig = 0.0; // min over blocks of lambda_min at z
  double rel_gap = 0.0;
  int iterations = 0;
  // Optimal: approximate dual solution (A'y + M*(Z) = c, Z >= 0, b'y <= obj)
  Eigen::VectorXd dual_y;
  std::vector<Eigen::MatrixXd> dual_Z;
  InfeasibilityCertificate certificate;
  std::string diagnostics;
};

namespace detail {

inline void apply_rows(const std::vector<std::vector<std::pair<int, double>>>& rows,
                       const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  for (size_t r = 0; r < rows.size(); ++r) {
    double s = 0.0;
    for (auto [v, co] : rows[r]) s += co * x(v);
    out(r) = s;
  }
}

inline void apply_rows_t(const std::vector<std::vector<std::pair<int, double>>>& rows,
                         const Eigen::VectorXd& y, Eigen::VectorXd& out) {
  out.setZero();
  for (size_t r = 0; r < rows.size(); ++r)
    for (auto [v, co] : rows[r]) out(v) += co * y(r);
}

inline bool cholesky_inplace(Eigen::MatrixXd& A, bool zero_upper = true) {
  const int n = static_cast<int>(A.rows());
  int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, A.data(), n);
  if (info != 0) return false;
  if (zero_upper) A.triangularView<Eigen::StrictlyUpper>().setZero();
  return true;
}

// Cholesky with an escalating diagonal ridge. dpotrf('L') leaves the strict
// upper triangle untouched, so on a failed attempt the lower triangle is
// restored from it and the saved diagonal -- no full-matrix backup copy,
// which matters when A is several GB. The strict upper is left intact; all
// downstream solves reference only the lower factor.
inline bool factor_with_ridge(Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  const Eigen::VectorXd diag = A.diagonal();
  const double base = 1e-14 * std::max(1.0, diag.sum() / n);
  double ridge = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    if (attempt > 0) {
      A.triangularView<Eigen::StrictlyLower>() =
          A.triangularView<Eigen::StrictlyUpper>().transpose();
      A.diagonal() = diag;
    }
    if (ridge > 0.0) A.diagonal().array() += ridge;
    if (cholesky_inplace(A, /*zero_upper=*/false)) return true;
    ridge = (ridge == 0.0) ? base : ridge * 100.0;
  }
  return false;
}

inline Eigen::VectorXd sym_eigenvalues(Eigen::MatrixXd A) {
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd w(n);
  int info = LAPACKE_dsyev(LAPACK_COL_MAJOR, 'N', 'L', n, A.data(), n, w.data());
  if (info != 0) throw std::runtime_error("dsyev failed");
  return w;
}

inline void sym_eigen(Eigen::MatrixXd& A, Eigen::VectorXd& w) {  // A <- eigenvectors
  const int n = static_cast<int>(A.rows());
  w.resize(n);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, A.data(), n, w.data());
  if (info != 0) throw std::runtime_error("dsyevd failed");
}

// max alpha with I + alpha * X >= 0 given sym X (in a scaled basis)
inline double step_to_boundary(const Eigen::MatrixXd& X) {
  const double lmin = sym_eigenvalues(X).minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (-lmin);
}

// Per-block state for the Nesterov-Todd scaling W (W Z W = S), computed via
// R = L_S V Sigma^{-1/2} where L_Z' L_S = U Sigma V'.
struct BlockScaling {
  Eigen::MatrixXd R, Rinv, W, Winv;
  Eigen::VectorXd lambda;  // scaled spectrum: R^{-1} S R^{-T} = R' Z R = diag(lambda)
};

inline bool nt_scaling(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Z, BlockScaling& out) {
  const int n = static_cast<int>(S.rows());
  Eigen::MatrixXd LS = S, LZ = Z;
  if (!cholesky_inplace(LS) || !cholesky_inplace(LZ)) return false;
  Eigen::MatrixXd Q = LZ.transpose() * LS;
  Eigen::MatrixXd U(n, n), Vt(n, n);
  Eigen::VectorXd sig(n);
  {
    int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'A', n, n, Q.data(), n, sig.data(), U.data(), n,
                              Vt.data(), n);
    if (info != 0) return false;
  }
  if (sig.minCoeff() <= 0.0) return false;
  Eigen::VectorXd si = sig.array().sqrt().inverse().matrix();
  out.R = LS * Vt.transpose() * si.asDiagonal();
  out.Rinv = si.asDiagonal() * U.transpose() * LZ.transpose();
  out.W = out.R * out.R.transpose();
  out.Winv = out.Rinv.transpose() * out.Rinv;
  out.lambda = sig;
  return true;
}

}  // namespace detail

// Independent re-check of an infeasibility certificate. The inequality: for
// any z with (eq) z = b and all blocks PSD,
//   0 <= sum_j <blocks_j(z), Z_j> = z' M*(Z) = z' A'y + z'(M*(Z) - A'y)
//      <= b'y + ||M*(Z) - A'y||_1 * ||z||_inf,
// so b'y < -residual * z_bound proves infeasibility. When no bound on z is
// known the residual is held to tol_cert directly after normalization.
inline bool verify_certificate(const SdpProblem& p, const InfeasibilityCertificate& cert,
                               double tol_cert = 1e-8, double tol_psd = 1e-8,
                               double* margin_out = nullptr) {
  if (cert.y.size() != p.m() || cert.Z.size() != p.blocks.size()) return false;
  double nrm2 = cert.y.squaredNorm();
  for (const auto& Z : cert.Z) nrm2 += Z.squaredNorm();
  const double nrm = std::sqrt(nrm2);
  if (!(nrm > 0.0)) return false;

  for (size_t j = 0; j < cert.Z.size(); ++j) {
    const double lmin = detail::sym_eigenvalues(cert.Z[j]).minCoeff();
    if (lmin < -tol_psd * std::max(1.0, cert.Z[j].lpNorm<Eigen::Infinity>())) return false;
  }

  Eigen::VectorXd res(p.N);
  detail::apply_rows_t(p.eq_rows, cert.y, res);
  for (size_t j = 0; j < p.blocks.size(); ++j) p.blocks[j].add_adjoint(cert.Z[j], res, -1.0);
  // res = A'y - M*(Z)
  const double by = p.b.dot(cert.y);

  double margin;
  if (p.z_bound > 0.0) {
    margin = (-by - res.lpNorm<1>() * p.z_bound) / nrm;
  } else {
    if (res.lpNorm<Eigen::Infinity>() / nrm > tol_cert) return false;
    margin = -by / nrm;
  }
  if (margin_out) *margin_out = margin;
  return margin >= tol_cert;
}

// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
// a Mehrotra predictor-corrector. Distinguishes optimality from primal
// infeasibility (Farkas certificate) by the tau/kappa split of the embedding.
inline SdpOutcome solve(const SdpProblem& prob, const SdpSettings& settings = {}) {
  using detail::BlockScaling;
  prob.validate();

  const int N = prob.N;
  const int m = prob.m();
  const int nb = static_cast<int>(prob.blocks.size());
  if (nb == 0) throw std::invalid_argument("solve: need at least one PSD block");

  SdpOutcome out;

  // internal objective scaling
  const double cscale = std::max(1.0, prob.c.lpNorm<Eigen::Infinity>());
  const Eigen::VectorXd c = prob.c / cscale;
  const Eigen::VectorXd& b = prob.b;
  const double bnorm = std::max(1.0, b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0);

  // per-block, per-variable sparse coefficient lists
  struct VarEntry {
    int p, q;
    double coeff;
  };
  std::vector<std::vector<std::vector<VarEntry>>> fvar(nb);  // [block][var] -> entries
  std::vector<std::vector<int>> bvars(nb);                   // vars touching each block
  for (int bi = 0; bi < nb; ++bi) {
    const auto& blk = prob.blocks[bi];
    fvar[bi].assign(N, {});
    for (int i = 0; i < blk.side(); ++i)
      for (int j = i; j < blk.side(); ++j)
        for (const auto& t : blk.entry(i, j)) fvar[bi][t.var].push_back({i, j, t.coeff});
    for (int v = 0; v < N; ++v)
      if (!fvar[bi][v].empty()) bvars[bi].push_back(v);
  }

  int total_dim = 0;
  for (const auto& blk : prob.blocks) total_dim += blk.side();

  // iterates
  Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::MatrixXd> S(nb), Z(nb);
  for (int bi = 0; bi < nb; ++bi) {
    S[bi] = Eigen::MatrixXd::Identity(prob.blocks[bi].side(), prob.blocks[bi].side());
    Z[bi] = S[bi];
  }
  double tau = 1.0, kappa = 1.0;

  Eigen::MatrixXd H(N, N), B, SC;
  // Chunk width for the Schur-complement solve workspace, capped near 256 MB.
  const int bchunk = std::max(1, std::min(m, static_cast<int>((32u << 20) / std::max(1, N))));
  if (m > 0) {
    B.resize(N, bchunk);
    SC.resize(m, m);
  }
  std::vector<BlockScaling> scal(nb);

  auto mstar = [&](const std::vector<Eigen::MatrixXd>& Zs) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(N);
    for (int bi = 0; bi < nb; ++bi) prob.blocks[bi].add_adjoint(Zs[bi], r);
    return r;
  };

  auto meval = [&](const Eigen::VectorXd& v, int bi) { return prob.blocks[bi].evaluate(v); };

  // K = [H A'; A 0] solve via Schur complement on the factored H (lower
  // Cholesky in H) and SC (lower Cholesky); one step of refinement is done
  // by the caller loop.
  auto ksolve = [&](const Eigen::VectorXd& f, const Eigen::VectorXd& g, Eigen::VectorXd& px,
                    Eigen::VectorXd& py) {
    Eigen::VectorXd t = f;
    cblas_dtrsv(CblasColMajor, CblasLower, CblasNoTrans, CblasNonUnit, N, H.data(), N, t.data(), 1);
    cblas_dtrsv(CblasColMajor, CblasLower, CblasTrans, CblasNonUnit, N, H.data(), N, t.data(), 1);
    if (m == 0) {
      px = t;
      py.resize(0);
      return;
    }
    Eigen::VectorXd rhs(m);
    detail::apply_rows(prob.eq_rows, t, rhs);
    rhs -= g;
    cblas_dtrsv(CblasColMajor, CblasLower, CblasNoTrans, CblasNonUnit, m, SC.data(), m, rhs.data(), 1);
    cblas_dtrsv(CblasColMajor, CblasLower, CblasTrans, CblasNonUnit, m, SC.data(), m, rhs.data(), 1);
    py = rhs;
    Eigen::VectorXd atq(N);
    detail::apply_rows_t(prob.eq_rows, py, atq);
    cblas_dtrsv(CblasColMajor, CblasLower, CblasNoTrans, CblasNonUnit, N, H.data(), N, atq.data(), 1);
    cblas_dtrsv(CblasColMajor, CblasLower, CblasTrans, CblasNonUnit, N, H.data(), N, atq.data(), 1);
    px = t - atq;
  };

  std::string fail_reason = "iteration limit reached";
  int slow_steps = 0;

  for (int iter = 0; iter < settings.max_iter; ++iter) {
    out.iterations = iter;

    // residuals
    Eigen::VectorXd rx(N);
    detail::apply_rows_t(prob.eq_rows, y, rx);
    rx -= mstar(Z);
    rx += c * tau;
    Eigen::VectorXd ry(m);
    if (m > 0) {
      detail::apply_rows(prob.eq_rows, x, ry);
      ry -= b * tau;
    }
    std::vector<Eigen::MatrixXd> rz(nb);
    for (int bi = 0; bi < nb; ++bi) rz[bi] = S[bi] - meval(x, bi);
    const double rtau = kappa + c.dot(x) + (m > 0 ? b.dot(y) : 0.0);

    double sz = tau * kappa;
    for (int bi = 0; bi < nb; ++bi) sz += (S[bi].array() * Z[bi].array()).sum();
    const double mu = sz / (total_dim + 1);

    // ---- convergence tests on the de-homogenized candidate
    {
      const Eigen::VectorXd xt = x / tau;
      double eqres = 0.0;
      if (m > 0) {
        Eigen::VectorXd ax(m);
        detail::apply_rows(prob.eq_rows, xt, ax);
        eqres = (ax - b).lpNorm<Eigen::Infinity>();
      }
      double lmin = std::numeric_limits<double>::infinity();
      for (int bi = 0; bi < nb; ++bi)
        lmin = std::min(lmin, detail::sym_eigenvalues(meval(xt, bi)).minCoeff());
      // relative dual residual: when the dual optimum is not attained the
      // iterates (y, Z) diverge and the residual is a cancellation of huge
      // terms, so it is measured against their magnitude
      Eigen::VectorXd aty(N);
      detail::apply_rows_t(prob.eq_rows, y, aty);
      const Eigen::VectorXd mz = mstar(Z);
      const Eigen::VectorXd dres_v = aty - mz + c * tau;
      const double dscale =
          std::max(tau, aty.lpNorm<Eigen::Infinity>() + mz.lpNorm<Eigen::Infinity>() +
                            tau * c.lpNorm<Eigen::Infinity>());
      const double dres = dres_v.lpNorm<Eigen::Infinity>() / dscale;
      const double pcost = c.dot(xt);
      const double gap = (sz - tau * kappa) / (tau * tau);
      const double relgap = gap / std::max(1.0, std::abs(pcost));

      if (settings.verbose) {
        std::cerr << "iter " << iter << " mu " << mu << " tau " << tau << " kappa " << kappa
                  << " eqres " << eqres << " lmin " << lmin << " dres " << dres << " relgap "
                  << relgap << "\n";
      }

      // The Optimal contract is primal: equality residual, block eigenvalues
      // and the gap. The relative dual residual is only a sanity guard (and
      // is loosened to sqrt(tol_feas)): when the relaxation has no interior
      // the dual optimum is not attained and (y, Z) diverge, leaving a
      // residual floor even at a numerically exact primal optimum.
      if (eqres <= settings.tol_feas * bnorm && lmin >= -settings.tol_psd &&
          dres <= std::sqrt(settings.tol_feas) && relgap <= settings.tol_gap) {
        out.status = SdpOutcome::Status::Optimal;
        out.z = xt;
        out.objective = pcost * cscale;
        out.eq_residual = eqres;
        out.min_block_eig = lmin;
        out.rel_gap = relgap;
        out.dual_y = (-cscale / tau) * y;  // undo the internal objective scaling
        out.dual_Z.resize(nb);
        for (int bi = 0; bi < nb; ++bi) out.dual_Z[bi] = (cscale / tau) * Z[bi];
        return out;
      }

      // primal infeasibility candidate
      const double by = (m > 0) ? b.dot(y) : 0.0;
      if (by < 0.0) {
        InfeasibilityCertificate cert;
        cert.y = y / (-by);
        cert.Z.resize(nb);
        for (int bi = 0; bi < nb; ++bi) cert.Z[bi] = Z[bi] / (-by);
        double margin = 0.0;
        if (verify_certificate(prob, cert, settings.tol_cert, settings.tol_psd, &margin)) {
          cert.margin = margin;
          out.status = SdpOutcome::Status::Infeasible;
          out.certificate = std::move(cert);
          out.rel_gap = relgap;
          return out;
        }
      }

      // dual infeasibility (primal unboundedness): reported as a failure;
      // a generic positive definite objective should not be unbounded.
      if (pcost < 0.0 && tau < 1e-6) {
        Eigen::VectorXd ax0(m);
        if (m > 0) detail::apply_rows(prob.eq_rows, x, ax0);
        const double axn = (m > 0) ? ax0.lpNorm<Eigen::Infinity>() : 0.0;
        double lmin0 = std::numeric_limits<double>::infinity();
        for (int bi = 0; bi < nb; ++bi)
          lmin0 = std::min(lmin0, detail::sym_eigenvalues(meval(x, bi)).minCoeff());
        const double scale = -c.dot(x);
        if (scale > 0 && axn <= 1e-8 * scale && lmin0 >= -1e-8 * scale) {
          fail_reason = "problem appears unbounded (dual infeasible)";
          break;
        }
      }
    }

    // ---- NT scaling
    bool scaled = true;
    for (int bi = 0; bi < nb; ++bi)
      if (!detail::nt_scaling(S[bi], Z[bi], scal[bi])) scaled = false;
    if (!scaled) {
      fail_reason = "scaling breakdown (iterates lost definiteness)";
      break;
    }

    // ---- H = M*(W^{-1} M(.) W^{-1}) per block, dense; with W Z W = S the
    // elimination of dZ through the scaled complementarity produces the
    // inverse scaling here.
    H.setZero();
    for (int bi = 0; bi < nb; ++bi) {
      const auto& blk = prob.blocks[bi];
      const int s = blk.side();
      const Eigen::MatrixXd& W = scal[bi].Winv;
      Eigen::MatrixXd tmp(s, s), T(s, s);
      std::vector<int> rows;
      std::vector<char> mark(s, 0);
      for (int vj : bvars[bi]) {
        rows.clear();
        std::fill(mark.begin(), mark.end(), 0);
        for (const auto& e : fvar[bi][vj]) {
          if (!mark[e.p]) { mark[e.p] = 1; rows.push_back(e.p); }
          if (e.p != e.q && !mark[e.q]) { mark[e.q] = 1; rows.push_back(e.q); }
        }
        for (int r : rows) tmp.row(r).setZero();
        for (const auto& e : fvar[bi][vj]) {
          tmp.row(e.p) += e.coeff * W.row(e.q);
          if (e.p != e.q) tmp.row(e.q) += e.coeff * W.row(e.p);
        }
        const int nr = static_cast<int>(rows.size());
        Eigen::MatrixXd Wl(s, nr), tc(nr, s);
        for (int r = 0; r < nr; ++r) {
          Wl.col(r) = W.col(rows[r]);
          tc.row(r) = tmp.row(rows[r]);
        }
        T.noalias() = Wl * tc;
        for (int i = 0; i < s; ++i) {
          for (int j = i; j < s; ++j) {
            const auto& terms = blk.entry(i, j);
            if (terms.empty()) continue;
            const double val = (i == j) ? T(i, i) : T(i, j) + T(j, i);
            for (const auto& t : terms) H(t.var, vj) += t.coeff * val;
          }
        }
      }
    }

    // ---- factor K
    if (!detail::factor_with_ridge(H)) {
      fail_reason = "KKT factorization failed";
      break;
    }
    if (m > 0) {
      // SC = A H^{-1} A', built one column chunk at a time so the N x m
      // solve workspace is never materialized in full: for each chunk solve
      // H C = A_chunk' (two triangular solves against the factored H) and
      // apply the sparse rows of A on the left. Only the lower triangle is
      // filled; the factorization reads nothing else.
      for (int r0 = 0; r0 < m; r0 += bchunk) {
        const int mc = std::min(bchunk, m - r0);
        auto Bc = B.leftCols(mc);
        Bc.setZero();
        for (int c = 0; c < mc; ++c)
          for (auto [v, co] : prob.eq_rows[r0 + c]) Bc(v, c) = co;
        cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasNoTrans, CblasNonUnit, N, mc, 1.0,
                    H.data(), N, B.data(), N);
        cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasTrans, CblasNonUnit, N, mc, 1.0,
                    H.data(), N, B.data(), N);
        for (int r = r0; r < m; ++r) {
          auto dst = SC.row(r).segment(r0, mc);
          dst.setZero();
          for (auto [v, co] : prob.eq_rows[r]) dst += co * Bc.row(v);
        }
      }
      if (!detail::factor_with_ridge(SC)) {
        fail_reason = "Schur complement factorization failed";
        break;
      }
    }

    // direction solver for a given (gamma, corrector data)
    std::vector<Eigen::MatrixXd> dst(nb), dzt(nb);  // scaled-space directions
    Eigen::VectorXd dx(N), dy(m);
    double dtau = 0.0, dkappa = 0.0;

    auto compute_direction = [&](double gamma, bool correct,
                                 const std::vector<Eigen::MatrixXd>& dst_a,
                                 const std::vector<Eigen::MatrixXd>& dzt_a, double dtau_a,
                                 double dkappa_a) {
      const double damp = 1.0 - gamma;
      // D per block in the scaled space
      std::vector<Eigen::MatrixXd> D(nb);
      for (int bi = 0; bi < nb; ++bi) {
        const int s = prob.blocks[bi].side();
        const Eigen::VectorXd& lam = scal[bi].lambda;
        D[bi].resize(s, s);
        Eigen::MatrixXd corr;
        if (correct) corr = 0.5 * (dst_a[bi] * dzt_a[bi] + dzt_a[bi] * dst_a[bi]);
        for (int i = 0; i < s; ++i) {
          for (int j = 0; j < s; ++j) {
            double v = (i == j) ? gamma * mu - lam(i) * lam(i) : 0.0;
            if (correct) v -= corr(i, j);
            D[bi](i, j) = 2.0 * v / (lam(i) + lam(j));
          }
        }
      }

      // u = -:(1-g) rx + M*( R^{-T} D R^{-1} - W^{-1} r3 W^{-1} ), r3 = -(1-g) rz
      Eigen::VectorXd u = -damp * rx;
      for (int bi = 0; bi < nb; ++bi) {
        const auto& sc = scal[bi];
        Eigen::MatrixXd inner = sc.Rinv.transpose() * D[bi] * sc.Rinv;
        Eigen::MatrixXd r3 = -damp * rz[bi];
        inner -= sc.Rinv.transpose() * (sc.Rinv * r3 * sc.Rinv.transpose()) * sc.Rinv;
        prob.blocks[bi].add_adjoint(inner, u);
      }
      const Eigen::VectorXd r2 = -damp * ry;
      const double corr_tk = correct ? dtau_a * dkappa_a : 0.0;
      const double v_rhs = -damp * rtau - (gamma * mu - tau * kappa - corr_tk) / tau;

      Eigen::VectorXd dx1(N), dy1(m), dx2(N), dy2(m);
      ksolve(u, r2, dx1, dy1);
      ksolve(-c, b, dx2, dy2);
      const double denom = c.dot(dx2) + (m > 0 ? b.dot(dy2) : 0.0) - kappa / tau;
      double num = v_rhs - c.dot(dx1) - (m > 0 ? b.dot(dy1) : 0.0);
      dtau = (std::abs(denom) > 1e-300) ? num / denom : 0.0;
      dx = dx1 + dtau * dx2;
      if (m > 0) dy = dy1 + dtau * dy2;

      for (int bi = 0; bi < nb; ++bi) {
        const auto& sc = scal[bi];
        // cone row: -M(dx) + dS = -(1-g) rz  =>  dS = M(dx) - (1-g) rz
        Eigen::MatrixXd dS = meval(dx, bi) - damp * rz[bi];
        dst[bi] = sc.Rinv * dS * sc.Rinv.transpose();
        dst[bi] = 0.5 * (dst[bi] + dst[bi].transpose());
        dzt[bi] = D[bi] - dst[bi];
      }
      dkappa = (gamma * mu - tau * kappa - corr_tk) / tau - (kappa / tau) * dtau;
    };

    auto max_step = [&](const std::vector<Eigen::MatrixXd>& dst_c,
                        const std::vector<Eigen::MatrixXd>& dzt_c, double dtau_c, double dkappa_c) {
      double a = std::numeric_limits<double>::infinity();
      for (int bi = 0; bi < nb; ++bi) {
        const Eigen::VectorXd lam_is = scal[bi].lambda.array().rsqrt().matrix();
        Eigen::MatrixXd Xs = lam_is.asDiagonal() * dst_c[bi] * lam_is.asDiagonal();
        Eigen::MatrixXd Xz = lam_is.asDiagonal() * dzt_c[bi] * lam_is.asDiagonal();
        a = std::min(a, detail::step_to_boundary(Xs));
        a = std::min(a, detail::step_to_boundary(Xz));
      }
      if (dtau_c < 0.0) a = std::min(a, tau / (-dtau_c));
      if (dkappa_c < 0.0) a = std::min(a, kappa / (-dkappa_c));
      return a;
    };

    // predictor
    compute_direction(0.0, false, {}, {}, 0.0, 0.0);
    std::vector<Eigen::MatrixXd> dst_a = dst, dzt_a = dzt;
    const double dtau_a = dtau, dkappa_a = dkappa;
    double alpha_aff = std::min(1.0, max_step(dst_a, dzt_a, dtau_a, dkappa_a));

    // mu after the affine step, evaluated in the scaled space
    double sz_aff = (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkappa_a);
    for (int bi = 0; bi < nb; ++bi) {
      const Eigen::VectorXd& lam = scal[bi].lambda;
      Eigen::MatrixXd st = Eigen::MatrixXd(lam.asDiagonal()) + alpha_aff * dst_a[bi];
      Eigen::MatrixXd zt = Eigen::MatrixXd(lam.asDiagonal()) + alpha_aff * dzt_a[bi];
      sz_aff += (st.array() * zt.array()).sum();
    }
    const double mu_aff = std::max(sz_aff, 0.0) / (total_dim + 1);
    double sigma = std::pow(mu_aff / mu, 3.0);
    sigma = std::clamp(sigma, 1e-8, 1.0 - 1e-8);

    // corrector
    compute_direction(sigma, true, dst_a, dzt_a, dtau_a, dkappa_a);
    double alpha = std::min(1.0, 0.99 * max_step(dst, dzt, dtau, dkappa));

    if (!std::isfinite(alpha) || alpha <= 0.0) {
      fail_reason = "no admissible step";
      break;
    }

    // update
    x += alpha * dx;
    if (m > 0) y += alpha * dy;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    for (int bi = 0; bi < nb; ++bi) {
      const auto& sc = scal[bi];
      S[bi] += alpha * (sc.R * dst[bi] * sc.R.transpose());
      Z[bi] += alpha * (sc.Rinv.transpose() * dzt[bi] * sc.Rinv);
      S[bi] = 0.5 * (S[bi] + S[bi].transpose());
      Z[bi] = 0.5 * (Z[bi] + Z[bi].transpose());
    }

    if (tau < 1e-14 || kappa < 0.0) {
      fail_reason = "embedding degenerate (tau collapsed without certificate)";
      break;
    }
    slow_steps = (alpha < 1e-4) ? slow_steps + 1 : 0;
    if (slow_steps >= 8) {
      fail_reason = "progress stalled";
      break;
    }
  }

  // best-effort diagnostics for the failure outcome
  out.status = SdpOutcome::Status::NumericalFailure;
  out.z = x / std::max(tau, 1e-300);
  out.objective = prob.c.dot(out.z);
  std::ostringstream oss;
  oss << fail_reason << " (iter " << out.iterations << ", tau " << tau << ", kappa " << kappa << ")";
  out.diagnostics = oss.str();
  return out;
}

}  // namespace cpmc
