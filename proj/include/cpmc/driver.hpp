#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "extraction.hpp"
#include "moment.hpp"
#include "partial_matrix.hpp"
#include "sdp.hpp"

namespace cpmc {

enum class RunMode { Auto, SdpOnly, FastOnly };

struct DriverSettings {
  int d = 4;       // degree of the random convex objective (even, > 2)
  int k_max = 6;   // highest relaxation order tried
  double rank_tol = 1e-6;
  bool rank_tol_relative = false;
  std::uint64_t seed = 1;
  int retries = 2;  // fresh objective resamples after a numerical failure
  RunMode mode = RunMode::Auto;
  bool submatrix_precheck = true;
  double tol_feas = 1e-8;
  double tol_psd = 1e-8;
  double tol_cert = 1e-8;
  double tol_gap = 1e-7;
  int max_iter = 200;
  bool verbose = false;

  int k_start() const { return d / 2; }
  void validate() const {
    if (d <= 2 || d % 2 != 0) throw std::invalid_argument("DriverSettings: d must be even and > 2");
    if (k_start() > k_max) throw std::invalid_argument("DriverSettings: d/2 exceeds k_max");
  }
  SdpSettings sdp_settings() const {
    SdpSettings s;
    s.tol_feas = tol_feas;
    s.tol_psd = tol_psd;
    s.tol_cert = tol_cert;
    s.tol_gap = tol_gap;
    s.max_iter = max_iter;
    s.verbose = verbose;
    return s;
  }
};

struct FlatCheck {
  int t = 0;
  int rank_prev = 0;
  int rank_cur = 0;
  bool flat = false;
  std::string note;
};

struct OrderRecord {
  int k = 0;
  std::string solver_status;
  int iterations = 0;
  std::vector<FlatCheck> flat_checks;
  std::string note;
};

using OrderLog = std::vector<OrderRecord>;

enum class Verdict { Completable, NotCompletable, Inconclusive };

struct CompletionResult {
  Verdict verdict = Verdict::Inconclusive;
  int k_reached = 0;
  CpDecomposition decomposition;
  Eigen::MatrixXd completion;  // n x n when Completable
  DecompositionReport report;
  InfeasibilityCertificate certificate;
  bool certificate_verified = false;
  std::shared_ptr<SdpProblem> infeasible_problem;  // the relaxation the certificate refutes
  OrderLog log;
  std::string path = "sdp";  // which route decided: sdp / no-diagonal / one-diagonal / reduction
  std::string note;
};

// Order-k relaxation of the simplex moment problem with support data z|_E = a:
// variables are all moments of degree <= 2k; equalities pin the supported
// moments and enforce the plane x_1+...+x_n = 1 (one row per monomial class
// of the localizing identity, which removes the duplicated entries of
// L_h^(k)); PSD blocks are the moment matrix, one localizing block per
// coordinate x_i >= 0, and one for 1 - |x|^2 >= 0.
inline SdpProblem assemble_sdr(const Eigen::VectorXd& a, const IndexSet& E, int k,
                               const Polynomial& R) {
  const int n = E.n;
  if (R.n != n) throw std::invalid_argument("assemble_sdr: objective variable count mismatch");
  if (2 * k < R.deg() || k < 1) throw std::invalid_argument("assemble_sdr: order below objective degree");
  if (a.size() != E.size()) throw std::invalid_argument("assemble_sdr: value count mismatch");

  const MonomialBasis basis(n, 2 * k);
  SdpProblem p;
  p.N = basis.size();
  p.c = Eigen::VectorXd::Zero(p.N);
  for (const auto& [alpha, coeff] : R.coeffs) p.c(basis.position(alpha)) += coeff;

  // support rows
  bool all_diagonals = true;
  double diag_sum = 0.0;
  std::vector<bool> have_diag(n, false);
  for (int r = 0; r < E.size(); ++r) {
    auto [i, j] = E.pairs[r];
    MultiIndex alpha(n, 0);
    alpha[i] += 1;
    alpha[j] += 1;
    p.eq_rows.push_back({{basis.position(alpha), 1.0}});
    if (i == j) {
      have_diag[i] = true;
      diag_sum += a(r);
    }
  }
  for (int i = 0; i < n; ++i) all_diagonals = all_diagonals && have_diag[i];

  // plane rows: sum_l z_{delta+e_l} - z_delta = 0 for every |delta| <= 2k-2
  const MonomialBasis lowbasis(n, 2 * k - 2);
  for (int d = 0; d < lowbasis.size(); ++d) {
    const MultiIndex& delta = lowbasis.at(d);
    std::vector<std::pair<int, double>> row;
    for (int l = 0; l < n; ++l) {
      MultiIndex up = delta;
      up[l] += 1;
      row.emplace_back(basis.position(up), 1.0);
    }
    row.emplace_back(basis.position(delta), -1.0);
    p.eq_rows.push_back(std::move(row));
  }

  p.b = Eigen::VectorXd::Zero(static_cast<int>(p.eq_rows.size()));
  p.b.head(E.size()) = a;

  p.blocks.push_back(moment_structure(n, k));
  for (int i = 0; i < n; ++i) p.blocks.push_back(localizing_structure(poly_var(n, i), n, k));
  p.blocks.push_back(localizing_structure(poly_unit_ball(n), n, k));

  // With every diagonal supported, any feasible z has z_0 <= n * sum of
  // diagonal values and |z_alpha| <= z_0, giving a certificate-grade bound.
  if (all_diagonals) p.z_bound = n * diag_sum;
  return p;
}

struct FlatResult {
  bool flat = false;
  int r = 0;
  int r_prev = 0;
};

inline int numerical_rank(const Eigen::MatrixXd& M, double tol, bool relative) {
  if (M.size() == 0) return 0;
  Eigen::VectorXd sv = detail::sym_eigenvalues(M).cwiseAbs();
  const double thr = relative ? tol * sv.maxCoeff() : tol;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) >= thr) ++r;
  return r;
}

// w must have degree exactly 2t; flat iff rank M_{t-1}(w) = rank M_t(w)
inline FlatResult check_flat(const TruncatedMomentSequence& w, double rank_tol,
                             bool relative = false) {
  const int n = w.basis.n();
  const int deg = w.basis.max_degree();
  if (deg < 2 || deg % 2 != 0) throw std::invalid_argument("check_flat: degree must be even >= 2");
  const int t = deg / 2;
  FlatResult res;
  res.r = numerical_rank(moment_structure(n, t).evaluate(w.values), rank_tol, relative);
  if (t == 1) {
    res.r_prev = (std::abs(w.values(0)) >= rank_tol) ? 1 : 0;
  } else {
    TruncatedMomentSequence wl = w.truncate(2 * (t - 1));
    res.r_prev = numerical_rank(moment_structure(n, t - 1).evaluate(wl.values), rank_tol, relative);
  }
  res.flat = (res.r == res.r_prev);
  return res;
}

// Relaxation loop: for k = d/2..k_max solve the order-k relaxation with a
// random convex objective; infeasibility (with verified certificate) decides
// NotCompletable; at an optimum, scan truncations t = 1..k for the rank
// condition and extract atoms from the first flat one; numerical failures
// resample the objective. Expects a validated/reduced input.
inline CompletionResult cp_complete(const PartialSymMatrix& A, const DriverSettings& settings) {
  settings.validate();
  const int n = A.order();
  const IndexSet& E = A.index_set;
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(A.values.data(), A.values.size());

  CompletionResult res;
  res.path = "sdp";

  if (E.size() == 0 || a.lpNorm<Eigen::Infinity>() == 0.0) {
    // nothing (nonzero) is specified: the zero matrix completes it
    res.verdict = Verdict::Completable;
    res.completion = Eigen::MatrixXd::Zero(n, n);
    res.report = verify_decomposition(A, res.decomposition);
    res.note = "all specified entries are zero";
    return res;
  }

  const double scale = a.lpNorm<Eigen::Infinity>();
  const Eigen::VectorXd a_scaled = a / scale;

  GaussianRng rng(settings.seed);

  for (int k = settings.k_start(); k <= settings.k_max; ++k) {
    bool advanced = false;
    for (int attempt = 0; attempt <= settings.retries && !advanced; ++attempt) {
      OrderRecord rec;
      rec.k = k;
      Polynomial R = random_sos_objective(n, settings.d, rng);
      auto prob = std::make_shared<SdpProblem>(assemble_sdr(a_scaled, E, k, R));
      SdpOutcome outcome = solve(*prob, settings.sdp_settings());
      rec.iterations = outcome.iterations;

      if (outcome.status == SdpOutcome::Status::Infeasible) {
        rec.solver_status = "infeasible";
        res.log.push_back(std::move(rec));
        res.verdict = Verdict::NotCompletable;
        res.k_reached = k;
        res.certificate = outcome.certificate;
        res.certificate_verified = verify_certificate(*prob, res.certificate, settings.tol_cert,
                                                      settings.tol_psd, &res.certificate.margin);
        res.infeasible_problem = prob;
        return res;
      }

      if (outcome.status == SdpOutcome::Status::Optimal) {
        rec.solver_status = "optimal";
        const Eigen::VectorXd zstar = outcome.z * scale;  // back to input units
        for (int t = 1; t <= k; ++t) {
          MonomialBasis tb(n, 2 * t);
          TruncatedMomentSequence w{tb, zstar.head(tb.size())};
          FlatResult fl = check_flat(w, settings.rank_tol, settings.rank_tol_relative);
          FlatCheck chk{t, fl.r_prev, fl.r, fl.flat, ""};
          if (fl.flat && fl.r > 0) {
            try {
              FlatWitness witness{w, t, fl.r, settings.rank_tol};
              CpDecomposition dec = extract_atoms(witness, rng);
              DecompositionReport report = verify_decomposition(A, dec);
              if (report.pass(1e-6)) {
                chk.note = "extracted " + std::to_string(dec.length()) + " atoms";
                rec.flat_checks.push_back(chk);
                res.log.push_back(std::move(rec));
                res.verdict = Verdict::Completable;
                res.k_reached = k;
                res.decomposition = std::move(dec);
                res.completion = assemble_completion(res.decomposition, n);
                res.report = report;
                return res;
              }
              chk.note = "decomposition failed verification";
            } catch (const ExtractionFailed& e) {
              chk.note = std::string("extraction failed: ") + e.what();
            }
          }
          rec.flat_checks.push_back(chk);
        }
        rec.note = "no usable flat truncation";
        res.log.push_back(std::move(rec));
        advanced = true;  // escalate k
        continue;
      }

      rec.solver_status = "numerical-failure";
      rec.note = outcome.diagnostics;
      res.log.push_back(std::move(rec));
      if (attempt == settings.retries) {
        res.verdict = Verdict::Inconclusive;
        res.k_reached = k;
        res.note = "solver failed at order " + std::to_string(k) + ": " + outcome.diagnostics;
        return res;
      }
    }
    res.k_reached = k;
  }

  res.verdict = Verdict::Inconclusive;
  res.note = "no decision up to k_max";
  return res;
}

namespace detail {

// map a result obtained on the reduced matrix back to the original indexing
inline CompletionResult embed_result(CompletionResult r, const PartialSymMatrix& original,
                                     const std::vector<int>& removed) {
  const int n = original.order();
  if (r.verdict == Verdict::Completable) {
    CpDecomposition lifted;
    for (size_t i = 0; i < r.decomposition.atoms.size(); ++i) {
      lifted.atoms.push_back(embed_atom(r.decomposition.atoms[i], n, removed));
      lifted.weights.push_back(r.decomposition.weights[i]);
    }
    r.decomposition = std::move(lifted);
    r.completion = assemble_completion(r.decomposition, n);
    r.report = verify_decomposition(original, r.decomposition);
  }
  return r;
}

}  // namespace detail

// Front door: validation/reduction, the closed-form constructions for the
// no-diagonal and one-diagonal patterns, the maximum-principal-submatrix
// pre-check, then the relaxation hierarchy.
inline CompletionResult fast_path_dispatch(const PartialSymMatrix& A_in,
                                           const DriverSettings& settings) {
  settings.validate();
  ReduceResult vr = validate_and_reduce(A_in);
  if (!vr.completable) {
    CompletionResult res;
    res.verdict = Verdict::NotCompletable;
    res.path = "reduction";
    res.note = vr.reason;
    return res;
  }
  const PartialSymMatrix& Ar = vr.reduced;
  const int ndiag = static_cast<int>(Ar.given_diagonals().size());

  if (settings.mode != RunMode::SdpOnly) {
    if (ndiag == 0) {
      CompletionResult res;
      res.verdict = Verdict::Completable;
      res.path = "no-diagonal";
      res.decomposition = trivial_completion_all_diagonals_missing(Ar);
      return detail::embed_result(std::move(res), A_in, vr.removed_indices);
    }
    if (ndiag == 1) {
      CompletionResult res;
      res.verdict = Verdict::Completable;
      res.path = "one-diagonal";
      res.decomposition = trivial_completion_one_diagonal(Ar);
      return detail::embed_result(std::move(res), A_in, vr.removed_indices);
    }
  }

  if (settings.mode == RunMode::FastOnly) {
    CompletionResult res;
    res.verdict = Verdict::Inconclusive;
    res.path = "fast-only";
    res.note = "no closed-form construction applies to this pattern";
    return res;
  }

  if (settings.mode == RunMode::Auto && settings.submatrix_precheck &&
      ndiag < Ar.order() && ndiag >= 2) {
    PrincipalSubmatrix sub = max_principal_submatrix(Ar);
    CompletionResult subres = cp_complete(sub.matrix, settings);
    if (subres.verdict == Verdict::NotCompletable) {
      subres.path = "submatrix";
      subres.note = "maximum principal submatrix is not completely positive";
      return subres;  // certificate refutes the submatrix relaxation
    }
  }

  CompletionResult res = cp_complete(Ar, settings);
  return detail::embed_result(std::move(res), A_in, vr.removed_indices);
}

}  // namespace cpmc
