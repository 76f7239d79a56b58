#include <catch2/catch_amalgamated.hpp>
#include <cpmc/driver.hpp>

#include <random>

#include "fixtures.hpp"

using namespace cpmc;

namespace {

Eigen::VectorXd values_of(const PartialSymMatrix& A) {
  return Eigen::Map<const Eigen::VectorXd>(A.values.data(), A.values.size());
}

DriverSettings quick() {
  DriverSettings s;
  s.seed = 7;
  return s;
}

}  // namespace

TEST_CASE("relaxation assembly: dimensions and counts") {
  auto A = fixtures::banded(3.0);
  auto R = random_sos_objective(4, 4, 1);
  auto p = assemble_sdr(values_of(A), A.index_set, 2, R);
  REQUIRE(p.N == 70);                 // |N^4_4|
  REQUIRE(p.blocks.size() == 6);      // moment + 4 coordinates + ball
  REQUIRE(p.blocks[0].side() == 15);  // |N^4_2|
  for (int j = 1; j <= 5; ++j) REQUIRE(p.blocks[j].side() == 5);  // |N^4_1|
  // support rows + one plane row per |N^4_2|
  REQUIRE(p.eq_rows.size() == A.index_set.size() + 15);
  REQUIRE(p.z_bound > 0.0);  // all diagonals given
  p.validate();
}

TEST_CASE("relaxation assembly: single support row, display-sized moment block") {
  IndexSet E(2, {{0, 0}});
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 1.0);
  auto R = random_sos_objective(2, 4, 1);
  auto p = assemble_sdr(a, E, 2, R);
  REQUIRE(p.blocks[0].side() == 6);  // matches the displayed M_2 layout
  REQUIRE(p.eq_rows.size() == 1 + 6);
  REQUIRE(p.z_bound == 0.0);  // not simplex-full: no bound
  REQUIRE_THROWS_AS(assemble_sdr(a, E, 1, R), std::invalid_argument);
}

TEST_CASE("plane rows vanish exactly on atomic sequences") {
  auto z = atomic_tms(fixtures::banded_atoms(), fixtures::banded_weights(), 4, 4);
  auto A = fixtures::banded(3.0);
  auto p = assemble_sdr(values_of(A), A.index_set, 2, random_sos_objective(4, 4, 1));
  for (size_t r = A.index_set.size(); r < p.eq_rows.size(); ++r) {
    double s = 0.0;
    for (auto [v, co] : p.eq_rows[r]) s += co * z.values(v);
    REQUIRE(std::abs(s) <= 1e-10);
  }
}

TEST_CASE("flatness detection") {
  auto z = atomic_tms(fixtures::banded_atoms(), fixtures::banded_weights(), 4, 4);
  auto fl = check_flat(z, 1e-6);
  REQUIRE(fl.flat);
  REQUIRE(fl.r == 3);

  Eigen::VectorXd v = Eigen::VectorXd::Constant(3, 1.0 / 3);
  auto single = atomic_tms({v}, {1.0}, 3, 4);
  auto fs = check_flat(single, 1e-6);
  REQUIRE(fs.flat);
  REQUIRE(fs.r == 1);

  // perturb top-degree moments: rank of M_t jumps, flatness breaks
  auto zp = single;
  std::mt19937_64 eng(13);
  std::normal_distribution<double> N(0.0, 1e-2);
  MonomialBasis b(3, 4);
  for (int i = 0; i < b.size(); ++i)
    if (degree(b.at(i)) >= 3) zp.values(i) += N(eng);
  auto fp = check_flat(zp, 1e-6);
  REQUIRE_FALSE(fp.flat);
}

TEST_CASE("feasible relaxations are never declared infeasible") {
  std::mt19937_64 eng(31);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + static_cast<int>(eng() % 3);
    const int m = 1 + static_cast<int>(eng() % 3);
    std::vector<Eigen::VectorXd> atoms;
    std::vector<double> weights;
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd u(n);
      for (int j = 0; j < n; ++j) u(j) = U(eng);
      u /= u.sum();
      atoms.push_back(u);
      weights.push_back(0.5 + 5.0 * U(eng));
    }
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < m; ++i) C += weights[i] * atoms[i] * atoms[i].transpose();
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> vals;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (i == j || (eng() % 2)) {
          pairs.emplace_back(i, j);
          vals.push_back(C(i, j));
        }
    IndexSet E(n, pairs);
    Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
    auto p = assemble_sdr(a, E, 2, random_sos_objective(n, 4, 1000 + trial));
    auto out = solve(p);
    REQUIRE(out.status != SdpOutcome::Status::Infeasible);
  }
}

TEST_CASE("all-ones corner instance completes") {
  auto res = cp_complete(fixtures::all_ones_missing_corner(), quick());
  REQUIRE(res.verdict == Verdict::Completable);
  REQUIRE(res.report.pass(1e-6));
  REQUIRE(res.k_reached <= 3);
}

TEST_CASE("early-certificate instance is refused with a verified certificate") {
  auto res = cp_complete(fixtures::early_certificate(), quick());
  REQUIRE(res.verdict == Verdict::NotCompletable);
  REQUIRE(res.k_reached <= 2);
  REQUIRE(res.certificate_verified);
  REQUIRE(res.infeasible_problem != nullptr);
  REQUIRE(verify_certificate(*res.infeasible_problem, res.certificate));
}

TEST_CASE("infeasibility is monotone in the order") {
  auto A = fixtures::early_certificate();
  for (int k = 2; k <= 3; ++k) {
    auto p = assemble_sdr(values_of(A), A.index_set, k, random_sos_objective(5, 4, 17));
    auto out = solve(p);
    REQUIRE(out.status == SdpOutcome::Status::Infeasible);
  }
}

TEST_CASE("verdicts are seed invariant") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    DriverSettings s;
    s.seed = seed;
    REQUIRE(cp_complete(fixtures::all_ones_missing_corner(), s).verdict == Verdict::Completable);
    REQUIRE(cp_complete(fixtures::early_certificate(), s).verdict == Verdict::NotCompletable);
  }
}

TEST_CASE("dispatch: closed forms win without any solve") {
  auto res = fast_path_dispatch(fixtures::no_diagonals(), quick());
  REQUIRE(res.verdict == Verdict::Completable);
  REQUIRE(res.path == "no-diagonal");
  REQUIRE(res.decomposition.length() == 9);
  REQUIRE(res.report.max_entry_error <= 1e-12);

  auto one = fast_path_dispatch(fixtures::one_diagonal(), quick());
  REQUIRE(one.verdict == Verdict::Completable);
  REQUIRE(one.path == "one-diagonal");
  REQUIRE(one.report.max_entry_error <= 1e-12);
}

TEST_CASE("dispatch: fast-only mode never solves") {
  DriverSettings s = quick();
  s.mode = RunMode::FastOnly;
  REQUIRE(fast_path_dispatch(fixtures::no_diagonals(), s).verdict == Verdict::Completable);
  REQUIRE(fast_path_dispatch(fixtures::banded(3.0), s).verdict == Verdict::Inconclusive);
}

TEST_CASE("dispatch: completable submatrix does not settle the full pattern") {
  // the corner instance: its 2x2 principal submatrix completes, the full
  // matrix cannot (its determinant is negative under every assignment)
  auto res = fast_path_dispatch(fixtures::stubborn_corner(), quick());
  REQUIRE(res.verdict == Verdict::NotCompletable);
}

TEST_CASE("dispatch: rejected inputs short-circuit") {
  PartialSymMatrix neg(IndexSet(2, {{0, 1}}), {-1.0});
  auto res = fast_path_dispatch(neg, quick());
  REQUIRE(res.verdict == Verdict::NotCompletable);
  REQUIRE(res.path == "reduction");
}

TEST_CASE("dispatch: zero rows are removed and re-embedded") {
  PartialSymMatrix A(IndexSet(3, {{0, 0}, {1, 1}, {2, 2}, {1, 2}}), {0.0, 1.0, 1.0, 1.0});
  auto res = fast_path_dispatch(A, quick());
  REQUIRE(res.verdict == Verdict::Completable);
  REQUIRE(res.completion.rows() == 3);
  REQUIRE(res.completion.row(0).isZero());
  for (const auto& u : res.decomposition.atoms) REQUIRE(u(0) == 0.0);
  REQUIRE(verify_decomposition(A, res.decomposition).pass(1e-6));
}

TEST_CASE("driver settings validation") {
  DriverSettings s;
  s.d = 3;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s.d = 2;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s.d = 8;
  s.k_max = 3;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
}
