#include <catch2/catch_amalgamated.hpp>
#include <cpmc/driver.hpp>
#include <cpmc/extraction.hpp>

#include <algorithm>
#include <random>

#include "fixtures.hpp"

using namespace cpmc;

namespace {

// greedy matching of recovered atoms/weights to a reference set
double match_error(const CpDecomposition& got, const std::vector<Eigen::VectorXd>& atoms,
                   const std::vector<double>& weights) {
  if (got.atoms.size() != atoms.size()) return 1e9;
  std::vector<bool> used(atoms.size(), false);
  double worst = 0.0;
  for (size_t i = 0; i < got.atoms.size(); ++i) {
    double best = 1e9;
    int arg = -1;
    for (size_t j = 0; j < atoms.size(); ++j) {
      if (used[j]) continue;
      const double e = (got.atoms[i] - atoms[j]).lpNorm<Eigen::Infinity>();
      if (e < best) {
        best = e;
        arg = static_cast<int>(j);
      }
    }
    used[arg] = true;
    worst = std::max(worst, best);
    worst = std::max(worst, std::abs(got.weights[i] - weights[arg]));
  }
  return worst;
}

FlatWitness witness_from(const std::vector<Eigen::VectorXd>& atoms,
                         const std::vector<double>& weights, int n, int t, double rank_tol = 1e-6) {
  FlatWitness w;
  w.w = atomic_tms(atoms, weights, n, 2 * t);
  w.t = t;
  w.rank_tol = rank_tol;
  auto fl = check_flat(w.w, rank_tol);
  REQUIRE(fl.flat);
  w.r = fl.r;
  return w;
}

}  // namespace

TEST_CASE("recovers the published three-atom decomposition (order 4)") {
  auto atoms = fixtures::banded_atoms();
  auto weights = fixtures::banded_weights();
  auto w = witness_from(atoms, weights, 4, 2);
  REQUIRE(w.r == 3);
  GaussianRng rng(1);
  auto dec = extract_atoms(w, rng);
  REQUIRE(dec.length() == 3);
  REQUIRE(match_error(dec, atoms, weights) <= 1e-6);
}

TEST_CASE("recovers the published three-atom decomposition (order 5)") {
  auto atoms = fixtures::no_diagonals_atoms();
  auto weights = fixtures::no_diagonals_weights();
  auto w = witness_from(atoms, weights, 5, 2);
  REQUIRE(w.r == 3);
  GaussianRng rng(2);
  auto dec = extract_atoms(w, rng);
  REQUIRE(dec.length() == 3);
  REQUIRE(match_error(dec, atoms, weights) <= 1e-6);
}

TEST_CASE("rank-one witness recovers the single atom exactly") {
  const int n = 4;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / n);
  auto w = witness_from({v}, {1.0}, n, 1);
  REQUIRE(w.r == 1);
  GaussianRng rng(3);
  auto dec = extract_atoms(w, rng);
  REQUIRE(dec.length() == 1);
  REQUIRE((dec.atoms[0] - v).lpNorm<Eigen::Infinity>() <= 1e-9);
  REQUIRE(dec.weights[0] == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("round trip over random atomic measures") {
  std::mt19937_64 eng(23);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  GaussianRng rng(99);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(eng() % 2);  // 3 or 4
    const int m = 1 + static_cast<int>(eng() % 5);  // up to 5 atoms
    std::vector<Eigen::VectorXd> atoms;
    std::vector<double> weights;
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd u(n);
      for (int j = 0; j < n; ++j) u(j) = U(eng);
      u /= u.sum();
      atoms.push_back(u);
      weights.push_back(0.1 + 9.9 * U(eng));
    }
    FlatWitness w;
    const int t = 2;
    w.w = atomic_tms(atoms, weights, n, 2 * t);
    w.t = t;
    auto fl = check_flat(w.w, 1e-6);
    if (!fl.flat || fl.r != m) continue;  // nearly coincident atoms: skip
    w.r = fl.r;
    auto dec = extract_atoms(w, rng);
    REQUIRE(dec.length() == m);
    if (match_error(dec, atoms, weights) > 1e-6) ++failures;

    // moment reproduction on every successful extraction
    auto recon = atomic_tms(dec, n, 2 * t);
    REQUIRE((recon.values - w.w.values).lpNorm<Eigen::Infinity>() <= 1e-6);

    // assembled completion stays PSD
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(assemble_completion(dec, n));
    REQUIRE(es.eigenvalues().minCoeff() >= -1e-10);
  }
  REQUIRE(failures == 0);
}

TEST_CASE("assemble_completion basics") {
  CpDecomposition dec;
  dec.atoms = {Eigen::Vector2d(0.5, 0.5)};
  dec.weights = {4.0};
  Eigen::MatrixXd want(2, 2);
  want << 1, 1, 1, 1;
  REQUIRE((assemble_completion(dec, 2) - want).lpNorm<Eigen::Infinity>() == 0.0);
  REQUIRE(assemble_completion(CpDecomposition{}, 3).isZero());

  CpDecomposition table;
  table.atoms = fixtures::banded_atoms();
  table.weights = fixtures::banded_weights();
  Eigen::MatrixXd C = assemble_completion(table, 4);
  Eigen::MatrixXd expect(4, 4);
  expect << 3, 3, 0, 0, 3, 6, 3, 0, 0, 3, 6, 3, 0, 0, 3, 3;
  REQUIRE((C - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
  REQUIRE(verify_decomposition(fixtures::banded(3.0), table).max_entry_error <= 1e-12);
}

TEST_CASE("degenerate witnesses are rejected, not mangled") {
  GaussianRng rng(5);
  FlatWitness w;
  w.w = atomic_tms({Eigen::Vector2d(0.5, 0.5)}, {1.0}, 2, 4);
  w.t = 2;
  w.r = 0;
  REQUIRE_THROWS_AS(extract_atoms(w, rng), std::invalid_argument);
  w.r = 2;  // claims more atoms than the moment matrix supports
  REQUIRE_THROWS_AS(extract_atoms(w, rng), ExtractionFailed);
}
