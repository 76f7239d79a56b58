#pragma once

#include <cpmc/matrix_io.hpp>
#include <cpmc/partial_matrix.hpp>

#include <string>
#include <vector>

// Shared fixtures for tests: benchmark partial matrices and their published
// decompositions, written in the CLI text format.

namespace fixtures {

inline cpmc::PartialSymMatrix parse(const std::string& s) { return cpmc::parse_matrix(s); }

// 4x4, not completable (determinant is negative for every assignment)
inline cpmc::PartialSymMatrix det_counterexample() {
  return parse(R"(4
2 3 0 *
3 6 3 0
0 3 6 3
* 0 3 2
)");
}

// 3x3 all-ones with the (3,3) entry missing; completable
inline cpmc::PartialSymMatrix all_ones_missing_corner() {
  return parse(R"(3
1 1 1
1 1 1
1 1 *
)");
}

// 3x3 with constant determinant -1; not completable but its maximum
// principal submatrix is
inline cpmc::PartialSymMatrix stubborn_corner() {
  return parse(R"(3
1 1 2
1 1 3
2 3 *
)");
}

// 4x4 banded family: completable iff b >= 3
inline cpmc::PartialSymMatrix banded(double b) {
  std::string s = "4\n";
  const std::string bs = std::to_string(b);
  s += bs + " 3 0 *\n3 6 3 0\n0 3 6 3\n* 0 3 " + bs + "\n";
  return parse(s);
}

inline std::vector<Eigen::VectorXd> banded_atoms() {
  std::vector<Eigen::VectorXd> a(3, Eigen::VectorXd::Zero(4));
  a[0] << 0.5, 0.5, 0.0, 0.0;
  a[1] << 0.0, 0.0, 0.5, 0.5;
  a[2] << 0.0, 0.5, 0.5, 0.0;
  return a;
}
inline std::vector<double> banded_weights() { return {12.0, 12.0, 12.0}; }

// 5x5 with every diagonal missing; completable by the closed form
inline cpmc::PartialSymMatrix no_diagonals() {
  return parse(R"(5
* 4 1 2 2
4 * 0 1 3
1 0 * 1 2
2 1 1 * 1
2 3 2 1 *
)");
}

inline std::vector<Eigen::VectorXd> no_diagonals_atoms() {
  std::vector<Eigen::VectorXd> a(3, Eigen::VectorXd::Zero(5));
  a[0] << 0.1595, 0.0000, 0.3619, 0.1595, 0.3191;
  a[1] << 0.1122, 0.4258, 0.0000, 0.0000, 0.4620;
  a[2] << 0.4957, 0.3179, 0.0000, 0.1488, 0.0376;
  return a;
}
inline std::vector<double> no_diagonals_weights() { return {17.3224, 13.9667, 21.1443}; }

// 5x5 with three diagonals missing; completable although the pattern is not
// simplex-full
inline cpmc::PartialSymMatrix three_missing_diagonals() {
  return parse(R"(5
6.1232 4.1232 1.1233 2.1231 2.3321
4.1232 *      0      1.0987 3.2873
1.1233 0      3.2318 1.2332 2.1232
2.1231 1.0987 1.2332 *      1.1232
2.3321 3.2873 2.1232 1.1232 *
)");
}

// 6x6 with a single given diagonal; completable by the one-diagonal closed form
inline cpmc::PartialSymMatrix one_diagonal() {
  return parse(R"(6
* 7 1 3 9 *
7 * 5 8 5 3
1 5 * 2 2 *
3 8 2 3 1 4
9 5 2 1 * 1
* 3 * 4 1 *
)");
}

// 5x5 circulant-ish pattern; not completable
inline cpmc::PartialSymMatrix ring() {
  return parse(R"(5
1 1 * * 0
1 1 1 * *
* 1 1 1 *
* * 1 1 1
0 * * 1 1
)");
}

// 5x5, not completable, certified already at the lowest order
inline cpmc::PartialSymMatrix early_certificate() {
  return parse(R"(5
1 1 2 * 4
1 1 3 * 3
2 3 3 3 *
* * 3 2 *
4 3 * * *
)");
}

}  // namespace fixtures
