#include <catch2/catch_amalgamated.hpp>
#include <cpmc/multi_index.hpp>

using namespace cpmc;

TEST_CASE("graded lex order matches the reference layout for n=2,d=2") {
  MonomialBasis b(2, 2);
  const std::vector<MultiIndex> want = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  REQUIRE(b.exponents() == want);
}

TEST_CASE("degenerate bases") {
  REQUIRE(monomials_up_to(1, 0).exponents() == std::vector<MultiIndex>{{0}});
  const std::vector<MultiIndex> want = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  REQUIRE(monomials_up_to(3, 1).exponents() == want);
}

TEST_CASE("basis size is binomial(n+d, d)") {
  for (int n = 1; n <= 5; ++n)
    for (int d = 0; d <= 6; ++d)
      REQUIRE(MonomialBasis(n, d).size() == binomial(n + d, d));
}

TEST_CASE("order is strictly increasing and positions invert the listing") {
  MonomialBasis b(3, 4);
  for (int i = 0; i + 1 < b.size(); ++i) REQUIRE(graded_lex_less(b.at(i), b.at(i + 1)));
  for (int i = 0; i < b.size(); ++i) {
    REQUIRE(b.contains(b.at(i)));
    REQUIRE(b.position(b.at(i)) == i);
  }
  REQUIRE_FALSE(b.contains({5, 0, 0}));
  REQUIRE_THROWS_AS(b.position({5, 0, 0}), std::out_of_range);
}

TEST_CASE("low degrees are a prefix of higher-degree bases") {
  MonomialBasis small(3, 2), big(3, 5);
  for (int i = 0; i < small.size(); ++i) REQUIRE(big.at(i) == small.at(i));
}
