#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace cpmc {

// Exponent vector alpha in N^n.
using MultiIndex = std::vector<int>;

inline int degree(const MultiIndex& a) {
  return std::accumulate(a.begin(), a.end(), 0);
}

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Graded lexicographic order: lower total degree first; within equal degree,
// lexicographic with x1 ranked highest (so (2,0) precedes (1,1) precedes (0,2)).
inline bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = degree(a), db = degree(b);
  if (da != db) return da < db;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

struct MultiIndexHash {
  size_t operator()(const MultiIndex& a) const {
    size_t h = 1469598103934665603ull;
    for (int v : a) {
      h ^= static_cast<size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

// All monomials of N^n_d, listed in graded lexicographic order, with inverse
// position lookup. A key consequence of the grading: the monomials of degree
// <= d' form a prefix of the list for any d' <= d, so truncating a moment
// vector is a head slice.
class MonomialBasis {
 public:
  MonomialBasis() = default;

  MonomialBasis(int n, int d) : n_(n), d_(d) {
    if (n < 1 || d < 0) throw std::invalid_argument("MonomialBasis: need n >= 1, d >= 0");
    MultiIndex cur(n, 0);
    for (int deg = 0; deg <= d; ++deg) emit(cur, 0, deg);
    pos_.reserve(list_.size());
    for (size_t i = 0; i < list_.size(); ++i) pos_[list_[i]] = static_cast<int>(i);
  }

  int n() const { return n_; }
  int max_degree() const { return d_; }
  int size() const { return static_cast<int>(list_.size()); }
  const std::vector<MultiIndex>& exponents() const { return list_; }
  const MultiIndex& at(int i) const { return list_[i]; }

  bool contains(const MultiIndex& a) const { return pos_.count(a) != 0; }

  int position(const MultiIndex& a) const {
    auto it = pos_.find(a);
    if (it == pos_.end()) throw std::out_of_range("MonomialBasis: multi-index outside basis");
    return it->second;
  }

 private:
  void emit(MultiIndex& cur, int coord, int rem) {
    if (coord == n_ - 1) {
      cur[coord] = rem;
      list_.push_back(cur);
      cur[coord] = 0;
      return;
    }
    for (int e = rem; e >= 0; --e) {
      cur[coord] = e;
      emit(cur, coord + 1, rem - e);
    }
    cur[coord] = 0;
  }

  int n_ = 0, d_ = 0;
  std::vector<MultiIndex> list_;
  std::unordered_map<MultiIndex, int, MultiIndexHash> pos_;
};

inline MonomialBasis monomials_up_to(int n, int d) { return MonomialBasis(n, d); }

}  // namespace cpmc
