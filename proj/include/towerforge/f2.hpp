#pragma once
#include <cstdint>
#include <vector>

#include "towerforge/errors.hpp"

namespace towerforge::f2 {

/* Dense GF(2) vectors and matrices, word-packed.  Dimensions here are tiny
 * (governing bases, unit-class modules), so clarity wins over blocking. */

struct Vec {
  int n = 0;
  std::vector<std::uint64_t> w;

  Vec() = default;
  explicit Vec(int n_) : n(n_), w((n_ + 63) / 64, 0) {}
  bool get(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }
  void set(int i, bool v) {
    if (v)
      w[i >> 6] |= 1ull << (i & 63);
    else
      w[i >> 6] &= ~(1ull << (i & 63));
  }
  void flip(int i) { w[i >> 6] ^= 1ull << (i & 63); }
  Vec& operator^=(const Vec& o) {
    for (size_t i = 0; i < w.size(); ++i) w[i] ^= o.w[i];
    return *this;
  }
  friend Vec operator^(Vec a, const Vec& b) { return a ^= b; }
  bool zero() const {
    for (auto x : w)
      if (x) return false;
    return true;
  }
  friend bool operator==(const Vec&, const Vec&) = default;
  std::vector<int> support() const {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (get(i)) s.push_back(i);
    return s;
  }
};

struct Mat {
  int rows = 0, cols = 0;
  std::vector<Vec> r;

  Mat() = default;
  Mat(int rows_, int cols_) : rows(rows_), cols(cols_), r(rows_, Vec(cols_)) {}
  bool get(int i, int j) const { return r[i].get(j); }
  void set(int i, int j, bool v) { r[i].set(j, v); }
  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m.set(i, i, true);
    return m;
  }
  Mat transposed() const {
    Mat t(cols, rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        if (get(i, j)) t.set(j, i, true);
    return t;
  }
  friend Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw inconsistency_error("f2::Mat: size mismatch in product");
    Mat c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
      for (int k = 0; k < a.cols; ++k)
        if (a.get(i, k)) c.r[i] ^= b.r[k];
    return c;
  }
  friend Mat operator+(Mat a, const Mat& b) {
    for (int i = 0; i < a.rows; ++i) a.r[i] ^= b.r[i];
    return a;
  }
  Vec apply(const Vec& x) const {
    // rows act as functionals: y_i = <row_i, x>
    Vec y(rows);
    for (int i = 0; i < rows; ++i) {
      std::uint64_t acc = 0;
      for (size_t k = 0; k < x.w.size(); ++k) acc ^= r[i].w[k] & x.w[k];
      y.set(i, __builtin_parityll(acc));
    }
    return y;
  }
  friend bool operator==(const Mat&, const Mat&) = default;
};

int rank(Mat m);

/* Basis of the kernel of m acting on column vectors (m.cols-dimensional). */
std::vector<Vec> kernel(const Mat& m);

/* Solve m x = b (column-vector convention); empty result + ok=false when
 * inconsistent. */
bool solve(const Mat& m, const Vec& b, Vec& x);

/* Row space membership. */
bool in_row_span(const Mat& m, const Vec& v);

}  // namespace towerforge::f2
