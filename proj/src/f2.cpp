#include "towerforge/f2.hpp"

namespace towerforge::f2 {

int rank(Mat m) {
  int rk = 0;
  for (int col = 0; col < m.cols && rk < m.rows; ++col) {
    int pivot = -1;
    for (int i = rk; i < m.rows; ++i)
      if (m.get(i, col)) {
        pivot = i;
        break;
      }
    if (pivot < 0) continue;
    std::swap(m.r[rk], m.r[pivot]);
    for (int i = 0; i < m.rows; ++i)
      if (i != rk && m.get(i, col)) m.r[i] ^= m.r[rk];
    ++rk;
  }
  return rk;
}

std::vector<Vec> kernel(const Mat& m) {
  // reduce, track pivot columns, read off free-variable basis
  Mat a = m;
  std::vector<int> pivot_col;
  int rk = 0;
  for (int col = 0; col < a.cols && rk < a.rows; ++col) {
    int pivot = -1;
    for (int i = rk; i < a.rows; ++i)
      if (a.get(i, col)) {
        pivot = i;
        break;
      }
    if (pivot < 0) continue;
    std::swap(a.r[rk], a.r[pivot]);
    for (int i = 0; i < a.rows; ++i)
      if (i != rk && a.get(i, col)) a.r[i] ^= a.r[rk];
    pivot_col.push_back(col);
    ++rk;
  }
  std::vector<bool> is_pivot(a.cols, false);
  for (int c : pivot_col) is_pivot[c] = true;
  std::vector<Vec> basis;
  for (int free = 0; free < a.cols; ++free) {
    if (is_pivot[free]) continue;
    Vec v(a.cols);
    v.set(free, true);
    for (int i = 0; i < rk; ++i)
      if (a.get(i, free)) v.set(pivot_col[i], true);
    basis.push_back(v);
  }
  return basis;
}

bool solve(const Mat& m, const Vec& b, Vec& x) {
  // Gaussian elimination on [m | b]
  Mat a = m;
  Vec rhs = b;
  std::vector<int> pivot_col;
  int rk = 0;
  for (int col = 0; col < a.cols && rk < a.rows; ++col) {
    int pivot = -1;
    for (int i = rk; i < a.rows; ++i)
      if (a.get(i, col)) {
        pivot = i;
        break;
      }
    if (pivot < 0) continue;
    std::swap(a.r[rk], a.r[pivot]);
    bool brk = rhs.get(rk), bpv = rhs.get(pivot);
    rhs.set(rk, bpv);
    rhs.set(pivot, brk);
    for (int i = 0; i < a.rows; ++i)
      if (i != rk && a.get(i, col)) {
        a.r[i] ^= a.r[rk];
        if (rhs.get(rk)) rhs.flip(i);
      }
    pivot_col.push_back(col);
    ++rk;
  }
  for (int i = rk; i < a.rows; ++i)
    if (rhs.get(i)) return false;
  x = Vec(a.cols);
  for (int i = 0; i < rk; ++i) x.set(pivot_col[i], rhs.get(i));
  return true;
}

bool in_row_span(const Mat& m, const Vec& v) {
  Mat a = m;
  int base = rank(a);
  Mat b = m;
  b.r.push_back(v);
  ++b.rows;
  return rank(b) == base;
}

}  // namespace towerforge::f2
