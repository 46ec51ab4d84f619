#pragma once

// Dense exact linear algebra over a prime field F_p.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bpsplit/errors.hpp"

namespace bpsplit {

using FpVector = std::vector<uint32_t>;

inline bool is_prime(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

namespace fp {

inline uint32_t add(uint32_t a, uint32_t b, uint32_t p) {
  uint32_t s = a + b;
  return s >= p ? s - p : s;
}
inline uint32_t sub(uint32_t a, uint32_t b, uint32_t p) { return a >= b ? a - b : a + p - b; }
inline uint32_t mul(uint32_t a, uint32_t b, uint32_t p) {
  return static_cast<uint32_t>((static_cast<uint64_t>(a) * b) % p);
}
inline uint32_t neg(uint32_t a, uint32_t p) { return a == 0 ? 0 : p - a; }
inline uint32_t inv(uint32_t a, uint32_t p) {
  int64_t t = 0, nt = 1, r = p, nr = a;
  while (nr != 0) {
    int64_t qq = r / nr;
    t -= qq * nt;
    std::swap(t, nt);
    r -= qq * nr;
    std::swap(r, nr);
  }
  if (r != 1) throw MalformedInput("zero has no inverse mod p");
  return static_cast<uint32_t>(t < 0 ? t + p : t);
}
inline uint32_t reduce(int64_t a, uint32_t p) {
  int64_t r = a % static_cast<int64_t>(p);
  return static_cast<uint32_t>(r < 0 ? r + p : r);
}

// v += c * w
inline void axpy(FpVector& v, uint32_t c, const FpVector& w, uint32_t p) {
  if (c == 0) return;
  for (size_t k = 0; k < v.size(); ++k)
    if (w[k] != 0) v[k] = add(v[k], mul(c, w[k], p), p);
}

inline bool is_zero(const FpVector& v) {
  for (uint32_t x : v)
    if (x != 0) return false;
  return true;
}

}  // namespace fp

class FpMatrix {
 public:
  FpMatrix() = default;
  FpMatrix(uint32_t p, size_t rows, size_t cols) : p_(p), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  static FpMatrix identity(uint32_t p, size_t n) {
    FpMatrix m(p, n, n);
    for (size_t k = 0; k < n; ++k) m.set(k, k, 1);
    return m;
  }

  // Entries are reduced mod p; ragged input is rejected.
  static FpMatrix from_rows(uint32_t p, const std::vector<std::vector<int64_t>>& rows) {
    size_t c = rows.empty() ? 0 : rows.front().size();
    FpMatrix m(p, rows.size(), c);
    for (size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != c) throw MalformedInput("ragged matrix rows");
      for (size_t k = 0; k < c; ++k) m.set(r, k, fp::reduce(rows[r][k], p));
    }
    return m;
  }

  static FpMatrix from_columns(uint32_t p, size_t rows, const std::vector<FpVector>& cols) {
    FpMatrix m(p, rows, cols.size());
    for (size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].size() != rows) throw MalformedInput("column length mismatch");
      for (size_t r = 0; r < rows; ++r) m.set(r, c, cols[c][r]);
    }
    return m;
  }

  uint32_t p() const { return p_; }
  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  const std::vector<uint32_t>& entries() const { return data_; }

  uint32_t at(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  void set(size_t r, size_t c, uint32_t v) { data_[r * cols_ + c] = v; }
  void add_to(size_t r, size_t c, uint32_t v) { data_[r * cols_ + c] = fp::add(data_[r * cols_ + c], v, p_); }

  FpVector row(size_t r) const { return FpVector(data_.begin() + r * cols_, data_.begin() + (r + 1) * cols_); }
  FpVector column(size_t c) const {
    FpVector v(rows_);
    for (size_t r = 0; r < rows_; ++r) v[r] = at(r, c);
    return v;
  }

  FpVector apply(const FpVector& v) const {
    if (v.size() != cols_) throw MalformedInput("vector length does not match matrix columns");
    FpVector out(rows_, 0);
    for (size_t c = 0; c < cols_; ++c) {
      if (v[c] == 0) continue;
      for (size_t r = 0; r < rows_; ++r)
        if (uint32_t a = at(r, c)) out[r] = fp::add(out[r], fp::mul(a, v[c], p_), p_);
    }
    return out;
  }

  FpMatrix operator*(const FpMatrix& o) const {
    if (cols_ != o.rows_) throw MalformedInput("matrix product dimension mismatch");
    FpMatrix out(p_, rows_, o.cols_);
    for (size_t r = 0; r < rows_; ++r)
      for (size_t k = 0; k < cols_; ++k) {
        uint32_t a = at(r, k);
        if (a == 0) continue;
        for (size_t c = 0; c < o.cols_; ++c)
          if (uint32_t b = o.at(k, c)) out.add_to(r, c, fp::mul(a, b, p_));
      }
    return out;
  }

  FpMatrix operator+(const FpMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw MalformedInput("matrix sum dimension mismatch");
    FpMatrix out = *this;
    for (size_t k = 0; k < data_.size(); ++k) out.data_[k] = fp::add(data_[k], o.data_[k], p_);
    return out;
  }

  FpMatrix scaled(uint32_t c) const {
    FpMatrix out = *this;
    for (auto& x : out.data_) x = fp::mul(x, c, p_);
    return out;
  }

  FpMatrix transpose() const {
    FpMatrix out(p_, cols_, rows_);
    for (size_t r = 0; r < rows_; ++r)
      for (size_t c = 0; c < cols_; ++c) out.set(c, r, at(r, c));
    return out;
  }

  bool is_zero() const { return fp::is_zero(data_); }

  bool operator==(const FpMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && (data_ == o.data_) && (p_ == o.p_ || data_.empty());
  }

 private:
  uint32_t p_ = 2;
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<uint32_t> data_;
};

struct RrefResult {
  FpMatrix matrix;
  size_t rank = 0;
  std::vector<size_t> pivots;
};

// Reduced row-echelon form; pivot = first nonzero entry in scan order.
inline RrefResult rref(const FpMatrix& m) {
  RrefResult res{m, 0, {}};
  FpMatrix& a = res.matrix;
  const uint32_t p = m.p();
  size_t r = 0;
  for (size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
    size_t piv = r;
    while (piv < a.rows() && a.at(piv, c) == 0) ++piv;
    if (piv == a.rows()) continue;
    if (piv != r)
      for (size_t k = 0; k < a.cols(); ++k) {
        uint32_t tmp = a.at(r, k);
        a.set(r, k, a.at(piv, k));
        a.set(piv, k, tmp);
      }
    uint32_t s = fp::inv(a.at(r, c), p);
    for (size_t k = c; k < a.cols(); ++k) a.set(r, k, fp::mul(a.at(r, k), s, p));
    for (size_t o = 0; o < a.rows(); ++o) {
      if (o == r) continue;
      uint32_t f = a.at(o, c);
      if (f == 0) continue;
      for (size_t k = c; k < a.cols(); ++k) a.set(o, k, fp::sub(a.at(o, k), fp::mul(f, a.at(r, k), p), p));
    }
    res.pivots.push_back(c);
    ++r;
  }
  res.rank = r;
  return res;
}

inline size_t rank(const FpMatrix& m) { return rref(m).rank; }

// A subspace of F_p^n held as a basis in reduced row-echelon form.
class Subspace {
 public:
  Subspace() = default;
  Subspace(uint32_t p, size_t ambient) : p_(p), ambient_(ambient) {}

  static Subspace span(uint32_t p, size_t ambient, const std::vector<FpVector>& vectors) {
    Subspace s(p, ambient);
    for (const auto& v : vectors) s.insert(v);
    return s;
  }

  uint32_t p() const { return p_; }
  size_t ambient() const { return ambient_; }
  size_t dim() const { return basis_.size(); }
  const std::vector<FpVector>& basis() const { return basis_; }
  const std::vector<size_t>& pivots() const { return pivots_; }

  // v minus its projection along the pivot columns; zero iff v lies in the span.
  FpVector reduce(FpVector v) const {
    check_length(v);
    for (size_t k = 0; k < basis_.size(); ++k) {
      uint32_t c = v[pivots_[k]];
      if (c != 0) fp::axpy(v, fp::neg(c, p_), basis_[k], p_);
    }
    return v;
  }

  bool contains(const FpVector& v) const { return fp::is_zero(reduce(v)); }

  // Coordinates of a member vector with respect to basis().
  FpVector coordinates(const FpVector& v) const {
    check_length(v);
    FpVector c(basis_.size());
    for (size_t k = 0; k < basis_.size(); ++k) c[k] = v[pivots_[k]];
    return c;
  }

  // Adds v to the span; returns false when v was already contained.
  bool insert(const FpVector& v) {
    FpVector w = reduce(v);
    size_t piv = 0;
    while (piv < w.size() && w[piv] == 0) ++piv;
    if (piv == w.size()) return false;
    uint32_t s = fp::inv(w[piv], p_);
    for (auto& x : w) x = fp::mul(x, s, p_);
    for (auto& b : basis_) {
      uint32_t c = b[piv];
      if (c != 0) fp::axpy(b, fp::neg(c, p_), w, p_);
    }
    size_t pos = 0;
    while (pos < pivots_.size() && pivots_[pos] < piv) ++pos;
    basis_.insert(basis_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(w));
    pivots_.insert(pivots_.begin() + static_cast<std::ptrdiff_t>(pos), piv);
    return true;
  }

  bool contains_subspace(const Subspace& o) const {
    for (const auto& b : o.basis_)
      if (!contains(b)) return false;
    return true;
  }

  bool operator==(const Subspace& o) const { return ambient_ == o.ambient_ && basis_ == o.basis_; }

 private:
  void check_length(const FpVector& v) const {
    if (v.size() != ambient_) throw MalformedInput("vector length does not match ambient dimension");
  }

  uint32_t p_ = 2;
  size_t ambient_ = 0;
  std::vector<FpVector> basis_;
  std::vector<size_t> pivots_;
};

inline Subspace kernel_basis(const FpMatrix& m) {
  RrefResult r = rref(m);
  std::vector<bool> is_pivot(m.cols(), false);
  for (size_t c : r.pivots) is_pivot[c] = true;
  std::vector<FpVector> vecs;
  for (size_t f = 0; f < m.cols(); ++f) {
    if (is_pivot[f]) continue;
    FpVector v(m.cols(), 0);
    v[f] = 1;
    for (size_t k = 0; k < r.rank; ++k) v[r.pivots[k]] = fp::neg(r.matrix.at(k, f), m.p());
    vecs.push_back(std::move(v));
  }
  return Subspace::span(m.p(), m.cols(), vecs);
}

inline Subspace image_basis(const FpMatrix& m) {
  std::vector<FpVector> cols;
  cols.reserve(m.cols());
  for (size_t c = 0; c < m.cols(); ++c) cols.push_back(m.column(c));
  return Subspace::span(m.p(), m.rows(), cols);
}

// Standard vectors completing sub to a basis: those at non-pivot columns.
inline std::vector<FpVector> quotient_basis(size_t ambient_dim, const Subspace& sub) {
  if (sub.ambient() != ambient_dim) throw MalformedInput("subspace ambient dimension mismatch");
  std::vector<bool> is_pivot(ambient_dim, false);
  for (size_t c : sub.pivots()) is_pivot[c] = true;
  std::vector<FpVector> out;
  for (size_t k = 0; k < ambient_dim; ++k) {
    if (is_pivot[k]) continue;
    FpVector e(ambient_dim, 0);
    e[k] = 1;
    out.push_back(std::move(e));
  }
  return out;
}

// Same, for a raw list that must be linearly independent.
inline std::vector<FpVector> quotient_basis(uint32_t p, size_t ambient_dim, std::span<const FpVector> sub_basis) {
  Subspace s(p, ambient_dim);
  for (const auto& v : sub_basis)
    if (!s.insert(v)) throw MalformedInput("subspace basis is not linearly independent");
  return quotient_basis(ambient_dim, s);
}

// Z/B for B ⊆ Z, with representatives reduced against B.
class Subquotient {
 public:
  Subquotient() = default;
  Subquotient(const Subspace& cycles, Subspace boundaries)
      : boundaries_(std::move(boundaries)), reps_(cycles.p(), cycles.ambient()) {
    if (!cycles.contains_subspace(boundaries_)) throw ConsistencyError("subquotient: B is not contained in Z");
    for (const auto& z : cycles.basis()) reps_.insert(boundaries_.reduce(z));
  }

  size_t dim() const { return reps_.dim(); }
  const std::vector<FpVector>& representatives() const { return reps_.basis(); }
  const Subspace& boundaries() const { return boundaries_; }

  // Coordinates of the class of a cycle z.
  FpVector coordinates(const FpVector& z) const { return reps_.coordinates(boundaries_.reduce(z)); }

  bool is_boundary(const FpVector& z) const { return boundaries_.contains(z); }

 private:
  Subspace boundaries_;
  Subspace reps_;
};

// Inverse of a square invertible matrix.
inline FpMatrix inverse(const FpMatrix& m) {
  if (m.rows() != m.cols()) throw MalformedInput("inverse of non-square matrix");
  const size_t n = m.rows();
  FpMatrix aug(m.p(), n, 2 * n);
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < n; ++c) aug.set(r, c, m.at(r, c));
    aug.set(r, n + r, 1);
  }
  RrefResult rr = rref(aug);
  if (rr.rank < n || (n > 0 && rr.pivots[n - 1] != n - 1)) throw MalformedInput("matrix is singular");
  FpMatrix out(m.p(), n, n);
  for (size_t r = 0; r < n; ++r)
    for (size_t c = 0; c < n; ++c) out.set(r, c, rr.matrix.at(r, n + c));
  return out;
}

// Rows phi_k with phi_k(v_j) = delta_kj for independent columns v_j.
inline FpMatrix left_inverse(uint32_t p, size_t ambient, const std::vector<FpVector>& independent) {
  std::vector<FpVector> cols = independent;
  for (auto& e : quotient_basis(p, ambient, independent)) cols.push_back(std::move(e));
  FpMatrix inv = inverse(FpMatrix::from_columns(p, ambient, cols));
  FpMatrix out(p, independent.size(), ambient);
  for (size_t r = 0; r < independent.size(); ++r)
    for (size_t c = 0; c < ambient; ++c) out.set(r, c, inv.at(r, c));
  return out;
}

inline std::string to_string(const FpVector& v) {
  std::string s = "(";
  for (size_t k = 0; k < v.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(v[k]);
  }
  return s + ")";
}

}  // namespace bpsplit
