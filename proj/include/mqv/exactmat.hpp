#pragma once

#include "mqv/common.hpp"

namespace mqv {

/// Gaussian rational scalar a + b*i with exact arithmetic; enough for
/// hand-checkable instances of the block factorisations.
struct RatCx {
  Rational re{0}, im{0};

  RatCx() = default;
  RatCx(long long n) : re(n) {}
  RatCx(Rational r, Rational i = Rational(0)) : re(r), im(i) {}

  bool is_zero() const { return re.is_zero() && im.is_zero(); }
  Cx value() const { return Cx(re.value(), im.value()); }
  bool operator==(const RatCx& o) const { return re == o.re && im == o.im; }

  RatCx operator+(const RatCx& o) const { return {re + o.re, im + o.im}; }
  RatCx operator-() const { return {-re, -im}; }
  RatCx operator-(const RatCx& o) const { return *this + (-o); }
  RatCx operator*(const RatCx& o) const {
    return {re * o.re + (-(im * o.im)), re * o.im + im * o.re};
  }
  RatCx inverse() const {
    Rational nrm = re * re + im * im;
    if (nrm.is_zero()) throw Error("inverse of zero");
    return {re * nrm.inverse(), -(im * nrm.inverse())};
  }
  RatCx operator/(const RatCx& o) const { return *this * o.inverse(); }
};

/// Dense matrix over the Gaussian rationals with just enough operations for
/// exact cross-checks of small worked examples.
class ExactMat {
 public:
  ExactMat(int rows = 0, int cols = 0) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static ExactMat identity(int n) {
    ExactMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = RatCx(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  RatCx& operator()(int r, int c) { return data_[r * cols_ + c]; }
  const RatCx& operator()(int r, int c) const { return data_[r * cols_ + c]; }

  ExactMat operator+(const ExactMat& o) const {
    check_same_shape(o);
    ExactMat out(rows_, cols_);
    for (size_t k = 0; k < data_.size(); ++k) out.data_[k] = data_[k] + o.data_[k];
    return out;
  }
  ExactMat operator-(const ExactMat& o) const {
    check_same_shape(o);
    ExactMat out(rows_, cols_);
    for (size_t k = 0; k < data_.size(); ++k) out.data_[k] = data_[k] - o.data_[k];
    return out;
  }
  ExactMat operator*(const ExactMat& o) const {
    if (cols_ != o.rows_) throw Error("exact matrix product shape mismatch");
    ExactMat out(rows_, o.cols_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < o.cols_; ++c) {
        RatCx acc;
        for (int k = 0; k < cols_; ++k) acc = acc + (*this)(r, k) * o(k, c);
        out(r, c) = acc;
      }
    return out;
  }

  /// Gauss-Jordan inverse; throws on singular input.
  ExactMat inverse() const {
    if (rows_ != cols_) throw Error("exact inverse of a non-square matrix");
    ExactMat a = *this;
    ExactMat inv = identity(rows_);
    for (int col = 0; col < cols_; ++col) {
      int pivot = -1;
      for (int r = col; r < rows_; ++r)
        if (!a(r, col).is_zero()) {
          pivot = r;
          break;
        }
      if (pivot < 0) throw Error("exact matrix is singular");
      if (pivot != col) {
        for (int c = 0; c < cols_; ++c) {
          std::swap(a(pivot, c), a(col, c));
          std::swap(inv(pivot, c), inv(col, c));
        }
      }
      RatCx p = a(col, col).inverse();
      for (int c = 0; c < cols_; ++c) {
        a(col, c) = a(col, c) * p;
        inv(col, c) = inv(col, c) * p;
      }
      for (int r = 0; r < rows_; ++r) {
        if (r == col || a(r, col).is_zero()) continue;
        RatCx f = a(r, col);
        for (int c = 0; c < cols_; ++c) {
          a(r, c) = a(r, c) - f * a(col, c);
          inv(r, c) = inv(r, c) - f * inv(col, c);
        }
      }
    }
    return inv;
  }

  RatCx determinant() const {
    if (rows_ != cols_) throw Error("exact determinant of a non-square matrix");
    ExactMat a = *this;
    RatCx det(1);
    for (int col = 0; col < cols_; ++col) {
      int pivot = -1;
      for (int r = col; r < rows_; ++r)
        if (!a(r, col).is_zero()) {
          pivot = r;
          break;
        }
      if (pivot < 0) return RatCx(0);
      if (pivot != col) {
        for (int c = 0; c < cols_; ++c) std::swap(a(pivot, c), a(col, c));
        det = -det;
      }
      det = det * a(col, col);
      RatCx p = a(col, col).inverse();
      for (int r = col + 1; r < rows_; ++r) {
        RatCx f = a(r, col) * p;
        for (int c = col; c < cols_; ++c) a(r, c) = a(r, c) - f * a(col, c);
      }
    }
    return det;
  }

  bool operator==(const ExactMat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

  Mat value() const {
    Mat out(rows_, cols_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c) out(r, c) = (*this)(r, c).value();
    return out;
  }

 private:
  void check_same_shape(const ExactMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw Error("exact matrix shape mismatch");
  }

  int rows_, cols_;
  std::vector<RatCx> data_;
};

}  // namespace mqv
