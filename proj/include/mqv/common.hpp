#pragma once

#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mqv {

using Cx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using IntMat = Eigen::MatrixXi;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a quantity is too close to a decision threshold to classify.
class IndeterminateError : public Error {
 public:
  explicit IndeterminateError(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  int line;
};

// ---------------------------------------------------------------------------
// Exact multiplicative scalars.
//
// Parameters only ever get multiplied, inverted and raised to integer powers,
// so a scalar of the form  r * exp(2*pi*i*t)  with r, t rational is closed
// under everything we need.  This covers rational literals (t in {0, 1/2})
// and roots of unity exactly.

struct Rational {
  long long num = 0;
  long long den = 1;  // > 0, gcd(|num|, den) = 1

  Rational() = default;
  Rational(long long n, long long d = 1) : num(n), den(d) { reduce(); }

  void reduce() {
    if (den == 0) throw Error("rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  bool is_zero() const { return num == 0; }
  double value() const { return double(num) / double(den); }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }

  static long long checked_mul(long long a, long long b) {
    __int128 p = __int128(a) * b;
    if (p > __int128(std::numeric_limits<long long>::max()) ||
        p < __int128(std::numeric_limits<long long>::min()))
      throw Error("rational overflow");
    return (long long)p;
  }

  Rational operator*(const Rational& o) const {
    Rational a(num, o.den), b(o.num, den);  // cross-reduce first
    return Rational(checked_mul(a.num, b.num), checked_mul(a.den, b.den));
  }
  Rational operator+(const Rational& o) const {
    long long g = std::gcd(den, o.den);
    long long l = checked_mul(den / g, o.den);
    return Rational(checked_mul(num, l / den) + checked_mul(o.num, l / o.den), l);
  }
  Rational operator-() const { return Rational(-num, den); }
  Rational inverse() const {
    if (num == 0) throw Error("inverse of zero rational");
    return Rational(den, num);
  }
  Rational pow(long long e) const {
    Rational base = e >= 0 ? *this : inverse();
    if (e < 0) e = -e;
    Rational out(1);
    for (; e > 0; --e) out = out * base;
    return out;
  }
  // reduce mod 1 into [0,1); used for angles
  Rational mod1() const {
    long long r = num % den;
    if (r < 0) r += den;
    return Rational(r, den);
  }
};

/// r * exp(2*pi*i*t) with r >= 0 rational and t rational in [0,1).
struct ExactScalar {
  Rational modulus{1};
  Rational turn{0};

  static ExactScalar one() { return {}; }
  static ExactScalar from_rational(const Rational& r) {
    ExactScalar s;
    if (r.num < 0) {
      s.modulus = -r;
      s.turn = Rational(1, 2);
    } else {
      s.modulus = r;
    }
    return s;
  }

  bool is_one() const { return modulus == Rational(1) && turn.is_zero(); }
  ExactScalar operator*(const ExactScalar& o) const {
    return {modulus * o.modulus, (turn + o.turn).mod1()};
  }
  ExactScalar inverse() const { return {modulus.inverse(), (-turn).mod1()}; }
  ExactScalar pow(long long e) const { return {modulus.pow(e), (turn * Rational(e)).mod1()}; }

  Cx value() const {
    double ang = 2.0 * M_PI * turn.value();
    return modulus.value() * Cx(std::cos(ang), std::sin(ang));
  }
};

/// A nonzero complex parameter, optionally carrying an exact representation.
/// Products, inverses and integer powers preserve exactness.
struct QScalar {
  Cx v{1.0, 0.0};
  std::optional<ExactScalar> exact;

  QScalar() = default;
  explicit QScalar(Cx value) : v(value) {}
  explicit QScalar(const ExactScalar& e) : v(e.value()), exact(e) {}
  static QScalar one() { return QScalar(ExactScalar::one()); }
  static QScalar from_rational(long long n, long long d = 1) {
    return QScalar(ExactScalar::from_rational(Rational(n, d)));
  }

  bool is_exact() const { return exact.has_value(); }
  QScalar operator*(const QScalar& o) const {
    QScalar r(v * o.v);
    if (exact && o.exact) {
      r.exact = *exact * *o.exact;
      r.v = r.exact->value();
    }
    return r;
  }
  QScalar inverse() const {
    QScalar r(1.0 / v);
    if (exact) {
      r.exact = exact->inverse();
      r.v = r.exact->value();
    }
    return r;
  }
  QScalar pow(long long e) const {
    QScalar r(std::pow(v, double(e)));
    if (e == 0) r.v = 1.0;
    if (exact) {
      r.exact = exact->pow(e);
      r.v = r.exact->value();
    }
    return r;
  }
  /// Equality with 1: exact when possible, within tol otherwise.
  bool is_one(double tol = 1e-10) const {
    if (exact) return exact->is_one();
    return std::abs(v - Cx(1.0)) < tol;
  }
};

// ---------------------------------------------------------------------------
// Numerics helpers.

inline double mat_scale(const Mat& m) { return std::max(1.0, m.norm()); }

/// Numerical rank with the given relative threshold.  Throws
/// IndeterminateError when singular values straddle the threshold without a
/// clear gap (factor < 10).
int numerical_rank(const Mat& m, double rel_tol = 1e-8, bool strict_gap = false);

/// True when the matrix is invertible by the relative smallest-singular-value
/// test used throughout (min sv > rel_tol * max sv).
bool invertible(const Mat& m, double rel_tol = 1e-8);

/// Random complex matrix with iid standard complex Gaussian entries.
Mat randn_complex(int rows, int cols, std::mt19937_64& rng);

/// Random invertible matrix (resampled until comfortably invertible).
Mat randn_invertible(int n, std::mt19937_64& rng);

/// Conjugation by a random unitary composed with a mild shear; keeps the
/// condition number small so spectra stay resolvable.
Mat conjugate_well_conditioned(const Mat& m, std::mt19937_64& rng);

/// Random exact scalar: a small rational, optionally times a root of unity.
QScalar random_exact_scalar(std::mt19937_64& rng, bool allow_phase = true);

/// Coefficients of det(tI - M), highest degree first; for spectra comparison.
Vec char_poly(const Mat& m);

std::string format_cx(Cx z);

}  // namespace mqv
