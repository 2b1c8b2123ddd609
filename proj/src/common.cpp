#include "mqv/common.hpp"

#include <sstream>

#include <Eigen/SVD>

namespace mqv {

int numerical_rank(const Mat& m, double rel_tol, bool strict_gap) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  double top = sv(0);
  if (top == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * top) ++r;
  if (strict_gap && r > 0 && r < sv.size()) {
    double above = sv(r - 1), below = sv(r);
    if (below > 0 && above / below < 10.0)
      throw IndeterminateError("numerical rank ambiguous: singular values " +
                               std::to_string(above) + " / " + std::to_string(below));
  }
  return r;
}

bool invertible(const Mat& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.rows() == 0) return true;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) > rel_tol * sv(0);
}

Mat randn_complex(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, M_SQRT1_2);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = Cx(g(rng), g(rng));
  return m;
}

Mat randn_invertible(int n, std::mt19937_64& rng) {
  for (;;) {
    Mat m = randn_complex(n, n, rng);
    if (invertible(m, 1e-3)) return m;
  }
}

Mat conjugate_well_conditioned(const Mat& m, std::mt19937_64& rng) {
  int n = int(m.rows());
  Mat g = randn_complex(n, n, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat c = q * (Mat::Identity(n, n) + 0.2 * randn_complex(n, n, rng));
  return c * m * c.inverse();
}

QScalar random_exact_scalar(std::mt19937_64& rng, bool allow_phase) {
  long long num = 1 + int(rng() % 6);
  long long den = 1 + int(rng() % 6);
  QScalar q = QScalar(ExactScalar::from_rational(Rational(num, den)));
  if (allow_phase && rng() % 3 == 0) {
    long long m = 2 + int(rng() % 5);
    long long k = 1 + int(rng() % uint64_t(m - 1));
    q = q * QScalar(ExactScalar{Rational(1), Rational(k, m).mod1()});
  }
  return q;
}

Vec char_poly(const Mat& m) {
  // Faddeev-LeVerrier; sizes here are tiny.
  int n = int(m.rows());
  Vec c(n + 1);
  c(0) = 1.0;
  Mat a = Mat::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    a = m * a + Cx(c(k - 1)) * Mat::Identity(n, n);
    c(k) = -(m * a).trace() / double(k);
  }
  return c;
}

std::string format_cx(Cx z) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << z.real() << "," << z.imag() << ")";
  return os.str();
}

}  // namespace mqv
