#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace magnls {

using cplx = std::complex<double>;

// The cast in the extent keeps these aliases out of template deduction, so
// dimension is always pinned by the model/config argument.
template <int N> using Vec = std::array<double, static_cast<std::size_t>(N)>;
// mat(i, j) = d_j A_i for Jacobians; plain row-major otherwise
template <int N> using Mat = std::array<Vec<N>, static_cast<std::size_t>(N)>;
// rank3[i](j, k) = d_{jk} A_i
template <int N> using Rank3 = std::array<Mat<N>, static_cast<std::size_t>(N)>;
// rank4[i][j](k, l) = d_{jkl} A_i
template <int N> using Rank4 = std::array<Rank3<N>, static_cast<std::size_t>(N)>;

template <int N> inline Vec<N> zero_vec() {
  Vec<N> v{};
  return v;
}

template <std::size_t M> inline double dot(const std::array<double, M>& a,
                                           const std::array<double, M>& b) {
  double s = 0;
  for (std::size_t i = 0; i < M; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t M> inline double norm2(const std::array<double, M>& a) {
  return std::sqrt(dot(a, a));
}

template <std::size_t M>
inline std::array<double, M> operator+(const std::array<double, M>& a,
                                       const std::array<double, M>& b) {
  std::array<double, M> r;
  for (std::size_t i = 0; i < M; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t M>
inline std::array<double, M> operator-(const std::array<double, M>& a,
                                       const std::array<double, M>& b) {
  std::array<double, M> r;
  for (std::size_t i = 0; i < M; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t M>
inline std::array<double, M> operator*(double s, const std::array<double, M>& a) {
  std::array<double, M> r;
  for (std::size_t i = 0; i < M; ++i) r[i] = s * a[i];
  return r;
}

// Surface area of the unit sphere S^{N-1}; N=1 counts the two endpoints.
inline double unit_sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
    default: throw std::invalid_argument("unit_sphere_area: dim must be 1, 2 or 3");
  }
}

struct NonSubcritical : std::invalid_argument {
  explicit NonSubcritical(const std::string& m) : std::invalid_argument(m) {}
};
struct BracketFailure : std::runtime_error {
  explicit BracketFailure(const std::string& m) : std::runtime_error(m) {}
};
struct UnknownPreset : std::invalid_argument {
  explicit UnknownPreset(const std::string& m) : std::invalid_argument(m) {}
};
struct MissingParam : std::invalid_argument {
  explicit MissingParam(const std::string& m) : std::invalid_argument(m) {}
};
struct BadGeometry : std::invalid_argument {
  explicit BadGeometry(const std::string& m) : std::invalid_argument(m) {}
};
struct KrylovStall : std::runtime_error {
  explicit KrylovStall(const std::string& m) : std::runtime_error(m) {}
};
struct ContractionFailure : std::runtime_error {
  explicit ContractionFailure(const std::string& m) : std::runtime_error(m) {}
};
struct OuterDivergence : std::runtime_error {
  explicit OuterDivergence(const std::string& m) : std::runtime_error(m) {}
};
struct SeedRejected : std::runtime_error {
  explicit SeedRejected(const std::string& m) : std::runtime_error(m) {}
};
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& m) : std::invalid_argument(m) {}
};
struct IllConditionedFit : std::runtime_error {
  explicit IllConditionedFit(const std::string& m) : std::runtime_error(m) {}
};

// FNV-1a, used for config provenance hashes.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// eps sweep of a norm or coefficient plus its log-log least-squares slope.
struct ScalingReport {
  std::vector<double> eps_list;  // strictly decreasing
  std::vector<double> values;
  double fitted_slope = 0;
  double fit_residual = 0;
};

// Least-squares slope of log(values) vs log(abscissae).
struct LogLogFit {
  double slope = 0;
  double intercept = 0;
  double max_abs_residual = 0;
};

inline LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_loglog: need >= 2 matching samples");
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw std::invalid_argument("fit_loglog: positive data required");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double dn = static_cast<double>(n);
  const double denom = dn * sxx - sx * sx;
  LogLogFit f;
  f.slope = (dn * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / dn;
  for (std::size_t i = 0; i < n; ++i)
    f.max_abs_residual = std::max(f.max_abs_residual, std::abs(ly[i] - f.slope * lx[i] - f.intercept));
  return f;
}

}  // namespace magnls
