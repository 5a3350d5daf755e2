#pragma once

// Vector potential presets with analytic derivatives up to third order, the
// antisymmetric field matrix B, its Frobenius invariant, gauge transforms and
// critical points of |B|_F^2.

#include <functional>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "magnls/common.hpp"

namespace magnls {

template <int N>
struct PotentialModel {
  std::string preset_tag;
  std::function<Vec<N>(const Vec<N>&)> eval;
  std::function<Mat<N>(const Vec<N>&)> jac;     // (i,j) = d_j A_i
  std::function<Rank3<N>(const Vec<N>&)> hess;  // [i](j,k) = d_{jk} A_i
  std::function<Rank4<N>(const Vec<N>&)> third; // [i][j](k,l) = d_{jkl} A_i
  double working_halfwidth = 3.0;               // box [-w, w]^N

  double divergence(const Vec<N>& x) const {
    Mat<N> j = jac(x);
    double d = 0;
    for (int i = 0; i < N; ++i) d += j[i][i];
    return d;
  }
};

template <int N>
struct FieldMatrix {
  Mat<N> entries;  // entries[j][k] = d_j A_k - d_k A_j
  double scalar_b() const {
    static_assert(N >= 2, "scalar field component needs N >= 2");
    return entries[0][1];
  }
};

template <int N>
FieldMatrix<N> field_at(const PotentialModel<N>& model, const Vec<N>& x) {
  Mat<N> j = model.jac(x);
  FieldMatrix<N> fm{};
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) fm.entries[a][b] = j[b][a] - j[a][b];
  return fm;
}

template <int N>
double frobenius_sq(const FieldMatrix<N>& fm) {
  double s = 0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) s += fm.entries[a][b] * fm.entries[a][b];
  return s;
}

// sum_{i,j} (d_i A_j - d_j A_i)^2; identical to frobenius_sq(field_at(.)).
template <int N>
double curl_invariant(const PotentialModel<N>& model, const Vec<N>& x) {
  return frobenius_sq(field_at(model, x));
}

namespace detail {

inline double require_param(const std::map<std::string, double>& params, const std::string& key,
                            const std::string& preset) {
  auto it = params.find(key);
  if (it == params.end())
    throw MissingParam("make_potential: preset '" + preset + "' requires param '" + key + "'");
  return it->second;
}

// Gaussian envelope derivatives at z: g = exp(-|z|^2).
template <int N>
struct GaussDerivs {
  double g;
  Vec<N> g1;
  Mat<N> g2;
  Rank3<N> g3;  // [j](k,l) = d_{jkl} g
  explicit GaussDerivs(const Vec<N>& z) {
    g = std::exp(-dot<N>(z, z));
    for (int j = 0; j < N; ++j) g1[j] = -2.0 * z[j] * g;
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k) g2[j][k] = (4.0 * z[j] * z[k] - 2.0 * (j == k)) * g;
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l)
          g3[j][k][l] = (-8.0 * z[j] * z[k] * z[l] +
                         4.0 * ((j == k) * z[l] + (j == l) * z[k] + (k == l) * z[j])) *
                        g;
  }
};

// Rotational gaussian bump centered at c: A_i = P_i(z) g(z), z = x - c, with
// P_1 = -z_2, P_2 = z_1, other components zero. dP[i][j] = d_j P_i.
template <int N>
struct BumpAt {
  Vec<N> a;
  Mat<N> j;
  Rank3<N> h;
  Rank4<N> t;
  BumpAt(const Vec<N>& x, const Vec<N>& c) {
    static_assert(N >= 2);
    Vec<N> z = x - c;
    GaussDerivs<N> G(z);
    Vec<N> P{};
    Mat<N> dP{};
    P[0] = -z[1];
    P[1] = z[0];
    dP[0][1] = -1.0;
    dP[1][0] = 1.0;
    for (int i = 0; i < N; ++i) {
      a[i] = P[i] * G.g;
      for (int jj = 0; jj < N; ++jj) j[i][jj] = dP[i][jj] * G.g + P[i] * G.g1[jj];
      for (int jj = 0; jj < N; ++jj)
        for (int k = 0; k < N; ++k)
          h[i][jj][k] = dP[i][jj] * G.g1[k] + dP[i][k] * G.g1[jj] + P[i] * G.g2[jj][k];
      for (int jj = 0; jj < N; ++jj)
        for (int k = 0; k < N; ++k)
          for (int l = 0; l < N; ++l)
            t[i][jj][k][l] = dP[i][jj] * G.g2[k][l] + dP[i][k] * G.g2[jj][l] +
                             dP[i][l] * G.g2[jj][k] + P[i] * G.g3[jj][k][l];
    }
  }
};

template <int N>
Vec<N> axis_offset(double d) {
  Vec<N> c{};
  c[0] = d;
  return c;
}

}  // namespace detail

template <int N>
PotentialModel<N> make_potential(const std::string& preset,
                                 const std::map<std::string, double>& params = {}) {
  PotentialModel<N> m;
  m.preset_tag = preset;
  if (preset == "constant") {
    Vec<N> a;
    static const char* keys[] = {"a1", "a2", "a3"};
    for (int i = 0; i < N; ++i) a[i] = detail::require_param(params, keys[i], preset);
    m.eval = [a](const Vec<N>&) { return a; };
    m.jac = [](const Vec<N>&) { return Mat<N>{}; };
    m.hess = [](const Vec<N>&) { return Rank3<N>{}; };
    m.third = [](const Vec<N>&) { return Rank4<N>{}; };
    return m;
  }
  if (preset == "landau") {
    static_assert(N >= 1);
    if constexpr (N < 2) {
      throw UnknownPreset("make_potential: 'landau' needs dim >= 2");
    } else {
      double b = detail::require_param(params, "b", preset);
      m.eval = [b](const Vec<N>& x) {
        Vec<N> a{};
        a[0] = -b * x[1] / 2.0;
        a[1] = b * x[0] / 2.0;
        return a;
      };
      m.jac = [b](const Vec<N>&) {
        Mat<N> j{};
        j[0][1] = -b / 2.0;
        j[1][0] = b / 2.0;
        return j;
      };
      m.hess = [](const Vec<N>&) { return Rank3<N>{}; };
      m.third = [](const Vec<N>&) { return Rank4<N>{}; };
      return m;
    }
  }
  if (preset == "gaussian_bump") {
    if constexpr (N < 2) {
      throw UnknownPreset("make_potential: 'gaussian_bump' needs dim >= 2");
    } else {
      Vec<N> c{};
      m.eval = [c](const Vec<N>& x) { return detail::BumpAt<N>(x, c).a; };
      m.jac = [c](const Vec<N>& x) { return detail::BumpAt<N>(x, c).j; };
      m.hess = [c](const Vec<N>& x) { return detail::BumpAt<N>(x, c).h; };
      m.third = [c](const Vec<N>& x) { return detail::BumpAt<N>(x, c).t; };
      return m;
    }
  }
  if (preset == "double_bump") {
    if constexpr (N < 2) {
      throw UnknownPreset("make_potential: 'double_bump' needs dim >= 2");
    } else {
      double d = detail::require_param(params, "sep", preset);
      Vec<N> cp = detail::axis_offset<N>(d), cm = detail::axis_offset<N>(-d);
      m.eval = [cp, cm](const Vec<N>& x) {
        return detail::BumpAt<N>(x, cp).a + detail::BumpAt<N>(x, cm).a;
      };
      m.jac = [cp, cm](const Vec<N>& x) {
        Mat<N> j = detail::BumpAt<N>(x, cp).j, j2 = detail::BumpAt<N>(x, cm).j;
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b) j[a][b] += j2[a][b];
        return j;
      };
      m.hess = [cp, cm](const Vec<N>& x) {
        Rank3<N> h = detail::BumpAt<N>(x, cp).h, h2 = detail::BumpAt<N>(x, cm).h;
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b)
            for (int c = 0; c < N; ++c) h[a][b][c] += h2[a][b][c];
        return h;
      };
      m.third = [cp, cm](const Vec<N>& x) {
        Rank4<N> t = detail::BumpAt<N>(x, cp).t, t2 = detail::BumpAt<N>(x, cm).t;
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b)
            for (int c = 0; c < N; ++c)
              for (int e = 0; e < N; ++e) t[a][b][c][e] += t2[a][b][c][e];
        return t;
      };
      return m;
    }
  }
  if (preset == "poly_saddle") {
    if constexpr (N != 2) {
      throw UnknownPreset("make_potential: 'poly_saddle' is 2-D only");
    } else {
      // A = (0, 2x1 + x1^3/3 - x2^2 x1) gives B = 2 + x1^2 - x2^2.
      m.eval = [](const Vec<2>& x) {
        return Vec<2>{0.0, 2.0 * x[0] + x[0] * x[0] * x[0] / 3.0 - x[1] * x[1] * x[0]};
      };
      m.jac = [](const Vec<2>& x) {
        Mat<2> j{};
        j[1][0] = 2.0 + x[0] * x[0] - x[1] * x[1];
        j[1][1] = -2.0 * x[1] * x[0];
        return j;
      };
      m.hess = [](const Vec<2>& x) {
        Rank3<2> h{};
        h[1][0][0] = 2.0 * x[0];
        h[1][0][1] = h[1][1][0] = -2.0 * x[1];
        h[1][1][1] = -2.0 * x[0];
        return h;
      };
      m.third = [](const Vec<2>&) {
        Rank4<2> t{};
        t[1][0][0][0] = 2.0;
        t[1][0][1][1] = t[1][1][0][1] = t[1][1][1][0] = -2.0;
        return t;
      };
      return m;
    }
  }
  throw UnknownPreset("make_potential: unknown preset '" + preset + "'");
}

// A -> A + grad f. Presets: linear f = c.x (params c1..cN), quadratic
// f = x^T M x / 2 applied literally as grad f = M x (params m11..mNN); the
// field is unchanged only when M is symmetric.
template <int N>
PotentialModel<N> gauge_shift(const PotentialModel<N>& model, const std::string& f_preset,
                              const std::map<std::string, double>& params) {
  PotentialModel<N> out = model;
  out.preset_tag = model.preset_tag + "+" + f_preset;
  if (f_preset == "linear") {
    Vec<N> c;
    static const char* keys[] = {"c1", "c2", "c3"};
    for (int i = 0; i < N; ++i) c[i] = detail::require_param(params, keys[i], f_preset);
    auto base = model.eval;
    out.eval = [base, c](const Vec<N>& x) { return base(x) + c; };
    return out;
  }
  if (f_preset == "quadratic") {
    Mat<N> M;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        M[i][j] = detail::require_param(
            params, "m" + std::to_string(i + 1) + std::to_string(j + 1), f_preset);
    auto base_eval = model.eval;
    auto base_jac = model.jac;
    out.eval = [base_eval, M](const Vec<N>& x) {
      Vec<N> a = base_eval(x);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) a[i] += M[i][j] * x[j];
      return a;
    };
    out.jac = [base_jac, M](const Vec<N>& x) {
      Mat<N> j = base_jac(x);
      for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) j[a][b] += M[a][b];
      return j;
    };
    return out;
  }
  throw UnknownPreset("gauge_shift: unknown f_preset '" + f_preset + "'");
}

// Recenter the gauge so A vanishes at x0 (linear shift by -A(x0)); the field
// matrix is unchanged and the phase-resolution guard becomes trivial there.
template <int N>
PotentialModel<N> recenter_gauge(const PotentialModel<N>& model, const Vec<N>& x0) {
  Vec<N> a0 = model.eval(x0);
  std::map<std::string, double> params;
  static const char* keys[] = {"c1", "c2", "c3"};
  for (int i = 0; i < N; ++i) params[keys[i]] = -a0[i];
  return gauge_shift(model, "linear", params);
}

// ---- critical points of |B|_F^2 --------------------------------------------

enum class CritKind { Max, Min, Saddle, Degenerate };

inline const char* crit_kind_name(CritKind k) {
  switch (k) {
    case CritKind::Max: return "max";
    case CritKind::Min: return "min";
    case CritKind::Saddle: return "saddle";
    default: return "degenerate";
  }
}

template <int N>
struct CriticalPoint {
  Vec<N> location;
  CritKind kind;
  Vec<N> hess_eigs;
  double value;  // |B|_F^2 there
};

template <int N>
struct CriticalPointScan {
  std::vector<CriticalPoint<N>> points;
  bool constant_field = false;
  int seeds_total = 0;
  int seeds_failed = 0;
};

namespace detail {

template <int N>
Vec<N> frob_grad(const PotentialModel<N>& m, const Vec<N>& x) {
  Mat<N> J = m.jac(x);
  Rank3<N> H = m.hess(x);
  Vec<N> g{};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double B = J[j][i] - J[i][j];
      for (int k = 0; k < N; ++k) g[k] += 2.0 * B * (H[j][i][k] - H[i][j][k]);
    }
  return g;
}

template <int N>
Mat<N> frob_hess(const PotentialModel<N>& m, const Vec<N>& x) {
  Mat<N> J = m.jac(x);
  Rank3<N> H = m.hess(x);
  Rank4<N> T = m.third(x);
  Mat<N> out{};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double B = J[j][i] - J[i][j];
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) {
          double Ck = H[j][i][k] - H[i][j][k];
          double Cl = H[j][i][l] - H[i][j][l];
          double D = T[j][i][k][l] - T[i][j][k][l];
          out[k][l] += 2.0 * (Ck * Cl + B * D);
        }
    }
  return out;
}

}  // namespace detail

template <int N>
CriticalPointScan<N> find_field_critical_points(const PotentialModel<N>& model,
                                                const Vec<N>& box_lo, const Vec<N>& box_hi,
                                                int seeds_per_axis = 9) {
  using EMat = Eigen::Matrix<double, N, N>;
  using EVec = Eigen::Matrix<double, N, 1>;
  const double grad_tol = 1e-10;
  const double degen_tol = 1e-8;

  CriticalPointScan<N> scan;

  // Constant-field detection at a handful of probes.
  {
    bool constant = true;
    for (int probe = 0; probe < 5 && constant; ++probe) {
      Vec<N> x;
      for (int i = 0; i < N; ++i)
        x[i] = box_lo[i] + (box_hi[i] - box_lo[i]) * (0.13 + 0.19 * probe + 0.07 * i);
      Vec<N> g = detail::frob_grad(model, x);
      Mat<N> h = detail::frob_hess(model, x);
      for (int i = 0; i < N; ++i) {
        if (std::abs(g[i]) > 1e-12) constant = false;
        for (int j = 0; j < N; ++j)
          if (std::abs(h[i][j]) > 1e-10) constant = false;
      }
    }
    if (constant) {
      scan.constant_field = true;
      Vec<N> c;
      for (int i = 0; i < N; ++i) c[i] = 0.5 * (box_lo[i] + box_hi[i]);
      scan.points.push_back({c, CritKind::Degenerate, zero_vec<N>(), curl_invariant(model, c)});
      return scan;
    }
  }

  std::vector<Vec<N>> seeds;
  {
    std::array<int, N> idx{};
    bool done = false;
    while (!done) {
      Vec<N> s;
      for (int i = 0; i < N; ++i)
        s[i] = box_lo[i] + (box_hi[i] - box_lo[i]) * (idx[i] + 0.5) / seeds_per_axis;
      seeds.push_back(s);
      int axis = 0;
      while (axis < N && ++idx[axis] == seeds_per_axis) idx[axis++] = 0;
      done = axis == N;
    }
  }
  scan.seeds_total = static_cast<int>(seeds.size());

  for (const Vec<N>& seed : seeds) {
    Vec<N> x = seed;
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      Vec<N> g = detail::frob_grad(model, x);
      double gn = norm2<N>(g);
      if (gn < grad_tol) {
        converged = true;
        break;
      }
      Mat<N> h = detail::frob_hess(model, x);
      EMat eh;
      EVec eg;
      for (int i = 0; i < N; ++i) {
        eg(i) = g[i];
        for (int j = 0; j < N; ++j) eh(i, j) = h[i][j];
      }
      Eigen::FullPivLU<EMat> lu(eh);
      if (!lu.isInvertible()) break;
      EVec step = lu.solve(eg);
      double sn = step.norm();
      if (sn > 1.0) step *= 1.0 / sn;  // trust region: Newton step capped at 1
      for (int i = 0; i < N; ++i) x[i] -= step(i);
      bool inside = true;
      for (int i = 0; i < N; ++i)
        inside = inside && x[i] > box_lo[i] - 1.0 && x[i] < box_hi[i] + 1.0;
      if (!inside) break;
    }
    if (!converged) {
      ++scan.seeds_failed;
      continue;
    }
    bool inside = true;
    for (int i = 0; i < N; ++i) inside = inside && x[i] >= box_lo[i] && x[i] <= box_hi[i];
    if (!inside) continue;
    bool dup = false;
    for (const auto& pt : scan.points)
      if (norm2<N>(pt.location - x) < 1e-6) dup = true;
    if (dup) continue;

    Mat<N> h = detail::frob_hess(model, x);
    EMat eh;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) eh(i, j) = 0.5 * (h[i][j] + h[j][i]);
    Eigen::SelfAdjointEigenSolver<EMat> es(eh);
    Vec<N> eigs;
    int pos = 0, neg = 0, tiny = 0;
    for (int i = 0; i < N; ++i) {
      eigs[i] = es.eigenvalues()(i);
      if (std::abs(eigs[i]) < degen_tol)
        ++tiny;
      else if (eigs[i] > 0)
        ++pos;
      else
        ++neg;
    }
    CritKind kind = tiny > 0            ? CritKind::Degenerate
                    : (pos == N)        ? CritKind::Min
                    : (neg == N)        ? CritKind::Max
                                        : CritKind::Saddle;
    scan.points.push_back({x, kind, eigs, curl_invariant(model, x)});
  }
  return scan;
}

}  // namespace magnls
