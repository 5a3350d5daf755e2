#pragma once

// Radial ground state w of  Dw - w + w^p = 0,  w'(0) = 0,  w(inf) = 0,
// solved by bisection shooting on w(0) with an adaptive RK integrator.

#include <algorithm>
#include <cstddef>
#include <limits>

#include "magnls/common.hpp"

namespace magnls {

struct RadialProfile {
  double p = 3.0;
  int dim = 2;
  double r_max = 30.0;      // requested integration horizon
  double spacing = 0.0;     // uniform grid spacing
  std::vector<double> r_grid;
  std::vector<double> w_vals;
  std::vector<double> dw_vals;
  double tail_amp = 0.0;    // w(r) ~ tail_amp * r^{-(dim-1)/2} * exp(-tail_rate*r)
  double tail_rate = 1.0;
  double ode_tol = 1e-10;

  double w0() const { return w_vals.front(); }
  double splice_radius() const { return r_grid.back(); }
};

namespace detail {

struct OdeState {
  double w;
  double v;  // w'
};

template <class F>
inline OdeState rk45_step(const F& f, double r, const OdeState& s, double h, double* err) {
  // Dormand-Prince 5(4)
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  auto ax = [&](double dw, double dv) { return OdeState{s.w + h * dw, s.v + h * dv}; };
  OdeState k1 = f(r, s);
  OdeState k2 = f(r + c2 * h, ax(a21 * k1.w, a21 * k1.v));
  OdeState k3 = f(r + c3 * h, ax(a31 * k1.w + a32 * k2.w, a31 * k1.v + a32 * k2.v));
  OdeState k4 = f(r + c4 * h, ax(a41 * k1.w + a42 * k2.w + a43 * k3.w,
                                 a41 * k1.v + a42 * k2.v + a43 * k3.v));
  OdeState k5 = f(r + c5 * h,
                  ax(a51 * k1.w + a52 * k2.w + a53 * k3.w + a54 * k4.w,
                     a51 * k1.v + a52 * k2.v + a53 * k3.v + a54 * k4.v));
  OdeState k6 = f(r + h, ax(a61 * k1.w + a62 * k2.w + a63 * k3.w + a64 * k4.w + a65 * k5.w,
                            a61 * k1.v + a62 * k2.v + a63 * k3.v + a64 * k4.v + a65 * k5.v));
  OdeState out{s.w + h * (b1 * k1.w + b3 * k3.w + b4 * k4.w + b5 * k5.w + b6 * k6.w),
               s.v + h * (b1 * k1.v + b3 * k3.v + b4 * k4.v + b5 * k5.v + b6 * k6.v)};
  if (err) {
    OdeState k7 = f(r + h, out);
    double ew = h * (e1 * k1.w + e3 * k3.w + e4 * k4.w + e5 * k5.w + e6 * k6.w + e7 * k7.w);
    double ev = h * (e1 * k1.v + e3 * k3.v + e4 * k4.v + e5 * k5.v + e6 * k6.v + e7 * k7.v);
    *err = std::max(std::abs(ew), std::abs(ev));
  }
  return out;
}

enum class Shot { Undershoot, Overshoot };

// Near r = 0 the singular (N-1)/r w' term is replaced by the Taylor expansion
// w = a + c2 r^2 + c4 r^4 with 2N c2 = a - a^p and 4(N+2) c4 = (1 - p a^{p-1}) c2.
struct TaylorStart {
  double c2, c4;
  TaylorStart(double a, double p, int dim) {
    c2 = (a - std::pow(a, p)) / (2.0 * dim);
    c4 = c2 * (1.0 - p * std::pow(a, p - 1.0)) / (4.0 * (dim + 2.0));
  }
  OdeState at(double r, double a) const {
    return OdeState{a + c2 * r * r + c4 * r * r * r * r, 2.0 * c2 * r + 4.0 * c4 * r * r * r};
  }
};

template <class F>
inline Shot classify_shot(const F& rhs, double a, double p, int dim, double r_max, double tol) {
  TaylorStart ts(a, p, dim);
  double r = 1e-3;
  OdeState s = ts.at(r, a);
  double h = 1e-3;
  const double atol = std::min(tol, 1e-10) * 1e-2;
  while (r < r_max) {
    h = std::min(h, r_max - r);
    double err = 0;
    OdeState snew = rk45_step(rhs, r, s, h, &err);
    if (err > atol && h > 1e-12) {
      h *= std::max(0.2, 0.9 * std::pow(atol / err, 0.2));
      continue;
    }
    r += h;
    s = snew;
    if (err > 0) h = std::min(h * std::min(5.0, 0.9 * std::pow(atol / err, 0.2)), 0.5);
    if (s.w <= 0.0) return Shot::Overshoot;
    if (s.v >= 0.0 && s.w <= 1.0) return Shot::Undershoot;
  }
  return Shot::Undershoot;  // never decayed within r_max
}

}  // namespace detail

inline RadialProfile solve_ground_state(double p, int dim, double r_max = 30.0,
                                        double tol = 1e-10) {
  if (p <= 1.0) throw NonSubcritical("solve_ground_state: requires p > 1");
  if (dim < 1 || dim > 3) throw std::invalid_argument("solve_ground_state: dim must be 1, 2 or 3");
  if (dim >= 3 && p >= double(dim + 2) / double(dim - 2))
    throw NonSubcritical("solve_ground_state: p >= (N+2)/(N-2) is not subcritical for dim >= 3");
  if (r_max < 20.0) throw std::invalid_argument("solve_ground_state: r_max must be >= 20");
  if (tol <= 0.0) throw std::invalid_argument("solve_ground_state: tol must be > 0");

  auto rhs = [p, dim](double r, detail::OdeState s) {
    return detail::OdeState{s.v, s.w - std::pow(std::abs(s.w), p - 1.0) * s.w -
                                     (dim - 1.0) / r * s.v};
  };

  // Bracket w(0): low end always undershoots (w < 1 turns up immediately),
  // widen the top geometrically if it fails to overshoot.
  double lo = 0.9;
  double hi = 5.0 * std::pow(10.0, 1.0 / (p - 1.0));
  if (detail::classify_shot(rhs, lo, p, dim, r_max, tol) != detail::Shot::Undershoot)
    throw BracketFailure("solve_ground_state: lower bracket end does not undershoot");
  int widen = 0;
  while (detail::classify_shot(rhs, hi, p, dim, r_max, tol) != detail::Shot::Overshoot) {
    hi *= 2.0;
    if (++widen > 20)
      throw BracketFailure("solve_ground_state: no overshoot found while widening the bracket; "
                           "check r_max and tol");
  }
  for (int it = 0; it < 300 && (hi - lo) > 2.0 * std::numeric_limits<double>::epsilon() * hi;
       ++it) {
    double mid = 0.5 * (lo + hi);
    if (detail::classify_shot(rhs, mid, p, dim, r_max, tol) == detail::Shot::Overshoot)
      hi = mid;
    else
      lo = mid;
  }
  const double a = 0.5 * (lo + hi);

  // Final pass: the spacing is a power of two so node radii are exact, and
  // fine enough that the 4th-order verification stencil's truncation stays
  // below the 10*tol residual budget even for the sharp dim = 3 profile.
  const double h = 1.0 / 1024.0;
  const std::size_t n_target = static_cast<std::size_t>(std::round((r_max - 2.0) / h)) + 1;
  RadialProfile prof;
  prof.p = p;
  prof.dim = dim;
  prof.r_max = r_max;
  prof.spacing = h;
  prof.ode_tol = tol;
  prof.r_grid.reserve(n_target);
  prof.w_vals.reserve(n_target);
  prof.dw_vals.reserve(n_target);

  // Substepped march (4 substeps per node, deep Taylor start at h/16) keeps
  // per-step integration error far below what the residual-verification
  // stencil amplifies by 1/h^2.
  detail::TaylorStart ts(a, p, dim);
  prof.r_grid.push_back(0.0);
  prof.w_vals.push_back(a);
  prof.dw_vals.push_back(0.0);
  double r = h / 16.0;
  detail::OdeState s = ts.at(r, a);
  for (int k = 1; k < 16; ++k) {
    s = detail::rk45_step(rhs, r, s, h / 16.0, nullptr);
    r += h / 16.0;
  }
  prof.r_grid.push_back(h);
  prof.w_vals.push_back(s.w);
  prof.dw_vals.push_back(s.v);
  r = h;
  const double w_floor = 1e-9;
  std::size_t cut = 0;  // first untrusted node, 0 = none
  while (prof.r_grid.size() < n_target) {
    for (int k = 0; k < 4; ++k) {
      s = detail::rk45_step(rhs, r, s, h / 4.0, nullptr);
      r += h / 4.0;
    }
    prof.r_grid.push_back(prof.r_grid.size() * h);
    prof.w_vals.push_back(s.w);
    prof.dw_vals.push_back(s.v);
    if (s.w <= 0.0 || s.v >= 0.0 || s.w < w_floor) {
      cut = prof.r_grid.size() - 1;
      break;
    }
  }
  // Shooting error grows like e^{+r} and reaches O(w) near the detected
  // upturn/floor radius; backing off 5 length units leaves a relative error
  // below ~1e-4 at the splice. The hard cap at r = 15 covers the case where
  // the integration reaches r_max - 2 before any trigger fires.
  {
    const std::size_t backoff = static_cast<std::size_t>(std::round(5.0 / h));
    const std::size_t cap = static_cast<std::size_t>(std::round(15.0 / h)) + 1;
    std::size_t keep = prof.r_grid.size();
    if (cut > 0) keep = cut > backoff ? cut - backoff : 8;
    keep = std::min(keep, cap);
    if (keep < 8) throw BracketFailure("solve_ground_state: profile collapsed near the origin");
    prof.r_grid.resize(keep);
    prof.w_vals.resize(keep);
    prof.dw_vals.resize(keep);
  }

  // Tail model fitted at the splice: exact continuity in value, rate from the
  // log-derivative. Linearizing the ODE at infinity forces rate -> 1.
  const double rs = prof.r_grid.back();
  const double ws = prof.w_vals.back();
  const double dws = prof.dw_vals.back();
  prof.tail_rate = -dws / ws - (dim - 1.0) / (2.0 * rs);
  prof.tail_amp = ws * std::pow(rs, (dim - 1.0) / 2.0) * std::exp(prof.tail_rate * rs);

  for (std::size_t i = 1; i + 1 < prof.w_vals.size(); ++i) {
    if (!(prof.w_vals[i] > 0.0) || !(prof.w_vals[i + 1] < prof.w_vals[i]))
      throw BracketFailure("solve_ground_state: profile not positive/monotone on the grid");
  }
  return prof;
}

// Value and derivative at any r >= 0: Hermite cubic on the grid, tail model
// beyond the splice radius.
inline std::pair<double, double> eval_profile(const RadialProfile& prof, double r) {
  if (r < 0.0) throw std::invalid_argument("eval_profile: r must be >= 0");
  const double rs = prof.splice_radius();
  if (r >= rs) {
    const double amp = prof.tail_amp * std::pow(r, -(prof.dim - 1.0) / 2.0);
    const double val = amp * std::exp(-prof.tail_rate * r);
    const double dval = -val * (prof.tail_rate + (prof.dim - 1.0) / (2.0 * r));
    return {val, dval};
  }
  const double h = prof.spacing;
  std::size_t i = std::min(static_cast<std::size_t>(r / h), prof.r_grid.size() - 2);
  const double t = (r - prof.r_grid[i]) / h;
  const double w0 = prof.w_vals[i], w1 = prof.w_vals[i + 1];
  const double d0 = prof.dw_vals[i] * h, d1 = prof.dw_vals[i + 1] * h;
  const double t2 = t * t, t3 = t2 * t;
  const double val = (2 * t3 - 3 * t2 + 1) * w0 + (t3 - 2 * t2 + t) * d0 +
                     (-2 * t3 + 3 * t2) * w1 + (t3 - t2) * d1;
  const double dval = ((6 * t2 - 6 * t) * w0 + (3 * t2 - 4 * t + 1) * d0 +
                       (-6 * t2 + 6 * t) * w1 + (3 * t2 - 2 * t) * d1) /
                      h;
  return {val, dval};
}

// w'(r)/r with the ODE-exact limit at r = 0.
inline double eval_dw_over_r(const RadialProfile& prof, double r) {
  if (r < 1e-8) return (prof.w0() - std::pow(prof.w0(), prof.p)) / prof.dim;
  return eval_profile(prof, r).second / r;
}

// Radial moment  int_0^inf r^k w(r)^q dr  (Simpson on the grid, tail model
// integrated numerically beyond the splice).
inline double profile_moment(const RadialProfile& prof, int k, double q) {
  const std::size_t n = prof.r_grid.size();
  const double h = prof.spacing;
  auto f = [&](std::size_t i) {
    return std::pow(prof.r_grid[i], k) * std::pow(prof.w_vals[i], q);
  };
  double s = 0.0;
  std::size_t m = (n - 1) - (n - 1) % 2;  // even interval count for Simpson
  for (std::size_t i = 0; i + 2 <= m; i += 2) s += h / 3.0 * (f(i) + 4.0 * f(i + 1) + f(i + 2));
  for (std::size_t i = m; i + 1 < n; ++i) s += 0.5 * h * (f(i) + f(i + 1));
  // tail
  const double rs = prof.splice_radius();
  const int nt = 4096;
  const double ht = 40.0 / nt;
  auto ft = [&](double r) {
    double w = prof.tail_amp * std::pow(r, -(prof.dim - 1.0) / 2.0) * std::exp(-prof.tail_rate * r);
    return std::pow(r, k) * std::pow(w, q);
  };
  for (int i = 0; i < nt; i += 2)
    s += ht / 3.0 * (ft(rs + i * ht) + 4.0 * ft(rs + (i + 1) * ht) + ft(rs + (i + 2) * ht));
  return s;
}

// int_{R^N} |y|^k w(|y|)^q dy via the radial oracle.
inline double profile_moment_nd(const RadialProfile& prof, int k, double q) {
  return unit_sphere_area(prof.dim) * profile_moment(prof, k + prof.dim - 1, q);
}

// int_{R^N} |grad w|^2 dy.
inline double profile_grad_sq_nd(const RadialProfile& prof) {
  const std::size_t n = prof.r_grid.size();
  const double h = prof.spacing;
  auto f = [&](std::size_t i) {
    return std::pow(prof.r_grid[i], prof.dim - 1) * prof.dw_vals[i] * prof.dw_vals[i];
  };
  double s = 0.0;
  std::size_t m = (n - 1) - (n - 1) % 2;
  for (std::size_t i = 0; i + 2 <= m; i += 2) s += h / 3.0 * (f(i) + 4.0 * f(i + 1) + f(i + 2));
  for (std::size_t i = m; i + 1 < n; ++i) s += 0.5 * h * (f(i) + f(i + 1));
  const double rs = prof.splice_radius();
  const int nt = 4096;
  const double ht = 40.0 / nt;
  auto ft = [&](double r) {
    auto [w, dw] = eval_profile(prof, r);
    return std::pow(r, prof.dim - 1) * dw * dw;
  };
  for (int i = 0; i < nt; i += 2)
    s += ht / 3.0 * (ft(rs + i * ht) + 4.0 * ft(rs + (i + 1) * ht) + ft(rs + (i + 2) * ht));
  return unit_sphere_area(prof.dim) * s;
}

}  // namespace magnls
