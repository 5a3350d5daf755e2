#pragma once

// Discrete Lyapunov-Schmidt reduction. The projected linear problem
//   L phi = h + sum c_{m,i} chi_m Z_{m,i},   Re<chi_m Z_{m,i}, phi> = 0
// is realized as a symmetric saddle-point system solved by MINRES in the
// weighted real inner product; the inner nonlinear problem is the fixed
// point phi = T(-R + N(phi)); the outer loop moves (zeta', sigma) until
// every multiplier vanishes, certifying a genuine discrete solution.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "magnls/energy.hpp"

namespace magnls {

template <int N>
struct LinearizedSystem {
  BumpConfig<N> cfg;
  PatchedField<N> W;                             // ansatz the operator is built around
  PatchedField<N> R;                             // residual of W
  std::vector<PatchPotentialSamples<N>> samples;
  std::vector<std::vector<double>> f1;           // |W|^{p-1}
  std::vector<std::vector<double>> f2;           // (p-1)|W|^{p-3}
  std::vector<std::vector<double>> weights;      // trapezoid weights per node
  std::vector<PatchedField<N>> columns;          // chi_m Z_{m,i}, m-major
  Eigen::MatrixXd gram;                          // <col_j, col_k>
  double cutoff_radius = 8.0;

  int num_columns() const { return static_cast<int>(columns.size()); }
};

template <int N>
LinearizedSystem<N> make_linearized_system(const BumpConfig<N>& cfg, double cutoff_radius = 8.0) {
  validate_config(cfg);
  LinearizedSystem<N> sys;
  sys.cfg = cfg;
  sys.cutoff_radius = cutoff_radius;
  sys.W = build_ansatz(cfg);
  sys.R = residual(sys.W, cfg);
  const double reg_floor = 1e-30;
  for (std::size_t pi = 0; pi < sys.W.patches.size(); ++pi) {
    const Patch<N>& p = sys.W.patches[pi];
    sys.samples.push_back(sample_potential(p, cfg.potential, cfg.eps));
    std::vector<double> f1(p.num_nodes()), f2(p.num_nodes()), wt(p.num_nodes());
    for_each_node(p, [&](std::size_t flat, const NodeIndex<N>& idx) {
      double a = std::abs(sys.W.values[pi][flat]);
      if (a < reg_floor) {
        f1[flat] = f2[flat] = 0.0;  // regularized limit in the far tail
      } else if (cfg.p == 3.0) {
        f1[flat] = a * a;
        f2[flat] = 2.0;
      } else {
        f1[flat] = std::pow(a, cfg.p - 1.0);
        f2[flat] = (cfg.p - 1.0) * std::pow(a, cfg.p - 3.0);
      }
      wt[flat] = node_weight(p, idx);
    });
    sys.f1.push_back(std::move(f1));
    sys.f2.push_back(std::move(f2));
    sys.weights.push_back(std::move(wt));
  }
  for (int m = 0; m < cfg.bumps; ++m) {
    auto chi = cutoff(cfg, m, cutoff_radius);
    auto Z = build_kernel_basis(cfg, m);
    for (int i = 0; i <= N; ++i) {
      auto col = Z[i];
      for (std::size_t k = 0; k < col.values[m].size(); ++k)
        col.values[m][k] *= chi.values[m][k].real();
      sys.columns.push_back(std::move(col));
    }
  }
  const int nc = sys.num_columns();
  sys.gram.resize(nc, nc);
  for (int j = 0; j < nc; ++j)
    for (int k = j; k < nc; ++k)
      sys.gram(j, k) = sys.gram(k, j) = inner(sys.columns[j], sys.columns[k]);
  return sys;
}

// L phi = (i grad + A)^2 phi + phi - f2 Re(conj(W) phi) W - f1 phi.
template <int N>
void apply_linearized_values(const LinearizedSystem<N>& sys,
                             const std::vector<std::vector<cplx>>& in,
                             std::vector<std::vector<cplx>>& out) {
  for (std::size_t pi = 0; pi < sys.W.patches.size(); ++pi) {
    magnetic_laplacian_patch(sys.W.patches[pi], in[pi], sys.samples[pi], out[pi]);
    const auto& Wv = sys.W.values[pi];
    const auto& f1 = sys.f1[pi];
    const auto& f2 = sys.f2[pi];
    for (std::size_t k = 0; k < in[pi].size(); ++k) {
      cplx w = Wv[k];
      cplx v = in[pi][k];
      double re_proj = w.real() * v.real() + w.imag() * v.imag();
      out[pi][k] += v - f2[k] * re_proj * w - f1[k] * v;
    }
  }
}

template <int N>
PatchedField<N> apply_linearized(const PatchedField<N>& phi, const BumpConfig<N>& cfg) {
  auto sys = make_linearized_system(cfg);
  PatchedField<N> out = zero_like(phi);
  apply_linearized_values(sys, phi.values, out.values);
  return out;
}

namespace detail {

template <int N>
struct SaddleVec {
  std::vector<std::vector<cplx>> f;
  std::vector<double> c;
};

template <int N>
SaddleVec<N> saddle_zero(const LinearizedSystem<N>& sys) {
  SaddleVec<N> v;
  for (const auto& w : sys.weights) v.f.emplace_back(w.size(), cplx(0.0, 0.0));
  v.c.assign(sys.num_columns(), 0.0);
  return v;
}

template <int N>
double saddle_dot(const LinearizedSystem<N>& sys, const SaddleVec<N>& a, const SaddleVec<N>& b) {
  double s = 0.0;
  for (std::size_t pi = 0; pi < a.f.size(); ++pi) {
    const auto& wt = sys.weights[pi];
    const auto& av = a.f[pi];
    const auto& bv = b.f[pi];
    double acc = 0.0;
    for (std::size_t k = 0; k < av.size(); ++k)
      acc += wt[k] * (av[k].real() * bv[k].real() + av[k].imag() * bv[k].imag());
    s += acc;
  }
  for (std::size_t j = 0; j < a.c.size(); ++j) s += a.c[j] * b.c[j];
  return s;
}

template <int N>
void saddle_axpy(SaddleVec<N>& y, double alpha, const SaddleVec<N>& x) {
  for (std::size_t pi = 0; pi < y.f.size(); ++pi)
    for (std::size_t k = 0; k < y.f[pi].size(); ++k) y.f[pi][k] += alpha * x.f[pi][k];
  for (std::size_t j = 0; j < y.c.size(); ++j) y.c[j] += alpha * x.c[j];
}

template <int N>
void saddle_scale(SaddleVec<N>& y, double alpha) {
  for (auto& pv : y.f)
    for (auto& z : pv) z *= alpha;
  for (auto& v : y.c) v *= alpha;
}

// M (z, c) = (L z - sum_j c_j col_j,  -<col_j, z>), symmetric in the
// weighted inner product.
template <int N>
void saddle_apply(const LinearizedSystem<N>& sys, const SaddleVec<N>& x, SaddleVec<N>& y) {
  apply_linearized_values(sys, x.f, y.f);
  for (int j = 0; j < sys.num_columns(); ++j) {
    const auto& col = sys.columns[j];
    for (std::size_t pi = 0; pi < y.f.size(); ++pi) {
      const auto& cv = col.values[pi];
      for (std::size_t k = 0; k < cv.size(); ++k) y.f[pi][k] -= x.c[j] * cv[k];
    }
    double acc = 0.0;
    for (std::size_t pi = 0; pi < x.f.size(); ++pi) {
      const auto& wt = sys.weights[pi];
      const auto& cv = col.values[pi];
      const auto& xv = x.f[pi];
      for (std::size_t k = 0; k < cv.size(); ++k)
        acc += wt[k] * (cv[k].real() * xv[k].real() + cv[k].imag() * xv[k].imag());
    }
    y.c[j] = -acc;
  }
}

struct MinresStats {
  int iterations = 0;
  double rel_residual = 0;
  bool converged = false;
};

// Paige-Saunders MINRES specialized to the saddle vectors.
template <int N>
MinresStats minres(const LinearizedSystem<N>& sys, const SaddleVec<N>& rhs, SaddleVec<N>& x,
                   double rtol, int maxit) {
  MinresStats st;
  x = saddle_zero(sys);
  SaddleVec<N> r1 = rhs;
  double beta1 = std::sqrt(saddle_dot(sys, r1, r1));
  if (beta1 == 0.0) {
    st.converged = true;
    return st;
  }
  SaddleVec<N> r2 = r1;
  SaddleVec<N> v = saddle_zero(sys), y = r1;
  SaddleVec<N> w = saddle_zero(sys), w1 = saddle_zero(sys), w2 = saddle_zero(sys);
  SaddleVec<N> tmp = saddle_zero(sys);

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;

  for (int it = 1; it <= maxit; ++it) {
    v = y;
    saddle_scale(v, 1.0 / beta);
    saddle_apply(sys, v, tmp);
    y = tmp;
    if (it >= 2) saddle_axpy(y, -beta / oldb, r1);
    double alfa = saddle_dot(sys, v, y);
    saddle_axpy(y, -alfa / beta, r2);
    r1 = r2;
    r2 = y;
    oldb = beta;
    beta = std::sqrt(saddle_dot(sys, r2, r2));

    double oldeps = epsln;
    double delta = cs * dbar + sn * alfa;
    double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::max(std::sqrt(gbar * gbar + beta * beta), 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = v;
    saddle_axpy(w, -oldeps, w1);
    saddle_axpy(w, -delta, w2);
    saddle_scale(w, 1.0 / gamma);
    saddle_axpy(x, phi, w);

    st.iterations = it;
    if (phibar <= rtol * beta1) {
      st.converged = true;
      break;
    }
  }
  // recompute the true residual for the certificate
  saddle_apply(sys, x, tmp);
  saddle_scale(tmp, -1.0);
  saddle_axpy(tmp, 1.0, rhs);
  st.rel_residual = std::sqrt(saddle_dot(sys, tmp, tmp)) / beta1;
  return st;
}

}  // namespace detail

template <int N>
struct ProjectedSolve {
  PatchedField<N> phi;
  std::vector<double> c;      // multipliers, index m*(N+1)+i
  int iterations = 0;
  double rel_residual = 0;    // true saddle residual over ||rhs||
  double constraint_max = 0;  // max_j |<chi Z_j, phi>| after projection
  double multiplier_bound = 0;  // max|c| / ||rhs||_L2
};

template <int N>
ProjectedSolve<N> solve_projected(const PatchedField<N>& rhs, const LinearizedSystem<N>& sys,
                                  double rtol = 1e-11, int maxit = 20000) {
  detail::SaddleVec<N> b = detail::saddle_zero(sys);
  b.f = rhs.values;
  detail::SaddleVec<N> x;
  auto st = detail::minres(sys, b, x, rtol, maxit);
  if (!st.converged)
    throw KrylovStall("solve_projected: MINRES hit the iteration cap at relative residual " +
                      std::to_string(st.rel_residual));

  ProjectedSolve<N> out;
  out.phi = zero_like(sys.W);
  out.phi.values = std::move(x.f);
  out.c = std::move(x.c);
  out.iterations = st.iterations;
  out.rel_residual = st.rel_residual;

  // exact post-projection onto the constraint space
  const int nc = sys.num_columns();
  Eigen::VectorXd g(nc);
  for (int j = 0; j < nc; ++j) g(j) = inner(sys.columns[j], out.phi);
  Eigen::VectorXd gamma = sys.gram.ldlt().solve(g);
  for (int j = 0; j < nc; ++j)
    add_scaled(out.phi, cplx(-gamma(j), 0.0), sys.columns[j]);
  for (int j = 0; j < nc; ++j)
    out.constraint_max = std::max(out.constraint_max, std::abs(inner(sys.columns[j], out.phi)));

  double rn = l2_norm(rhs);
  for (double cj : out.c) out.multiplier_bound = std::max(out.multiplier_bound, std::abs(cj));
  if (rn > 0) out.multiplier_bound /= rn;
  return out;
}

template <int N>
ProjectedSolve<N> solve_projected(const PatchedField<N>& rhs, const BumpConfig<N>& cfg,
                                  double rtol = 1e-11, int maxit = 20000) {
  auto sys = make_linearized_system(cfg);
  return solve_projected(rhs, sys, rtol, maxit);
}

// N(phi) = |W+phi|^{p-1}(W+phi) - |W|^{p-1}W - f2 Re(conj(W)phi) W - f1 phi,
// sharing the regularized f1/f2 so R + L phi - N(phi) telescopes exactly to
// the full nonlinear residual of W + phi.
template <int N>
void nonlinear_remainder(const LinearizedSystem<N>& sys,
                         const std::vector<std::vector<cplx>>& phi,
                         std::vector<std::vector<cplx>>& out) {
  const double p = sys.cfg.p;
  for (std::size_t pi = 0; pi < phi.size(); ++pi) {
    const auto& Wv = sys.W.values[pi];
    const auto& f1 = sys.f1[pi];
    const auto& f2 = sys.f2[pi];
    for (std::size_t k = 0; k < phi[pi].size(); ++k) {
      cplx w = Wv[k];
      cplx v = phi[pi][k];
      double re_proj = w.real() * v.real() + w.imag() * v.imag();
      out[pi][k] = nonlinear_power(w + v, p) - nonlinear_power(w, p) - f2[k] * re_proj * w -
                   f1[k] * v;
    }
  }
}

template <int N>
struct ReductionState {
  BumpConfig<N> cfg;
  PatchedField<N> phi;
  std::vector<double> c;
  int inner_iters = 0;
  int krylov_iters = 0;
  double residual_norm = 0;   // || L phi + R - N(phi) - sum c chi Z ||_L2
  double constraint_max = 0;
  std::vector<double> contraction_ratios;  // ||dphi_{k+1}|| / ||dphi_k||
};

struct InnerOptions {
  double krylov_rtol = 1e-11;
  int krylov_maxit = 20000;
  int max_iters = 30;
};

template <int N>
ReductionState<N> solve_inner(const LinearizedSystem<N>& sys, double tol,
                              const InnerOptions& opts = {},
                              const PatchedField<N>* warm_start = nullptr) {
  ReductionState<N> state;
  state.cfg = sys.cfg;
  state.phi = zero_like(sys.W);
  if (warm_start) state.phi.values = warm_start->values;

  auto rhs = zero_like(sys.W);
  std::vector<double> steps;
  bool converged = false;
  for (int it = 0; it < opts.max_iters; ++it) {
    // rhs = -R + N(phi_k)
    nonlinear_remainder(sys, state.phi.values, rhs.values);
    add_scaled(rhs, cplx(-1.0, 0.0), sys.R);
    auto ps = solve_projected(rhs, sys, opts.krylov_rtol, opts.krylov_maxit);
    state.krylov_iters += ps.iterations;
    auto delta = ps.phi;
    add_scaled(delta, cplx(-1.0, 0.0), state.phi);
    double dn = l2_norm(delta);
    steps.push_back(dn);
    state.phi = std::move(ps.phi);
    state.c = std::move(ps.c);
    state.constraint_max = ps.constraint_max;
    state.inner_iters = it + 1;
    if (dn < tol) {
      converged = true;
      break;
    }
  }
  for (std::size_t k = 1; k < steps.size(); ++k)
    if (steps[k - 1] > 0) state.contraction_ratios.push_back(steps[k] / steps[k - 1]);
  if (!converged) {
    double ratio = state.contraction_ratios.empty() ? -1.0 : state.contraction_ratios.back();
    throw ContractionFailure("solve_inner: no contraction after " +
                             std::to_string(opts.max_iters) +
                             " iterations (last ratio " + std::to_string(ratio) + ")");
  }

  // true residual of the projected nonlinear equation
  auto res = zero_like(sys.W);
  apply_linearized_values(sys, state.phi.values, res.values);
  add_scaled(res, cplx(1.0, 0.0), sys.R);
  nonlinear_remainder(sys, state.phi.values, rhs.values);
  add_scaled(res, cplx(-1.0, 0.0), rhs);
  for (int j = 0; j < sys.num_columns(); ++j)
    add_scaled(res, cplx(-state.c[j], 0.0), sys.columns[j]);
  state.residual_norm = l2_norm(res);
  return state;
}

template <int N>
ReductionState<N> solve_inner(const BumpConfig<N>& cfg, double tol, const InnerOptions& opts = {}) {
  auto sys = make_linearized_system(cfg);
  return solve_inner(sys, tol, opts);
}

template <int N>
struct PeakInfo {
  Vec<N> location;  // y-units
  bool zero_field = false;
};

// Per patch: argmax |u| refined by a per-axis quadratic fit through |u|^2.
template <int N>
std::vector<PeakInfo<N>> peak_location(const PatchedField<N>& u) {
  std::vector<PeakInfo<N>> peaks;
  for (std::size_t pi = 0; pi < u.patches.size(); ++pi) {
    const Patch<N>& p = u.patches[pi];
    double best = -1.0;
    NodeIndex<N> best_idx{};
    for_each_node(p, [&](std::size_t flat, const NodeIndex<N>& idx) {
      double a = std::norm(u.values[pi][flat]);
      if (a > best) {
        best = a;
        best_idx = idx;
      }
    });
    PeakInfo<N> info;
    if (best <= 0.0) {
      info.location = p.center;
      info.zero_field = true;
      peaks.push_back(info);
      continue;
    }
    std::size_t flat0 = 0;
    for (int a = 0; a < N; ++a) flat0 += static_cast<std::size_t>(best_idx[a]) * p.stride(a);
    info.location = p.node(best_idx);
    for (int a = 0; a < N; ++a) {
      if (best_idx[a] == 0 || best_idx[a] == p.n - 1) continue;
      const std::size_t str = p.stride(a);
      double fm = std::norm(u.values[pi][flat0 - str]);
      double f0 = best;
      double fp = std::norm(u.values[pi][flat0 + str]);
      double denom = fm - 2.0 * f0 + fp;
      if (denom < 0.0) {
        double off = 0.5 * (fm - fp) / denom;
        info.location[a] += std::clamp(off, -0.5, 0.5) * p.spacing;
      }
    }
    peaks.push_back(info);
  }
  return peaks;
}

template <int N>
struct OuterResult {
  BumpConfig<N> cfg;          // final configuration
  ReductionState<N> state;
  PatchedField<N> u;          // W(cfg) + phi
  double residual_norm = 0;   // full nonlinear discrete residual of u
  double max_multiplier = 0;
  std::vector<PeakInfo<N>> peaks;
  int outer_iters = 0;
};

struct OuterOptions {
  double fd_step = 1e-3;      // zeta'-units
  int max_iters = 40;
  double seed_c_limit = 1.0;  // SeedRejected beyond this
  InnerOptions inner;
  double inner_tol = 1e-10;
  double cutoff_radius = 8.0;
};

namespace detail {

// Outer variables: all zeta' components plus sigma_2..sigma_K (global phase
// fixed); residuals: all K(N+1) multipliers. The phase directions are exactly
// degenerate for well-separated bumps, handled by the SVD pseudo-inverse.
template <int N>
std::vector<double> pack_theta(const BumpConfig<N>& cfg) {
  std::vector<double> th;
  for (int m = 0; m < cfg.bumps; ++m) {
    Vec<N> zp = cfg.center_prime(m);
    for (int a = 0; a < N; ++a) th.push_back(zp[a]);
  }
  for (int m = 1; m < cfg.bumps; ++m) th.push_back(cfg.phases[m]);
  return th;
}

template <int N>
BumpConfig<N> unpack_theta(const BumpConfig<N>& base, const std::vector<double>& th) {
  BumpConfig<N> cfg = base;
  std::size_t k = 0;
  for (int m = 0; m < cfg.bumps; ++m) {
    Vec<N> zp;
    for (int a = 0; a < N; ++a) zp[a] = th[k++];
    cfg.centers[m] = cfg.eps * zp;
  }
  for (int m = 1; m < cfg.bumps; ++m) {
    double s = std::fmod(th[k++], 2.0 * M_PI);
    if (s < 0) s += 2.0 * M_PI;
    cfg.phases[m] = s;
  }
  return cfg;
}

}  // namespace detail

template <int N>
OuterResult<N> reduce_outer(const BumpConfig<N>& cfg0, double tol, const OuterOptions& opts = {}) {
  validate_config(cfg0);
  std::vector<double> theta = detail::pack_theta(cfg0);
  const int nth = static_cast<int>(theta.size());
  const int nc = cfg0.bumps * (N + 1);

  PatchedField<N> warm;
  bool have_warm = false;

  auto eval_c = [&](const std::vector<double>& th,
                    ReductionState<N>* keep) -> Eigen::VectorXd {
    BumpConfig<N> cfg = detail::unpack_theta(cfg0, th);
    auto sys = make_linearized_system(cfg, opts.cutoff_radius);
    auto st = solve_inner(sys, opts.inner_tol, opts.inner, have_warm ? &warm : nullptr);
    Eigen::VectorXd c(nc);
    for (int j = 0; j < nc; ++j) c(j) = st.c[j];
    if (keep) *keep = std::move(st);
    return c;
  };

  ReductionState<N> state;
  Eigen::VectorXd c;
  try {
    c = eval_c(theta, &state);
  } catch (const ContractionFailure& e) {
    throw SeedRejected(std::string("reduce_outer: inner solve failed at the seed: ") + e.what());
  }
  if (c.cwiseAbs().maxCoeff() > opts.seed_c_limit)
    throw SeedRejected("reduce_outer: initial multipliers exceed the local-model limit");
  warm = state.phi;
  have_warm = true;

  OuterResult<N> out;
  const double target = 0.3 * tol;  // margin so the residual certificate lands under 10*tol
  int it = 0;
  for (; it < opts.max_iters && c.cwiseAbs().maxCoeff() >= target; ++it) {
    // finite-difference Jacobian dc/dtheta
    Eigen::MatrixXd J(nc, nth);
    for (int j = 0; j < nth; ++j) {
      std::vector<double> th = theta;
      th[j] += opts.fd_step;
      Eigen::VectorXd cj = eval_c(th, nullptr);
      J.col(j) = (cj - c) / opts.fd_step;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-8);
    Eigen::VectorXd step = svd.solve(c);

    double base_norm = c.cwiseAbs().maxCoeff();
    bool accepted = false;
    for (double damp : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
      std::vector<double> th = theta;
      for (int j = 0; j < nth; ++j) th[j] -= damp * step(j);
      ReductionState<N> trial_state;
      Eigen::VectorXd trial_c;
      try {
        trial_c = eval_c(th, &trial_state);
      } catch (const ContractionFailure&) {
        continue;
      }
      if (trial_c.cwiseAbs().maxCoeff() < base_norm) {
        theta = std::move(th);
        c = std::move(trial_c);
        state = std::move(trial_state);
        warm = state.phi;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw OuterDivergence("reduce_outer: damped Newton failed to reduce |c| at iteration " +
                            std::to_string(it));
  }
  if (c.cwiseAbs().maxCoeff() >= target)
    throw OuterDivergence("reduce_outer: multipliers not driven below tolerance in " +
                          std::to_string(opts.max_iters) + " iterations");

  out.cfg = detail::unpack_theta(cfg0, theta);
  out.state = std::move(state);
  out.outer_iters = it;
  out.max_multiplier = c.cwiseAbs().maxCoeff();

  out.u = build_ansatz(out.cfg);
  add_scaled(out.u, cplx(1.0, 0.0), out.state.phi);
  out.residual_norm = l2_norm(residual(out.u, out.cfg));
  out.peaks = peak_location(out.u);
  return out;
}

}  // namespace magnls
