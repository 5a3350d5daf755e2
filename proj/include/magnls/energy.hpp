#pragma once

// Energy functional, the expansion constants A0/B0, the eps^2 fit of E(W)
// and the reduced-energy landscape scan over concentration points.

#include <Eigen/Dense>

#include "magnls/residual.hpp"

namespace magnls {

struct EnergyBreakdown {
  double kinetic = 0;    // 1/2 int |(i grad + A) u|^2
  double mass = 0;       // 1/2 int |u|^2
  double nonlinear = 0;  // 1/(p+1) int |u|^{p+1}
  double total = 0;
};

template <int N>
EnergyBreakdown energy(const PatchedField<N>& u, const BumpConfig<N>& cfg) {
  EnergyBreakdown e;
  auto grad = magnetic_gradient(u, cfg.potential, cfg.eps);
  for (int a = 0; a < N; ++a) e.kinetic += 0.5 * inner(grad[a], grad[a]);
  e.mass = 0.5 * inner(u, u);
  for (std::size_t pi = 0; pi < u.patches.size(); ++pi) {
    const auto& vals = u.values[pi];
    double acc = 0.0;
    for_each_node(u.patches[pi], [&](std::size_t flat, const NodeIndex<N>& idx) {
      double a2 = std::norm(vals[flat]);
      double pw = cfg.p == 3.0 ? a2 * a2 : std::pow(a2, (cfg.p + 1.0) / 2.0);
      acc += node_weight(u.patches[pi], idx) * pw;
    });
    e.nonlinear += acc / (cfg.p + 1.0);
  }
  e.total = e.kinetic + e.mass - e.nonlinear;
  return e;
}

struct ExpansionConstants {
  double a0 = 0;  // (p-1)/(2(p+1)) int w^{p+1}
  double b0 = 0;  // 1/4 int y_1^2 w^2
  double p = 0;
  int dim = 0;
};

inline ExpansionConstants expansion_constants(const RadialProfile& prof) {
  ExpansionConstants c;
  c.p = prof.p;
  c.dim = prof.dim;
  c.a0 = (prof.p - 1.0) / (2.0 * (prof.p + 1.0)) * profile_moment_nd(prof, 0, prof.p + 1.0);
  // int y_1^2 w^2 = (1/N) int |y|^2 w^2 by radial symmetry
  c.b0 = 0.25 / prof.dim * profile_moment_nd(prof, 2, 2.0);
  return c;
}

struct ExpansionFit {
  double c0 = 0;
  double c2 = 0;
  double c4 = 0;
  bool quartic = false;
  std::vector<double> eps_list;
  std::vector<double> energies;
  double max_fit_residual = 0;  // max |E - model| over the sweep
};

// Least squares of E(W(eps)) against {1, eps^2[, eps^4]}.
template <int N>
ExpansionFit fit_expansion(const BumpConfig<N>& cfg_template, const std::vector<double>& eps_list,
                           bool quartic = true) {
  const int params = quartic ? 3 : 2;
  if (static_cast<int>(eps_list.size()) < std::max(params + 1, 4))
    throw ConfigError("fit_expansion: need at least " + std::to_string(std::max(params + 1, 4)) +
                      " eps values");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (eps_list[i + 1] >= eps_list[i])
      throw ConfigError("fit_expansion: eps list must be strictly decreasing");

  ExpansionFit fit;
  fit.quartic = quartic;
  fit.eps_list = eps_list;
  for (double e : eps_list) {
    BumpConfig<N> cfg = cfg_template;
    cfg.eps = e;
    auto W = build_ansatz(cfg);
    fit.energies.push_back(energy(W, cfg).total);
  }

  Eigen::MatrixXd X(eps_list.size(), params);
  Eigen::VectorXd y(eps_list.size());
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    double e2 = eps_list[i] * eps_list[i];
    X(i, 0) = 1.0;
    X(i, 1) = e2;
    if (quartic) X(i, 2) = e2 * e2;
    y(i) = fit.energies[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < params)
    throw IllConditionedFit("fit_expansion: rank-deficient design matrix (eps values too close)");
  Eigen::VectorXd beta = qr.solve(y);
  fit.c0 = beta(0);
  fit.c2 = beta(1);
  if (quartic) fit.c4 = beta(2);
  Eigen::VectorXd res = y - X * beta;
  fit.max_fit_residual = res.cwiseAbs().maxCoeff();
  return fit;
}

template <int N>
struct LandscapeRow {
  Vec<N> zeta;
  double energy;
  double curl;
};

// E(W(zeta)) and |B(zeta)|_F^2 on a uniform grid of K=1 concentration points.
template <int N>
std::vector<LandscapeRow<N>> landscape_scan(const BumpConfig<N>& cfg_template, const Vec<N>& lo,
                                            const Vec<N>& hi, int n_per_axis) {
  if (n_per_axis < 2) throw ConfigError("landscape_scan: need >= 2 scan points per axis");
  if (cfg_template.bumps != 1) throw ConfigError("landscape_scan: K = 1 configurations only");
  std::vector<LandscapeRow<N>> rows;
  NodeIndex<N> idx{};
  bool done = false;
  while (!done) {
    Vec<N> zeta;
    for (int a = 0; a < N; ++a)
      zeta[a] = lo[a] + (hi[a] - lo[a]) * idx[a] / double(n_per_axis - 1);
    BumpConfig<N> cfg = cfg_template;
    cfg.centers = {zeta};
    // per-point gauge recentering: E and |B|_F^2 are gauge invariant, and the
    // bump phase stays resolved even where |A| is large (poly_saddle)
    cfg.potential = recenter_gauge(cfg_template.potential, zeta);
    auto W = build_ansatz(cfg);
    rows.push_back({zeta, energy(W, cfg).total, curl_invariant(cfg_template.potential, zeta)});
    int axis = 0;
    while (axis < N && ++idx[axis] == n_per_axis) idx[axis++] = 0;
    done = axis == N;
  }
  return rows;
}

}  // namespace magnls
