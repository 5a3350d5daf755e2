#pragma once

// Discrete magnetic differential operators on patch grids: 4th-order central
// stencils, one-sided at patch edges. The magnetic Laplacian uses the
// expanded four-term form -Du + 2i A.grad(u) + |A|^2 u + i eps (div_x A) u
// with A sampled at x = eps*y.

#include "magnls/patch.hpp"
#include "magnls/potential.hpp"

namespace magnls {

namespace stencil {

struct Entry {
  int start;  // offset of the first coefficient relative to the node
  std::array<double, 6> c;
  int len;
};

// 4th-order first derivative (times 1/h)
inline const Entry& d1_at(int pos, int n) {
  static const Entry central{-2, {1. / 12, -8. / 12, 0., 8. / 12, -1. / 12, 0.}, 5};
  static const Entry fwd0{0, {-25. / 12, 48. / 12, -36. / 12, 16. / 12, -3. / 12, 0.}, 5};
  static const Entry fwd1{-1, {-3. / 12, -10. / 12, 18. / 12, -6. / 12, 1. / 12, 0.}, 5};
  static const Entry bwd0{-4, {3. / 12, -16. / 12, 36. / 12, -48. / 12, 25. / 12, 0.}, 5};
  static const Entry bwd1{-3, {-1. / 12, 6. / 12, -18. / 12, 10. / 12, 3. / 12, 0.}, 5};
  if (pos == 0) return fwd0;
  if (pos == 1) return fwd1;
  if (pos == n - 1) return bwd0;
  if (pos == n - 2) return bwd1;
  return central;
}

// 4th-order second derivative (times 1/h^2)
inline const Entry& d2_at(int pos, int n) {
  static const Entry central{-2, {-1. / 12, 16. / 12, -30. / 12, 16. / 12, -1. / 12, 0.}, 5};
  static const Entry fwd0{0, {45. / 12, -154. / 12, 214. / 12, -156. / 12, 61. / 12, -10. / 12}, 6};
  static const Entry fwd1{-1, {10. / 12, -15. / 12, -4. / 12, 14. / 12, -6. / 12, 1. / 12}, 6};
  static const Entry bwd0{-5, {-10. / 12, 61. / 12, -156. / 12, 214. / 12, -154. / 12, 45. / 12}, 6};
  static const Entry bwd1{-4, {1. / 12, -6. / 12, 14. / 12, -4. / 12, -15. / 12, 10. / 12}, 6};
  if (pos == 0) return fwd0;
  if (pos == 1) return fwd1;
  if (pos == n - 1) return bwd0;
  if (pos == n - 2) return bwd1;
  return central;
}

}  // namespace stencil

namespace detail {

// out += scale * D_axis(in), derivative order 1 or 2.
template <int N, int Order>
void accumulate_derivative(const Patch<N>& p, const std::vector<cplx>& in, std::vector<cplx>& out,
                           int axis, cplx scale) {
  const std::size_t str = p.stride(axis);
  const double hfac = Order == 1 ? 1.0 / p.spacing : 1.0 / (p.spacing * p.spacing);
  for_each_node(p, [&](std::size_t flat, const NodeIndex<N>& idx) {
    const stencil::Entry& e =
        Order == 1 ? stencil::d1_at(idx[axis], p.n) : stencil::d2_at(idx[axis], p.n);
    cplx acc(0.0, 0.0);
    const cplx* base = in.data() + flat + static_cast<std::ptrdiff_t>(e.start) * str;
    for (int k = 0; k < e.len; ++k) acc += e.c[k] * base[k * str];
    out[flat] += scale * hfac * acc;
  });
}

}  // namespace detail

// Plain discrete Laplacian sum_k D2_k u (no magnetic terms).
template <int N>
PatchedField<N> discrete_laplacian(const PatchedField<N>& u) {
  PatchedField<N> out = zero_like(u);
  for (std::size_t pi = 0; pi < u.patches.size(); ++pi)
    for (int a = 0; a < N; ++a)
      detail::accumulate_derivative<N, 2>(u.patches[pi], u.values[pi], out.values[pi], a,
                                          cplx(1.0, 0.0));
  return out;
}

// Per-patch samples of the potential at physical points x = eps*y.
template <int N>
struct PatchPotentialSamples {
  std::vector<Vec<N>> a;
  std::vector<cplx> zero_order;  // |A|^2 + i eps div_x A
};

template <int N>
PatchPotentialSamples<N> sample_potential(const Patch<N>& p, const PotentialModel<N>& model,
                                          double eps) {
  PatchPotentialSamples<N> s;
  s.a.resize(p.num_nodes());
  s.zero_order.resize(p.num_nodes());
  for_each_node(p, [&](std::size_t flat, const NodeIndex<N>& idx) {
    Vec<N> x = eps * p.node(idx);
    Vec<N> av = model.eval(x);
    s.a[flat] = av;
    s.zero_order[flat] = cplx(dot(av, av), eps * model.divergence(x));
  });
  return s;
}

// (i grad + A(eps y)) u, one component field per axis.
template <int N>
std::array<PatchedField<N>, N> magnetic_gradient(const PatchedField<N>& u,
                                                 const PotentialModel<N>& model, double eps) {
  std::array<PatchedField<N>, N> out;
  for (int a = 0; a < N; ++a) out[a] = zero_like(u);
  for (std::size_t pi = 0; pi < u.patches.size(); ++pi) {
    auto samples = sample_potential(u.patches[pi], model, eps);
    for (int a = 0; a < N; ++a) {
      detail::accumulate_derivative<N, 1>(u.patches[pi], u.values[pi], out[a].values[pi], a,
                                          cplx(0.0, 1.0));
      for (std::size_t i = 0; i < u.values[pi].size(); ++i)
        out[a].values[pi][i] += samples.a[i][a] * u.values[pi][i];
    }
  }
  return out;
}

// Workhorse shared with the linearized-operator apply: out = (i grad + A)^2 in.
template <int N>
void magnetic_laplacian_patch(const Patch<N>& p, const std::vector<cplx>& in,
                              const PatchPotentialSamples<N>& samples, std::vector<cplx>& out) {
  std::fill(out.begin(), out.end(), cplx(0.0, 0.0));
  std::vector<cplx> d1(in.size());
  for (int a = 0; a < N; ++a) {
    detail::accumulate_derivative<N, 2>(p, in, out, a, cplx(-1.0, 0.0));
    std::fill(d1.begin(), d1.end(), cplx(0.0, 0.0));
    detail::accumulate_derivative<N, 1>(p, in, d1, a, cplx(1.0, 0.0));
    for (std::size_t i = 0; i < in.size(); ++i)
      out[i] += cplx(0.0, 2.0) * samples.a[i][a] * d1[i];
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] += samples.zero_order[i] * in[i];
}

// (i grad + A(eps y))^2 u in the expanded four-term form.
template <int N>
PatchedField<N> magnetic_laplacian(const PatchedField<N>& u, const PotentialModel<N>& model,
                                   double eps) {
  PatchedField<N> out = zero_like(u);
  for (std::size_t pi = 0; pi < u.patches.size(); ++pi) {
    auto samples = sample_potential(u.patches[pi], model, eps);
    magnetic_laplacian_patch(u.patches[pi], u.values[pi], samples, out.values[pi]);
  }
  return out;
}

}  // namespace magnls
