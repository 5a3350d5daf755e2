#pragma once

// Multi-patch tensor grids in the blown-up variable y = x/eps: one local
// window per concentration point, trapezoid quadrature, L2 norms and the real
// inner product used by the orthogonality constraints.

#include <memory>

#include "magnls/common.hpp"

namespace magnls {

template <int N> struct BumpConfig;  // defined in ansatz.hpp

template <int N> using NodeIndex = std::array<int, static_cast<std::size_t>(N)>;

template <int N>
struct Patch {
  Vec<N> center;       // y-units; always a grid node
  double half_width;   // L
  double spacing;      // h
  int half_nodes;      // M = floor(L/h)
  int n;               // 2M+1 nodes per axis

  std::size_t num_nodes() const {
    std::size_t s = 1;
    for (int i = 0; i < N; ++i) s *= static_cast<std::size_t>(n);
    return s;
  }
  // row-major, axis 0 slowest
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int i = axis + 1; i < N; ++i) s *= static_cast<std::size_t>(n);
    return s;
  }
  double coord(int axis, int k) const { return center[axis] + (k - half_nodes) * spacing; }
  Vec<N> node(const NodeIndex<N>& idx) const {
    Vec<N> y;
    for (int a = 0; a < N; ++a) y[a] = coord(a, idx[a]);
    return y;
  }
};

template <int N>
Patch<N> make_patch(const Vec<N>& center, double half_width, double spacing) {
  if (!(spacing > 0.0)) throw BadGeometry("make_patch: spacing must be > 0");
  if (half_width < 10.0)
    throw BadGeometry("make_patch: half_width must be >= 10 (profile support)");
  Patch<N> p;
  p.center = center;
  p.half_width = half_width;
  p.spacing = spacing;
  p.half_nodes = static_cast<int>(std::floor(half_width / spacing));
  p.n = 2 * p.half_nodes + 1;
  if (p.n < 7) throw BadGeometry("make_patch: too few nodes per axis for 4th-order stencils");
  return p;
}

// Axis-aligned boxes are disjoint iff some axis separates them.
template <int N>
bool patches_disjoint(const Patch<N>& a, const Patch<N>& b) {
  for (int i = 0; i < N; ++i) {
    double reach = a.half_nodes * a.spacing + b.half_nodes * b.spacing;
    if (std::abs(a.center[i] - b.center[i]) > reach) return true;
  }
  return false;
}

template <int N>
struct PatchedField {
  std::vector<Patch<N>> patches;
  std::vector<std::vector<cplx>> values;  // per patch, row-major
  std::shared_ptr<const BumpConfig<N>> meta;

  std::size_t total_nodes() const {
    std::size_t s = 0;
    for (const auto& p : patches) s += p.num_nodes();
    return s;
  }
};

template <int N>
PatchedField<N> make_patched_field(std::vector<Patch<N>> patches) {
  for (std::size_t i = 0; i < patches.size(); ++i)
    for (std::size_t j = i + 1; j < patches.size(); ++j)
      if (!patches_disjoint(patches[i], patches[j]))
        throw BadGeometry("make_patched_field: patches overlap in y-space");
  PatchedField<N> f;
  f.values.reserve(patches.size());
  for (const auto& p : patches) f.values.emplace_back(p.num_nodes(), cplx(0.0, 0.0));
  f.patches = std::move(patches);
  return f;
}

template <int N>
PatchedField<N> zero_like(const PatchedField<N>& f) {
  PatchedField<N> out;
  out.patches = f.patches;
  out.meta = f.meta;
  out.values.reserve(f.values.size());
  for (const auto& v : f.values) out.values.emplace_back(v.size(), cplx(0.0, 0.0));
  return out;
}

template <int N, class F>
void for_each_node(const Patch<N>& p, F&& f) {
  NodeIndex<N> idx{};
  std::size_t flat = 0;
  if constexpr (N == 1) {
    for (idx[0] = 0; idx[0] < p.n; ++idx[0]) f(flat++, idx);
  } else if constexpr (N == 2) {
    for (idx[0] = 0; idx[0] < p.n; ++idx[0])
      for (idx[1] = 0; idx[1] < p.n; ++idx[1]) f(flat++, idx);
  } else {
    for (idx[0] = 0; idx[0] < p.n; ++idx[0])
      for (idx[1] = 0; idx[1] < p.n; ++idx[1])
        for (idx[2] = 0; idx[2] < p.n; ++idx[2]) f(flat++, idx);
  }
}

// Trapezoid weight (h^N times 1/2 per boundary axis hit).
template <int N>
double node_weight(const Patch<N>& p, const NodeIndex<N>& idx) {
  double w = std::pow(p.spacing, N);
  for (int a = 0; a < N; ++a)
    if (idx[a] == 0 || idx[a] == p.n - 1) w *= 0.5;
  return w;
}

template <int N>
cplx integrate(const PatchedField<N>& f) {
  cplx s(0.0, 0.0);
  for (std::size_t pi = 0; pi < f.patches.size(); ++pi) {
    const auto& vals = f.values[pi];
    cplx acc(0.0, 0.0);
    for_each_node(f.patches[pi], [&](std::size_t flat, const NodeIndex<N>& idx) {
      acc += node_weight(f.patches[pi], idx) * vals[flat];
    });
    s += acc;
  }
  return s;
}

// Re int u conj(v); symmetric and bilinear over the reals.
template <int N>
double inner(const PatchedField<N>& u, const PatchedField<N>& v) {
  if (u.values.size() != v.values.size())
    throw std::invalid_argument("inner: mismatched patch layouts");
  double s = 0.0;
  for (std::size_t pi = 0; pi < u.patches.size(); ++pi) {
    const auto& a = u.values[pi];
    const auto& b = v.values[pi];
    double acc = 0.0;
    for_each_node(u.patches[pi], [&](std::size_t flat, const NodeIndex<N>& idx) {
      acc += node_weight(u.patches[pi], idx) *
             (a[flat].real() * b[flat].real() + a[flat].imag() * b[flat].imag());
    });
    s += acc;
  }
  return s;
}

template <int N>
double l2_norm(const PatchedField<N>& u) {
  return std::sqrt(inner(u, u));
}

template <int N>
double max_abs(const PatchedField<N>& u) {
  double m = 0.0;
  for (const auto& vals : u.values)
    for (const cplx& z : vals) m = std::max(m, std::abs(z));
  return m;
}

// y += alpha * x
template <int N>
void add_scaled(PatchedField<N>& y, cplx alpha, const PatchedField<N>& x) {
  for (std::size_t pi = 0; pi < y.values.size(); ++pi)
    for (std::size_t i = 0; i < y.values[pi].size(); ++i) y.values[pi][i] += alpha * x.values[pi][i];
}

}  // namespace magnls
