#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "magnls/operators.hpp"
#include "magnls/radial.hpp"

using namespace magnls;

namespace {

const RadialProfile& profile2d() {
  static RadialProfile prof = solve_ground_state(3.0, 2, 30.0, 1e-10);
  return prof;
}

PatchedField<2> single_patch_field(double L, double h) {
  return make_patched_field<2>({make_patch<2>(Vec<2>{0.0, 0.0}, L, h)});
}

template <class F>
void fill(PatchedField<2>& f, F&& fn) {
  for (std::size_t pi = 0; pi < f.patches.size(); ++pi)
    for_each_node(f.patches[pi], [&](std::size_t flat, const std::array<int, 2>& idx) {
      f.values[pi][flat] = fn(f.patches[pi].node(idx));
    });
}

}  // namespace

TEST_CASE("patch construction arithmetic") {
  auto p = make_patch<2>(Vec<2>{0.0, 0.0}, 16.0, 0.25);
  CHECK(p.n == 129);
  CHECK(p.num_nodes() == 129u * 129u);
  CHECK(p.coord(0, p.half_nodes) == 0.0);
  CHECK(p.coord(1, 0) == -16.0);

  auto q = make_patch<2>(Vec<2>{40.0, 0.0}, 16.0, 0.25);
  CHECK(q.n == p.n);
  CHECK(q.coord(0, q.half_nodes) == 40.0);

  CHECK_THROWS_AS(make_patch<2>(Vec<2>{0.0, 0.0}, 5.0, 0.25), BadGeometry);
  CHECK_THROWS_AS(make_patch<2>(Vec<2>{0.0, 0.0}, 16.0, -0.1), BadGeometry);
  // two patches at distance 20 with L = 16 overlap
  CHECK_THROWS_AS(make_patched_field<2>({make_patch<2>(Vec<2>{0.0, 0.0}, 16.0, 0.25),
                                         make_patch<2>(Vec<2>{20.0, 0.0}, 16.0, 0.25)}),
                  BadGeometry);
  CHECK_NOTHROW(make_patched_field<2>({make_patch<2>(Vec<2>{0.0, 0.0}, 16.0, 0.25),
                                       make_patch<2>(Vec<2>{40.0, 0.0}, 16.0, 0.25)}));
}

TEST_CASE("stencils differentiate polynomials exactly") {
  auto p = make_patch<1>(Vec<1>{0.0}, 10.0, 0.5);
  std::vector<cplx> in(p.num_nodes()), d1(p.num_nodes()), d2(p.num_nodes());
  // degree-4 polynomial: D1 exact everywhere (including one-sided rows);
  // D2 (6-point edges) exact through degree 5 in the interior and edges.
  auto poly = [](double y) { return 0.3 + 1.7 * y - 0.4 * y * y + 0.09 * y * y * y + 0.01 * y * y * y * y; };
  auto dpoly = [](double y) { return 1.7 - 0.8 * y + 0.27 * y * y + 0.04 * y * y * y; };
  auto ddpoly = [](double y) { return -0.8 + 0.54 * y + 0.12 * y * y; };
  for_each_node(p, [&](std::size_t flat, const std::array<int, 1>& idx) {
    in[flat] = poly(p.node(idx)[0]);
  });
  detail::accumulate_derivative<1, 1>(p, in, d1, 0, cplx(1.0, 0.0));
  detail::accumulate_derivative<1, 2>(p, in, d2, 0, cplx(1.0, 0.0));
  for_each_node(p, [&](std::size_t flat, const std::array<int, 1>& idx) {
    double y = p.node(idx)[0];
    CHECK(std::abs(d1[flat].real() - dpoly(y)) < 1e-10);
    CHECK(std::abs(d2[flat].real() - ddpoly(y)) < 1e-10);
  });
}

TEST_CASE("trapezoid quadrature basics") {
  auto f = single_patch_field(16.0, 0.25);
  fill(f, [](Vec<2>) { return cplx(1.0, 0.0); });
  CHECK(integrate(f).real() == Catch::Approx(1024.0).epsilon(1e-12));

  // odd integrand on the symmetric grid
  auto g = single_patch_field(16.0, 0.25);
  fill(g, [&](Vec<2> y) {
    return cplx(y[0] * std::exp(-dot(y, y) / 4.0), 0.0);
  });
  CHECK(std::abs(integrate(g).real()) < 1e-13);

  // linearity
  auto u = single_patch_field(16.0, 0.25);
  fill(u, [](Vec<2> y) { return cplx(std::exp(-dot(y, y) / 9.0), 0.2); });
  auto lin = zero_like(u);
  add_scaled(lin, cplx(2.0, 0.0), u);
  add_scaled(lin, cplx(-0.5, 0.0), g);
  cplx li = integrate(lin);
  cplx expect = 2.0 * integrate(u) - 0.5 * integrate(g);
  CHECK(std::abs(li - expect) < 1e-12 * std::abs(expect));

  // l2_norm^2 == integrate(|u|^2)
  auto usq = zero_like(u);
  for (std::size_t i = 0; i < u.values[0].size(); ++i)
    usq.values[0][i] = std::norm(u.values[0][i]);
  CHECK(l2_norm(u) * l2_norm(u) == Catch::Approx(integrate(usq).real()).epsilon(1e-13));
}

TEST_CASE("quadrature of radial integrands matches the 1-D radial oracle") {
  const auto& prof = profile2d();
  auto f = single_patch_field(16.0, 0.25);
  fill(f, [&](Vec<2> y) {
    double w = eval_profile(prof, norm2(y)).first;
    return cplx(w * w, 0.0);
  });
  double oracle = profile_moment_nd(prof, 0, 2.0);  // 2 pi int r w^2 dr
  CHECK(integrate(f).real() == Catch::Approx(oracle).epsilon(1e-6));

  auto wf = single_patch_field(16.0, 0.25);
  fill(wf, [&](Vec<2> y) { return cplx(eval_profile(prof, norm2(y)).first, 0.0); });
  CHECK(l2_norm(wf) == Catch::Approx(std::sqrt(oracle)).epsilon(1e-6));

  // odd moment y1 w^2 vanishes by symmetry
  auto of = single_patch_field(16.0, 0.25);
  fill(of, [&](Vec<2> y) {
    double w = eval_profile(prof, norm2(y)).first;
    return cplx(y[0] * w * w, 0.0);
  });
  CHECK(std::abs(integrate(of).real()) < 1e-13);
}

TEST_CASE("inner product identities") {
  auto u = single_patch_field(12.0, 0.25);
  fill(u, [](Vec<2> y) { return cplx(std::exp(-dot(y, y) / 6.0), 0.0); });
  auto iu = zero_like(u);
  add_scaled(iu, cplx(0.0, 1.0), u);
  CHECK(std::abs(inner(u, iu)) < 1e-15 * inner(u, u));
  CHECK(l2_norm(zero_like(u)) == 0.0);
  // symmetry
  auto v = zero_like(u);
  fill(v, [](Vec<2> y) { return cplx(y[0] * 0.1, std::exp(-dot(y, y) / 8.0)); });
  CHECK(inner(u, v) == Catch::Approx(inner(v, u)).margin(1e-14));
}

TEST_CASE("magnetic gradient: constants and exact plane-wave cancellation") {
  auto zero_model = make_potential<2>("constant", {{"a1", 0.0}, {"a2", 0.0}});
  auto u = single_patch_field(12.0, 0.25);
  fill(u, [](Vec<2>) { return cplx(0.7, -0.3); });
  auto g = magnetic_gradient(u, zero_model, 0.1);
  CHECK(max_abs(g[0]) < 1e-12);
  CHECK(max_abs(g[1]) < 1e-12);

  // u = e^{i a.y} with A = +a: (i grad + A) u = 0 up to stencil truncation.
  Vec<2> a{0.4, -0.25};
  auto am = make_potential<2>("constant", {{"a1", a[0]}, {"a2", a[1]}});
  auto pw = single_patch_field(12.0, 0.25);
  fill(pw, [&](Vec<2> y) { return std::exp(cplx(0.0, dot(a, y))); });
  auto gpw = magnetic_gradient(pw, am, 0.3);
  CHECK(max_abs(gpw[0]) < 1e-4);
  CHECK(max_abs(gpw[1]) < 1e-4);

  CHECK(max_abs(magnetic_gradient(zero_like(u), am, 0.1)[0]) == 0.0);
}

TEST_CASE("discrete operators converge at 4th order on closed forms") {
  // u(y) = exp(-|y|^2/4) e^{i a.y}; both the magnetic gradient and the
  // magnetic Laplacian have closed forms against which we measure slopes.
  Vec<2> a{0.5, -0.3};
  auto am = make_potential<2>("constant", {{"a1", a[0]}, {"a2", a[1]}});
  auto env = [](Vec<2> y) { return std::exp(-dot(y, y) / 4.0); };

  std::vector<double> hs{0.5, 0.25, 0.125};
  std::vector<double> egrad, elap;
  for (double h : hs) {
    auto u = single_patch_field(12.0, h);
    fill(u, [&](Vec<2> y) { return env(y) * std::exp(cplx(0.0, dot(a, y))); });
    auto g = magnetic_gradient(u, am, 1.0);
    // (i grad + a)(E e^{iay}) = i grad(E) e^{iay}; grad E = -y/2 E
    double worst = 0.0;
    for (int comp = 0; comp < 2; ++comp) {
      for_each_node(u.patches[0], [&](std::size_t flat, const std::array<int, 2>& idx) {
        Vec<2> y = u.patches[0].node(idx);
        cplx exact = cplx(0.0, 1.0) * (-0.5 * y[comp] * env(y)) * std::exp(cplx(0.0, dot(a, y)));
        worst = std::max(worst, std::abs(g[comp].values[0][flat] - exact));
      });
    }
    egrad.push_back(worst);

    auto lap = magnetic_laplacian(u, am, 1.0);
    // (i grad + a)^2 (E e^{iay}) = (-lap E) e^{iay}; lap E = (|y|^2/4 - 1) E
    double worst2 = 0.0;
    for_each_node(u.patches[0], [&](std::size_t flat, const std::array<int, 2>& idx) {
      Vec<2> y = u.patches[0].node(idx);
      cplx exact = -(dot(y, y) / 4.0 - 1.0) * env(y) * std::exp(cplx(0.0, dot(a, y)));
      worst2 = std::max(worst2, std::abs(lap.values[0][flat] - exact));
    });
    elap.push_back(worst2);
  }
  // err ~ h^q gives slope q in log(err) vs log(h)
  CHECK(fit_loglog(hs, egrad).slope >= 3.5);
  CHECK(fit_loglog(hs, elap).slope >= 3.5);
}

TEST_CASE("magnetic laplacian reproduces the radial ODE identity") {
  const auto& prof = profile2d();
  auto zero_model = make_potential<2>("constant", {{"a1", 0.0}, {"a2", 0.0}});

  std::vector<double> hs{0.25, 0.125, 0.0625};
  std::vector<double> errs;
  for (double h : hs) {
    auto u = single_patch_field(16.0, h);
    fill(u, [&](Vec<2> y) { return cplx(eval_profile(prof, norm2(y)).first, 0.0); });
    auto lap = magnetic_laplacian(u, zero_model, 0.1);
    // -lap w = w^p - w
    double worst = 0.0;
    for_each_node(u.patches[0], [&](std::size_t flat, const std::array<int, 2>& idx) {
      double w = u.values[0][flat].real();
      cplx expect(std::pow(w, 3.0) - w, 0.0);
      worst = std::max(worst, std::abs(lap.values[0][flat] - expect));
    });
    errs.push_back(worst);
  }
  CHECK(fit_loglog(hs, errs).slope >= 3.5);
  CHECK(errs.back() < 1e-3);

  // gauge-shifted ground state under constant A annihilates the magnetic part
  Vec<2> a{0.3, 0.2};
  auto am = make_potential<2>("constant", {{"a1", a[0]}, {"a2", a[1]}});
  auto u = single_patch_field(16.0, 0.125);
  fill(u, [&](Vec<2> y) {
    return eval_profile(prof, norm2(y)).first * std::exp(cplx(0.0, dot(a, y)));
  });
  auto lap = magnetic_laplacian(u, am, 0.05);
  double worst = 0.0;
  for_each_node(u.patches[0], [&](std::size_t flat, const std::array<int, 2>& idx) {
    Vec<2> y = u.patches[0].node(idx);
    double w = eval_profile(prof, norm2(y)).first;
    cplx expect = (std::pow(w, 3.0) - w) * std::exp(cplx(0.0, dot(a, y)));
    worst = std::max(worst, std::abs(lap.values[0][flat] - expect));
  });
  // without the gauge cancellation the defect would be O(|a|^2 w) ~ 0.3
  CHECK(worst < 1e-2);

  CHECK(max_abs(magnetic_laplacian(zero_like(u), am, 0.05)) == 0.0);
}
