#include "doctest.h"

#include <cmath>
#include <vector>

#include "slowscat/quadrature.hpp"

using namespace slowscat;

TEST_CASE("adaptive Gauss-Kronrod on smooth and broken integrands") {
    const auto r = quad::integrate([](double x) { return std::sin(x); }, 0.0, pi);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-13));

    std::vector<double> brk{0.3};
    quad::Options o;
    o.breaks = brk;
    const auto step = quad::integrate([](double x) { return x < 0.3 ? 1.0 : 0.0; }, 0.0, 1.0, o);
    CHECK(std::abs(step.value - 0.3) < 1e-14);

    const auto rev = quad::integrate([](double x) { return x; }, 1.0, 0.0);
    CHECK(rev.value == doctest::Approx(-0.5));

    const auto c = quad::integrate([](double x) { return std::exp(cplx(0, 1) * x); }, 0.0, pi);
    CHECK(std::abs(c.value - cplx(0.0, 2.0)) < 1e-12);
}

TEST_CASE("integrals to infinity and divergence flags") {
    const auto r = quad::integrate_to_infinity([](double x) { return std::pow(1.0 + x, -2.0); }, 1.0);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-10));

    const auto slow = quad::integrate_to_infinity([](double x) { return std::pow(1.0 + x, -1.08); }, 0.0);
    CHECK(slow.value == doctest::Approx(12.5).epsilon(1e-8));

    const auto div = quad::integrate_to_infinity([](double x) { return std::pow(1.0 + x, -0.6); }, 0.0);
    CHECK_FALSE(div.converged);
    CHECK(std::isinf(div.value));
}

TEST_CASE("Wynn epsilon sums a geometric series exactly") {
    std::vector<double> s;
    double acc = 0.0;
    for (int k = 0; k < 6; ++k) {
        acc += std::pow(0.9, k);
        s.push_back(acc);
    }
    const auto w = quad::wynn_epsilon(s);
    CHECK(w.value == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("Gauss-Legendre rules") {
    for (int n : {1, 5, 16, 40}) {
        const auto& g = quad::gauss_legendre(n);
        double sw = 0.0, sx2 = 0.0;
        for (int i = 0; i < n; ++i) {
            sw += g.weights[i];
            sx2 += g.weights[i] * g.nodes[i] * g.nodes[i];
        }
        CHECK(sw == doctest::Approx(2.0).epsilon(1e-14));
        if (n >= 2) CHECK(sx2 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("panel collocation integrates piecewise polynomials exactly") {
    const auto grid = quad::PanelGrid::covering(0.0, 3.0, 0.7, std::vector<double>{1.0});
    std::vector<cplx> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.nodes()[i];
        f[i] = x < 1.0 ? x * x * x : cplx(0.0, std::pow(x, 7));
    }
    const auto left = grid.cumulative_left(f);
    const auto right = grid.cumulative_right(f);
    const auto F = [](double x) {
        if (x < 1.0) return cplx(std::pow(x, 4) / 4.0, 0.0);
        return cplx(0.25, (std::pow(x, 8) - 1.0) / 8.0);
    };
    const cplx total = F(3.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.nodes()[i];
        CHECK(std::abs(left[i] - F(x)) < 1e-10);
        CHECK(std::abs(right[i] - (total - F(x))) < 1e-10);
    }
    CHECK(std::abs(grid.integral(f) - total) < 1e-10);
    CHECK(std::abs(grid.interpolate(f, 2.5) - cplx(0.0, std::pow(2.5, 7))) < 1e-9);
    CHECK(grid.refined().panels() == 2 * grid.panels());
}
