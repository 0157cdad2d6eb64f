#include "doctest.h"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/crank_nicolson.hpp"
#include "slowscat/spectral.hpp"

using namespace slowscat;
using namespace slowscat::spectral;

namespace {

// exp(-(x-x0)^2/(2 s2) + i k0 (x-x0)) evolved freely on the whole line for time t.
cplx free_gaussian(double x, double x0, double sigma, double k0, double t) {
    const double s2 = sigma * sigma;
    const cplx d = s2 + 2.0 * I * t;
    const double y = x - x0 - 2.0 * k0 * t;
    return std::sqrt(s2 / d) * std::exp(-y * y / (2.0 * d) + I * k0 * (x - x0) - I * k0 * k0 * t);
}

// Odd extension through x = 0: the free half-line evolution by images.
std::vector<cplx> images(const std::vector<double>& x, double x0, double sigma, double k0, double t) {
    std::vector<cplx> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        g[k] = free_gaussian(x[k], x0, sigma, k0, t) - free_gaussian(-x[k], x0, sigma, k0, t);
    }
    return g;
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

TEST_CASE("gamma coefficient") {
    for (double lam : {0.5, 1.0, 3.0}) {
        const auto g = gamma_coeff(make_zero(), lam);
        CHECK(std::abs(g.value - 1.0) < 1e-14);
        CHECK_FALSE(g.resonant);
    }
    CHECK_THROWS_AS(gamma_coeff(make_zero(), 0.0), DomainError);

    // Series and ODE paths to u(0) for a small bump.
    const auto V = make_bump(0.3, 0.0, 2.0);
    for (double lam : {0.8, 1.5}) {
        const auto series = eigen::solve_series(V, {0.0}, cplx(lam * lam, 0.0), 12, 1e-14);
        const cplx g_series = 1.0 / series.solution.u[0];
        CHECK(std::abs(gamma_coeff(V, lam).value - g_series) < 1e-6);
    }
}

TEST_CASE("limiting absorption cross-check") {
    const auto V = make_square_barrier(1.0, 0.0, 1.0);
    const auto b = m_boundary(V, 1.0);
    REQUIRE(b.stable);
    const auto g = gamma_coeff(V, 1.0);
    CHECK(std::abs(std::norm(g.value) * 1.0 - b.m.imag()) / b.m.imag() < 1e-4);

    const auto d0 = ac_density(make_zero(), 1.0);
    CHECK(d0.stable);
    CHECK(std::abs(d0.value - 1.0 / pi) < 1e-8);

    // The density approaches the free value sqrt(E)/pi at high energy.
    double prev = 1.0;
    for (double lam : {2.0, 4.0, 8.0}) {
        const auto d = ac_density(V, lam);
        REQUIRE(d.stable);
        const double dev = std::abs(d.value * pi / lam - 1.0);
        CHECK(dev < prev);
        prev = dev;
    }
}

TEST_CASE("spectral table") {
    const auto V = make_square_barrier(1.0, 0.0, 1.0);
    const auto t = build_spectral_table(V, {0.8, 1.2, 2.0});
    REQUIRE(t.rows.size() == 3);
    for (const auto& r : t.rows) {
        CHECK(r.stable);
        CHECK(r.m.imag() > 0.0);
        CHECK(std::abs(r.density - r.m.imag() / pi) < 1e-15);
        CHECK(r.consistency < 1e-4);
        CHECK(std::abs(std::abs(std::exp(I * r.omega)) - 1.0) < 1e-15);
    }
    std::ostringstream os;
    t.write_csv(os);
    const auto s = os.str();
    CHECK(s.rfind("lambda,re_m,im_m,density,re_gamma,im_gamma,omega,stable\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}

TEST_CASE("psi table") {
    const auto x = uniform_grid(0.0, 20.0, 401);
    const std::vector<double> lam{0.5, 1.0, 2.0};
    const SpectralBasis B0(make_zero(), x, lam);
    for (std::size_t j = 0; j < lam.size(); ++j) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            CHECK(std::abs(B0.psi()(k, j) - std::sin(lam[j] * x[k])) < 1e-12);
        }
    }
    const SpectralBasis B(make_square_barrier(1.0, 0.0, 1.0), x, lam);
    CHECK(B.formula_gap() < 1e-8);
    CHECK(B.realness_defect() < 1e-9);
    for (std::size_t j = 0; j < lam.size(); ++j) CHECK(std::abs(B.psi()(0, j)) < 1e-14);

    const SpectralBasis Bp(make_power_decay(1.0, 0.6), uniform_grid(0.0, 30.0, 301), {0.8, 1.2});
    CHECK(Bp.formula_gap() < 1e-8);
    CHECK(Bp.realness_defect() < 1e-9);
}

TEST_CASE("transforms") {
    const double x0 = 20.0, sigma = 3.0, k0 = 2.0;
    auto packet = [&](const std::vector<double>& x) { return images(x, x0, sigma, k0, 0.0); };

    SUBCASE("free case is the sine transform") {
        const auto x = uniform_grid(0.0, 60.0, 1201);
        const SpectralBasis B(make_zero(), x, uniform_grid(0.1, 5.0, 246));
        const auto p = packet_from_values(B, packet(x));
        CHECK(p.roundtrip_defect < 1e-7);
        CHECK_FALSE(p.leakage_flag);
        CHECK(std::abs(B.norm_lambda(p.coeffs) / B.norm_x(p.values) - 1.0) < 1e-8);
    }

    SUBCASE("barrier defect shrinks under refinement") {
        const auto V = make_square_barrier(1.0, 0.0, 1.0);
        double prev = 1.0;
        for (int r : {1, 2}) {
            const auto x = uniform_grid(0.0, 60.0, 300 * r + 1);
            const SpectralBasis B(V, x, uniform_grid(0.1, 4.0, 60 * r));
            const auto p = packet_from_values(B, packet(x));
            CHECK(p.roundtrip_defect < 0.02);
            CHECK(p.roundtrip_defect < prev);
            prev = p.roundtrip_defect;
            // No bound states: the whole packet is absolutely continuous.
            CHECK(std::abs(B.norm_lambda(p.coeffs) / B.norm_x(p.values) - 1.0) < 0.02);
        }
    }

    SUBCASE("a packet far out concentrates at its wavenumber") {
        const auto x = uniform_grid(0.0, 100.0, 2001);
        const SpectralBasis B(make_square_barrier(1.0, 0.0, 1.0), x, uniform_grid(0.1, 5.0, 300));
        const auto p = packet_from_values(B, images(x, 60.0, 8.0, 2.5, 0.0));
        std::size_t arg = 0;
        for (std::size_t j = 0; j < p.coeffs.size(); ++j) {
            if (std::abs(p.coeffs[j]) > std::abs(p.coeffs[arg])) arg = j;
        }
        CHECK(std::abs(B.lambda()[arg] - 2.5) < 0.02);
    }

    SUBCASE("leakage above the grid is flagged") {
        const auto x = uniform_grid(0.0, 60.0, 1201);
        const SpectralBasis B(make_zero(), x, uniform_grid(0.1, 2.0, 96));
        CHECK(packet_from_values(B, packet(x)).leakage_flag);
    }
}

TEST_CASE("ac projection") {
    const auto x = uniform_grid(0.0, 60.0, 1201);
    const auto g = images(x, 20.0, 3.0, 2.0, 0.0);

    const SpectralBasis B0(make_zero(), x, uniform_grid(0.1, 5.0, 246));
    const auto p0 = packet_from_values(B0, g);
    const auto full = project_ac(B0, 0.01, 30.0, p0);
    CHECK(max_abs_diff(full.packet.values, g) < 1e-8);
    CHECK_FALSE(full.endpoint_flag);
    const auto none = project_ac(B0, 16.0, 25.0, p0);
    CHECK(B0.norm_x(none.packet.values) < 1e-8);
    CHECK_THROWS_AS(project_ac(B0, 0.0, 1.0, p0), DomainError);

    const SpectralBasis B(make_square_barrier(1.0, 0.0, 1.0), x, uniform_grid(0.1, 5.0, 246));
    const auto p = packet_from_values(B, g);
    const auto once = project_ac(B, 2.0, 6.0, p);
    const auto twice = project_ac(B, 2.0, 6.0, once.packet);
    CHECK(max_abs_diff(once.packet.values, twice.packet.values) < 1e-8);
    // The projections onto complementary bands add up to the full packet.
    const auto lo = project_ac(B, 0.001, 2.0, p);
    const auto hi = project_ac(B, 2.0, 25.0, p);
    std::vector<cplx> sum(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) sum[k] = lo.packet.values[k] + hi.packet.values[k];
    CHECK(max_abs_diff(sum, p.values) < 0.02);
}

TEST_CASE("perturbed evolution") {
    const double x0 = 15.0, sigma = 3.0, k0 = 2.0;
    const auto x = uniform_grid(0.0, 70.0, 1401);
    const auto lam = uniform_grid(0.1, 5.0, 246);
    const auto g = images(x, x0, sigma, k0, 0.0);

    SUBCASE("t = 0 is the inverse transform") {
        const SpectralBasis B(make_square_barrier(1.0, 0.0, 1.0), x, lam);
        const auto p = packet_from_values(B, g);
        const auto e = evolve_V(B, p, 0.0);
        CHECK(max_abs_diff(e.values, B.inverse(p.coeffs)) < 1e-15);
    }

    SUBCASE("free case matches the image method") {
        const SpectralBasis B(make_zero(), x, lam);
        const auto p = packet_from_values(B, g);
        for (double t : {1.0, 2.5, 5.0}) {
            const auto e = evolve_V(B, p, t);
            CHECK_FALSE(e.beyond_horizon);
            CHECK(max_abs_diff(e.values, images(x, x0, sigma, k0, t)) < 1e-6);
            CHECK(e.norm_defect < 1e-8);
        }
    }

    SUBCASE("compact potential matches the time-domain oracle") {
        const auto V = make_bump(1.0, 1.0, 3.0);
        const SpectralBasis B(V, x, lam);
        const auto p = packet_from_values(B, g);
        const auto fine = uniform_grid(0.0, 70.0, 2801);
        const auto g_fine = images(fine, x0, sigma, k0, 0.0);
        for (double t : {1.0, 5.0}) {
            const auto e = evolve_V(B, p, t);
            const auto ref = oracle::schrodinger([&](double s) { return V(s); }, fine, g_fine, t,
                                                 static_cast<int>(t * 1000));
            double worst = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(e.values[k] - ref[2 * k]));
            CHECK(worst < 1e-4);
            CHECK(e.norm_defect < 1e-6);
        }
    }
}
