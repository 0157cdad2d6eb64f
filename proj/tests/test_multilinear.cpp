#include "doctest.h"

#include <cmath>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "slowscat/multilinear.hpp"

using namespace slowscat;
using namespace slowscat::ml;

namespace {

Function1D indicator(double a, double b, double h = 1.0) { return Function1D::step({a, b}, {cplx(h)}); }

Function1D smooth(std::function<double(double)> g, double lo, double hi) {
    Function1D f;
    f.lo = lo;
    f.hi = hi;
    f.f = [g](double x) { return cplx(g(x)); };
    return f;
}

double oracle_mass(const std::function<double(double)>& g, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(g, a, b, 1e-15);
}

}  // namespace

TEST_CASE("adapted structures on simple densities") {
    const auto ms = build_adapted(indicator(0, 1), 2.0, 1, AdaptMode::lp);
    CHECK(ms.level(1)[1] == doctest::Approx(0.5).epsilon(1e-14));

    const auto lin = build_adapted(smooth([](double x) { return 2 * x; }, 0, 1), 1.0, 1, AdaptMode::lp);
    CHECK(lin.level(1)[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));

    const auto q = build_adapted(indicator(0, 1), 2.0, 2, AdaptMode::lp).level(2);
    const double expect[] = {0, 0.25, 0.5, 0.75, 1};
    for (int i = 0; i < 5; ++i) CHECK(q[i] == doctest::Approx(expect[i]).epsilon(1e-14));

    CHECK_THROWS_AS(build_adapted(Function1D::zero(0, 1), 2.0, 3, AdaptMode::lp), DomainError);
}

TEST_CASE("Lp-adapted cells carry equal mass") {
    const std::vector<std::pair<std::function<double(double)>, std::pair<double, double>>> dens = {
        {[](double x) { return 2 * x; }, {0.0, 1.0}},
        {[](double x) { return std::exp(-x); }, {0.0, 6.0}},
        {[](double x) { return 1.0 + std::sin(6 * x); }, {-1.0, 2.0}},
    };
    for (const auto& [g, range] : dens) {
        const double p = 1.5;
        const auto f = smooth(g, range.first, range.second);
        const int M = 8;
        const auto ms = build_adapted(f, p, M, AdaptMode::lp);
        CHECK(ms.valid());
        const auto gp = [&](double x) { return std::pow(std::abs(g(x)), p); };
        const double total = oracle_mass(gp, range.first, range.second);
        for (int m : {1, 4, M}) {
            const auto x = ms.level(m);
            for (std::size_t j = 1; j < x.size(); ++j) {
                const double cell = oracle_mass(gp, x[j - 1], x[j]);
                CHECK(std::abs(cell / (total / std::pow(2.0, m)) - 1.0) < 1e-10);
            }
        }
    }
}

TEST_CASE("amalgam-adapted cells obey the halving bound") {
    const auto f = smooth([](double x) { return std::pow(1.0 + x, -0.6) * (1.2 + std::cos(3 * x)); }, 0.0, 9.5);
    const double p = 1.8;
    const int M = 6;
    const auto ms = build_adapted(f, p, M, AdaptMode::amalgam);
    CHECK(ms.valid());
    const double total = amalgam_mass(f, p, f.lo, f.hi);
    for (int m = 1; m <= M; ++m) {
        const auto x = ms.level(m);
        for (std::size_t j = 1; j < x.size(); ++j) {
            CHECK(amalgam_mass(f, p, x[j - 1], x[j]) <= total * std::pow(2.0, -m) * (1 + 1e-9));
        }
    }
}

TEST_CASE("simplex integrals of indicators") {
    const std::vector<Function1D> two{indicator(0, 1), indicator(0, 1)};
    CHECK(std::abs(m_n_bruteforce(two) - 0.5) < 1e-12);
    const std::vector<Function1D> three{indicator(0, 1), indicator(0, 1), indicator(0, 1)};
    CHECK(std::abs(m_n_bruteforce(three) - 1.0 / 6.0) < 1e-12);
    const std::vector<Function1D> ordered{indicator(0, 1), indicator(1, 2)};
    CHECK(std::abs(m_n_bruteforce(ordered) - 1.0) < 1e-12);
    const std::vector<Function1D> reversed{indicator(1, 2), indicator(0, 1)};
    CHECK(std::abs(m_n_bruteforce(reversed)) < 1e-12);

    CHECK(m_n_star_bruteforce(two).value == doctest::Approx(0.5));
    const std::vector<Function1D> sine{smooth([](double x) { return std::sin(x); }, 0, 2 * pi)};
    const auto s = m_n_star_bruteforce(sine);
    CHECK(s.value == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(s.argmax == doctest::Approx(pi).epsilon(1e-6));
    const std::vector<Function1D> signs{indicator(0, 1), indicator(0, 1, -1.0)};
    CHECK(m_n_star_bruteforce(signs).value == doctest::Approx(0.5));

    std::vector<Function1D> seven(7, indicator(0, 1));
    CHECK_THROWS_AS(m_n_bruteforce(seven), DomainError);
    Function1D wide = indicator(0, 1);
    wide.hi = std::numeric_limits<double>::infinity();
    const std::vector<Function1D> unb{wide};
    CHECK_THROWS_AS(m_n_bruteforce(unb), DomainError);
}

TEST_CASE("simplex integrals are reversal symmetric") {
    const auto corpus = random_step_corpus(99, 12, 5);
    for (const auto& fs : corpus.samples) {
        std::vector<Function1D> refl;
        for (auto it = fs.rbegin(); it != fs.rend(); ++it) refl.push_back(it->reflected());
        CHECK(std::abs(m_n_bruteforce(fs) - m_n_bruteforce(refl)) < 1e-8);
    }
}

TEST_CASE("g_delta values") {
    // Uniform dyadic cells: each level contributes 2^{-m/2}.
    const int M = 20;
    const auto ms = MartingaleStructure::uniform(0, 1, M);
    const auto g = g_delta(indicator(0, 1), ms, 0.0);
    double geo = 0.0;
    for (int m = 1; m <= M; ++m) geo += std::pow(2.0, -0.5 * m);
    CHECK(g.value == doctest::Approx(geo).epsilon(1e-12));
    CHECK(g.last_level == doctest::Approx(std::pow(2.0, -0.5 * M)));

    // Every cell of a 16-period sine integrates to zero.
    const auto ms4 = MartingaleStructure::uniform(0, 1, 4);
    Function1D alt;
    alt.lo = 0;
    alt.hi = 1;
    alt.f = [](double x) { return cplx(std::sin(2 * pi * 16 * x)); };
    const auto ga = g_delta(alt, ms4, 0.0);
    CHECK(ga.value < 1e-12);

    CHECK(g_delta(Function1D::zero(0, 1), ms4, 0.3).value == 0.0);

    // Subadditivity.
    const auto corpus = random_step_corpus(5, 10, 2);
    const auto ms10 = MartingaleStructure::uniform(0, 1, 10);
    for (const auto& fs : corpus.samples) {
        const auto& a = fs[0];
        const auto& b = fs[1];
        Function1D sum;
        sum.lo = 0;
        sum.hi = 1;
        sum.breaks = a.breaks;
        sum.breaks.insert(sum.breaks.end(), b.breaks.begin(), b.breaks.end());
        sum.f = [a, b](double x) { return a(x) + b(x); };
        sum.primitive = [a, b](double x) { return a.primitive(x) + b.primitive(x); };
        CHECK(g_delta(sum, ms10, 0.05).value <= g_delta(a, ms10, 0.05).value + g_delta(b, ms10, 0.05).value + 1e-12);
    }
}

TEST_CASE("phase cell integrals against the elementary primitive") {
    const auto V = make_square_barrier(1.0, 0.0, 1.0);
    const double lam = 1.3;
    const double kappa = lam - 1.0 / (2 * lam);
    const auto phi = [&](double t) { return cplx(lam * t - t / (2 * lam)); };
    const auto ms = MartingaleStructure::uniform(0, 1, 3);
    const auto lv = phase_cell_integrals(V, ms, phi);
    const cplx expect = (std::exp(2.0 * I * kappa * 0.5) - 1.0) / (2.0 * I * kappa);
    CHECK(std::abs(lv[1].minus[0] - expect) < 1e-12);
    // Plus integrals use the right endpoint.
    const cplx expect_plus = (1.0 - std::exp(-2.0 * I * kappa * 0.5)) / (2.0 * I * kappa) * std::exp(2.0 * I * kappa * 0.5);
    CHECK(std::abs(lv[1].plus[0] - expect_plus) < 1e-12);

    const auto zero = g_phase(make_zero(), ms, GWeight::linear, 0.0, phi);
    CHECK(zero.value == 0.0);

    // Damping: larger Im zeta gives a smaller G on a barrier.
    const auto G = [&](double eps) {
        const cplx zeta(lam, eps);
        const auto ph = [&](double t) { return zeta * t - V.cumulative(t) / (2.0 * zeta); };
        return g_phase(V, ms, GWeight::linear, 0.0, ph).value;
    };
    CHECK(G(0.5) < G(0.1));
    CHECK(G(2.0) < G(0.5));
}

TEST_CASE("numerical bound bookkeeping") {
    const std::vector<Function1D> zeros{Function1D::zero(0, 1), Function1D::zero(0, 1)};
    const auto z = check_numerical_bound(zeros, 0.05, 0.1, 1.0);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    CHECK(z.holds);

    const std::vector<Function1D> two{indicator(0, 1), indicator(0, 1)};
    const int M = 14;
    const auto r = check_numerical_bound(two, 0.05, 0.1, 2.0, {M});
    CHECK(r.lhs == doctest::Approx(0.5));
    const auto geo = [&](double d) {
        double s = 0.0;
        for (int m = 1; m <= M; ++m) s += std::pow(2.0, d * m - 0.5 * m);
        return s;
    };
    CHECK(r.g_first == doctest::Approx(geo(-0.05)).epsilon(1e-12));
    CHECK(r.g_rest == doctest::Approx(geo(0.05)).epsilon(1e-12));
    CHECK(r.rhs == doctest::Approx(8.0 / std::sqrt(2.0) * geo(-0.05) * geo(0.05)).epsilon(1e-12));
    CHECK(r.holds);
    CHECK(required_constant(r) < 2.0);
}

TEST_CASE("modified binomial inequality") {
    // n = 2 and n = 3 have empty middle sums.
    CHECK(calibrate_bn(50.0, 3, 101).ok);
    CHECK_FALSE(calibrate_bn(2.0, 4, 1001).ok);
    // Reduced form: x^n + y^n + C sum sqrt(binom) x^i y^{n-i} <= 1; for n = 4 the
    // binding point is x = y, giving C = 2/sqrt(6).
    const double c4 = max_admissible_bn_constant(4, 10001);
    CHECK(c4 == doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-7));
    // Independent minimum of (1 - x^n - y^n) / S_n over the same circle grid.
    const int grid = 4001;
    double oracle = 1e300;
    for (int n = 4; n <= 20; ++n) {
        for (int k = 1; k + 1 < grid; ++k) {
            const double th = 0.5 * pi * k / (grid - 1);
            const double x = std::cos(th), y = std::sin(th);
            double S = 0.0;
            for (int i = 2; i <= n - 2; ++i) {
                S += std::sqrt(std::tgamma(n + 1.0) / (std::tgamma(i + 1.0) * std::tgamma(n - i + 1.0))) *
                     std::pow(x, i) * std::pow(y, n - i);
            }
            oracle = std::min(oracle, (1 - std::pow(x, n) - std::pow(y, n)) / S);
        }
    }
    CHECK(max_admissible_bn_constant(20, grid) == doctest::Approx(oracle).epsilon(1e-8));
    const auto t = BnTable::make(0.5, 20);
    for (int n = 1; n < 20; ++n) CHECK(std::sqrt(n) * t.b[n + 1] / t.b[n] <= 0.5 + 1e-12);
}
