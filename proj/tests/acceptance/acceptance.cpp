#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "slowscat/dirac.hpp"
#include "slowscat/eigen.hpp"
#include "slowscat/multilinear.hpp"
#include "slowscat/potential.hpp"
#include "slowscat/spectral.hpp"
#include "slowscat/waveop.hpp"

using namespace slowscat;
using spectral::uniform_grid;

namespace {

// Pinned tolerances.
constexpr double tol_free_m = 1e-8;
constexpr double tol_free_limit_error = 1e-6;
constexpr double tol_series_gap = 1e-7;
constexpr double tol_wronskian = 1e-9;
constexpr double tol_scattering = 1e-6;
constexpr double tol_barrier_t = 1e-4;
constexpr double tol_absorption = 1e-4;
constexpr double tol_roundtrip = 0.02;
constexpr double tol_adapted = 1e-10;
constexpr double min_decay_exponent = 0.75;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

Outcome free_m_function() {
    Outcome o;
    double worst = 0.0;
    for (double E : {0.5, 1.0, 2.0, 4.0}) {
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const cplx z(E, eps);
            worst = std::max(worst, rel(eigen::weyl_m(make_zero(), z), I * std::sqrt(z)));
        }
        const auto lim = eigen::boundary_limit([](cplx z) { return eigen::weyl_m(make_zero(), z); }, E);
        o.require(lim.stable, "limit unstable at E=" + fmt(E));
        o.require(lim.error < tol_free_limit_error, "limit error " + fmt(lim.error) + " at E=" + fmt(E));
    }
    o.require(worst < tol_free_m, "relative error " + fmt(worst));
    if (o.pass) o.detail = "max rel error " + fmt(worst);
    return o;
}

// -u'' + V u = z u integrated backward with odeint from plane-wave data beyond the support.
std::vector<cplx> bump_oracle(const Potential& V, double b, double Q, cplx z, const std::vector<double>& x) {
    // State (Re u, Im u, Re u', Im u').
    using State = std::array<double, 4>;
    namespace ode = boost::numeric::odeint;
    const cplx zeta = std::sqrt(z);
    const auto exact = [&](double y) { return std::exp(I * (zeta * y - Q / (2.0 * zeta))); };
    std::vector<cplx> u(x.size());
    const cplx ub = exact(b), dub = I * zeta * ub;
    State s{ub.real(), ub.imag(), dub.real(), dub.imag()};
    double at = b;
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-14, 1e-14);
    const auto rhs = [&](const State& y, State& d, double t) {
        const cplx acc = (V.eval(t) - z) * cplx(y[0], y[1]);
        d = {y[2], y[3], acc.real(), acc.imag()};
    };
    for (std::size_t k = x.size(); k-- > 0;) {
        if (x[k] >= b) {
            u[k] = exact(x[k]);
            continue;
        }
        ode::integrate_adaptive(stepper, rhs, s, at, x[k], -1e-3);
        at = x[k];
        u[k] = cplx(s[0], s[1]);
    }
    return u;
}

Outcome series_oracle() {
    Outcome o;
    const auto V = make_bump(1.0, 0.0, 2.0);
    const cplx z(1.0, 0.1);
    const auto x = uniform_grid(0.0, 4.0, 41);
    const auto s = eigen::solve_series(V, x, z, 12, 1e-15);
    // int_0^2 64 s^3 (1-s)^3 dx with s = x/2.
    const double Q = 2.0 * 64.0 / 140.0;
    const auto u = bump_oracle(V, 2.0, Q, z, x);
    double gap = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) gap = std::max(gap, std::abs(s.solution.u[k] - u[k]));
    o.require(gap < tol_series_gap, "sup gap " + fmt(gap));
    o.require(s.diagnostics.envelope_ok, "envelope log-margin not monotone");
    if (o.pass) o.detail = "sup gap " + fmt(gap);
    return o;
}

Outcome wronskian_conservation() {
    Outcome o;
    const auto x = uniform_grid(0.0, 50.0, 501);
    const std::vector<std::pair<std::string, Potential>> pots = {
        {"zero", make_zero()}, {"barrier", make_square_barrier(1.0, 0.0, 1.0)}, {"power", make_power_decay(1.0, 0.6)}};
    double worst = 0.0;
    for (const auto& [name, V] : pots) {
        const cplx z = 1.5;
        const auto a = eigen::solve_ivp(V, z, 0.0, 1.0, x, eigen::Direction::forward);
        const auto b = eigen::solve_ivp(V, z, 1.0, 0.0, x, eigen::Direction::forward);
        const double ds = eigen::wronskian(a, b).max_drift;
        const auto c = dirac::Coupling::from_q(V);
        const double dd = dirac::wronskian(dirac::u1(c, z, x), dirac::u2(c, z, x)).max_drift;
        o.require(ds < tol_wronskian, name + " schrodinger drift " + fmt(ds));
        o.require(dd < tol_wronskian, name + " dirac drift " + fmt(dd));
        worst = std::max({worst, ds, dd});
    }
    if (o.pass) o.detail = "max drift " + fmt(worst);
    return o;
}

Outcome scattering_identities() {
    Outcome o;
    double worst = 0.0;
    for (const auto& V : {make_square_barrier(1.0, 0.0, 1.0), make_bump(1.0, -1.0, 1.0)}) {
        for (double lam : uniform_grid(0.5, 3.0, 20)) {
            const auto S = waveop::scattering_wholeline(V, lam);
            // Independent evaluation of the identities from the returned coefficients.
            const double unit1 = std::abs(std::norm(S.r1) + std::norm(S.t1) - 1.0);
            const double unit2 = std::abs(std::norm(S.r2) + std::norm(S.t2) - 1.0);
            const double tdef = std::abs(S.t1 - S.t2);
            const double rdef = std::abs(S.r2 + S.t1 / std::conj(S.t1) * std::conj(S.r1));
            worst = std::max({worst, unit1, unit2, tdef, rdef});
            o.require(!S.unstable, "unstable at lambda=" + fmt(lam));
        }
    }
    o.require(worst < tol_scattering, "identity defect " + fmt(worst));

    const double E = 2.0, h = 1.0, w = 1.0;
    const double kappa = std::sqrt(E - h);
    const double t2 = 1.0 / (1.0 + h * h * std::pow(std::sin(kappa * w), 2) / (4.0 * E * (E - h)));
    const double got = std::norm(waveop::scattering_wholeline(make_square_barrier(h, 0.0, w), std::sqrt(E)).t1);
    o.require(std::abs(got - t2) < tol_barrier_t, "|t|^2 " + fmt(got) + " vs " + fmt(t2));
    if (o.pass) o.detail = "max defect " + fmt(worst) + ", |t|^2(E=2) = " + fmt(got);
    return o;
}

Outcome limiting_absorption() {
    Outcome o;
    const auto V = make_square_barrier(1.0, 0.0, 1.0);
    std::vector<double> lam;
    for (double E : uniform_grid(0.25, 9.0, 20)) lam.push_back(std::sqrt(E));
    const auto tab = spectral::build_spectral_table(V, lam);
    int stable = 0;
    double worst = 0.0;
    for (const auto& r : tab.rows) {
        if (!r.stable || r.resonant) continue;
        ++stable;
        worst = std::max(worst, std::abs(std::norm(r.gamma) * r.lambda - r.m.imag()) / r.m.imag());
    }
    o.require(stable > 0, "no stable rows");
    o.require(worst < tol_absorption, "relative gap " + fmt(worst));
    if (o.pass) o.detail = std::to_string(stable) + "/20 stable rows, max gap " + fmt(worst);
    return o;
}

std::vector<cplx> odd_gaussian(const std::vector<double>& x, double x0, double sigma, double k0) {
    std::vector<cplx> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const auto gs = [&](double y) {
            const double d = y - x0;
            return std::exp(-d * d / (2.0 * sigma * sigma) + I * k0 * d);
        };
        g[k] = gs(x[k]) - gs(-x[k]);
    }
    return g;
}

Outcome transform_unitarity() {
    Outcome o;
    const auto V = make_square_barrier(1.0, 0.0, 1.0);
    double prev = 1.0;
    std::string trail;
    for (int r : {1, 2}) {
        const auto x = uniform_grid(0.0, 60.0, 300 * r + 1);
        const spectral::SpectralBasis B(V, x, uniform_grid(0.1, 4.0, 60 * r));
        const auto p = spectral::packet_from_values(B, odd_gaussian(x, 20.0, 3.0, 2.0));
        o.require(p.roundtrip_defect < tol_roundtrip, "defect " + fmt(p.roundtrip_defect));
        o.require(p.roundtrip_defect < prev, "defect not decreasing");
        prev = p.roundtrip_defect;
        trail += (trail.empty() ? "" : " -> ") + fmt(p.roundtrip_defect);
    }
    if (o.pass) o.detail = "defect " + trail;
    return o;
}

Outcome modified_wave_operator() {
    Outcome o;
    const auto lam = uniform_grid(0.6, 1.4, 267);
    const auto f = spectral::band_coefficients(lam, 0.8, 1.2, 0.0);
    const auto sched = waveop::geometric_schedule(12.5, 9);
    const auto x = uniform_grid(0.0, 900.0, 9001);
    spectral::PsiOptions po;
    po.second_formula = false;

    const auto run = [&](const Potential& V, bool modified, const std::string& label) {
        const spectral::SpectralBasis B(V, x, lam, po);
        waveop::ExperimentOptions eo;
        eo.modified = modified;
        const auto r = waveop::waveop_experiment(V, B, f, sched, eo);
        o.require(r.admissible, label + " inadmissible");
        std::string ratios;
        for (double T : {12.5, 25.0, 50.0}) {
            const auto k = waveop::check_contract(r, T);
            o.require(k.pass, label + " contract at T=" + fmt(T) + " ratio " + fmt(k.late / k.early));
            ratios += (ratios.empty() ? "" : "/") + fmt(k.late / k.early);
        }
        o.require(waveop::distance_decreasing(r), label + " distance not decreasing");
        return label + " ratios " + ratios;
    };
    const auto a = run(make_power_decay(1.0, 0.6), true, "power decay (modified)");
    const auto b = run(make_square_barrier(1.0, 0.0, 1.0), false, "barrier (unmodified)");
    if (o.pass) o.detail = a + ", " + b;
    return o;
}

// Corpus samples with exactly n factors.
ml::Corpus with_factors(const ml::Corpus& all, std::size_t n) {
    ml::Corpus out;
    out.id = all.id;
    for (const auto& s : all.samples) {
        if (s.size() == n) out.samples.push_back(s);
    }
    return out;
}

Outcome multilinear_bound() {
    Outcome o;
    const double delta = 0.05, delta_prime = 0.1;
    const auto cal = ml::calibrate_constant(ml::random_step_corpus(7, 50, 5), delta, delta_prime);
    const auto held = ml::random_step_corpus(8, 50, 5);
    int holds = 0;
    double worst = 0.0;
    for (const auto& s : held.samples) {
        const auto r = ml::check_numerical_bound(s, delta, delta_prime, cal.C);
        holds += r.holds && r.holds_star;
        worst = std::max({worst, r.margin, r.margin_star});
    }
    o.require(holds == static_cast<int>(held.samples.size()),
              std::to_string(held.samples.size() - holds) + " held-out violations, worst margin " + fmt(worst));

    const double Cb = ml::max_admissible_bn_constant(20, 10000);
    o.require(std::isfinite(Cb) && Cb > 0.0, "no admissible b_n constant");
    const auto bn = ml::calibrate_bn(Cb, 20, 10000);
    o.require(bn.ok, "b_n check fails at n=" + std::to_string(bn.n));
    if (o.pass) {
        o.detail = "C = " + fmt(cal.C) + ", " + std::to_string(holds) + "/50 held out, worst margin " + fmt(worst) +
                   ", b_n C = " + fmt(Cb);
    }
    return o;
}

Outcome martingale_adaptation() {
    Outcome o;
    const double p = 1.8;
    const int depth = 12;
    const std::vector<std::pair<std::function<double(double)>, std::pair<double, double>>> dens = {
        {[](double x) { return 2.0 * x; }, {0.0, 1.0}},
        {[](double x) { return std::exp(-x); }, {0.0, 6.0}},
        {[](double x) { return 1.0 + std::sin(6.0 * x); }, {-1.0, 2.0}},
    };
    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    double worst = 0.0;
    for (const auto& [g, range] : dens) {
        ml::Function1D f;
        f.lo = range.first;
        f.hi = range.second;
        f.f = [g](double x) { return cplx(g(x)); };
        const auto ms = ml::build_adapted(f, p, depth, ml::AdaptMode::lp);
        o.require(ms.valid(), "invalid structure");
        const auto gp = [&](double x) { return std::pow(std::abs(g(x)), p); };
        const double total = gk::integrate(gp, range.first, range.second, 20, 1e-14);
        const auto xs = ms.level(depth);
        for (std::size_t j = 1; j < xs.size(); ++j) {
            const double cell = gk::integrate(gp, xs[j - 1], xs[j], 6, 1e-13);
            worst = std::max(worst, std::abs(cell / (total * std::ldexp(1.0, -depth)) - 1.0));
        }
    }
    o.require(worst < tol_adapted, "cell mass error " + fmt(worst));
    if (o.pass) o.detail = "max relative cell error " + fmt(worst);
    return o;
}

Outcome embedded_eigenvalue() {
    Outcome o;
    const auto d = dirac::design_embedded(1.0, 1.0);
    o.require(d.decay_exponent > min_decay_exponent, "decay exponent " + fmt(d.decay_exponent));
    o.require(d.l2_convergent, "int R^2 not convergent, tail ratio " + fmt(d.tail_ratio));
    double bound = 0.0;
    for (std::size_t k = 0; k < d.V.size(); ++k) bound = std::max(bound, std::abs(d.V[k]) * (1.0 + d.state.x[k]));
    o.require(bound <= 1.0 + 1e-12, "|V|(1+x) reaches " + fmt(bound));
    o.require(!d.lock_lost, "lock lost");

    const auto z = dirac::design_embedded(1.0, 0.0);
    o.require(std::abs(z.decay_exponent) < 1e-6, "A=0 exponent " + fmt(z.decay_exponent));
    o.require(!z.l2_convergent, "A=0 reported L^2");
    if (o.pass) o.detail = "exponent " + fmt(d.decay_exponent) + ", tail ratio " + fmt(d.tail_ratio);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"free-case m-function", free_m_function},
        {"series/ODE oracle equivalence", series_oracle},
        {"Wronskian conservation", wronskian_conservation},
        {"scattering identities", scattering_identities},
        {"limiting-absorption cross-check", limiting_absorption},
        {"transform unitarity", transform_unitarity},
        {"modified wave-operator convergence", modified_wave_operator},
        {"multilinear bound", multilinear_bound},
        {"martingale adaptation", martingale_adaptation},
        {"Dirac embedded eigenvalue", embedded_eigenvalue},
    };
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only && static_cast<int>(k) + 1 != only) continue;
        const auto& [name, fn] = criteria[k];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << k + 1 << ". " << name << " (" << o.detail << ", "
                  << fmt(secs) << " s)" << std::endl;
        failed += !o.pass;
    }
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
