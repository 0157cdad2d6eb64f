#include "slowscat/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace slowscat::spectral {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double sqrt2_pi() { return std::sqrt(2.0 / pi); }

void check_lambda(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("spectral: lambda must be positive");
}

Gamma gamma_from(cplx u0, cplx du0, double lambda, double tol) {
    Gamma g;
    g.u0 = u0;
    g.du0 = du0;
    const double scale = std::max(1.0, std::abs(du0) / lambda);
    g.resonant = !(std::abs(u0) > tol * scale);
    g.value = g.resonant ? cplx(nan, nan) : 1.0 / u0;
    return g;
}

double l2(const std::vector<cplx>& v, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += w[k] * std::norm(v[k]);
    return std::sqrt(s);
}

}  // namespace

Gamma gamma_coeff(const Potential& V, double lambda, const GammaOptions& opt) {
    check_lambda(lambda);
    const auto sol = eigen::jost_solution(V, cplx(lambda, 0.0), {0.0}, eigen::Side::right, opt.far, opt.ivp);
    return gamma_from(sol.u[0], sol.du[0], lambda, opt.resonance_tol);
}

BoundaryM m_boundary(const Potential& V, double lambda, const eigen::LimitOptions& lim,
                     const eigen::WeylOptions& weyl) {
    check_lambda(lambda);
    auto F = [&](cplx z) -> cplx {
        try {
            return eigen::weyl_m(V, z, weyl);
        } catch (const NumericalError&) {
            return cplx(nan, nan);
        }
    };
    BoundaryM b;
    b.limit = eigen::boundary_limit(F, lambda * lambda, lim);
    b.m = b.limit.value;
    b.error = b.limit.error;
    b.stable = b.limit.stable && b.limit.has_value;
    return b;
}

AcDensity ac_density(const Potential& V, double lambda, const eigen::LimitOptions& lim,
                     const eigen::WeylOptions& weyl) {
    const auto b = m_boundary(V, lambda, lim, weyl);
    AcDensity d;
    d.stable = b.stable && b.m.imag() >= -b.error;
    d.value = b.stable ? b.m.imag() / pi : nan;
    d.error = b.error / pi;
    return d;
}

void SpectralTable::write_csv(std::ostream& os) const {
    os << "lambda,re_m,im_m,density,re_gamma,im_gamma,omega,stable\n";
    const auto prec = os.precision(17);
    for (const auto& r : rows) {
        os << r.lambda << ',' << r.m.real() << ',' << r.m.imag() << ',' << r.density << ',' << r.gamma.real() << ','
           << r.gamma.imag() << ',' << r.omega << ',' << (r.stable ? 1 : 0) << '\n';
    }
    os.precision(prec);
}

SpectralTable build_spectral_table(const Potential& V, const std::vector<double>& lambdas, const TableOptions& opt) {
    SpectralTable t;
    t.rows.resize(lambdas.size());
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        auto& r = t.rows[j];
        r.lambda = lambdas[j];
        const auto b = m_boundary(V, r.lambda, opt.limit, opt.weyl);
        r.m = b.m;
        r.m_error = b.error;
        r.density = b.stable ? b.m.imag() / pi : nan;
        const auto g = gamma_coeff(V, r.lambda, opt.gamma);
        r.resonant = g.resonant;
        r.gamma = g.value;
        r.stable = b.stable && !g.resonant && b.m.imag() >= -b.error;
    }
    // Masked gamma values are interpolated linearly between unmasked neighbours.
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
        if (!t.rows[j].resonant) continue;
        std::size_t lo = j, hi = j;
        while (lo > 0 && t.rows[lo].resonant) --lo;
        while (hi + 1 < t.rows.size() && t.rows[hi].resonant) ++hi;
        if (!t.rows[lo].resonant && !t.rows[hi].resonant) {
            const double s = (t.rows[j].lambda - t.rows[lo].lambda) / (t.rows[hi].lambda - t.rows[lo].lambda);
            t.rows[j].gamma = (1.0 - s) * t.rows[lo].gamma + s * t.rows[hi].gamma;
        }
    }
    for (auto& r : t.rows) {
        r.omega = std::arg(std::conj(r.gamma) / r.gamma);
        const double im = r.m.imag();
        r.consistency = std::abs(std::norm(r.gamma) * r.lambda - im) / std::abs(im);
    }
    return t;
}

std::vector<double> uniform_grid(double a, double b, int n) {
    if (n < 2 || !(b > a)) throw DomainError("uniform_grid: need n >= 2 and b > a");
    std::vector<double> x(static_cast<std::size_t>(n));
    const double h = (b - a) / (n - 1);
    for (int k = 0; k < n; ++k) x[k] = a + k * h;
    x.back() = b;
    return x;
}

std::vector<double> trapezoid_weights(const std::vector<double>& x) {
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        const double h = x[k + 1] - x[k];
        if (!(h > 0.0)) throw DomainError("trapezoid_weights: grid must be strictly increasing");
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    return w;
}

SpectralBasis::SpectralBasis(const Potential& V, std::vector<double> x, std::vector<double> lambda,
                             const PsiOptions& opt)
    : x_(std::move(x)), lambda_(std::move(lambda)) {
    if (x_.size() < 2 || x_.front() != 0.0) throw DomainError("SpectralBasis: x grid must start at 0");
    if (lambda_.size() < 2) throw DomainError("SpectralBasis: need at least two lambda nodes");
    for (double l : lambda_) check_lambda(l);
    wx_ = trapezoid_weights(x_);
    wl_ = trapezoid_weights(lambda_);
    const auto nx = static_cast<Eigen::Index>(x_.size());
    const auto nl = static_cast<Eigen::Index>(lambda_.size());
    psi_.setZero(nx, nl);
    gamma_.assign(lambda_.size(), cplx(nan, nan));
    resonant_.assign(lambda_.size(), false);

    for (Eigen::Index j = 0; j < nl; ++j) {
        const double lam = lambda_[j];
        const auto u = eigen::jost_solution(V, cplx(lam, 0.0), x_, eigen::Side::right, opt.gamma.far, opt.gamma.ivp);
        const auto g = gamma_from(u.u[0], u.du[0], lam, opt.gamma.resonance_tol);
        gamma_[j] = g.value;
        resonant_[j] = g.resonant;
        if (g.resonant) {
            wl_[j] = 0.0;
            continue;
        }
        const cplx ratio = u.u[0] / std::conj(u.u[0]);  // conj(gamma) / gamma
        double peak = 0.0, imag_peak = 0.0;
        for (Eigen::Index k = 0; k < nx; ++k) {
            const cplx p = (u.u[k] - ratio * std::conj(u.u[k])) / (2.0 * I);
            psi_(k, j) = p;
            const cplx r = p / std::conj(g.value);
            peak = std::max(peak, std::abs(r));
            imag_peak = std::max(imag_peak, std::abs(r.imag()));
        }
        if (peak > 0.0) realness_ = std::max(realness_, imag_peak / peak);
        if (opt.second_formula) {
            const auto u1 = eigen::solve_ivp(V, cplx(lam * lam, 0.0), 0.0, 1.0, x_, eigen::Direction::forward,
                                             opt.gamma.ivp);
            const cplx c = lam * std::conj(g.value);
            for (Eigen::Index k = 0; k < nx; ++k) {
                formula_gap_ = std::max(formula_gap_, std::abs(psi_(k, j) - c * u1.u[k]));
            }
        }
    }
}

double SpectralBasis::horizon() const {
    double dl = 0.0;
    for (std::size_t j = 0; j + 1 < lambda_.size(); ++j) dl = std::max(dl, lambda_[j + 1] - lambda_[j]);
    return pi / (2.0 * dl * lambda_.back());
}

std::vector<cplx> SpectralBasis::forward(const std::vector<cplx>& g) const {
    if (g.size() != x_.size()) throw DomainError("SpectralBasis::forward: size mismatch");
    Eigen::VectorXcd v(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = wx_[k] * g[k];
    const Eigen::VectorXcd c = sqrt2_pi() * (psi_.adjoint() * v);
    std::vector<cplx> out(lambda_.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = resonant_[j] ? cplx(0.0) : c[j];
    return out;
}

std::vector<cplx> SpectralBasis::inverse(const std::vector<cplx>& coeffs) const {
    if (coeffs.size() != lambda_.size()) throw DomainError("SpectralBasis::inverse: size mismatch");
    Eigen::VectorXcd v(static_cast<Eigen::Index>(coeffs.size()));
    for (std::size_t j = 0; j < coeffs.size(); ++j) v[j] = wl_[j] * coeffs[j];
    const Eigen::VectorXcd g = sqrt2_pi() * (psi_ * v);
    return {g.data(), g.data() + g.size()};
}

double SpectralBasis::norm_x(const std::vector<cplx>& g) const { return l2(g, wx_); }

double SpectralBasis::norm_lambda(const std::vector<cplx>& c) const { return l2(c, wl_); }

namespace {

void fill_leakage(WavePacket& p) {
    const auto n = p.coeffs.size();
    const std::size_t top = n - std::max<std::size_t>(1, n / 20);
    double all = 0.0, edge = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double a = std::abs(p.coeffs[j]);
        all = std::max(all, a);
        if (j >= top) edge = std::max(edge, a);
    }
    p.leakage = all > 0.0 ? edge / all : 0.0;
    p.leakage_flag = p.leakage > leakage_threshold;
}

double rel_diff(const std::vector<cplx>& a, const std::vector<cplx>& b, const SpectralBasis& B) {
    std::vector<cplx> d(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
    const double n = B.norm_x(b);
    return n > 0.0 ? B.norm_x(d) / n : 0.0;
}

}  // namespace

WavePacket packet_from_values(const SpectralBasis& B, std::vector<cplx> g) {
    WavePacket p;
    p.values = std::move(g);
    p.coeffs = B.forward(p.values);
    p.authoritative = Representation::position;
    p.roundtrip_defect = rel_diff(B.inverse(p.coeffs), p.values, B);
    fill_leakage(p);
    return p;
}

WavePacket packet_from_coeffs(const SpectralBasis& B, std::vector<cplx> c) {
    WavePacket p;
    p.coeffs = std::move(c);
    p.values = B.inverse(p.coeffs);
    p.authoritative = Representation::spectral;
    const auto back = B.forward(p.values);
    std::vector<cplx> d(back.size());
    for (std::size_t j = 0; j < back.size(); ++j) d[j] = back[j] - p.coeffs[j];
    const double den = B.norm_lambda(p.coeffs);
    p.roundtrip_defect = den > 0.0 ? B.norm_lambda(d) / den : 0.0;
    fill_leakage(p);
    return p;
}

std::vector<cplx> band_coefficients(const std::vector<double>& lambda, double a, double b, double x0) {
    if (!(b > a)) throw DomainError("band_coefficients: need b > a");
    std::vector<cplx> c(lambda.size(), cplx(0.0));
    for (std::size_t j = 0; j < lambda.size(); ++j) {
        const double s = (lambda[j] - a) / (b - a);
        if (s <= 0.0 || s >= 1.0) continue;
        c[j] = std::exp(1.0 - 1.0 / (4.0 * s * (1.0 - s))) * std::exp(-I * lambda[j] * x0);
    }
    return c;
}

Projection project_ac(const SpectralBasis& B, double a, double b, const WavePacket& g) {
    if (!(a > 0.0) || !(b > a)) throw DomainError("project_ac: need 0 < a < b");
    const double la = std::sqrt(a), lb = std::sqrt(b);
    const auto& lam = B.lambda();
    Projection out;
    std::vector<cplx> c = g.authoritative == Representation::spectral ? g.coeffs : B.forward(g.values);
    for (std::size_t j = 0; j < lam.size(); ++j) {
        if (lam[j] < la || lam[j] > lb) c[j] = 0.0;
    }
    // The nearest nodes to the endpoints must carry usable spectral data.
    for (double e : {la, lb}) {
        const auto it = std::lower_bound(lam.begin(), lam.end(), e);
        for (auto k : {it - lam.begin() - 1, it - lam.begin()}) {
            if (k >= 0 && k < static_cast<std::ptrdiff_t>(lam.size()) && B.resonant()[k]) out.endpoint_flag = true;
        }
    }
    out.packet = packet_from_coeffs(B, std::move(c));
    return out;
}

Evolution evolve_V(const SpectralBasis& B, const WavePacket& g, double t) {
    Evolution e;
    const auto& lam = B.lambda();
    const std::vector<cplx> c0 = g.authoritative == Representation::spectral ? g.coeffs : B.forward(g.values);
    e.coeffs.resize(c0.size());
    for (std::size_t j = 0; j < c0.size(); ++j) e.coeffs[j] = std::exp(-I * (lam[j] * lam[j] * t)) * c0[j];
    e.values = B.inverse(e.coeffs);
    const double n0 = B.norm_lambda(c0);
    e.norm_defect = n0 > 0.0 ? std::abs(B.norm_x(e.values) - n0) / n0 : 0.0;
    e.horizon = B.horizon();
    e.beyond_horizon = std::abs(t) > e.horizon;
    return e;
}

}  // namespace slowscat::spectral
