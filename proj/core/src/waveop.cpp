#include "slowscat/waveop.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include <unsupported/Eigen/FFT>

namespace slowscat::waveop {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// (2 lambda)^{-1} Q(2 lambda t), continuous through lambda = 0.
double half_q(const Potential& V, double lambda, double t) {
    if (lambda == 0.0) return t * V.real(0.0);
    return V.cumulative(2.0 * lambda * t) / (2.0 * lambda);
}

cplx wr(cplx a, cplx da, cplx b, cplx db) { return a * db - da * b; }

std::vector<cplx> apply_multiplier(const std::vector<cplx>& g, double dx, bool odd,
                                   const std::function<cplx(double)>& mult) {
    const std::size_t n = g.size();
    if (n < 4 || !(dx > 0.0)) throw DomainError("evolve_free: need at least four nodes and dx > 0");
    std::vector<cplx> y;
    if (odd) {
        const std::size_t N = 2 * (n - 1);
        y.assign(N, cplx(0.0));
        for (std::size_t k = 0; k < n - 1; ++k) y[k] = g[k];
        for (std::size_t k = 1; k < n - 1; ++k) y[N - k] = -g[k];
        y[0] = 0.0;
    } else {
        y = g;
    }
    const std::size_t N = y.size();
    Eigen::FFT<double> fft;
    std::vector<cplx> Y;
    fft.fwd(Y, y);
    const double dk = 2.0 * pi / (static_cast<double>(N) * dx);
    for (std::size_t m = 0; m < N; ++m) {
        const double k = (m <= N / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(N)) * dk;
        Y[m] *= mult(k);
    }
    std::vector<cplx> out;
    fft.inv(out, Y);
    out.resize(n);
    if (odd) out[n - 1] = 0.0;
    return out;
}

}  // namespace

double w_phase(const Potential& V, double lambda, double t, Geometry variant) {
    if (variant == Geometry::half) return -half_q(V, lambda, t);
    return lambda * lambda * t + half_q(V, lambda, t);
}

PhaseCorrection phase_correction(const Potential& V, const std::vector<double>& lambda, double t,
                                 Geometry variant) {
    PhaseCorrection p;
    p.lambda = lambda;
    p.t = t;
    p.variant = variant;
    p.values.reserve(lambda.size());
    for (double l : lambda) p.values.push_back(w_phase(V, l, t, variant));
    return p;
}

double modified_phase(const Potential& V, double lambda, double t, Limit which) {
    const double free = -lambda * lambda * t;
    if (which == Limit::minus) return free + w_phase(V, lambda, t);
    return free - w_phase(V, lambda, -t);
}

std::vector<cplx> evolve_free(const std::vector<cplx>& g, double dx, double t, Geometry geometry) {
    return apply_multiplier(g, dx, geometry == Geometry::half, [t](double k) { return std::exp(-I * (k * k * t)); });
}

std::vector<cplx> evolve_modified_free(const Potential& V, const std::vector<cplx>& g, double dx, double t,
                                       Geometry geometry, Limit which) {
    if (geometry == Geometry::half) {
        return apply_multiplier(g, dx, true, [&](double k) {
            return std::exp(I * modified_phase(V, std::abs(k), t, which));
        });
    }
    return apply_multiplier(g, dx, false,
                            [&](double k) { return std::exp(-I * w_phase(V, k, t, Geometry::whole)); });
}

void ExperimentReport::write_csv(std::ostream& os) const {
    os << "t,cauchy_increment,dist_to_limit,norm_defect\n";
    const auto prec = os.precision(17);
    for (const auto& r : rows) {
        os << r.t << ',' << r.cauchy_increment << ',' << r.dist_to_limit << ',' << r.norm_defect << '\n';
    }
    os.precision(prec);
}

ExperimentReport waveop_experiment(const Potential& V, const spectral::SpectralBasis& B,
                                   const std::vector<cplx>& f_coeffs, const std::vector<double>& schedule,
                                   const ExperimentOptions& opt) {
    const auto& lam = B.lambda();
    if (f_coeffs.size() != lam.size()) throw DomainError("waveop_experiment: coefficient size mismatch");
    if (schedule.empty()) throw DomainError("waveop_experiment: empty schedule");
    ExperimentReport rep;
    rep.modified = opt.modified;
    if (!opt.modified) {
        rep.tail = V.improper_tail(opt.tail_N);
        rep.admissible = rep.tail.convergent;
        if (!rep.admissible) return rep;
    }
    for (std::size_t j = 0; j < lam.size(); ++j) {
        if (B.resonant()[j] && f_coeffs[j] != 0.0) rep.unstable_band = true;
    }
    const double tmax = *std::max_element(schedule.begin(), schedule.end());
    rep.beyond_horizon = tmax > B.horizon();

    // Predicted limit in the psi representation.
    std::vector<cplx> limit = f_coeffs;
    if (!opt.modified) {
        const auto sup = V.support();
        const double q_inf = std::isfinite(sup.hi) ? V.cumulative(sup.hi) : rep.tail.value;
        for (std::size_t j = 0; j < lam.size(); ++j) limit[j] *= std::exp(I * (q_inf / (2.0 * lam[j])));
    }
    const double f_norm = B.norm_lambda(f_coeffs);
    rep.limit_norm = B.norm_lambda(limit);

    spectral::PsiOptions free_opt;
    free_opt.second_formula = false;
    const spectral::SpectralBasis B0(make_zero(), B.x(), lam, free_opt);

    std::vector<cplx> prev;
    for (double t : schedule) {
        std::vector<cplx> h(lam.size());
        for (std::size_t j = 0; j < lam.size(); ++j) {
            const double p = opt.modified ? modified_phase(V, lam[j], t, Limit::minus) : -lam[j] * lam[j] * t;
            h[j] = std::exp(I * p) * f_coeffs[j];
        }
        auto c = B.forward(B0.inverse(h));
        for (std::size_t j = 0; j < lam.size(); ++j) c[j] *= std::exp(I * (lam[j] * lam[j] * t));

        ExperimentRow row;
        row.t = t;
        std::vector<cplx> d(lam.size());
        for (std::size_t j = 0; j < lam.size(); ++j) d[j] = c[j] - limit[j];
        row.dist_to_limit = B.norm_lambda(d);
        row.norm_defect = f_norm > 0.0 ? std::abs(B.norm_lambda(c) - f_norm) / f_norm : 0.0;
        if (prev.empty()) {
            row.cauchy_increment = nan;
        } else {
            for (std::size_t j = 0; j < lam.size(); ++j) d[j] = c[j] - prev[j];
            row.cauchy_increment = B.norm_lambda(d);
        }
        prev = std::move(c);
        rep.rows.push_back(row);
    }
    return rep;
}

std::vector<double> geometric_schedule(double T0, int count) {
    if (!(T0 > 0.0) || count < 1) throw DomainError("geometric_schedule: need T0 > 0 and count >= 1");
    std::vector<double> t(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) t[k] = T0 * std::pow(2.0, 0.5 * k);
    return t;
}

CauchyContract check_contract(const ExperimentReport& r, double T) {
    CauchyContract c;
    c.T = T;
    const double slack = 1e-12 * T;
    bool have_early = false, have_late = false;
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
        const double a = r.rows[k - 1].t, b = r.rows[k].t, inc = r.rows[k].cauchy_increment;
        if (a >= T - slack && b <= 2.0 * T + slack) {
            c.early = std::max(c.early, inc);
            have_early = true;
        }
        if (a >= 2.0 * T - slack && b <= 4.0 * T + slack) {
            c.late = std::max(c.late, inc);
            have_late = true;
        }
    }
    const double floor = contract_floor * r.limit_norm;
    c.pass = have_early && have_late && r.admissible && (c.late <= contract_ratio * c.early || c.late <= floor);
    return c;
}

bool distance_decreasing(const ExperimentReport& r) {
    if (r.rows.size() < 2) return false;
    const double floor = contract_floor * r.limit_norm;
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
        if (r.rows[k].dist_to_limit > r.rows[k - 1].dist_to_limit && r.rows[k].dist_to_limit > floor) return false;
    }
    return true;
}

HalfLineS scattering_halfline(const Potential& V, double lambda, const spectral::GammaOptions& opt) {
    const auto g = spectral::gamma_coeff(V, lambda, opt);
    HalfLineS s;
    s.resonant = g.resonant;
    if (g.resonant) {
        s.multiplier = cplx(nan, nan);
        s.omega = s.moller = nan;
        return s;
    }
    s.multiplier = g.u0 / std::conj(g.u0);
    s.omega = std::arg(s.multiplier);
    s.moller = 2.0 * std::arg(g.value);
    return s;
}

cplx s_multiplier(const Potential& V, const eigen::EigenSolution& u, const spectral::GammaOptions& opt) {
    if (u.size() < 1 || u.x.front() != 0.0) throw DomainError("s_multiplier: grid must start at 0");
    const double lambda = std::sqrt(u.z.real());
    const auto J = eigen::jost_solution(V, cplx(lambda, 0.0), {u.x.back()}, eigen::Side::right, opt.far, opt.ivp);
    const cplx c = u.u.back() / J.u[0];
    const cplx u0 = u.u.front();
    return (u0 / std::conj(u0)) * (std::conj(c) / c);
}

ScatteringMatrixWL scattering_wholeline(const Potential& V, double lambda, const WholeLineOptions& opt) {
    if (!(lambda > 0.0)) throw DomainError("scattering_wholeline: lambda must be positive");
    if (!(opt.pair_right > opt.pair_left)) throw DomainError("scattering_wholeline: pairing points must differ");
    const std::vector<double> pts{opt.pair_left, opt.pair_right};
    const cplx zeta(lambda, 0.0);
    const auto f = eigen::jost_solution(V, zeta, pts, eigen::Side::right, opt.far, opt.ivp);
    const auto g = eigen::jost_solution(V, zeta, pts, eigen::Side::left, opt.far, opt.ivp);
    const cplx two_il = 2.0 * I * lambda;

    ScatteringMatrixWL S;
    S.lambda = lambda;
    const cplx w0 = wr(g.u[0], g.du[0], f.u[0], f.du[0]);
    const cplx w1 = wr(g.u[1], g.du[1], f.u[1], f.du[1]);
    S.t1 = two_il / w0;
    S.r1 = -S.t1 * wr(std::conj(g.u[0]), std::conj(g.du[0]), f.u[0], f.du[0]) / two_il;
    S.t2 = two_il / w1;
    S.r2 = S.t2 * wr(std::conj(f.u[1]), std::conj(f.du[1]), g.u[1], g.du[1]) / two_il;
    S.unstable = !(std::abs(S.t1) > opt.t_floor) || !(std::abs(S.t2) > opt.t_floor);
    S.unitarity_defect = std::max(std::abs(std::norm(S.r1) + std::norm(S.t1) - 1.0),
                                  std::abs(std::norm(S.r2) + std::norm(S.t2) - 1.0));
    S.t_defect = std::abs(S.t1 - S.t2);
    S.r_defect = std::abs(S.r2 + S.t1 / std::conj(S.t1) * std::conj(S.r1));
    return S;
}

WholeLineBasis::WholeLineBasis(const Potential& V, std::vector<double> x, std::vector<double> lambda,
                               const WholeLineOptions& opt)
    : x_(std::move(x)), lambda_(std::move(lambda)) {
    if (x_.size() < 2 || lambda_.size() < 2) throw DomainError("WholeLineBasis: grids too small");
    wx_ = spectral::trapezoid_weights(x_);
    wl_ = spectral::trapezoid_weights(lambda_);
    const auto nx = static_cast<Eigen::Index>(x_.size());
    const auto nl = static_cast<Eigen::Index>(lambda_.size());
    plus_.setZero(nx, nl);
    minus_.setZero(nx, nl);
    S_.resize(lambda_.size());
    for (Eigen::Index j = 0; j < nl; ++j) {
        const double lam = lambda_[j];
        S_[j] = scattering_wholeline(V, lam, opt);
        if (S_[j].unstable) {
            wl_[j] = 0.0;
            continue;
        }
        const auto f = eigen::jost_solution(V, cplx(lam, 0.0), x_, eigen::Side::right, opt.far, opt.ivp);
        const auto g = eigen::jost_solution(V, cplx(lam, 0.0), x_, eigen::Side::left, opt.far, opt.ivp);
        for (Eigen::Index k = 0; k < nx; ++k) {
            plus_(k, j) = S_[j].t1 * f.u[k];
            minus_(k, j) = S_[j].t2 * g.u[k];
        }
    }
}

double WholeLineBasis::horizon() const {
    double dl = 0.0;
    for (std::size_t j = 0; j + 1 < lambda_.size(); ++j) dl = std::max(dl, lambda_[j + 1] - lambda_[j]);
    return pi / (2.0 * dl * lambda_.back());
}

WholeLineBasis::Coeffs WholeLineBasis::forward(const std::vector<cplx>& g) const {
    if (g.size() != x_.size()) throw DomainError("WholeLineBasis::forward: size mismatch");
    Eigen::VectorXcd v(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = wx_[k] * g[k];
    const Eigen::VectorXcd p = plus_.adjoint() * v;
    const Eigen::VectorXcd m = minus_.adjoint() * v;
    return {{p.data(), p.data() + p.size()}, {m.data(), m.data() + m.size()}};
}

std::vector<cplx> WholeLineBasis::inverse(const Coeffs& c) const {
    if (c.plus.size() != lambda_.size() || c.minus.size() != lambda_.size()) {
        throw DomainError("WholeLineBasis::inverse: size mismatch");
    }
    Eigen::VectorXcd p(static_cast<Eigen::Index>(lambda_.size())), m(static_cast<Eigen::Index>(lambda_.size()));
    for (std::size_t j = 0; j < lambda_.size(); ++j) {
        p[j] = wl_[j] * c.plus[j];
        m[j] = wl_[j] * c.minus[j];
    }
    const Eigen::VectorXcd g = (plus_ * p + minus_ * m) / (2.0 * pi);
    return {g.data(), g.data() + g.size()};
}

double WholeLineBasis::norm_x(const std::vector<cplx>& g) const {
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) s += wx_[k] * std::norm(g[k]);
    return std::sqrt(s);
}

double WholeLineBasis::norm_coeffs(const Coeffs& c) const {
    double s = 0.0;
    for (std::size_t j = 0; j < lambda_.size(); ++j) s += wl_[j] * (std::norm(c.plus[j]) + std::norm(c.minus[j]));
    return std::sqrt(s / (2.0 * pi));
}

spectral::Evolution evolve_V_wholeline(const WholeLineBasis& B, const std::vector<cplx>& g, double t) {
    auto c = B.forward(g);
    const double n0 = B.norm_coeffs(c);
    const auto& lam = B.lambda();
    for (std::size_t j = 0; j < lam.size(); ++j) {
        const cplx ph = std::exp(-I * (lam[j] * lam[j] * t));
        c.plus[j] *= ph;
        c.minus[j] *= ph;
    }
    spectral::Evolution e;
    e.values = B.inverse(c);
    e.coeffs = c.plus;
    e.coeffs.insert(e.coeffs.end(), c.minus.begin(), c.minus.end());
    e.norm_defect = n0 > 0.0 ? std::abs(B.norm_x(e.values) - n0) / n0 : 0.0;
    e.horizon = B.horizon();
    e.beyond_horizon = std::abs(t) > e.horizon;
    return e;
}

}  // namespace slowscat::waveop
