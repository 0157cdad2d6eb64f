#include "slowscat/dirac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/numeric/odeint.hpp>

#include "slowscat/spectral.hpp"

namespace slowscat::dirac {

namespace {

using State = std::array<double, 4>;

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("dirac: empty grid");
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) throw DomainError("dirac: grid must be strictly increasing");
    }
}

State pack(const Spinor& y) { return {y[0].real(), y[0].imag(), y[1].real(), y[1].imag()}; }
Spinor unpack(const State& s) { return {cplx(s[0], s[1]), cplx(s[2], s[3])}; }

// Off-diagonal form y' = [[i z, q], [conj q, -i z]] y, stopping at the coupling's breaks.
class Runner {
public:
    Runner(const Coupling& c, cplx z, const IvpOptions& opt) : c_(c), z_(z), opt_(opt) {
        breaks_ = c.profile.breakpoints();
        std::sort(breaks_.begin(), breaks_.end());
    }

    // Values at sorted targets from y0 at x0.
    std::vector<Spinor> run(double x0, const Spinor& y0, const std::vector<double>& targets) const {
        std::vector<Spinor> out(targets.size());
        const auto k0 = static_cast<std::size_t>(std::lower_bound(targets.begin(), targets.end(), x0) -
                                                 targets.begin());
        {
            State y = pack(y0);
            double x = x0;
            for (std::size_t k = k0; k < targets.size(); ++k) {
                advance(y, x, targets[k]);
                out[k] = unpack(y);
            }
        }
        {
            State y = pack(y0);
            double x = x0;
            for (std::size_t k = k0; k-- > 0;) {
                advance(y, x, targets[k]);
                out[k] = unpack(y);
            }
        }
        return out;
    }

private:
    void advance(State& y, double& x, double target) const {
        if (target == x) return;
        const double sign = target > x ? 1.0 : -1.0;
        std::vector<double> stops;
        for (double b : breaks_) {
            if ((b - x) * sign > 0.0 && (target - b) * sign > 0.0) stops.push_back(b);
        }
        if (sign < 0) std::reverse(stops.begin(), stops.end());
        stops.push_back(target);
        for (double s : stops) {
            segment(y, x, s);
            x = s;
        }
    }

    void segment(State& y, double start, double end) const {
        namespace odeint = boost::numeric::odeint;
        const auto sys = [this, start, end](const State& s, State& d, double t) {
            double te = t;
            if (t == start) te = std::nextafter(t, end);
            else if (t == end) te = std::nextafter(t, start);
            const cplx q = c_.q(te);
            const cplx y1(s[0], s[1]), y2(s[2], s[3]);
            const cplx d1 = I * z_ * y1 + q * y2;
            const cplx d2 = std::conj(q) * y1 - I * z_ * y2;
            d = {d1.real(), d1.imag(), d2.real(), d2.imag()};
        };
        auto stepper = odeint::make_controlled(opt_.abs_tol, opt_.rel_tol, odeint::runge_kutta_fehlberg78<State>());
        const double len = end - start;
        const double h0 = std::copysign(std::min(std::abs(len), 0.1 / (std::abs(z_) + 1.0)), len);
        try {
            odeint::integrate_adaptive(stepper, sys, y, start, end, h0);
        } catch (const odeint::step_adjustment_error&) {
            throw NumericalError("dirac_ivp: step size underflow");
        }
    }

    const Coupling& c_;
    cplx z_;
    IvpOptions opt_;
    std::vector<double> breaks_;
};

// Off-diagonal values of the Jost solution at the sorted points. right: e^{izx} (1, 0) beyond
// the support on the right; left: e^{-izx} (0, 1) beyond it on the left.
struct Jost {
    std::vector<Spinor> y;
    double start = 0.0;
    bool truncated = false;
};

Jost jost(const Coupling& c, cplx z, bool right, const std::vector<double>& pts, const ScatteringOptions& opt) {
    const auto sup = c.profile.support();
    Jost j;
    if (right) {
        j.truncated = !std::isfinite(sup.hi);
        j.start = std::max(pts.back(), j.truncated ? opt.far_X : sup.hi);
        j.y = Runner(c, z, opt.ivp).run(j.start, {std::exp(I * z * j.start), 0.0}, pts);
    } else {
        j.truncated = !std::isfinite(sup.lo);
        j.start = std::min(pts.front(), j.truncated ? -opt.far_X : sup.lo);
        j.y = Runner(c, z, opt.ivp).run(j.start, {0.0, std::exp(-I * z * j.start)}, pts);
    }
    return j;
}

// Extraction points outside the support on both sides.
std::pair<double, double> outer_points(const Coupling& c, const ScatteringOptions& opt) {
    const auto sup = c.profile.support();
    const double lo = std::isfinite(sup.lo) ? std::min(sup.lo, 0.0) : -opt.far_X;
    const double hi = std::isfinite(sup.hi) ? std::max(sup.hi, 0.0) : opt.far_X;
    return {lo, hi};
}

void fill_identities(DiracScattering& s) {
    s.unitarity_defect = std::max(std::abs(std::norm(s.r1) + std::norm(s.t1) - 1.0),
                                  std::abs(std::norm(s.r2) + std::norm(s.t2) - 1.0));
    s.t_defect = std::abs(s.t1 - s.t2);
    s.r_defect = std::abs(s.r2 + (s.t1 / std::conj(s.t1)) * std::conj(s.r1));
}

// Coefficients from Jost values at the outer points xl < xr.
DiracScattering extract(double E, const Spinor& right_at_l, const Spinor& left_at_r, double xl, double xr,
                        const ScatteringOptions& opt) {
    DiracScattering s;
    s.E = E;
    const cplx alpha = right_at_l[0] * std::exp(-I * E * xl);
    const cplx beta = right_at_l[1] * std::exp(I * E * xl);
    const cplx gamma = left_at_r[1] * std::exp(I * E * xr);
    const cplx delta = left_at_r[0] * std::exp(-I * E * xr);
    s.t1 = 1.0 / alpha;
    s.r1 = beta / alpha;
    s.t2 = 1.0 / gamma;
    s.r2 = delta / gamma;
    s.unstable = std::abs(s.t1) < opt.t_floor || std::abs(s.t2) < opt.t_floor;
    fill_identities(s);
    return s;
}

double wrap(double a) { return std::remainder(a, 2.0 * pi); }

}  // namespace

Spinor to_rotated(const Spinor& y) { return {y[0] + y[1], I * (y[0] - y[1])}; }

Spinor from_rotated(const Spinor& phi) { return {0.5 * (phi[0] - I * phi[1]), 0.5 * (phi[0] + I * phi[1])}; }

Spinor convert(const Spinor& v, Representation from, Representation to) {
    if (from == to) return v;
    // original and off_diagonal share y.
    const Spinor y = from == Representation::rotated ? from_rotated(v) : v;
    return to == Representation::rotated ? to_rotated(y) : y;
}

DiracSolution DiracSolution::to(Representation target) const {
    DiracSolution s = *this;
    s.rep = target;
    for (auto& v : s.y) v = convert(v, rep, target);
    return s;
}

DiracSolution dirac_ivp(const Coupling& c, cplx z, const Spinor& init, double x0, const std::vector<double>& grid,
                        Representation rep, const IvpOptions& opt) {
    check_grid(grid);
    for (const auto& v : init) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError("dirac_ivp: non-finite data");
    }
    DiracSolution s;
    s.x = grid;
    s.z = z;
    s.rep = Representation::off_diagonal;
    s.y = Runner(c, z, opt).run(x0, convert(init, rep, Representation::off_diagonal), grid);
    return rep == Representation::off_diagonal ? s : s.to(rep);
}

DiracSolution u1(const Coupling& c, cplx z, const std::vector<double>& grid, const IvpOptions& opt) {
    return dirac_ivp(c, z, {0.0, 1.0}, 0.0, grid, Representation::rotated, opt);
}

DiracSolution u2(const Coupling& c, cplx z, const std::vector<double>& grid, const IvpOptions& opt) {
    return dirac_ivp(c, z, {1.0, 0.0}, 0.0, grid, Representation::rotated, opt);
}

WronskianReport wronskian(const DiracSolution& f, const DiracSolution& g) {
    if (f.x != g.x) throw DomainError("wronskian: grid mismatch");
    if (f.rep != g.rep) throw DomainError("wronskian: representation mismatch");
    const cplx factor = f.rep == Representation::rotated ? cplx(1.0) : I;
    WronskianReport r;
    r.values.resize(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        r.values[k] = factor * (f.y[k][1] * g.y[k][0] - f.y[k][0] * g.y[k][1]);
    }
    const double ref = std::max(std::abs(r.values.front()), std::numeric_limits<double>::min());
    for (const auto& w : r.values) r.max_drift = std::max(r.max_drift, std::abs(w - r.values.front()) / ref);
    return r;
}

std::vector<Spinor> PruferState::reconstruction() const {
    std::vector<Spinor> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        g[k] = {R[k] * std::exp(I * theta1[k]), R[k] * std::exp(I * (c - theta1[k]))};
    }
    return g;
}

PruferState prufer_integrate(const Coupling& c, double E, double theta1_0, double c_shift,
                             const std::vector<double>& grid, const IvpOptions& opt) {
    check_grid(grid);
    namespace odeint = boost::numeric::odeint;
    using S2 = std::array<double, 2>;
    PruferState st;
    st.x = grid;
    st.c = c_shift;
    st.E = E;
    st.R.resize(grid.size());
    st.theta1.resize(grid.size());
    auto breaks = c.profile.breakpoints();
    std::sort(breaks.begin(), breaks.end());

    S2 s{0.0, theta1_0};
    st.R[0] = 1.0;
    st.theta1[0] = theta1_0;
    double x = grid.front();
    auto bi = std::upper_bound(breaks.begin(), breaks.end(), x);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        while (x < grid[k]) {
            const double end = (bi != breaks.end() && *bi < grid[k]) ? *bi++ : grid[k];
            const double start = x;
            const auto sys = [&](const S2& y, S2& d, double t) {
                double te = t;
                if (t == start) te = std::nextafter(t, end);
                else if (t == end) te = std::nextafter(t, start);
                const cplx V = c.V(te);
                const double ph = 2.0 * y[1] - c_shift;
                d[0] = -V.real() * std::sin(ph) + V.imag() * std::cos(ph);
                d[1] = E - V.real() * std::cos(ph) - V.imag() * std::sin(ph);
            };
            auto stepper =
                odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_fehlberg78<S2>());
            try {
                odeint::integrate_adaptive(stepper, sys, s, start, end, std::min(end - start, 0.05));
            } catch (const odeint::step_adjustment_error&) {
                throw NumericalError("prufer_integrate: step size underflow");
            }
            x = end;
        }
        st.R[k] = std::exp(s[0]);
        st.theta1[k] = s[1];
    }
    return st;
}

EmbeddedDesign design_embedded(double E, double A, const DesignOptions& opt) {
    if (!(A >= 0.0) || !std::isfinite(E)) throw DomainError("design_embedded: need real E and A >= 0");
    if (!(opt.X > 0.0) || !(opt.dx > 0.0)) throw DomainError("design_embedded: need X > 0 and dx > 0");
    namespace odeint = boost::numeric::odeint;
    using S2 = std::array<double, 2>;
    const int n = static_cast<int>(std::lround(opt.X / opt.dx)) + 1;
    const auto x = spectral::uniform_grid(0.0, opt.X, n);
    const double cs = opt.c_shift;
    const auto amp = [A](double t) { return A / (1.0 + t); };
    const auto arg_of = [cs](double th) { return 2.0 * th - cs - 0.5 * pi; };

    EmbeddedDesign d;
    d.E = E;
    d.A = A;
    d.state.x = x;
    d.state.c = cs;
    d.state.E = E;
    d.state.R.resize(x.size());
    d.state.theta1.resize(x.size());
    d.V.resize(x.size());

    // Feedback law: the current theta_1 fixes arg V.
    const auto sys = [&](const S2& y, S2& dy, double t) {
        const cplx V = amp(t) * std::exp(I * arg_of(y[1]));
        const double ph = 2.0 * y[1] - cs;
        dy[0] = -V.real() * std::sin(ph) + V.imag() * std::cos(ph);
        dy[1] = E - V.real() * std::cos(ph) - V.imag() * std::sin(ph);
    };
    S2 s{0.0, opt.theta1_0};
    auto stepper = odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_fehlberg78<S2>());
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (k > 0) odeint::integrate_adaptive(stepper, sys, s, x[k - 1], x[k], x[k] - x[k - 1]);
        d.state.R[k] = std::exp(s[0]);
        d.state.theta1[k] = s[1];
        d.V[k] = amp(x[k]) * std::exp(I * arg_of(s[1]));
        if (A > 0.0) d.bound_ratio = std::max(d.bound_ratio, std::abs(d.V[k]) * (1.0 + x[k]) / A);
    }

    std::vector<double> re(x.size()), im(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        re[k] = d.V[k].real();
        im[k] = d.V[k].imag();
    }
    d.coupling = Coupling::from_V(make_sampled(x, re, im));

    // Least-squares slope of log R against log(1 + x) on [X/8, X].
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] < opt.X / 8.0) continue;
        const double u = std::log1p(x[k]), v = std::log(d.state.R[k]);
        sx += u;
        sy += v;
        sxx += u * u;
        sxy += u * v;
        ++m;
    }
    d.decay_exponent = -(m * sxy - sx * sy) / (m * sxx - sx * sx);

    // Cumulative int R^2 by the trapezoid rule.
    std::vector<double> cum(x.size(), 0.0);
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double r0 = d.state.R[k - 1], r1 = d.state.R[k];
        cum[k] = cum[k - 1] + 0.5 * (x[k] - x[k - 1]) * (r0 * r0 + r1 * r1);
    }
    const auto at = [&](double t) {
        const auto k = static_cast<std::size_t>(std::lround(t / opt.dx));
        return cum[std::min(k, cum.size() - 1)];
    };
    d.l2_integral = cum.back();
    const double late = at(opt.X) - at(opt.X / 2.0), early = at(opt.X / 2.0) - at(opt.X / 4.0);
    d.tail_ratio = early > 0.0 ? late / early : std::numeric_limits<double>::infinity();
    d.l2_convergent = d.tail_ratio < l2_tail_ratio;

    // Independent check on the sampled V. The decaying solution is unstable forward, so the
    // off-diagonal system is integrated back from X.
    const auto end = d.state.reconstruction().back();
    const auto sol = dirac_ivp(d.coupling, E, end, opt.X, x);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const auto& y = sol.y[k];
        d.verification_gap = std::max(d.verification_gap, std::abs(std::abs(y[0]) / d.state.R[k] - 1.0));
        const double ph = std::arg(y[0]) - std::arg(y[1]);
        d.phase_slip = std::max(d.phase_slip, std::abs(wrap(ph - (2.0 * d.state.theta1[k] - cs))));
    }
    d.lock_lost = d.phase_slip > opt.slip_tol;
    return d;
}

DiracScattering dirac_scattering(const Coupling& c, double E, const ScatteringOptions& opt) {
    if (!std::isfinite(E)) throw DomainError("dirac_scattering: non-finite E");
    const auto [xl, xr] = outer_points(c, opt);
    const auto fr = jost(c, E, true, {xl}, opt);
    const auto fl = jost(c, E, false, {xr}, opt);
    auto s = extract(E, fr.y[0], fl.y[0], xl, xr, opt);
    s.truncated = fr.truncated || fl.truncated;
    return s;
}

MFunctions m_functions(const Coupling& c, double E, const ScatteringOptions& opt) {
    const auto S = dirac_scattering(c, E, opt);
    const auto fr = jost(c, E, true, {0.0}, opt);
    const auto fl = jost(c, E, false, {0.0}, opt);
    const Spinor pr = to_rotated(fr.y[0]), pl = to_rotated(fl.y[0]);
    if (std::abs(pr[0]) == 0.0 || std::abs(pl[0]) == 0.0) throw NumericalError("m_functions: f(0) has no u_2 part");
    MFunctions r;
    r.m_plus = pr[1] / pr[0];
    r.m_minus = pl[1] / pl[0];
    const cplx den = r.m_minus - r.m_plus;
    r.M << (r.m_plus * r.m_minus / den).imag(), (r.m_minus / den).imag(), (r.m_minus / den).imag(),
        (1.0 / den).imag();
    r.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(r.M).eigenvalues().minCoeff();

    // Spectral kernel at x = y = 0 from the scattered waves.
    const Spinor ep = to_rotated({S.t1 * fr.y[0][0], S.t1 * fr.y[0][1]});
    const Spinor em = to_rotated({S.t2 * fl.y[0][0], S.t2 * fl.y[0][1]});
    Eigen::Matrix2cd K = Eigen::Matrix2cd::Zero();
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) K(a, b) = (ep[a] * std::conj(ep[b]) + em[a] * std::conj(em[b])) / (4.0 * pi);
    }
    Eigen::Matrix2d P;
    P << 0.0, 1.0, 1.0, 0.0;
    const Eigen::Matrix2d ref = P * r.M * P / pi;
    r.kernel_gap = (K - ref.cast<cplx>()).norm();
    return r;
}

DiracBasis::DiracBasis(Coupling c, std::vector<double> x, std::vector<double> E, const ScatteringOptions& opt)
    : c_(std::move(c)), opt_(opt), x_(std::move(x)), E_(std::move(E)) {
    check_grid(x_);
    check_grid(E_);
    if (x_.size() < 2 || E_.size() < 2) throw DomainError("DiracBasis: need at least two nodes per grid");
    wx_ = spectral::trapezoid_weights(x_);
    wE_ = spectral::trapezoid_weights(E_);
    const auto nx = static_cast<Eigen::Index>(x_.size()), nE = static_cast<Eigen::Index>(E_.size());
    p1_.resize(nx, nE);
    p2_.resize(nx, nE);
    m1_.resize(nx, nE);
    m2_.resize(nx, nE);
    S_.resize(E_.size());

    const auto [xl0, xr0] = outer_points(c_, opt_);
    const double xl = std::min(xl0, x_.front()), xr = std::max(xr0, x_.back());
    std::vector<double> pts;
    pts.reserve(x_.size() + 2);
    pts.push_back(xl);
    pts.insert(pts.end(), x_.begin(), x_.end());
    pts.push_back(xr);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t off = pts.front() < x_.front() ? 1 : 0;

    for (std::size_t j = 0; j < E_.size(); ++j) {
        const double e = E_[j];
        const auto fr = jost(c_, e, true, pts, opt_);
        const auto fl = jost(c_, e, false, pts, opt_);
        auto s = extract(e, fr.y.front(), fl.y.back(), pts.front(), pts.back(), opt_);
        s.truncated = fr.truncated || fl.truncated;
        S_[j] = s;
        for (std::size_t k = 0; k < x_.size(); ++k) {
            const auto& a = fr.y[k + off];
            const auto& b = fl.y[k + off];
            const Spinor ep = to_rotated({s.t1 * a[0], s.t1 * a[1]});
            const Spinor em = to_rotated({s.t2 * b[0], s.t2 * b[1]});
            p1_(k, j) = ep[0];
            p2_(k, j) = ep[1];
            m1_(k, j) = em[0];
            m2_(k, j) = em[1];
        }
    }
}

double DiracBasis::horizon() const { return pi / (E_[1] - E_[0]); }

DiracBasis::Coeffs DiracBasis::forward(const std::vector<Spinor>& g) const {
    if (g.size() != x_.size()) throw DomainError("DiracBasis::forward: size mismatch");
    const auto nx = static_cast<Eigen::Index>(x_.size());
    Eigen::VectorXcd g1(nx), g2(nx);
    for (Eigen::Index k = 0; k < nx; ++k) {
        g1(k) = wx_[k] * g[k][0];
        g2(k) = wx_[k] * g[k][1];
    }
    const Eigen::VectorXcd cp = p1_.adjoint() * g1 + p2_.adjoint() * g2;
    const Eigen::VectorXcd cm = m1_.adjoint() * g1 + m2_.adjoint() * g2;
    return {{cp.data(), cp.data() + cp.size()}, {cm.data(), cm.data() + cm.size()}};
}

std::vector<Spinor> DiracBasis::inverse(const Coeffs& c) const {
    if (c.plus.size() != E_.size() || c.minus.size() != E_.size()) {
        throw DomainError("DiracBasis::inverse: size mismatch");
    }
    const auto nE = static_cast<Eigen::Index>(E_.size());
    Eigen::VectorXcd cp(nE), cm(nE);
    for (Eigen::Index j = 0; j < nE; ++j) {
        cp(j) = wE_[j] * c.plus[j] / (4.0 * pi);
        cm(j) = wE_[j] * c.minus[j] / (4.0 * pi);
    }
    const Eigen::VectorXcd g1 = p1_ * cp + m1_ * cm;
    const Eigen::VectorXcd g2 = p2_ * cp + m2_ * cm;
    std::vector<Spinor> g(x_.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = {g1(k), g2(k)};
    return g;
}

double DiracBasis::norm_x(const std::vector<Spinor>& g) const {
    double s = 0.0;
    for (std::size_t k = 0; k < x_.size(); ++k) s += wx_[k] * (std::norm(g[k][0]) + std::norm(g[k][1]));
    return std::sqrt(s);
}

double DiracBasis::norm_coeffs(const Coeffs& c) const {
    double s = 0.0;
    for (std::size_t j = 0; j < E_.size(); ++j) s += wE_[j] * (std::norm(c.plus[j]) + std::norm(c.minus[j]));
    return std::sqrt(s / (4.0 * pi));
}

Evolution dirac_evolve(const DiracBasis& B, const std::vector<Spinor>& g, double t) {
    Evolution ev;
    ev.horizon = B.horizon();
    ev.beyond_horizon = std::abs(t) > ev.horizon;
    ev.coeffs = B.forward(g);
    const auto& E = B.E();
    for (std::size_t j = 0; j < E.size(); ++j) {
        const cplx ph = std::exp(-I * E[j] * t);
        ev.coeffs.plus[j] *= ph;
        ev.coeffs.minus[j] *= ph;
    }
    ev.values = B.inverse(ev.coeffs);
    const double n0 = B.norm_x(g);
    ev.norm_defect = n0 > 0.0 ? std::abs(B.norm_x(ev.values) - n0) / n0 : 0.0;
    return ev;
}

waveop::ExperimentReport dirac_waveop_experiment(const DiracBasis& B, const std::vector<Spinor>& f,
                                                 const std::vector<double>& schedule) {
    if (schedule.empty()) throw DomainError("dirac_waveop_experiment: empty schedule");
    waveop::ExperimentReport rep;
    rep.modified = false;
    for (const auto& s : B.scattering()) rep.unstable_band = rep.unstable_band || s.unstable;
    const double tmax = *std::max_element(schedule.begin(), schedule.end());
    rep.beyond_horizon = tmax > B.horizon();

    const DiracBasis B0(Coupling{}, B.x(), B.E(), B.options());
    const auto limit = B0.forward(f);
    rep.limit_norm = B.norm_coeffs(limit);
    const auto& E = B.E();
    const std::size_t n = E.size();

    DiracBasis::Coeffs prev;
    for (double s : schedule) {
        DiracBasis::Coeffs h = limit;
        for (std::size_t j = 0; j < n; ++j) {
            const cplx ph = std::exp(I * E[j] * s);
            h.plus[j] *= ph;
            h.minus[j] *= ph;
        }
        auto c = B.forward(B0.inverse(h));
        for (std::size_t j = 0; j < n; ++j) {
            const cplx ph = std::exp(-I * E[j] * s);
            c.plus[j] *= ph;
            c.minus[j] *= ph;
        }
        waveop::ExperimentRow row;
        row.t = s;
        DiracBasis::Coeffs d{std::vector<cplx>(n), std::vector<cplx>(n)};
        for (std::size_t j = 0; j < n; ++j) {
            d.plus[j] = c.plus[j] - limit.plus[j];
            d.minus[j] = c.minus[j] - limit.minus[j];
        }
        row.dist_to_limit = B.norm_coeffs(d);
        row.norm_defect = rep.limit_norm > 0.0 ? std::abs(B.norm_coeffs(c) - rep.limit_norm) / rep.limit_norm : 0.0;
        if (prev.plus.empty()) {
            row.cauchy_increment = std::numeric_limits<double>::quiet_NaN();
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                d.plus[j] = c.plus[j] - prev.plus[j];
                d.minus[j] = c.minus[j] - prev.minus[j];
            }
            row.cauchy_increment = B.norm_coeffs(d);
        }
        prev = std::move(c);
        rep.rows.push_back(row);
    }
    return rep;
}

void write_packet_csv(std::ostream& os, const std::vector<double>& x, const std::vector<Spinor>& g) {
    if (x.size() != g.size()) throw DomainError("write_packet_csv: size mismatch");
    const auto old = os.precision(17);
    os << "x,re_1,im_1,re_2,im_2\n";
    for (std::size_t k = 0; k < x.size(); ++k) {
        os << x[k] << ',' << g[k][0].real() << ',' << g[k][0].imag() << ',' << g[k][1].real() << ','
           << g[k][1].imag() << '\n';
    }
    os.precision(old);
}

}  // namespace slowscat::dirac
