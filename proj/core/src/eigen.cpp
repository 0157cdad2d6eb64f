#include "slowscat/eigen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/numeric/odeint.hpp>

#include "slowscat/quadrature.hpp"

namespace slowscat::eigen {

namespace {

using State = std::array<double, 4>;

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw DomainError("grid must be strictly increasing");
    }
}

// Potential seen from the chosen side: left works on x -> -x.
struct Sided {
    const Potential& V;
    Side side;
    cplx eval(double t) const { return V.eval(side == Side::right ? t : -t); }
    double Q(double t) const { return side == Side::right ? V.cumulative(t) : -V.cumulative(-t); }
    double support_end() const {
        const auto s = V.support();
        return side == Side::right ? s.hi : -s.lo;
    }
    cplx phi(double t, cplx zeta) const { return zeta * t - Q(t) / (2.0 * zeta); }
};

class OdeRunner {
public:
    OdeRunner(const Potential& V, cplx z, const IvpOptions& opt) : V_(V), z_(z), opt_(opt) {
        breaks_ = V.breakpoints();
        std::sort(breaks_.begin(), breaks_.end());
    }

    // Values at sorted targets, integrating outward from (x0, y0) in both directions.
    void run(double x0, cplx u0, cplx du0, const std::vector<double>& targets, std::vector<cplx>& u,
             std::vector<cplx>& du) const {
        u.assign(targets.size(), cplx{});
        du.assign(targets.size(), cplx{});
        const auto split = std::lower_bound(targets.begin(), targets.end(), x0);
        const std::size_t k0 = static_cast<std::size_t>(split - targets.begin());
        // Forward part.
        {
            State y = pack(u0, du0);
            double x = x0;
            double dt = initial_step(1.0);
            for (std::size_t k = k0; k < targets.size(); ++k) {
                advance(y, x, targets[k], dt);
                unpack(y, u[k], du[k]);
            }
        }
        // Backward part.
        {
            State y = pack(u0, du0);
            double x = x0;
            double dt = initial_step(-1.0);
            for (std::size_t k = k0; k-- > 0;) {
                advance(y, x, targets[k], dt);
                unpack(y, u[k], du[k]);
            }
        }
    }

private:
    static State pack(cplx u, cplx du) { return {u.real(), u.imag(), du.real(), du.imag()}; }
    static void unpack(const State& y, cplx& u, cplx& du) {
        u = {y[0], y[1]};
        du = {y[2], y[3]};
    }

    double initial_step(double sign) const {
        const double k = std::sqrt(std::abs(z_)) + 1.0;
        double h = 0.1 / k;
        if (opt_.max_step > 0.0) h = std::min(h, opt_.max_step);
        return sign * h;
    }

    void advance(State& y, double& x, double target, double& dt) const {
        if (target == x) return;
        const double sign = target > x ? 1.0 : -1.0;
        dt = sign * std::abs(dt);
        // Stop at every break strictly between x and target.
        std::vector<double> stops;
        for (double b : breaks_) {
            if ((b - x) * sign > 0.0 && (target - b) * sign > 0.0) stops.push_back(b);
        }
        if (sign < 0) std::reverse(stops.begin(), stops.end());
        stops.push_back(target);
        for (double s : stops) segment(y, x, s, dt);
    }

    void segment(State& y, double& x, double end, double& dt) const {
        namespace odeint = boost::numeric::odeint;
        auto stepper = odeint::make_controlled(opt_.abs_tol, opt_.rel_tol, odeint::runge_kutta_fehlberg78<State>());
        const double start = x;
        // Breaks sit on segment ends; evaluate V from inside the segment there.
        const auto sys = [this, start, end](const State& s, State& d, double t) {
            double te = t;
            if (t == start) te = std::nextafter(t, end);
            else if (t == end) te = std::nextafter(t, start);
            const cplx w = V_.eval(te) - z_;
            const cplx u(s[0], s[1]);
            const cplx f = w * u;
            d[0] = s[2];
            d[1] = s[3];
            d[2] = f.real();
            d[3] = f.imag();
        };
        const double sign = end > x ? 1.0 : -1.0;
        int fails = 0;
        while ((end - x) * sign > 0.0) {
            double suggestion = dt;
            if (opt_.max_step > 0.0 && std::abs(suggestion) > opt_.max_step) suggestion = sign * opt_.max_step;
            const bool last = std::abs(suggestion) >= std::abs(end - x);
            double h = last ? end - x : suggestion;
            const double before = x;
            const auto r = stepper.try_step(sys, y, x, h);
            if (r == odeint::success) {
                fails = 0;
                if (last && x != end) {
                    // Land exactly on the stop.
                    x = end;
                }
                dt = last ? std::max(std::abs(suggestion), std::abs(h)) * sign : h;
            } else {
                dt = h;
                if (++fails > 200 || std::abs(h) < 1e-14 * std::max(1.0, std::abs(before))) {
                    throw NumericalError("solve_ivp: step size underflow");
                }
            }
        }
        x = end;
    }

    const Potential& V_;
    cplx z_;
    IvpOptions opt_;
    std::vector<double> breaks_;
};

// int_X^inf (zeta - k)^2 / (2 zeta) with k = sqrt(zeta^2 - V).
struct Correction {
    cplx value;
    bool converged = true;
};

cplx local_k(cplx zeta, cplx v) { return zeta * std::sqrt(1.0 - v / (zeta * zeta)); }

Correction phase_correction(const Sided& S, cplx zeta, double X) {
    // zeta - k = zeta w / (1 + sqrt(1 - w)) with w = V / zeta^2, free of cancellation.
    const auto d = [&](double t) {
        const cplx w = S.eval(t) / (zeta * zeta);
        const cplx diff = zeta * w / (1.0 + std::sqrt(1.0 - w));
        return diff * diff / (2.0 * zeta);
    };
    quad::Options o;
    o.abs_tol = 1e-13;
    o.period = S.V.period();
    const auto re = quad::integrate_to_infinity([&](double t) { return d(t).real(); }, X, o, 40);
    const auto im = quad::integrate_to_infinity([&](double t) { return d(t).imag(); }, X, o, 40);
    Correction c;
    c.value = cplx(re.value, im.value);
    c.converged = re.converged && im.converged && std::isfinite(re.value) && std::isfinite(im.value);
    if (!c.converged && !(std::isfinite(re.value) && std::isfinite(im.value))) c.value = 0.0;
    return c;
}

double numeric_derivative_re(const Sided& S, double x) {
    const double h = 1e-4 * std::max(1.0, std::abs(x));
    return (S.eval(x + h) - S.eval(x - h)).real() / (2.0 * h);
}

// Far field in the sided frame (always toward +inf), with log of |u| split off.
struct SidedFar {
    double X = 0.0;
    cplx u_unit;   // u / |u|
    cplx du_unit;  // du / |u|
    double log_mod = 0.0;
    bool exact = false;
    cplx correction;
    bool converged = true;
};

SidedFar sided_far(const Sided& S, cplx zeta, const FarFieldOptions& opt) {
    if (std::abs(zeta) < opt.rho) throw DomainError("far field: |zeta| below rho");
    SidedFar f;
    const double end = S.support_end();
    if (std::isfinite(end)) {
        f.X = end;
        f.exact = true;
        const cplx ph = S.phi(f.X, zeta);
        f.log_mod = -ph.imag();
        f.u_unit = std::exp(I * ph.real());
        f.du_unit = I * zeta * f.u_unit;
        return f;
    }
    double X = opt.x_far;
    if (zeta.imag() > 0.0) X = std::min(X, opt.damping_depth / zeta.imag());
    X = std::max(X, 1.0);
    f.X = X;
    const auto c = phase_correction(S, zeta, X);
    f.correction = c.value;
    f.converged = c.converged;
    const cplx v = S.eval(X);
    const cplx k = local_k(zeta, v);
    const cplx dk = -numeric_derivative_re(S, X) / (2.0 * k);
    const cplx ph = S.phi(X, zeta) + c.value;
    const cplx amp = std::sqrt(zeta / k);
    f.log_mod = -ph.imag() + std::log(std::abs(amp));
    f.u_unit = std::exp(I * ph.real()) * (amp / std::abs(amp));
    f.du_unit = (I * k - dk / (2.0 * k)) * f.u_unit;
    return f;
}

}  // namespace

cplx sqrt_branch(cplx z) {
    if (z.imag() < 0.0) throw DomainError("sqrt_branch: Im z < 0");
    if (z.imag() == 0.0 && z.real() < 0.0) throw DomainError("sqrt_branch: z on the negative axis");
    return std::sqrt(cplx(z.real(), std::abs(z.imag())));
}

SpectralParameter SpectralParameter::from_z(cplx z) {
    SpectralParameter s;
    s.z = z;
    s.zeta = sqrt_branch(z);
    s.on_real_axis = z.imag() == 0.0;
    return s;
}

SpectralParameter SpectralParameter::from_zeta(cplx zeta) {
    if (zeta.imag() < 0.0 || zeta.real() < 0.0 || (zeta.real() == 0.0 && zeta.imag() > 0.0)) {
        throw DomainError("spectral parameter: zeta outside the open first quadrant closure");
    }
    SpectralParameter s;
    s.zeta = zeta;
    s.z = zeta * zeta;
    s.on_real_axis = zeta.imag() == 0.0;
    if (s.on_real_axis) s.z = cplx(s.z.real(), 0.0);
    return s;
}

cplx phase_phi(const Potential& V, double x, cplx zeta, double rho) {
    if (std::abs(zeta) < rho) throw DomainError("phase: |zeta| below rho");
    return zeta * x - V.cumulative(x) / (2.0 * zeta);
}

cplx phase_xi(const Potential& V, double x, cplx z, double rho) { return phase_phi(V, x, sqrt_branch(z), rho); }

void EigenSolution::write_csv(std::ostream& os) const {
    os << "x,re_u,im_u,re_du,im_du\n";
    const auto prec = os.precision(17);
    for (std::size_t k = 0; k < x.size(); ++k) {
        os << x[k] << ',' << u[k].real() << ',' << u[k].imag() << ',' << du[k].real() << ',' << du[k].imag() << '\n';
    }
    os.precision(prec);
}

double residual(const Potential& V, const EigenSolution& s) {
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double h0 = s.x[k] - s.x[k - 1], h1 = s.x[k + 1] - s.x[k];
        const cplx d2 = 2.0 * (h0 * s.u[k + 1] - (h0 + h1) * s.u[k] + h1 * s.u[k - 1]) / (h0 * h1 * (h0 + h1));
        const cplx r = d2 - (V.eval(s.x[k]) - s.z) * s.u[k];
        const double scale = std::max({std::abs(s.u[k]), std::abs(s.du[k]), 1e-300});
        worst = std::max(worst, std::abs(r) / scale);
    }
    return worst;
}

namespace {

struct SeriesWork {
    quad::PanelGrid grid;
    std::vector<cplx> xi;   // xi at nodes
    std::vector<cplx> xiE;  // xi at panel edges
    std::vector<cplx> v;    // V at nodes
    double right = 0.0;
    bool truncated = false;
    cplx zeta;
};

SeriesWork series_setup(const Potential& V, double left, double right_grid, cplx zeta, double tol,
                        const SeriesOptions& opt) {
    SeriesWork w;
    w.zeta = zeta;
    const auto sup = V.support();
    double R;
    if (std::isfinite(sup.hi)) {
        R = sup.hi;
    } else if (zeta.imag() > 0.0) {
        R = right_grid + std::log(1.0 / std::max(tol, 1e-16)) / (2.0 * zeta.imag());
        if (R > opt.x_far) {
            R = std::max(opt.x_far, right_grid);
            w.truncated = true;
        }
    } else {
        R = std::max(opt.x_far, right_grid);
        w.truncated = true;
    }
    R = std::max(R, left);
    w.right = R;
    if (!(R > left)) return w;
    double h = opt.panel;
    if (h <= 0.0) h = std::min(0.5, 1.0 / std::abs(zeta));
    auto br = V.breakpoints();
    if (std::isfinite(sup.lo)) br.push_back(sup.lo);
    if (std::isfinite(sup.hi)) br.push_back(sup.hi);
    w.grid = quad::PanelGrid::covering(left, R, h, br);
    const auto& x = w.grid.nodes();
    w.xi.resize(x.size());
    w.v.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        w.xi[i] = phase_phi(V, x[i], zeta, opt.rho);
        w.v[i] = V.eval(x[i]);
    }
    const auto& e = w.grid.edges();
    w.xiE.resize(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) w.xiE[i] = phase_phi(V, e[i], zeta, opt.rho);
    return w;
}

// Next term from the previous one. For odd n the result is stored normalized,
// L_n = T_n e^{-2 i xi}; even terms are stored as T_n. Values at panel edges
// are returned through edge_out (size panels + 1).
void series_step(const SeriesWork& w, int n, const std::vector<cplx>& prev, std::vector<cplx>& out,
                 std::vector<cplx>& edge_out) {
    const auto& g = w.grid;
    const std::size_t P = g.panels();
    constexpr std::size_t q = quad::PanelGrid::order;
    out.assign(prev.size(), cplx{});
    edge_out.assign(P + 1, cplx{});
    const cplx c = 1.0 / (2.0 * w.zeta);
    std::array<cplx, q> f{}, r{};
    cplx carry = 0.0;  // value at the right edge of the current panel
    for (std::size_t p = P; p-- > 0;) {
        const std::size_t o = p * q;
        if (n % 2 == 1) {
            // L(x) = e^{2i(xi(b)-xi(x))} [L(b) + int_x^b e^{2i(xi(t)-xi(b))} c V T dt]
            const cplx xb = w.xiE[p + 1];
            for (std::size_t i = 0; i < q; ++i) f[i] = c * w.v[o + i] * prev[o + i] * std::exp(2.0 * I * (w.xi[o + i] - xb));
            g.panel_right_integrals(p, f, r);
            for (std::size_t i = 0; i < q; ++i) out[o + i] = std::exp(2.0 * I * (xb - w.xi[o + i])) * (carry + r[i]);
            cplx total = 0.0;
            const auto& wt = g.weights();
            for (std::size_t i = 0; i < q; ++i) total += wt[o + i] * f[i];
            carry = std::exp(2.0 * I * (xb - w.xiE[p])) * (carry + total);
        } else {
            // T(x) = T(b) + int_x^b c V L dt
            for (std::size_t i = 0; i < q; ++i) f[i] = c * w.v[o + i] * prev[o + i];
            g.panel_right_integrals(p, f, r);
            for (std::size_t i = 0; i < q; ++i) out[o + i] = carry + r[i];
            cplx total = 0.0;
            const auto& wt = g.weights();
            for (std::size_t i = 0; i < q; ++i) total += wt[o + i] * f[i];
            carry += total;
        }
        edge_out[p] = carry;
    }
}

double term_sup(const SeriesWork& w, int n, const std::vector<cplx>& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double a = std::abs(t[i]);
        if (n % 2 == 1) a *= std::exp(-2.0 * w.xi[i].imag());
        s = std::max(s, a);
    }
    return s;
}

}  // namespace

cplx series_Tn(const Potential& V, int n, double x, cplx z, const SeriesOptions& opt) {
    if (n < 0 || n > opt.max_terms) throw DomainError("series_Tn: order out of range");
    const cplx zeta = sqrt_branch(z);
    if (n == 0) return 1.0;
    const auto w = series_setup(V, x, x, zeta, 1e-16, opt);
    if (!(w.right > x)) return 0.0;
    std::vector<cplx> cur(w.grid.size(), cplx(1.0)), next, edges;
    for (int k = 1; k <= n; ++k) {
        series_step(w, k, cur, next, edges);
        cur.swap(next);
    }
    const cplx at = edges.front();
    return n % 2 == 1 ? at * std::exp(2.0 * I * w.xiE.front()) : at;
}

SeriesResult solve_series(const Potential& V, const std::vector<double>& grid, cplx z, int N, double tol,
                          const SeriesOptions& opt) {
    check_grid(grid);
    if (N < 0 || N > opt.max_terms) throw DomainError("solve_series: truncation out of range");
    const cplx zeta = sqrt_branch(z);
    if (std::abs(zeta) < opt.rho) throw DomainError("solve_series: |zeta| below rho");
    SeriesResult res;
    auto& sol = res.solution;
    auto& dg = res.diagnostics;
    sol.x = grid;
    sol.z = z;
    sol.tag = Normalization::wkb;
    sol.u.resize(grid.size());
    sol.du.resize(grid.size());

    const auto w = series_setup(V, grid.front(), grid.back(), zeta, tol, opt);
    dg.truncation = w.right;
    dg.truncated = w.truncated;
    dg.term_sup.push_back(1.0);

    // Even sum A = sum T_2k; odd sum B = sum L_2k+1. The odd terms enter the
    // phase matrix with an extra factor i.
    const bool any = w.right > grid.front() && w.grid.size() > 0;
    std::vector<cplx> A, B;
    std::vector<cplx> cur, next, edges;
    if (any) {
        A.assign(w.grid.size(), cplx(1.0));
        B.assign(w.grid.size(), cplx{});
        cur.assign(w.grid.size(), cplx(1.0));
        int n = 1;
        for (; n <= N; ++n) {
            series_step(w, n, cur, next, edges);
            cur.swap(next);
            const double s = term_sup(w, n, cur);
            dg.term_sup.push_back(s);
            auto& acc = n % 2 == 0 ? A : B;
            for (std::size_t i = 0; i < cur.size(); ++i) acc[i] += cur[i];
            dg.terms = n;
            if (s < tol) {
                dg.converged = true;
                break;
            }
        }
        // First omitted term.
        if (dg.terms < opt.max_terms + 1) {
            series_step(w, dg.terms + 1, cur, next, edges);
            dg.term_sup.push_back(term_sup(w, dg.terms + 1, next));
        }
        const double last = dg.term_sup[static_cast<std::size_t>(dg.terms)];
        const double omit = dg.term_sup.back();
        const double ratio = last > 0.0 ? omit / last : 0.0;
        dg.tail = ratio < 1.0 ? omit / (1.0 - ratio) : 2.0 * omit;
        if (omit == 0.0) dg.tail = 0.0;
        dg.converged = dg.converged || dg.tail <= tol;
    } else {
        dg.converged = true;
        dg.term_sup.push_back(0.0);
    }

    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid[k];
        cplx a = 1.0, b = 0.0;
        if (any && x < w.right) {
            a = w.grid.interpolate(A, x);
            b = w.grid.interpolate(B, x);
        }
        const cplx e = std::exp(I * phase_phi(V, x, zeta, opt.rho));
        sol.u[k] = e * (a - I * b);
        sol.du[k] = I * zeta * e * (a + I * b);
    }
    dg.wkb_defect = std::abs(sol.u.back() - std::exp(I * phase_phi(V, grid.back(), zeta, opt.rho)));

    // Envelope C^{n+1}/sqrt(n!).
    double logC = -std::numeric_limits<double>::infinity();
    std::size_t nstar = 0;
    for (std::size_t n = 1; n < dg.term_sup.size(); ++n) {
        const double s = dg.term_sup[n];
        if (!(s > 1e-280)) break;
        const double lc = (std::log(s) + 0.5 * std::lgamma(static_cast<double>(n) + 1.0)) / static_cast<double>(n + 1);
        if (lc > logC) {
            logC = lc;
            nstar = n;
        }
    }
    if (nstar > 0) {
        dg.envelope_C = std::exp(logC);
        dg.envelope_ok = true;
        double prev = -std::numeric_limits<double>::infinity();
        for (std::size_t n = nstar; n < dg.term_sup.size(); ++n) {
            const double s = dg.term_sup[n];
            if (!(s > 1e-280)) break;
            const double margin = static_cast<double>(n + 1) * logC - 0.5 * std::lgamma(static_cast<double>(n) + 1.0) -
                                  std::log(s);
            if (margin < prev - 1e-9) dg.envelope_ok = false;
            prev = margin;
        }
    } else {
        dg.envelope_ok = true;
    }
    return res;
}

EigenSolution solve_ivp(const Potential& V, cplx z, cplx u0, cplx du0, const std::vector<double>& grid, Direction dir,
                        const IvpOptions& opt) {
    check_grid(grid);
    if (!(std::isfinite(u0.real()) && std::isfinite(u0.imag()) && std::isfinite(du0.real()) &&
          std::isfinite(du0.imag()))) {
        throw DomainError("solve_ivp: non-finite initial data");
    }
    EigenSolution s;
    s.x = grid;
    s.z = z;
    s.tag = Normalization::initial_data;
    const double x0 = dir == Direction::forward ? grid.front() : grid.back();
    OdeRunner(V, z, opt).run(x0, u0, du0, grid, s.u, s.du);
    return s;
}

WronskianReport wronskian(const EigenSolution& a, const EigenSolution& b) {
    if (a.x != b.x) throw DomainError("wronskian: grid mismatch");
    if (a.z != b.z) throw DomainError("wronskian: spectral parameter mismatch");
    WronskianReport r;
    r.values.resize(a.size());
    double scale = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        r.values[k] = a.u[k] * b.du[k] - a.du[k] * b.u[k];
        r.mean += r.values[k];
        scale = std::max(scale, std::abs(a.u[k] * b.du[k]) + std::abs(a.du[k] * b.u[k]));
    }
    if (!r.values.empty()) r.mean /= static_cast<double>(r.values.size());
    const double ref = std::max(std::abs(r.values.front()), 1e-300);
    const double denom = std::max(ref, 1e-300 + 1e-16 * scale);
    for (const auto& w : r.values) r.max_drift = std::max(r.max_drift, std::abs(w - r.values.front()) / denom);
    return r;
}

FarField far_field(const Potential& V, cplx zeta, Side side, const FarFieldOptions& opt) {
    const Sided S{V, side};
    const auto f = sided_far(S, zeta, opt);
    FarField out;
    const double mod = std::exp(f.log_mod);
    out.exact = f.exact;
    out.phase_correction = f.correction;
    out.correction_converged = f.converged;
    if (side == Side::right) {
        out.x = f.X;
        out.u = f.u_unit * mod;
        out.du = f.du_unit * mod;
    } else {
        out.x = -f.X;
        out.u = f.u_unit * mod;
        out.du = -f.du_unit * mod;
    }
    return out;
}

EigenSolution jost_solution(const Potential& V, cplx zeta, const std::vector<double>& grid, Side side,
                            const FarFieldOptions& ff, const IvpOptions& ivp) {
    check_grid(grid);
    const Sided S{V, side};
    const auto f = sided_far(S, zeta, ff);
    EigenSolution s;
    s.x = grid;
    s.z = zeta * zeta;
    if (zeta.imag() == 0.0) s.z = cplx(s.z.real(), 0.0);
    s.tag = Normalization::wkb;
    s.u.resize(grid.size());
    s.du.resize(grid.size());

    // Work in the sided frame t = x (right) or t = -x (left), sorted ascending.
    std::vector<double> t(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) t[k] = side == Side::right ? grid[k] : -grid[grid.size() - 1 - k];
    std::vector<double> inner;
    for (double v : t) {
        if (v < f.X) inner.push_back(v);
    }
    std::vector<cplx> u, du;
    if (!inner.empty()) {
        if (side == Side::right) {
            OdeRunner(V, s.z, ivp).run(f.X, f.u_unit, f.du_unit, inner, u, du);
        } else {
            // Left frame: integrate the reflected equation by flipping x.
            std::vector<double> xs(inner.size());
            for (std::size_t i = 0; i < inner.size(); ++i) xs[i] = -inner[inner.size() - 1 - i];
            std::vector<cplx> uu, dd;
            OdeRunner(V, s.z, ivp).run(-f.X, f.u_unit, -f.du_unit, xs, uu, dd);
            u.resize(inner.size());
            du.resize(inner.size());
            for (std::size_t i = 0; i < inner.size(); ++i) {
                u[i] = uu[inner.size() - 1 - i];
                du[i] = -dd[inner.size() - 1 - i];
            }
        }
    }
    const double mod_log = f.log_mod;
    for (std::size_t k = 0; k < t.size(); ++k) {
        cplx uk, dk;
        if (k < inner.size()) {
            uk = u[k] * std::exp(mod_log);
            dk = du[k] * std::exp(mod_log);
        } else if (f.exact) {
            uk = std::exp(I * S.phi(t[k], zeta));
            dk = I * zeta * uk;
        } else {
            const cplx k_loc = local_k(zeta, S.eval(t[k]));
            uk = std::sqrt(zeta / k_loc) * std::exp(I * (S.phi(t[k], zeta) + f.correction));
            dk = I * k_loc * uk;
        }
        const std::size_t dst = side == Side::right ? k : grid.size() - 1 - k;
        s.u[dst] = uk;
        s.du[dst] = side == Side::right ? dk : -dk;
    }
    return s;
}

cplx moebius_beta(cplx m, double beta) {
    const double c = std::cos(beta), s = std::sin(beta);
    return (m * c - s) / (c + m * s);
}

cplx weyl_m(const Potential& V, cplx z, const WeylOptions& opt) {
    if (!(z.imag() > 0.0)) throw DomainError("weyl_m: Im z must be positive");
    const cplx zeta = sqrt_branch(z);
    const auto sol = jost_solution(V, zeta, {0.0}, Side::right, opt.far, opt.ivp);
    const cplx u0 = sol.u[0], d0 = sol.du[0];
    const double scale = std::abs(u0) + std::abs(d0) / std::max(std::abs(zeta), 1.0);
    if (!(scale > 0.0) || std::abs(u0) <= opt.pole_tol * scale) throw NumericalError("weyl_m: pole (u(0) = 0)");
    const cplx m = d0 / u0;
    if (!opt.beta) return m;
    const double c = std::cos(*opt.beta), s = std::sin(*opt.beta);
    if (std::abs(c + m * s) <= opt.pole_tol * (std::abs(m) + 1.0)) throw NumericalError("weyl_m: pole of m_beta");
    return moebius_beta(m, *opt.beta);
}

LimitResult boundary_limit(const std::function<cplx(cplx)>& F, double E, const LimitOptions& opt) {
    if (opt.K < 2) throw DomainError("boundary_limit: need K >= 2");
    LimitResult r;
    const int K = opt.K;
    r.samples.resize(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) r.samples[k] = F(cplx(E, opt.eps0 * std::ldexp(1.0, -k)));

    // Increments must shrink over the second half of the schedule.
    std::vector<double> d(static_cast<std::size_t>(K) + 1, 0.0);
    double mag = 0.0;
    for (int k = 0; k <= K; ++k) mag = std::max(mag, std::abs(r.samples[k]));
    for (int k = 1; k <= K; ++k) d[k] = std::abs(r.samples[k] - r.samples[k - 1]);
    const double floor = 1e-13 * std::max(mag, 1.0);
    r.stable = std::isfinite(mag);
    for (int k = std::max(2, K / 2); k <= K; ++k) {
        if (d[k] > d[k - 1] + floor) r.stable = false;
    }

    // Richardson table in eps with ratio 2.
    std::vector<std::vector<cplx>> T(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) {
        T[k].resize(static_cast<std::size_t>(std::min(k, opt.max_order)) + 1);
        T[k][0] = r.samples[k];
        for (int j = 1; j <= std::min(k, opt.max_order); ++j) {
            const double f = std::ldexp(1.0, j) - 1.0;
            T[k][j] = T[k][j - 1] + (T[k][j - 1] - T[k - 1][j - 1]) / f;
        }
    }
    double best = std::numeric_limits<double>::infinity();
    cplx val = r.samples[K];
    for (int j = 0; j <= std::min(K - 1, opt.max_order); ++j) {
        const double e = std::abs(T[K][j] - T[K - 1][j]);
        if (e < best) {
            best = e;
            val = T[K][j];
        }
    }
    r.error = best;
    if (r.stable) {
        r.value = val;
        r.has_value = true;
    } else {
        r.value = cplx(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
    }
    return r;
}

}  // namespace slowscat::eigen
