#include "slowscat/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace slowscat::quad {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
using G7 = boost::math::quadrature::gauss<double, 7>;

// Gauss weight attached to each nonnegative Kronrod abscissa, zero where absent.
const std::array<double, 8>& embedded_gauss_weights() {
    static const std::array<double, 8> w = [] {
        std::array<double, 8> out{};
        const auto& xk = GK::abscissa();
        const auto& xg = G7::abscissa();
        const auto& wg = G7::weights();
        for (std::size_t i = 0; i < xk.size(); ++i) {
            for (std::size_t j = 0; j < xg.size(); ++j) {
                if (std::abs(xk[i] - xg[j]) < 1e-14) out[i] = wg[j];
            }
        }
        return out;
    }();
    return w;
}

// One K15 panel with error |K15 - G7|, both scaled to [a, b].
template <class T, class F>
T kronrod_panel(const F& f, double a, double b, double& err) {
    const auto& xk = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = embedded_gauss_weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const T f0 = f(c);
    T k = wk[0] * f0, g = wg[0] * f0;
    for (std::size_t i = 1; i < xk.size(); ++i) {
        const T s = f(c - h * xk[i]) + f(c + h * xk[i]);
        k += wk[i] * s;
        g += wg[i] * s;
    }
    err = std::abs(h * (k - g));
    return h * k;
}

std::vector<double> split_points(double a, double b, const Options& opt) {
    std::vector<double> pts{a};
    for (double x : opt.breaks) {
        if (x > a && x < b) pts.push_back(x);
    }
    if (opt.period > 0.0) {
        const double first = std::ceil(a / opt.period) * opt.period;
        const auto count = static_cast<long>((b - first) / opt.period);
        if (count < 200000) {
            for (long k = 0; k <= count; ++k) {
                const double x = first + static_cast<double>(k) * opt.period;
                if (x > a && x < b) pts.push_back(x);
            }
        }
    }
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

template <class T, class F>
Result<T> adaptive(const F& f, double a, double b, const Options& opt) {
    Result<T> res;
    if (a == b) return res;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    const double total = b - a;
    struct Seg {
        double lo, hi;
        int depth;
    };
    std::vector<Seg> stack;
    const auto pts = split_points(a, b, opt);
    for (std::size_t i = pts.size() - 1; i > 0; --i) stack.push_back({pts[i - 1], pts[i], 0});

    long used = 0;
    while (!stack.empty()) {
        const Seg s = stack.back();
        stack.pop_back();
        double err = 0.0;
        const T v = kronrod_panel<T>(f, s.lo, s.hi, err);
        const double allot = opt.abs_tol * (s.hi - s.lo) / total;
        const double floor = 50.0 * std::numeric_limits<double>::epsilon() * std::abs(v);
        if (err <= allot || err <= floor || s.depth >= opt.max_depth || ++used >= opt.max_panels ||
            (s.hi - s.lo) < 1e-14 * std::max(1.0, std::abs(s.lo))) {
            if (err > allot && err > floor) res.converged = false;
            res.value += v;
            res.error += err;
            continue;
        }
        const double mid = 0.5 * (s.lo + s.hi);
        stack.push_back({mid, s.hi, s.depth + 1});
        stack.push_back({s.lo, mid, s.depth + 1});
    }
    res.value *= sign;
    return res;
}

}  // namespace

Result<double> integrate_real(const RealFn& f, double a, double b, const Options& opt) {
    return adaptive<double>(f, a, b, opt);
}

Result<cplx> integrate_cplx(const CplxFn& f, double a, double b, const Options& opt) {
    return adaptive<cplx>(f, a, b, opt);
}

Result<double> wynn_epsilon(std::span<const double> s) {
    Result<double> res;
    const std::size_t n = s.size();
    if (n == 0) return res;
    if (n < 3) {
        res.value = s.back();
        res.error = n == 2 ? std::abs(s[1] - s[0]) : std::abs(s[0]);
        return res;
    }
    // e[k] holds column k of the epsilon table, rows aligned to the end.
    std::vector<std::vector<double>> e(n + 1);
    e[0].assign(n + 1, 0.0);
    e[1].assign(s.begin(), s.end());
    for (std::size_t k = 2; k <= n; ++k) {
        const auto& prev = e[k - 1];
        const auto& prev2 = e[k - 2];
        const std::size_t len = prev.size() - 1;
        e[k].resize(len);
        for (std::size_t i = 0; i < len; ++i) {
            const double d = prev[i + 1] - prev[i];
            const double base = k >= 2 ? prev2[i + 1] : 0.0;
            e[k][i] = (d == 0.0) ? std::numeric_limits<double>::infinity() : base + 1.0 / d;
        }
    }
    // Odd columns (1, 3, 5, ...) are the estimates; take the last two finite ones
    // from the deepest column that still has two entries.
    double best = s.back();
    double best_err = std::abs(s[n - 1] - s[n - 2]);
    for (std::size_t k = 3; k <= n; k += 2) {
        const auto& col = e[k];
        if (col.size() < 2) break;
        const double a = col[col.size() - 1];
        const double b = col[col.size() - 2];
        if (!std::isfinite(a) || !std::isfinite(b)) break;
        const double err = std::abs(a - b);
        if (err <= best_err) {
            best = a;
            best_err = err;
        }
    }
    res.value = best;
    res.error = best_err;
    return res;
}

Result<double> integrate_to_infinity(const RealFn& f, double a, const Options& opt, int max_blocks) {
    Result<double> res;
    std::vector<double> partial;
    double sum = 0.0;
    double lo = a;
    double prev_block = 0.0;
    int growing = 0;
    Options inner = opt;
    inner.abs_tol = opt.abs_tol * 1e-2;
    for (int k = 0; k < max_blocks; ++k) {
        const double hi = (1.0 + lo) * 2.0 - 1.0;
        const auto blk = integrate(f, lo, hi, inner);
        if (!blk.converged) res.converged = false;
        const double b = blk.value;
        sum += b;
        partial.push_back(sum);
        if (k > 0 && std::abs(b) >= std::abs(prev_block) && std::abs(b) > opt.abs_tol) {
            if (++growing >= 4) {
                res.value = std::numeric_limits<double>::infinity();
                res.error = std::numeric_limits<double>::infinity();
                res.converged = false;
                return res;
            }
        } else {
            growing = 0;
        }
        if (std::abs(b) < 1e-3 * opt.abs_tol && k > 3) {
            res.value = sum;
            res.error = std::abs(b);
            return res;
        }
        if (k >= 8) {
            const auto w = wynn_epsilon(std::span<const double>(partial).subspan(partial.size() > 24 ? partial.size() - 24 : 0));
            if (w.error < opt.abs_tol && k >= 12) {
                res.value = w.value;
                res.error = w.error;
                return res;
            }
        }
        prev_block = b;
        lo = hi;
    }
    const auto w = wynn_epsilon(std::span<const double>(partial).subspan(partial.size() > 24 ? partial.size() - 24 : 0));
    res.value = w.value;
    res.error = w.error;
    res.converged = false;
    return res;
}

namespace {

GaussRule compute_gauss(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

constexpr int kMaxRule = 128;

struct PanelTables {
    std::array<double, PanelGrid::order> s{};
    std::array<double, PanelGrid::order> w{};
    std::array<double, PanelGrid::order> bary{};
    // S[i][j] = int_{-1}^{s_i} l_j.
    std::array<std::array<double, PanelGrid::order>, PanelGrid::order> S{};
};

double lagrange(const PanelTables& t, int j, double x) {
    double num = 1.0;
    for (int k = 0; k < PanelGrid::order; ++k) {
        if (k != j) num *= (x - t.s[k]);
    }
    double den = 1.0;
    for (int k = 0; k < PanelGrid::order; ++k) {
        if (k != j) den *= (t.s[j] - t.s[k]);
    }
    return num / den;
}

const PanelTables& panel_tables() {
    static const PanelTables tables = [] {
        PanelTables t;
        const auto& g = gauss_legendre(PanelGrid::order);
        for (int i = 0; i < PanelGrid::order; ++i) {
            t.s[i] = g.nodes[i];
            t.w[i] = g.weights[i];
        }
        for (int j = 0; j < PanelGrid::order; ++j) {
            double d = 1.0;
            for (int k = 0; k < PanelGrid::order; ++k) {
                if (k != j) d *= (t.s[j] - t.s[k]);
            }
            t.bary[j] = 1.0 / d;
        }
        for (int i = 0; i < PanelGrid::order; ++i) {
            const double hi = t.s[i];
            const double half = 0.5 * (hi + 1.0);
            for (int j = 0; j < PanelGrid::order; ++j) {
                double acc = 0.0;
                for (int q = 0; q < PanelGrid::order; ++q) {
                    const double x = -1.0 + half * (g.nodes[q] + 1.0);
                    acc += g.weights[q] * lagrange(t, j, x);
                }
                t.S[i][j] = half * acc;
            }
        }
        return t;
    }();
    return tables;
}

cplx bary_eval(const PanelTables& t, const cplx* f, double s) {
    cplx num = 0.0;
    double den = 0.0;
    for (int j = 0; j < PanelGrid::order; ++j) {
        const double d = s - t.s[j];
        if (d == 0.0) return f[j];
        const double c = t.bary[j] / d;
        num += c * f[j];
        den += c;
    }
    return num / den;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1 || n > kMaxRule) throw DomainError("gauss_legendre: order out of range");
    static std::array<GaussRule, kMaxRule + 1> rules;
    static std::array<std::once_flag, kMaxRule + 1> flags;
    std::call_once(flags[n], [n] { rules[n] = compute_gauss(n); });
    return rules[n];
}

PanelGrid::PanelGrid(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2) throw DomainError("PanelGrid: need at least one panel");
    for (std::size_t i = 1; i < edges_.size(); ++i) {
        if (!(edges_[i] > edges_[i - 1])) throw DomainError("PanelGrid: edges must increase");
    }
    const auto& t = panel_tables();
    x_.reserve(panels() * order);
    w_.reserve(panels() * order);
    for (std::size_t p = 0; p < panels(); ++p) {
        const double a = edges_[p], b = edges_[p + 1];
        const double h = 0.5 * (b - a);
        for (int i = 0; i < order; ++i) {
            x_.push_back(a + h * (t.s[i] + 1.0));
            w_.push_back(h * t.w[i]);
        }
    }
}

PanelGrid PanelGrid::covering(double a, double b, double h, std::span<const double> breaks) {
    if (!(b > a) || !(h > 0.0)) throw DomainError("PanelGrid::covering: bad range");
    std::vector<double> knots{a};
    for (double x : breaks) {
        if (x > a && x < b) knots.push_back(x);
    }
    knots.push_back(b);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<double> edges{a};
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const double lo = knots[i - 1], hi = knots[i];
        const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / h - 1e-12)));
        for (int k = 1; k < n; ++k) edges.push_back(lo + (hi - lo) * k / n);
        edges.push_back(hi);
    }
    return PanelGrid(std::move(edges));
}

PanelGrid PanelGrid::refined() const {
    std::vector<double> e;
    e.reserve(2 * edges_.size());
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
        e.push_back(edges_[i]);
        e.push_back(0.5 * (edges_[i] + edges_[i + 1]));
    }
    e.push_back(edges_.back());
    return PanelGrid(std::move(e));
}

void PanelGrid::panel_left_integrals(std::size_t p, std::span<const cplx> f, std::span<cplx> out) const {
    const auto& t = panel_tables();
    const double h = 0.5 * (edges_[p + 1] - edges_[p]);
    const cplx* fp = f.data();
    for (int i = 0; i < order; ++i) {
        cplx acc = 0.0;
        for (int j = 0; j < order; ++j) acc += t.S[i][j] * fp[j];
        out[i] = h * acc;
    }
}

void PanelGrid::panel_right_integrals(std::size_t p, std::span<const cplx> f, std::span<cplx> out) const {
    const auto& t = panel_tables();
    const double h = 0.5 * (edges_[p + 1] - edges_[p]);
    const cplx* fp = f.data();
    for (int i = 0; i < order; ++i) {
        cplx acc = 0.0;
        for (int j = 0; j < order; ++j) acc += (t.w[j] - t.S[i][j]) * fp[j];
        out[i] = h * acc;
    }
}

std::vector<cplx> PanelGrid::cumulative_left(std::span<const cplx> f) const {
    std::vector<cplx> out(x_.size());
    cplx carry = 0.0;
    std::array<cplx, order> buf{};
    for (std::size_t p = 0; p < panels(); ++p) {
        panel_left_integrals(p, f.subspan(p * order, order), buf);
        cplx total = 0.0;
        for (int j = 0; j < order; ++j) total += w_[p * order + j] * f[p * order + j];
        for (int i = 0; i < order; ++i) out[p * order + i] = carry + buf[i];
        carry += total;
    }
    return out;
}

std::vector<cplx> PanelGrid::cumulative_right(std::span<const cplx> f) const {
    std::vector<cplx> out(x_.size());
    cplx carry = 0.0;
    std::array<cplx, order> buf{};
    for (std::size_t q = panels(); q-- > 0;) {
        panel_right_integrals(q, f.subspan(q * order, order), buf);
        cplx total = 0.0;
        for (int j = 0; j < order; ++j) total += w_[q * order + j] * f[q * order + j];
        for (int i = 0; i < order; ++i) out[q * order + i] = carry + buf[i];
        carry += total;
    }
    return out;
}

cplx PanelGrid::integral(std::span<const cplx> f) const {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) acc += w_[i] * f[i];
    return acc;
}

cplx PanelGrid::interpolate(std::span<const cplx> f, double x) const {
    if (x < left() || x > right()) throw DomainError("PanelGrid::interpolate: x outside grid");
    auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    std::size_t p = static_cast<std::size_t>(std::distance(edges_.begin(), it));
    p = p == 0 ? 0 : p - 1;
    if (p >= panels()) p = panels() - 1;
    const double a = edges_[p], b = edges_[p + 1];
    const double s = (2.0 * x - a - b) / (b - a);
    return bary_eval(panel_tables(), f.data() + p * order, s);
}

cplx PanelGrid::edge_value(std::span<const cplx> f, std::size_t p, bool right_edge) const {
    return bary_eval(panel_tables(), f.data() + p * order, right_edge ? 1.0 : -1.0);
}

}  // namespace slowscat::quad
