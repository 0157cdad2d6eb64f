#include "slowscat/multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"

#include "slowscat/quadrature.hpp"

namespace slowscat::ml {

namespace {

std::vector<double> merged_breaks(std::span<const Function1D> fs) {
    std::vector<double> b;
    for (const auto& f : fs) {
        b.push_back(f.lo);
        b.push_back(f.hi);
        b.insert(b.end(), f.breaks.begin(), f.breaks.end());
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

// Nondecreasing P(x) = int_lo^x g for g >= 0, tabulated on a uniform grid and
// refined locally by quadrature.
class MassTable {
public:
    MassTable(std::function<double(double)> g, double lo, double hi, std::size_t cells, std::vector<double> breaks)
        : g_(std::move(g)), lo_(lo), hi_(hi), breaks_(std::move(breaks)) {
        h_ = (hi - lo) / static_cast<double>(cells);
        quad::Options rough;
        rough.abs_tol = 1e-8;
        rough.breaks = breaks_;
        const double scale = std::abs(quad::integrate(g_, lo, hi, rough).value);
        tol_ = std::max(1e-15 * scale, 1e-300);
        table_.assign(cells + 1, 0.0L);
        for (std::size_t i = 0; i < cells; ++i) {
            table_[i + 1] = table_[i] + static_cast<long double>(segment(node(i), node(i + 1)));
        }
    }

    double node(std::size_t i) const { return i + 1 == table_.size() ? hi_ : lo_ + h_ * static_cast<double>(i); }
    long double total() const { return table_.back(); }

    double segment(double a, double b) const {
        if (!(b > a)) return 0.0;
        quad::Options o;
        o.abs_tol = tol_;
        o.breaks = breaks_;
        return quad::integrate(g_, a, b, o).value;
    }

    std::size_t index(double x) const {
        if (x <= lo_) return 0;
        auto i = static_cast<std::size_t>((x - lo_) / h_);
        return std::min(i, table_.size() - 2);
    }

    long double at(double x) const {
        if (x <= lo_) return 0.0L;
        if (x >= hi_) return table_.back();
        const std::size_t i = index(x);
        return table_[i] + static_cast<long double>(segment(node(i), x));
    }

    // Smallest-bracket solution of P(x) = target.
    double invert(long double target) const {
        if (target <= 0.0L) return lo_;
        if (target >= table_.back()) return hi_;
        auto it = std::upper_bound(table_.begin(), table_.end(), target);
        std::size_t i = static_cast<std::size_t>(it - table_.begin());
        i = i == 0 ? 0 : i - 1;
        i = std::min(i, table_.size() - 2);
        double a = node(i), b = node(i + 1);
        const long double rem = target - table_[i];
        const double x0 = a;
        double x = a + (b - a) * static_cast<double>(rem / std::max(table_[i + 1] - table_[i], 1e-300L));
        for (int it2 = 0; it2 < 200; ++it2) {
            const long double r = static_cast<long double>(segment(x0, x)) - rem;
            if (r == 0.0L) return x;
            if (r > 0) b = x;
            else a = x;
            const double gx = g_(x);
            double next = gx > 0.0 ? x - static_cast<double>(r) / gx : 0.5 * (a + b);
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
                return next;
            }
            x = next;
        }
        return x;
    }

private:
    std::function<double(double)> g_;
    double lo_, hi_, h_;
    double tol_ = 0.0;
    std::vector<double> breaks_;
    std::vector<long double> table_;
};

// Integrals of f over the finest cells of ms.
std::vector<cplx> finest_integrals(const Function1D& f, const MartingaleStructure& ms) {
    const auto& x = ms.finest();
    std::vector<cplx> out(x.size() - 1);
    quad::Options o;
    o.abs_tol = 1e-14;
    o.breaks = f.breaks;
    for (std::size_t j = 0; j + 1 < x.size(); ++j) {
        const double a = std::max(x[j], f.lo), b = std::min(x[j + 1], f.hi);
        if (!(b > a)) continue;
        if (f.primitive) {
            out[j] = f.primitive(b) - f.primitive(a);
        } else {
            out[j] = quad::integrate([&](double t) { return f(t); }, a, b, o).value;
        }
    }
    return out;
}

// Level sums of finest-cell data, level index m = 0..M.
std::vector<std::vector<cplx>> level_sums(std::vector<cplx> finest, int depth) {
    std::vector<std::vector<cplx>> lv(depth + 1);
    lv[depth] = std::move(finest);
    for (int m = depth - 1; m >= 0; --m) {
        const auto& fine = lv[m + 1];
        lv[m].resize(fine.size() / 2);
        for (std::size_t j = 0; j < lv[m].size(); ++j) lv[m][j] = fine[2 * j] + fine[2 * j + 1];
    }
    return lv;
}

void require_bruteforce_input(std::span<const Function1D> fs) {
    if (fs.empty()) throw DomainError("m_n_bruteforce: need at least one function");
    if (fs.size() > static_cast<std::size_t>(max_bruteforce_n)) {
        throw DomainError("m_n_bruteforce: n exceeds the cost guard");
    }
    for (const auto& f : fs) {
        if (!std::isfinite(f.lo) || !std::isfinite(f.hi)) throw DomainError("m_n_bruteforce: unbounded support");
    }
}

// Iterated primitive F_n at the grid nodes; returns the full integral.
cplx iterate_simplex(std::span<const Function1D> fs, const quad::PanelGrid& grid, std::vector<cplx>* last) {
    std::vector<cplx> F(grid.size(), cplx(1.0));
    std::vector<cplx> g(grid.size());
    cplx total = 0.0;
    for (const auto& f : fs) {
        for (std::size_t i = 0; i < grid.size(); ++i) g[i] = f(grid.nodes()[i]) * F[i];
        total = grid.integral(g);
        F = grid.cumulative_left(g);
    }
    if (last) *last = std::move(F);
    return total;
}

quad::PanelGrid simplex_grid(std::span<const Function1D> fs) {
    const auto b = merged_breaks(fs);
    const double lo = b.front(), hi = b.back();
    return quad::PanelGrid::covering(lo, hi, (hi - lo) / 4.0, b);
}

double golden_max(const std::function<double(double)>& h, double a, double b) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = h(c), fd = h(d);
    for (int it = 0; it < 80 && (b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = h(d);
        }
    }
    return fc > fd ? c : d;
}

StarResult star_on_grid(std::span<const Function1D> fs, const quad::PanelGrid& grid) {
    std::vector<cplx> F;
    const cplx total = iterate_simplex(fs, grid, &F);
    StarResult best{std::abs(total), grid.right()};
    std::size_t arg = F.size();
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (std::abs(F[i]) > best.value) {
            best = {std::abs(F[i]), grid.nodes()[i]};
            arg = i;
        }
    }
    if (arg < F.size()) {
        const double a = arg > 0 ? grid.nodes()[arg - 1] : grid.left();
        const double b = arg + 1 < F.size() ? grid.nodes()[arg + 1] : grid.right();
        const auto h = [&](double y) { return std::abs(grid.interpolate(F, y)); };
        const double y = golden_max(h, a, b);
        const double v = h(y);
        if (v > best.value) best = {v, y};
    }
    return best;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

Function1D Function1D::step(std::vector<double> edges, std::vector<cplx> values) {
    if (edges.size() != values.size() + 1 || values.empty()) throw DomainError("step function: need |edges| = |values| + 1");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) throw DomainError("step function: edges must increase");
    }
    std::vector<cplx> prim(edges.size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) prim[i + 1] = prim[i] + values[i] * (edges[i + 1] - edges[i]);
    Function1D f;
    f.lo = edges.front();
    f.hi = edges.back();
    f.breaks = edges;
    f.f = [edges, values](double x) {
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        auto k = static_cast<std::size_t>(it - edges.begin());
        k = k == 0 ? 0 : k - 1;
        return values[std::min(k, values.size() - 1)];
    };
    f.primitive = [edges, values, prim](double x) {
        if (x <= edges.front()) return cplx{};
        if (x >= edges.back()) return prim.back();
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        const auto k = static_cast<std::size_t>(it - edges.begin()) - 1;
        return prim[k] + values[k] * (x - edges[k]);
    };
    return f;
}

Function1D Function1D::zero(double lo, double hi) {
    Function1D f;
    f.lo = lo;
    f.hi = hi;
    f.f = [](double) { return cplx{}; };
    f.primitive = [](double) { return cplx{}; };
    return f;
}

Function1D Function1D::reflected() const {
    Function1D g;
    g.lo = -hi;
    g.hi = -lo;
    for (auto it = breaks.rbegin(); it != breaks.rend(); ++it) g.breaks.push_back(-*it);
    g.f = [f = f](double x) { return f(-x); };
    if (primitive) {
        const cplx top = primitive(hi);
        g.primitive = [p = primitive, top](double x) { return top - p(-x); };
    }
    return g;
}

MartingaleStructure::MartingaleStructure(std::vector<double> finest, int depth)
    : finest_(std::move(finest)), depth_(depth) {
    if (depth < 0 || finest_.size() != (std::size_t{1} << depth) + 1) {
        throw DomainError("MartingaleStructure: finest level must hold 2^M + 1 points");
    }
    for (std::size_t i = 1; i < finest_.size(); ++i) {
        if (finest_[i] < finest_[i - 1]) throw DomainError("MartingaleStructure: breakpoints must be nondecreasing");
    }
}

MartingaleStructure MartingaleStructure::uniform(double a, double b, int depth) {
    if (!(b > a)) throw DomainError("MartingaleStructure::uniform: need a < b");
    const std::size_t n = std::size_t{1} << depth;
    std::vector<double> x(n + 1);
    for (std::size_t i = 0; i <= n; ++i) x[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
    x.back() = b;
    return {std::move(x), depth};
}

std::vector<double> MartingaleStructure::level(int m) const {
    if (m < 0 || m > depth_) throw DomainError("MartingaleStructure::level: m out of range");
    const std::size_t stride = std::size_t{1} << (depth_ - m);
    std::vector<double> out;
    for (std::size_t i = 0; i < finest_.size(); i += stride) out.push_back(finest_[i]);
    return out;
}

std::pair<double, double> MartingaleStructure::cell(int m, std::size_t j) const {
    if (j < 1 || j > (std::size_t{1} << m)) throw DomainError("MartingaleStructure::cell: j out of range");
    const std::size_t stride = std::size_t{1} << (depth_ - m);
    return {finest_[(j - 1) * stride], finest_[j * stride]};
}

bool MartingaleStructure::valid() const {
    for (int m = 0; m <= depth_; ++m) {
        const auto x = level(m);
        if (x.size() != (std::size_t{1} << m) + 1) return false;
        if (x.front() != left() || x.back() != right()) return false;
        if (m < depth_) {
            const auto y = level(m + 1);
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (y[2 * j] != x[j]) return false;
            }
        }
    }
    return true;
}

double lp_mass(const Function1D& f, double p, double a, double b) {
    a = std::max(a, f.lo);
    b = std::min(b, f.hi);
    if (!(b > a)) return 0.0;
    quad::Options o;
    o.abs_tol = 1e-14;
    o.breaks = f.breaks;
    return quad::integrate([&](double t) { return std::pow(std::abs(f(t)), p); }, a, b, o).value;
}

double amalgam_mass(const Function1D& f, double p, double a, double b) {
    a = std::max(a, f.lo);
    b = std::min(b, f.hi);
    if (!(b > a)) return 0.0;
    double total = 0.0;
    for (double n = std::floor(a); n < b; n += 1.0) {
        total += std::pow(lp_mass(f, 1.0, std::max(a, n), std::min(b, n + 1.0)), p);
    }
    return total;
}

MartingaleStructure build_adapted(const Function1D& f, double p, int depth, AdaptMode mode, const AdaptOptions& opt) {
    if (depth < 1) throw DomainError("build_adapted: depth must be >= 1");
    if (depth > 24) throw DomainError("build_adapted: depth exceeds table resolution");
    if (!(p >= 1.0)) throw DomainError("build_adapted: exponent must be >= 1");
    const std::size_t n = std::size_t{1} << depth;
    const std::size_t cells = n << opt.table_extra;
    std::vector<double> finest(n + 1);
    finest.front() = f.lo;
    finest.back() = f.hi;

    if (mode == AdaptMode::lp) {
        const MassTable P([&f, p](double t) { return std::pow(std::abs(f(t)), p); }, f.lo, f.hi, cells, f.breaks);
        const long double total = P.total();
        if (!(total > 0.0L)) throw DomainError("build_adapted: zero mass");
        for (std::size_t k = 1; k < n; ++k) {
            finest[k] = P.invert(total * static_cast<long double>(k) / static_cast<long double>(n));
        }
        return {std::move(finest), depth};
    }

    const MassTable P1([&f](double t) { return std::abs(f(t)); }, f.lo, f.hi, cells, f.breaks);
    const auto A = [&](double a, double b) {
        long double total = 0.0L;
        for (double c = std::floor(a); c < b; c += 1.0) {
            const long double m = P1.at(std::min(b, c + 1.0)) - P1.at(std::max(a, c));
            total += std::pow(static_cast<double>(std::max(m, 0.0L)), p);
        }
        return static_cast<double>(total);
    };
    if (!(A(f.lo, f.hi) > 0.0)) throw DomainError("build_adapted: zero amalgam mass");
    // Split each cell so both halves carry equal amalgam mass. Superadditivity of
    // the amalgam mass then gives each half at most half of the parent.
    for (int m = 0; m < depth; ++m) {
        const std::size_t stride = n >> m;
        for (std::size_t j = 0; j < (std::size_t{1} << m); ++j) {
            const double a = finest[j * stride], b = finest[(j + 1) * stride];
            double lo = a, hi = b;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
                const double mid = 0.5 * (lo + hi);
                if (A(a, mid) < A(mid, b)) lo = mid;
                else hi = mid;
            }
            finest[j * stride + stride / 2] = 0.5 * (lo + hi);
        }
    }
    return {std::move(finest), depth};
}

cplx m_n_bruteforce(std::span<const Function1D> fs, double tol) {
    require_bruteforce_input(fs);
    auto grid = simplex_grid(fs);
    cplx prev = iterate_simplex(fs, grid, nullptr);
    for (int r = 0; r < 14; ++r) {
        grid = grid.refined();
        const cplx cur = iterate_simplex(fs, grid, nullptr);
        if (std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    return prev;
}

StarResult m_n_star_bruteforce(std::span<const Function1D> fs, double tol) {
    require_bruteforce_input(fs);
    auto grid = simplex_grid(fs);
    StarResult prev = star_on_grid(fs, grid);
    for (int r = 0; r < 14; ++r) {
        grid = grid.refined();
        const StarResult cur = star_on_grid(fs, grid);
        if (std::abs(cur.value - prev.value) < tol) return cur;
        prev = cur;
    }
    return prev;
}

GDeltaResult g_delta(const Function1D& f, const MartingaleStructure& ms, double delta) {
    const Function1D one[] = {f};
    return g_delta(std::span<const Function1D>(one), ms, delta);
}

GDeltaResult g_delta(std::span<const Function1D> fs, const MartingaleStructure& ms, double delta) {
    const int M = ms.depth();
    std::vector<std::vector<double>> sup2(M + 1);
    for (int m = 0; m <= M; ++m) sup2[m].assign(std::size_t{1} << m, 0.0);
    for (const auto& f : fs) {
        const auto lv = level_sums(finest_integrals(f, ms), M);
        for (int m = 1; m <= M; ++m) {
            for (std::size_t j = 0; j < lv[m].size(); ++j) sup2[m][j] = std::max(sup2[m][j], std::norm(lv[m][j]));
        }
    }
    GDeltaResult r;
    r.depth = M;
    for (int m = 1; m <= M; ++m) {
        double s = 0.0;
        for (double v : sup2[m]) s += v;
        const double term = std::pow(2.0, delta * m) * std::sqrt(s);
        r.value += term;
        if (m == M) r.last_level = term;
    }
    return r;
}

std::vector<CellIntegrals> phase_cell_integrals(const Potential& V, const MartingaleStructure& ms,
                                                const std::function<cplx(double)>& phi, bool* converged) {
    const int M = ms.depth();
    const auto& x = ms.finest();
    const std::size_t n = x.size() - 1;
    std::vector<cplx> phase(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) phase[i] = phi(x[i]);
    const auto brk = V.breakpoints();
    quad::Options o;
    o.abs_tol = 1e-12;
    o.breaks = brk;
    std::vector<CellIntegrals> lv(M + 1);
    lv[M].minus.resize(n);
    lv[M].plus.resize(n);
    bool ok = true;
    for (std::size_t j = 0; j < n; ++j) {
        const double a = x[j], b = x[j + 1];
        if (!(b > a)) continue;
        const cplx pa = phase[j], pb = phase[j + 1];
        const auto rm = quad::integrate([&](double t) { return std::exp(2.0 * I * (phi(t) - pa)) * V.eval(t); }, a, b, o);
        const auto rp = quad::integrate([&](double t) { return std::exp(2.0 * I * (pb - phi(t))) * V.eval(t); }, a, b, o);
        ok = ok && rm.converged && rp.converged;
        lv[M].minus[j] = rm.value;
        lv[M].plus[j] = rp.value;
    }
    for (int m = M - 1; m >= 0; --m) {
        const std::size_t cells = std::size_t{1} << m;
        const std::size_t stride = n / cells;
        lv[m].minus.resize(cells);
        lv[m].plus.resize(cells);
        for (std::size_t j = 0; j < cells; ++j) {
            const cplx pa = phase[j * stride];
            const cplx pm = phase[j * stride + stride / 2];
            const cplx pb = phase[(j + 1) * stride];
            const auto& f = lv[m + 1];
            lv[m].minus[j] = f.minus[2 * j] + std::exp(2.0 * I * (pm - pa)) * f.minus[2 * j + 1];
            lv[m].plus[j] = std::exp(2.0 * I * (pb - pm)) * f.plus[2 * j] + f.plus[2 * j + 1];
        }
    }
    if (converged) *converged = ok;
    return lv;
}

GPhaseResult g_phase(const Potential& V, const MartingaleStructure& ms, GWeight weight, double delta,
                     const std::function<cplx(double)>& phi) {
    GPhaseResult r;
    const auto lv = phase_cell_integrals(V, ms, phi, &r.converged);
    const int M = ms.depth();
    for (int m = 1; m <= M; ++m) {
        double s = 0.0;
        const auto& c = lv[m];
        for (std::size_t j = 0; j < c.minus.size(); ++j) {
            s += std::norm(c.minus[j]);
            if (j + 1 < c.minus.size()) s += std::norm(c.plus[j]);
        }
        const double Gm = std::sqrt(s);
        r.level_terms.push_back(Gm);
        const double w = weight == GWeight::linear ? static_cast<double>(m) : std::pow(2.0, delta * m);
        r.value += w * Gm;
        if (m == M) r.last_level = w * Gm;
    }
    return r;
}

BoundReport check_numerical_bound(std::span<const Function1D> fs, double delta, double delta_prime, double C,
                                  const BoundOptions& opt) {
    if (fs.size() < 2 || fs.size() > 5) throw DomainError("check_numerical_bound: need 2 <= n <= 5");
    if (!(delta >= 0.0) || !(delta_prime > delta)) throw DomainError("check_numerical_bound: need delta' > delta >= 0");
    BoundReport r;
    r.n = static_cast<int>(fs.size());
    r.C = C;
    r.delta = delta;
    r.delta_prime = delta_prime;
    const auto b = merged_breaks(fs);
    const auto ms = MartingaleStructure::uniform(b.front(), b.back(), opt.depth);
    r.lhs = std::abs(m_n_bruteforce(fs));
    r.lhs_star = m_n_star_bruteforce(fs).value;
    const auto rest = fs.subspan(1);
    r.g_first = g_delta(fs[0], ms, -delta).value;
    r.g_rest = g_delta(rest, ms, delta).value;
    r.g_rest_prime = g_delta(rest, ms, delta_prime).value;
    const double n = r.n;
    const double cn = std::exp((n + 1.0) * std::log(C) - 0.5 * std::lgamma(n + 1.0));
    r.rhs = cn * r.g_first * std::pow(r.g_rest, n - 1.0);
    r.rhs_star = cn * r.g_first * std::pow(r.g_rest_prime, n - 1.0);
    const auto ratio = [](double l, double h) {
        if (l == 0.0) return 0.0;
        return h > 0.0 ? l / h : std::numeric_limits<double>::infinity();
    };
    r.margin = ratio(r.lhs, r.rhs);
    r.margin_star = ratio(r.lhs_star, r.rhs_star);
    r.holds = r.margin <= 1.0;
    r.holds_star = r.margin_star <= 1.0;
    return r;
}

double required_constant(const BoundReport& r) {
    const double n = r.n;
    const auto need = [&](double lhs, double g_rest) {
        if (lhs == 0.0) return 0.0;
        const double base = r.g_first * std::pow(g_rest, n - 1.0);
        if (!(base > 0.0)) return std::numeric_limits<double>::infinity();
        return std::exp((std::log(lhs) + 0.5 * std::lgamma(n + 1.0) - std::log(base)) / (n + 1.0));
    };
    return std::max(need(r.lhs, r.g_rest), need(r.lhs_star, r.g_rest_prime));
}

Calibration calibrate_constant(const Corpus& corpus, double delta, double delta_prime, double margin,
                               const BoundOptions& opt) {
    if (corpus.samples.empty()) throw DomainError("calibrate_constant: empty corpus");
    if (!(margin >= 1.0)) throw DomainError("calibrate_constant: margin must be >= 1");
    Calibration cal;
    cal.corpus_id = corpus.id;
    for (const auto& fs : corpus.samples) {
        auto r = check_numerical_bound(fs, delta, delta_prime, 1.0, opt);
        r.corpus_id = corpus.id;
        cal.required = std::max(cal.required, required_constant(r));
        cal.reports.push_back(std::move(r));
    }
    cal.C = margin * cal.required;
    return cal;
}

std::string BoundReport::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["margin"] = margin;
    j["lhs_star"] = lhs_star;
    j["rhs_star"] = rhs_star;
    j["margin_star"] = margin_star;
    j["C"] = C;
    j["delta"] = delta;
    j["delta_prime"] = delta_prime;
    j["corpus_id"] = corpus_id;
    j["holds"] = holds;
    j["holds_star"] = holds_star;
    return j.dump();
}

Corpus random_step_corpus(std::uint64_t seed, int count, int n_max, int cells) {
    if (n_max < 2 || n_max > 5) throw DomainError("random_step_corpus: n_max must be in [2, 5]");
    if (cells < 1) throw DomainError("random_step_corpus: cells must be positive");
    Corpus c;
    std::size_t draws = 0;
    for (int k = 0; k < count; ++k) draws += static_cast<std::size_t>(2 + k % (n_max - 1)) * (3 * cells);
    const auto u = uniform_symmetric(seed, draws);
    std::size_t pos = 0;
    std::uint64_t h = 1469598103934665603ULL;
    for (int k = 0; k < count; ++k) {
        const int n = 2 + k % (n_max - 1);
        std::vector<Function1D> sample;
        for (int i = 0; i < n; ++i) {
            std::vector<double> edges{0.0};
            for (int e = 0; e < cells - 1; ++e) edges.push_back(0.5 * (u[pos++] + 1.0));
            ++pos;
            edges.push_back(1.0);
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            std::vector<cplx> vals;
            for (int e = 0; e < cells; ++e) {
                const cplx v(u[pos], u[pos + 1]);
                pos += 2;
                if (vals.size() + 1 < edges.size()) vals.push_back(v);
            }
            h = fnv1a(edges.data(), edges.size() * sizeof(double), h);
            h = fnv1a(vals.data(), vals.size() * sizeof(cplx), h);
            sample.push_back(Function1D::step(std::move(edges), std::move(vals)));
        }
        c.samples.push_back(std::move(sample));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "steps-%llu-%016llx", static_cast<unsigned long long>(seed),
                  static_cast<unsigned long long>(h));
    c.id = buf;
    return c;
}

BnTable BnTable::make(double C, int n_max) {
    if (!(C > 0.0)) throw DomainError("BnTable: C must be positive");
    BnTable t;
    t.C = C;
    t.b.resize(n_max + 1);
    for (int n = 0; n <= n_max; ++n) t.b[n] = std::exp((n + 1.0) * std::log(C) - 0.5 * std::lgamma(n + 1.0));
    return t;
}

BnCheck calibrate_bn(double C, int n_max, int grid_size) {
    if (n_max > 20) throw DomainError("calibrate_bn: n_max must be <= 20");
    if (grid_size < 2) throw DomainError("calibrate_bn: grid_size must be >= 2");
    const auto t = BnTable::make(C, n_max);
    BnCheck out;
    for (int n = 2; n <= n_max; ++n) {
        for (int k = 0; k < grid_size; ++k) {
            const double th = 0.5 * pi * k / (grid_size - 1);
            const double x = k + 1 == grid_size ? 0.0 : std::cos(th);
            const double y = k == 0 ? 0.0 : std::sin(th);
            double lhs = t.b[n] * (std::pow(y, n) + std::pow(x, n));
            for (int i = 2; i <= n - 2; ++i) lhs += t.b[i] * t.b[n - i] * std::pow(x, i) * std::pow(y, n - i);
            const double ratio = lhs / t.b[n];
            out.worst_ratio = std::max(out.worst_ratio, ratio);
            if (ratio > 1.0 + 1e-12 && out.ok) {
                out.ok = false;
                out.n = n;
                out.x = x;
                out.y = y;
            }
        }
    }
    return out;
}

double max_admissible_bn_constant(int n_max, int grid_size, double tol) {
    double hi = 1.0;
    while (calibrate_bn(hi, n_max, grid_size).ok) {
        hi *= 2.0;
        if (hi > 1e6) return std::numeric_limits<double>::infinity();
    }
    double lo = 0.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (calibrate_bn(mid, n_max, grid_size).ok) lo = mid;
        else hi = mid;
    }
    return lo;
}

}  // namespace slowscat::ml
