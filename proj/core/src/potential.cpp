#include "slowscat/potential.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

#include "slowscat/quadrature.hpp"

namespace slowscat {

namespace {

using json = nlohmann::json;

struct KindInfo {
    PotentialKind kind;
    const char* name;
    std::vector<std::string> scalars;
    std::vector<std::string> optional_scalars;
    std::vector<std::string> arrays;
};

const std::vector<KindInfo>& kind_table() {
    static const std::vector<KindInfo> t = {
        {PotentialKind::zero, "zero", {}, {}, {}},
        {PotentialKind::square_barrier, "square_barrier", {"height", "a", "b"}, {}, {}},
        {PotentialKind::power_decay, "power_decay", {"c", "alpha"}, {}, {}},
        {PotentialKind::wigner_von_neumann, "wigner_von_neumann", {"c"}, {}, {}},
        {PotentialKind::oscillatory_decay, "oscillatory_decay", {"c", "omega", "alpha"}, {}, {}},
        {PotentialKind::bump, "bump", {"amplitude", "a", "b"}, {}, {}},
        {PotentialKind::random_decaying, "random_decaying", {}, {"g_exponent", "cells"}, {"g"}},
        {PotentialKind::sampled, "sampled", {}, {}, {"x", "v", "v_im"}},
    };
    return t;
}

const KindInfo& info(PotentialKind k) {
    for (const auto& e : kind_table()) {
        if (e.kind == k) return e;
    }
    throw DomainError("unknown potential kind");
}

// 140 s^3 (1-s)^3 on [0,1]: unit mass, C^2 at the endpoints.
double poly3(double s) { return 140.0 * s * s * s * (1.0 - s) * (1.0 - s) * (1.0 - s); }
double poly3_primitive(double s) {
    const double s4 = s * s * s * s;
    return 140.0 * s4 * (0.25 - 0.6 * s + 0.5 * s * s - s * s * s / 7.0);
}

// 64 s^3 (1-s)^3: unit height at s = 1/2.
double bump_profile(double s) { return poly3(s) * (64.0 / 140.0); }
double bump_primitive(double s) { return poly3_primitive(s) * (64.0 / 140.0); }

double wvn_classic(double x) {
    const double s = std::sin(x), c = std::cos(x);
    const double g = 2.0 * x - std::sin(2.0 * x);
    const double g2 = g * g;
    const double num = g2 * g * c - 3.0 * g2 * s * s * s + g * c + s * s * s;
    const double den = (1.0 + g2) * (1.0 + g2);
    return -32.0 * s * num / den;
}

}  // namespace

std::string to_string(PotentialKind k) { return info(k).name; }

PotentialKind kind_from_string(const std::string& s) {
    for (const auto& e : kind_table()) {
        if (s == e.name) return e.kind;
    }
    throw DomainError("unknown potential kind: " + s);
}

double PotentialSpec::scalar(const std::string& name) const {
    if (auto v = scalar_opt(name)) return *v;
    throw DomainError("potential spec: missing parameter " + name);
}

std::optional<double> PotentialSpec::scalar_opt(const std::string& name) const {
    for (const auto& [k, v] : scalars) {
        if (k == name) return v;
    }
    return std::nullopt;
}

const std::vector<double>* PotentialSpec::array(const std::string& name) const {
    for (const auto& [k, v] : arrays) {
        if (k == name) return &v;
    }
    return nullptr;
}

PotentialSpec PotentialSpec::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("potential spec: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw DomainError("potential spec: top level must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "kind" && it.key() != "params" && it.key() != "seed") {
            throw DomainError("potential spec: unknown field " + it.key());
        }
    }
    if (!j.contains("kind") || !j["kind"].is_string()) throw DomainError("potential spec: missing kind");
    PotentialSpec spec;
    spec.kind = kind_from_string(j["kind"].get<std::string>());
    const auto& ki = info(spec.kind);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) {
            throw DomainError("potential spec: seed must be a nonnegative integer");
        }
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    const json params = j.contains("params") ? j["params"] : json::object();
    if (!params.is_object()) throw DomainError("potential spec: params must be an object");
    for (auto it = params.begin(); it != params.end(); ++it) {
        const std::string& key = it.key();
        const auto in = [&](const std::vector<std::string>& v) {
            return std::find(v.begin(), v.end(), key) != v.end();
        };
        if (in(ki.scalars) || in(ki.optional_scalars)) {
            if (!it->is_number()) throw DomainError("potential spec: parameter " + key + " must be a number");
            spec.scalars.emplace_back(key, it->get<double>());
        } else if (in(ki.arrays)) {
            if (!it->is_array()) throw DomainError("potential spec: parameter " + key + " must be an array");
            std::vector<double> v;
            for (const auto& e : *it) {
                if (!e.is_number()) throw DomainError("potential spec: array " + key + " must hold numbers");
                v.push_back(e.get<double>());
            }
            spec.arrays.emplace_back(key, std::move(v));
        } else if (spec.kind == PotentialKind::random_decaying && key == "profile") {
            if (!it->is_string()) throw DomainError("potential spec: profile must be a string");
            spec.profile = it->get<std::string>();
        } else {
            throw DomainError("potential spec: unknown parameter " + key + " for kind " + ki.name);
        }
    }
    for (const auto& s : ki.scalars) spec.scalar(s);
    std::sort(spec.scalars.begin(), spec.scalars.end());
    std::sort(spec.arrays.begin(), spec.arrays.end());
    if (spec.kind == PotentialKind::random_decaying && spec.profile.empty()) spec.profile = "poly3";
    return spec;
}

std::string PotentialSpec::serialize() const {
    json j;
    j["kind"] = to_string(kind);
    json params = json::object();
    for (const auto& [k, v] : scalars) params[k] = v;
    for (const auto& [k, v] : arrays) params[k] = v;
    if (kind == PotentialKind::random_decaying) params["profile"] = profile.empty() ? "poly3" : profile;
    j["params"] = params;
    if (seed) j["seed"] = *seed;
    return j.dump();
}

std::vector<double> uniform_symmetric(std::uint64_t seed, std::size_t count) {
    std::mt19937_64 gen(seed);
    std::vector<double> out(count);
    for (auto& a : out) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        a = 2.0 * u - 1.0;
    }
    return out;
}

struct Potential::Impl {
    PotentialSpec spec;
    PotentialOptions opt;
    // Parameters, unpacked.
    double p0 = 0.0, p1 = 0.0, p2 = 0.0;
    std::vector<double> coef;      // random: a_n
    std::vector<double> weight;    // random: a_n g(n)
    std::vector<double> prefix;    // random: sum of weight below cell n
    std::vector<double> sx, sv, svi;
    std::vector<double> sprefix, sprefix_im;
    std::vector<double> cache_x, cache_q;
    bool numeric_cumulative = false;
    double cache_step = 1.0;

    cplx eval(double x) const;
    double closed_q(double x) const;
    cplx sampled_q(double x) const;
    double numeric_q(double x) const;
    double q(double x) const;
    quad::Options quad_opts(double tol) const;
    std::vector<double> breaks() const;
    double period() const;
};

quad::Options Potential::Impl::quad_opts(double tol) const {
    quad::Options o;
    o.abs_tol = tol;
    o.period = period();
    return o;
}

double Potential::Impl::period() const {
    switch (spec.kind) {
        case PotentialKind::wigner_von_neumann: return pi;
        case PotentialKind::oscillatory_decay: return 2.0 * pi / p1;
        default: return 0.0;
    }
}

std::vector<double> Potential::Impl::breaks() const {
    switch (spec.kind) {
        case PotentialKind::square_barrier:
        case PotentialKind::bump: return {p1, p2};
        case PotentialKind::power_decay:
        case PotentialKind::oscillatory_decay: return {0.0};
        case PotentialKind::random_decaying: {
            std::vector<double> b;
            for (std::size_t n = 1; n <= weight.size() + 1; ++n) b.push_back(static_cast<double>(n));
            return b;
        }
        case PotentialKind::sampled: return sx;
        default: return {};
    }
}

cplx Potential::Impl::eval(double x) const {
    switch (spec.kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::square_barrier: return (x >= p1 && x <= p2) ? p0 : 0.0;
        case PotentialKind::power_decay: return p0 * std::pow(1.0 + std::abs(x), -p1);
        case PotentialKind::wigner_von_neumann: return p0 / -8.0 * wvn_classic(x);
        case PotentialKind::oscillatory_decay:
            return p0 * std::sin(p1 * x) * std::pow(1.0 + std::abs(x), -p2);
        case PotentialKind::bump:
            return (x > p1 && x < p2) ? p0 * bump_profile((x - p1) / (p2 - p1)) : 0.0;
        case PotentialKind::random_decaying: {
            if (x < 1.0) return 0.0;
            const auto n = static_cast<std::size_t>(std::floor(x));
            if (n > weight.size()) return 0.0;
            return weight[n - 1] * poly3(x - static_cast<double>(n));
        }
        case PotentialKind::sampled: {
            if (x < sx.front() || x > sx.back()) throw DomainError("sampled potential: x outside grid");
            auto it = std::upper_bound(sx.begin(), sx.end(), x);
            std::size_t k = static_cast<std::size_t>(it - sx.begin());
            if (k >= sx.size()) k = sx.size() - 1;
            const std::size_t j = k - 1;
            const double t = (x - sx[j]) / (sx[k] - sx[j]);
            const double re = sv[j] + t * (sv[k] - sv[j]);
            const double im = svi.empty() ? 0.0 : svi[j] + t * (svi[k] - svi[j]);
            return {re, im};
        }
    }
    return 0.0;
}

double Potential::Impl::closed_q(double x) const {
    switch (spec.kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::square_barrier: {
            const auto F = [&](double t) { return p0 * std::clamp(t, p1, p2); };
            return F(x) - F(0.0);
        }
        case PotentialKind::power_decay: {
            const double ax = std::abs(x);
            const double a = p1;
            const double v = std::abs(a - 1.0) < 1e-14 ? std::log1p(ax)
                                                        : (std::pow(1.0 + ax, 1.0 - a) - 1.0) / (1.0 - a);
            return std::copysign(p0 * v, x);
        }
        case PotentialKind::bump: {
            const auto F = [&](double t) {
                const double s = std::clamp((t - p1) / (p2 - p1), 0.0, 1.0);
                return p0 * (p2 - p1) * bump_primitive(s);
            };
            return F(x) - F(0.0);
        }
        case PotentialKind::random_decaying: {
            if (x < 1.0) return 0.0;
            const auto n = static_cast<std::size_t>(std::floor(x));
            if (n > weight.size()) return prefix.back();
            return prefix[n - 1] + weight[n - 1] * poly3_primitive(x - static_cast<double>(n));
        }
        default: return 0.0;
    }
}

cplx Potential::Impl::sampled_q(double x) const {
    const auto F = [&](double t) -> cplx {
        if (t <= sx.front()) return 0.0;
        if (t >= sx.back()) return {sprefix.back(), sprefix_im.empty() ? 0.0 : sprefix_im.back()};
        auto it = std::upper_bound(sx.begin(), sx.end(), t);
        const std::size_t k = static_cast<std::size_t>(it - sx.begin());
        const std::size_t j = k - 1;
        const double h = t - sx[j];
        const double frac = h / (sx[k] - sx[j]);
        const auto part = [&](const std::vector<double>& v, const std::vector<double>& pre) {
            const double vt = v[j] + frac * (v[k] - v[j]);
            return pre[j] + 0.5 * h * (v[j] + vt);
        };
        return {part(sv, sprefix), svi.empty() ? 0.0 : part(svi, sprefix_im)};
    };
    return F(x) - F(0.0);
}

double Potential::Impl::numeric_q(double x) const {
    const double lo = cache_x.front(), hi = cache_x.back();
    const auto vfun = [this](double t) { return eval(t).real(); };
    if (x >= lo && x <= hi) {
        const auto k = static_cast<std::size_t>(std::floor((x - lo) / cache_step));
        const std::size_t j = std::min(k, cache_x.size() - 1);
        const double x0 = cache_x[j];
        if (x == x0) return cache_q[j];
        return cache_q[j] + quad::integrate(vfun, x0, x, quad_opts(opt.tol * 1e-2)).value;
    }
    const std::size_t j = x > hi ? cache_x.size() - 1 : 0;
    return cache_q[j] + quad::integrate(vfun, cache_x[j], x, quad_opts(opt.tol)).value;
}

double Potential::Impl::q(double x) const {
    if (spec.kind == PotentialKind::sampled) return sampled_q(x).real();
    if (numeric_cumulative) return numeric_q(x);
    return closed_q(x);
}

Potential::Potential() : Potential(PotentialSpec{}) {}

Potential::Potential(PotentialSpec spec, PotentialOptions opt) {
    auto im = std::make_shared<Impl>();
    im->spec = std::move(spec);
    im->opt = opt;
    auto& s = im->spec;
    switch (s.kind) {
        case PotentialKind::zero: break;
        case PotentialKind::square_barrier:
        case PotentialKind::bump:
            im->p0 = s.scalar(s.kind == PotentialKind::bump ? "amplitude" : "height");
            im->p1 = s.scalar("a");
            im->p2 = s.scalar("b");
            if (!(im->p2 > im->p1)) throw DomainError("potential: need a < b");
            break;
        case PotentialKind::power_decay:
            im->p0 = s.scalar("c");
            im->p1 = s.scalar("alpha");
            if (!(im->p1 > 0.0)) throw DomainError("power_decay: alpha must be positive");
            break;
        case PotentialKind::wigner_von_neumann:
            im->p0 = s.scalar("c");
            im->numeric_cumulative = true;
            break;
        case PotentialKind::oscillatory_decay:
            im->p0 = s.scalar("c");
            im->p1 = s.scalar("omega");
            im->p2 = s.scalar("alpha");
            if (!(im->p1 > 0.0) || !(im->p2 > 0.0)) throw DomainError("oscillatory_decay: omega, alpha must be positive");
            im->numeric_cumulative = true;
            break;
        case PotentialKind::random_decaying: {
            if (s.profile.empty()) s.profile = "poly3";
            if (s.profile != "poly3") throw DomainError("random_decaying: unknown bump profile " + s.profile);
            if (!s.seed) throw DomainError("random_decaying: seed required");
            std::vector<double> g;
            if (const auto* arr = s.array("g")) {
                g = *arr;
            } else {
                const double e = s.scalar("g_exponent");
                const double cells = s.scalar("cells");
                if (!(cells >= 1.0)) throw DomainError("random_decaying: cells must be >= 1");
                for (int n = 1; n <= static_cast<int>(cells); ++n) g.push_back(std::pow(n, -e));
            }
            if (g.empty()) throw DomainError("random_decaying: empty g sequence");
            im->coef = uniform_symmetric(*s.seed, g.size());
            im->weight.resize(g.size());
            im->prefix.assign(g.size() + 1, 0.0);
            for (std::size_t n = 0; n < g.size(); ++n) {
                im->weight[n] = im->coef[n] * g[n];
                im->prefix[n + 1] = im->prefix[n] + im->weight[n];
            }
            break;
        }
        case PotentialKind::sampled: {
            const auto* x = s.array("x");
            const auto* v = s.array("v");
            if (!x || !v) throw DomainError("sampled: x and v required");
            if (x->size() < 2 || x->size() != v->size()) throw DomainError("sampled: x and v must match, size >= 2");
            for (std::size_t i = 1; i < x->size(); ++i) {
                if (!((*x)[i] > (*x)[i - 1])) throw DomainError("sampled: x must increase");
            }
            im->sx = *x;
            im->sv = *v;
            if (const auto* vi = s.array("v_im")) {
                if (vi->size() != x->size()) throw DomainError("sampled: v_im size mismatch");
                im->svi = *vi;
            }
            const auto build = [&](const std::vector<double>& v, std::vector<double>& pre) {
                pre.assign(v.size(), 0.0);
                for (std::size_t i = 1; i < v.size(); ++i) {
                    pre[i] = pre[i - 1] + 0.5 * (im->sx[i] - im->sx[i - 1]) * (v[i] + v[i - 1]);
                }
            };
            build(im->sv, im->sprefix);
            if (!im->svi.empty()) build(im->svi, im->sprefix_im);
            break;
        }
    }

    // Cumulative table. Numeric kinds integrate cell by cell outward from 0.
    const double per = im->period();
    im->cache_step = per > 0.0 ? per / 2.0 : 1.0;
    const double ext = im->numeric_cumulative ? opt.cache_extent : std::min(opt.cache_extent, 200.0);
    const auto half = static_cast<long>(std::ceil(ext / im->cache_step));
    if (s.kind == PotentialKind::sampled) {
        im->cache_x = im->sx;
        im->cache_q.resize(im->sx.size());
    } else {
        im->cache_x.resize(2 * half + 1);
        im->cache_q.resize(2 * half + 1);
        for (long k = -half; k <= half; ++k) im->cache_x[k + half] = static_cast<double>(k) * im->cache_step;
    }
    if (im->numeric_cumulative) {
        const auto vfun = [p = im.get()](double t) { return p->eval(t).real(); };
        quad::Options o;
        o.abs_tol = opt.tol * 1e-3;
        im->cache_q[half] = 0.0;
        for (long k = 1; k <= half; ++k) {
            const auto r = quad::integrate(vfun, im->cache_x[half + k - 1], im->cache_x[half + k], o);
            im->cache_q[half + k] = im->cache_q[half + k - 1] + r.value;
            const auto l = quad::integrate(vfun, im->cache_x[half - k], im->cache_x[half - k + 1], o);
            im->cache_q[half - k] = im->cache_q[half - k + 1] - l.value;
        }
    } else {
        for (std::size_t i = 0; i < im->cache_x.size(); ++i) im->cache_q[i] = im->q(im->cache_x[i]);
    }
    impl_ = std::move(im);
}

const PotentialSpec& Potential::spec() const { return impl_->spec; }
PotentialKind Potential::kind() const { return impl_->spec.kind; }
double Potential::tol() const { return impl_->opt.tol; }
bool Potential::is_complex() const { return !impl_->svi.empty(); }
double Potential::real(double x) const { return impl_->eval(x).real(); }
cplx Potential::eval(double x) const { return impl_->eval(x); }
double Potential::cumulative(double x) const { return impl_->q(x); }

cplx Potential::cumulative_complex(double x) const {
    if (impl_->spec.kind == PotentialKind::sampled) return impl_->sampled_q(x);
    return impl_->q(x);
}

Support Potential::support() const {
    const auto& im = *impl_;
    switch (im.spec.kind) {
        case PotentialKind::zero: return {0.0, 0.0};
        case PotentialKind::square_barrier:
        case PotentialKind::bump: return {im.p1, im.p2};
        case PotentialKind::random_decaying: return {1.0, static_cast<double>(im.weight.size() + 1)};
        case PotentialKind::sampled: return {im.sx.front(), im.sx.back()};
        default: return {};
    }
}

std::vector<double> Potential::breakpoints() const { return impl_->breaks(); }
double Potential::period() const { return impl_->period(); }

double Potential::sup_tail(double x) const {
    const auto& im = *impl_;
    const double ax = std::max(x, 0.0);
    switch (im.spec.kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::square_barrier: return x <= im.p2 ? std::abs(im.p0) : 0.0;
        case PotentialKind::bump: return x < im.p2 ? std::abs(im.p0) : 0.0;
        case PotentialKind::power_decay:
        case PotentialKind::oscillatory_decay:
            return std::abs(im.p0) * std::pow(1.0 + (x >= 0.0 ? ax : 0.0), -(im.spec.kind == PotentialKind::power_decay ? im.p1 : im.p2));
        case PotentialKind::wigner_von_neumann: return x >= 1.0 ? 4.0 * std::abs(im.p0) / x : 4.0 * std::abs(im.p0);
        case PotentialKind::random_decaying: {
            double m = 0.0;
            const auto start = static_cast<std::size_t>(std::max(1.0, std::floor(x)));
            for (std::size_t n = start; n <= im.weight.size(); ++n) m = std::max(m, std::abs(im.weight[n - 1]));
            return m * 140.0 / 64.0;
        }
        case PotentialKind::sampled: {
            double m = 0.0;
            for (std::size_t i = 0; i < im.sx.size(); ++i) {
                if (i + 1 < im.sx.size() && im.sx[i + 1] < x) continue;
                m = std::max(m, std::abs(cplx(im.sv[i], im.svi.empty() ? 0.0 : im.svi[i])));
            }
            return m;
        }
    }
    return 0.0;
}

const std::vector<double>& Potential::cache_nodes() const { return impl_->cache_x; }
const std::vector<double>& Potential::cache_values() const { return impl_->cache_q; }
const std::vector<double>& Potential::random_coefficients() const { return impl_->coef; }

NormResult Potential::norm_lp(double p, double a, double b) const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("norm_lp: exponent must be in [1, inf)");
    if (!(a < b)) throw DomainError("norm_lp: need a < b");
    const Support sup = support();
    if (sup.bounded()) {
        a = std::max(a, sup.lo);
        b = std::min(b, sup.hi);
        if (!(a < b)) return {0.0, true, 0.0};
    }
    const auto brk = breakpoints();
    quad::Options o = impl_->quad_opts(tol());
    o.breaks = brk;
    NormResult res;
    double total = 0.0;
    const auto fplus = [&](double x) { return std::pow(std::abs(eval(x)), p); };
    const auto fminus = [&](double x) { return std::pow(std::abs(eval(-x)), p); };
    // Split the range at 0 when either end is infinite so both tails start finite.
    double lo = a, hi = b;
    if (std::isinf(a) && a < 0) {
        const double start = std::isinf(b) ? 0.0 : std::min(b, 0.0);
        const auto r = quad::integrate_to_infinity(fminus, -start, o);
        if (!r.converged && std::isinf(r.value)) return {std::numeric_limits<double>::infinity(), false, r.error};
        total += r.value;
        res.error += r.error;
        lo = start;
    }
    if (std::isinf(b)) {
        const double start = std::max(lo, 0.0);
        if (lo < start) {
            const auto r = quad::integrate(fplus, lo, start, o);
            total += r.value;
            res.error += r.error;
        }
        const auto r = quad::integrate_to_infinity(fplus, start, o);
        if (std::isinf(r.value)) return {std::numeric_limits<double>::infinity(), false, r.error};
        total += r.value;
        res.error += r.error;
    } else if (lo < hi) {
        const auto r = quad::integrate(fplus, lo, hi, o);
        total += r.value;
        res.error += r.error;
    }
    res.value = std::pow(total, 1.0 / p);
    return res;
}

NormResult Potential::norm_amalgam(double p, bool whole_line) const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("norm_amalgam: exponent must be >= 1");
    const auto brk = breakpoints();
    quad::Options o = impl_->quad_opts(tol() * 1e-2);
    o.breaks = brk;
    const auto absv = [&](double x) { return std::abs(eval(x)); };
    const auto cell = [&](long n) {
        return quad::integrate(absv, static_cast<double>(n), static_cast<double>(n + 1), o).value;
    };
    const Support sup = support();
    NormResult res;
    if (sup.bounded()) {
        long first = static_cast<long>(std::floor(sup.lo));
        if (!whole_line) first = std::max(first, 0L);
        const long last = static_cast<long>(std::ceil(sup.hi));
        double total = 0.0;
        for (long n = first; n < last; ++n) total += std::pow(cell(n), p);
        res.value = std::pow(total, 1.0 / p);
        return res;
    }
    // Dyadic blocks of cells [2^k - 1, 2^{k+1} - 1), extrapolated.
    const auto side = [&](int dir) -> quad::Result<double> {
        std::vector<double> partial;
        double sum = 0.0, prev = 0.0;
        int growing = 0;
        quad::Result<double> r;
        constexpr int kMax = 18;
        for (int k = 0; k < kMax; ++k) {
            const long lo = (1L << k) - 1, hi = (1L << (k + 1)) - 1;
            double blk = 0.0;
            for (long n = lo; n < hi; ++n) blk += std::pow(cell(dir > 0 ? n : -n - 1), p);
            sum += blk;
            partial.push_back(sum);
            if (k > 2 && blk >= prev && blk > tol()) {
                if (++growing >= 3) {
                    r.value = std::numeric_limits<double>::infinity();
                    r.converged = false;
                    return r;
                }
            } else {
                growing = 0;
            }
            prev = blk;
            if (blk < 1e-3 * tol() && k > 3) {
                r.value = sum;
                return r;
            }
            if (k >= 8) {
                const auto w = quad::wynn_epsilon(partial);
                if (w.error < tol()) return w;
            }
        }
        auto w = quad::wynn_epsilon(partial);
        w.converged = w.error < 1e-6 * std::abs(w.value);
        return w;
    };
    const auto right = side(+1);
    double total = right.value;
    res.error = right.error;
    if (whole_line) {
        const auto left = side(-1);
        total += left.value;
        res.error += left.error;
    }
    if (!std::isfinite(total)) return {std::numeric_limits<double>::infinity(), false, res.error};
    res.value = std::pow(total, 1.0 / p);
    res.finite = true;
    return res;
}

TailReport Potential::improper_tail(double N) const {
    if (!(N > 0.0)) throw DomainError("improper_tail: N must be positive");
    TailReport t;
    t.value = cumulative(N);
    const double per = period();
    const auto osc = [&](double lo, double hi, double ref) {
        const double span = hi - lo;
        int pts = 512;
        if (per > 0.0) pts = std::max(pts, static_cast<int>(std::ceil(span / (per / 16.0))));
        pts = std::min(pts, 200000);
        double m = 0.0;
        for (int i = 0; i <= pts; ++i) {
            const double x = lo + span * i / pts;
            m = std::max(m, std::abs(cumulative(x) - ref));
        }
        return m;
    };
    t.oscillation = osc(N / 2.0, N, t.value);
    t.previous = osc(N / 4.0, N / 2.0, cumulative(N / 2.0));
    t.convergent = t.oscillation <= 10.0 * tol() || t.oscillation <= 0.75 * t.previous;
    return t;
}

namespace {
Potential build(PotentialKind k, std::vector<std::pair<std::string, double>> sc,
                std::vector<std::pair<std::string, std::vector<double>>> arr = {},
                std::optional<std::uint64_t> seed = std::nullopt) {
    PotentialSpec s;
    s.kind = k;
    std::sort(sc.begin(), sc.end());
    std::sort(arr.begin(), arr.end());
    s.scalars = std::move(sc);
    s.arrays = std::move(arr);
    s.seed = seed;
    if (k == PotentialKind::random_decaying) s.profile = "poly3";
    return Potential(std::move(s));
}
}  // namespace

Potential make_zero() { return build(PotentialKind::zero, {}); }
Potential make_square_barrier(double h, double a, double b) {
    return build(PotentialKind::square_barrier, {{"height", h}, {"a", a}, {"b", b}});
}
Potential make_power_decay(double c, double alpha) {
    return build(PotentialKind::power_decay, {{"c", c}, {"alpha", alpha}});
}
Potential make_wigner_von_neumann(double c) { return build(PotentialKind::wigner_von_neumann, {{"c", c}}); }
Potential make_oscillatory_decay(double c, double omega, double alpha) {
    return build(PotentialKind::oscillatory_decay, {{"c", c}, {"omega", omega}, {"alpha", alpha}});
}
Potential make_bump(double amplitude, double a, double b) {
    return build(PotentialKind::bump, {{"amplitude", amplitude}, {"a", a}, {"b", b}});
}

Potential make_random_decaying(double g_exponent, int cells, std::uint64_t seed, const std::string& profile) {
    PotentialSpec s;
    s.kind = PotentialKind::random_decaying;
    s.scalars = {{"cells", static_cast<double>(cells)}, {"g_exponent", g_exponent}};
    s.profile = profile;
    s.seed = seed;
    return Potential(std::move(s));
}

Potential make_random_decaying(std::vector<double> g, std::uint64_t seed, const std::string& profile) {
    PotentialSpec s;
    s.kind = PotentialKind::random_decaying;
    s.arrays = {{"g", std::move(g)}};
    s.profile = profile;
    s.seed = seed;
    return Potential(std::move(s));
}

Potential make_sampled(std::vector<double> x, std::vector<double> v, std::vector<double> v_im) {
    std::vector<std::pair<std::string, std::vector<double>>> arr{{"x", std::move(x)}, {"v", std::move(v)}};
    if (!v_im.empty()) arr.emplace_back("v_im", std::move(v_im));
    return build(PotentialKind::sampled, {}, std::move(arr));
}

}  // namespace slowscat
