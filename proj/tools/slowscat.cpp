#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slowscat/dirac.hpp"
#include "slowscat/eigen.hpp"
#include "slowscat/multilinear.hpp"
#include "slowscat/potential.hpp"
#include "slowscat/spectral.hpp"
#include "slowscat/waveop.hpp"

using namespace slowscat;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_unstable = 3;

struct Common {
    std::string spec_path;
    std::string out = "-";
    std::string format = "csv";
    double tol = 1e-10;
    bool strict = false;
    std::uint64_t seed = 0;
};

// A numeric table with named columns plus run metadata.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    json extra = json::object();
    std::vector<std::string> flags;
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json json_number(double v) {
    if (std::isfinite(v)) return v;
    return number(v);
}

std::string render(const Table& t, const json& config, const Common& c) {
    const std::string hash = hex(fnv1a(config.dump()));
    std::ostringstream os;
    if (c.format == "json") {
        json j;
        j["config"] = config;
        j["config_hash"] = hash;
        j["tol"] = c.tol;
        j["flags"] = t.flags;
        j["columns"] = t.columns;
        json rows = json::array();
        for (const auto& r : t.rows) {
            json row = json::array();
            for (double v : r) row.push_back(json_number(v));
            rows.push_back(row);
        }
        j["rows"] = rows;
        if (!t.extra.empty()) j["extra"] = t.extra;
        os << j.dump(2) << '\n';
        return os.str();
    }
    os << "# config_hash=" << hash << " tol=" << number(c.tol);
    for (const auto& f : t.flags) os << " flag=" << f;
    os << '\n';
    for (const auto& [k, v] : t.extra.items()) {
        if (v.is_primitive()) os << "# " << k << '=' << (v.is_number_float() ? number(v.get<double>()) : v.dump()) << '\n';
    }
    for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << number(r[k]);
        os << '\n';
    }
    return os.str();
}

void write_atomic(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DomainError("cannot open " + tmp.string() + " for writing");
        f << text;
        f.flush();
        if (!f) throw DomainError("write to " + tmp.string() + " failed");
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DomainError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Potential load(const Common& c) {
    if (c.spec_path.empty()) throw DomainError("--spec is required");
    auto spec = PotentialSpec::parse(read_file(c.spec_path));
    if (!spec.seed && spec.kind == PotentialKind::random_decaying) spec.seed = c.seed;
    PotentialOptions opt;
    opt.tol = c.tol;
    return Potential(std::move(spec), opt);
}

json base_config(const std::string& sub, const Common& c, const Potential* V) {
    json j;
    j["subcommand"] = sub;
    j["tol"] = c.tol;
    j["strict"] = c.strict;
    j["seed"] = c.seed;
    if (V) j["potential"] = json::parse(V->spec().serialize());
    return j;
}

std::vector<double> grid_or_list(const std::vector<double>& list, double lo, double hi, int n) {
    if (!list.empty()) return list;
    if (n < 1) throw DomainError("grid needs at least one point");
    if (n == 1) return {lo};
    return spectral::uniform_grid(lo, hi, n);
}

// Single sub-command body: fills the table and the config; returns nothing.
using Body = std::function<void(Table&, json&)>;

int execute(const std::string& sub, const Common& c, const Body& body) {
    Table t;
    json config;
    body(t, config);
    write_atomic(c.out, render(t, config, c));
    if (c.strict && !t.flags.empty()) {
        std::cerr << sub << ": instability flags present:";
        for (const auto& f : t.flags) std::cerr << ' ' << f;
        std::cerr << '\n';
        return exit_unstable;
    }
    return exit_ok;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--spec", c.spec_path, "Potential spec (JSON)");
    app->add_option("--out", c.out, "Output path, - for stdout");
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--tol", c.tol, "Numerical tolerance")->check(CLI::PositiveNumber);
    app->add_flag("--strict", c.strict, "Exit 3 when instability flags are raised");
    app->add_option("--seed", c.seed, "Seed for random potentials without one");
}

std::vector<double> parse_schedule(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() == 3 && parts[0] == "geometric") {
        return waveop::geometric_schedule(std::stod(parts[1]), std::stoi(parts[2]));
    }
    if (parts.size() >= 2 && parts[0] == "list") {
        std::vector<double> t;
        for (std::size_t k = 1; k < parts.size(); ++k) t.push_back(std::stod(parts[k]));
        return t;
    }
    throw DomainError("schedule must be geometric:T0:count or list:t1:t2:...");
}

std::uint64_t parse_corpus_seed(const std::string& s) {
    if (s.rfind("seed:", 0) != 0) throw DomainError("corpus must be seed:INT");
    return std::stoull(s.substr(5));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slowscat: one-dimensional scattering experiments"};
    app.require_subcommand(1);
    Common c;
    std::string sub;
    Body body;

    // eigen
    auto* eig = app.add_subcommand("eigen", "WKB-normalized solution on a grid");
    add_common(eig, c);
    std::vector<double> z_in{1.0, 0.0};
    double x_lo = 0.0, x_hi = 10.0;
    int nx = 101;
    std::string side = "right";
    eig->add_option("--z", z_in, "Spectral parameter z as RE IM")->expected(2);
    eig->add_option("--x-min", x_lo);
    eig->add_option("--x-max", x_hi);
    eig->add_option("--nx", nx);
    eig->add_option("--side", side)->check(CLI::IsMember({"right", "left"}));
    eig->callback([&] {
        sub = "eigen";
        body = [&](Table& t, json& cfg) {
            const auto V = load(c);
            cfg = base_config(sub, c, &V);
            cfg["z"] = z_in;
            cfg["grid"] = {x_lo, x_hi, nx};
            cfg["side"] = side;
            const cplx z(z_in[0], z_in[1]);
            const auto zeta = eigen::sqrt_branch(z);
            eigen::IvpOptions ivp;
            ivp.abs_tol = ivp.rel_tol = std::min(1e-10, c.tol);
            const auto s = eigen::jost_solution(V, zeta, spectral::uniform_grid(x_lo, x_hi, nx),
                                                side == "right" ? eigen::Side::right : eigen::Side::left, {}, ivp);
            t.columns = {"x", "re_u", "im_u", "re_du", "im_du"};
            for (std::size_t k = 0; k < s.size(); ++k) {
                t.rows.push_back({s.x[k], s.u[k].real(), s.u[k].imag(), s.du[k].real(), s.du[k].imag()});
            }
            const auto ff = eigen::far_field(V, zeta, side == "right" ? eigen::Side::right : eigen::Side::left);
            if (!ff.correction_converged) t.flags.push_back("far_field_correction");
        };
    });

    // mfun
    auto* mf = app.add_subcommand("mfun", "Boundary values m(E + i0)");
    add_common(mf, c);
    std::vector<double> energies;
    double e_lo = 0.5, e_hi = 4.0;
    int ne = 8;
    double beta = std::numeric_limits<double>::quiet_NaN();
    mf->add_option("--energies", energies, "Explicit energy list");
    mf->add_option("--e-min", e_lo);
    mf->add_option("--e-max", e_hi);
    mf->add_option("--ne", ne);
    mf->add_option("--beta", beta, "Boundary-condition angle");
    mf->callback([&] {
        sub = "mfun";
        body = [&](Table& t, json& cfg) {
            const auto V = load(c);
            cfg = base_config(sub, c, &V);
            const auto E = grid_or_list(energies, e_lo, e_hi, ne);
            cfg["energies"] = E;
            if (!std::isnan(beta)) cfg["beta"] = beta;
            eigen::WeylOptions w;
            if (!std::isnan(beta)) w.beta = beta;
            t.columns = {"E", "re_m", "im_m", "error", "stable"};
            bool unstable = false;
            for (double e : E) {
                const auto F = [&](cplx z) { return eigen::weyl_m(V, z, w); };
                const auto r = eigen::boundary_limit(F, e);
                t.rows.push_back({e, r.value.real(), r.value.imag(), r.error, r.stable ? 1.0 : 0.0});
                unstable = unstable || !r.stable;
            }
            if (unstable) t.flags.push_back("unstable_limit");
        };
    });

    // spectral-table
    auto* st = app.add_subcommand("spectral-table", "m, density and gamma on a lambda grid");
    add_common(st, c);
    std::vector<double> lambdas;
    double l_lo = 0.5, l_hi = 3.0;
    int nl = 11;
    st->add_option("--lambda", lambdas, "Explicit lambda list");
    st->add_option("--lambda-min", l_lo);
    st->add_option("--lambda-max", l_hi);
    st->add_option("--nlambda", nl);
    st->callback([&] {
        sub = "spectral-table";
        body = [&](Table& t, json& cfg) {
            const auto V = load(c);
            cfg = base_config(sub, c, &V);
            const auto lam = grid_or_list(lambdas, l_lo, l_hi, nl);
            cfg["lambda"] = lam;
            const auto tab = spectral::build_spectral_table(V, lam);
            t.columns = {"lambda", "re_m", "im_m", "density", "re_gamma", "im_gamma", "omega", "stable"};
            bool unstable = false;
            for (const auto& r : tab.rows) {
                t.rows.push_back({r.lambda, r.m.real(), r.m.imag(), r.density, r.gamma.real(), r.gamma.imag(),
                                  r.omega, r.stable ? 1.0 : 0.0});
                unstable = unstable || !r.stable || r.resonant;
            }
            if (unstable) t.flags.push_back("unstable_rows");
        };
    });

    // scatter
    auto* sc = app.add_subcommand("scatter", "Scattering data at given lambda");
    add_common(sc, c);
    std::vector<double> sc_lambda;
    std::string geometry = "whole";
    sc->add_option("--lambda", sc_lambda, "lambda values")->required();
    sc->add_option("--geometry", geometry)->check(CLI::IsMember({"half", "whole"}));
    sc->callback([&] {
        sub = "scatter";
        body = [&](Table& t, json& cfg) {
            const auto V = load(c);
            cfg = base_config(sub, c, &V);
            cfg["lambda"] = sc_lambda;
            cfg["geometry"] = geometry;
            bool unstable = false;
            if (geometry == "whole") {
                t.columns = {"lambda", "re_t1", "im_t1", "re_r1", "im_r1", "re_t2", "im_t2", "re_r2", "im_r2",
                             "unitarity_defect"};
                for (double l : sc_lambda) {
                    const auto s = waveop::scattering_wholeline(V, l);
                    t.rows.push_back({l, s.t1.real(), s.t1.imag(), s.r1.real(), s.r1.imag(), s.t2.real(),
                                      s.t2.imag(), s.r2.real(), s.r2.imag(), s.unitarity_defect});
                    unstable = unstable || s.unstable;
                }
            } else {
                t.columns = {"lambda", "re_s", "im_s", "omega", "resonant"};
                for (double l : sc_lambda) {
                    const auto s = waveop::scattering_halfline(V, l);
                    t.rows.push_back({l, s.multiplier.real(), s.multiplier.imag(), s.omega, s.resonant ? 1.0 : 0.0});
                    unstable = unstable || s.resonant;
                }
            }
            if (unstable) t.flags.push_back("unstable_scattering");
        };
    });

    // evolve
    auto* ev = app.add_subcommand("evolve", "Half-line evolution of a Gaussian packet");
    add_common(ev, c);
    double ev_t = 1.0, ev_x0 = 15.0, ev_sigma = 3.0, ev_k0 = 2.0, ev_L = 70.0, ev_lmax = 5.0;
    int ev_nx = 1401, ev_nl = 246;
    ev->add_option("--t", ev_t);
    ev->add_option("--x0", ev_x0);
    ev->add_option("--sigma", ev_sigma);
    ev->add_option("--k0", ev_k0);
    ev->add_option("--L", ev_L, "Grid [0, L]");
    ev->add_option("--nx", ev_nx);
    ev->add_option("--lambda-max", ev_lmax);
    ev->add_option("--nlambda", ev_nl);
    ev->callback([&] {
        sub = "evolve";
        body = [&](Table& t, json& cfg) {
            const auto V = load(c);
            cfg = base_config(sub, c, &V);
            cfg["t"] = ev_t;
            cfg["packet"] = {ev_x0, ev_sigma, ev_k0};
            cfg["grid"] = {ev_L, ev_nx, ev_lmax, ev_nl};
            const auto x = spectral::uniform_grid(0.0, ev_L, ev_nx);
            const spectral::SpectralBasis B(V, x, spectral::uniform_grid(eigen::default_rho, ev_lmax, ev_nl));
            std::vector<cplx> g(x.size());
            for (std::size_t k = 0; k < x.size(); ++k) {
                const auto gs = [&](double y) {
                    const double d = y - ev_x0;
                    return std::exp(-d * d / (2.0 * ev_sigma * ev_sigma) + I * ev_k0 * d);
                };
                g[k] = gs(x[k]) - gs(-x[k]);
            }
            const auto p = spectral::packet_from_values(B, g);
            const auto e = spectral::evolve_V(B, p, ev_t);
            t.columns = {"x", "re", "im"};
            for (std::size_t k = 0; k < x.size(); ++k) t.rows.push_back({x[k], e.values[k].real(), e.values[k].imag()});
            t.extra["norm_defect"] = e.norm_defect;
            t.extra["roundtrip_defect"] = p.roundtrip_defect;
            if (e.beyond_horizon) t.flags.push_back("beyond_horizon");
            if (p.leakage_flag) t.flags.push_back("leakage");
        };
    });

    // waveop
    auto* wo = app.add_subcommand("waveop", "Wave-operator convergence experiment");
    add_common(wo, c);
    std::vector<double> band{0.8, 1.2};
    std::string schedule = "geometric:12.5:9";
    bool unmodified = false;
    double wo_L = 900.0, wo_dx = 0.1, wo_dl = 0.003, wo_x0 = 0.0, wo_pad = 0.2;
    wo->add_option("--band", band, "lambda band A B")->expected(2);
    wo->add_option("--schedule", schedule, "geometric:T0:count or list:t1:t2:...");
    wo->add_flag("--unmodified", unmodified, "Drop the phase correction");
    wo->add_option("--L", wo_L, "Half-line grid [0, L]");
    wo->add_option("--dx", wo_dx);
    wo->add_option("--dlambda", wo_dl);
    wo->add_option("--x0", wo_x0, "Packet translation");
    wo->add_option("--pad", wo_pad, "lambda grid padding around the band");
    wo->callback([&] {
        sub = "waveop";
        body = [&](Table& t, json& cfg) {
            const auto V = load(c);
            cfg = base_config(sub, c, &V);
            if (!(band[0] > 0.0 && band[1] > band[0])) throw DomainError("--band needs 0 < A < B");
            const auto sched = parse_schedule(schedule);
            cfg["band"] = band;
            cfg["schedule"] = sched;
            cfg["modified"] = !unmodified;
            cfg["grid"] = {wo_L, wo_dx, wo_dl, wo_pad};
            cfg["x0"] = wo_x0;
            const double l0 = std::max(eigen::default_rho, band[0] - wo_pad), l1 = band[1] + wo_pad;
            const int nlam = static_cast<int>(std::lround((l1 - l0) / wo_dl)) + 1;
            const auto lam = spectral::uniform_grid(l0, l1, nlam);
            const auto x = spectral::uniform_grid(0.0, wo_L, static_cast<int>(std::lround(wo_L / wo_dx)) + 1);
            spectral::PsiOptions po;
            po.second_formula = false;
            const spectral::SpectralBasis B(V, x, lam, po);
            const auto f = spectral::band_coefficients(lam, band[0], band[1], wo_x0);
            waveop::ExperimentOptions eo;
            eo.modified = !unmodified;
            const auto r = waveop::waveop_experiment(V, B, f, sched, eo);
            t.columns = {"t", "cauchy_increment", "dist_to_limit", "norm_defect"};
            for (const auto& row : r.rows) t.rows.push_back({row.t, row.cauchy_increment, row.dist_to_limit, row.norm_defect});
            json contracts = json::array();
            for (double T : sched) {
                if (4.0 * T > sched.back() * (1.0 + 1e-12)) continue;
                const auto k = waveop::check_contract(r, T);
                contracts.push_back({{"T", T}, {"early", k.early}, {"late", k.late}, {"pass", k.pass}});
            }
            t.extra["contracts"] = contracts;
            t.extra["distance_decreasing"] = waveop::distance_decreasing(r);
            t.extra["admissible"] = r.admissible;
            if (!r.admissible) t.flags.push_back("inadmissible_unmodified");
            if (r.beyond_horizon) t.flags.push_back("beyond_horizon");
            if (r.unstable_band) t.flags.push_back("unstable_band");
        };
    });

    // dirac
    auto* di = app.add_subcommand("dirac", "Dirac system: design, scatter or evolve");
    add_common(di, c);
    std::string task = "scatter";
    std::vector<double> di_E{1.0};
    double di_A = 1.0, di_X = 200.0, di_phase = 0.0, di_t = 1.0, di_L = 40.0, di_emax = 8.0;
    int di_nx = 1601, di_ne = 534;
    di->add_option("--task", task)->check(CLI::IsMember({"design", "scatter", "evolve"}));
    di->add_option("--energy", di_E, "Energies (design uses the first)");
    di->add_option("--amplitude", di_A, "Design amplitude A in |V| <= A/(1+x)");
    di->add_option("--X", di_X, "Design range [0, X]");
    di->add_option("--phase", di_phase, "q = e^{i phase} profile");
    di->add_option("--t", di_t);
    di->add_option("--L", di_L, "Evolution grid [-L, L]");
    di->add_option("--nx", di_nx);
    di->add_option("--e-max", di_emax);
    di->add_option("--ne", di_ne);
    di->callback([&] {
        sub = "dirac";
        body = [&](Table& t, json& cfg) {
            cfg = base_config(sub, c, nullptr);
            cfg["task"] = task;
            if (task == "design") {
                cfg["energy"] = di_E.front();
                cfg["amplitude"] = di_A;
                cfg["X"] = di_X;
                dirac::DesignOptions o;
                o.X = di_X;
                const auto d = dirac::design_embedded(di_E.front(), di_A, o);
                t.columns = {"x", "R", "theta1", "re_V", "im_V"};
                for (std::size_t k = 0; k < d.state.x.size(); k += 10) {
                    t.rows.push_back({d.state.x[k], d.state.R[k], d.state.theta1[k], d.V[k].real(), d.V[k].imag()});
                }
                t.extra = {{"decay_exponent", d.decay_exponent}, {"tail_ratio", d.tail_ratio},
                           {"l2_integral", d.l2_integral},       {"l2_convergent", d.l2_convergent},
                           {"bound_ratio", d.bound_ratio},       {"verification_gap", d.verification_gap},
                           {"phase_slip", d.phase_slip}};
                if (d.lock_lost) t.flags.push_back("lock_lost");
                return;
            }
            const auto V = load(c);
            cfg["potential"] = json::parse(V.spec().serialize());
            cfg["phase"] = di_phase;
            const auto q = dirac::Coupling::from_q(V, std::exp(I * di_phase));
            if (task == "scatter") {
                cfg["energy"] = di_E;
                t.columns = {"E", "re_t1", "im_t1", "re_r1", "im_r1", "re_t2", "im_t2", "re_r2", "im_r2",
                             "unitarity_defect"};
                bool unstable = false, truncated = false;
                for (double e : di_E) {
                    const auto s = dirac::dirac_scattering(q, e);
                    t.rows.push_back({e, s.t1.real(), s.t1.imag(), s.r1.real(), s.r1.imag(), s.t2.real(),
                                      s.t2.imag(), s.r2.real(), s.r2.imag(), s.unitarity_defect});
                    unstable = unstable || s.unstable;
                    truncated = truncated || s.truncated;
                }
                if (unstable) t.flags.push_back("unstable_scattering");
                if (truncated) t.flags.push_back("truncated_far_field");
                return;
            }
            cfg["t"] = di_t;
            cfg["grid"] = {di_L, di_nx, di_emax, di_ne};
            const auto x = spectral::uniform_grid(-di_L, di_L, di_nx);
            const dirac::DiracBasis B(q, x, spectral::uniform_grid(-di_emax, di_emax, di_ne));
            std::vector<dirac::Spinor> g(x.size());
            for (std::size_t k = 0; k < x.size(); ++k) {
                const cplx a = std::exp(-(x[k] + 8.0) * (x[k] + 8.0) / 8.0 + 2.0 * I * x[k]);
                g[k] = {a, I * a};
            }
            const auto e = dirac::dirac_evolve(B, g, di_t);
            t.columns = {"x", "re_1", "im_1", "re_2", "im_2"};
            for (std::size_t k = 0; k < x.size(); ++k) {
                const auto& v = e.values[k];
                t.rows.push_back({x[k], v[0].real(), v[0].imag(), v[1].real(), v[1].imag()});
            }
            t.extra["norm_defect"] = e.norm_defect;
            if (e.beyond_horizon) t.flags.push_back("beyond_horizon");
        };
    });

    // multilinear-check
    auto* ml = app.add_subcommand("multilinear-check", "Calibrate C and check the bound on held-out samples");
    add_common(ml, c);
    int ml_n = 3, ml_count = 50, ml_depth = 14;
    std::string corpus = "seed:7";
    double ml_delta = 0.05, ml_delta_prime = 0.1, ml_margin = ml::calibration_margin;
    ml->add_option("--n", ml_n, "Number of factors (2..5)")->check(CLI::Range(2, 5));
    ml->add_option("--corpus", corpus, "seed:INT; held-out samples use INT+1");
    ml->add_option("--count", ml_count);
    ml->add_option("--delta", ml_delta);
    ml->add_option("--delta-prime", ml_delta_prime);
    ml->add_option("--margin", ml_margin);
    ml->add_option("--depth", ml_depth);
    ml->callback([&] {
        sub = "multilinear-check";
        if (c.format == "csv" && !ml->count("--format")) c.format = "json";
        body = [&](Table& t, json& cfg) {
            cfg = base_config(sub, c, nullptr);
            const auto seed = parse_corpus_seed(corpus);
            cfg["n"] = ml_n;
            cfg["corpus"] = corpus;
            cfg["count"] = ml_count;
            cfg["delta"] = ml_delta;
            cfg["delta_prime"] = ml_delta_prime;
            cfg["margin"] = ml_margin;
            cfg["depth"] = ml_depth;
            // Corpus samples with exactly n factors.
            const auto fixed_n = [&](std::uint64_t s) {
                auto all = ml::random_step_corpus(s, ml_count * (ml_n - 1), ml_n);
                ml::Corpus out;
                out.id = all.id;
                for (auto& fs : all.samples) {
                    if (static_cast<int>(fs.size()) == ml_n && static_cast<int>(out.samples.size()) < ml_count) {
                        out.samples.push_back(std::move(fs));
                    }
                }
                return out;
            };
            ml::BoundOptions bo;
            bo.depth = ml_depth;
            const auto cal = ml::calibrate_constant(fixed_n(seed), ml_delta, ml_delta_prime, ml_margin, bo);
            const auto held = fixed_n(seed + 1);
            t.columns = {"sample", "lhs", "rhs", "margin", "lhs_star", "rhs_star", "margin_star", "holds",
                         "holds_star"};
            bool all = true;
            for (std::size_t k = 0; k < held.samples.size(); ++k) {
                const auto r = ml::check_numerical_bound(held.samples[k], ml_delta, ml_delta_prime, cal.C, bo);
                t.rows.push_back({static_cast<double>(k), r.lhs, r.rhs, r.margin, r.lhs_star, r.rhs_star,
                                  r.margin_star, r.holds ? 1.0 : 0.0, r.holds_star ? 1.0 : 0.0});
                all = all && r.holds && r.holds_star;
            }
            t.extra = {{"C", cal.C}, {"required", cal.required}, {"calibration_corpus", cal.corpus_id},
                       {"holdout_corpus", held.id}, {"holds", all}};
            if (!all) t.flags.push_back("bound_violated");
        };
    });

    // norms
    auto* nm = app.add_subcommand("norms", "L^p, amalgam and improper-integral diagnostics");
    add_common(nm, c);
    double nm_p = 1.8, nm_a = 0.0, nm_b = 10.0, nm_N = 1e4;
    bool nm_whole = false;
    nm->add_option("--p", nm_p)->check(CLI::Range(1.0, 1e6));
    nm->add_option("--a", nm_a);
    nm->add_option("--b", nm_b);
    nm->add_option("--N", nm_N, "Cut-off for the improper integral");
    nm->add_flag("--whole-line", nm_whole);
    nm->callback([&] {
        sub = "norms";
        body = [&](Table& t, json& cfg) {
            const auto V = load(c);
            cfg = base_config(sub, c, &V);
            cfg["p"] = nm_p;
            cfg["range"] = {nm_a, nm_b};
            cfg["N"] = nm_N;
            cfg["whole_line"] = nm_whole;
            const auto lp = V.norm_lp(nm_p, nm_a, nm_b);
            const auto am = V.norm_amalgam(nm_p, nm_whole);
            const auto tail = V.improper_tail(nm_N);
            t.columns = {"quantity", "value", "finite", "error"};
            t.rows.push_back({0.0, lp.value, lp.finite ? 1.0 : 0.0, lp.error});
            t.rows.push_back({1.0, am.value, am.finite ? 1.0 : 0.0, am.error});
            t.rows.push_back({2.0, tail.value, tail.convergent ? 1.0 : 0.0, tail.oscillation});
            t.extra["quantities"] = {"lp_on_range", "amalgam", "improper_tail"};
            if (!am.finite) t.flags.push_back("amalgam_infinite");
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        return execute(sub, c, body);
    } catch (const NumericalError& e) {
        std::cerr << sub << ": " << e.what() << '\n';
        return exit_unstable;
    } catch (const std::exception& e) {
        std::cerr << sub << ": " << e.what() << '\n';
        return exit_validation;
    }
}
