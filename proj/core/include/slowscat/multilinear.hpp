#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slowscat/potential.hpp"
#include "slowscat/types.hpp"

namespace slowscat::ml {

// A complex function with bounded support [lo, hi] and known break points.
// A primitive, when supplied, is used for exact cell integrals.
struct Function1D {
    std::function<cplx(double)> f;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> breaks;
    std::function<cplx(double)> primitive;

    cplx operator()(double x) const { return (x < lo || x > hi) ? cplx{} : f(x); }

    static Function1D step(std::vector<double> edges, std::vector<cplx> values);
    static Function1D zero(double lo, double hi);
    // x -> f(-x).
    Function1D reflected() const;
};

// Dyadic family E^m_j, stored through its finest level: level m breakpoints are
// every 2^{M-m}-th finest breakpoint, so refinement holds by construction.
class MartingaleStructure {
public:
    MartingaleStructure() = default;
    MartingaleStructure(std::vector<double> finest, int depth);
    static MartingaleStructure uniform(double a, double b, int depth);

    int depth() const { return depth_; }
    double left() const { return finest_.front(); }
    double right() const { return finest_.back(); }
    // x^m_0 <= ... <= x^m_{2^m}.
    std::vector<double> level(int m) const;
    // E^m_j with j = 1..2^m.
    std::pair<double, double> cell(int m, std::size_t j) const;
    const std::vector<double>& finest() const { return finest_; }
    // Partition and refinement invariants checked level by level.
    bool valid() const;

private:
    std::vector<double> finest_;
    int depth_ = 0;
};

enum class AdaptMode { lp, amalgam };

struct AdaptOptions {
    // Cumulative table resolution is 2^{depth + table_extra} cells.
    int table_extra = 4;
};

MartingaleStructure build_adapted(const Function1D& f, double p, int depth, AdaptMode mode,
                                  const AdaptOptions& opt = {});

// int_a^b |f|^p.
double lp_mass(const Function1D& f, double p, double a, double b);
// sum over unit cells n of (int_{[n,n+1] cap [a,b]} |f|)^p.
double amalgam_mass(const Function1D& f, double p, double a, double b);

// Iterated integral over x_1 <= ... <= x_n of prod f_i(x_i).
cplx m_n_bruteforce(std::span<const Function1D> fs, double tol = 1e-8);

struct StarResult {
    double value = 0.0;
    double argmax = 0.0;
};
// sup_y |int_{x_1 <= ... <= x_n <= y} prod f_i(x_i)|.
StarResult m_n_star_bruteforce(std::span<const Function1D> fs, double tol = 1e-6);

inline constexpr int max_bruteforce_n = 6;

struct GDeltaResult {
    double value = 0.0;
    // Contribution of level M, reported as the truncation indicator.
    double last_level = 0.0;
    int depth = 0;
};

GDeltaResult g_delta(const Function1D& f, const MartingaleStructure& ms, double delta);
// Family variant: sup_k inside the l^2 sum.
GDeltaResult g_delta(std::span<const Function1D> fs, const MartingaleStructure& ms, double delta);

enum class GWeight { linear, dyadic };

struct GPhaseResult {
    double value = 0.0;
    double last_level = 0.0;
    std::vector<double> level_terms;  // G_m for m = 1..M
    bool converged = true;
};

struct CellIntegrals {
    std::vector<cplx> minus;  // s^{m,-}_j
    std::vector<cplx> plus;   // s^{m,+}_j
};

// Cell integrals s^{m,-}_j and s^{m,+}_j, indexed by level m = 0..M.
std::vector<CellIntegrals> phase_cell_integrals(const Potential& V, const MartingaleStructure& ms,
                                                const std::function<cplx(double)>& phi,
                                                bool* converged = nullptr);

// G = sum_m w_m G_m with w_m = m (linear) or 2^{delta m} (dyadic). The "+" term
// of the last cell on each level is omitted.
GPhaseResult g_phase(const Potential& V, const MartingaleStructure& ms, GWeight weight, double delta,
                     const std::function<cplx(double)>& phi);

struct BoundReport {
    int n = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // lhs / rhs, holds when <= 1
    double lhs_star = 0.0;
    double rhs_star = 0.0;
    double margin_star = 0.0;
    double C = 0.0;
    double delta = 0.0;
    double delta_prime = 0.0;
    double g_first = 0.0;       // g_{-delta}(f_1)
    double g_rest = 0.0;        // g_delta({f_k : k >= 2})
    double g_rest_prime = 0.0;  // g_delta'({f_k : k >= 2})
    std::string corpus_id;
    bool holds = true;
    bool holds_star = true;

    std::string to_json() const;
};

struct BoundOptions {
    int depth = 14;
};

BoundReport check_numerical_bound(std::span<const Function1D> fs, double delta, double delta_prime, double C,
                                  const BoundOptions& opt = {});

// Smallest C for which one report's inequalities would hold.
double required_constant(const BoundReport& r);

// Random complex step functions on [0,1]; sample k has n_k = 2 + (k mod (n_max-1)) factors.
struct Corpus {
    std::string id;
    std::vector<std::vector<Function1D>> samples;
};
Corpus random_step_corpus(std::uint64_t seed, int count, int n_max, int cells = 8);

inline constexpr double calibration_margin = 1.25;

struct Calibration {
    double C = 0.0;
    double required = 0.0;  // max required_constant over the corpus
    std::string corpus_id;
    std::vector<BoundReport> reports;
};

// C = margin * max over the corpus of the smallest constant making each report hold.
Calibration calibrate_constant(const Corpus& corpus, double delta, double delta_prime,
                               double margin = calibration_margin, const BoundOptions& opt = {});

struct BnTable {
    double C = 0.0;
    std::vector<double> b;  // b[n] = C^{n+1}/sqrt(n!)
    static BnTable make(double C, int n_max);
};

struct BnCheck {
    bool ok = true;
    int n = 0;
    double x = 0.0;
    double y = 0.0;
    double worst_ratio = 0.0;  // max over points of lhs / rhs
};

BnCheck calibrate_bn(double C, int n_max, int grid_size);
// Largest C passing calibrate_bn, by bisection.
double max_admissible_bn_constant(int n_max, int grid_size, double tol = 1e-10);

}  // namespace slowscat::ml
