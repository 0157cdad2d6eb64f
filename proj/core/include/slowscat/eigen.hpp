#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "slowscat/potential.hpp"
#include "slowscat/types.hpp"

namespace slowscat::eigen {

// z with its root zeta = sqrt(z), Im zeta >= 0.
struct SpectralParameter {
    cplx z;
    cplx zeta;
    bool on_real_axis = false;

    static SpectralParameter from_z(cplx z);
    static SpectralParameter from_zeta(cplx zeta);
};

// Root with Im >= 0 on C^+ and R^+; throws on the closed negative axis and below.
cplx sqrt_branch(cplx z);

inline constexpr double default_rho = 0.1;

// xi(x, z) = zeta x - (2 zeta)^{-1} int_0^x V.
cplx phase_xi(const Potential& V, double x, cplx z, double rho = default_rho);
cplx phase_phi(const Potential& V, double x, cplx zeta, double rho = default_rho);

enum class Normalization { wkb, initial_data, boundary_beta };

struct EigenSolution {
    std::vector<double> x;
    std::vector<cplx> u;
    std::vector<cplx> du;
    cplx z;
    Normalization tag = Normalization::initial_data;
    double beta = 0.0;

    std::size_t size() const { return x.size(); }
    // Columns x, Re u, Im u, Re u', Im u'.
    void write_csv(std::ostream& os) const;
};

// Max over interior nodes of |D2 u - (V - z) u| / max(|u|, |u'|) with the
// three-point second difference on the (possibly nonuniform) grid.
double residual(const Potential& V, const EigenSolution& s);

struct SeriesDiagnostics {
    int terms = 0;                  // number of nonzero terms summed (n = 1..terms)
    std::vector<double> term_sup;   // sup_x |S_n| for n = 0..terms+1 (last one omitted)
    double tail = 0.0;              // >= first omitted term
    bool converged = false;
    double truncation = 0.0;        // right end of the integration range
    bool truncated = false;         // support cut at a finite point
    double wkb_defect = 0.0;        // |u - e^{i xi}| at the grid's right end
    double envelope_C = 0.0;        // max_n (|S_n| sqrt(n!))^{1/(n+1)}
    bool envelope_ok = false;       // log-margin to the envelope nondecreasing past its minimum
};

struct SeriesOptions {
    int max_terms = 16;
    double rho = default_rho;
    // Panel length; 0 picks one from |zeta| and Im zeta.
    double panel = 0.0;
    // Right end for real z and unbounded support.
    double x_far = 1.0e4;
};

// Displayed multilinear form (2 zeta)^{-n} int_{x <= t_1 <= ... <= t_n} prod e^{2i(-1)^{n-j} xi(t_j)} V(t_j).
cplx series_Tn(const Potential& V, int n, double x, cplx z, const SeriesOptions& opt = {});

struct SeriesResult {
    EigenSolution solution;
    SeriesDiagnostics diagnostics;
};

// (u, u') from the phase matrix and the alternating sums, on a sorted grid.
SeriesResult solve_series(const Potential& V, const std::vector<double>& grid, cplx z, int N, double tol,
                          const SeriesOptions& opt = {});

enum class Direction { forward, backward };

struct IvpOptions {
    double abs_tol = 1e-13;
    double rel_tol = 1e-13;
    double max_step = 0.0;  // 0 means unlimited
};

// Integrates -u'' + V u = z u. forward starts at grid.front(), backward at grid.back().
EigenSolution solve_ivp(const Potential& V, cplx z, cplx u0, cplx du0, const std::vector<double>& grid,
                        Direction dir, const IvpOptions& opt = {});

struct WronskianReport {
    std::vector<cplx> values;
    cplx mean;
    double max_drift = 0.0;  // max |W_k - W_0| / max(|W_0|, scale)
};

WronskianReport wronskian(const EigenSolution& a, const EigenSolution& b);

enum class Side { right, left };

struct FarFieldOptions {
    double x_far = 1.0e4;
    double damping_depth = 600.0;  // stop at this many e-folds of Im zeta when damped
    double rho = default_rho;
};

// WKB data for the solution ~ e^{i phi} at +inf (right) or e^{-i phi} at -inf (left).
struct FarField {
    double x = 0.0;
    cplx u;
    cplx du;
    bool exact = false;             // potential vanishes beyond x
    cplx phase_correction;          // int_x^inf (zeta - V/(2 zeta) - sqrt(zeta^2 - V))
    bool correction_converged = true;
};

FarField far_field(const Potential& V, cplx zeta, Side side, const FarFieldOptions& opt = {});

// WKB-normalized solution on the grid, integrated inward from the far field.
EigenSolution jost_solution(const Potential& V, cplx zeta, const std::vector<double>& grid, Side side = Side::right,
                            const FarFieldOptions& ff = {}, const IvpOptions& ivp = {});

struct WeylOptions {
    std::optional<double> beta;
    FarFieldOptions far;
    IvpOptions ivp;
    double pole_tol = 1e-12;
};

// m(z) = u'(0)/u(0) for the solution decaying at +inf; with beta the Moebius image
// m_beta = (m cos b - sin b)/(cos b + m sin b). Throws NumericalError at a pole.
cplx weyl_m(const Potential& V, cplx z, const WeylOptions& opt = {});
cplx moebius_beta(cplx m, double beta);

struct LimitOptions {
    double eps0 = 0.1;
    int K = 12;
    int max_order = 5;
};

struct LimitResult {
    cplx value;
    double error = 0.0;
    bool stable = false;
    bool has_value = false;
    std::vector<cplx> samples;  // F(E + i eps_k)
};

// F(E + i0) by Richardson extrapolation in eps over eps_k = eps0 2^{-k}.
LimitResult boundary_limit(const std::function<cplx(cplx)>& F, double E, const LimitOptions& opt = {});

}  // namespace slowscat::eigen
