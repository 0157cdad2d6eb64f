#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "slowscat/eigen.hpp"
#include "slowscat/potential.hpp"
#include "slowscat/spectral.hpp"
#include "slowscat/types.hpp"

namespace slowscat::waveop {

enum class Geometry { half, whole };

// half:  W(lambda, t)   = -(2 lambda)^{-1} Q(2 lambda t)
// whole: W_a(lambda, t) = lambda^2 t + (2 lambda)^{-1} Q(2 lambda t), lambda of either sign
// with Q(x) = int_0^x V. At lambda = 0 the limits -t V(0) and t V(0) are used.
double w_phase(const Potential& V, double lambda, double t, Geometry variant = Geometry::half);

struct PhaseCorrection {
    std::vector<double> lambda;
    double t = 0.0;
    Geometry variant = Geometry::half;
    std::vector<double> values;
};

PhaseCorrection phase_correction(const Potential& V, const std::vector<double>& lambda, double t,
                                 Geometry variant = Geometry::half);

// Which modified wave operator a free evolution feeds: minus is the limit t -> +inf,
// plus the limit t -> -inf.
enum class Limit { minus, plus };

// Phase p(lambda, t) of the half-line multiplier e^{i p}. All sign conventions live here:
//   minus: p = -lambda^2 t + W(lambda, t)
//   plus:  p = -lambda^2 t - W(lambda, -t)
double modified_phase(const Potential& V, double lambda, double t, Limit which);

// Free evolution on a uniform grid through the discrete Fourier transform.
// whole: periodic grid, the packet must vanish near both ends.
// half:  grid x_k = k dx starting at 0, Dirichlet at 0, packet vanishing at the far end.
std::vector<cplx> evolve_free(const std::vector<cplx>& g, double dx, double t, Geometry geometry);

// Modified free evolution. half: multiplier e^{i modified_phase(|k|, t, which)} in the sine
// representation. whole: multiplier e^{-i W_a(k, t)}.
std::vector<cplx> evolve_modified_free(const Potential& V, const std::vector<cplx>& g, double dx, double t,
                                       Geometry geometry, Limit which = Limit::minus);

struct ExperimentRow {
    double t = 0.0;
    double cauchy_increment = 0.0;  // ||Psi(t_k) - Psi(t_{k-1})||, NaN on the first row
    double dist_to_limit = 0.0;
    double norm_defect = 0.0;
};

struct ExperimentReport {
    bool modified = true;
    bool admissible = true;
    bool beyond_horizon = false;
    bool unstable_band = false;
    TailReport tail;
    double limit_norm = 0.0;
    std::vector<ExperimentRow> rows;
    // Columns t, cauchy_increment, dist_to_limit, norm_defect.
    void write_csv(std::ostream& os) const;
};

struct ExperimentOptions {
    bool modified = true;
    // Cut-off for the improper-integral gate of the unmodified experiment.
    double tail_N = 1.0e4;
};

// Psi(t) = e^{i t H_V} e^{-i t H_0 + i W(H_0, t)} f on the schedule (t -> +inf), with f given by
// its sine-transform coefficients on B's lambda grid. Distances are taken in the psi
// representation, where the predicted limit has coefficients f~ (modified) or
// e^{i Q(inf)/(2 lambda)} f~ (unmodified, plane-wave normalized eigenfunctions).
ExperimentReport waveop_experiment(const Potential& V, const spectral::SpectralBasis& B,
                                   const std::vector<cplx>& f_coeffs, const std::vector<double>& schedule,
                                   const ExperimentOptions& opt = {});

// t_k = T0 2^{k/2}, k = 0..count-1.
std::vector<double> geometric_schedule(double T0, int count);

struct CauchyContract {
    double T = 0.0;
    double early = 0.0;  // max increment with both ends in [T, 2T]
    double late = 0.0;   // max increment with both ends in [2T, 4T]
    bool pass = false;
};

inline constexpr double contract_ratio = 0.6;
// Increments below this multiple of ||f|| count as converged to working precision.
inline constexpr double contract_floor = 1e-9;

CauchyContract check_contract(const ExperimentReport& r, double T);
bool distance_decreasing(const ExperimentReport& r);

struct HalfLineS {
    cplx multiplier;      // conj(gamma) / gamma
    double omega = 0.0;   // its argument
    double moller = 0.0;  // 2 arg gamma
    bool resonant = false;
};

HalfLineS scattering_halfline(const Potential& V, double lambda, const spectral::GammaOptions& opt = {});

// Multiplier from any real-axis solution proportional to the WKB one. The normalization
// constant is read off against the WKB solution at the last grid node.
cplx s_multiplier(const Potential& V, const eigen::EigenSolution& u, const spectral::GammaOptions& opt = {});

struct ScatteringMatrixWL {
    double lambda = 0.0;
    cplx t1, r1, t2, r2;
    double unitarity_defect = 0.0;  // max_i | |r_i|^2 + |t_i|^2 - 1 |
    double t_defect = 0.0;          // |t1 - t2|
    double r_defect = 0.0;          // |r2 + (t1 / conj t1) conj r1|
    bool unstable = false;          // |t1| too small for the extraction
};

struct WholeLineOptions {
    eigen::FarFieldOptions far;
    eigen::IvpOptions ivp;
    // Wronskian pairings for (t1, r1) and (t2, r2) are taken at these two points.
    double pair_left = 0.0;
    double pair_right = 1.0;
    double t_floor = 1e-8;
};

ScatteringMatrixWL scattering_wholeline(const Potential& V, double lambda, const WholeLineOptions& opt = {});

// Scattered waves psi_+ = t1 f_+ and psi_- = t2 f_- on a whole-line grid with the transforms
//   g~_pm(lambda) = int conj psi_pm g dx,  g(x) = (2 pi)^{-1} int (psi_+ g~_+ + psi_- g~_-) dlambda.
class WholeLineBasis {
public:
    WholeLineBasis(const Potential& V, std::vector<double> x, std::vector<double> lambda,
                   const WholeLineOptions& opt = {});

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& lambda() const { return lambda_; }
    const Eigen::MatrixXcd& psi_plus() const { return plus_; }
    const Eigen::MatrixXcd& psi_minus() const { return minus_; }
    const std::vector<ScatteringMatrixWL>& scattering() const { return S_; }
    double horizon() const;

    struct Coeffs {
        std::vector<cplx> plus;
        std::vector<cplx> minus;
    };
    Coeffs forward(const std::vector<cplx>& g) const;
    std::vector<cplx> inverse(const Coeffs& c) const;
    double norm_x(const std::vector<cplx>& g) const;
    double norm_coeffs(const Coeffs& c) const;

private:
    std::vector<double> x_, lambda_, wx_, wl_;
    Eigen::MatrixXcd plus_, minus_;
    std::vector<ScatteringMatrixWL> S_;
};

// (2 pi)^{-1} int e^{-i lambda^2 t} (psi_+ g~_+ + psi_- g~_-) dlambda. The returned
// coefficients are the evolved g~_+ followed by g~_-.
spectral::Evolution evolve_V_wholeline(const WholeLineBasis& B, const std::vector<cplx>& g, double t);

}  // namespace slowscat::waveop
