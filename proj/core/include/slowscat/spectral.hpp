#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "slowscat/eigen.hpp"
#include "slowscat/potential.hpp"
#include "slowscat/types.hpp"

namespace slowscat::spectral {

struct GammaOptions {
    eigen::FarFieldOptions far;
    eigen::IvpOptions ivp;
    // |u(0)| below this fraction of max(1, |u'(0)|/lambda) marks a resonance.
    double resonance_tol = 1e-10;
};

struct Gamma {
    cplx value;
    cplx u0;
    cplx du0;
    bool resonant = false;
};

// gamma = 1/u(0, lambda^2) for the WKB-normalized real-axis solution.
Gamma gamma_coeff(const Potential& V, double lambda, const GammaOptions& opt = {});

struct BoundaryM {
    cplx m;
    double error = 0.0;
    bool stable = false;
    eigen::LimitResult limit;
};

// m(lambda^2 + i0) from the Dirichlet Weyl function.
BoundaryM m_boundary(const Potential& V, double lambda, const eigen::LimitOptions& lim = {},
                     const eigen::WeylOptions& weyl = {});

struct AcDensity {
    double value = 0.0;
    double error = 0.0;
    bool stable = false;
};

// pi^{-1} Im m(lambda^2 + i0). Unstable extrapolation is reported through the flag.
AcDensity ac_density(const Potential& V, double lambda, const eigen::LimitOptions& lim = {},
                     const eigen::WeylOptions& weyl = {});

struct SpectralRow {
    double lambda = 0.0;
    cplx m;
    double density = 0.0;
    cplx gamma;
    double omega = 0.0;        // arg(conj(gamma)/gamma)
    bool stable = false;
    bool resonant = false;     // gamma interpolated from neighbours
    double m_error = 0.0;
    double consistency = 0.0;  // | |gamma|^2 lambda - Im m | / Im m
};

struct SpectralTable {
    std::vector<SpectralRow> rows;
    // Columns lambda, re_m, im_m, density, re_gamma, im_gamma, omega, stable.
    void write_csv(std::ostream& os) const;
};

struct TableOptions {
    eigen::LimitOptions limit;
    eigen::WeylOptions weyl;
    GammaOptions gamma;
};

SpectralTable build_spectral_table(const Potential& V, const std::vector<double>& lambdas,
                                   const TableOptions& opt = {});

// n equispaced points on [a, b].
std::vector<double> uniform_grid(double a, double b, int n);
// Trapezoid weights on a sorted grid.
std::vector<double> trapezoid_weights(const std::vector<double>& x);

struct PsiOptions {
    GammaOptions gamma;
    // Also build lambda conj(gamma) u_1 from the Dirichlet initial-value problem.
    bool second_formula = true;
};

// psi(x, lambda) = (2i)^{-1}(u - (conj gamma / gamma) conj u) on a half-line grid
// starting at 0, with the transforms
//   g~(lambda) = sqrt(2/pi) int conj psi g dx,   g(x) = sqrt(2/pi) int psi g~ dlambda.
class SpectralBasis {
public:
    SpectralBasis() = default;
    SpectralBasis(const Potential& V, std::vector<double> x, std::vector<double> lambda,
                  const PsiOptions& opt = {});

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& lambda() const { return lambda_; }
    const Eigen::MatrixXcd& psi() const { return psi_; }
    const std::vector<cplx>& gamma() const { return gamma_; }
    const std::vector<bool>& resonant() const { return resonant_; }
    // max |psi_1 - psi_2| between the two formulas (0 if only one was built).
    double formula_gap() const { return formula_gap_; }
    // max |Im(psi / conj gamma)| relative to max |psi / conj gamma|.
    double realness_defect() const { return realness_; }
    // Largest t with dlambda <= pi / (2 t lambda_max).
    double horizon() const;

    std::vector<cplx> forward(const std::vector<cplx>& g) const;
    std::vector<cplx> inverse(const std::vector<cplx>& coeffs) const;

    double norm_x(const std::vector<cplx>& g) const;
    double norm_lambda(const std::vector<cplx>& c) const;

private:
    std::vector<double> x_, lambda_, wx_, wl_;
    Eigen::MatrixXcd psi_;
    std::vector<cplx> gamma_;
    std::vector<bool> resonant_;
    double formula_gap_ = 0.0;
    double realness_ = 0.0;
};

enum class Representation { position, spectral };

// A packet held on both grids of a basis.
struct WavePacket {
    std::vector<cplx> values;
    std::vector<cplx> coeffs;
    Representation authoritative = Representation::position;
    double roundtrip_defect = 0.0;  // ||inverse(forward g) - g|| / ||g||
    double leakage = 0.0;           // max |g~| on the top 5% of the lambda grid over max |g~|
    bool leakage_flag = false;
};

inline constexpr double leakage_threshold = 1e-3;

WavePacket packet_from_values(const SpectralBasis& B, std::vector<cplx> g);
WavePacket packet_from_coeffs(const SpectralBasis& B, std::vector<cplx> c);

// Smooth coefficients supported in [a, b], translated to x0 under the sine transform.
std::vector<cplx> band_coefficients(const std::vector<double>& lambda, double a, double b, double x0);

struct Projection {
    WavePacket packet;
    bool endpoint_flag = false;  // an endpoint sits on a masked lambda
};

// Spectral projection onto energies in (a, b), 0 < a < b.
Projection project_ac(const SpectralBasis& B, double a, double b, const WavePacket& g);

struct Evolution {
    std::vector<cplx> values;
    std::vector<cplx> coeffs;
    double norm_defect = 0.0;
    double horizon = 0.0;
    bool beyond_horizon = false;
};

// e^{-i H_V t} g through the spectral representation of B.
Evolution evolve_V(const SpectralBasis& B, const WavePacket& g, double t);

}  // namespace slowscat::spectral
