#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "slowscat/potential.hpp"
#include "slowscat/types.hpp"
#include "slowscat/waveop.hpp"

namespace slowscat::dirac {

using Spinor = std::array<cplx, 2>;

// Coefficient q of the original system y' = i z sigma_3 y + [[0, q], [conj q, 0]] y,
// given as phase * profile. The off-diagonal form uses V = i q.
struct Coupling {
    Potential profile;
    cplx phase{1.0, 0.0};

    cplx q(double x) const {
        const auto s = profile.support();
        return x < s.lo || x > s.hi ? cplx(0.0) : phase * profile.eval(x);
    }
    cplx V(double x) const { return I * q(x); }

    static Coupling from_q(Potential profile, cplx phase = 1.0) { return {std::move(profile), phase}; }
    static Coupling from_V(Potential profile, cplx phase = 1.0) { return {std::move(profile), -I * phase}; }
};

// original:     y' = i z sigma_3 y + [[0, q], [conj q, 0]] y
// off_diagonal: [[-i d/dx, V], [conj V, i d/dx]] y = z y, the same y as original
// rotated:      phi = Q y with Q = [[1, 1], [i, -i]], which solves
//               [[0, -d/dx], [d/dx, 0]] phi + [[Re V, -Im V], [-Im V, -Re V]] phi = z phi
enum class Representation { original, off_diagonal, rotated };

Spinor to_rotated(const Spinor& y);
Spinor from_rotated(const Spinor& phi);
Spinor convert(const Spinor& v, Representation from, Representation to);

struct DiracSolution {
    std::vector<double> x;
    std::vector<Spinor> y;
    cplx z;
    Representation rep = Representation::off_diagonal;

    std::size_t size() const { return x.size(); }
    DiracSolution to(Representation target) const;
};

struct IvpOptions {
    double abs_tol = 1e-13;
    double rel_tol = 1e-13;
};

// Integrates the system from init at x0 to every grid point. init and the result are in rep.
DiracSolution dirac_ivp(const Coupling& c, cplx z, const Spinor& init, double x0, const std::vector<double>& grid,
                        Representation rep = Representation::off_diagonal, const IvpOptions& opt = {});

// Rotated-form solutions u_1(0) = (0, 1), u_2(0) = (1, 0).
DiracSolution u1(const Coupling& c, cplx z, const std::vector<double>& grid, const IvpOptions& opt = {});
DiracSolution u2(const Coupling& c, cplx z, const std::vector<double>& grid, const IvpOptions& opt = {});

struct WronskianReport {
    std::vector<cplx> values;
    double max_drift = 0.0;  // max |W_k - W_0| / |W_0|
};

// Off-diagonal form: W = i (f2 g1 - f1 g2). Rotated form: W = f2 g1 - f1 g2.
WronskianReport wronskian(const DiracSolution& f, const DiracSolution& g);

// |g1| = |g2| = R, theta_1 + theta_2 = c, with R(x0) = 1 at the first grid node.
struct PruferState {
    std::vector<double> x;
    std::vector<double> R;
    std::vector<double> theta1;
    double c = 0.0;
    double E = 0.0;

    // Off-diagonal solution (R e^{i theta1}, R e^{i (c - theta1)}).
    std::vector<Spinor> reconstruction() const;
};

PruferState prufer_integrate(const Coupling& c, double E, double theta1_0, double c_shift,
                             const std::vector<double>& grid, const IvpOptions& opt = {});

struct DesignOptions {
    double X = 200.0;
    double dx = 0.01;
    double theta1_0 = 0.0;
    double c_shift = 0.0;
    // Phase slip of the verification solution beyond which the lock is reported as lost.
    double slip_tol = 0.1;
};

// A tail-ratio below this counts as a convergent int R^2.
inline constexpr double l2_tail_ratio = 0.9;

struct EmbeddedDesign {
    double E = 0.0;
    double A = 0.0;
    Coupling coupling;  // sampled V with q = -i V
    std::vector<cplx> V;
    PruferState state;
    double bound_ratio = 0.0;     // max |V| (1 + x) / A, 0 when A = 0
    double decay_exponent = 0.0;  // fitted a in R ~ (1 + x)^{-a} on [X/8, X]
    double l2_integral = 0.0;     // int_0^X R^2
    double tail_ratio = 0.0;      // (I(X) - I(X/2)) / (I(X/2) - I(X/4))
    bool l2_convergent = false;
    double verification_gap = 0.0;  // max | |y1| / R - 1 | for dirac_ivp on the sampled V
    double phase_slip = 0.0;        // max |arg y1 - arg y2 - (2 theta1 - c)|
    bool lock_lost = false;
};

// Closed-loop design: arg V = 2 theta1 - c - pi/2 makes (log R)' = -|V| with |V| = A/(1+x).
EmbeddedDesign design_embedded(double E, double A, const DesignOptions& opt = {});

struct ScatteringOptions {
    IvpOptions ivp;
    // Truncation point for couplings without bounded support.
    double far_X = 2000.0;
    double t_floor = 1e-8;
};

struct DiracScattering {
    double E = 0.0;
    cplx t1, r1, t2, r2;
    double unitarity_defect = 0.0;  // max_i | |r_i|^2 + |t_i|^2 - 1 |
    double t_defect = 0.0;          // |t1 - t2|
    double r_defect = 0.0;          // |r2 + (t1 / conj t1) conj r1|
    bool truncated = false;         // far field taken at far_X
    bool unstable = false;
};

DiracScattering dirac_scattering(const Coupling& c, double E, const ScatteringOptions& opt = {});

struct MFunctions {
    cplx m_plus, m_minus;
    Eigen::Matrix2d M;  // Im of the matrix built from m_+ and m_-
    double min_eigenvalue = 0.0;
    // | (4 pi)^{-1} sum eta eta^* at 0 - P M P / pi | with P the coordinate swap.
    double kernel_gap = 0.0;
};

// m_+ and m_- from the Jost solutions at E + i0, with f_pm = u_1 m_pm + u_2.
MFunctions m_functions(const Coupling& c, double E, const ScatteringOptions& opt = {});

// Scattered waves eta_pm in the rotated form on a uniform whole-line grid, with
//   c_pm(E) = int conj(eta_pm) . g dx,  g = (4 pi)^{-1} int (eta_+ c_+ + eta_- c_-) dE.
class DiracBasis {
public:
    DiracBasis(Coupling c, std::vector<double> x, std::vector<double> E, const ScatteringOptions& opt = {});

    const Coupling& coupling() const { return c_; }
    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& E() const { return E_; }
    const std::vector<DiracScattering>& scattering() const { return S_; }
    const ScatteringOptions& options() const { return opt_; }
    // pi / dE: beyond this the E quadrature aliases.
    double horizon() const;

    struct Coeffs {
        std::vector<cplx> plus;
        std::vector<cplx> minus;
    };
    Coeffs forward(const std::vector<Spinor>& g) const;
    std::vector<Spinor> inverse(const Coeffs& c) const;
    double norm_x(const std::vector<Spinor>& g) const;
    double norm_coeffs(const Coeffs& c) const;

private:
    Coupling c_;
    ScatteringOptions opt_;
    std::vector<double> x_, E_, wx_, wE_;
    // Rows are x, columns E; first and second rotated components.
    Eigen::MatrixXcd p1_, p2_, m1_, m2_;
    std::vector<DiracScattering> S_;
};

struct Evolution {
    std::vector<Spinor> values;
    DiracBasis::Coeffs coeffs;
    double norm_defect = 0.0;
    double horizon = 0.0;
    bool beyond_horizon = false;
};

// (4 pi)^{-1} int e^{-iEt} (eta_+ <conj eta_+, g> + eta_- <conj eta_-, g>) dE.
Evolution dirac_evolve(const DiracBasis& B, const std::vector<Spinor>& g, double t);

// Psi(s) = e^{-i s D_V} e^{i s D_0} f on the schedule (s -> +inf), unmodified. Distances are
// taken in the eta representation, where the limit has the free coefficients of f.
waveop::ExperimentReport dirac_waveop_experiment(const DiracBasis& B, const std::vector<Spinor>& f,
                                                 const std::vector<double>& schedule);

// Columns x, re_1, im_1, re_2, im_2.
void write_packet_csv(std::ostream& os, const std::vector<double>& x, const std::vector<Spinor>& g);

}  // namespace slowscat::dirac
