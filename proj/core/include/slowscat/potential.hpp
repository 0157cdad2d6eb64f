#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slowscat/types.hpp"

namespace slowscat {

enum class PotentialKind {
    zero,
    square_barrier,
    power_decay,
    wigner_von_neumann,
    oscillatory_decay,
    bump,
    random_decaying,
    sampled,
};

std::string to_string(PotentialKind k);
PotentialKind kind_from_string(const std::string& s);

// Textual description of a potential. JSON layout:
//   {"kind": "...", "params": {...}, "seed": int}
// Parameters per kind:
//   zero               {}
//   square_barrier     {"height", "a", "b"}
//   power_decay        {"c", "alpha"}                 c (1+|x|)^-alpha
//   wigner_von_neumann {"c"}                          ~ c sin(2x)/x at large x
//   oscillatory_decay  {"c", "omega", "alpha"}        c sin(omega x)/(1+|x|)^alpha
//   bump               {"amplitude", "a", "b"}        amplitude * 64 s^3 (1-s)^3
//   random_decaying    {"g_exponent" | "g", "cells", "profile"}  with "seed"
//   sampled            {"x", "v", "v_im"?}
struct PotentialSpec {
    PotentialKind kind = PotentialKind::zero;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, std::vector<double>>> arrays;
    std::string profile;  // random_decaying only
    std::optional<std::uint64_t> seed;

    static PotentialSpec parse(const std::string& json_text);
    std::string serialize() const;

    double scalar(const std::string& name) const;
    std::optional<double> scalar_opt(const std::string& name) const;
    const std::vector<double>* array(const std::string& name) const;
    bool operator==(const PotentialSpec&) const = default;
};

struct Support {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

struct NormResult {
    double value = 0.0;
    bool finite = true;
    double error = 0.0;
};

struct TailReport {
    double value = 0.0;        // Q(N)
    double oscillation = 0.0;  // sup over N' in [N/2, N] of |Q(N') - Q(N)|
    double previous = 0.0;     // same over [N/4, N/2]
    bool convergent = false;
};

struct PotentialOptions {
    double tol = 1e-10;
    // Half-width of the precomputed cumulative table for kinds without a closed form.
    double cache_extent = 2000.0;
};

// Immutable potential on the real line. Copies share state.
class Potential {
public:
    Potential();
    Potential(PotentialSpec spec, PotentialOptions opt = {});

    const PotentialSpec& spec() const;
    PotentialKind kind() const;
    double tol() const;
    bool is_complex() const;

    double operator()(double x) const { return real(x); }
    double real(double x) const;
    cplx eval(double x) const;

    // Q(x) = int_0^x V (signed for x < 0). Real part for complex samples.
    double cumulative(double x) const;
    cplx cumulative_complex(double x) const;

    Support support() const;
    // Points where V or a derivative jumps.
    std::vector<double> breakpoints() const;
    // Oscillation period if declared, else 0.
    double period() const;
    // Bound on sup |V| over [x, inf).
    double sup_tail(double x) const;

    const std::vector<double>& cache_nodes() const;
    const std::vector<double>& cache_values() const;

    NormResult norm_lp(double p, double a, double b) const;
    NormResult norm_amalgam(double p, bool whole_line = false) const;
    TailReport improper_tail(double N) const;

    // Random realization coefficients a_n (random_decaying only).
    const std::vector<double>& random_coefficients() const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

Potential make_zero();
Potential make_square_barrier(double h, double a, double b);
Potential make_power_decay(double c, double alpha);
Potential make_wigner_von_neumann(double c);
Potential make_oscillatory_decay(double c, double omega, double alpha);
Potential make_bump(double amplitude, double a, double b);
Potential make_random_decaying(double g_exponent, int cells, std::uint64_t seed,
                               const std::string& profile = "poly3");
Potential make_random_decaying(std::vector<double> g, std::uint64_t seed,
                               const std::string& profile = "poly3");
Potential make_sampled(std::vector<double> x, std::vector<double> v,
                       std::vector<double> v_im = {});

// Portable uniform draw on [-1, 1] from a 64-bit Mersenne twister.
std::vector<double> uniform_symmetric(std::uint64_t seed, std::size_t count);

}  // namespace slowscat
