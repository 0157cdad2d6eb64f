#pragma once

#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "slowscat/types.hpp"

namespace slowscat::quad {

using RealFn = std::function<double(double)>;
using CplxFn = std::function<cplx(double)>;

template <class T>
struct Result {
    T value{};
    double error = 0.0;
    bool converged = true;
};

struct Options {
    double abs_tol = 1e-10;
    int max_depth = 40;
    // Budget on panel evaluations per call; exceeding it marks the result unconverged.
    long max_panels = 200000;
    // Interior points where the integrand may be non-smooth.
    std::span<const double> breaks{};
    // Declared oscillation period; ranges longer than this are split at multiples.
    double period = 0.0;
};

// Adaptive Gauss-Kronrod (15 point) with an absolute tolerance spread over the range.
Result<double> integrate_real(const RealFn& f, double a, double b, const Options& opt = {});
Result<cplx> integrate_cplx(const CplxFn& f, double a, double b, const Options& opt = {});

template <class F>
auto integrate(const F& f, double a, double b, const Options& opt = {}) {
    if constexpr (std::is_convertible_v<std::invoke_result_t<F, double>, double>) {
        return integrate_real(f, a, b, opt);
    } else {
        return integrate_cplx(f, a, b, opt);
    }
}

// Integral over [a, inf) of a nonnegative integrand, accumulated on dyadic blocks
// 1+x_k = (1+a) 2^k and accelerated with Wynn's epsilon algorithm. Divergence is
// flagged (converged = false, value = inf) when block sums stop shrinking.
Result<double> integrate_to_infinity(const RealFn& f, double a, const Options& opt = {},
                                     int max_blocks = 60);

// Wynn epsilon extrapolation of a sequence of partial sums.
Result<double> wynn_epsilon(std::span<const double> partial_sums);

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

// Piecewise spectral collocation: the range is cut into panels, each carrying
// a Gauss-Legendre rule. Cumulative integrals are exact for piecewise
// polynomials of degree < order.
class PanelGrid {
public:
    static constexpr int order = 16;

    PanelGrid() = default;
    explicit PanelGrid(std::vector<double> edges);
    // Uniform panels of length at most h, always honouring the given breaks.
    static PanelGrid covering(double a, double b, double h, std::span<const double> breaks = {});

    std::size_t panels() const { return edges_.size() - 1; }
    std::size_t size() const { return x_.size(); }
    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& weights() const { return w_; }
    const std::vector<double>& edges() const { return edges_; }
    double left() const { return edges_.front(); }
    double right() const { return edges_.back(); }
    PanelGrid refined() const;

    // Values of int_{left}^{x_i} f at every node, plus the total.
    std::vector<cplx> cumulative_left(std::span<const cplx> f) const;
    // Values of int_{x_i}^{right} f at every node.
    std::vector<cplx> cumulative_right(std::span<const cplx> f) const;
    // int over panel p from its left edge to each of its nodes; f holds the panel's own values.
    void panel_left_integrals(std::size_t p, std::span<const cplx> f, std::span<cplx> out) const;
    // int over panel p from each node to its right edge; f holds the panel's own values.
    void panel_right_integrals(std::size_t p, std::span<const cplx> f, std::span<cplx> out) const;
    cplx integral(std::span<const cplx> f) const;

    // Barycentric interpolation of node data at x inside the grid.
    cplx interpolate(std::span<const cplx> f, double x) const;
    // Value at the left edge of panel p by extrapolating the panel polynomial.
    cplx edge_value(std::span<const cplx> f, std::size_t p, bool right_edge) const;

private:
    std::vector<double> edges_;
    std::vector<double> x_;
    std::vector<double> w_;
};

}  // namespace slowscat::quad
