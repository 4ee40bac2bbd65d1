#pragma once

// Brute-force evaluations used as independent references for the grid
// operators.  Plain loops over nodes, no shared code with the library
// beyond the grid coordinates.

#include <mwfock/fockop.hpp>

#include <complex>
#include <vector>

namespace mwfock::testing {

/// (alpha/pi) h^2 sum_u f(u) e^{alpha z conj(u)} e^{-alpha |u|^2} for n = 1.
inline std::vector<std::complex<double>> projection_oracle(const QuadratureGrid& g, const std::vector<std::complex<double>>& f,
                                                           const std::vector<std::size_t>& at)
{
    const double a = g.alpha();
    const double w = a / pi * g.step() * g.step();
    std::vector<std::complex<double>> out;
    for (auto i : at) {
        const std::complex<double> z(g.node(i)(0), g.node(i)(1));
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            const std::complex<double> u(g.node(j)(0), g.node(j)(1));
            acc += f[j] * std::exp(a * z * std::conj(u) - a * std::norm(u));
        }
        out.push_back(w * acc);
    }
    return out;
}

/// (alpha/pi) int |K_z(u)| e^{-alpha |u|^2} dv for n = 1 by the midpoint rule
/// of step h on [-T, T]^2.
inline double maximal_one_oracle(double alpha, double x, double y, double T, double h)
{
    const int m = static_cast<int>(std::lround(2.0 * T / h));
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double ux = -T + (i + 0.5) * h, uy = -T + (j + 0.5) * h;
            acc += std::exp(alpha * (ux * x + uy * y) - alpha * (ux * ux + uy * uy));
        }
    return alpha / pi * h * h * acc;
}

} // namespace mwfock::testing
