#pragma once

// Cubes in C^n = R^{2n} and tensor-product rules over them.
//
// Each axis of a cube is split at the breakpoints of the weight (checkerboard
// cell faces) and every piece receives its own Gauss-Legendre rule, so
// piecewise-constant weights are integrated exactly and smooth ones to
// spectral accuracy.

#include <cmath>
#include <vector>

#include "linalg.hpp"

namespace mwfock {

/// Axis-aligned cube in R^{2n} given by its center and side length.
struct Cube {
    Point center;
    double side = 1.0;

    Cube() = default;
    Cube(Point c, double s) : center(std::move(c)), side(s)
    {
        if (!(side > 0.0) || !std::isfinite(side))
            throw InvalidSpec("cube side must be positive");
    }

    int ambient() const { return static_cast<int>(center.size() / 2); }
    double volume() const { return std::pow(side, static_cast<double>(center.size())); }
    double lo(int k) const { return center(k) - 0.5 * side; }
    double hi(int k) const { return center(k) + 0.5 * side; }

    /// Same center, side multiplied by `factor` (3Q for factor = 3).
    Cube scaled(double factor) const { return {center, side * factor}; }

    bool contains(const Point& z) const
    {
        for (int k = 0; k < center.size(); ++k)
            if (z(k) < lo(k) || z(k) >= hi(k))
                return false;
        return true;
    }
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_m.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int m)
    {
        nodes.resize(m);
        weights.resize(m);
        for (int i = 0; i < (m + 1) / 2; ++i) {
            double x = std::cos(pi * (i + 0.75) / (m + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= m; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                if (m == 1) {
                    p1 = x;
                    p0 = 1.0;
                }
                dp = m * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16)
                    break;
            }
            nodes[i]         = -x;
            nodes[m - 1 - i] = x;
            weights[i] = weights[m - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

/// Breakpoints of the weight strictly inside (lo, hi) along one axis.
inline std::vector<double> axis_breakpoints(const WeightSpec& spec, double lo, double hi)
{
    std::vector<double> cuts{lo};
    if (spec.kind() == WeightKind::checkerboard) {
        const double s = spec.cell_side();
        for (double b = std::floor(lo / s + 1.0) * s; b < hi; b += s)
            if (b > lo && hi - b > 1e-14 * s)
                cuts.push_back(b);
    }
    cuts.push_back(hi);
    return cuts;
}

/// Node/weight pair of a normalised rule (weights sum to one).
struct AverageRule {
    std::vector<Point> nodes;
    std::vector<double> weights;
};

namespace detail {

struct Axis1D {
    std::vector<double> x;
    std::vector<double> w;
};

inline AverageRule tensor(const std::vector<Axis1D>& axes)
{
    AverageRule rule;
    const int dim = static_cast<int>(axes.size());
    std::vector<int> idx(dim, 0);
    while (true) {
        Point z(dim);
        double w = 1.0;
        for (int k = 0; k < dim; ++k) {
            z(k) = axes[k].x[idx[k]];
            w *= axes[k].w[idx[k]];
        }
        rule.nodes.push_back(z);
        rule.weights.push_back(w);
        int k = 0;
        while (k < dim && ++idx[k] == static_cast<int>(axes[k].x.size())) {
            idx[k] = 0;
            ++k;
        }
        if (k == dim)
            break;
    }
    return rule;
}

} // namespace detail

/// Normalised composite Gauss-Legendre rule on Q with `points_per_axis`
/// nodes on every smooth piece of every axis.
inline AverageRule cube_rule(const WeightSpec& spec, const Cube& q, int points_per_axis)
{
    const GaussLegendre gl(points_per_axis);
    std::vector<detail::Axis1D> axes(q.center.size());
    for (int k = 0; k < q.center.size(); ++k) {
        const auto cuts = axis_breakpoints(spec, q.lo(k), q.hi(k));
        for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
            const double a = cuts[piece], b = cuts[piece + 1];
            for (int i = 0; i < points_per_axis; ++i) {
                axes[k].x.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i]);
                axes[k].w.push_back(0.5 * (b - a) / q.side * gl.weights[i]);
            }
        }
    }
    return detail::tensor(axes);
}

/// Sample point for an ess-sup together with the smooth sub-box it lies in.
struct SupSample {
    Point z;
    Point lo;
    Point hi;
};

/// Equally spaced samples (points_per_axis + 1 per piece, endpoints pulled
/// into the open piece) over every smooth sub-box of Q.  Doubling
/// points_per_axis gives a superset of samples.
inline std::vector<SupSample> sup_samples(const WeightSpec& spec, const Cube& q, int points_per_axis)
{
    const int dim = static_cast<int>(q.center.size());
    std::vector<std::vector<double>> cuts(dim);
    for (int k = 0; k < dim; ++k)
        cuts[k] = axis_breakpoints(spec, q.lo(k), q.hi(k));

    std::vector<SupSample> out;
    std::vector<int> piece(dim, 0);
    while (true) {
        Point lo(dim), hi(dim);
        for (int k = 0; k < dim; ++k) {
            const double a = cuts[k][piece[k]], b = cuts[k][piece[k] + 1];
            const double eps = 1e-9 * (b - a);
            lo(k) = a + eps;
            hi(k) = b - eps;
        }
        std::vector<detail::Axis1D> axes(dim);
        for (int k = 0; k < dim; ++k)
            for (int i = 0; i <= points_per_axis; ++i) {
                axes[k].x.push_back(lo(k) + (hi(k) - lo(k)) * i / points_per_axis);
                axes[k].w.push_back(1.0);
            }
        for (auto& z : detail::tensor(axes).nodes)
            out.push_back({z, lo, hi});

        int k = 0;
        while (k < dim && ++piece[k] == static_cast<int>(cuts[k].size()) - 1) {
            piece[k] = 0;
            ++k;
        }
        if (k == dim)
            break;
    }
    return out;
}

} // namespace mwfock
