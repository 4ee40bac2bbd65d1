#pragma once

// Restricted A_{p,r} constants of matrix weights.
//
// Per cube Q the ratio sup_x [rho^*]_{p',Q}(x) / (rho_{p,Q})^*(x) is estimated
// directly, and bracketed through the reducing operators by
// A <= |R_Q R*_Q| <= d A.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "parallel.hpp"
#include "reduce.hpp"

namespace mwfock {

struct DirectRatioOptions {
    int outer_samples = 400; // projective sample of x before polishing
    int polish = 2;          // Nelder-Mead restarts from the best samples
    int dual_table = 2000;   // coarse table of the inner dual-norm solver
};

struct DirectRatio {
    double value = 1.0;
    CVec argmax;
};

/// sup_x numer(x) / rho^*(x) over the unit sphere, with the maximiser.
inline DirectRatio norm_ratio(const NormOracle& numer, const NormOracle& rho, const DirectRatioOptions& opts = {})
{
    const int d = rho.dim();
    if (d == 1)
        return {numer(CVec::Ones(1)) * rho(CVec::Ones(1)), CVec::Ones(1)};

    // rho^*(x) = |M^{-1} x|, so the ratio is sup |N M y| / |y|
    if (numer.is_ellipsoidal() && rho.is_ellipsoidal()) {
        const CMat prod = numer.ellipsoid_matrix() * rho.ellipsoid_matrix();
        Eigen::JacobiSVD<CMat> svd(prod, Eigen::ComputeFullV);
        const CVec x = rho.ellipsoid_matrix() * svd.matrixV().col(0);
        return {svd.singularValues()(0), x / x.norm()};
    }

    // a loose inner tolerance while searching, the tight one for the result
    const DualNormSolver search(rho, opts.dual_table, 1e-5);
    const DualNormSolver exact(rho, opts.dual_table);
    const auto xs = projective_samples(d, opts.outer_samples);
    std::vector<double> coarse(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        coarse[i] = numer(xs[i]) / search.coarse(xs[i]);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return coarse[a] > coarse[b]; });

    auto ratio = [&](const RVec& v) {
        const CVec x = from_real_chart(v);
        return numer(x) / search(x);
    };
    DirectRatio best{0.0, xs[order[0]]};
    for (int i = 0; i < std::min<int>(opts.polish, static_cast<int>(xs.size())); ++i) {
        const auto m = nelder_mead_max(ratio, to_real_chart(xs[order[i]]), 0.05, 1e-6, 400);
        for (const CVec& x : {from_real_chart(m.argmax), xs[order[i]]}) {
            const double v = numer(x) / exact(x);
            if (v > best.value)
                best = {v, x};
        }
    }
    return best;
}

/// sup_x [rho^*]_{p',Q}(x) / (rho_{p,Q})^*(x), with the maximiser.
inline DirectRatio direct_ratio_detail(const WeightSpec& spec, double p, const Cube& q, int resolution,
                                       const DirectRatioOptions& opts = {}, const QuadratureOptions& qopts = {})
{
    if (spec.is_constant())
        return {1.0, CVec::Unit(spec.dim(), 0)};
    return norm_ratio(dual_avg_norm(spec, p, q, resolution, qopts), avg_norm(spec, p, q, resolution, qopts), opts);
}

inline double direct_ratio(const WeightSpec& spec, double p, const Cube& q, int resolution,
                           const DirectRatioOptions& opts = {}, const QuadratureOptions& qopts = {})
{
    return direct_ratio_detail(spec, p, q, resolution, opts, qopts).value;
}

/// |R_Q R*_Q|, with the closed-form reducers when p = 2.
inline double sandwich_value(const WeightSpec& spec, double p, const Cube& q, int resolution,
                             const QuadratureOptions& qopts = {})
{
    if (p == 2.0)
        return operator_norm(exact_reducer_p2(spec, q, resolution, 1.0, qopts).mat() *
                             exact_reducer_p2(spec, q, resolution, -1.0, qopts).mat());
    return operator_norm(primal_reducer(spec, p, q, resolution, qopts).mat() *
                         dual_reducer(spec, p, q, resolution, qopts).mat());
}

////////////////////////////////////////////////////////////////////////////////
//
// sweeps
//
////////////////////////////////////////////////////////////////////////////////

struct CubeRecord {
    Point center;
    double direct_ratio = 0.0;
    double sandwich_value = std::numeric_limits<double>::quiet_NaN();
};

struct AprReport {
    double p = 2.0;
    double r = 1.0;
    double region_halfwidth = 0.0;
    double lattice_step = 0.0;
    int dim = 1;
    bool collapsed = false; // sweep reduced to one period of a symmetric family
    std::vector<CubeRecord> per_cube;
    double apr_direct = 0.0;
    double sandwich_sup = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 2> apr_interval{std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN()};
};

struct AprOptions {
    bool sandwich = true;
    int threads = 1;
    DirectRatioOptions ratio;
    QuadratureOptions quadrature;
};

struct SweepPlan {
    std::vector<Point> centers;
    bool collapsed = false;
};

/// Cube centers (lattice_step) Z^{2n} within [-h, h]^{2n}, reduced to one
/// period for families whose per-cube ratio is translation invariant.
inline SweepPlan sweep_centers(const WeightSpec& spec, double halfwidth, double step)
{
    const int dim = 2 * spec.ambient();
    const auto kmax = static_cast<long>(std::floor(halfwidth / step + 1e-9));

    auto period_axis = [&](double period) {
        std::vector<double> v;
        for (long k = 0; k <= kmax && k * step < period - 1e-12 * period; ++k)
            v.push_back(k * step);
        return v;
    };
    std::vector<std::vector<double>> axes(dim, std::vector<double>{0.0});
    SweepPlan plan;
    if (spec.is_constant() || spec.kind() == WeightKind::scalar_exp) {
        plan.collapsed = true;
    } else if (spec.kind() == WeightKind::rotating) {
        // U(omega x1) diag U(omega x1)^T has period pi / omega in x1
        axes[0] = period_axis(pi / std::abs(spec.omega()));
        plan.collapsed = true;
    } else if (spec.kind() == WeightKind::checkerboard) {
        for (auto& a : axes)
            a = period_axis(2.0 * spec.cell_side());
        plan.collapsed = true;
    } else {
        for (auto& a : axes) {
            a.clear();
            for (long k = -kmax; k <= kmax; ++k)
                a.push_back(k * step);
        }
    }

    std::vector<std::size_t> idx(dim, 0);
    while (true) {
        Point c(dim);
        for (int k = 0; k < dim; ++k)
            c(k) = axes[k][idx[k]];
        plan.centers.push_back(c);
        int k = 0;
        while (k < dim && ++idx[k] == axes[k].size()) {
            idx[k] = 0;
            ++k;
        }
        if (k == dim)
            break;
    }
    return plan;
}

/// Lattice sweep of cubes of side r; apr_direct is the sup of direct ratios
/// and apr_interval = [sup |R R*| / d, sup |R R*|].
inline AprReport apr_constant(const WeightSpec& spec, double p, double r, double region_halfwidth,
                              double lattice_step, int resolution, const AprOptions& opts = {})
{
    if (!(p >= 1.0) || !std::isfinite(p))
        throw InvalidSpec("p must be finite and >= 1");
    if (!(r > 0.0) || !(lattice_step > 0.0) || lattice_step > r)
        throw InvalidSpec("lattice_step must lie in (0, r]");
    if (!(region_halfwidth >= 2.0 * r))
        throw InvalidSpec("region_halfwidth must be at least 2r");

    const auto plan = sweep_centers(spec, region_halfwidth, lattice_step);
    AprReport rep;
    rep.p = p;
    rep.r = r;
    rep.region_halfwidth = region_halfwidth;
    rep.lattice_step = lattice_step;
    rep.dim = spec.dim();
    rep.collapsed = plan.collapsed;
    rep.per_cube.resize(plan.centers.size());

    parallel_for(plan.centers.size(), opts.threads, [&](std::size_t i) {
        const Cube q(plan.centers[i], r);
        auto& rec = rep.per_cube[i];
        rec.center = plan.centers[i];
        rec.direct_ratio = direct_ratio(spec, p, q, resolution, opts.ratio, opts.quadrature);
        if (opts.sandwich)
            rec.sandwich_value = sandwich_value(spec, p, q, resolution, opts.quadrature);
    });

    double ring = 0.0, inner = 0.0;
    const double edge = std::floor(region_halfwidth / lattice_step + 1e-9) * lattice_step;
    for (const auto& rec : rep.per_cube) {
        rep.apr_direct = std::max(rep.apr_direct, rec.direct_ratio);
        const bool on_edge = rec.center.cwiseAbs().maxCoeff() >= edge - 1e-9 * lattice_step;
        (on_edge ? ring : inner) = std::max(on_edge ? ring : inner, rec.direct_ratio);
    }
    if (!plan.collapsed && inner > 0.0 && ring > 1.01 * inner)
        throw RegionTooSmall("per-cube ratio at the region boundary (" + std::to_string(ring) +
                             ") exceeds the interior maximum (" + std::to_string(inner) + ") by more than 1%");

    if (opts.sandwich) {
        rep.sandwich_sup = 0.0;
        for (const auto& rec : rep.per_cube)
            rep.sandwich_sup = std::max(rep.sandwich_sup, rec.sandwich_value);
        rep.apr_interval = {rep.sandwich_sup / rep.dim, rep.sandwich_sup};
    }
    return rep;
}

////////////////////////////////////////////////////////////////////////////////
//
// comparison lemmas
//
////////////////////////////////////////////////////////////////////////////////

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

inline InequalityCheck make_check(double lhs, double rhs, double rel = 1e-6) { return {lhs, rhs, lhs <= rhs * (1.0 + rel)}; }

/// rho_{p,3Q}(x) <= 3^{2n(1-1/p)} A_{p,3r} rho_{p,Q}(x) for a supplied A_{p,3r}.
inline InequalityCheck check_3Q(const WeightSpec& spec, double p, double r, const Cube& q, const CVec& x,
                                double apr_3r, int resolution, const QuadratureOptions& qopts = {})
{
    if (std::abs(q.side - r) > 1e-12 * r)
        throw InvalidSpec("check_3Q expects a cube of side r");
    const int n = spec.ambient();
    const double lhs = avg_norm(spec, p, q.scaled(3.0), resolution, qopts)(x);
    const double rhs =
        std::pow(3.0, 2.0 * n * (1.0 - 1.0 / p)) * apr_3r * avg_norm(spec, p, q, resolution, qopts)(x);
    return make_check(lhs, rhs);
}

/// Same, with A_{p,3r} replaced by the ratio of the cube 3Q itself, which is
/// all the inequality uses.
inline InequalityCheck check_3Q_local(const WeightSpec& spec, double p, double r, const Cube& q, const CVec& x,
                                      int resolution, const QuadratureOptions& qopts = {})
{
    return check_3Q(spec, p, r, q, x, direct_ratio(spec, p, q.scaled(3.0), resolution, {}, qopts), resolution,
                    qopts);
}

struct RadiiComparison {
    double apr_r1 = 0.0;
    double apr_r2 = 0.0;
    bool pass_lower = false;   // apr_r1 <= (r2/r1)^{2n} apr_r2
    double upper_bound = 0.0;  // explicit bound on apr_r2 in terms of apr_r1
    bool pass_upper = false;
};

/// 3^{4n^2(1+3r2/r1)} d^{5/2} (2 sqrt(r1/r2) + 3 sqrt(r2/r1))^{4n} A^{1+2n(1+3r2/r1)}, or +inf on overflow.
inline double radii_upper_bound(int n, int d, double r1, double r2, double apr_r1)
{
    const double t = 1.0 + 3.0 * r2 / r1;
    const double log_bound = 4.0 * n * n * t * std::log(3.0) + 2.5 * std::log(static_cast<double>(d)) +
                             4.0 * n * std::log(2.0 * std::sqrt(r1 / r2) + 3.0 * std::sqrt(r2 / r1)) +
                             (1.0 + 2.0 * n * t) * std::log(apr_r1);
    return log_bound > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(log_bound);
}

inline RadiiComparison compare_radii(const WeightSpec& spec, double p, double r1, double r2, double region,
                                     int resolution, const AprOptions& opts = {})
{
    if (!(r1 > 0.0) || !(r2 > r1))
        throw InvalidSpec("compare_radii requires 0 < r1 < r2");
    AprOptions o = opts;
    o.sandwich = false;
    RadiiComparison out;
    out.apr_r1 = apr_constant(spec, p, r1, std::max(region, 2 * r1), r1 / 2, resolution, o).apr_direct;
    out.apr_r2 = apr_constant(spec, p, r2, std::max(region, 2 * r2), r1 / 2, resolution, o).apr_direct;
    const int n = spec.ambient();
    out.pass_lower = out.apr_r1 <= std::pow(r2 / r1, 2.0 * n) * out.apr_r2 * (1.0 + 1e-3);
    out.upper_bound = radii_upper_bound(n, spec.dim(), r1, r2, out.apr_r1);
    out.pass_upper = out.apr_r2 <= out.upper_bound;
    return out;
}

} // namespace mwfock
