#pragma once

// Reducing operators: Hermitian R with rho(x) <= |R x| <= sqrt(d) rho(x).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "metric.hpp"
#include "mvee.hpp"
#include "optimize.hpp"
#include "sampling.hpp"

namespace mwfock {

struct ReducingOperator {
    HermitianPD matrix;
    double lower_ratio = 1.0; // min over the certification sample of |Rx| / rho(x)
    double upper_ratio = 1.0; // max of the same

    int dim() const { return matrix.dim(); }
    const CMat& mat() const { return matrix.matrix(); }
};

struct ReducerOptions {
    int certify_samples = 10000;
    std::uint64_t seed = 0x7ed0c3ULL;
    std::uint64_t certify_seed = 0xce27ULL;
    double mvee_tolerance = 1e-7;
    int mvee_max_iterations = 100000;
    int max_rounds = 6; // MVEE re-solves after adding escaped boundary points
};

inline int default_boundary_samples(int d) { return 100 * d * d; }

namespace detail {

struct RatioExtremes {
    double min = 0.0, max = 0.0;
    std::vector<CVec> argmax; // refined maximisers of |Mx|/rho(x)
};

// Directions with their norm values, evaluated once and reused across rounds.
struct DirectionSample {
    std::vector<CVec> dirs;
    std::vector<double> rho;

    DirectionSample(const NormOracle& r, int d, int count, std::uint64_t seed) : dirs(random_sphere(d, count, seed))
    {
        rho.reserve(dirs.size());
        for (const auto& x : dirs)
            rho.push_back(r(x));
    }
};

// Extremes of |M x| / rho(x) over a sample, polished by Nelder-Mead from the
// `polish` best candidates on each side.
inline RatioExtremes ratio_extremes(const NormOracle& rho, const CMat& m, const DirectionSample& sample, int polish)
{
    const auto& dirs = sample.dirs;
    std::vector<double> t(dirs.size());
    for (std::size_t i = 0; i < dirs.size(); ++i)
        t[i] = (m * dirs[i]).norm() / sample.rho[i];
    std::vector<std::size_t> order(dirs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });

    RatioExtremes out;
    out.min = t[order.front()];
    out.max = t[order.back()];
    auto ratio = [&](const RVec& v) {
        const CVec x = from_real_chart(v);
        return (m * x).norm() / rho(x);
    };
    const int k = std::min<int>(polish, static_cast<int>(dirs.size()));
    for (int i = 0; i < k; ++i) {
        const auto lo = nelder_mead_max([&](const RVec& v) { return -ratio(v); }, to_real_chart(dirs[order[i]]),
                                        0.02, 1e-6, 800);
        out.min = std::min(out.min, -lo.value);

        const auto hi = nelder_mead_max(ratio, to_real_chart(dirs[order[order.size() - 1 - i]]), 0.02, 1e-6, 800);
        out.max = std::max(out.max, hi.value);
        out.argmax.push_back(from_real_chart(hi.argmax));
    }
    return out;
}

inline ReducingOperator certify(const NormOracle& rho, const CMat& r, const ReducerOptions& opts)
{
    const int d = rho.dim();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& x : random_sphere(d, opts.certify_samples, opts.certify_seed)) {
        const double t = (r * x).norm() / rho(x);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    return {HermitianPD(r), lo, hi};
}

inline bool sandwich_ok(const ReducingOperator& r, double slack = 1e-4)
{
    return r.lower_ratio >= 1.0 - slack && r.upper_ratio <= std::sqrt(static_cast<double>(r.dim())) + slack;
}

inline CMat mvee_reducer(const NormOracle& rho, int boundary_samples, const ReducerOptions& opts)
{
    const int d = rho.dim();
    std::vector<CVec> pts;
    for (const auto& u : random_sphere(d, boundary_samples, opts.seed))
        pts.push_back(u / rho(u));
    const DirectionSample dense(rho, d, opts.certify_samples, opts.seed + 1);

    CMat me;
    for (int round = 0; round < opts.max_rounds; ++round) {
        CMat q(d, pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            q.col(i) = pts[i];
        const auto e = mvee_centered(q, opts.mvee_tolerance, opts.mvee_max_iterations);
        me = psd_sqrt(e.shape);

        // boundary points escaping E matter only once the ratio spread nears sqrt(d)
        const auto ext = ratio_extremes(rho, me, dense, 3);
        if (ext.max <= 1.0 + 1e-5 || ext.max / ext.min <= std::sqrt(static_cast<double>(d)) - 1e-3)
            break;
        for (const auto& x : ext.argmax)
            pts.push_back(x / rho(x));
    }

    // scale so the left inequality is tight
    const auto ext = ratio_extremes(rho, me, dense, 3);
    return me / ext.min;
}

} // namespace detail

/// Hermitian R with rho(x) <= |Rx| <= sqrt(d) rho(x), built from the
/// enclosing ellipsoid of sampled boundary points of the unit ball of rho.
inline ReducingOperator reducing_operator(const NormOracle& rho, int d, int boundary_samples,
                                          const ReducerOptions& opts = {})
{
    if (rho.dim() != d || d < 1)
        throw InvalidSpec("reducing_operator dimension mismatch");
    if (d == 1) {
        const double v = rho(CVec::Ones(1));
        return {HermitianPD(CMat::Constant(1, 1, v)), 1.0, 1.0};
    }
    if (rho.is_ellipsoidal())
        return {HermitianPD(rho.ellipsoid_matrix()), 1.0, 1.0};
    if (boundary_samples < default_boundary_samples(d))
        throw InvalidSpec("reducing_operator needs at least 100 d^2 boundary samples");

    auto r = detail::certify(rho, detail::mvee_reducer(rho, boundary_samples, opts), opts);
    if (detail::sandwich_ok(r))
        return r;
    r = detail::certify(rho, detail::mvee_reducer(rho, 4 * boundary_samples, opts), opts);
    if (detail::sandwich_ok(r))
        return r;
    throw SandwichViolated("reducing operator ratios [" + std::to_string(r.lower_ratio) + ", " +
                           std::to_string(r.upper_ratio) + "] after resampling");
}

inline ReducingOperator reducing_operator(const NormOracle& rho)
{
    return reducing_operator(rho, rho.dim(), default_boundary_samples(rho.dim()));
}

/// (avg_Q W^t)^{1/2}: t = 1 gives R_Q and t = -1 gives R*_Q for p = 2.
inline ReducingOperator exact_reducer_p2(const WeightSpec& spec, const Cube& q, int quad_points_per_axis,
                                         double exponent = 1.0, const QuadratureOptions& qopts = {})
{
    const int d = spec.dim();
    auto mean = [&](int res) {
        const auto rule = cube_rule(spec, q, res);
        CMat acc = CMat::Zero(d, d);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
            acc += rule.weights[k] * spec.power_at(rule.nodes[k], exponent);
        return acc;
    };
    int res = quad_points_per_axis;
    CMat coarse = mean(res);
    for (int k = 0;; ++k) {
        const CMat fine = mean(2 * res);
        const double gap = (fine - coarse).norm() / fine.norm();
        if (gap <= qopts.tolerance || spec.is_constant()) {
            const CMat r = psd_sqrt(fine);
            ReducerOptions opts;
            opts.certify_samples = 1000;
            return detail::certify(avg_norm(MatrixField{spec, 0.5 * exponent}, 2.0, q, quad_points_per_axis, qopts),
                                   r, opts);
        }
        if (k == qopts.max_doublings)
            throw QuadratureUnderResolved("averaged weight changed by " + std::to_string(gap));
        res *= 2;
        coarse = fine;
    }
}

/// R*_Q: reducing operator of [rho^*]_{p',Q}.
inline ReducingOperator dual_reducer(const WeightSpec& spec, double p, const Cube& q, int resolution,
                                     const QuadratureOptions& qopts = {})
{
    return reducing_operator(dual_avg_norm(spec, p, q, resolution, qopts));
}

/// R_Q: reducing operator of rho_{p,Q}.
inline ReducingOperator primal_reducer(const WeightSpec& spec, double p, const Cube& q, int resolution,
                                       const QuadratureOptions& qopts = {})
{
    return reducing_operator(avg_norm(spec, p, q, resolution, qopts));
}

} // namespace mwfock
