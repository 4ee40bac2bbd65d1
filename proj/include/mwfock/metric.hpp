#pragma once

//
// Norm-valued functions on C^d: the pointwise metric rho_z(x) = |W^{1/p}(z)x|,
// its cube averages rho_{p,Q}, the ess-sup rho_{inf,Q}, and dual norms.
//

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "optimize.hpp"
#include "quadrature.hpp"
#include "sampling.hpp"

namespace mwfock {

enum class NormTag { pointwise, average, supremum, dual, generic };

inline std::string to_string(NormTag t)
{
    switch (t) {
    case NormTag::pointwise: return "pointwise";
    case NormTag::average: return "average";
    case NormTag::supremum: return "supremum";
    case NormTag::dual: return "dual";
    case NormTag::generic: return "generic";
    }
    return "unknown";
}

/// A norm on C^d given as a pure evaluation function.  When the norm is
/// known to be x -> |M x| the (Hermitian, positive) matrix M is attached and
/// consumers take closed-form shortcuts.
class NormOracle {
public:
    using Eval = std::function<double(const CVec&)>;

    NormOracle(int dim, NormTag tag, Eval eval) : dim_(dim), tag_(tag), eval_(std::move(eval)) {}

    static NormOracle ellipsoidal(const CMat& m, NormTag tag)
    {
        CMat h = positive_factor(m);
        NormOracle out(static_cast<int>(m.rows()), tag, [h](const CVec& x) { return (h * x).norm(); });
        out.ellipsoid_ = h;
        return out;
    }

    double operator()(const CVec& x) const { return eval_(x); }

    int dim() const { return dim_; }
    NormTag tag() const { return tag_; }
    bool is_ellipsoidal() const { return ellipsoid_.has_value(); }
    const CMat& ellipsoid_matrix() const { return *ellipsoid_; }

private:
    int dim_;
    NormTag tag_;
    Eval eval_;
    std::optional<CMat> ellipsoid_;
};

struct QuadratureOptions {
    double tolerance = 1e-6; // relative change allowed under resolution doubling
    int max_doublings = 4;
};

/// rho_z(x) = |W^{1/p}(z) x|
inline NormOracle pointwise_metric(const WeightSpec& spec, double p, const Point& z)
{
    if (!(p >= 1.0))
        throw InvalidSpec("exponent p must be >= 1");
    return NormOracle::ellipsoidal(spec.power_at(z, 1.0 / p), NormTag::pointwise);
}

namespace detail {

inline std::vector<CVec> probe_vectors(int d)
{
    std::vector<CVec> probes;
    for (int j = 0; j < d; ++j)
        probes.push_back(CVec::Unit(d, j));
    if (d > 1) {
        CVec a = CVec::Ones(d) / std::sqrt(double(d));
        CVec b(d);
        for (int j = 0; j < d; ++j)
            b(j) = std::polar(1.0, 0.5 * pi * j) / std::sqrt(double(d));
        probes.push_back(a);
        probes.push_back(b);
    }
    return probes;
}

struct AverageData {
    CMat grams;     // row k holds vec(M(z_k)^* M(z_k)), column-major
    RVec weights;
    double p;
    CMat mean_gram; // sum of weights * grams, which settles p = 2 exactly

    double eval(const CVec& x) const
    {
        if (p == 2.0)
            return std::sqrt(std::max(0.0, x.dot(mean_gram * x).real()));
        const CMat outer = x.conjugate() * x.transpose();
        const RVec q = (grams * outer.reshaped()).real().cwiseMax(0.0);
        return std::pow(weights.dot(q.array().pow(0.5 * p).matrix()), 1.0 / p);
    }
};

inline AverageData build_average(const MatrixField& field, double p, const Cube& q, int res)
{
    const auto rule = cube_rule(field.spec, q, res);
    const int d = field.dim();
    const auto count = static_cast<Eigen::Index>(rule.nodes.size());
    AverageData data{CMat(count, d * d), Eigen::Map<const RVec>(rule.weights.data(), count), p, CMat::Zero(d, d)};
    for (Eigen::Index k = 0; k < count; ++k) {
        const CMat m = field.at(rule.nodes[k]);
        const CMat g = m.adjoint() * m;
        data.grams.row(k) = g.reshaped().transpose();
        data.mean_gram += rule.weights[k] * g;
    }
    return data;
}

inline double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct SupData {
    MatrixField field;
    std::vector<SupSample> samples;
    std::vector<CMat> mats;
    int res = 1;

    double eval(const CVec& x) const
    {
        std::size_t best = 0;
        double vbest = -1.0;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double v = (mats[k] * x).norm();
            if (v > vbest) {
                vbest = v;
                best = k;
            }
        }
        const auto& s = samples[best];
        const RVec width = s.hi - s.lo;
        auto f = [&](const RVec& z) { return (field.at(z) * x).norm(); };
        const auto refined = compass_max(f, s.z, s.lo, s.hi, width.maxCoeff() / res);
        return std::max(vbest, refined.value);
    }
};

} // namespace detail

/// (1/v(Q) int_Q |M(z) x|^p dv)^{1/p} for the matrix field M; the quadrature
/// resolution is doubled until probe values agree to `opts.tolerance`.
inline NormOracle avg_norm(const MatrixField& field, double p, const Cube& q, int quad_points_per_axis,
                           const QuadratureOptions& opts = {})
{
    if (!(p >= 1.0) || !std::isfinite(p))
        throw InvalidSpec("avg_norm requires finite p >= 1");
    if (quad_points_per_axis < 4)
        throw InvalidSpec("avg_norm requires at least 4 quadrature points per axis");
    if (q.center.size() != 2 * field.ambient())
        throw InvalidSpec("cube dimension does not match the weight");

    const int d = field.dim();
    if (field.spec.is_constant())
        return NormOracle::ellipsoidal(field.at(q.center), NormTag::average);

    if (field.spec.is_scalar()) {
        // |c(z) x| averages to (avg c^p)^{1/p} |x|
        auto scalar_avg = [&](int res) {
            const auto rule = cube_rule(field.spec, q, res);
            double s = 0.0;
            for (std::size_t k = 0; k < rule.nodes.size(); ++k)
                s += rule.weights[k] * std::pow(field.spec.scalar_value(rule.nodes[k]), field.exponent * p);
            return std::pow(s, 1.0 / p);
        };
        int res = quad_points_per_axis;
        double coarse = scalar_avg(res);
        for (int k = 0;; ++k) {
            const double fine = scalar_avg(2 * res);
            if (detail::relative_gap(coarse, fine) <= opts.tolerance)
                return NormOracle::ellipsoidal(fine * CMat::Identity(d, d), NormTag::average);
            if (k == opts.max_doublings)
                throw QuadratureUnderResolved("scalar average did not converge at " + std::to_string(2 * res) +
                                              " points per axis");
            res *= 2;
            coarse = fine;
        }
    }

    const auto probes = detail::probe_vectors(d);
    int res = quad_points_per_axis;
    auto coarse = detail::build_average(field, p, q, res);
    for (int k = 0;; ++k) {
        auto fine = detail::build_average(field, p, q, 2 * res);
        double gap = 0.0;
        for (const auto& x : probes)
            gap = std::max(gap, detail::relative_gap(coarse.eval(x), fine.eval(x)));
        if (gap <= opts.tolerance) {
            if (p == 2.0)
                return NormOracle::ellipsoidal(psd_sqrt(fine.mean_gram), NormTag::average);
            auto data = std::make_shared<detail::AverageData>(std::move(fine));
            return NormOracle(d, NormTag::average, [data](const CVec& x) { return data->eval(x); });
        }
        if (k == opts.max_doublings)
            throw QuadratureUnderResolved("average norm changed by " + std::to_string(gap) + " at " +
                                          std::to_string(2 * res) + " points per axis");
        res *= 2;
        coarse = std::move(fine);
    }
}

/// rho_{p,Q}(x) = (1/v(Q) int_Q |W^{1/p}(z) x|^p dv)^{1/p}
inline NormOracle avg_norm(const WeightSpec& spec, double p, const Cube& q, int quad_points_per_axis,
                           const QuadratureOptions& opts = {})
{
    return avg_norm(MatrixField{spec, 1.0 / p}, p, q, quad_points_per_axis, opts);
}

/// ess sup_{z in Q} |M(z) x|, realised as the maximum over cell-interior
/// samples followed by a compass search inside the best sample's sub-box.
inline NormOracle sup_norm(const MatrixField& field, const Cube& q, int sample_points_per_axis,
                           const QuadratureOptions& opts = {})
{
    if (sample_points_per_axis < 1)
        throw InvalidSpec("sup_norm requires at least one sample per axis");
    if (q.center.size() != 2 * field.ambient())
        throw InvalidSpec("cube dimension does not match the weight");
    const int d = field.dim();
    if (field.spec.is_constant())
        return NormOracle::ellipsoidal(field.at(q.center), NormTag::supremum);

    auto build = [&](int res) {
        detail::SupData data{field, sup_samples(field.spec, q, res), {}, res};
        data.mats.reserve(data.samples.size());
        for (const auto& s : data.samples)
            data.mats.push_back(field.at(s.z));
        return data;
    };

    int res = sample_points_per_axis;
    if (field.spec.is_scalar()) {
        // the scalar sup is a single number; reuse the matrix machinery at d = 1
        MatrixField scalar_field{field.spec.kind() == WeightKind::scalar_exp
                                     ? WeightSpec::scalar_exp(field.spec.beta(), 1, field.ambient())
                                     : WeightSpec::scalar_power(field.spec.gamma(), 1, field.ambient()),
                                 field.exponent};
        detail::SupData sd{scalar_field, sup_samples(field.spec, q, res), {}, res};
        for (const auto& s : sd.samples)
            sd.mats.push_back(scalar_field.at(s.z));
        const double value = sd.eval(CVec::Ones(1));
        return NormOracle::ellipsoidal(value * CMat::Identity(d, d), NormTag::supremum);
    }
    const auto probes = detail::probe_vectors(d);
    auto coarse = build(res);
    for (int k = 0;; ++k) {
        auto fine = build(2 * res);
        double gap = 0.0;
        for (const auto& x : probes)
            gap = std::max(gap, detail::relative_gap(coarse.eval(x), fine.eval(x)));
        if (gap <= opts.tolerance) {
            auto data = std::make_shared<detail::SupData>(std::move(fine));
            return NormOracle(d, NormTag::supremum, [data](const CVec& x) { return data->eval(x); });
        }
        if (k == opts.max_doublings)
            throw QuadratureUnderResolved("sup norm changed by " + std::to_string(gap) + " at " +
                                          std::to_string(2 * res) + " samples per axis");
        res *= 2;
        coarse = std::move(fine);
    }
}

/// rho_{inf,Q} for rho_z(x) = |W(z) x| (the p = 1 convention).
inline NormOracle sup_norm(const WeightSpec& spec, const Cube& q, int sample_points_per_axis,
                           const QuadratureOptions& opts = {})
{
    return sup_norm(MatrixField{spec, 1.0}, q, sample_points_per_axis, opts);
}

/// [rho^*]_{p',Q}: the average with exponent p' of the pointwise dual metric
/// |W^{-1/p}(z) x|, or its ess sup when p = 1.
inline NormOracle dual_avg_norm(const WeightSpec& spec, double p, const Cube& q, int resolution,
                                const QuadratureOptions& opts = {})
{
    MatrixField dual_field{spec, -1.0 / p};
    if (p == 1.0)
        return sup_norm(dual_field, q, resolution, opts);
    return avg_norm(dual_field, conjugate_exponent(p), q, resolution, opts);
}

////////////////////////////////////////////////////////////////////////////////
//
// dual norms
//
////////////////////////////////////////////////////////////////////////////////

struct DualNormValue {
    double value = 0.0;    // certified lower estimate of rho^*(x)
    double residual = 0.0; // simplex diameter when refinement stopped
};

/// Evaluates rho^*(x) = sup_y |<x,y>| / rho(y) for many x against one norm.
/// The coarse sphere table (rho on a fixed direction sample) is built once.
class DualNormSolver {
public:
    explicit DualNormSolver(NormOracle rho, int coarse_points = 2000, double step_tol = 1e-8)
        : rho_(std::move(rho)), step_tol_(step_tol)
    {
        if (rho_.is_ellipsoidal()) {
            inverse_ = rho_.ellipsoid_matrix().inverse();
            return;
        }
        if (rho_.dim() == 1) {
            unit_value_ = rho_(CVec::Ones(1));
            return;
        }
        directions_ = projective_samples(rho_.dim(), coarse_points);
        inv_values_.reserve(directions_.size());
        for (const auto& y : directions_)
            inv_values_.push_back(1.0 / rho_(y));
    }

    DualNormValue evaluate(const CVec& x) const
    {
        if (inverse_)
            return {(*inverse_ * x).norm(), 0.0};
        if (rho_.dim() == 1)
            return {std::abs(x(0)) / unit_value_, 0.0};

        std::size_t best = 0;
        const double coarse = table_max(x, best);
        if (x.norm() == 0.0)
            return {0.0, 0.0};

        auto f = [&](const RVec& v) {
            const CVec y = from_real_chart(v);
            return std::abs(y.dot(x)) / rho_(y);
        };
        const auto refined = nelder_mead_max(f, to_real_chart(directions_[best]), 0.05, step_tol_);
        if (refined.value > 1.1 * coarse)
            throw RefinementStalled("dual norm refinement improved the coarse estimate by " +
                                    std::to_string(refined.value / coarse - 1.0));
        return {std::max(coarse, refined.value), refined.final_step};
    }

    double operator()(const CVec& x) const { return evaluate(x).value; }

    /// Table maximum only: a lower estimate of rho^*(x) without refinement.
    double coarse(const CVec& x) const
    {
        if (inverse_ || rho_.dim() == 1)
            return evaluate(x).value;
        std::size_t best = 0;
        return table_max(x, best);
    }

    const NormOracle& norm() const { return rho_; }

private:
    double table_max(const CVec& x, std::size_t& best) const
    {
        double top = -1.0;
        for (std::size_t k = 0; k < directions_.size(); ++k) {
            const double v = std::abs(directions_[k].dot(x)) * inv_values_[k];
            if (v > top) {
                top = v;
                best = k;
            }
        }
        return top;
    }

    NormOracle rho_;
    double step_tol_;
    std::optional<CMat> inverse_;
    double unit_value_ = 1.0;
    std::vector<CVec> directions_;
    std::vector<double> inv_values_;
};

inline DualNormValue dual_norm_value(const NormOracle& rho, const CVec& x) { return DualNormSolver(rho).evaluate(x); }

/// rho^*(x) = sup_{y != 0} |<x,y>| / rho(y)
inline double dual_norm(const NormOracle& rho, const CVec& x) { return dual_norm_value(rho, x).value; }

/// The dual norm rho^* as a NormOracle of its own.
inline NormOracle dual_oracle(const NormOracle& rho, int coarse_points = 2000)
{
    if (rho.is_ellipsoidal())
        return NormOracle::ellipsoidal(rho.ellipsoid_matrix().inverse(), NormTag::dual);
    auto solver = std::make_shared<DualNormSolver>(rho, coarse_points);
    return NormOracle(rho.dim(), NormTag::dual, [solver](const CVec& x) { return (*solver)(x); });
}

} // namespace mwfock
