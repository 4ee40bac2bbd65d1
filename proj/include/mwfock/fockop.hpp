#pragma once

// Fock-space operators on a truncated midpoint grid of C^n = R^{2n}:
// the Bergman-type projection P_alpha, its maximal weighted version, the
// localised rank-d projections, weighted L^p norms, and the two-sided
// operator-norm bounds.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "apr.hpp"
#include "parallel.hpp"
#include "reduce.hpp"
#include "sampling.hpp"

namespace mwfock {

////////////////////////////////////////////////////////////////////////////////
//
// Grid
//
////////////////////////////////////////////////////////////////////////////////

/// Tensor midpoint grid of step h on [-T, T]^{2n}.  Node i has axis indices
/// given by the base-(2T/h) digits of i, first real coordinate fastest.
class QuadratureGrid {
public:
    QuadratureGrid(int n, double alpha, double halfwidth, double step, double tail_tolerance = 1e-10)
        : n_(n), alpha_(alpha), h_(step)
    {
        if (n < 1 || !(alpha > 0.0) || !(step > 0.0) || !(halfwidth > 0.0))
            throw InvalidSpec("grid needs n >= 1 and positive alpha, step, halfwidth");
        per_axis_ = static_cast<int>(std::ceil(2.0 * halfwidth / step - 1e-9));
        T_ = 0.5 * per_axis_ * step;
        if (tail_mass() > tail_tolerance)
            throw InvalidSpec("grid halfwidth " + std::to_string(T_) + " leaves Gaussian tail " +
                              std::to_string(tail_mass()));
        const double count = std::pow(static_cast<double>(per_axis_), 2.0 * n);
        if (count > 5e7)
            throw InvalidSpec("grid has too many nodes");

        const auto total = static_cast<std::size_t>(count);
        nodes_.reserve(total);
        cnodes_.resize(static_cast<Eigen::Index>(total), n);
        sq_.resize(static_cast<Eigen::Index>(total));
        std::vector<int> idx(2 * n, 0);
        for (std::size_t i = 0; i < total; ++i) {
            Point z(2 * n);
            for (int k = 0; k < 2 * n; ++k)
                z(k) = -T_ + (idx[k] + 0.5) * h_;
            for (int j = 0; j < n; ++j)
                cnodes_(static_cast<Eigen::Index>(i), j) = coord(z, j);
            sq_(static_cast<Eigen::Index>(i)) = z.squaredNorm();
            nodes_.push_back(std::move(z));
            for (int k = 0; k < 2 * n && ++idx[k] == per_axis_; ++k)
                idx[k] = 0;
        }
    }

    int ambient() const { return n_; }
    double alpha() const { return alpha_; }
    double halfwidth() const { return T_; }
    double step() const { return h_; }
    int per_axis() const { return per_axis_; }
    std::size_t size() const { return nodes_.size(); }
    double cell_measure() const { return std::pow(h_, 2.0 * n_); }

    /// (alpha/pi)^n h^{2n}: the mass of one cell under dlambda_alpha without
    /// the Gaussian factor.
    double lambda_cell() const { return std::pow(alpha_ / pi, n_) * cell_measure(); }

    /// (alpha/pi)^n times the Gaussian integral outside [-T, T]^{2n}.
    double tail_mass() const
    {
        const double e = std::erfc(std::sqrt(alpha_) * T_);
        return -std::expm1(2.0 * n_ * std::log1p(-e));
    }

    const std::vector<Point>& nodes() const { return nodes_; }
    const Point& node(std::size_t i) const { return nodes_[i]; }
    /// Complex coordinates, one row per node.
    const CMat& complex_nodes() const { return cnodes_; }
    /// |z|^2 per node.
    const RVec& sq_norms() const { return sq_; }

    /// All coordinates within `fraction` of the halfwidth.
    bool is_interior(std::size_t i, double fraction = 0.5) const
    {
        return nodes_[i].cwiseAbs().maxCoeff() <= fraction * T_;
    }

    std::vector<std::size_t> nodes_in(const Cube& q) const
    {
        if (q.ambient() != n_)
            throw InvalidSpec("cube dimension does not match the grid");
        for (int k = 0; k < 2 * n_; ++k)
            if (q.lo(k) < -T_ - 1e-12 || q.hi(k) > T_ + 1e-12)
                throw CubeOutsideGrid("cube leaves the grid [-" + std::to_string(T_) + ", " + std::to_string(T_) +
                                      "]");
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (q.contains(nodes_[i]))
                out.push_back(i);
        return out;
    }

private:
    int n_;
    double alpha_, T_ = 0.0, h_;
    int per_axis_ = 0;
    std::vector<Point> nodes_;
    CMat cnodes_;
    RVec sq_;
};

using GridPtr = std::shared_ptr<const QuadratureGrid>;

inline GridPtr make_grid(int n, double alpha, double halfwidth, double step, double tail_tolerance = 1e-10)
{
    return std::make_shared<const QuadratureGrid>(n, alpha, halfwidth, step, tail_tolerance);
}

/// T = max(6/sqrt(alpha), 2 region), h = min(0.1, r/10).
inline GridPtr default_grid(int n, double alpha, double r, double region = 0.0)
{
    return make_grid(n, alpha, std::max(6.0 / std::sqrt(alpha), 2.0 * region), std::min(0.1, r / 10.0));
}

/// C^d-valued function sampled at the grid nodes (one row per node).
struct GridFunction {
    GridPtr grid;
    CMat values;

    int dim() const { return static_cast<int>(values.cols()); }
    std::size_t size() const { return static_cast<std::size_t>(values.rows()); }

    static GridFunction zeros(GridPtr g, int d)
    {
        const auto rows = static_cast<Eigen::Index>(g->size());
        return {std::move(g), CMat::Zero(rows, d)};
    }

    static GridFunction sample(GridPtr g, int d, const std::function<CVec(const Point&)>& fn)
    {
        auto f = zeros(std::move(g), d);
        for (std::size_t i = 0; i < f.size(); ++i)
            f.values.row(static_cast<Eigen::Index>(i)) = fn(f.grid->node(i)).transpose();
        if (!f.values.allFinite())
            throw NumericalBreakdown("grid function has non-finite entries");
        return f;
    }
};

/// Node coordinates then re/im of every component, %.17g.
inline void write_csv(std::ostream& os, const GridFunction& f)
{
    const int dim = 2 * f.grid->ambient();
    for (int k = 0; k < dim / 2; ++k)
        os << "x" << k + 1 << ",y" << k + 1 << ",";
    for (int c = 0; c < f.dim(); ++c)
        os << "re" << c + 1 << ",im" << c + 1 << (c + 1 < f.dim() ? "," : "\n");
    char buf[32];
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto& z = f.grid->node(i);
        for (int k = 0; k < dim; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,", z(k));
            os << buf;
        }
        for (int c = 0; c < f.dim(); ++c) {
            const cplx v = f.values(static_cast<Eigen::Index>(i), c);
            std::snprintf(buf, sizeof buf, "%.17g,", v.real());
            os << buf;
            std::snprintf(buf, sizeof buf, "%.17g", v.imag());
            os << buf << (c + 1 < f.dim() ? "," : "\n");
        }
    }
}

////////////////////////////////////////////////////////////////////////////////
//
// Kernels
//
////////////////////////////////////////////////////////////////////////////////

inline CVec complex_point(const Point& z)
{
    CVec v(z.size() / 2);
    for (int j = 0; j < v.size(); ++j)
        v(j) = coord(z, j);
    return v;
}

/// K_z(u) = e^{alpha <u, z>}, <u, z> = sum u_i conj(z_i).
inline cplx kernel(double alpha, const CVec& z, const CVec& u)
{
    if (alpha * u.norm() * z.norm() > 700.0)
        throw OverflowGuard("kernel exponent exceeds the double range");
    return std::exp(alpha * (u.transpose() * z.conjugate())(0));
}

/// k_u(z) = e^{alpha <z, u> - alpha |u|^2 / 2}, unit norm in F^2_alpha.
inline cplx normalized_kernel(double alpha, const CVec& u, const CVec& z)
{
    const cplx e = alpha * (z.transpose() * u.conjugate())(0) - 0.5 * alpha * u.squaredNorm();
    if (e.real() > 700.0)
        throw OverflowGuard("normalized kernel exponent exceeds the double range");
    return std::exp(e);
}

/// c_{alpha,u,r} = (alpha/pi)^n int_{Q_r(u)} e^{-alpha |z-u|^2} dv = erf(sqrt(alpha) r / 2)^{2n}.
inline double localization_constant(double alpha, double r, int n)
{
    return std::pow(std::erf(0.5 * std::sqrt(alpha) * r), 2.0 * n);
}

/// (alpha r^2 / pi)^n e^{-n alpha r^2 / 2}, a lower bound for c_{alpha,u,r}.
inline double localization_constant_lower(double alpha, double r, int n)
{
    return std::pow(alpha * r * r / pi, n) * std::exp(-0.5 * n * alpha * r * r);
}

/// Midpoint value of c_{alpha,u,r} on the grid.
inline double discrete_localization_constant(const QuadratureGrid& g, const Point& u, double r)
{
    double acc = 0.0;
    for (auto i : g.nodes_in(Cube(u, r)))
        acc += std::exp(-g.alpha() * (g.node(i) - u).squaredNorm());
    return g.lambda_cell() * acc;
}

/// (alpha r^2/pi)^n e^{-n alpha r^2} apr^{1/2}.
inline double theorem_lower_bound(double apr, double alpha, double p, double r, int n)
{
    (void)p;
    if (!(apr >= 1.0 - 1e-12))
        throw InvalidSpec("apr must be at least 1");
    return std::pow(alpha * r * r / pi, n) * std::exp(-n * alpha * r * r) * std::sqrt(apr);
}

struct RadiusChoice {
    double r = 0.0;
    double value = 0.0;
};

/// Best theorem_lower_bound over a log grid of radii in [r_lo, r_hi].
inline RadiusChoice best_theorem_lower_bound(const std::function<double(double)>& apr_of_r, double alpha, double p,
                                             int n, double r_lo = 0.2, double r_hi = 3.0, int count = 15)
{
    RadiusChoice best;
    for (int i = 0; i < count; ++i) {
        const double r = r_lo * std::pow(r_hi / r_lo, count > 1 ? double(i) / (count - 1) : 0.0);
        const double v = theorem_lower_bound(apr_of_r(r), alpha, p, r, n);
        if (v > best.value)
            best = {r, v};
    }
    return best;
}

namespace detail {

inline void check_alpha(double alpha, const QuadratureGrid& g)
{
    if (std::abs(alpha - g.alpha()) > 1e-12 * alpha)
        throw InvalidSpec("alpha does not match the grid");
}

/// W^t at every node.
inline std::vector<CMat> weight_table(const WeightSpec& spec, const QuadratureGrid& g, double t)
{
    if (spec.ambient() != g.ambient())
        throw InvalidSpec("weight and grid have different ambient dimension");
    std::vector<CMat> out;
    out.reserve(g.size());
    for (const auto& z : g.nodes())
        out.push_back(spec.power_at(z, t));
    return out;
}

/// Monomials Phi_k(z) = prod_j (sqrt(alpha) z_j)^{k_j} / sqrt(k_j!) for every
/// multi-index with k_j < terms_per_axis, so that
/// e^{alpha <z, u>} = sum_k Phi_k(z) conj(Phi_k(u)).  The per-axis cutoff
/// leaves a Poisson(alpha |z_j|^2) tail below 1e-16 at every node.
struct FockSeries {
    int terms_per_axis = 0;
    CMat phi; // nodes x terms

    explicit FockSeries(const QuadratureGrid& g)
    {
        const int n = g.ambient();
        const double mu = 2.0 * g.alpha() * g.halfwidth() * g.halfwidth();
        if (0.5 * g.alpha() * g.sq_norms().maxCoeff() > 700.0)
            throw OverflowGuard("series terms exceed the double range on this grid");
        terms_per_axis = static_cast<int>(std::ceil(mu + 10.0 * std::sqrt(mu) + 25.0));
        const double terms = std::pow(static_cast<double>(terms_per_axis), n);
        if (terms * static_cast<double>(g.size()) > 6e7)
            throw InvalidSpec("grid too large for the series factorisation");

        const auto rows = static_cast<Eigen::Index>(g.size());
        const int K = terms_per_axis;
        std::vector<CMat> axis(n, CMat(rows, K));
        const double sa = std::sqrt(g.alpha());
        for (int j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) {
                const cplx w = sa * g.complex_nodes()(i, j);
                cplx v = 1.0;
                for (int k = 0; k < K; ++k) {
                    axis[j](i, k) = v;
                    v *= w / std::sqrt(k + 1.0);
                }
            }
        phi = axis[0];
        for (int j = 1; j < n; ++j) {
            CMat next(rows, phi.cols() * K);
            for (Eigen::Index a = 0; a < phi.cols(); ++a)
                for (int k = 0; k < K; ++k)
                    next.col(a * K + k) = phi.col(a).cwiseProduct(axis[j].col(k));
            phi = std::move(next);
        }
    }

    Eigen::Index terms() const { return phi.cols(); }
};

} // namespace detail

////////////////////////////////////////////////////////////////////////////////
//
// Operators
//
////////////////////////////////////////////////////////////////////////////////

/// P_alpha f(z) = (alpha/pi)^n h^{2n} sum_u f(u) conj(K_z(u)) e^{-alpha |u|^2},
/// summed through the monomial factorisation of the kernel.
inline GridFunction apply_projection(double alpha, const GridFunction& f)
{
    const auto& g = *f.grid;
    detail::check_alpha(alpha, g);
    const detail::FockSeries series(g);
    const RVec gauss = (-alpha * g.sq_norms().array()).exp().matrix();
    const CMat coeff = series.phi.adjoint() * (gauss.asDiagonal() * f.values);
    return {f.grid, g.lambda_cell() * (series.phi * coeff)};
}

/// Same sum evaluated kernel by kernel.
inline GridFunction apply_projection_direct(double alpha, const GridFunction& f, int threads = 1)
{
    const auto& g = *f.grid;
    detail::check_alpha(alpha, g);
    auto out = GridFunction::zeros(f.grid, f.dim());
    const RVec gauss = (-alpha * g.sq_norms().array()).exp().matrix();
    const CMat weighted = gauss.asDiagonal() * f.values;
    const CMat& zc = g.complex_nodes();
    parallel_for(g.size(), threads, [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        // conj(K_z(u)) = e^{alpha sum_j z_j conj(u_j)}
        const CVec e = (alpha * (zc.conjugate() * zc.row(row).transpose())).array().exp().matrix();
        out.values.row(row) = g.lambda_cell() * (e.transpose() * weighted);
    });
    return out;
}

/// P+_{alpha,W} f(z) = int |W^{1/p}(z) W^{-1/p}(u) f(u)| |K_z(u)| dlambda_alpha(u).
inline GridFunction apply_maximal(const WeightSpec& spec, double p, double alpha, const GridFunction& f,
                                  int threads = 1)
{
    const auto& g = *f.grid;
    detail::check_alpha(alpha, g);
    if (f.dim() != spec.dim())
        throw InvalidSpec("function and weight have different dimension");
    if (!(p >= 1.0))
        throw InvalidSpec("p must be at least 1");
    if (0.25 * alpha * g.sq_norms().maxCoeff() > 700.0)
        throw OverflowGuard("maximal kernel exceeds the double range");

    const auto N = static_cast<Eigen::Index>(g.size());
    RMat x(N, 2 * g.ambient());
    for (Eigen::Index i = 0; i < N; ++i)
        x.row(i) = g.node(static_cast<std::size_t>(i)).transpose();

    // v(u) = W^{-1/p}(u) f(u), one row per node
    CMat v = f.values;
    std::vector<CMat> left;
    if (!spec.is_constant()) {
        const auto inv = detail::weight_table(spec, g, -1.0 / p);
        for (Eigen::Index i = 0; i < N; ++i)
            v.row(i) = (inv[static_cast<std::size_t>(i)] * f.values.row(i).transpose()).transpose();
        left = detail::weight_table(spec, g, 1.0 / p);
    }
    const RVec vnorm = v.rowwise().norm();

    auto out = GridFunction::zeros(f.grid, 1);
    parallel_for(g.size(), threads, [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        // |K_z(u)| e^{-alpha|u|^2} = e^{alpha u.z - alpha |u|^2}
        const RVec e = (alpha * (x * x.row(row).transpose() - g.sq_norms())).array().exp().matrix();
        double acc;
        if (left.empty())
            acc = e.dot(vnorm);
        else
            acc = e.dot((v * left[i].transpose()).rowwise().norm());
        out.values(row, 0) = g.lambda_cell() * acc;
    });
    return out;
}

/// chi_Q k_u int_Q f conj(k_u) dlambda_alpha with Q = Q_r(u).
inline GridFunction apply_localized(double alpha, const Point& u_center, double r, const GridFunction& f)
{
    const auto& g = *f.grid;
    detail::check_alpha(alpha, g);
    const auto inside = g.nodes_in(Cube(u_center, r));
    const CVec u = complex_point(u_center);
    std::vector<cplx> ku;
    CVec coeff = CVec::Zero(f.dim());
    for (auto i : inside) {
        const cplx k = normalized_kernel(alpha, u, g.complex_nodes().row(static_cast<Eigen::Index>(i)).transpose());
        ku.push_back(k);
        coeff += std::conj(k) * std::exp(-alpha * g.sq_norms()(static_cast<Eigen::Index>(i))) *
                 f.values.row(static_cast<Eigen::Index>(i)).transpose();
    }
    coeff *= g.lambda_cell();
    auto out = GridFunction::zeros(f.grid, f.dim());
    for (std::size_t j = 0; j < inside.size(); ++j)
        out.values.row(static_cast<Eigen::Index>(inside[j])) = (ku[j] * coeff).transpose();
    return out;
}

/// <f, g>_alpha = int <f, g> e^{-alpha |z|^2} dv on the grid.
inline cplx fock_pairing(const GridFunction& f, const GridFunction& h)
{
    const auto& g = *f.grid;
    const RVec gauss = (-g.alpha() * g.sq_norms().array()).exp().matrix();
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < f.values.rows(); ++i)
        acc += gauss(i) * h.values.row(i).dot(f.values.row(i));
    return g.cell_measure() * acc;
}

namespace detail {

// Norm against a precomputed table of W^{1/p} (or W for p = inf).
inline double weighted_norm(const std::vector<CMat>& table, bool constant, double p, const GridFunction& f)
{
    const auto& g = *f.grid;
    const int n = g.ambient();
    auto value = [&](Eigen::Index i) {
        const CVec x = f.values.row(i).transpose();
        return constant ? (table.front() * x).norm() : (table[static_cast<std::size_t>(i)] * x).norm();
    };
    if (std::isinf(p)) {
        double m = 0.0;
        for (Eigen::Index i = 0; i < f.values.rows(); ++i)
            m = std::max(m, value(i) * std::exp(-0.5 * g.alpha() * g.sq_norms()(i)));
        return m;
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.values.rows(); ++i) {
        const double v = value(i);
        if (v > 0.0)
            acc += std::exp(p * std::log(v) - 0.5 * p * g.alpha() * g.sq_norms()(i));
    }
    return std::pow(std::pow(p * g.alpha() / (2.0 * pi), n) * g.cell_measure() * acc, 1.0 / p);
}

inline std::vector<CMat> norm_table(const WeightSpec& spec, const QuadratureGrid& g, double p)
{
    const double t = std::isinf(p) ? 1.0 : 1.0 / p;
    if (spec.is_constant())
        return {spec.power_at(g.node(0), t)};
    return weight_table(spec, g, t);
}

} // namespace detail

/// (int |W^{1/p} f|^p e^{-p alpha |z|^2 / 2} dv)^{1/p}, normalised by
/// (p alpha / 2 pi)^{n/p} so that the constant 1 has norm 1 for W = I;
/// p = inf gives sup |W f| e^{-alpha |z|^2 / 2}.
inline double weighted_lp_norm(const WeightSpec& spec, double p, double alpha, const GridFunction& f)
{
    detail::check_alpha(alpha, *f.grid);
    if (!(p >= 1.0))
        throw InvalidSpec("p must be at least 1");
    return detail::weighted_norm(detail::norm_table(spec, *f.grid, p), spec.is_constant(), p, f);
}

////////////////////////////////////////////////////////////////////////////////
//
// p = 2 operator norms
//
////////////////////////////////////////////////////////////////////////////////

struct PowerIterationOptions {
    double tolerance = 1e-8;
    int max_iterations = 10000;
    std::uint64_t seed = 0x5eedULL;
};

/// Largest eigenvalue of a Hermitian PSD matrix.  The iteration runs on
/// H^{2^squarings} (rescaled after every squaring) so that clusters of
/// eigenvalues just below the top separate; the value returned is the
/// Rayleigh quotient of H at the converged vector.
inline double power_iteration(const CMat& h, const PowerIterationOptions& opts = {}, int squarings = -1)
{
    if (squarings < 0)
        squarings = h.rows() <= 800 ? 10 : 4;
    CMat b = h;
    for (int i = 0; i < squarings; ++i) {
        const double scale = b.norm();
        if (scale == 0.0)
            return 0.0;
        b = (b / scale).eval();
        b = (b * b).eval();
        b = 0.5 * (b + b.adjoint()).eval();
    }

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal;
    CVec v(h.rows());
    for (auto& c : v)
        c = {normal(rng), normal(rng)};
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const CVec w = b * v;
        const double next = w.norm();
        if (next == 0.0)
            return 0.0;
        v = w / next;
        if (std::abs(next - lambda) <= opts.tolerance * next)
            return v.dot(h * v).real();
        lambda = next;
    }
    throw PowerIterationStall("power iteration did not settle in " + std::to_string(opts.max_iterations) +
                              " steps");
}

namespace detail {

// |s U V^*| with Gram matrices Gu = U^*U, Gv = V^*V.
inline double factored_norm(double s, const CMat& gu, const CMat& gv, const PowerIterationOptions& opts)
{
    const CMat root = psd_sqrt(gv);
    CMat h = s * s * (root * gu * root);
    h = 0.5 * (h + h.adjoint()).eval();
    return std::sqrt(power_iteration(h, opts));
}

} // namespace detail

/// Norm of P_alpha on the discretised L^2_{alpha,W}.  In the coordinates
/// g = sqrt(cell) e^{-alpha|z|^2/2} W^{1/2} f the operator is s U V^* with
/// U = [psi_k(z) W^{1/2}(z)], V = [psi_k(u) W^{-1/2}(u)] and
/// psi_k = Phi_k e^{-alpha|z|^2/2}, so only the (terms d)^2 Gram matrices are
/// formed.
inline double projection_norm_p2(const WeightSpec& spec, double alpha, const QuadratureGrid& grid,
                                 const PowerIterationOptions& opts = {})
{
    detail::check_alpha(alpha, grid);
    const int d = spec.dim();
    const detail::FockSeries series(grid);
    const Eigen::Index M = series.terms();
    if (M * d > 4000)
        throw InvalidSpec("series too long for the p = 2 norm on this grid");

    const RVec gauss = (-alpha * grid.sq_norms().array()).exp().matrix();
    const auto w = detail::weight_table(spec, grid, 1.0);
    const auto winv = detail::weight_table(spec, grid, -1.0);
    CMat gu(M * d, M * d), gv(M * d, M * d);
    CVec cdiag(gauss.size());
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            for (Eigen::Index k = 0; k < gauss.size(); ++k)
                cdiag(k) = gauss(k) * w[static_cast<std::size_t>(k)](i, j);
            CMat block = series.phi.adjoint() * (cdiag.asDiagonal() * series.phi);
            gu.block(i * M, j * M, M, M) = block;
            gu.block(j * M, i * M, M, M) = block.adjoint();
            for (Eigen::Index k = 0; k < gauss.size(); ++k)
                cdiag(k) = gauss(k) * winv[static_cast<std::size_t>(k)](i, j);
            block = series.phi.adjoint() * (cdiag.asDiagonal() * series.phi);
            gv.block(i * M, j * M, M, M) = block;
            gv.block(j * M, i * M, M, M) = block.adjoint();
        }
    return detail::factored_norm(grid.lambda_cell(), gu, gv, opts);
}

/// Norm of P_{alpha,u,r} on the discretised L^2_{alpha,W}.  The operator has
/// rank d: s a(z) W^{1/2}(z) sum_u conj(b(u)) W^{-1/2}(u) with
/// |a|^2 = |b|^2 = e^{-alpha |z-u|^2} on Q_r(u).
inline double localized_norm_p2(const WeightSpec& spec, double alpha, const Point& u, double r,
                                const QuadratureGrid& grid, const PowerIterationOptions& opts = {})
{
    detail::check_alpha(alpha, grid);
    const int d = spec.dim();
    CMat gu = CMat::Zero(d, d), gv = CMat::Zero(d, d);
    for (auto i : grid.nodes_in(Cube(u, r))) {
        const double e = std::exp(-alpha * (grid.node(i) - u).squaredNorm());
        gu += e * spec.power_at(grid.node(i), 1.0);
        gv += e * spec.power_at(grid.node(i), -1.0);
    }
    return detail::factored_norm(grid.lambda_cell(), gu, gv, opts);
}

/// ||P_{alpha,u,r}|| <= e^{n alpha r^2 / 2} ||P_alpha|| at p = 2, with 1% slack.
inline InequalityCheck localization_bound_check(const WeightSpec& spec, double p, double alpha, const Point& u,
                                                double r, const QuadratureGrid& grid, double projection_norm)
{
    if (p != 2.0)
        throw InvalidSpec("localization_bound_check needs p = 2");
    const double lhs = localized_norm_p2(spec, alpha, u, r, grid);
    const double rhs = std::exp(0.5 * grid.ambient() * alpha * r * r) * projection_norm;
    return make_check(lhs, rhs, 1e-2);
}

inline InequalityCheck localization_bound_check(const WeightSpec& spec, double p, double alpha, const Point& u,
                                                double r, const QuadratureGrid& grid)
{
    if (p != 2.0)
        throw InvalidSpec("localization_bound_check needs p = 2");
    return localization_bound_check(spec, p, alpha, u, r, grid, projection_norm_p2(spec, alpha, grid));
}

////////////////////////////////////////////////////////////////////////////////
//
// Lower bound at any p
//
////////////////////////////////////////////////////////////////////////////////

struct LowerBoundOptions {
    int directions = 8;    // sphere samples x per center (d > 1)
    int random_tests = 16; // random kernel combinations
    std::uint64_t seed = 0x10e7ULL;
};

/// max |P_alpha f| / |f| in L^p_{alpha,W} over f = chi_{Q_r(u)} k_u x,
/// f = k_u x, f = W^{-1/p} k_u x and seeded combinations of localised kernels.
inline double projection_norm_lower(const WeightSpec& spec, double p, double alpha, double r, GridPtr grid,
                                    const std::vector<Point>& test_centers, const LowerBoundOptions& opts = {})
{
    const auto& g = *grid;
    detail::check_alpha(alpha, g);
    if (test_centers.empty())
        throw InvalidSpec("projection_norm_lower needs at least one test center");
    const int d = spec.dim();
    const auto table = detail::norm_table(spec, g, p);
    const auto inv = spec.is_constant() ? std::vector<CMat>{} : detail::weight_table(spec, g, -1.0 / p);
    const detail::FockSeries series(g);
    const RVec gauss = (-alpha * g.sq_norms().array()).exp().matrix();

    double best = 0.0;
    auto consider = [&](const GridFunction& f) {
        const double den = detail::weighted_norm(table, spec.is_constant(), p, f);
        if (!(den > 0.0))
            return;
        const CMat coeff = series.phi.adjoint() * (gauss.asDiagonal() * f.values);
        const GridFunction pf{grid, g.lambda_cell() * (series.phi * coeff)};
        best = std::max(best, detail::weighted_norm(table, spec.is_constant(), p, pf) / den);
    };
    auto kernel_column = [&](const Point& u) {
        const CVec uc = complex_point(u);
        CVec k(static_cast<Eigen::Index>(g.size()));
        for (Eigen::Index i = 0; i < k.size(); ++i)
            k(i) = normalized_kernel(alpha, uc, g.complex_nodes().row(i).transpose());
        return k;
    };
    const auto dirs = d == 1 ? std::vector<CVec>{CVec::Ones(1)} : projective_samples(d, opts.directions, opts.seed);

    std::vector<std::vector<std::size_t>> cube_nodes;
    std::vector<CVec> kernels;
    for (const auto& u : test_centers) {
        cube_nodes.push_back(g.nodes_in(Cube(u, r)));
        kernels.push_back(kernel_column(u));
        const CVec& k = kernels.back();
        for (const auto& x : dirs) {
            auto local = GridFunction::zeros(grid, d);
            for (auto i : cube_nodes.back())
                local.values.row(static_cast<Eigen::Index>(i)) = (k(static_cast<Eigen::Index>(i)) * x).transpose();
            consider(local);
            consider({grid, k * x.transpose()});
            if (!inv.empty()) {
                auto tilted = GridFunction::zeros(grid, d);
                for (Eigen::Index i = 0; i < k.size(); ++i)
                    tilted.values.row(i) = (k(i) * (inv[static_cast<std::size_t>(i)] * x)).transpose();
                consider(tilted);
            }
        }
    }

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> pick(0, test_centers.size() - 1);
    for (int t = 0; t < opts.random_tests; ++t) {
        auto f = GridFunction::zeros(grid, d);
        for (int term = 0; term < 3; ++term) {
            const std::size_t c = pick(rng);
            CVec x(d);
            for (auto& e : x)
                e = {normal(rng), normal(rng)};
            const cplx weight{normal(rng), normal(rng)};
            for (auto i : cube_nodes[c])
                f.values.row(static_cast<Eigen::Index>(i)) +=
                    (weight * kernels[c](static_cast<Eigen::Index>(i)) * x).transpose();
        }
        consider(f);
    }
    return best;
}

////////////////////////////////////////////////////////////////////////////////
//
// Constructive upper bound for the maximal operator
//
////////////////////////////////////////////////////////////////////////////////

enum class UpperReducer {
    automatic,     // exact at p = 2 and d = 1, MVEE otherwise
    power_average, // (avg_Q W^{2/p})^{1/2}
};

struct UpperBoundOptions {
    UpperReducer reducer = UpperReducer::automatic;
    double relative_tolerance = 1e-12; // shell truncation
    int max_shells = 400;
    QuadratureOptions quadrature;
};

struct UpperBoundReport {
    double value = 0.0;
    double covering = 0.0;  // (alpha/pi)^n e^{alpha n r^2}
    double theta = 0.0;     // sum_{m in r Z^{2n}} e^{-alpha |m|^2 / 4}
    double first = 0.0;     // sup_nu' A^p (p > 1) or the p = 1 supremum
    double second = 0.0;    // sup_nu sum_nu' G B^{p'} (p > 1)
    int shells = 0;         // deepest shell summed
    std::size_t cells = 0;  // lattice cells over which the suprema run
};

namespace detail {

class UpperBoundEngine {
public:
    UpperBoundEngine(const WeightSpec& spec, double p, double alpha, double r, int resolution,
                     const UpperBoundOptions& opts)
        : spec_(spec), p_(p), alpha_(alpha), r_(r), res_(resolution), opts_(opts), dim_(2 * spec.ambient())
    {
    }

    using Index = std::vector<long>;

    Point center(const Index& k) const
    {
        Point c(dim_);
        for (int i = 0; i < dim_; ++i)
            c(i) = r_ * static_cast<double>(k[static_cast<std::size_t>(i)]);
        return c;
    }

    double gaussian(const Index& a, const Index& b) const
    {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double t = r_ * static_cast<double>(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
            s += t * t;
        }
        return std::exp(-0.25 * alpha_ * s);
    }

    /// R and R^{-1} for the cell.
    const std::pair<CMat, CMat>& reducer(const Index& k)
    {
        auto it = reducers_.find(k);
        if (it != reducers_.end())
            return it->second;
        const Cube q(center(k), r_);
        CMat r;
        if (opts_.reducer == UpperReducer::power_average)
            r = exact_reducer_p2(spec_, q, res_, 2.0 / p_, opts_.quadrature).mat();
        else if (p_ == 2.0)
            r = exact_reducer_p2(spec_, q, res_, 1.0, opts_.quadrature).mat();
        else
            r = primal_reducer(spec_, p_, q, res_, opts_.quadrature).mat();
        const CMat rinv = HermitianPD(r).power_matrix(-1.0);
        return reducers_.emplace(k, std::make_pair(r, rinv)).first->second;
    }

    struct CellRule {
        std::vector<CMat> forward; // W^{1/p} at the nodes
        std::vector<CMat> inverse; // W^{-1/p}
        std::vector<double> weights; // sum to |Q|
        std::vector<CMat> sup_inverse; // W^{-1} at sup samples (p = 1)
    };

    const CellRule& rule(const Index& k)
    {
        auto it = rules_.find(k);
        if (it != rules_.end())
            return it->second;
        const Cube q(center(k), r_);
        CellRule cell;
        const auto ar = cube_rule(spec_, q, res_);
        for (std::size_t i = 0; i < ar.nodes.size(); ++i) {
            cell.forward.push_back(spec_.power_at(ar.nodes[i], 1.0 / p_));
            cell.inverse.push_back(spec_.power_at(ar.nodes[i], -1.0 / p_));
            cell.weights.push_back(ar.weights[i] * q.volume());
        }
        if (p_ == 1.0)
            for (const auto& s : sup_samples(spec_, q, 2 * res_))
                cell.sup_inverse.push_back(spec_.power_at(s.z, -1.0));
        return rules_.emplace(k, std::move(cell)).first->second;
    }

    /// A_nu' = (int_Q |R W^{-1/p}|^{p'})^{1/p'}, or the ess sup when p = 1.
    double a_term(const Index& k)
    {
        const CMat& r = reducer(k).first;
        const auto& cell = rule(k);
        if (p_ == 1.0) {
            double m = 0.0;
            for (const auto& w : cell.sup_inverse)
                m = std::max(m, operator_norm(r * w));
            return m;
        }
        const double q = conjugate_exponent(p_);
        double acc = 0.0;
        for (std::size_t i = 0; i < cell.weights.size(); ++i)
            acc += cell.weights[i] * std::pow(operator_norm(r * cell.inverse[i]), q);
        return std::pow(acc, 1.0 / q);
    }

    /// B_{nu nu'}^p = int_{Q_nu} |W^{1/p}(z) R_{nu'}^{-1}|^p.
    double b_power(const Index& z_cell, const Index& r_cell)
    {
        const CMat& rinv = reducer(r_cell).second;
        const auto& cell = rule(z_cell);
        double acc = 0.0;
        for (std::size_t i = 0; i < cell.weights.size(); ++i)
            acc += cell.weights[i] * std::pow(operator_norm(cell.forward[i] * rinv), p_);
        return acc;
    }

    /// sum over the lattice of term(other) by Chebyshev shells around `base`.
    double shell_sum(const Index& base, const std::function<double(const Index&)>& term, int& shells)
    {
        double total = 0.0, previous = -1.0;
        int growth = 0;
        for (int s = 0;; ++s) {
            if (s > opts_.max_shells)
                throw SeriesDiverging("lattice series not settled after " + std::to_string(opts_.max_shells) +
                                      " shells");
            double shell = 0.0;
            for_shell(base, s, [&](const Index& k) { shell += gaussian(base, k) * term(k); });
            if (!std::isfinite(shell))
                throw SeriesDiverging("lattice series overflowed");
            total += shell;
            shells = std::max(shells, s);
            if (s > 0 && shell <= opts_.relative_tolerance * total)
                return total;
            const double decay = std::exp(-0.25 * alpha_ * r_ * r_ * s * s);
            growth = (s > 0 && decay < 1e-6 && shell > previous) ? growth + 1 : 0;
            if (growth >= 3)
                throw SeriesDiverging("lattice shells grew three times in a row");
            previous = shell;
        }
    }

    /// Cells of the supremum: the origin when the quantities are translation
    /// invariant, otherwise every lattice cell center in [-region, region]^{2n}.
    std::vector<Index> sup_cells(double region) const
    {
        if (spec_.is_constant() || spec_.kind() == WeightKind::scalar_exp)
            return {Index(static_cast<std::size_t>(dim_), 0)};
        const auto kmax = static_cast<long>(std::floor(region / r_ + 1e-9));
        std::vector<Index> out;
        Index k(static_cast<std::size_t>(dim_), -kmax);
        while (true) {
            out.push_back(k);
            int i = 0;
            while (i < dim_ && ++k[static_cast<std::size_t>(i)] > kmax) {
                k[static_cast<std::size_t>(i)] = -kmax;
                ++i;
            }
            if (i == dim_)
                break;
        }
        return out;
    }

private:
    template <typename F>
    void for_shell(const Index& base, int s, F&& fn) const
    {
        Index off(static_cast<std::size_t>(dim_), -s);
        while (true) {
            long m = 0;
            for (auto v : off)
                m = std::max(m, std::abs(v));
            if (m == s) {
                Index k = base;
                for (int i = 0; i < dim_; ++i)
                    k[static_cast<std::size_t>(i)] += off[static_cast<std::size_t>(i)];
                fn(k);
            }
            int i = 0;
            while (i < dim_ && ++off[static_cast<std::size_t>(i)] > s) {
                off[static_cast<std::size_t>(i)] = -s;
                ++i;
            }
            if (i == dim_)
                break;
        }
    }

    const WeightSpec& spec_;
    double p_, alpha_, r_;
    int res_;
    UpperBoundOptions opts_;
    int dim_;
    std::map<Index, std::pair<CMat, CMat>> reducers_;
    std::map<Index, CellRule> rules_;
};

} // namespace detail

/// Explicit upper bound on |P+_{alpha,W}| over L^p_alpha(C^n; C^d).  Pairs the
/// lattice cells Q_nu, Q_nu' of side r, bounds
/// e^{-alpha|z-u|^2/2} <= e^{alpha n r^2} e^{-alpha|nu-nu'|^2/4} on each pair,
/// splits W^{1/p}(z) W^{-1/p}(u) through the reducing operator of Q_nu', and
/// applies Hoelder on cells and on the lattice:
///   p > 1: K (Theta sup A^p)^{1/p} (sup_nu sum_nu' G B^{p'})^{1/p'}
///   p = 1: K sup_nu' A_nu' sum_nu G B_{nu nu'}
/// with K = (alpha/pi)^n e^{alpha n r^2}.  Suprema over cells are taken on
/// [-region, region]^{2n}.
inline UpperBoundReport maximal_upper_bound_detail(const WeightSpec& spec, double p, double alpha, double r,
                                                   double region, int resolution, const UpperBoundOptions& opts = {})
{
    if (!(p >= 1.0) || std::isinf(p) || !(alpha > 0.0) || !(r > 0.0) || resolution < 1)
        throw InvalidSpec("maximal_upper_bound needs 1 <= p < inf, alpha > 0, r > 0");
    const int n = spec.ambient();
    detail::UpperBoundEngine eng(spec, p, alpha, r, resolution, opts);

    UpperBoundReport rep;
    rep.covering = std::pow(alpha / pi, n) * std::exp(alpha * n * r * r);
    double axis = 0.0;
    for (int k = 0;; ++k) {
        const double t = std::exp(-0.25 * alpha * r * r * k * k);
        axis += (k == 0 ? 1.0 : 2.0) * t;
        if (t < 1e-17 * axis)
            break;
    }
    rep.theta = std::pow(axis, 2 * n);

    const auto cells = eng.sup_cells(region);
    rep.cells = cells.size();
    if (p == 1.0) {
        for (const auto& nu_p : cells) {
            const double a = eng.a_term(nu_p);
            const double sum =
                eng.shell_sum(nu_p, [&](const detail::UpperBoundEngine::Index& nu) { return eng.b_power(nu, nu_p); },
                              rep.shells);
            rep.first = std::max(rep.first, a * sum);
        }
        rep.value = rep.covering * rep.first;
        return rep;
    }

    const double q = conjugate_exponent(p);
    for (const auto& nu_p : cells)
        rep.first = std::max(rep.first, std::pow(eng.a_term(nu_p), p));
    for (const auto& nu : cells) {
        const double sum = eng.shell_sum(
            nu, [&](const detail::UpperBoundEngine::Index& nu_p) { return std::pow(eng.b_power(nu, nu_p), q / p); },
            rep.shells);
        rep.second = std::max(rep.second, sum);
    }
    rep.value = rep.covering * std::pow(rep.theta * rep.first, 1.0 / p) * std::pow(rep.second, 1.0 / q);
    return rep;
}

inline double maximal_upper_bound(const WeightSpec& spec, double p, double alpha, double r, double region,
                                  int resolution, const UpperBoundOptions& opts = {})
{
    return maximal_upper_bound_detail(spec, p, alpha, r, region, resolution, opts).value;
}

} // namespace mwfock
