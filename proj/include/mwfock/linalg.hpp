#pragma once

//
// Matrix weights on C^n and the Hermitian functional calculus used by every
// other module.  Points of C^n are stored as real coordinate vectors
// (x1, y1, x2, y2, ..., xn, yn) with z_j = x_j + i*y_j.
//

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace mwfock {

using cplx  = std::complex<double>;
using CMat  = Eigen::MatrixXcd;
using CVec  = Eigen::VectorXcd;
using RVec  = Eigen::VectorXd;
using RMat  = Eigen::MatrixXd;
using Point = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;

// relative eigenvalue floor below which a matrix is not accepted as PD
inline constexpr double pd_tolerance = 1e-12;

/// Real-coordinate point with 2n entries, all zero.
inline Point origin(int n) { return Point::Zero(2 * n); }

inline cplx coord(const Point& z, int j) { return {z(2 * j), z(2 * j + 1)}; }

////////////////////////////////////////////////////////////////////////////////
//
// HermitianPD
//
////////////////////////////////////////////////////////////////////////////////

/// Hermitian positive-definite d x d matrix together with its spectral
/// decomposition, which is computed once on construction.
class HermitianPD {
public:
    HermitianPD() = default;

    explicit HermitianPD(const CMat& m)
    {
        if (m.rows() != m.cols() || m.rows() == 0)
            throw InvalidSpec("HermitianPD requires a non-empty square matrix");
        if (!m.allFinite())
            throw InvalidSpec("HermitianPD requires finite entries");

        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        const double asym  = (m - m.adjoint()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * scale)
            throw InvalidSpec("matrix is not Hermitian (asymmetry " + std::to_string(asym) + ")");

        m_ = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<CMat> es(m_);
        if (es.info() != Eigen::Success)
            throw NumericalBreakdown("Hermitian eigensolver did not converge");
        evals_ = es.eigenvalues();
        evecs_ = es.eigenvectors();

        const double lmax = evals_.maxCoeff();
        const double lmin = evals_.minCoeff();
        if (!(lmin > 0.0) || lmin < pd_tolerance * lmax)
            throw InvalidSpec("matrix is not positive definite (eigenvalues " + std::to_string(lmin) + ", " +
                              std::to_string(lmax) + ")");
    }

    int dim() const { return static_cast<int>(m_.rows()); }
    const CMat& matrix() const { return m_; }
    const RVec& eigenvalues() const { return evals_; }
    const CMat& eigenvectors() const { return evecs_; }

    /// V diag(lambda^t) V^*
    CMat power_matrix(double t) const
    {
        RVec lt = evals_.array().pow(t);
        return evecs_ * lt.asDiagonal() * evecs_.adjoint();
    }

    HermitianPD power(double t) const { return HermitianPD(power_matrix(t)); }

    double condition_number() const { return evals_.maxCoeff() / evals_.minCoeff(); }

private:
    CMat m_;
    RVec evals_;
    CMat evecs_;
};

/// M^t for Hermitian positive-definite M.
inline HermitianPD matrix_power(const HermitianPD& m, double t) { return m.power(t); }

/// Largest singular value.
inline double operator_norm(const CMat& m)
{
    if (!m.allFinite())
        throw NumericalBreakdown("operator_norm of a non-finite matrix");
    if (m.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<CMat> svd(m);
    return svd.singularValues()(0);
}

/// Hermitian square root of M^* M, i.e. the positive factor of the polar
/// decomposition; |Mx| = |sqrt(M^*M) x| for every x.
inline CMat positive_factor(const CMat& m)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(m.adjoint() * m);
    RVec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

/// Hermitian PSD square root (clamps tiny negative eigenvalues).
inline CMat psd_sqrt(const CMat& h)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()));
    RVec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

////////////////////////////////////////////////////////////////////////////////
//
// WeightSpec
//
////////////////////////////////////////////////////////////////////////////////

enum class WeightKind { constant, scalar_exp, scalar_power, rotating, checkerboard };

inline std::string to_string(WeightKind k)
{
    switch (k) {
    case WeightKind::constant: return "constant";
    case WeightKind::scalar_exp: return "scalar_exp";
    case WeightKind::scalar_power: return "scalar_power";
    case WeightKind::rotating: return "rotating";
    case WeightKind::checkerboard: return "checkerboard";
    }
    return "unknown";
}

inline WeightKind weight_kind_from_string(const std::string& s)
{
    if (s == "constant") return WeightKind::constant;
    if (s == "scalar_exp") return WeightKind::scalar_exp;
    if (s == "scalar_power") return WeightKind::scalar_power;
    if (s == "rotating") return WeightKind::rotating;
    if (s == "checkerboard") return WeightKind::checkerboard;
    throw InvalidSpec("unknown weight kind '" + s + "'");
}

/// Symbolic description of a matrix weight family W(z).
///
///   constant      W(z) = M
///   scalar_exp    W(z) = exp(beta * Re z1) I_d
///   scalar_power  W(z) = (1 + |z|^2)^(gamma/2) I_d
///   rotating      W(z) = U(omega Re z1) diag(l1, l2) U(omega Re z1)^*, d = 2
///   checkerboard  W(z) = A or B by parity of the side-s cell containing z
class WeightSpec {
public:
    static WeightSpec constant(const CMat& m, int n = 1)
    {
        WeightSpec w(WeightKind::constant, static_cast<int>(m.rows()), n);
        w.a_ = HermitianPD(m);
        return w;
    }

    static WeightSpec scalar_exp(double beta, int d = 1, int n = 1)
    {
        WeightSpec w(WeightKind::scalar_exp, d, n);
        if (!std::isfinite(beta))
            throw InvalidSpec("scalar_exp: beta must be finite");
        w.beta_ = beta;
        return w;
    }

    static WeightSpec scalar_power(double gamma, int d = 1, int n = 1)
    {
        WeightSpec w(WeightKind::scalar_power, d, n);
        if (!std::isfinite(gamma))
            throw InvalidSpec("scalar_power: gamma must be finite");
        w.gamma_ = gamma;
        return w;
    }

    static WeightSpec rotating(double lambda1, double lambda2, double omega, int n = 1)
    {
        WeightSpec w(WeightKind::rotating, 2, n);
        if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
            throw InvalidSpec("rotating: lambda entries must be positive");
        if (std::min(lambda1, lambda2) < pd_tolerance * std::max(lambda1, lambda2))
            throw InvalidSpec("rotating: lambda ratio below PD tolerance");
        if (!std::isfinite(omega))
            throw InvalidSpec("rotating: omega must be finite");
        w.lambda_ = {lambda1, lambda2};
        w.omega_  = omega;
        return w;
    }

    static WeightSpec checkerboard(const CMat& a, const CMat& b, double side, int n = 1)
    {
        if (a.rows() != b.rows())
            throw InvalidSpec("checkerboard: A and B must have the same size");
        WeightSpec w(WeightKind::checkerboard, static_cast<int>(a.rows()), n);
        if (!(side > 0.0) || !std::isfinite(side))
            throw InvalidSpec("checkerboard: cell side s must be positive");
        w.a_    = HermitianPD(a);
        w.b_    = HermitianPD(b);
        w.side_ = side;
        return w;
    }

    WeightKind kind() const { return kind_; }
    int dim() const { return d_; }
    int ambient() const { return n_; }

    double beta() const { return beta_; }
    double gamma() const { return gamma_; }
    double omega() const { return omega_; }
    std::pair<double, double> lambda() const { return lambda_; }
    double cell_side() const { return side_; }
    const HermitianPD& matrix_a() const { return a_; }
    const HermitianPD& matrix_b() const { return b_; }

    /// W(z) = w(z) I_d for a scalar function w
    bool is_scalar() const { return kind_ == WeightKind::scalar_exp || kind_ == WeightKind::scalar_power; }

    bool is_constant() const
    {
        return kind_ == WeightKind::constant || (kind_ == WeightKind::scalar_exp && beta_ == 0.0) ||
               (kind_ == WeightKind::scalar_power && gamma_ == 0.0) ||
               (kind_ == WeightKind::rotating && (omega_ == 0.0 || lambda_.first == lambda_.second));
    }

    /// Scalar weight value; only meaningful for is_scalar() kinds.
    double scalar_value(const Point& z) const
    {
        if (kind_ == WeightKind::scalar_exp)
            return std::exp(beta_ * z(0));
        return std::pow(1.0 + z.squaredNorm(), 0.5 * gamma_);
    }

    /// Parity (0 -> A, 1 -> B) of the checkerboard cell containing z.  A point
    /// on a cell face belongs to the cell with the smaller lower-left corner.
    int cell_parity(const Point& z) const
    {
        long sum = 0;
        for (int k = 0; k < z.size(); ++k)
            sum += static_cast<long>(std::ceil(z(k) / side_)) - 1;
        return static_cast<int>(((sum % 2) + 2) % 2);
    }

    /// W(z)^t without re-running an eigensolver.
    CMat power_at(const Point& z, double t) const
    {
        check_point(z);
        switch (kind_) {
        case WeightKind::constant: return a_.power_matrix(t);
        case WeightKind::scalar_exp:
        case WeightKind::scalar_power: return std::pow(scalar_value(z), t) * CMat::Identity(d_, d_);
        case WeightKind::rotating: {
            const double th = omega_ * z(0);
            const double c = std::cos(th), s = std::sin(th);
            const double l1 = std::pow(lambda_.first, t), l2 = std::pow(lambda_.second, t);
            CMat m(2, 2);
            m(0, 0) = c * c * l1 + s * s * l2;
            m(1, 1) = s * s * l1 + c * c * l2;
            m(0, 1) = m(1, 0) = c * s * (l1 - l2);
            return m;
        }
        case WeightKind::checkerboard: return (cell_parity(z) == 0 ? a_ : b_).power_matrix(t);
        }
        return {};
    }

private:
    WeightSpec(WeightKind k, int d, int n) : kind_(k), d_(d), n_(n)
    {
        if (d < 1)
            throw InvalidSpec("matrix dimension d must be >= 1");
        if (n < 1)
            throw InvalidSpec("ambient dimension n must be >= 1");
    }

    void check_point(const Point& z) const
    {
        if (z.size() != 2 * n_)
            throw InvalidSpec("point has " + std::to_string(z.size()) + " real coordinates, expected " +
                              std::to_string(2 * n_));
        if (!z.allFinite())
            throw InvalidSpec("point must be finite");
    }

    WeightKind kind_;
    int d_;
    int n_;
    double beta_  = 0.0;
    double gamma_ = 0.0;
    double omega_ = 0.0;
    double side_  = 1.0;
    std::pair<double, double> lambda_{1.0, 1.0};
    HermitianPD a_;
    HermitianPD b_;
};

/// W(z) as a validated Hermitian positive-definite matrix.
inline HermitianPD eval_weight(const WeightSpec& spec, const Point& z) { return HermitianPD(spec.power_at(z, 1.0)); }

/// Matrix-valued function z -> M(z) defining the pointwise norm |M(z) x|.
struct MatrixField {
    WeightSpec spec;
    double exponent; // M(z) = W(z)^exponent

    CMat at(const Point& z) const { return spec.power_at(z, exponent); }
    int dim() const { return spec.dim(); }
    int ambient() const { return spec.ambient(); }
};

inline double conjugate_exponent(double p) { return p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0); }

} // namespace mwfock
