#pragma once

// Minimum-volume origin-centred enclosing ellipsoid of a balanced point set
// in R^D or C^D, by Khachiyan's barycentric coordinate ascent with
// Todd-Yildirim away steps.  Over C^D the ellipsoid is {v : v^* H v <= 1}
// with H Hermitian, so it contains e^{i theta} q_i along with every q_i.

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "linalg.hpp"

namespace mwfock {

template <typename Scalar>
struct MveeResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> shape;       // E = {v : v^T shape v <= 1}
    double gap = 0.0; // max_i q_i^T X^{-1} q_i / D - 1 at exit
    int iterations = 0;
    bool converged = false;
};

/// Columns of `points` are the q_i; the set is treated as {c q_i : |c| = 1}.
/// On exit every q_i lies in E regardless of convergence.
template <typename Derived>
MveeResult<typename Derived::Scalar> mvee_centered(const Eigen::MatrixBase<Derived>& points, double tol = 1e-7,
                                                   int max_iterations = 100000)
{
    using Scalar = typename Derived::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const int dim = static_cast<int>(points.rows());
    const int count = static_cast<int>(points.cols());
    if (count < dim)
        throw InvalidSpec("mvee needs at least as many points as dimensions");

    RVec u = RVec::Constant(count, 1.0 / count);
    MveeResult<Scalar> out;
    RVec m(count);
    for (int it = 0;; ++it) {
        const Mat x = points * u.asDiagonal() * points.adjoint();
        Eigen::LDLT<Mat> ldlt(x);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().real().minCoeff() > 0.0))
            throw NumericalBreakdown("mvee scatter matrix is singular; boundary points span a subspace");
        m = (points.conjugate().array() * ldlt.solve(points).array()).colwise().sum().real().transpose();

        Eigen::Index jmax = 0;
        const double kappa = m.maxCoeff(&jmax);
        out.gap = kappa / dim - 1.0;
        out.iterations = it;
        if (out.gap <= tol || it == max_iterations) {
            out.converged = out.gap <= tol;
            out.shape = ldlt.solve(Mat::Identity(dim, dim)) / Scalar(kappa);
            out.shape = 0.5 * (out.shape + out.shape.adjoint()).eval();
            return out;
        }

        // away candidate: smallest m_i among points carrying weight
        Eigen::Index jmin = -1;
        double mmin = 0.0;
        for (int i = 0; i < count; ++i)
            if (u(i) > 0.0 && (jmin < 0 || m(i) < mmin)) {
                jmin = i;
                mmin = m(i);
            }

        if (kappa - dim >= dim - mmin) {
            const double step = (kappa / dim - 1.0) / (kappa - 1.0);
            u *= 1.0 - step;
            u(jmax) += step;
        } else {
            // decrease the weight of jmin, clipped so it stays non-negative
            const double drop = u(jmin) / (1.0 - u(jmin));
            const double step = mmin > 1.0 ? std::min((1.0 - mmin / dim) / (mmin - 1.0), drop) : drop;
            u *= 1.0 + step;
            u(jmin) -= step;
            if (u(jmin) < 1e-300)
                u(jmin) = 0.0;
        }
    }
}

} // namespace mwfock
