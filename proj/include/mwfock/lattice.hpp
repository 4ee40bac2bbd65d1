#pragma once

// The lattice r Z^{2n}, coordinate-wise paths between lattice points, and the
// comparison of averaged norms over distant lattice cubes.

#include <cmath>
#include <vector>

#include "apr.hpp"

namespace mwfock {

struct LatticePath {
    double step = 1.0;
    std::vector<Point> points; // a_0 = nu, ..., a_k = nu'

    int length() const { return static_cast<int>(points.size()) - 1; }
};

/// Integer coordinates of a point of r Z^{2n}.
inline Eigen::VectorXi lattice_index(const Point& z, double r)
{
    Eigen::VectorXi k(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double q = z(i) / r;
        const double rq = std::round(q);
        if (!std::isfinite(q) || std::abs(q - rq) > 1e-9 * std::max(1.0, std::abs(q)))
            throw NotLatticePoint("coordinate " + std::to_string(z(i)) + " is not a multiple of " + std::to_string(r));
        k(i) = static_cast<int>(rq);
    }
    return k;
}

/// Walks x1 to completion, then y1, x2, ..., one step of +-r at a time.
inline LatticePath discrete_path(const Point& nu, const Point& nu_prime, double r)
{
    if (!(r > 0.0))
        throw InvalidSpec("lattice step must be positive");
    if (nu.size() != nu_prime.size() || nu.size() % 2 != 0)
        throw InvalidSpec("lattice points must share an even dimension");
    Eigen::VectorXi a = lattice_index(nu, r);
    const Eigen::VectorXi b = lattice_index(nu_prime, r);

    LatticePath path{r, {}};
    auto emit = [&] { path.points.push_back(a.cast<double>() * r); };
    emit();
    for (Eigen::Index i = 0; i < a.size(); ++i)
        while (a(i) != b(i)) {
            a(i) += a(i) < b(i) ? 1 : -1;
            emit();
        }
    return path;
}

struct LatticeComparison {
    InequalityCheck norms;    // rho_{p,Q_r(nu)}(x) against the path bound
    InequalityCheck reducers; // |R_nu R_nu'^{-1}| against sqrt(d) times the same factor
    double factor = 1.0;      // (3^{2n} A_{p,3r})^{sqrt(2n)|nu-nu'|/r}
};

/// (3^{2n} A)^{sqrt(2n) |nu - nu'| / r}
inline double lattice_factor(int n, double apr_3r, const Point& nu, const Point& nu_prime, double r)
{
    return std::pow(std::pow(3.0, 2.0 * n) * apr_3r, std::sqrt(2.0 * n) * (nu - nu_prime).norm() / r);
}

inline LatticeComparison check_lattice_comparison(const WeightSpec& spec, double p, double r, const Point& nu,
                                                  const Point& nu_prime, const CVec& x, double apr_3r,
                                                  int resolution, bool with_reducers = true,
                                                  const QuadratureOptions& qopts = {})
{
    lattice_index(nu, r);
    lattice_index(nu_prime, r);
    LatticeComparison out;
    out.factor = lattice_factor(spec.ambient(), apr_3r, nu, nu_prime, r);
    const Cube q(nu, r), qp(nu_prime, r);
    out.norms = make_check(avg_norm(spec, p, q, resolution, qopts)(x),
                           out.factor * avg_norm(spec, p, qp, resolution, qopts)(x));
    if (with_reducers) {
        const CMat ra = primal_reducer(spec, p, q, resolution, qopts).mat();
        const CMat rb = primal_reducer(spec, p, qp, resolution, qopts).mat();
        out.reducers = make_check(operator_norm(ra * rb.inverse()), std::sqrt(static_cast<double>(spec.dim())) * out.factor);
    }
    return out;
}

/// Largest direct ratio over the cubes Q_{3r}(a_j) of the path from nu to
/// nu'; the path argument applies the 3Q inequality exactly there.
inline double path_apr_3r(const WeightSpec& spec, double p, double r, const Point& nu, const Point& nu_prime,
                          int resolution, const QuadratureOptions& qopts = {})
{
    const auto path = discrete_path(nu, nu_prime, r);
    double a = 1.0;
    for (int j = 1; j <= path.length(); ++j)
        a = std::max(a, direct_ratio(spec, p, Cube(path.points[j], 3.0 * r), resolution, {}, qopts));
    return a;
}

inline LatticeComparison check_lattice_comparison(const WeightSpec& spec, double p, double r, const Point& nu,
                                                  const Point& nu_prime, const CVec& x, int resolution)
{
    return check_lattice_comparison(spec, p, r, nu, nu_prime, x, path_apr_3r(spec, p, r, nu, nu_prime, resolution),
                                    resolution);
}

} // namespace mwfock
