#include <catch_amalgamated.hpp>

#include <mwfock/metric.hpp>

#include "test_support.hpp"

using namespace mwfock;
using namespace mwfock::testing;
using Catch::Approx;

namespace {

// brute-force dual norm over a dense random sphere sample
double brute_dual(const NormOracle& rho, const CVec& x, int count)
{
    double best = 0.0;
    for (const auto& y : random_sphere(rho.dim(), count, 99))
        best = std::max(best, std::abs(y.dot(x)) / rho(y));
    return best;
}

const WeightSpec board = WeightSpec::checkerboard(diag({4.0, 1.0}), diag({1.0, 4.0}), 1.0);

// Q = [0.5,1.5] x [0,1] meets the A cell [0,1)^2 and the B cell [1,2)x[0,1) equally
const Cube two_cell(point(1.0, 0.5), 1.0);

} // namespace

TEST_CASE("pointwise_metric examples")
{
    std::mt19937_64 gen(1);
    const CVec x = random_vector(2, gen);
    for (double p : {1.0, 2.0, 3.5})
        CHECK(pointwise_metric(WeightSpec::constant(CMat::Identity(2, 2)), p, point(0.3, 0.1))(x) ==
              Approx(x.norm()));
    const auto w = WeightSpec::constant(diag({16.0, 1.0}));
    CHECK(pointwise_metric(w, 2.0, point(0, 0))(CVec::Unit(2, 0)) == Approx(4.0));
    CHECK(pointwise_metric(w, 1.0, point(0, 0))(CVec::Unit(2, 0)) == Approx(16.0));
}

TEST_CASE("avg_norm examples")
{
    std::mt19937_64 gen(2);
    const CMat m = random_pd(2, 10.0, gen);
    const auto cw = WeightSpec::constant(m);
    for (int k = 0; k < 10; ++k) {
        const CVec x = random_vector(2, gen);
        CHECK(avg_norm(cw, 3.0, Cube(point(1, 2), 0.7), 8)(x) ==
              Approx(pointwise_metric(cw, 3.0, point(5, 5))(x)).epsilon(1e-12));
    }

    // closed form (e^{beta a} (2/(beta r)) sinh(beta r / 2))^{1/p}
    CHECK(avg_norm(WeightSpec::scalar_exp(1.0), 2.0, Cube(point(0, 0), 1.0), 8)(CVec::Ones(1)) ==
          Approx(std::sqrt(2.0 * std::sinh(0.5))).epsilon(1e-10));
    CHECK(std::sqrt(2.0 * std::sinh(0.5)) == Approx(1.02086).margin(2e-5));
    for (double beta : {-2.0, 0.5, 1.7})
        for (double p : {1.0, 1.5, 3.0}) {
            const double a = 0.4, r = 1.3;
            const double expect = std::pow(std::exp(beta * a) * 2.0 / (beta * r) * std::sinh(beta * r / 2), 1.0 / p);
            CHECK(avg_norm(WeightSpec::scalar_exp(beta, 2), p, Cube(point(a, -3.0), r), 8)(CVec::Unit(2, 1)) ==
                  Approx(expect).epsilon(1e-10));
        }

    // checkerboard: exact two-cell average
    for (double p : {1.0, 2.0, 3.0}) {
        const HermitianPD a(diag({4.0, 1.0})), b(diag({1.0, 4.0}));
        const auto rho = avg_norm(board, p, two_cell, 4);
        for (int k = 0; k < 10; ++k) {
            const CVec x = random_vector(2, gen);
            const double expect = std::pow(0.5 * (std::pow((a.power_matrix(1 / p) * x).norm(), p) +
                                                  std::pow((b.power_matrix(1 / p) * x).norm(), p)),
                                           1.0 / p);
            CHECK(rho(x) == Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("avg_norm errors")
{
    CHECK_THROWS_AS(avg_norm(board, 2.0, two_cell, 3), InvalidSpec);
    CHECK_THROWS_AS(avg_norm(board, 0.5, two_cell, 8), InvalidSpec);
    QuadratureOptions tight{1e-6, 0};
    CHECK_THROWS_AS(avg_norm(WeightSpec::rotating(9.0, 1.0, 40.0), 3.0, Cube(point(0, 0), 2.0), 4, tight),
                    QuadratureUnderResolved);
}

TEST_CASE("sup_norm examples")
{
    std::mt19937_64 gen(4);
    const CMat m = random_pd(2, 5.0, gen);
    const CVec x = random_vector(2, gen);
    CHECK(sup_norm(WeightSpec::constant(m), Cube(point(0, 0), 1.0), 4)(x) == Approx((m * x).norm()));

    CHECK(sup_norm(WeightSpec::scalar_exp(1.0), Cube(point(0, 0), 1.0), 4)(CVec::Ones(1)) ==
          Approx(std::exp(0.5)).epsilon(1e-8));

    const auto rho = sup_norm(board, two_cell, 4);
    for (int k = 0; k < 10; ++k) {
        const CVec y = random_vector(2, gen);
        CHECK(rho(y) == Approx(std::max((diag({4, 1}) * y).norm(), (diag({1, 4}) * y).norm())).epsilon(1e-12));
    }
}

TEST_CASE("sup_norm is nondecreasing in sample resolution")
{
    const auto w = WeightSpec::rotating(6.0, 0.5, 1.3);
    const Cube q(point(0.2, 0.0), 1.5);
    std::mt19937_64 gen(8);
    for (int k = 0; k < 5; ++k) {
        const CVec x = random_vector(2, gen);
        double prev = 0.0;
        for (int res : {1, 2, 4, 8}) {
            detail::SupData data{MatrixField{w, 1.0}, sup_samples(w, q, res), {}, res};
            double grid = 0.0;
            for (const auto& s : data.samples)
                grid = std::max(grid, (w.power_at(s.z, 1.0) * x).norm());
            CHECK(grid >= prev);
            prev = grid;
        }
        CHECK(sup_norm(w, q, 8)(x) >= prev * (1 - 1e-15));
    }
}

TEST_CASE("dual_norm examples")
{
    std::mt19937_64 gen(5);
    const auto euclid = NormOracle(2, NormTag::generic, [](const CVec& y) { return y.norm(); });
    for (int k = 0; k < 5; ++k) {
        const CVec x = random_vector(2, gen);
        CHECK(dual_norm(euclid, x) == Approx(x.norm()).epsilon(1e-10));
    }
    const auto ell = NormOracle::ellipsoidal(diag({2.0, 5.0}), NormTag::generic);
    CHECK(dual_norm(ell, CVec::Unit(2, 1)) == Approx(0.2));

    // same ellipsoid without the shortcut
    const CMat m = diag({2.0, 5.0});
    const auto opaque = NormOracle(2, NormTag::generic, [m](const CVec& y) { return (m * y).norm(); });
    CHECK(dual_norm(opaque, CVec::Unit(2, 1)) == Approx(0.2).epsilon(1e-10));

    const auto rho = avg_norm(board, 3.0, two_cell, 4);
    const CVec x = CVec::Unit(2, 0);
    const double brute = brute_dual(rho, x, 1000000);
    const auto v = dual_norm_value(rho, x);
    CHECK(v.value >= brute * (1 - 1e-12));
    CHECK(v.value == Approx(brute).epsilon(1e-3));
    CHECK(v.residual < 1e-7);
}

TEST_CASE("dual_norm refinement guard")
{
    // a spike the coarse sample misses
    const CVec target = from_real_chart((RVec(4) << 0.3, 0.1, 0.2, 0.9).finished());
    const auto spiky = NormOracle(2, NormTag::generic, [target](const CVec& y) {
        const double c = std::abs(target.dot(y)) / y.norm();
        const double ang = std::acos(std::min(1.0, c));
        return y.norm() * (1.0 - 0.9 * std::exp(-ang * ang / 0.01));
    });
    CHECK_THROWS_AS(DualNormSolver(spiky, 20).evaluate(target), RefinementStalled);
}

TEST_CASE("norm axioms for constructed oracles")
{
    std::mt19937_64 gen(6);
    const auto rot = WeightSpec::rotating(6.0, 0.5, 1.3);
    const Cube q(point(0.3, 0.2), 1.0);
    const std::vector<NormOracle> norms{avg_norm(rot, 1.5, q, 8), avg_norm(board, 3.0, two_cell, 4),
                                        sup_norm(rot, q, 6), dual_avg_norm(rot, 3.0, q, 8),
                                        dual_oracle(avg_norm(board, 3.0, two_cell, 4), 600)};
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (const auto& rho : norms) {
        for (int k = 0; k < 20; ++k) {
            const CVec x = random_vector(2, gen), y = random_vector(2, gen);
            const cplx c(u(gen), u(gen));
            CHECK(rho(c * x) == Approx(std::abs(c) * rho(x)).epsilon(1e-9));
            CHECK(rho(x + y) <= rho(x) + rho(y) + 1e-9);
            CHECK(rho(x) > 0.0);
        }
    }
}

TEST_CASE("bidual recovers the norm")
{
    const CMat a = diag({4.0, 1.0}), b(CMat::Identity(2, 2) * 2.0);
    CMat c(2, 2);
    c << 2.0, cplx(0.0, 1.0), cplx(0.0, -1.0), 3.0;
    const auto rho = NormOracle(2, NormTag::generic, [=](const CVec& y) {
        return std::cbrt(std::pow((a * y).norm(), 3) + std::pow((b * y).norm(), 3) + std::pow((c * y).norm(), 3));
    });
    const auto bidual = dual_oracle(dual_oracle(rho));
    std::mt19937_64 gen(12);
    for (int k = 0; k < 4; ++k) {
        const CVec x = random_vector(2, gen);
        CHECK(bidual(x) == Approx(rho(x)).epsilon(2e-6));
    }
}

TEST_CASE("dual of the average is dominated by the average of the duals")
{
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const std::vector<WeightSpec> specs{WeightSpec::rotating(6.0, 0.5, 1.3), board,
                                        WeightSpec::constant(random_pd(2, 50.0, gen)), WeightSpec::scalar_exp(1.2, 2)};
    for (const auto& w : specs)
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            const Cube q(point(u(gen), u(gen)), 0.8);
            const DualNormSolver lhs(avg_norm(w, p, q, 8));
            const auto rhs = dual_avg_norm(w, p, q, 8);
            for (int k = 0; k < 3; ++k) {
                const CVec x = random_vector(2, gen);
                CHECK(lhs(x) <= rhs(x) + 1e-6);
            }
        }
}

TEST_CASE("average over a larger concentric cube")
{
    std::mt19937_64 gen(31);
    const auto w = WeightSpec::rotating(6.0, 0.5, 1.3);
    for (double p : {1.0, 2.0, 3.0}) {
        const Cube q(point(0.4, -0.2), 0.7);
        const Cube big = q.scaled(3.0);
        const auto small_norm = avg_norm(w, p, q, 8), big_norm = avg_norm(w, p, big, 8);
        for (int k = 0; k < 5; ++k) {
            const CVec x = random_vector(2, gen);
            CHECK(big_norm(x) >= std::pow(q.volume() / big.volume(), 1.0 / p) * small_norm(x) * (1 - 1e-12));
        }
    }
}
