#include <catch_amalgamated.hpp>

#include <mwfock/reduce.hpp>

#include "test_support.hpp"

using namespace mwfock;
using namespace mwfock::testing;
using Catch::Approx;

namespace {

// the same norm with the ellipsoid shortcut hidden
NormOracle opaque(const NormOracle& rho) { return NormOracle(rho.dim(), NormTag::generic, [rho](const CVec& x) { return rho(x); }); }

double frob_gap(const CMat& r, const CMat& m)
{
    return (r.adjoint() * r - m.adjoint() * m).norm() / (m.adjoint() * m).norm();
}

// |R1 R2^{-1}| |R2 R1^{-1}|
double mutual_distortion(const CMat& r1, const CMat& r2)
{
    return operator_norm(r1 * r2.inverse()) * operator_norm(r2 * r1.inverse());
}

const WeightSpec board = WeightSpec::checkerboard(diag({4.0, 1.0}), diag({1.0, 4.0}), 1.0);
const Cube two_cell(point(1.0, 0.5), 1.0);

} // namespace

TEST_CASE("mvee of points on an ellipse is that ellipse")
{
    RMat a(2, 2);
    a << 3.0, 1.0, 1.0, 2.0;
    const Eigen::LLT<RMat> llt(a);
    RMat pts(2, 60);
    for (int i = 0; i < 60; ++i) {
        const double t = 2 * pi * i / 60;
        RVec u(2);
        u << std::cos(t), std::sin(t);
        pts.col(i) = llt.matrixU().solve(u); // v^T a v = 1
    }
    const auto e = mvee_centered(pts);
    CHECK(e.converged);
    CHECK((e.shape - a).norm() <= 1e-6 * a.norm());
    for (int i = 0; i < 60; ++i)
        CHECK(pts.col(i).dot(e.shape * pts.col(i)) <= 1.0 + 1e-12);
}

TEST_CASE("mvee of a square is the circumscribed disc")
{
    RMat pts(2, 2);
    pts << 1.0, 1.0, 1.0, -1.0;
    const auto e = mvee_centered(pts);
    CHECK((e.shape - 0.5 * RMat::Identity(2, 2)).norm() < 1e-6);
}

TEST_CASE("complex mvee recovers a Hermitian ellipsoid")
{
    std::mt19937_64 gen(3);
    const CMat h = random_pd(3, 10.0, gen);
    const CMat hm = HermitianPD(h).power_matrix(-0.5);
    const auto dirs = random_sphere(3, 400, 17);
    CMat pts(3, dirs.size());
    for (std::size_t i = 0; i < dirs.size(); ++i)
        pts.col(i) = hm * dirs[i]; // x^* h x = 1
    const auto e = mvee_centered(pts);
    CHECK(e.converged);
    CHECK((e.shape - h).norm() <= 1e-6 * h.norm());
    for (std::size_t i = 0; i < dirs.size(); ++i)
        CHECK(pts.col(i).dot(e.shape * pts.col(i)).real() <= 1.0 + 1e-12);
}

TEST_CASE("reducing_operator exact branches")
{
    const auto euclid = NormOracle::ellipsoidal(CMat::Identity(2, 2), NormTag::generic);
    const auto r = reducing_operator(euclid);
    CHECK((r.mat() - CMat::Identity(2, 2)).norm() < 1e-14);
    CHECK(r.lower_ratio == 1.0);
    CHECK(r.upper_ratio == 1.0);
    CHECK((reducing_operator(NormOracle::ellipsoidal(diag({2, 3}), NormTag::generic)).mat() - diag({2, 3})).norm() <
          1e-14);

    const auto rb = reducing_operator(avg_norm(board, 2.0, two_cell, 4));
    CHECK((rb.mat() - diag({std::sqrt(2.5), std::sqrt(2.5)})).norm() < 1e-12);

    CHECK_THROWS_AS(reducing_operator(opaque(euclid), 2, 399), InvalidSpec);
    CHECK_THROWS_AS(reducing_operator(euclid, 3, 900), InvalidSpec);
}

TEST_CASE("ellipsoidal fixed point through the sampled construction")
{
    std::mt19937_64 gen(11);
    for (int d : {2, 3}) {
        const CMat m = random_pd(d, 20.0, gen);
        const auto r = reducing_operator(opaque(NormOracle::ellipsoidal(m, NormTag::generic)));
        CHECK(frob_gap(r.mat(), m) <= 1e-6);
        CHECK(detail::sandwich_ok(r, 1e-6));
    }
    const auto r = reducing_operator(opaque(avg_norm(board, 2.0, two_cell, 4)));
    CHECK((r.mat() - diag({std::sqrt(2.5), std::sqrt(2.5)})).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("sandwich on the polydisc norm")
{
    // unit ball D x D: the enclosing ellipsoid touches the sqrt(d) bound
    const auto linf = NormOracle(2, NormTag::generic, [](const CVec& x) { return x.cwiseAbs().maxCoeff(); });
    const auto r = reducing_operator(linf);
    INFO(r.lower_ratio << " " << r.upper_ratio);
    CHECK(detail::sandwich_ok(r));
    CHECK(r.upper_ratio == Approx(std::sqrt(2.0)).epsilon(1e-2));
}

TEST_CASE("sandwich certification on averaged norms")
{
    const std::vector<WeightSpec> specs{WeightSpec::rotating(6.0, 0.5, 1.3), board};
    const Cube q(point(0.7, 0.2), 1.0);
    for (const auto& w : specs)
        for (double p : {1.5, 3.0}) {
            const auto r = primal_reducer(w, p, q, 8);
            const auto rs = dual_reducer(w, p, q, 8);
            INFO(to_string(w.kind()) << " p=" << p);
            CHECK(detail::sandwich_ok(r));
            CHECK(detail::sandwich_ok(rs));
            // independent sample, different seed from the certificate
            const auto rho = avg_norm(w, p, q, 8);
            for (const auto& x : random_sphere(2, 500, 4242)) {
                const double t = (r.mat() * x).norm() / rho(x);
                CHECK(t >= 1.0 - 1e-4);
                CHECK(t <= std::sqrt(2.0) + 1e-4);
            }
        }
}

TEST_CASE("exact_reducer_p2 examples")
{
    std::mt19937_64 gen(5);
    const CMat m = random_pd(2, 30.0, gen);
    const auto cw = WeightSpec::constant(m);
    const Cube q(point(0.0, 0.0), 1.0);
    CHECK((exact_reducer_p2(cw, q, 4).mat() - HermitianPD(m).power_matrix(0.5)).norm() < 1e-10);
    CHECK((exact_reducer_p2(cw, q, 4, -1.0).mat() - HermitianPD(m).power_matrix(-0.5)).norm() < 1e-10);

    const auto r1 = exact_reducer_p2(WeightSpec::scalar_exp(1.0), q, 8);
    CHECK(r1.mat()(0, 0).real() == Approx(std::sqrt(2.0 * std::sinh(0.5))).epsilon(1e-10));

    const auto rb = exact_reducer_p2(board, two_cell, 4);
    CHECK((rb.mat() - diag({std::sqrt(2.5), std::sqrt(2.5)})).norm() < 1e-12);
    CHECK(rb.lower_ratio == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dual_reducer examples")
{
    std::mt19937_64 gen(6);
    const CMat m = random_pd(2, 30.0, gen);
    const auto cw = WeightSpec::constant(m);
    const Cube q(point(0.0, 0.0), 1.0);
    CHECK((dual_reducer(cw, 2.0, q, 8).mat() - HermitianPD(m).power_matrix(-0.5)).norm() < 1e-10);
    CHECK((dual_reducer(cw, 1.0, q, 8).mat() - HermitianPD(m).power_matrix(-1.0)).norm() < 1e-10);

    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        const auto w = WeightSpec::scalar_exp(0.7);
        const auto rs = dual_reducer(w, p, q, 8);
        CHECK(rs.mat()(0, 0).real() == Approx(dual_avg_norm(w, p, q, 8)(CVec::Ones(1))).epsilon(1e-14));
    }
}

TEST_CASE("p=2 sampled and exact reducers agree")
{
    const auto w = WeightSpec::rotating(6.0, 0.5, 1.3);
    const Cube q(point(0.3, -0.4), 1.2);
    const auto r1 = reducing_operator(opaque(avg_norm(w, 2.0, q, 8)));
    const auto r2 = exact_reducer_p2(w, q, 8);
    CHECK(mutual_distortion(r1.mat(), r2.mat()) <= 2.0 + 1e-3);
    CHECK(mutual_distortion(r1.mat(), r2.mat()) == Approx(1.0).epsilon(1e-5));
}
