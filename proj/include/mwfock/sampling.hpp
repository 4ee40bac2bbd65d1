#pragma once

// Deterministic direction samples on the unit sphere of C^d.
//
// Complex norms are invariant under x -> e^{i theta} x, so it suffices to
// sample the projective space CP^{d-1}.  For d = 2 this is the Bloch sphere
// S^2 and a Fibonacci lattice gives a low-discrepancy set; other dimensions
// use seeded Gaussian directions.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "linalg.hpp"

namespace mwfock {

inline constexpr std::uint64_t default_sphere_seed = 0x5eed5eedULL;

/// Uniformly distributed unit vectors on S^{2d-1} subset C^d.
inline std::vector<CVec> random_sphere(int d, int count, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<CVec> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        CVec v(d);
        for (int k = 0; k < d; ++k)
            v(k) = cplx(g(gen), g(gen));
        out.push_back(v / v.norm());
    }
    return out;
}

/// Fibonacci lattice on S^2 mapped to C^2 through the Hopf chart
/// (theta, phi) -> (cos(theta/2), e^{i phi} sin(theta/2)).
inline std::vector<CVec> fibonacci_bloch(int count)
{
    const double golden = pi * (3.0 - std::sqrt(5.0));
    std::vector<CVec> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double zc    = 1.0 - (2.0 * i + 1.0) / count;
        const double theta = std::acos(zc);
        const double phi   = golden * i;
        CVec v(2);
        v(0) = std::cos(0.5 * theta);
        v(1) = std::polar(std::sin(0.5 * theta), phi);
        out.push_back(v);
    }
    return out;
}

/// Representatives of CP^{d-1}, one unit vector per complex line.
inline std::vector<CVec> projective_samples(int d, int count, std::uint64_t seed = default_sphere_seed)
{
    if (d == 1)
        return {CVec::Ones(1)};
    if (d == 2)
        return fibonacci_bloch(count);
    return random_sphere(d, count, seed);
}

/// C^d vector from the real chart v in R^{2d}, normalised to unit length.
inline CVec from_real_chart(const RVec& v)
{
    const int d = static_cast<int>(v.size() / 2);
    CVec x(d);
    for (int k = 0; k < d; ++k)
        x(k) = cplx(v(2 * k), v(2 * k + 1));
    const double nx = x.norm();
    return nx > 0.0 ? CVec(x / nx) : x;
}

inline RVec to_real_chart(const CVec& x)
{
    RVec v(2 * x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        v(2 * k)     = x(k).real();
        v(2 * k + 1) = x(k).imag();
    }
    return v;
}

} // namespace mwfock
