#pragma once

// Derivative-free local maximisers used to polish sampled optima.

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include "linalg.hpp"

namespace mwfock {

struct LocalMax {
    RVec argmax;
    double value = 0.0;
    double final_step = 0.0; // simplex diameter (or compass step) at exit
    int evaluations = 0;
};

/// Nelder-Mead maximisation of f starting from x0 with initial edge length
/// `step`.  Stops once the simplex diameter drops below `tol` or after
/// `max_evals` function evaluations.
inline LocalMax nelder_mead_max(const std::function<double(const RVec&)>& f, const RVec& x0, double step,
                                double tol = 1e-8, int max_evals = 4000)
{
    const int dim = static_cast<int>(x0.size());
    std::vector<RVec> s(dim + 1, x0);
    std::vector<double> v(dim + 1);
    int evals = 0;
    auto eval = [&](const RVec& x) {
        ++evals;
        return -f(x);
    };
    for (int i = 0; i < dim; ++i)
        s[i + 1](i) += step;
    for (int i = 0; i <= dim; ++i)
        v[i] = eval(s[i]);

    std::vector<int> idx(dim + 1);
    double diameter = step;
    while (evals < max_evals) {
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
        {
            std::vector<RVec> s2;
            std::vector<double> v2;
            for (int i : idx) {
                s2.push_back(s[i]);
                v2.push_back(v[i]);
            }
            s.swap(s2);
            v.swap(v2);
        }
        diameter = 0.0;
        for (int i = 1; i <= dim; ++i)
            diameter = std::max(diameter, (s[i] - s[0]).lpNorm<Eigen::Infinity>());
        if (diameter < tol)
            break;

        RVec c = RVec::Zero(dim);
        for (int i = 0; i < dim; ++i)
            c += s[i];
        c /= dim;

        RVec xr = c + (c - s[dim]);
        double fr = eval(xr);
        if (fr < v[0]) {
            RVec xe = c + 2.0 * (c - s[dim]);
            double fe = eval(xe);
            if (fe < fr) {
                s[dim] = xe;
                v[dim] = fe;
            } else {
                s[dim] = xr;
                v[dim] = fr;
            }
        } else if (fr < v[dim - 1]) {
            s[dim] = xr;
            v[dim] = fr;
        } else {
            const bool outside = fr < v[dim];
            RVec xc = outside ? RVec(c + 0.5 * (xr - c)) : RVec(c + 0.5 * (s[dim] - c));
            double fc = eval(xc);
            if (fc < std::min(fr, v[dim])) {
                s[dim] = xc;
                v[dim] = fc;
            } else {
                for (int i = 1; i <= dim; ++i) {
                    s[i] = s[0] + 0.5 * (s[i] - s[0]);
                    v[i] = eval(s[i]);
                }
            }
        }
    }
    const auto best = std::min_element(v.begin(), v.end()) - v.begin();
    return {s[best], -v[best], diameter, evals};
}

/// Compass search maximisation restricted to the box [lo, hi].
inline LocalMax compass_max(const std::function<double(const RVec&)>& f, const RVec& x0, const RVec& lo, const RVec& hi,
                            double step, double tol = 1e-10, int max_evals = 2000)
{
    RVec x     = x0;
    double fx  = f(x);
    int evals  = 1;
    const int dim = static_cast<int>(x.size());
    while (step > tol && evals < max_evals) {
        bool improved = false;
        for (int k = 0; k < dim && !improved; ++k) {
            for (double sgn : {1.0, -1.0}) {
                RVec y = x;
                y(k)   = std::clamp(y(k) + sgn * step, lo(k), hi(k));
                if (y(k) == x(k))
                    continue;
                const double fy = f(y);
                ++evals;
                if (fy > fx) {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved)
            step *= 0.5;
    }
    return {x, fx, step, evals};
}

} // namespace mwfock
