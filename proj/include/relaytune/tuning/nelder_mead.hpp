#pragma once

#include <array>
#include <functional>

#include "relaytune/core.hpp"

namespace relaytune {

template <std::size_t N>
struct DirectSearchResult {
    std::array<double, N> x{};
    double value = kInf;
    int evaluations = 0;
};

/// Nelder-Mead simplex search on a box; trial points are clamped into [lo, hi].
template <std::size_t N, class F>
DirectSearchResult<N> nelder_mead(F&& f, std::array<double, N> start, double initial_step,
                                  const std::array<double, N>& lo, const std::array<double, N>& hi,
                                  int max_evaluations, double tolerance = 1e-6)
{
    using Point = std::array<double, N>;
    auto clamp = [&](Point p) {
        for (std::size_t i = 0; i < N; ++i)
            p[i] = std::clamp(p[i], lo[i], hi[i]);
        return p;
    };
    int evals = 0;
    auto eval = [&](const Point& p) {
        ++evals;
        return f(p);
    };

    std::array<Point, N + 1> simplex;
    std::array<double, N + 1> value;
    simplex[0] = clamp(start);
    for (std::size_t i = 0; i < N; ++i) {
        Point p = simplex[0];
        const double span = hi[i] - lo[i];
        p[i] += initial_step * span;
        if (p[i] > hi[i])
            p[i] = simplex[0][i] - initial_step * span;
        simplex[i + 1] = clamp(p);
    }
    for (std::size_t i = 0; i <= N; ++i)
        value[i] = eval(simplex[i]);

    while (evals < max_evaluations) {
        std::array<std::size_t, N + 1> order;
        for (std::size_t i = 0; i <= N; ++i)
            order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return value[a] < value[b]; });
        const std::size_t best = order[0], worst = order[N], second = order[N - 1];

        const double spread = std::abs(value[worst] - value[best]);
        double size = 0.0;
        for (std::size_t i = 0; i <= N; ++i)
            for (std::size_t d = 0; d < N; ++d)
                size = std::max(size, std::abs(simplex[i][d] - simplex[best][d]) / (hi[d] - lo[d]));
        if (spread <= tolerance * (std::abs(value[best]) + 1e-30) && size < 1e-3)
            break;
        if (size < 1e-7)
            break;

        Point centroid{};
        for (std::size_t i = 0; i <= N; ++i) {
            if (i == worst)
                continue;
            for (std::size_t d = 0; d < N; ++d)
                centroid[d] += simplex[i][d] / static_cast<double>(N);
        }
        auto along = [&](double t) {
            Point p;
            for (std::size_t d = 0; d < N; ++d)
                p[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
            return clamp(p);
        };

        const Point xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < value[best]) {
            const Point xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                value[worst] = fe;
            } else {
                simplex[worst] = xr;
                value[worst] = fr;
            }
            continue;
        }
        if (fr < value[second]) {
            simplex[worst] = xr;
            value[worst] = fr;
            continue;
        }
        const bool outside = fr < value[worst];
        const Point xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : value[worst])) {
            simplex[worst] = xc;
            value[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= N; ++i) {
            if (i == best)
                continue;
            for (std::size_t d = 0; d < N; ++d)
                simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
            value[i] = eval(simplex[i]);
        }
    }

    DirectSearchResult<N> r;
    std::size_t best = 0;
    for (std::size_t i = 1; i <= N; ++i)
        if (value[i] < value[best])
            best = i;
    r.x = simplex[best];
    r.value = value[best];
    r.evaluations = evals;
    return r;
}

} // namespace relaytune
