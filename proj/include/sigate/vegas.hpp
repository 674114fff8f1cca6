#pragma once

// Adaptive stratified importance sampling on the unit hypercube, in the
// style of Lepage's VEGAS: a separable piecewise-linear map per axis is
// refined between iterations so that sample density follows |f|, and the
// hypercube is additionally split into equal strata.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sigate/errors.hpp"
#include "sigate/rng.hpp"

namespace sigate::integrate {

struct VegasSettings {
    std::size_t max_evaluations = 200000;
    int iterations = 8;
    /// Leading iterations used only to train the grid.
    int warmup_iterations = 2;
    int bins = 64;
    int strata_per_axis = 2;
    /// Grid compression exponent; smaller is more conservative.
    double damping = 1.0;
    /// Stop once sum(err) <= target * sum(|value|); 0 disables early exit.
    double target_relative_error = 0.0;
    std::uint64_t seed = 1;
};

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

struct VegasResult {
    std::vector<Estimate> components;
    std::size_t evaluations = 0;
    int iterations_used = 0;
};

namespace detail {

class AxisGrid {
public:
    explicit AxisGrid(int bins) : edges_(bins + 1) {
        for (int i = 0; i <= bins; ++i) edges_[i] = static_cast<double>(i) / bins;
    }

    int bins() const { return static_cast<int>(edges_.size()) - 1; }

    /// Maps y in [0,1) to x, multiplying the Jacobian into `jac`.
    double map(double y, int& bin, double& jac) const {
        const int n = bins();
        const double t = y * n;
        bin = std::min(static_cast<int>(t), n - 1);
        const double lo = edges_[bin];
        const double width = edges_[bin + 1] - lo;
        jac *= n * width;
        return lo + (t - bin) * width;
    }

    void refine(std::vector<double> d, double damping) {
        const int n = bins();
        std::vector<double> smooth(n);
        if (n == 1) return;
        smooth[0] = (d[0] + d[1]) / 2.0;
        smooth[n - 1] = (d[n - 2] + d[n - 1]) / 2.0;
        for (int i = 1; i < n - 1; ++i) smooth[i] = (d[i - 1] + d[i] + d[i + 1]) / 3.0;
        double total = 0.0;
        for (double v : smooth) total += v;
        if (!(total > 0.0)) return;
        std::vector<double> w(n);
        double wsum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = smooth[i] / total;
            if (r <= 0.0) {
                w[i] = 0.0;
            } else if (r >= 1.0) {
                w[i] = 1.0;
            } else {
                w[i] = std::pow((r - 1.0) / std::log(r), damping);
            }
            wsum += w[i];
        }
        if (!(wsum > 0.0)) return;
        const double per_bin = wsum / n;
        std::vector<double> next(n + 1);
        next[0] = 0.0;
        next[n] = 1.0;
        int j = 0;
        double acc = 0.0;
        for (int i = 1; i < n; ++i) {
            const double goal = per_bin * i;
            while (j < n && acc + w[j] < goal) {
                acc += w[j];
                ++j;
            }
            if (j >= n) {
                next[i] = 1.0;
                continue;
            }
            const double frac = w[j] > 0.0 ? (goal - acc) / w[j] : 0.0;
            next[i] = edges_[j] + frac * (edges_[j + 1] - edges_[j]);
        }
        for (int i = 1; i <= n; ++i) next[i] = std::max(next[i], next[i - 1]);
        edges_ = std::move(next);
    }

private:
    std::vector<double> edges_;
};

}  // namespace detail

/// Integrates a vector-valued function over [0,1]^dim.
///
/// `f(x, out)` receives a point of the unit hypercube and writes `ncomp`
/// values into `out`. Every component shares the same samples; the grid
/// adapts to the sum of squared components.
template <class F>
VegasResult vegas(int dim, int ncomp, F&& f, const VegasSettings& settings) {
    require(dim >= 1 && ncomp >= 1, "vegas: dim and ncomp must be positive");
    require(settings.iterations > settings.warmup_iterations && settings.warmup_iterations >= 0,
            "vegas: need at least one accumulating iteration");
    require(settings.bins >= 2, "vegas: need at least two bins");

    Rng rng(settings.seed);
    std::vector<detail::AxisGrid> grids(dim, detail::AxisGrid(settings.bins));
    const std::size_t per_iter =
        std::max<std::size_t>(settings.max_evaluations / settings.iterations, 64);

    int strata = std::max(1, settings.strata_per_axis);
    auto cube_count = [&](int s) {
        std::size_t c = 1;
        for (int i = 0; i < dim; ++i) c *= static_cast<std::size_t>(s);
        return c;
    };
    while (strata > 1 && cube_count(strata) * 4 > per_iter) --strata;
    const std::size_t cubes = cube_count(strata);
    const std::size_t per_cube = std::max<std::size_t>(2, per_iter / cubes);

    std::vector<double> x(dim);
    std::vector<int> bin(dim);
    std::vector<std::size_t> cube_index(dim);
    std::vector<double> out(ncomp);
    std::vector<double> sum(ncomp), sum2(ncomp);
    std::vector<double> iter_value(ncomp), iter_var(ncomp);
    std::vector<std::vector<double>> d(dim, std::vector<double>(settings.bins));

    std::vector<double> acc_w(ncomp, 0.0), acc_wv(ncomp, 0.0);
    std::vector<double> acc_plain(ncomp, 0.0);
    int accumulated = 0;

    VegasResult result;
    result.components.resize(ncomp);

    for (int iter = 0; iter < settings.iterations; ++iter) {
        std::fill(iter_value.begin(), iter_value.end(), 0.0);
        std::fill(iter_var.begin(), iter_var.end(), 0.0);
        for (auto& row : d) std::fill(row.begin(), row.end(), 0.0);

        for (std::size_t c = 0; c < cubes; ++c) {
            std::size_t rem = c;
            for (int k = 0; k < dim; ++k) {
                cube_index[k] = rem % strata;
                rem /= strata;
            }
            std::fill(sum.begin(), sum.end(), 0.0);
            std::fill(sum2.begin(), sum2.end(), 0.0);
            for (std::size_t s = 0; s < per_cube; ++s) {
                double jac = 1.0;
                for (int k = 0; k < dim; ++k) {
                    const double y = (static_cast<double>(cube_index[k]) + uniform01(rng)) / strata;
                    x[k] = grids[k].map(y, bin[k], jac);
                }
                f(std::span<const double>(x), std::span<double>(out));
                double sq = 0.0;
                for (int m = 0; m < ncomp; ++m) {
                    const double v = out[m] * jac;
                    sum[m] += v;
                    sum2[m] += v * v;
                    sq += v * v;
                }
                for (int k = 0; k < dim; ++k) d[k][bin[k]] += sq;
            }
            const double n = static_cast<double>(per_cube);
            const double vol = 1.0 / static_cast<double>(cubes);
            for (int m = 0; m < ncomp; ++m) {
                const double mean = sum[m] / n;
                const double var = std::max(0.0, sum2[m] / n - mean * mean) / (n - 1.0);
                iter_value[m] += mean * vol;
                iter_var[m] += var * vol * vol;
            }
        }
        result.evaluations += cubes * per_cube;

        if (iter >= settings.warmup_iterations) {
            ++accumulated;
            for (int m = 0; m < ncomp; ++m) {
                acc_plain[m] += iter_value[m];
                if (iter_var[m] > 0.0) {
                    acc_w[m] += 1.0 / iter_var[m];
                    acc_wv[m] += iter_value[m] / iter_var[m];
                }
            }
            double err_sum = 0.0, val_sum = 0.0;
            for (int m = 0; m < ncomp; ++m) {
                auto& e = result.components[m];
                if (acc_w[m] > 0.0) {
                    e.value = acc_wv[m] / acc_w[m];
                    e.error = std::sqrt(1.0 / acc_w[m]);
                } else {
                    e.value = acc_plain[m] / accumulated;
                    e.error = 0.0;
                }
                err_sum += e.error;
                val_sum += std::abs(e.value);
            }
            result.iterations_used = iter + 1;
            if (settings.target_relative_error > 0.0 && accumulated >= 2 &&
                err_sum <= settings.target_relative_error * val_sum) {
                break;
            }
        }
        if (iter + 1 < settings.iterations) {
            for (int k = 0; k < dim; ++k) grids[k].refine(d[k], settings.damping);
        }
    }
    return result;
}

}  // namespace sigate::integrate
