#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace hedgebench::numcore {

struct NelderMeadOptions {
    int max_evaluations = 5000;
    /// Converged when both the spread of simplex values and the simplex
    /// diameter fall below this.
    double tolerance = 1e-8;
    /// Restart from the best vertex until a restart no longer improves.
    int max_restarts = 20;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// Non-finite objective values are treated as +inf.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                                    const Eigen::VectorXd& step, const NelderMeadOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    NelderMeadResult best;
    best.x = x0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++best.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    best.value = eval(x0);

    for (int restart = 0; restart <= opt.max_restarts; ++restart) {
        const double start_value = best.value;
        std::vector<Eigen::VectorXd> simplex{best.x};
        std::vector<double> values{best.value};
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd v = best.x;
            v(i) += step(i);
            simplex.push_back(v);
            values.push_back(eval(v));
        }
        std::vector<std::size_t> order(simplex.size());
        bool converged = false;
        while (best.evaluations < opt.max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
            const std::size_t lo = order.front();
            const std::size_t hi = order.back();
            const std::size_t second = order[order.size() - 2];

            double diameter = 0.0;
            for (const auto& v : simplex) {
                diameter = std::max(diameter, (v - simplex[lo]).lpNorm<Eigen::Infinity>());
            }
            if (std::abs(values[hi] - values[lo]) <= opt.tolerance && diameter <= opt.tolerance) {
                converged = true;
                break;
            }

            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
            for (std::size_t i = 0; i < simplex.size(); ++i) {
                if (i != hi) centroid += simplex[i];
            }
            centroid /= static_cast<double>(n);

            const Eigen::VectorXd xr = centroid + (centroid - simplex[hi]);
            const double fr = eval(xr);
            if (fr < values[lo]) {
                const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[hi]);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[hi] = xe;
                    values[hi] = fe;
                } else {
                    simplex[hi] = xr;
                    values[hi] = fr;
                }
                continue;
            }
            if (fr < values[second]) {
                simplex[hi] = xr;
                values[hi] = fr;
                continue;
            }
            const bool outside = fr < values[hi];
            const Eigen::VectorXd xc =
                outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                        : Eigen::VectorXd(centroid + 0.5 * (simplex[hi] - centroid));
            const double fc = eval(xc);
            if (fc < (outside ? fr : values[hi])) {
                simplex[hi] = xc;
                values[hi] = fc;
                continue;
            }
            for (std::size_t i = 0; i < simplex.size(); ++i) {
                if (i == lo) continue;
                simplex[i] = simplex[lo] + 0.5 * (simplex[i] - simplex[lo]);
                values[i] = eval(simplex[i]);
            }
        }
        const auto it = std::min_element(values.begin(), values.end());
        if (*it < best.value) {
            best.value = *it;
            best.x = simplex[static_cast<std::size_t>(it - values.begin())];
        }
        best.converged = converged;
        if (!converged || best.evaluations >= opt.max_evaluations) {
            break;
        }
        if (start_value - best.value <= opt.tolerance && restart > 0) {
            break;
        }
    }
    return best;
}

}  // namespace hedgebench::numcore
