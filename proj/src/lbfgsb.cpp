#include "ctpm/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace ctpm {

namespace {

struct CorrectionPair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

double masked_dot(const std::vector<double>& u, const std::vector<double>& v, const std::vector<char>& free) {
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (free[i]) sum += u[i] * v[i];
    }
    return sum;
}

}  // namespace

LbfgsbResult minimize_box(const Objective& objective,
                          std::vector<double> x0,
                          const BoxBounds& bounds,
                          const LbfgsbOptions& options) {
    const std::size_t n = x0.size();
    if (bounds.lower.size() != n || bounds.upper.size() != n) {
        throw std::invalid_argument("minimize_box: bounds dimension mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(bounds.lower[i] <= bounds.upper[i])) {
            throw std::invalid_argument("minimize_box: lower bound exceeds upper bound");
        }
    }

    const auto project = [&](std::vector<double>& v) {
        for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i], bounds.lower[i], bounds.upper[i]);
    };

    LbfgsbResult result;
    std::vector<double> x = std::move(x0);
    project(x);
    std::vector<double> g(n, 0.0);
    double f = objective(x, g);
    result.evaluations = 1;
    result.x = x;
    result.f = f;
    if (!std::isfinite(f)) {
        result.status = LbfgsbStatus::kNonFiniteObjective;
        return result;
    }

    std::deque<CorrectionPair> memory;
    std::vector<double> pg(n), q(n), d(n), xt(n), gt(n);
    std::vector<char> free(n, 1);
    std::vector<double> alpha_buf;
    bool converged = false;
    bool failed = false;

    while (result.iterations < options.max_iterations) {
        double pg_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pg[i] = std::clamp(x[i] - g[i], bounds.lower[i], bounds.upper[i]) - x[i];
            pg_norm = std::max(pg_norm, std::abs(pg[i]));
            const bool at_lower = x[i] <= bounds.lower[i] && g[i] > 0.0;
            const bool at_upper = x[i] >= bounds.upper[i] && g[i] < 0.0;
            free[i] = (at_lower || at_upper) ? 0 : 1;
        }
        if (pg_norm <= options.pg_tolerance) {
            converged = true;
            break;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            // Two-loop recursion over the free variables.
            for (std::size_t i = 0; i < n; ++i) q[i] = free[i] ? g[i] : 0.0;
            alpha_buf.assign(memory.size(), 0.0);
            for (std::size_t k = memory.size(); k-- > 0;) {
                const CorrectionPair& p = memory[k];
                alpha_buf[k] = p.rho * masked_dot(p.s, q, free);
                for (std::size_t i = 0; i < n; ++i) {
                    if (free[i]) q[i] -= alpha_buf[k] * p.y[i];
                }
            }
            double gamma = 1.0;
            if (!memory.empty()) {
                const CorrectionPair& last = memory.back();
                const double yy = masked_dot(last.y, last.y, free);
                const double sy = masked_dot(last.s, last.y, free);
                if (yy > 0.0 && sy > 0.0) gamma = sy / yy;
            }
            for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
            for (std::size_t k = 0; k < memory.size(); ++k) {
                const CorrectionPair& p = memory[k];
                const double beta = p.rho * masked_dot(p.y, q, free);
                for (std::size_t i = 0; i < n; ++i) {
                    if (free[i]) q[i] += p.s[i] * (alpha_buf[k] - beta);
                }
            }
            double gd = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                d[i] = free[i] ? -q[i] : 0.0;
                gd += g[i] * d[i];
            }
            if (!(gd < 0.0)) {
                memory.clear();
                gd = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    d[i] = free[i] ? -g[i] : 0.0;
                    gd += g[i] * d[i];
                }
            }

            double step = 1.0;
            if (memory.empty()) {
                double norm = 0.0;
                for (std::size_t i = 0; i < n; ++i) norm += d[i] * d[i];
                norm = std::sqrt(norm);
                if (norm > 1.0) step = 1.0 / norm;
            }

            for (std::size_t ls = 0; ls < options.max_line_search_steps; ++ls) {
                for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + step * d[i];
                project(xt);
                double decrease = 0.0;
                for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (xt[i] - x[i]);
                const double ft = objective(xt, gt);
                ++result.evaluations;
                if (std::isfinite(ft) && ft <= f + options.armijo_c1 * decrease) {
                    accepted = true;
                    double sy = 0.0, yy = 0.0;
                    CorrectionPair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
                    for (std::size_t i = 0; i < n; ++i) {
                        pair.s[i] = xt[i] - x[i];
                        pair.y[i] = gt[i] - g[i];
                        sy += pair.s[i] * pair.y[i];
                        yy += pair.y[i] * pair.y[i];
                    }
                    if (sy > 1e-12 * yy && sy > 0.0) {
                        pair.rho = 1.0 / sy;
                        memory.push_back(std::move(pair));
                        if (memory.size() > options.memory) memory.pop_front();
                    }
                    const double rel = (f - ft) / std::max({std::abs(f), std::abs(ft), 1.0});
                    x.swap(xt);
                    g.swap(gt);
                    f = ft;
                    ++result.iterations;
                    if (rel <= options.f_tolerance) converged = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                if (memory.empty()) break;
                memory.clear();
            }
        }
        if (!accepted) {
            failed = true;
            break;
        }
        if (converged) break;
    }

    result.x = x;
    result.f = f;
    if (converged) {
        result.status = LbfgsbStatus::kConverged;
    } else if (failed) {
        result.status = LbfgsbStatus::kLineSearchFailed;
    } else {
        result.status = LbfgsbStatus::kIterationLimit;
    }
    return result;
}

}  // namespace ctpm
