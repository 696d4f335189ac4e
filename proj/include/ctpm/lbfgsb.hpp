#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace ctpm {

/// Objective callback: returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BoxBounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct LbfgsbOptions {
    std::size_t memory{10};
    std::size_t max_iterations{1000};
    /// Stop when the projected gradient's infinity norm falls below this.
    double pg_tolerance{1e-5};
    /// Stop when (f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1) falls below this.
    double f_tolerance{2.2e-9};
    double armijo_c1{1e-4};
    std::size_t max_line_search_steps{40};
};

enum class LbfgsbStatus {
    kConverged,
    kIterationLimit,
    kLineSearchFailed,
    kNonFiniteObjective,
};

struct LbfgsbResult {
    std::vector<double> x;
    double f{std::numeric_limits<double>::infinity()};
    std::size_t iterations{0};
    std::size_t evaluations{0};
    LbfgsbStatus status{LbfgsbStatus::kIterationLimit};

    [[nodiscard]] bool converged() const noexcept { return status == LbfgsbStatus::kConverged; }
};

/// Limited-memory quasi-Newton minimization over a box. Steps follow the
/// two-loop L-BFGS direction restricted to the free variables and are
/// projected back onto the box during a backtracking Armijo search. The
/// returned point is always the best iterate seen, and an iteration count of
/// zero returns the (projected) start point.
[[nodiscard]] LbfgsbResult minimize_box(const Objective& objective,
                                        std::vector<double> x0,
                                        const BoxBounds& bounds,
                                        const LbfgsbOptions& options = {});

}  // namespace ctpm
