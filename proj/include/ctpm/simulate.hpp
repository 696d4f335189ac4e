#pragma once

#include "ctpm/cascade.hpp"
#include "ctpm/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace ctpm {

struct SimConfig {
    double T{30.0 * 24.0 * 60.0};  // cutoff, minutes
    std::size_t N{2000};           // max comments per tree
    std::uint64_t seed{0};
    std::size_t runs{5};

    void validate() const;
};

/// Immigrant (top-level comment) times on (start, T], drawn as an
/// inhomogeneous Poisson process with the Weibull intensity: a Poisson count
/// with mean Lambda(T) - Lambda(start), then i.i.d. times by inverting the
/// conditional CDF. Sorted ascending.
[[nodiscard]] std::vector<double> sample_immigrants(const HawkesParams& params, double T, Rng& rng, double start = 0.0);

/// Replies to an event at `parent_time`, restricted to (not_before, T]. The
/// count is Poisson with mean n_b times the lognormal mass of that window and
/// the delays are drawn from the truncated lognormal by inverse CDF.
/// `not_before` defaults to parent_time. Sorted absolute times.
[[nodiscard]] std::vector<double> sample_offspring(double parent_time,
                                                   const HawkesParams& params,
                                                   double T,
                                                   Rng& rng,
                                                   std::optional<double> not_before = std::nullopt);

struct SimulationResult {
    CascadeTree tree;
    bool truncated{false};  // the N cap stopped the simulation
    std::size_t simulated_comments{0};
};

/// Generates a full cascade. `start` supplies the post and any observed
/// comments; the simulation continues it from `observed_until` (default: the
/// latest observed comment time). New top-level comments arrive on
/// (observed_until, T], every comment spawns replies, and observed comments
/// only spawn replies landing after observed_until. Expansion is breadth
/// first and stops when the frontier empties or the tree holds N comments.
[[nodiscard]] SimulationResult simulate_tree(const HawkesParams& params,
                                             const SimConfig& cfg,
                                             const CascadeTree& start,
                                             std::optional<double> observed_until = std::nullopt);

}  // namespace ctpm
