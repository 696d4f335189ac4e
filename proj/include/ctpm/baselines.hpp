#pragma once

#include "ctpm/cascade.hpp"
#include "ctpm/hawkes.hpp"
#include "ctpm/rng.hpp"
#include "ctpm/simulate.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>

namespace ctpm {

enum class Model { kCtpm, kHawkesObserved, kRandomCascade, kRandSim, kAvgSim };

inline constexpr std::array<Model, 5> kAllModels{Model::kCtpm, Model::kHawkesObserved, Model::kRandomCascade,
                                                 Model::kRandSim, Model::kAvgSim};

/// CLI names: ctpm, hawkes, randcascade, randsim, avgsim.
[[nodiscard]] std::string to_string(Model m);
[[nodiscard]] Model model_from_string(const std::string& name);

/// Fit of the observed prefix alone, or nullopt when the model makes no
/// prediction (fewer than 10 observed comments, or a failed fit).
[[nodiscard]] std::optional<FitResult> fit_observed(const CascadeTree& observed, const FitConfig& fit_cfg);

/// Fits the observed prefix alone and simulates the remainder. nullopt (no
/// prediction) below 10 observed comments or when the fit does not converge.
/// `fit_cfg.time_horizon` should be the observation window.
[[nodiscard]] std::optional<SimulationResult> hawkes_observed(const CascadeTree& observed,
                                                              const FitConfig& fit_cfg,
                                                              const SimConfig& sim_cfg,
                                                              std::optional<double> observed_until = std::nullopt);

/// Copy of a uniformly drawn training cascade.
[[nodiscard]] CascadeTree random_cascade(std::span<const CascadeTree> train, Rng& rng);

/// Simulates from a uniformly drawn training fit, continuing `observed`.
[[nodiscard]] SimulationResult rand_sim(std::span<const FitResult> fits,
                                        const CascadeTree& observed,
                                        const SimConfig& cfg,
                                        Rng& rng,
                                        std::optional<double> observed_until = std::nullopt);

/// Component-wise arithmetic mean of the fitted parameters.
[[nodiscard]] HawkesParams average_params(std::span<const FitResult> fits);

[[nodiscard]] SimulationResult avg_sim(std::span<const FitResult> fits,
                                       const CascadeTree& observed,
                                       const SimConfig& cfg,
                                       std::optional<double> observed_until = std::nullopt);

}  // namespace ctpm
