#include "ctpm/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace ctpm {

std::string to_string(Model m) {
    switch (m) {
        case Model::kCtpm: return "ctpm";
        case Model::kHawkesObserved: return "hawkes";
        case Model::kRandomCascade: return "randcascade";
        case Model::kRandSim: return "randsim";
        case Model::kAvgSim: return "avgsim";
    }
    return "unknown";
}

Model model_from_string(const std::string& name) {
    for (const Model m : kAllModels) {
        if (to_string(m) == name) return m;
    }
    throw std::invalid_argument("unknown model '" + name + "'");
}

std::optional<FitResult> fit_observed(const CascadeTree& observed, const FitConfig& fit_cfg) {
    constexpr std::size_t kMinObserved = 10;
    if (observed.comment_count() < std::max(kMinObserved, fit_cfg.min_comments)) return std::nullopt;
    FitResult result;
    try {
        result = fit(observed, fit_cfg);
    } catch (const NotEnoughData&) {
        return std::nullopt;
    }
    if (!result.converged) return std::nullopt;
    return result;
}

std::optional<SimulationResult> hawkes_observed(const CascadeTree& observed,
                                                const FitConfig& fit_cfg,
                                                const SimConfig& sim_cfg,
                                                std::optional<double> observed_until) {
    const auto result = fit_observed(observed, fit_cfg);
    if (!result) return std::nullopt;
    return simulate_tree(result->params, sim_cfg, observed, observed_until);
}

CascadeTree random_cascade(std::span<const CascadeTree> train, Rng& rng) {
    if (train.empty()) throw std::invalid_argument("random_cascade: empty training set");
    std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
    return train[pick(rng)];
}

SimulationResult rand_sim(std::span<const FitResult> fits,
                          const CascadeTree& observed,
                          const SimConfig& cfg,
                          Rng& rng,
                          std::optional<double> observed_until) {
    if (fits.empty()) throw std::invalid_argument("rand_sim: empty fit table");
    std::uniform_int_distribution<std::size_t> pick(0, fits.size() - 1);
    return simulate_tree(fits[pick(rng)].params, cfg, observed, observed_until);
}

HawkesParams average_params(std::span<const FitResult> fits) {
    if (fits.empty()) throw std::invalid_argument("average_params: empty fit table");
    std::array<double, HawkesParams::kSize> sum{};
    for (const FitResult& f : fits) {
        const auto a = f.params.to_array();
        for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += a[d];
    }
    for (double& v : sum) v /= static_cast<double>(fits.size());
    return HawkesParams::from_array(sum);
}

SimulationResult avg_sim(std::span<const FitResult> fits,
                         const CascadeTree& observed,
                         const SimConfig& cfg,
                         std::optional<double> observed_until) {
    return simulate_tree(average_params(fits), cfg, observed, observed_until);
}

}  // namespace ctpm
