#pragma once

#include "ctpm/cascade.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctpm {

/// Gap substituted for a zero parent-to-child delay (one-second timestamps
/// make same-time replies common in real dumps).
inline constexpr double kZeroDelayJitterMinutes = 0.5 / 60.0;

// Weibull-shaped base intensity of top-level comments. Total mass is `a`.
[[nodiscard]] double weibull_intensity(double t, double a, double b, double alpha);
[[nodiscard]] double weibull_cumulative(double t, double a, double b, double alpha);

// Lognormal reply-delay kernel.
[[nodiscard]] double lognormal_kernel(double dt, double mu, double sigma);
[[nodiscard]] double lognormal_cdf(double dt, double mu, double sigma);
/// Inverse of lognormal_cdf for p in (0, 1).
[[nodiscard]] double lognormal_quantile(double p, double mu, double sigma);

class NotEnoughData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Event data extracted from one or more cascades, ready for repeated
/// likelihood evaluation.
struct EventData {
    std::vector<double> top_level_times;  // minutes since post, jittered away from 0
    std::vector<double> reply_delays;     // minutes since the direct parent, jittered away from 0
    std::vector<double> horizons;         // one observation horizon per cascade
    std::vector<double> parent_windows;   // T_obs - tau_k for every comment k
    std::size_t event_count{0};

    void append(const CascadeTree& tree, double horizon);
};

[[nodiscard]] EventData make_event_data(const CascadeTree& tree, double horizon);

/// Negative log-likelihood of a cascade with known parent attribution,
/// observed on [0, T_obs]. Top-level comments come from the Weibull intensity,
/// replies from n_b times the lognormal kernel measured from the direct parent.
[[nodiscard]] double neg_log_likelihood(const CascadeTree& tree, const HawkesParams& params, double horizon);
[[nodiscard]] double neg_log_likelihood(const EventData& data, const HawkesParams& params);
/// Same, also writing d(NLL)/d(a, b, alpha, mu, sigma, n_b) into `grad`.
[[nodiscard]] double neg_log_likelihood(const EventData& data,
                                        const HawkesParams& params,
                                        std::span<double, HawkesParams::kSize> grad);

struct FitConfig {
    std::size_t min_comments{10};
    std::size_t max_iterations{1000};
    std::array<double, HawkesParams::kSize> lower_bounds{1e-6, 1e-6, 1e-6, -20.0, 1e-3, 1e-6};
    std::array<double, HawkesParams::kSize> upper_bounds{1e6, 1e7, 50.0, 20.0, 50.0, 1.0};
    /// Observation horizon in minutes; unset means last comment time + 1 minute.
    std::optional<double> time_horizon{};

    void validate() const;
};

enum class FitStatus {
    kConverged,
    kNotConverged,
    kNotEnoughData,  // too few comments for a full fit; params come from a capped refit
};

[[nodiscard]] std::string to_string(FitStatus status);
[[nodiscard]] FitStatus fit_status_from_string(const std::string& text);

inline constexpr double kFailedFitGoodness = 0.95;
inline constexpr double kGoodnessLow = 0.45;
inline constexpr double kGoodnessHigh = 0.85;

struct FitResult {
    HawkesParams params{};
    double g{kFailedFitGoodness};
    bool converged{false};
    std::size_t n_events_used{0};
    double neg_log_lik{0.0};
    std::size_t iterations{0};
    FitStatus status{FitStatus::kNotConverged};

    [[nodiscard]] double per_event_nll() const {
        return n_events_used == 0 ? neg_log_lik : neg_log_lik / static_cast<double>(n_events_used);
    }

    friend bool operator==(const FitResult&, const FitResult&) = default;
};

struct GofStats {
    double min_per_event_nll{0.0};
    double max_per_event_nll{0.0};
};

/// Maps a per-event NLL affinely onto [0.45, 0.85]; the lowest NLL maps to 0.85.
[[nodiscard]] double normalize_gof(double per_event_nll, const GofStats& stats);

/// Min/max per-event NLL over the converged fits, if any.
[[nodiscard]] std::optional<GofStats> gof_stats(std::span<const FitResult> fits);

/// Sets g on every fit: normalized for converged fits, 0.95 otherwise.
void assign_goodness(std::span<FitResult> fits);

[[nodiscard]] double default_horizon(const CascadeTree& tree, const FitConfig& cfg);

/// Moment-style starting point for the optimizer.
[[nodiscard]] HawkesParams initial_guess(const EventData& data);

/// Bounded maximum-likelihood fit. Without an iteration cap the cascade needs
/// at least cfg.min_comments comments, one top-level comment and one reply,
/// otherwise NotEnoughData is thrown. With a cap the minimum is waived.
/// g is left at the degenerate midpoint 0.65 for converged fits until
/// assign_goodness is run over the training set.
[[nodiscard]] FitResult fit(const CascadeTree& tree,
                            const FitConfig& cfg,
                            const std::optional<HawkesParams>& init = std::nullopt,
                            std::optional<std::size_t> iteration_cap = std::nullopt);

/// One shared parameter vector fitted to several cascades at once.
[[nodiscard]] FitResult fit_pooled(std::span<const CascadeTree> trees,
                                   const FitConfig& cfg,
                                   const std::optional<HawkesParams>& init = std::nullopt);

/// Refines inferred parameters using a partially observed cascade, capping the
/// optimizer at one iteration per observed comment.
[[nodiscard]] FitResult refit_partial(const CascadeTree& observed, const HawkesParams& inferred, const FitConfig& cfg);

/// Fits for a whole training corpus. Cascades too small for a full fit get
/// a capped refit from the default embedding and status kNotEnoughData.
/// Goodness scores are assigned over the result.
[[nodiscard]] std::vector<FitResult> fit_all(std::span<const CascadeTree> trees, const FitConfig& cfg, unsigned jobs = 1);

}  // namespace ctpm
