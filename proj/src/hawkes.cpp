#include "ctpm/hawkes.hpp"

#include "ctpm/lbfgsb.hpp"
#include "ctpm/parallel.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctpm {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be finite and positive");
    }
}

double std_normal_cdf(double v) { return 0.5 * std::erfc(-v / std::numbers::sqrt2); }

double std_normal_pdf(double v) { return std::exp(-0.5 * v * v - kLogSqrt2Pi); }

}  // namespace

double weibull_intensity(double t, double a, double b, double alpha) {
    require_positive(a, "a");
    require_positive(b, "b");
    require_positive(alpha, "alpha");
    if (!(t >= 0.0)) throw std::invalid_argument("weibull_intensity: t must be non-negative");
    if (t == 0.0) {
        if (alpha > 1.0) return 0.0;
        if (alpha == 1.0) return a / b;
        return std::numeric_limits<double>::infinity();
    }
    const double x = t / b;
    return a * (alpha / b) * std::pow(x, alpha - 1.0) * std::exp(-std::pow(x, alpha));
}

double weibull_cumulative(double t, double a, double b, double alpha) {
    require_positive(a, "a");
    require_positive(b, "b");
    require_positive(alpha, "alpha");
    if (!(t >= 0.0)) throw std::invalid_argument("weibull_cumulative: t must be non-negative");
    if (std::isinf(t)) return a;
    return -a * std::expm1(-std::pow(t / b, alpha));
}

double lognormal_kernel(double dt, double mu, double sigma) {
    require_positive(sigma, "sigma");
    if (!(dt > 0.0)) throw std::invalid_argument("lognormal_kernel: dt must be positive");
    const double u = (std::log(dt) - mu) / sigma;
    return std::exp(-0.5 * u * u - kLogSqrt2Pi) / (sigma * dt);
}

double lognormal_cdf(double dt, double mu, double sigma) {
    require_positive(sigma, "sigma");
    if (!(dt > 0.0)) return 0.0;
    if (std::isinf(dt)) return 1.0;
    return std_normal_cdf((std::log(dt) - mu) / sigma);
}

double lognormal_quantile(double p, double mu, double sigma) {
    require_positive(sigma, "sigma");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("lognormal_quantile: p must lie in (0, 1)");
    const double z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
    return std::exp(mu + sigma * z);
}

void EventData::append(const CascadeTree& tree, double horizon) {
    if (!(horizon >= tree.last_time())) {
        throw std::invalid_argument("post " + tree.root().post_id + ": horizon precedes the latest comment");
    }
    const auto& rel = tree.relative_times();
    const auto& parent = tree.parent_indices();
    for (std::size_t i = 0; i < rel.size(); ++i) {
        const int p = parent[i];
        const double parent_time = p == CascadeTree::kRootIndex ? 0.0 : rel[static_cast<std::size_t>(p)];
        double gap = rel[i] - parent_time;
        if (gap < 0.0) {
            throw std::invalid_argument("comment " + tree.comments()[i].comment_id + " precedes its parent");
        }
        if (gap == 0.0) gap = kZeroDelayJitterMinutes;
        if (p == CascadeTree::kRootIndex) {
            top_level_times.push_back(gap);
        } else {
            reply_delays.push_back(gap);
        }
        parent_windows.push_back(horizon - rel[i]);
    }
    horizons.push_back(horizon);
    event_count += rel.size();
}

EventData make_event_data(const CascadeTree& tree, double horizon) {
    EventData data;
    data.append(tree, horizon);
    return data;
}

double neg_log_likelihood(const EventData& data,
                          const HawkesParams& params,
                          std::span<double, HawkesParams::kSize> grad) {
    const double a = params.a, b = params.b, alpha = params.alpha;
    const double mu = params.mu, sigma = params.sigma, nb = params.n_b;
    require_positive(a, "a");
    require_positive(b, "b");
    require_positive(alpha, "alpha");
    require_positive(sigma, "sigma");
    require_positive(nb, "n_b");

    double ll = 0.0;
    double da = 0.0, db = 0.0, dalpha = 0.0, dmu = 0.0, dsigma = 0.0, dnb = 0.0;

    const double log_a = std::log(a), log_b = std::log(b), log_alpha = std::log(alpha);
    for (const double t : data.top_level_times) {
        const double lr = std::log(t) - log_b;
        const double z = std::exp(alpha * lr);
        ll += log_a + log_alpha - log_b + (alpha - 1.0) * lr - z;
        da += 1.0 / a;
        db += alpha * (z - 1.0) / b;
        dalpha += 1.0 / alpha + lr - z * lr;
    }
    for (const double horizon : data.horizons) {
        if (!(horizon > 0.0)) continue;
        const double lr = std::log(horizon) - log_b;
        const double z = std::exp(alpha * lr);
        const double e = std::exp(-z);
        ll -= -a * std::expm1(-z);
        da -= -std::expm1(-z);
        db += a * e * alpha * z / b;
        dalpha -= a * e * z * lr;
    }

    const double log_nb = std::log(nb), log_sigma = std::log(sigma);
    for (const double d : data.reply_delays) {
        const double ld = std::log(d);
        const double u = (ld - mu) / sigma;
        ll += log_nb - log_sigma - ld - kLogSqrt2Pi - 0.5 * u * u;
        dnb += 1.0 / nb;
        dmu += u / sigma;
        dsigma += (u * u - 1.0) / sigma;
    }
    for (const double w : data.parent_windows) {
        if (!(w > 0.0)) continue;
        const double v = (std::log(w) - mu) / sigma;
        const double cdf = std_normal_cdf(v);
        const double pdf = std_normal_pdf(v);
        ll -= nb * cdf;
        dnb -= cdf;
        dmu += nb * pdf / sigma;
        dsigma += nb * pdf * v / sigma;
    }

    grad[0] = -da;
    grad[1] = -db;
    grad[2] = -dalpha;
    grad[3] = -dmu;
    grad[4] = -dsigma;
    grad[5] = -dnb;
    return -ll;
}

double neg_log_likelihood(const EventData& data, const HawkesParams& params) {
    std::array<double, HawkesParams::kSize> grad{};
    return neg_log_likelihood(data, params, grad);
}

double neg_log_likelihood(const CascadeTree& tree, const HawkesParams& params, double horizon) {
    return neg_log_likelihood(make_event_data(tree, horizon), params);
}

void FitConfig::validate() const {
    if (min_comments < 1) throw std::invalid_argument("min_comments must be at least 1");
    for (std::size_t i = 0; i < HawkesParams::kSize; ++i) {
        if (i != 3 && !(lower_bounds[i] > 0.0)) {
            throw std::invalid_argument("lower bounds for a, b, alpha, sigma, n_b must be positive");
        }
        if (!(lower_bounds[i] < upper_bounds[i])) throw std::invalid_argument("empty parameter box");
    }
    if (time_horizon && !(*time_horizon >= 0.0)) throw std::invalid_argument("time_horizon must be non-negative");
}

std::string to_string(FitStatus status) {
    switch (status) {
        case FitStatus::kConverged: return "converged";
        case FitStatus::kNotConverged: return "not_converged";
        case FitStatus::kNotEnoughData: return "not_enough_data";
    }
    return "unknown";
}

FitStatus fit_status_from_string(const std::string& text) {
    if (text == "converged") return FitStatus::kConverged;
    if (text == "not_converged") return FitStatus::kNotConverged;
    if (text == "not_enough_data") return FitStatus::kNotEnoughData;
    throw std::invalid_argument("unknown fit status: " + text);
}

double normalize_gof(double per_event_nll, const GofStats& stats) {
    const double span = stats.max_per_event_nll - stats.min_per_event_nll;
    if (!(span > 0.0)) return 0.5 * (kGoodnessLow + kGoodnessHigh);
    const double frac = std::clamp((per_event_nll - stats.min_per_event_nll) / span, 0.0, 1.0);
    return kGoodnessHigh - frac * (kGoodnessHigh - kGoodnessLow);
}

std::optional<GofStats> gof_stats(std::span<const FitResult> fits) {
    std::optional<GofStats> stats;
    for (const FitResult& f : fits) {
        if (!f.converged) continue;
        const double v = f.per_event_nll();
        if (!stats) {
            stats = GofStats{v, v};
        } else {
            stats->min_per_event_nll = std::min(stats->min_per_event_nll, v);
            stats->max_per_event_nll = std::max(stats->max_per_event_nll, v);
        }
    }
    return stats;
}

void assign_goodness(std::span<FitResult> fits) {
    const auto stats = gof_stats(fits);
    for (FitResult& f : fits) {
        f.g = f.converged ? normalize_gof(f.per_event_nll(), *stats) : kFailedFitGoodness;
    }
}

double default_horizon(const CascadeTree& tree, const FitConfig& cfg) {
    return cfg.time_horizon ? *cfg.time_horizon : tree.last_time() + 1.0;
}

HawkesParams initial_guess(const EventData& data) {
    HawkesParams p = kDefaultEmbedding;
    const double cascades = static_cast<double>(std::max<std::size_t>(data.horizons.size(), 1));
    if (!data.top_level_times.empty()) {
        double sum = 0.0;
        for (const double t : data.top_level_times) sum += t;
        p.a = static_cast<double>(data.top_level_times.size()) / cascades;
        p.b = std::max(sum / static_cast<double>(data.top_level_times.size()), 1e-3);
        p.alpha = 1.0;
    }
    if (!data.reply_delays.empty()) {
        double sum = 0.0, sq = 0.0;
        for (const double d : data.reply_delays) {
            const double l = std::log(d);
            sum += l;
            sq += l * l;
        }
        const double n = static_cast<double>(data.reply_delays.size());
        p.mu = std::clamp(sum / n, -19.0, 19.0);
        const double var = sq / n - p.mu * p.mu;
        p.sigma = var > 0.25 ? std::sqrt(var) : 0.5;
        p.n_b = std::max(n / static_cast<double>(data.event_count), 0.01);
    }
    return p;
}

namespace {

FitResult run_optimizer(const EventData& data,
                        const FitConfig& cfg,
                        const HawkesParams& start,
                        std::size_t max_iterations) {
    std::array<double, HawkesParams::kSize> scale{};
    const auto start_vec = start.to_array();
    for (std::size_t i = 0; i < HawkesParams::kSize; ++i) {
        scale[i] = i == 3 ? 1.0 : std::max(std::abs(start_vec[i]), 1.0);
    }

    BoxBounds bounds;
    std::vector<double> x0(HawkesParams::kSize);
    for (std::size_t i = 0; i < HawkesParams::kSize; ++i) {
        bounds.lower.push_back(cfg.lower_bounds[i] / scale[i]);
        bounds.upper.push_back(cfg.upper_bounds[i] / scale[i]);
        x0[i] = start_vec[i] / scale[i];
    }

    const Objective objective = [&](std::span<const double> x, std::span<double> grad) {
        std::array<double, HawkesParams::kSize> p{};
        for (std::size_t i = 0; i < HawkesParams::kSize; ++i) p[i] = x[i] * scale[i];
        std::array<double, HawkesParams::kSize> g{};
        double f;
        try {
            f = neg_log_likelihood(data, HawkesParams::from_array(p), g);
        } catch (const std::invalid_argument&) {
            return std::numeric_limits<double>::infinity();
        }
        for (std::size_t i = 0; i < HawkesParams::kSize; ++i) grad[i] = g[i] * scale[i];
        return f;
    };

    LbfgsbOptions options;
    options.max_iterations = max_iterations;
    const LbfgsbResult opt = minimize_box(objective, std::move(x0), bounds, options);

    std::array<double, HawkesParams::kSize> best{};
    for (std::size_t i = 0; i < HawkesParams::kSize; ++i) best[i] = opt.x[i] * scale[i];

    FitResult result;
    // An untouched start point is returned verbatim rather than via the
    // scale round trip.
    result.params = opt.iterations == 0 ? start : HawkesParams::from_array(best);
    result.neg_log_lik = opt.f;
    result.iterations = opt.iterations;
    result.n_events_used = data.event_count;
    result.converged = opt.converged() && std::isfinite(opt.f);
    result.status = result.converged ? FitStatus::kConverged : FitStatus::kNotConverged;
    result.g = result.converged ? 0.5 * (kGoodnessLow + kGoodnessHigh) : kFailedFitGoodness;
    return result;
}

HawkesParams clamp_to_box(HawkesParams p, const FitConfig& cfg) {
    auto v = p.to_array();
    for (std::size_t i = 0; i < HawkesParams::kSize; ++i) v[i] = std::clamp(v[i], cfg.lower_bounds[i], cfg.upper_bounds[i]);
    return HawkesParams::from_array(v);
}

}  // namespace

FitResult fit(const CascadeTree& tree,
              const FitConfig& cfg,
              const std::optional<HawkesParams>& init,
              std::optional<std::size_t> iteration_cap) {
    cfg.validate();
    const EventData data = make_event_data(tree, default_horizon(tree, cfg));
    if (!iteration_cap) {
        if (tree.comment_count() < cfg.min_comments) {
            throw NotEnoughData("post " + tree.root().post_id + ": " + std::to_string(tree.comment_count()) +
                                " comments, need " + std::to_string(cfg.min_comments));
        }
        if (data.top_level_times.empty() || data.reply_delays.empty()) {
            throw NotEnoughData("post " + tree.root().post_id + ": needs both top-level comments and replies");
        }
    }
    const HawkesParams start = clamp_to_box(init ? *init : initial_guess(data), cfg);
    const std::size_t iterations = iteration_cap ? std::min(*iteration_cap, cfg.max_iterations) : cfg.max_iterations;
    return run_optimizer(data, cfg, start, iterations);
}

FitResult fit_pooled(std::span<const CascadeTree> trees, const FitConfig& cfg, const std::optional<HawkesParams>& init) {
    cfg.validate();
    EventData data;
    for (const CascadeTree& t : trees) data.append(t, default_horizon(t, cfg));
    if (data.event_count < cfg.min_comments || data.top_level_times.empty() || data.reply_delays.empty()) {
        throw NotEnoughData("pooled cascades have too few events for a fit");
    }
    const HawkesParams start = clamp_to_box(init ? *init : initial_guess(data), cfg);
    return run_optimizer(data, cfg, start, cfg.max_iterations);
}

FitResult refit_partial(const CascadeTree& observed, const HawkesParams& inferred, const FitConfig& cfg) {
    if (observed.comment_count() == 0) {
        FitResult result;
        result.params = inferred;
        result.converged = false;
        result.g = kFailedFitGoodness;
        result.status = FitStatus::kNotEnoughData;
        return result;
    }
    return fit(observed, cfg, inferred, observed.comment_count());
}

std::vector<FitResult> fit_all(std::span<const CascadeTree> trees, const FitConfig& cfg, unsigned jobs) {
    std::vector<FitResult> fits(trees.size());
    parallel_for(trees.size(), jobs, [&](std::size_t i) {
        try {
            fits[i] = fit(trees[i], cfg);
        } catch (const NotEnoughData&) {
            FitResult r = refit_partial(trees[i], kDefaultEmbedding, cfg);
            r.converged = false;
            r.status = FitStatus::kNotEnoughData;
            fits[i] = r;
        }
    });
    assign_goodness(fits);
    return fits;
}

}  // namespace ctpm
