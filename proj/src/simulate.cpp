#include "ctpm/simulate.hpp"

#include "ctpm/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace ctpm {

void SimConfig::validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("SimConfig: T must be positive");
    if (N < 1) throw std::invalid_argument("SimConfig: N must be at least 1");
    if (runs < 1) throw std::invalid_argument("SimConfig: runs must be at least 1");
}

namespace {

std::size_t poisson_count(double mean, Rng& rng) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<std::size_t> dist(mean);
    return dist(rng);
}

// Uniform on the open interval (0, 1).
double open_uniform(Rng& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double u;
    do {
        u = dist(rng);
    } while (u <= 0.0);
    return u;
}

}  // namespace

std::vector<double> sample_immigrants(const HawkesParams& params, double T, Rng& rng, double start) {
    std::vector<double> times;
    if (!(T > start)) return times;
    const double b = params.b, alpha = params.alpha;
    // Survival-function offsets S(t) - 1 = expm1(-(t/b)^alpha), kept in
    // expm1 form for precision near t = 0.
    const double s0m1 = std::expm1(-std::pow(start / b, alpha));
    const double sTm1 = std::isinf(T) ? -1.0 : std::expm1(-std::pow(T / b, alpha));
    const double mass = params.a * (s0m1 - sTm1);
    const std::size_t count = poisson_count(mass, rng);
    times.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = open_uniform(rng);
        const double sm1 = s0m1 - u * (s0m1 - sTm1);
        double t = b * std::pow(-std::log1p(sm1), 1.0 / alpha);
        if (!(t > start)) t = std::nextafter(start, std::numeric_limits<double>::infinity());
        if (t > T) t = T;
        times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    return times;
}

std::vector<double> sample_offspring(double parent_time,
                                     const HawkesParams& params,
                                     double T,
                                     Rng& rng,
                                     std::optional<double> not_before) {
    std::vector<double> times;
    const double lo = std::max(0.0, not_before.value_or(parent_time) - parent_time);
    const double hi = T - parent_time;
    if (!(hi > lo) || !(params.n_b > 0.0)) return times;
    const double f_lo = lognormal_cdf(lo, params.mu, params.sigma);
    const double f_hi = lognormal_cdf(hi, params.mu, params.sigma);
    const std::size_t count = poisson_count(params.n_b * (f_hi - f_lo), rng);
    times.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double p = f_lo + open_uniform(rng) * (f_hi - f_lo);
        p = std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
        double dt = lognormal_quantile(p, params.mu, params.sigma);
        dt = std::clamp(dt, std::nextafter(lo, hi), hi);
        times.push_back(parent_time + dt);
    }
    std::sort(times.begin(), times.end());
    return times;
}

SimulationResult simulate_tree(const HawkesParams& params,
                               const SimConfig& cfg,
                               const CascadeTree& start,
                               std::optional<double> observed_until) {
    cfg.validate();
    const double t_last = std::max(observed_until.value_or(start.last_time()), start.last_time());
    if (start.comment_count() > 0 && !(start.last_time() < cfg.T)) {
        throw std::invalid_argument("simulate_tree: observed comments must precede T");
    }

    Rng rng(cfg.seed);
    const Post& root = start.root();

    struct Node {
        double time;
        std::string id;
        bool observed;
    };
    std::vector<Node> nodes;
    std::vector<Comment> comments(start.comments().begin(), start.comments().end());
    nodes.reserve(comments.size());
    for (std::size_t i = 0; i < comments.size(); ++i) {
        nodes.push_back({start.relative_times()[i], comments[i].comment_id, true});
    }

    std::unordered_set<std::string> taken;
    for (const Comment& c : comments) taken.insert(c.comment_id);

    SimulationResult result;
    std::size_t serial = 0;
    std::deque<std::size_t> frontier;
    for (std::size_t i = 0; i < nodes.size(); ++i) frontier.push_back(i);

    const auto add_event = [&](double t, const std::string& parent_id) {
        if (comments.size() >= cfg.N) {
            result.truncated = true;
            return false;
        }
        std::string id;
        do {
            id = "sim" + std::to_string(serial++);
        } while (taken.count(id) > 0 || id == root.post_id);
        comments.push_back({id, parent_id, root.created_at + t * kSecondsPerMinute, 0});
        nodes.push_back({t, std::move(id), false});
        frontier.push_back(nodes.size() - 1);
        ++result.simulated_comments;
        return true;
    };

    for (const double t : sample_immigrants(params, cfg.T, rng, t_last)) {
        if (!add_event(t, root.post_id)) break;
    }
    while (!frontier.empty() && !result.truncated) {
        const std::size_t i = frontier.front();
        frontier.pop_front();
        const double parent_time = nodes[i].time;
        const std::optional<double> floor = nodes[i].observed ? std::optional<double>(t_last) : std::nullopt;
        const std::string parent_id = nodes[i].id;
        for (const double t : sample_offspring(parent_time, params, cfg.T, rng, floor)) {
            if (!add_event(t, parent_id)) break;
        }
    }

    result.tree = CascadeTree::build(root, std::move(comments));
    return result;
}

}  // namespace ctpm
