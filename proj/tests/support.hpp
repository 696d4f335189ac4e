#pragma once

// Helpers and independent oracles shared by the unit and acceptance tests.

#include "ctpm/cascade.hpp"
#include "ctpm/hawkes.hpp"
#include "ctpm/rng.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace testing {

using ctpm::CascadeTree;
using ctpm::Comment;
using ctpm::HawkesParams;
using ctpm::Post;

struct Spec {
    std::string id;
    std::string parent;
    double minutes;
};

inline Post make_post(const std::string& id = "p", double created_at = 0.0) {
    return Post{id, "author", "a title", created_at, "test"};
}

inline CascadeTree make_tree(const std::vector<Spec>& specs, const std::string& post_id = "p") {
    std::vector<Comment> comments;
    for (const Spec& s : specs) comments.push_back({s.id, s.parent, s.minutes * 60.0, 0});
    return CascadeTree::build(make_post(post_id), std::move(comments));
}

/// Random recursive tree with `comments` comments and increasing times.
inline CascadeTree random_tree(std::size_t comments, ctpm::Rng& rng, const std::string& post_id = "p") {
    std::vector<Spec> specs;
    std::vector<double> times{0.0};
    std::vector<std::string> ids{post_id};
    std::exponential_distribution<double> gap(0.2);
    double clock = 0.0;
    for (std::size_t i = 0; i < comments; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
        const std::size_t parent = pick(rng);
        clock += gap(rng);
        const std::string id = "c" + std::to_string(i);
        specs.push_back({id, ids[parent], clock});
        ids.push_back(id);
        times.push_back(clock);
    }
    return make_tree(specs, post_id);
}

/// Sum over ordered node pairs of the path length, by BFS from every node,
/// divided by n(n-1).
inline double bfs_virality(const CascadeTree& t) {
    const std::size_t n = t.comment_count() + 1;
    std::vector<std::vector<std::size_t>> adj(n);
    const auto& parent = t.parent_indices();
    for (std::size_t i = 0; i < t.comment_count(); ++i) {
        const std::size_t u = i + 1;
        const std::size_t p = static_cast<std::size_t>(parent[i] + 1);
        adj[u].push_back(p);
        adj[p].push_back(u);
    }
    std::uint64_t total = 0;
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<int> dist(n, -1);
        std::deque<std::size_t> q{s};
        dist[s] = 0;
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop_front();
            for (const std::size_t v : adj[u]) {
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        for (const int d : dist) total += static_cast<std::uint64_t>(d);
    }
    return static_cast<double>(total) / static_cast<double>(n * (n - 1));
}

// Log-likelihood oracle: densities written out directly, compensators by
// numerical quadrature instead of closed forms.
inline double oracle_weibull_density(double t, const HawkesParams& p) {
    return p.a * (p.alpha / p.b) * std::pow(t / p.b, p.alpha - 1.0) * std::exp(-std::pow(t / p.b, p.alpha));
}

inline double oracle_lognormal_density(double t, const HawkesParams& p) {
    const double z = (std::log(t) - p.mu) / p.sigma;
    return std::exp(-0.5 * z * z) / (t * p.sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double integrate(auto&& f, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(f, lo, hi, 1e-14);
}

inline double oracle_nll(const CascadeTree& tree, const HawkesParams& p, double horizon) {
    const auto& rel = tree.relative_times();
    const auto& parent = tree.parent_indices();
    const double jitter = 0.5 / 60.0;
    double ll = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
        const double base = parent[i] < 0 ? 0.0 : rel[static_cast<std::size_t>(parent[i])];
        double dt = rel[i] - base;
        if (dt == 0.0) dt = jitter;
        if (parent[i] < 0) {
            ll += std::log(oracle_weibull_density(dt, p));
        } else {
            ll += std::log(p.n_b * oracle_lognormal_density(dt, p));
        }
    }
    ll -= integrate([&](double t) { return oracle_weibull_density(t, p); }, 0.0, horizon);
    for (std::size_t i = 0; i < rel.size(); ++i) {
        const double window = horizon - rel[i];
        // In log time the lognormal mass is a normal integral over (-inf, log window].
        const double upper = (std::log(window) - p.mu) / p.sigma;
        const double mass = window > 0.0 ? integrate([](double z) { return std::exp(-0.5 * z * z); }, -40.0, upper) /
                                               std::sqrt(2.0 * std::numbers::pi)
                                         : 0.0;
        ll -= p.n_b * mass;
    }
    return -ll;
}

/// Brute-force pruned edge set: every candidate pair (weight > 0) scored
/// directly, each node ranks its candidates by (weight desc, post_id asc), and
/// a pair survives when it is in the top n of either endpoint.
struct OracleNode {
    std::string post_id;
    std::string author;
    std::string title;
};

inline std::vector<std::string> oracle_tokens(const std::string& title) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : title + " ") {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline double oracle_weight(const OracleNode& x, const OracleNode& y) {
    const auto a = oracle_tokens(x.title);
    const auto b = oracle_tokens(y.title);
    std::size_t shared = 0;
    for (const auto& t : a) shared += static_cast<std::size_t>(std::count(b.begin(), b.end(), t));
    const std::size_t uni = a.size() + b.size() - shared;
    return (x.author == y.author ? 1.0 : 0.0) + (uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni));
}

/// Indices of the top n candidates of `from` among `others` (excluding itself).
inline std::vector<std::size_t> oracle_top(const OracleNode& from,
                                           const std::vector<OracleNode>& others,
                                           std::size_t skip,
                                           std::size_t n) {
    std::vector<std::pair<double, std::size_t>> cands;
    for (std::size_t v = 0; v < others.size(); ++v) {
        if (v == skip) continue;
        const double w = oracle_weight(from, others[v]);
        if (w > 0.0) cands.push_back({w, v});
    }
    std::sort(cands.begin(), cands.end(), [&](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return others[x.second].post_id < others[y.second].post_id;
    });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cands.size() && i < n; ++i) out.push_back(cands[i].second);
    return out;
}

/// (u, v, weight) with u < v, sorted.
inline std::vector<std::tuple<std::size_t, std::size_t, double>> oracle_edges(const std::vector<OracleNode>& nodes,
                                                                               std::size_t n) {
    std::set<std::pair<std::size_t, std::size_t>> kept;
    for (std::size_t u = 0; u < nodes.size(); ++u) {
        for (const std::size_t v : oracle_top(nodes[u], nodes, u, n)) kept.insert({std::min(u, v), std::max(u, v)});
    }
    std::vector<std::tuple<std::size_t, std::size_t, double>> out;
    for (const auto& [u, v] : kept) out.emplace_back(u, v, oracle_weight(nodes[u], nodes[v]));
    return out;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ctpm_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
