#include "ctpm/infer.hpp"

#include <algorithm>
#include <stdexcept>

namespace ctpm {

void InferConfig::validate(const PostGraph& g) const {
    if (!(r_base > 0.0)) throw std::invalid_argument("InferConfig: r_base must be positive");
    if (epochs < 1) throw std::invalid_argument("InferConfig: epochs must be at least 1");
    if (walk_length < 1) throw std::invalid_argument("InferConfig: walk_length must be at least 1");
    if (walks_per_node > g.top_n()) {
        throw std::invalid_argument("InferConfig: walks_per_node must not exceed the graph's top_n");
    }
}

std::vector<NodeState> init_embeddings(const PostGraph& g_star) {
    const auto unknown = g_star.unknown();
    if (!unknown) throw std::invalid_argument("init_embeddings: graph has no unknown post");
    std::vector<NodeState> states(g_star.node_count());
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (i == *unknown) {
            states[i] = {kDefaultEmbedding.to_array(), 0.0};
            continue;
        }
        const GraphNode& node = g_star.node(i);
        if (!node.fit) throw std::invalid_argument("init_embeddings: no fit for training post " + node.post_id);
        states[i] = {node.fit->params.to_array(), node.fit->g};
    }
    return states;
}

double learning_rate(double g, std::size_t k, std::size_t K, double r_base) {
    return (1.0 - g) * r_base * (1.0 - static_cast<double>(k) / static_cast<double>(K + 1));
}

namespace {

// Adjacency with per-node cumulative weights for O(log d) step sampling.
struct WalkTable {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> targets;
    std::vector<double> cumulative;

    explicit WalkTable(const PostGraph& g) {
        const std::size_t n = g.node_count();
        offsets.reserve(n + 1);
        offsets.push_back(0);
        for (std::size_t u = 0; u < n; ++u) {
            double running = 0.0;
            for (const Neighbor& nb : g.neighbors(u)) {
                running += nb.weight;
                targets.push_back(nb.node);
                cumulative.push_back(running);
            }
            offsets.push_back(targets.size());
        }
    }

    [[nodiscard]] bool isolated(std::size_t u) const { return offsets[u] == offsets[u + 1]; }

    std::size_t step(std::size_t u, Rng& rng) const {
        const auto begin = cumulative.begin() + static_cast<std::ptrdiff_t>(offsets[u]);
        const auto end = cumulative.begin() + static_cast<std::ptrdiff_t>(offsets[u + 1]);
        std::uniform_real_distribution<double> dist(0.0, *(end - 1));
        auto it = std::upper_bound(begin, end, dist(rng));
        if (it == end) --it;
        return targets[static_cast<std::size_t>(it - cumulative.begin())];
    }
};

std::vector<Walk> walks_from_table(const WalkTable& table, std::size_t n, const InferConfig& cfg, Rng& rng) {
    std::vector<Walk> walks;
    walks.reserve(n * cfg.walks_per_node);
    for (std::size_t start = 0; start < n; ++start) {
        for (std::size_t r = 0; r < cfg.walks_per_node; ++r) {
            Walk walk;
            walk.reserve(cfg.walk_length);
            walk.push_back(start);
            while (walk.size() < cfg.walk_length && !table.isolated(walk.back())) {
                walk.push_back(table.step(walk.back(), rng));
            }
            walks.push_back(std::move(walk));
        }
    }
    return walks;
}

}  // namespace

std::vector<Walk> generate_walks(const PostGraph& g, const InferConfig& cfg, Rng& rng) {
    const WalkTable table(g);
    return walks_from_table(table, g.node_count(), cfg, rng);
}

InferResult run_inference(const PostGraph& g_star, const InferConfig& cfg, const EpochObserver& observer) {
    cfg.validate(g_star);
    std::vector<NodeState> states = init_embeddings(g_star);
    const std::size_t x = *g_star.unknown();

    InferResult result;
    if (g_star.degree(x) == 0) {
        result.params = kDefaultEmbedding;
        result.isolated = true;
        return result;
    }

    const WalkTable table(g_star);
    const std::size_t n = g_star.node_count();
    Rng rng(cfg.seed);
    std::vector<Walk> walks = walks_from_table(table, n, cfg, rng);
    std::vector<double> rates(n);

    const auto clamp = [&](Embedding& e) {
        for (std::size_t d = 0; d < e.size(); ++d) e[d] = std::clamp(e[d], cfg.lower_bounds[d], cfg.upper_bounds[d]);
    };

    const std::size_t K = cfg.epochs;
    for (std::size_t k = 1; k <= K; ++k) {
        if (k > 1 && cfg.regenerate_walks) walks = walks_from_table(table, n, cfg, rng);
        for (std::size_t i = 0; i < n; ++i) rates[i] = learning_rate(states[i].g, k, K, cfg.r_base);
        for (const Walk& walk : walks) {
            for (std::size_t i = 0; i < walk.size(); ++i) {
                const std::size_t last = std::min(walk.size() - 1, i + cfg.window);
                for (std::size_t j = i + 1; j <= last; ++j) {
                    const std::size_t u = walk[i];
                    const std::size_t v = walk[j];
                    if (u == v) continue;
                    const double ru = rates[u];
                    const double rv = rates[v];
                    if (ru <= 0.0 && rv <= 0.0) continue;
                    Embedding& eu = states[u].embedding;
                    Embedding& ev = states[v].embedding;
                    Embedding diff;
                    for (std::size_t d = 0; d < diff.size(); ++d) diff[d] = ev[d] - eu[d];
                    if (ru > 0.0) {
                        for (std::size_t d = 0; d < diff.size(); ++d) eu[d] += ru * diff[d];
                        clamp(eu);
                    }
                    if (rv > 0.0) {
                        for (std::size_t d = 0; d < diff.size(); ++d) ev[d] -= rv * diff[d];
                        clamp(ev);
                    }
                    ++result.updates;
                }
            }
        }
        if (observer) observer(k, states);
    }
    result.params = HawkesParams::from_array(states[x].embedding);
    return result;
}

}  // namespace ctpm
