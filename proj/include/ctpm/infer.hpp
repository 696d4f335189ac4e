#pragma once

#include "ctpm/cascade.hpp"
#include "ctpm/hawkes.hpp"
#include "ctpm/postgraph.hpp"
#include "ctpm/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ctpm {

using Embedding = std::array<double, HawkesParams::kSize>;

struct InferConfig {
    static constexpr std::size_t kDimension = HawkesParams::kSize;

    double r_base{1e-4};
    std::size_t epochs{5};          // K
    std::size_t walks_per_node{10};
    std::size_t walk_length{40};    // nodes per walk, start included
    std::size_t window{5};
    std::uint64_t seed{0};
    bool regenerate_walks{false};   // fresh walks every epoch instead of one shared set
    std::array<double, HawkesParams::kSize> lower_bounds{FitConfig{}.lower_bounds};
    std::array<double, HawkesParams::kSize> upper_bounds{FitConfig{}.upper_bounds};

    void validate(const PostGraph& g) const;
};

struct NodeState {
    Embedding embedding{};
    double g{0.0};
};

/// Training nodes start at their fitted parameters and goodness; the unknown
/// node starts at the default embedding with g = 0.
[[nodiscard]] std::vector<NodeState> init_embeddings(const PostGraph& g_star);

/// (1 - g) * r_base * (1 - k / (K + 1)).
[[nodiscard]] double learning_rate(double g, std::size_t k, std::size_t K, double r_base);

using Walk = std::vector<std::size_t>;

/// walks_per_node first-order walks from every node, in node order. Each
/// step picks a neighbor with probability proportional to edge weight; a
/// walk stops early only at an isolated node.
[[nodiscard]] std::vector<Walk> generate_walks(const PostGraph& g, const InferConfig& cfg, Rng& rng);

struct InferResult {
    HawkesParams params{};
    bool isolated{false};  // unknown post had no edges; params are the default embedding
    std::size_t updates{0};
};

/// Called after each epoch with the epoch index (1-based) and all node states.
using EpochObserver = std::function<void(std::size_t epoch, std::span<const NodeState> states)>;

/// For each epoch k = 1..K and every pair of distinct nodes co-occurring
/// within `window` steps of a walk, both nodes move toward each other:
/// e_u += r_u(k) (e_v - e_u) and e_v += r_v(k) (e_u - e_v), then are clamped
/// to the fitter's parameter box. Returns the unknown node's final embedding.
[[nodiscard]] InferResult run_inference(const PostGraph& g_star,
                                        const InferConfig& cfg,
                                        const EpochObserver& observer = {});

}  // namespace ctpm
