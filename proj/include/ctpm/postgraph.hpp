#pragma once

#include "ctpm/cascade.hpp"
#include "ctpm/hawkes.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctpm {

/// Sorted, duplicate-free title tokens.
using TokenSet = std::vector<std::string>;

/// Lowercases ASCII letters and splits on runs of non-alphanumeric bytes.
[[nodiscard]] TokenSet tokenize_title(std::string_view title);

/// |s1 & s2| / |s1 | s2|, and 0 when both are empty.
[[nodiscard]] double jaccard(const TokenSet& s1, const TokenSet& s2);

struct GraphNode {
    std::string post_id;
    std::string author;
    TokenSet tokens;
    std::optional<FitResult> fit;  // absent only on the unknown node

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct Neighbor {
    std::size_t node;
    double weight;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct Edge {
    std::size_t u;
    std::size_t v;
    double weight;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Candidate weight between two posts: 1 for a shared author plus the title
/// Jaccard coefficient.
[[nodiscard]] double post_similarity(const GraphNode& x, const GraphNode& y);

inline constexpr std::size_t kDefaultTopN = 20;

/// Undirected weighted similarity graph over training posts, optionally with
/// one attached unknown post. Training data is shared between a base graph
/// and the graphs derived from it by attach_post, so attaching is cheap and
/// never mutates the base.
class PostGraph {
public:
    PostGraph() = default;

    [[nodiscard]] std::size_t node_count() const noexcept;
    [[nodiscard]] std::size_t base_node_count() const noexcept { return base_ ? base_->nodes.size() : 0; }
    [[nodiscard]] const GraphNode& node(std::size_t i) const;
    [[nodiscard]] std::optional<std::size_t> find(std::string_view post_id) const;
    [[nodiscard]] std::size_t top_n() const noexcept { return base_ ? base_->top_n : kDefaultTopN; }

    /// Index of the attached unknown post, if any.
    [[nodiscard]] std::optional<std::size_t> unknown() const noexcept;

    /// Incident edges of a node, ordered by neighbor index.
    [[nodiscard]] std::vector<Neighbor> neighbors(std::size_t i) const;
    [[nodiscard]] std::size_t degree(std::size_t i) const;

    /// Every edge once, with u < v, sorted by (u, v).
    [[nodiscard]] std::vector<Edge> edges() const;
    [[nodiscard]] std::size_t edge_count() const;

    /// Base graph without the unknown post.
    [[nodiscard]] PostGraph detach() const;

    /// Builds a graph directly from nodes and an edge list; used by the loader.
    static PostGraph from_parts(std::vector<GraphNode> nodes, std::vector<Edge> edges, std::size_t top_n);

    friend PostGraph build_graph(std::span<const CascadeTree> train, std::span<const FitResult> fits, std::size_t top_n);
    friend PostGraph attach_post(const PostGraph& g, const Post& x, std::size_t top_n);

    friend bool operator==(const PostGraph& lhs, const PostGraph& rhs);

private:
    struct Base {
        std::vector<GraphNode> nodes;
        std::vector<std::vector<Neighbor>> adjacency;  // sorted by neighbor index
        std::unordered_map<std::string, std::size_t> index;
        std::size_t top_n{kDefaultTopN};
    };
    struct Unknown {
        GraphNode node;
        std::vector<Neighbor> edges;  // into base nodes, sorted by index
    };

    std::shared_ptr<const Base> base_;
    std::optional<Unknown> unknown_;
};

/// Connects training posts by shared author and title overlap, then keeps an
/// edge when it is among the top_n heaviest candidates of either endpoint
/// (ties broken by neighbor post_id). `fits` is parallel to `train`.
[[nodiscard]] PostGraph build_graph(std::span<const CascadeTree> train, std::span<const FitResult> fits, std::size_t top_n = kDefaultTopN);

/// Adds post x with edges to its top_n heaviest candidates among the training
/// nodes. Throws std::logic_error if the graph already has an unknown post.
[[nodiscard]] PostGraph attach_post(const PostGraph& g, const Post& x, std::size_t top_n = kDefaultTopN);

}  // namespace ctpm
