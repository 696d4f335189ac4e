#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace ctpm {

struct Post {
    std::string post_id;
    std::string author;
    std::string title;
    double created_at{0.0};  // seconds, absolute
    std::string community;

    friend bool operator==(const Post&, const Post&) = default;
};

struct Comment {
    std::string comment_id;
    std::string parent_id;  // post_id or comment_id
    double created_at{0.0};
    int depth{0};           // 0 = top-level

    friend bool operator==(const Comment&, const Comment&) = default;
};

/// Six Hawkes parameters. Weibull base intensity (a, b, alpha) for top-level
/// comments, lognormal reply kernel (mu, sigma) and branching factor n_b.
/// Times are in minutes.
struct HawkesParams {
    double a{0.0};
    double b{0.0};
    double alpha{0.0};
    double mu{0.0};
    double sigma{0.0};
    double n_b{0.0};

    static constexpr std::size_t kSize = 6;

    [[nodiscard]] std::array<double, kSize> to_array() const { return {a, b, alpha, mu, sigma, n_b}; }
    [[nodiscard]] static HawkesParams from_array(const std::array<double, kSize>& v) {
        return {v[0], v[1], v[2], v[3], v[4], v[5]};
    }

    friend bool operator==(const HawkesParams&, const HawkesParams&) = default;
};

/// Embedding given to a post with no fit of its own.
inline constexpr HawkesParams kDefaultEmbedding{1.0, 2.0, 0.75, 0.15, 1.5, 0.05};

inline constexpr double kSecondsPerMinute = 60.0;

/// A post plus its comments. Comments are kept sorted by (created_at,
/// comment_id); parent links and depths are resolved on construction.
/// Immutable once built.
class CascadeTree {
public:
    static constexpr int kRootIndex = -1;

    CascadeTree() = default;
    explicit CascadeTree(Post root);

    /// Validates the tree invariants (single root, every parent known, no
    /// child before its parent) and throws std::invalid_argument otherwise.
    /// Input order and input depth values are ignored.
    static CascadeTree build(Post root, std::vector<Comment> comments);

    [[nodiscard]] const Post& root() const noexcept { return root_; }
    [[nodiscard]] const std::vector<Comment>& comments() const noexcept { return comments_; }
    [[nodiscard]] std::size_t comment_count() const noexcept { return comments_.size(); }

    /// Minutes since the post was created, one entry per comment.
    [[nodiscard]] const std::vector<double>& relative_times() const noexcept { return relative_; }
    /// Index into comments() of each comment's parent, or kRootIndex.
    [[nodiscard]] const std::vector<int>& parent_indices() const noexcept { return parent_; }

    [[nodiscard]] double last_time() const noexcept { return relative_.empty() ? 0.0 : relative_.back(); }

    friend bool operator==(const CascadeTree& lhs, const CascadeTree& rhs) {
        return lhs.root_ == rhs.root_ && lhs.comments_ == rhs.comments_;
    }

private:
    Post root_;
    std::vector<Comment> comments_;
    std::vector<double> relative_;
    std::vector<int> parent_;
};

[[nodiscard]] std::size_t tree_size(const CascadeTree& t);
/// Longest root-to-leaf path in edges; 0 when there are no comments.
[[nodiscard]] std::size_t tree_depth(const CascadeTree& t);
/// Largest node count on a single depth level, root level included.
[[nodiscard]] std::size_t tree_breadth(const CascadeTree& t);
/// Node counts per depth level, index 0 being the root level.
[[nodiscard]] std::vector<std::size_t> level_counts(const CascadeTree& t);

/// Root plus every comment made within the first `observe_hours`.
[[nodiscard]] CascadeTree truncate_observed(const CascadeTree& t, double observe_hours);

/// Children adjacency over node indices where 0 is the root and comment i is i + 1.
[[nodiscard]] std::vector<std::vector<int>> child_lists(const CascadeTree& t);

}  // namespace ctpm
