#include "ctpm/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace ctpm {

CascadeTree::CascadeTree(Post root) : root_(std::move(root)) {
    if (root_.post_id.empty()) {
        throw std::invalid_argument("post_id must be non-empty");
    }
    if (!std::isfinite(root_.created_at) || root_.created_at < 0.0) {
        throw std::invalid_argument("post " + root_.post_id + ": created_at must be finite and non-negative");
    }
}

CascadeTree CascadeTree::build(Post root, std::vector<Comment> comments) {
    CascadeTree tree(std::move(root));
    const std::string& post_id = tree.root_.post_id;

    std::sort(comments.begin(), comments.end(), [](const Comment& x, const Comment& y) {
        if (x.created_at != y.created_at) return x.created_at < y.created_at;
        return x.comment_id < y.comment_id;
    });

    std::unordered_map<std::string, int> index;
    index.reserve(comments.size());
    for (std::size_t i = 0; i < comments.size(); ++i) {
        const Comment& c = comments[i];
        if (c.comment_id.empty()) {
            throw std::invalid_argument("post " + post_id + ": comment with empty id");
        }
        if (c.comment_id == post_id) {
            throw std::invalid_argument("post " + post_id + ": comment id collides with post id");
        }
        if (!std::isfinite(c.created_at)) {
            throw std::invalid_argument("comment " + c.comment_id + ": non-finite created_at");
        }
        if (!index.emplace(c.comment_id, static_cast<int>(i)).second) {
            throw std::invalid_argument("post " + post_id + ": duplicate comment id " + c.comment_id);
        }
    }

    const std::size_t n = comments.size();
    std::vector<int> parent(n, kRootIndex);
    for (std::size_t i = 0; i < n; ++i) {
        const Comment& c = comments[i];
        double parent_time = tree.root_.created_at;
        if (c.parent_id != post_id) {
            const auto it = index.find(c.parent_id);
            if (it == index.end()) {
                throw std::invalid_argument("comment " + c.comment_id + ": unknown parent " + c.parent_id);
            }
            parent[i] = it->second;
            parent_time = comments[static_cast<std::size_t>(it->second)].created_at;
        }
        if (c.created_at < parent_time) {
            throw std::invalid_argument("comment " + c.comment_id + " precedes its parent");
        }
    }

    // Depths by walking up parent chains. Equal timestamps may place a child
    // before its parent in sorted order, so a plain forward pass is not enough.
    constexpr int kUnset = -1;
    constexpr int kVisiting = -2;
    std::vector<int> depth(n, kUnset);
    std::vector<int> chain;
    for (std::size_t i = 0; i < n; ++i) {
        int cur = static_cast<int>(i);
        chain.clear();
        while (cur != kRootIndex && depth[static_cast<std::size_t>(cur)] < 0) {
            if (depth[static_cast<std::size_t>(cur)] == kVisiting) {
                throw std::invalid_argument("post " + post_id + ": cycle in comment parent links");
            }
            depth[static_cast<std::size_t>(cur)] = kVisiting;
            chain.push_back(cur);
            cur = parent[static_cast<std::size_t>(cur)];
        }
        int d = cur == kRootIndex ? -1 : depth[static_cast<std::size_t>(cur)];
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            depth[static_cast<std::size_t>(*it)] = ++d;
        }
    }

    tree.relative_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        comments[i].depth = depth[i];
        tree.relative_[i] = (comments[i].created_at - tree.root_.created_at) / kSecondsPerMinute;
    }
    tree.comments_ = std::move(comments);
    tree.parent_ = std::move(parent);
    return tree;
}

std::size_t tree_size(const CascadeTree& t) { return 1 + t.comment_count(); }

std::size_t tree_depth(const CascadeTree& t) {
    int deepest = -1;
    for (const Comment& c : t.comments()) deepest = std::max(deepest, c.depth);
    return static_cast<std::size_t>(deepest + 1);
}

std::vector<std::size_t> level_counts(const CascadeTree& t) {
    std::vector<std::size_t> counts(tree_depth(t) + 1, 0);
    counts[0] = 1;
    for (const Comment& c : t.comments()) ++counts[static_cast<std::size_t>(c.depth) + 1];
    return counts;
}

std::size_t tree_breadth(const CascadeTree& t) {
    const auto counts = level_counts(t);
    return *std::max_element(counts.begin(), counts.end());
}

CascadeTree truncate_observed(const CascadeTree& t, double observe_hours) {
    if (!(observe_hours >= 0.0)) {
        throw std::invalid_argument("observe_hours must be non-negative");
    }
    const double limit = observe_hours * 60.0;
    const auto& rel = t.relative_times();
    // Sorted by time, so the retained comments form a prefix.
    const auto keep = static_cast<std::size_t>(std::upper_bound(rel.begin(), rel.end(), limit) - rel.begin());
    if (keep == t.comment_count()) return t;
    std::vector<Comment> kept(t.comments().begin(), t.comments().begin() + static_cast<std::ptrdiff_t>(keep));
    return CascadeTree::build(t.root(), std::move(kept));
}

std::vector<std::vector<int>> child_lists(const CascadeTree& t) {
    const auto& parent = t.parent_indices();
    std::vector<std::vector<int>> children(t.comment_count() + 1);
    for (std::size_t i = 0; i < parent.size(); ++i) {
        children[static_cast<std::size_t>(parent[i] + 1)].push_back(static_cast<int>(i) + 1);
    }
    return children;
}

}  // namespace ctpm
