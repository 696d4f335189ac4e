#include "ctpm/postgraph.hpp"

#include <algorithm>
#include <stdexcept>

namespace ctpm {

TokenSet tokenize_title(std::string_view title) {
    TokenSet tokens;
    std::string current;
    const auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    for (const char ch : title) {
        const auto c = static_cast<unsigned char>(ch);
        // Bytes >= 0x80 belong to multi-byte UTF-8 characters; keep them in tokens.
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
            current.push_back(static_cast<char>(c));
        } else if (c >= 'A' && c <= 'Z') {
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            flush();
        }
    }
    flush();
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return tokens;
}

namespace {

double jaccard_from_counts(std::size_t shared, std::size_t size_a, std::size_t size_b) {
    const std::size_t total = size_a + size_b - shared;
    if (total == 0) return 0.0;
    return static_cast<double>(shared) / static_cast<double>(total);
}

}  // namespace

double jaccard(const TokenSet& s1, const TokenSet& s2) {
    std::size_t shared = 0;
    auto i = s1.begin();
    auto j = s2.begin();
    while (i != s1.end() && j != s2.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++shared;
            ++i;
            ++j;
        }
    }
    return jaccard_from_counts(shared, s1.size(), s2.size());
}

double post_similarity(const GraphNode& x, const GraphNode& y) {
    const double author = x.author == y.author ? 1.0 : 0.0;
    return author + jaccard(x.tokens, y.tokens);
}

std::size_t PostGraph::node_count() const noexcept { return base_node_count() + (unknown_ ? 1 : 0); }

const GraphNode& PostGraph::node(std::size_t i) const {
    if (i < base_node_count()) return base_->nodes[i];
    if (unknown_ && i == base_node_count()) return unknown_->node;
    throw std::out_of_range("PostGraph::node: index out of range");
}

std::optional<std::size_t> PostGraph::find(std::string_view post_id) const {
    if (base_) {
        const auto it = base_->index.find(std::string(post_id));
        if (it != base_->index.end()) return it->second;
    }
    if (unknown_ && unknown_->node.post_id == post_id) return base_node_count();
    return std::nullopt;
}

std::optional<std::size_t> PostGraph::unknown() const noexcept {
    if (!unknown_) return std::nullopt;
    return base_node_count();
}

std::vector<Neighbor> PostGraph::neighbors(std::size_t i) const {
    if (unknown_ && i == base_node_count()) return unknown_->edges;
    if (i >= base_node_count()) throw std::out_of_range("PostGraph::neighbors: index out of range");
    std::vector<Neighbor> out = base_->adjacency[i];
    if (unknown_) {
        const auto& xe = unknown_->edges;
        const auto it = std::lower_bound(xe.begin(), xe.end(), i,
                                         [](const Neighbor& n, std::size_t v) { return n.node < v; });
        if (it != xe.end() && it->node == i) out.push_back({base_node_count(), it->weight});
    }
    return out;
}

std::size_t PostGraph::degree(std::size_t i) const { return neighbors(i).size(); }

std::vector<Edge> PostGraph::edges() const {
    std::vector<Edge> out;
    for (std::size_t u = 0; u < base_node_count(); ++u) {
        for (const Neighbor& n : base_->adjacency[u]) {
            if (u < n.node) out.push_back({u, n.node, n.weight});
        }
        if (unknown_) {
            for (const Neighbor& n : unknown_->edges) {
                if (n.node == u) out.push_back({u, base_node_count(), n.weight});
            }
        }
    }
    return out;
}

std::size_t PostGraph::edge_count() const {
    std::size_t twice = 0;
    for (std::size_t u = 0; u < base_node_count(); ++u) twice += base_->adjacency[u].size();
    return twice / 2 + (unknown_ ? unknown_->edges.size() : 0);
}

PostGraph PostGraph::detach() const {
    PostGraph g;
    g.base_ = base_;
    return g;
}

bool operator==(const PostGraph& lhs, const PostGraph& rhs) {
    if (lhs.node_count() != rhs.node_count() || lhs.top_n() != rhs.top_n()) return false;
    if (lhs.unknown() != rhs.unknown()) return false;
    for (std::size_t i = 0; i < lhs.node_count(); ++i) {
        if (!(lhs.node(i) == rhs.node(i))) return false;
    }
    return lhs.edges() == rhs.edges();
}

PostGraph PostGraph::from_parts(std::vector<GraphNode> nodes, std::vector<Edge> edges, std::size_t top_n) {
    auto base = std::make_shared<Base>();
    base->top_n = top_n;
    base->adjacency.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!base->index.emplace(nodes[i].post_id, i).second) {
            throw std::invalid_argument("duplicate post id in graph: " + nodes[i].post_id);
        }
        if (!nodes[i].fit) throw std::invalid_argument("graph node without fit: " + nodes[i].post_id);
    }
    for (const Edge& e : edges) {
        if (e.u >= nodes.size() || e.v >= nodes.size()) throw std::invalid_argument("edge endpoint out of range");
        if (e.u == e.v) throw std::invalid_argument("self-loop in graph");
        if (!(e.weight > 0.0 && e.weight <= 2.0)) throw std::invalid_argument("edge weight outside (0, 2]");
        base->adjacency[e.u].push_back({e.v, e.weight});
        base->adjacency[e.v].push_back({e.u, e.weight});
    }
    for (auto& adj : base->adjacency) {
        std::sort(adj.begin(), adj.end(), [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; });
        for (std::size_t k = 1; k < adj.size(); ++k) {
            if (adj[k].node == adj[k - 1].node) throw std::invalid_argument("duplicate edge in graph");
        }
    }
    base->nodes = std::move(nodes);
    PostGraph g;
    g.base_ = std::move(base);
    return g;
}

namespace {

struct Candidate {
    std::size_t node;
    double weight;
};

// Keeps the top_n heaviest candidates, ties by ascending post id.
void keep_top(std::vector<Candidate>& cands, std::size_t top_n, const std::vector<GraphNode>& nodes) {
    const auto better = [&](const Candidate& x, const Candidate& y) {
        if (x.weight != y.weight) return x.weight > y.weight;
        return nodes[x.node].post_id < nodes[y.node].post_id;
    };
    if (cands.size() > top_n) {
        std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(top_n), cands.end(), better);
        cands.resize(top_n);
    }
    std::sort(cands.begin(), cands.end(), better);
}

}  // namespace

PostGraph build_graph(std::span<const CascadeTree> train, std::span<const FitResult> fits, std::size_t top_n) {
    if (train.size() != fits.size()) throw std::invalid_argument("build_graph: one fit per training post required");
    const std::size_t n = train.size();

    std::vector<GraphNode> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Post& p = train[i].root();
        nodes[i] = {p.post_id, p.author, tokenize_title(p.title), fits[i]};
    }

    // Inverted indexes over interned tokens and authors.
    std::unordered_map<std::string, std::size_t> token_ids;
    std::vector<std::vector<std::size_t>> token_posts;
    std::vector<std::vector<std::size_t>> node_tokens(n);
    std::unordered_map<std::string, std::vector<std::size_t>> author_posts;
    for (std::size_t i = 0; i < n; ++i) {
        for (const std::string& tok : nodes[i].tokens) {
            const auto [it, inserted] = token_ids.emplace(tok, token_posts.size());
            if (inserted) token_posts.emplace_back();
            token_posts[it->second].push_back(i);
            node_tokens[i].push_back(it->second);
        }
        author_posts[nodes[i].author].push_back(i);
    }

    std::vector<std::vector<std::size_t>> selected(n);
    std::vector<std::size_t> shared(n, 0);
    std::vector<char> same_author(n, 0);
    std::vector<std::size_t> touched;
    std::vector<Candidate> cands;
    for (std::size_t u = 0; u < n; ++u) {
        touched.clear();
        for (const std::size_t t : node_tokens[u]) {
            for (const std::size_t v : token_posts[t]) {
                if (v == u) continue;
                if (shared[v] == 0 && !same_author[v]) touched.push_back(v);
                ++shared[v];
            }
        }
        for (const std::size_t v : author_posts[nodes[u].author]) {
            if (v == u) continue;
            if (shared[v] == 0 && !same_author[v]) touched.push_back(v);
            same_author[v] = 1;
        }
        cands.clear();
        for (const std::size_t v : touched) {
            const double w = (same_author[v] ? 1.0 : 0.0) +
                             jaccard_from_counts(shared[v], nodes[u].tokens.size(), nodes[v].tokens.size());
            if (w > 0.0) cands.push_back({v, w});
            shared[v] = 0;
            same_author[v] = 0;
        }
        keep_top(cands, top_n, nodes);
        for (const Candidate& c : cands) {
            selected[u].push_back(c.node);
            selected[c.node].push_back(u);
        }
    }

    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
        auto& adj = selected[u];
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
        for (const std::size_t v : adj) {
            if (u < v) edges.push_back({u, v, post_similarity(nodes[u], nodes[v])});
        }
    }
    return PostGraph::from_parts(std::move(nodes), std::move(edges), top_n);
}

PostGraph attach_post(const PostGraph& g, const Post& x, std::size_t top_n) {
    if (g.unknown_) throw std::logic_error("attach_post: graph already holds an unknown post");
    if (g.find(x.post_id)) throw std::invalid_argument("attach_post: post already in graph: " + x.post_id);

    GraphNode xn{x.post_id, x.author, tokenize_title(x.title), std::nullopt};
    std::vector<Candidate> cands;
    const std::size_t n = g.base_node_count();
    for (std::size_t v = 0; v < n; ++v) {
        const double w = post_similarity(xn, g.base_->nodes[v]);
        if (w > 0.0) cands.push_back({v, w});
    }
    if (g.base_) keep_top(cands, top_n, g.base_->nodes);

    PostGraph out;
    out.base_ = g.base_;
    PostGraph::Unknown unknown{std::move(xn), {}};
    for (const Candidate& c : cands) unknown.edges.push_back({c.node, c.weight});
    std::sort(unknown.edges.begin(), unknown.edges.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    out.unknown_ = std::move(unknown);
    return out;
}

}  // namespace ctpm
