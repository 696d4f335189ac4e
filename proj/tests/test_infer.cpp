#include "ctpm/infer.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>

using namespace ctpm;

namespace {

GraphNode trained(const std::string& id, const HawkesParams& p, double g) {
    FitResult f;
    f.params = p;
    f.g = g;
    f.converged = g != 0.95;
    return {id, "author_" + id, {}, f};
}

PostGraph with_unknown(std::vector<GraphNode> nodes, std::vector<Edge> edges, const Post& x, std::size_t top_n = 20) {
    return attach_post(PostGraph::from_parts(std::move(nodes), std::move(edges), top_n), x, top_n);
}

const HawkesParams kTheta{3.0, 30.0, 1.2, 3.0, 1.0, 0.6};

}  // namespace

TEST_CASE("initial embeddings") {
    const PostGraph g = with_unknown({trained("a", kTheta, 0.7)}, {}, Post{"x", "author_a", "", 0.0, "c"});
    const auto states = init_embeddings(g);
    const std::size_t x = *g.unknown();
    CHECK(states[x].embedding == std::array<double, 6>{1.0, 2.0, 0.75, 0.15, 1.5, 0.05});
    CHECK(states[x].g == 0.0);
    CHECK(states[0].embedding == kTheta.to_array());
    CHECK(states[0].g == 0.7);
}

TEST_CASE("learning rate") {
    CHECK(learning_rate(0.0, 0, 5, 1e-4) == 1e-4);
    for (std::size_t k = 0; k <= 5; ++k) CHECK(learning_rate(1.0, k, 5, 1e-4) == 0.0);
    CHECK(learning_rate(0.85, 5, 5, 1e-4) == doctest::Approx(1e-4 * 0.15 / 6.0).epsilon(1e-12));
}

TEST_CASE("walks") {
    InferConfig cfg;
    cfg.walks_per_node = 3;
    cfg.walk_length = 9;
    Rng rng(1);

    const PostGraph lone = with_unknown({trained("a", kTheta, 0.5)}, {}, Post{"x", "z", "", 0.0, "c"});
    for (const Walk& w : generate_walks(lone, cfg, rng)) CHECK(w.size() == 1);

    const PostGraph pair = with_unknown({trained("a", kTheta, 0.5)}, {}, Post{"x", "author_a", "", 0.0, "c"});
    for (const Walk& w : generate_walks(pair, cfg, rng)) {
        REQUIRE(w.size() == 9);
        for (std::size_t i = 2; i < w.size(); ++i) CHECK(w[i] == w[i - 2]);
        CHECK(w[0] != w[1]);
    }
}

TEST_CASE("first step distribution follows edge weights") {
    // u = 0 has incident weights 2, 1 and 1; the other nodes form a triangle.
    const PostGraph g = PostGraph::from_parts(
        {trained("u", kTheta, 0.5), trained("v", kTheta, 0.5), trained("w", kTheta, 0.5), trained("z", kTheta, 0.5)},
        {{0, 1, 2.0}, {0, 2, 1.0}, {0, 3, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {1, 3, 1.0}}, 100000);
    InferConfig cfg;
    cfg.walks_per_node = 100000;
    cfg.walk_length = 2;
    Rng rng(5);
    std::array<double, 4> counts{};
    for (const Walk& w : generate_walks(g, cfg, rng)) {
        if (w[0] == 0) counts[w[1]] += 1.0;
    }
    CHECK(counts[0] == 0.0);
    CHECK(std::abs(counts[1] / 1e5 - 0.5) < 0.01);
    CHECK(std::abs(counts[2] / 1e5 - 0.25) < 0.01);
    CHECK(std::abs(counts[3] / 1e5 - 0.25) < 0.01);
}

TEST_CASE("single frozen neighbor pulls the unknown post onto its parameters") {
    const PostGraph g = with_unknown({trained("a", kTheta, 1.0)}, {}, Post{"x", "author_a", "", 0.0, "c"});
    InferConfig cfg;
    cfg.r_base = 0.2;
    cfg.epochs = 50;
    const InferResult r = run_inference(g, cfg);
    CHECK_FALSE(r.isolated);
    const auto got = r.params.to_array();
    const auto want = kTheta.to_array();
    for (std::size_t d = 0; d < 6; ++d) CHECK(std::abs(got[d] - want[d]) < 1e-3);
}

TEST_CASE("identical corpus leaves only a diluted trace of the default embedding") {
    std::vector<GraphNode> nodes;
    std::vector<Edge> edges;
    const std::size_t n = 30;
    for (std::size_t i = 0; i < n; ++i) {
        nodes.push_back(trained("t" + std::to_string(i), kTheta, 0.65));
        if (i > 0) edges.push_back({i - 1, i, 1.0});
    }
    const PostGraph g = with_unknown(nodes, edges, Post{"x", "author_t0", "", 0.0, "c"});
    InferConfig cfg;
    cfg.r_base = 0.05;
    cfg.epochs = 40;
    const InferResult r = run_inference(g, cfg);
    // Updates conserve the (1 / (1 - g))-weighted mean of all embeddings, so
    // the consensus sits at theta + (x0 - theta) / (1 + n / (1 - g)).
    const double dilution = 1.0 / (1.0 + static_cast<double>(n) / 0.35);
    const auto got = r.params.to_array();
    const auto want = kTheta.to_array();
    const auto start = kDefaultEmbedding.to_array();
    for (std::size_t d = 0; d < 6; ++d) {
        CHECK(std::abs(got[d] - want[d]) <= 1.05 * dilution * std::abs(start[d] - want[d]) + 1e-9);
    }
}

TEST_CASE("isolated unknown post keeps the default embedding") {
    const PostGraph g = with_unknown({trained("a", kTheta, 0.5)}, {}, Post{"x", "zed", "", 0.0, "c"});
    const InferResult r = run_inference(g, InferConfig{});
    CHECK(r.isolated);
    CHECK(r.params == kDefaultEmbedding);
    CHECK(r.updates == 0);
}

TEST_CASE("perfectly fitted nodes never move and embeddings stay in the box") {
    std::vector<GraphNode> nodes;
    std::vector<Edge> edges;
    Rng rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < 25; ++i) {
        const HawkesParams p{1e-6 + 5.0 * u(rng), 1e-6 + 50.0 * u(rng), 0.5 + u(rng), -19.0 * u(rng), 1e-3 + u(rng), u(rng)};
        nodes.push_back(trained("t" + std::to_string(i), p, i % 3 == 0 ? 1.0 : 0.45 + 0.4 * u(rng)));
        if (i > 0) edges.push_back({static_cast<std::size_t>(u(rng) * static_cast<double>(i)), i, 0.5 + u(rng)});
    }
    const PostGraph g = with_unknown(nodes, edges, Post{"x", "author_t3", "", 0.0, "c"});
    InferConfig cfg;
    cfg.r_base = 0.3;
    cfg.regenerate_walks = true;
    std::size_t epochs_seen = 0;
    const auto lower = FitConfig{}.lower_bounds;
    const auto upper = FitConfig{}.upper_bounds;
    (void)run_inference(g, cfg, [&](std::size_t k, std::span<const NodeState> states) {
        CHECK(k == ++epochs_seen);
        for (std::size_t i = 0; i < states.size(); ++i) {
            for (std::size_t d = 0; d < 6; ++d) {
                CHECK(states[i].embedding[d] >= lower[d]);
                CHECK(states[i].embedding[d] <= upper[d]);
            }
            if (i < nodes.size() && nodes[i].fit->g == 1.0) CHECK(states[i].embedding == nodes[i].fit->params.to_array());
        }
    });
    CHECK(epochs_seen == cfg.epochs);
}

TEST_CASE("inference is deterministic for a seed") {
    std::vector<GraphNode> nodes;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < 10; ++i) {
        nodes.push_back(trained("t" + std::to_string(i), {1.0 + static_cast<double>(i), 30.0, 1.0, 2.0, 1.0, 0.5}, 0.5));
        if (i > 0) edges.push_back({i - 1, i, 1.0});
    }
    const PostGraph g = with_unknown(nodes, edges, Post{"x", "author_t4", "", 0.0, "c"});
    InferConfig cfg;
    cfg.r_base = 0.01;
    cfg.seed = 42;
    const InferResult a = run_inference(g, cfg);
    const InferResult b = run_inference(g, cfg);
    CHECK(a.params == b.params);
    CHECK(a.updates == b.updates);
    CHECK(a.updates > 0);
}

TEST_CASE("configuration checks") {
    const PostGraph g = with_unknown({trained("a", kTheta, 0.5)}, {}, Post{"x", "author_a", "", 0.0, "c"}, 5);
    InferConfig cfg;
    cfg.walks_per_node = 6;
    CHECK_THROWS_AS((void)run_inference(g, cfg), std::invalid_argument);
    cfg = InferConfig{};
    cfg.walks_per_node = 5;
    cfg.epochs = 0;
    CHECK_THROWS_AS((void)run_inference(g, cfg), std::invalid_argument);
}
