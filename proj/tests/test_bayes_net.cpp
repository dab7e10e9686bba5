#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "ctxfuse/bayes_net.hpp"
#include "ctxfuse/rng.hpp"

using namespace ctxfuse;

namespace {

AnnotatedCorpus corpus_of(std::vector<std::string> classes,
                          std::vector<std::vector<int>> images) {
    AnnotatedCorpus c;
    c.catalog = ClassCatalog(std::move(classes));
    c.images = std::move(images);
    return c;
}

AnnotatedCorpus random_corpus(int n_images, int n_classes, std::uint64_t seed) {
    std::vector<std::string> names;
    for (int i = 0; i < n_classes; ++i) names.push_back("c" + std::to_string(i));
    Rng rng(seed);
    std::vector<std::vector<int>> images;
    for (int i = 0; i < n_images; ++i) {
        std::vector<int> img;
        const int k = 1 + rng.uniform_int(5);
        for (int j = 0; j < k; ++j) img.push_back(rng.uniform_int(n_classes));
        images.push_back(std::move(img));
    }
    return corpus_of(std::move(names), std::move(images));
}

int brute_pair_count(const AnnotatedCorpus& corpus, int a, int b) {
    int n = 0;
    for (const auto& img : corpus.images) {
        const bool ha = std::find(img.begin(), img.end(), a) != img.end();
        const bool hb = std::find(img.begin(), img.end(), b) != img.end();
        if (a == b ? ha : (ha && hb)) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("graph construction from a small corpus") {
    const auto g = build_graph(corpus_of({"A", "B"}, {{0, 1}, {0, 1}, {0}}));
    CHECK(g.edge_weights(0, 1) == 2);
    CHECK(g.edge_weights(0, 0) == 0);  // diagonal lives in node_counts
    CHECK(g.node_counts[0] == 3);
    CHECK(g.node_counts[1] == 2);
    CHECK(g.total_images == 3);
}

TEST_CASE("singleton corpus yields an edgeless graph") {
    const auto g = build_graph(corpus_of({"A", "B", "C"}, {{0}, {1}, {2}}));
    CHECK(g.edge_weights.maxCoeff() == 0);
}

TEST_CASE("graph matches the brute-force recount") {
    const auto corpus = random_corpus(100, 7, 13);
    const auto g = build_graph(corpus);
    for (int a = 0; a < 7; ++a) {
        CHECK(g.node_counts[a] == brute_pair_count(corpus, a, a));
        for (int b = 0; b < 7; ++b) {
            if (a != b) CHECK(g.edge_weights(a, b) == brute_pair_count(corpus, a, b));
        }
    }
}

TEST_CASE("thresholding is strict and idempotent") {
    const auto corpus = random_corpus(80, 5, 4);
    const auto g = build_graph(corpus);

    SUBCASE("tau zero keeps all existing edges") {
        const auto t = threshold_graph(g, 0);
        CHECK(t.edge_weights == g.edge_weights);
        CHECK(t.node_counts == g.node_counts);
    }
    SUBCASE("weight equal to tau is removed") {
        const int w = g.edge_weights(0, 1);
        if (w > 0) {
            const auto t = threshold_graph(g, w);
            CHECK(t.edge_weights(0, 1) == 0);
        }
        const auto below = threshold_graph(g, w - 1);
        CHECK(below.edge_weights(0, 1) == w);
    }
    SUBCASE("applying the same tau twice changes nothing") {
        const auto once = threshold_graph(g, 3);
        const auto twice = threshold_graph(once, 3);
        CHECK(once.edge_weights == twice.edge_weights);
    }
    SUBCASE("raising tau never raises a conditional probability") {
        const auto loose = threshold_graph(g, 1);
        const auto tight = threshold_graph(g, 4);
        for (int e = 0; e < 5; ++e) {
            if (g.node_counts[e] == 0) continue;
            for (int q = 0; q < 5; ++q) {
                if (q == e) continue;
                CHECK(conditional_cooccurrence(tight, e, q) <=
                      conditional_cooccurrence(loose, e, q) + 1e-15);
            }
        }
    }
}

TEST_CASE("edge orientation follows the catalog order and is acyclic") {
    const auto g = build_graph(corpus_of({"cat", "dog"}, {{0, 1}}));
    const auto edges = orient_edges(g);
    REQUIRE(edges.size() == 1);
    CHECK(g.catalog.name(edges[0].parent) == "cat");
    CHECK(g.catalog.name(edges[0].child) == "dog");

    const auto big = build_graph(random_corpus(60, 6, 9));
    const auto oriented = orient_edges(big);

    // count surviving undirected edges
    int undirected = 0;
    for (int a = 0; a < 6; ++a)
        for (int b = a + 1; b < 6; ++b)
            if (big.edge_weights(a, b) > 0) ++undirected;
    CHECK(static_cast<int>(oriented.size()) == undirected);

    // parent always earlier in catalog order implies a topological order exists
    for (const auto& e : oriented) CHECK(e.parent < e.child);
}

TEST_CASE("conditional co-occurrence") {
    const auto g = build_graph(corpus_of({"A", "B"}, {{0, 1}, {0}, {0, 1}}));
    CHECK(conditional_cooccurrence(g, 0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(conditional_cooccurrence(g, 0, 0) == 1.0);
    CHECK(conditional_cooccurrence(g, 1, 0) == 1.0);

    SUBCASE("unseen evidence") {
        auto zero = g;
        zero.node_counts[1] = 0;
        try {
            conditional_cooccurrence(zero, 1, 0);
            FAIL("expected EvidenceUnseen");
        } catch (const Error& e) {
            CHECK(e.code() == Err::EvidenceUnseen);
        }
    }
    SUBCASE("pruned edge gives zero") {
        const auto t = threshold_graph(g, 10);
        CHECK(conditional_cooccurrence(t, 0, 1) == 0.0);
    }
}

TEST_CASE("ranking matches brute-force ratios on a random corpus") {
    const auto corpus = random_corpus(200, 8, 21);
    const auto g = build_graph(corpus);
    for (int e = 0; e < 8; ++e) {
        if (g.node_counts[e] == 0) continue;
        const auto ranked = rank_completions(g, e, -1);
        REQUIRE(ranked.size() == 7);
        for (const auto& [cls, p] : ranked) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK(p == doctest::Approx(static_cast<double>(brute_pair_count(corpus, e, cls)) /
                                       brute_pair_count(corpus, e, e))
                           .epsilon(1e-15));
        }
        for (std::size_t i = 1; i < ranked.size(); ++i) {
            CHECK(ranked[i - 1].second >= ranked[i].second);
            if (ranked[i - 1].second == ranked[i].second)
                CHECK(ranked[i - 1].first < ranked[i].first);  // ties alphabetical
        }
    }
}

TEST_CASE("ranking basics") {
    // B co-occurs with A twice, C once
    const auto g = build_graph(corpus_of({"A", "B", "C"}, {{0, 1}, {0, 1}, {0, 2}}));
    const auto ranked = rank_completions(g, 0, 1);
    REQUIRE(ranked.size() == 1);
    CHECK(g.catalog.name(ranked[0].first) == "B");

    const auto all = rank_completions(g, 0, 99);  // top_k larger than the class count
    CHECK(all.size() == 2);
}

TEST_CASE("graph file round-trip and dot export") {
    const auto g = build_graph(random_corpus(30, 4, 2));
    const auto text = graph_to_json(g);
    const auto back = parse_graph_json(text);
    CHECK(back.catalog == g.catalog);
    CHECK(back.edge_weights == g.edge_weights);
    CHECK(back.node_counts == g.node_counts);
    CHECK(back.total_images == g.total_images);

    const auto dot = graph_to_dot(g);
    CHECK(dot.find("digraph") != std::string::npos);
    for (const auto& e : orient_edges(g)) {
        const std::string arrow =
            "\"" + g.catalog.name(e.parent) + "\" -> \"" + g.catalog.name(e.child) + "\"";
        CHECK(dot.find(arrow) != std::string::npos);
    }
    CHECK_THROWS_AS(parse_graph_json("nope"), Error);
}
