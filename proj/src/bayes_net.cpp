#include "ctxfuse/bayes_net.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ctxfuse {

CooccurrenceGraph build_graph(const AnnotatedCorpus& corpus) {
    const CooccurrenceCounts counts = cooccurrence_counts(corpus);
    CooccurrenceGraph g;
    g.catalog = corpus.catalog;
    g.edge_weights = counts.pair_counts;
    g.edge_weights.diagonal().setZero();
    g.node_counts = counts.image_counts;
    g.total_images = counts.total_images;
    return g;
}

CooccurrenceGraph threshold_graph(CooccurrenceGraph graph, long tau) {
    const int m = graph.catalog.size();
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            if (a != b && graph.edge_weights(a, b) <= tau) graph.edge_weights(a, b) = 0;
        }
    }
    return graph;
}

std::vector<DirectedEdge> orient_edges(const CooccurrenceGraph& graph) {
    std::vector<DirectedEdge> edges;
    const int m = graph.catalog.size();
    for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
            if (graph.edge_weights(a, b) > 0) edges.push_back({a, b});
        }
    }
    return edges;
}

double conditional_cooccurrence(const CooccurrenceGraph& graph, int evidence, int query) {
    if (evidence < 0 || evidence >= graph.catalog.size() || query < 0 ||
        query >= graph.catalog.size())
        fail(Err::InvalidInput, "class index out of range");
    const int seen = graph.node_counts[evidence];
    if (seen <= 0)
        fail(Err::EvidenceUnseen, "class appears in no image: " + graph.catalog.name(evidence));
    if (query == evidence) return 1.0;
    return static_cast<double>(graph.edge_weights(evidence, query)) /
           static_cast<double>(seen);
}

std::vector<std::pair<int, double>> rank_completions(const CooccurrenceGraph& graph,
                                                     int evidence, int top_k) {
    std::vector<std::pair<int, double>> out;
    for (int q = 0; q < graph.catalog.size(); ++q) {
        if (q == evidence) continue;
        out.emplace_back(q, conditional_cooccurrence(graph, evidence, q));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (top_k >= 0 && static_cast<int>(out.size()) > top_k) out.resize(top_k);
    return out;
}

std::string graph_to_json(const CooccurrenceGraph& graph) {
    nlohmann::json j;
    j["classes"] = graph.catalog.names();
    j["total_images"] = graph.total_images;
    j["node_counts"] =
        std::vector<int>(graph.node_counts.data(), graph.node_counts.data() + graph.node_counts.size());
    nlohmann::json edges = nlohmann::json::array();
    const int m = graph.catalog.size();
    for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
            if (graph.edge_weights(a, b) > 0) {
                edges.push_back({{"a", graph.catalog.name(a)},
                                 {"b", graph.catalog.name(b)},
                                 {"weight", graph.edge_weights(a, b)}});
            }
        }
    }
    j["edges"] = edges;
    return j.dump(2);
}

CooccurrenceGraph parse_graph_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Err::ParseError, std::string("graph file: ") + e.what());
    }
    try {
        CooccurrenceGraph g;
        g.catalog = ClassCatalog(j.at("classes").get<std::vector<std::string>>());
        const int m = g.catalog.size();
        g.total_images = j.at("total_images").get<long>();
        const auto nc = j.at("node_counts").get<std::vector<int>>();
        if (static_cast<int>(nc.size()) != m)
            fail(Err::ParseError, "graph file node_counts dimension mismatch");
        g.node_counts = Eigen::Map<const Eigen::VectorXi>(nc.data(), m);
        g.edge_weights = Eigen::MatrixXi::Zero(m, m);
        for (const auto& e : j.at("edges")) {
            const auto a = g.catalog.index_of(e.at("a").get<std::string>());
            const auto b = g.catalog.index_of(e.at("b").get<std::string>());
            if (!a || !b) fail(Err::ParseError, "graph file edge references unknown class");
            const int w = e.at("weight").get<int>();
            g.edge_weights(*a, *b) = w;
            g.edge_weights(*b, *a) = w;
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        fail(Err::ParseError, std::string("graph file: ") + e.what());
    }
}

CooccurrenceGraph load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Err::IoError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_graph_json(ss.str());
}

void save_graph_file(const CooccurrenceGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(Err::IoError, "cannot write " + path);
    out << graph_to_json(graph) << '\n';
}

std::string graph_to_dot(const CooccurrenceGraph& graph) {
    std::ostringstream os;
    os << "digraph cooccurrence {\n";
    for (const auto& name : graph.catalog.names()) os << "  \"" << name << "\";\n";
    for (const auto& e : orient_edges(graph)) {
        os << "  \"" << graph.catalog.name(e.parent) << "\" -> \""
           << graph.catalog.name(e.child) << "\" [label=" << graph.edge_weights(e.parent, e.child)
           << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace ctxfuse
