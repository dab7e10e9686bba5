#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ctxfuse/context_learning.hpp"
#include "ctxfuse/scene_model.hpp"

namespace ctxfuse {

// Weighted undirected class graph built from per-image co-occurrence counts.
struct CooccurrenceGraph {
    ClassCatalog catalog;
    Eigen::MatrixXi edge_weights;   // symmetric, zero diagonal
    Eigen::VectorXi node_counts;    // images containing each class
    long total_images = 0;
};

struct DirectedEdge {
    int parent;  // lexicographically earlier class
    int child;
};

CooccurrenceGraph build_graph(const AnnotatedCorpus& corpus);

// Zeroes edges with weight <= tau (strict survival: weight > tau).
CooccurrenceGraph threshold_graph(CooccurrenceGraph graph, long tau);

// Orients every surviving edge parent -> child by catalog order. The output
// is acyclic by construction.
std::vector<DirectedEdge> orient_edges(const CooccurrenceGraph& graph);

// Fraction of evidence-containing images that also contain the query class.
// query == evidence gives 1. Throws EvidenceUnseen if no image contains the
// evidence class.
double conditional_cooccurrence(const CooccurrenceGraph& graph, int evidence, int query);

// Classes ranked by conditional co-occurrence given the evidence class,
// descending, ties broken by catalog order, evidence excluded.
std::vector<std::pair<int, double>> rank_completions(const CooccurrenceGraph& graph,
                                                     int evidence, int top_k);

std::string graph_to_json(const CooccurrenceGraph& graph);
CooccurrenceGraph parse_graph_json(const std::string& text);
CooccurrenceGraph load_graph_file(const std::string& path);
void save_graph_file(const CooccurrenceGraph& graph, const std::string& path);
std::string graph_to_dot(const CooccurrenceGraph& graph);

}  // namespace ctxfuse
