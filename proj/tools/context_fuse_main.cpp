// context-fuse: fuse low-confidence multi-class sensor readings with learned
// co-occurrence context.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctxfuse/bayes_net.hpp"
#include "ctxfuse/context_learning.hpp"
#include "ctxfuse/hbm.hpp"
#include "ctxfuse/hyperprior.hpp"
#include "ctxfuse/mcmc.hpp"
#include "ctxfuse/scenario.hpp"

using namespace ctxfuse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitWarnings = 2;

struct OutputOptions {
    bool json = false;
    bool no_timestamps = false;
};

void print_header(const OutputOptions& out) {
    if (out.json || out.no_timestamps) return;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof buf, "%F %T", std::gmtime(&now));
    std::cout << "generated: " << buf << " UTC\n";
}

void print_posterior_table(const Scene& scene, const Mat& post) {
    std::cout << "object";
    for (const auto& name : scene.catalog.names()) std::cout << "  " << name;
    std::cout << '\n';
    for (int n = 0; n < scene.n_objects(); ++n) {
        std::cout << std::setw(6) << n;
        for (int m = 0; m < scene.n_classes(); ++m)
            std::cout << "  " << std::fixed << std::setprecision(4) << post(m, n);
        std::cout << '\n';
    }
    std::cout.unsetf(std::ios::fixed);
}

nlohmann::json posterior_json(const Scene& scene, const Mat& post) {
    nlohmann::json objects = nlohmann::json::array();
    for (int n = 0; n < scene.n_objects(); ++n) {
        nlohmann::json probs;
        for (int m = 0; m < scene.n_classes(); ++m)
            probs[scene.catalog.name(m)] = post(m, n);
        objects.push_back(probs);
    }
    return objects;
}

nlohmann::json diagnostics_json(const PosteriorDiagnostics& d) {
    return {{"acceptance_rate", d.acceptance_rate},
            {"converged", d.converged},
            {"geweke_scores", d.geweke_scores},
            {"iterations", d.iterations}};
}

int cmd_toy(const std::string& subcase, SamplerConfig cfg, const std::string& dump_chain,
            const OutputOptions& out) {
    static const std::vector<std::pair<std::string, std::string>> cases = {
        {"sensor-alone", "none"},  {"utah-identity", "utah-identity"},
        {"utah-full", "utah"},     {"iowa-full", "iowa"},
        {"ohio-full", "ohio"}};
    std::string context_name;
    for (const auto& [key, ctx] : cases) {
        if (key == subcase) context_name = ctx;
    }
    if (context_name.empty()) {
        std::cerr << "unknown subcase: " << subcase << '\n';
        return kExitError;
    }

    const Scene scene = toy_scene();
    const int blurry = toy_query_object(scene);
    Chain chain;
    const auto result = posterior_class_probabilities(
        scene, toy_context(context_name), cfg, std::make_pair(toy_query_class(), blurry),
        dump_chain.empty() ? nullptr : &chain);
    if (!dump_chain.empty()) {
        std::ofstream csv(dump_chain);
        if (!csv) fail(Err::IoError, "cannot write " + dump_chain);
        dump_chain_csv(chain, csv);
    }
    const double p = result.probabilities(toy_query_class(), blurry);

    if (out.json) {
        nlohmann::json j = {{"subcase", subcase},
                            {"context", context_name},
                            {"p_triozap_blurry", p},
                            {"posterior", posterior_json(scene, result.probabilities)},
                            {"diagnostics", diagnostics_json(result.diagnostics)}};
        std::cout << j.dump(2) << '\n';
    } else {
        print_header(out);
        std::cout << "subcase: " << subcase << " (context " << context_name << ")\n";
        print_posterior_table(scene, result.probabilities);
        std::cout << "P(TRIOZAP | blurry object) = " << std::setprecision(4) << std::fixed
                  << p << '\n';
        std::cout.unsetf(std::ios::fixed);
        std::cout << "acceptance rate: " << std::setprecision(3) << result.diagnostics.acceptance_rate
                  << ", converged: " << (result.diagnostics.converged ? "yes" : "no") << '\n';
    }
    return result.diagnostics.converged ? kExitOk : kExitWarnings;
}

int cmd_fuse(const std::string& path, std::optional<std::uint64_t> seed,
             std::optional<long> iterations, const OutputOptions& out) {
    Scenario sc = load_scenario(path);
    if (seed) sc.sampler.seed = *seed;
    if (iterations) {
        sc.sampler.iterations = *iterations;
        sc.sampler.burn_in = std::min(sc.sampler.burn_in, *iterations / 2);
    }
    sc.hyper.seed = sc.sampler.seed;

    const bool hyper_mode = sc.hyperprior || sc.contexts.size() > 1;
    Vec weights;
    FusionResult fusion;
    if (hyper_mode) {
        weights = context_posterior(sc.scene, sc.contexts, sc.hyper);
        fusion = fuse_with_hyperprior(sc.scene, sc.contexts, weights, sc.sampler);
    } else {
        auto single = posterior_class_probabilities(
            sc.scene, sc.contexts.front(), sc.sampler,
            std::make_pair(sc.query_class, sc.query_object));
        fusion.probabilities = std::move(single.probabilities);
        fusion.per_context.push_back(std::move(single.diagnostics));
        weights = Vec::Ones(1);
    }

    bool all_converged = true;
    for (const auto& d : fusion.per_context) all_converged = all_converged && d.converged;
    const double p_query = fusion.probabilities(sc.query_class, sc.query_object);

    if (out.json) {
        nlohmann::json j;
        j["query"] = {{"object", sc.query_object},
                      {"class", sc.scene.catalog.name(sc.query_class)},
                      {"probability", p_query}};
        j["posterior"] = posterior_json(sc.scene, fusion.probabilities);
        if (hyper_mode) {
            nlohmann::json w;
            for (std::size_t c = 0; c < sc.contexts.size(); ++c)
                w[sc.contexts[c].name] = weights[static_cast<int>(c)];
            j["context_weights"] = w;
        }
        nlohmann::json diags = nlohmann::json::array();
        for (const auto& d : fusion.per_context) diags.push_back(diagnostics_json(d));
        j["diagnostics"] = diags;
        j["converged"] = all_converged;
        std::cout << j.dump(2) << '\n';
    } else {
        print_header(out);
        if (hyper_mode) {
            std::cout << "context weights:\n";
            for (std::size_t c = 0; c < sc.contexts.size(); ++c)
                std::cout << "  " << sc.contexts[c].name << ": " << std::setprecision(4)
                          << std::fixed << weights[static_cast<int>(c)] << '\n';
            std::cout.unsetf(std::ios::fixed);
        }
        print_posterior_table(sc.scene, fusion.probabilities);
        std::cout << "P(" << sc.scene.catalog.name(sc.query_class) << " | object "
                  << sc.query_object << ") = " << std::setprecision(4) << std::fixed
                  << p_query << '\n';
        std::cout.unsetf(std::ios::fixed);
        std::cout << "converged: " << (all_converged ? "yes" : "no") << '\n';
    }
    return all_converged ? kExitOk : kExitWarnings;
}

AnnotatedCorpus load_corpus(const std::string& path, bool coco,
                            const std::optional<std::string>& supercategory) {
    const std::string resolved = resolve_data_path(path);
    if (coco) return load_coco_annotations(resolved, supercategory);
    if (supercategory)
        fail(Err::InvalidInput, "--supercategory requires a COCO corpus");
    return load_native_corpus(resolved);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuse low-confidence sensor classifications with co-occurrence context"};
    app.require_subcommand(1);
    app.fallthrough();

    OutputOptions out;
    app.add_flag("--json", out.json, "machine-readable output");
    app.add_flag("--no-timestamps", out.no_timestamps, "omit timestamps from reports");

    SamplerConfig cfg;
    std::optional<std::uint64_t> seed_opt;
    std::optional<long> iter_opt;

    // toy
    auto* toy = app.add_subcommand("toy", "run the built-in demo scenario");
    std::string subcase = "ohio-full";
    std::string dump_chain;
    toy->add_option("--subcase", subcase,
                    "sensor-alone|utah-identity|utah-full|iowa-full|ohio-full");
    toy->add_option("--seed", cfg.seed);
    toy->add_option("--iterations", cfg.iterations);
    toy->add_option("--burn-in", cfg.burn_in);
    toy->add_option("--thin", cfg.thin);
    toy->add_option("--geweke-threshold", cfg.geweke_threshold);
    toy->add_option("--dump-chain", dump_chain, "write the thinned chain as CSV");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "run a scenario file");
    std::string scenario_path;
    fuse->add_option("scenario", scenario_path, "scenario JSON file")->required();
    fuse->add_option("--seed", seed_opt);
    fuse->add_option("--iterations", iter_opt);

    // learn
    auto* learn = app.add_subcommand("learn", "estimate a context model from a corpus");
    std::string corpus_path, out_path, context_name = "learned";
    bool coco = false, native = false;
    std::optional<std::string> supercategory;
    learn->add_option("corpus", corpus_path)->required();
    learn->add_flag("--coco", coco, "corpus is a COCO instances file");
    learn->add_flag("--native", native, "corpus is the native JSON list format");
    learn->add_option("--supercategory", supercategory);
    learn->add_option("--name", context_name);
    learn->add_option("-o,--out", out_path)->required();

    // bn
    auto* bn = app.add_subcommand("bn", "co-occurrence graph commands");
    bn->require_subcommand(1);
    std::string bn_corpus, bn_graph_in, bn_graph_out, bn_dot, evidence, query;
    long tau = 0;
    int top_k = -1;
    bool bn_coco = false;
    std::optional<std::string> bn_super;
    auto* bn_build = bn->add_subcommand("build", "build a graph from a corpus");
    bn_build->add_option("corpus", bn_corpus)->required();
    bn_build->add_flag("--coco", bn_coco);
    bn_build->add_option("--supercategory", bn_super);
    bn_build->add_option("-o,--out", bn_graph_out)->required();
    bn_build->add_option("--dot", bn_dot);
    auto* bn_thresh = bn->add_subcommand("threshold", "prune weak edges");
    bn_thresh->add_option("-i,--in", bn_graph_in)->required();
    bn_thresh->add_option("--tau", tau)->required();
    bn_thresh->add_option("-o,--out", bn_graph_out)->required();
    bn_thresh->add_option("--dot", bn_dot);
    auto* bn_query = bn->add_subcommand("query", "conditional co-occurrence probability");
    bn_query->add_option("-i,--in", bn_graph_in)->required();
    bn_query->add_option("--evidence", evidence)->required();
    bn_query->add_option("--query", query)->required();
    auto* bn_rank = bn->add_subcommand("rank", "rank classes by co-occurrence with evidence");
    bn_rank->add_option("-i,--in", bn_graph_in)->required();
    bn_rank->add_option("--evidence", evidence)->required();
    bn_rank->add_option("--top-k", top_k);

    // bench
    auto* bench = app.add_subcommand("bench", "sampler timing and convergence report");
    std::string bench_subcase = "ohio-full";
    std::string bench_csv;
    std::vector<long> bench_iters;
    bench->add_option("--subcase", bench_subcase);
    bench->add_option("--seed", cfg.seed);
    bench->add_option("--iterations", bench_iters, "one run per value")
        ->delimiter(',');
    bench->add_option("--burn-in", cfg.burn_in);
    bench->add_option("--geweke-threshold", cfg.geweke_threshold);
    bench->add_option("--csv", bench_csv);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (toy->parsed()) return cmd_toy(subcase, cfg, dump_chain, out);
        if (fuse->parsed()) return cmd_fuse(scenario_path, seed_opt, iter_opt, out);

        if (learn->parsed()) {
            if (coco == native)
                fail(Err::InvalidInput, "choose exactly one of --coco / --native");
            const auto corpus = load_corpus(corpus_path, coco, supercategory);
            const auto model = estimate_context(corpus, context_name);
            save_context_file(model, corpus.catalog, out_path);
            if (!out.json) {
                print_header(out);
                std::cout << "wrote " << out_path << " (" << corpus.catalog.size()
                          << " classes, " << corpus.images.size() << " images)\n";
            } else {
                std::cout << nlohmann::json{{"out", out_path},
                                            {"classes", corpus.catalog.size()},
                                            {"images", corpus.images.size()}}
                                 .dump(2)
                          << '\n';
            }
            return kExitOk;
        }

        if (bn->parsed()) {
            if (bn_build->parsed()) {
                const auto corpus = load_corpus(bn_corpus, bn_coco, bn_super);
                const auto graph = build_graph(corpus);
                save_graph_file(graph, bn_graph_out);
                if (!bn_dot.empty()) {
                    std::ofstream dot(bn_dot);
                    dot << graph_to_dot(graph);
                }
                std::cout << "wrote " << bn_graph_out << '\n';
                return kExitOk;
            }
            if (bn_thresh->parsed()) {
                auto graph = threshold_graph(load_graph_file(bn_graph_in), tau);
                save_graph_file(graph, bn_graph_out);
                if (!bn_dot.empty()) {
                    std::ofstream dot(bn_dot);
                    dot << graph_to_dot(graph);
                }
                std::cout << "wrote " << bn_graph_out << '\n';
                return kExitOk;
            }
            const auto graph = load_graph_file(bn_graph_in);
            const auto ev = graph.catalog.index_of(evidence);
            if (!ev) fail(Err::InvalidInput, "unknown class: " + evidence);
            if (bn_query->parsed()) {
                const auto q = graph.catalog.index_of(query);
                if (!q) fail(Err::InvalidInput, "unknown class: " + query);
                const double p = conditional_cooccurrence(graph, *ev, *q);
                if (out.json)
                    std::cout << nlohmann::json{{"evidence", evidence},
                                                {"query", query},
                                                {"probability", p}}
                                     .dump(2)
                              << '\n';
                else
                    std::cout << p << '\n';
                return kExitOk;
            }
            // rank
            const auto ranked = rank_completions(graph, *ev, top_k);
            if (out.json) {
                nlohmann::json rows = nlohmann::json::array();
                for (const auto& [cls, p] : ranked)
                    rows.push_back({{"class", graph.catalog.name(cls)}, {"probability", p}});
                std::cout << rows.dump(2) << '\n';
            } else {
                print_header(out);
                for (const auto& [cls, p] : ranked)
                    std::cout << std::left << std::setw(20) << graph.catalog.name(cls)
                              << std::setprecision(4) << std::fixed << p << '\n';
                std::cout.unsetf(std::ios::fixed);
            }
            return kExitOk;
        }

        if (bench->parsed()) {
            static const std::vector<std::pair<std::string, std::string>> cases = {
                {"sensor-alone", "none"},  {"utah-identity", "utah-identity"},
                {"utah-full", "utah"},     {"iowa-full", "iowa"},
                {"ohio-full", "ohio"}};
            std::string ctx_name;
            for (const auto& [key, ctx] : cases)
                if (key == bench_subcase) ctx_name = ctx;
            if (ctx_name.empty()) fail(Err::InvalidInput, "unknown subcase " + bench_subcase);

            const Scene scene = toy_scene();
            cfg.track = std::make_pair(toy_query_class(), toy_query_object(scene));
            std::vector<SamplerConfig> configs;
            if (bench_iters.empty()) bench_iters.push_back(cfg.iterations);
            for (long iters : bench_iters) {
                SamplerConfig c = cfg;
                c.iterations = iters;
                c.burn_in = std::min(cfg.burn_in, iters / 2);
                configs.push_back(c);
            }
            JointDensityTarget target(scene, toy_context(ctx_name));
            const auto report = benchmark(target, configs);

            print_header(out);
            std::cout << std::left << std::setw(14) << "subcase" << std::setw(12)
                      << "iterations" << std::setw(12) << "us/iter" << std::setw(18)
                      << "iter-to-converge" << std::setw(12) << "estimate"
                      << "acceptance\n";
            for (const auto& e : report) {
                std::cout << std::left << std::setw(14) << bench_subcase << std::setw(12)
                          << e.config.iterations << std::setw(12) << std::setprecision(3)
                          << std::fixed << e.micros_per_iter << std::setw(18)
                          << (e.converged_at ? std::to_string(*e.converged_at) : "not reached")
                          << std::setw(12) << std::setprecision(4) << e.estimate
                          << std::setprecision(3) << e.acceptance_rate << '\n';
                std::cout.unsetf(std::ios::fixed);
            }
            if (!bench_csv.empty()) {
                std::ofstream csv(bench_csv);
                csv << "subcase,iterations,us_per_iter,iter_to_converge,estimate,acceptance\n";
                for (const auto& e : report) {
                    csv << bench_subcase << ',' << e.config.iterations << ','
                        << e.micros_per_iter << ','
                        << (e.converged_at ? std::to_string(*e.converged_at) : "")
                        << ',' << e.estimate << ',' << e.acceptance_rate << '\n';
                }
            }
            return kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
