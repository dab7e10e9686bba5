#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctxfuse/hyperprior.hpp"
#include "ctxfuse/mcmc.hpp"
#include "ctxfuse/scene_model.hpp"

namespace ctxfuse {

// ---------------------------------------------------------------------------
// Built-in missile-defense demo: three warhead classes (ACME, GLOBEX,
// TRIOZAP) and three kingdoms whose launch habits differ in how common
// TRIOZAP is and whether it flies together with ACME.
//   iowa          TRIOZAP rare, anti-correlated with ACME
//   utah          TRIOZAP common, anti-correlated with ACME
//   ohio          TRIOZAP common, correlated with ACME
//   utah-identity utah frequencies with correlations removed
//   none          flat frequencies, no correlations (sensor-only baseline)
// The scene: one warhead resolved as ACME at 99% +- 1%, and one blurry
// object at 33.33% +- 30% for each class.
// ---------------------------------------------------------------------------

ClassCatalog toy_catalog();
std::vector<std::string> toy_context_names();  // iowa, ohio, utah, utah-identity, none
ContextModel toy_context(const std::string& name);
Scene toy_scene();

// Hyperprior demo scene: three resolved ACME, three resolved GLOBEX, one
// blurry object.
Scene toy_hyperprior_scene();

int toy_query_class();   // TRIOZAP
int toy_query_object(const Scene& scene);  // the blurry reading

// ---------------------------------------------------------------------------
// Scenario file: JSON with classes, contexts (inline models, context-model
// file paths, or corpora to learn from), the scene readings, exactly one
// query, sampler overrides, and optional hyperprior settings.
// ---------------------------------------------------------------------------

struct Scenario {
    Scene scene;
    std::vector<ContextModel> contexts;
    int query_object = 0;
    int query_class = 0;
    SamplerConfig sampler;
    bool hyperprior = false;
    HyperpriorOptions hyper;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario_json(const std::string& text, const std::string& base_dir = "");

// Resolves a data path: absolute and existing paths win, otherwise the
// CONTEXT_FUSE_DATA_DIR environment variable provides the base directory.
std::string resolve_data_path(const std::string& path);

}  // namespace ctxfuse
