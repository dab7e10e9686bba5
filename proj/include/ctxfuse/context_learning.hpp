#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "ctxfuse/scene_model.hpp"

namespace ctxfuse {

struct CooccurrenceCounts {
    // pair_counts(a,b), a != b: images containing at least one instance of
    // each; diagonal: images containing the class at all. Presence is a
    // per-image boolean, duplicates within an image count once.
    Eigen::MatrixXi pair_counts;
    Eigen::VectorXi image_counts;  // same values as the diagonal
    long total_images = 0;
};

// Native corpus format: JSON list of images, each a list of class-name
// strings (one entry per labeled instance).
AnnotatedCorpus load_native_corpus(const std::string& path);
AnnotatedCorpus parse_native_corpus(const std::string& text);

// COCO instances annotation file. The catalog covers every category in the
// file; one corpus image per annotated image. With a supercategory filter,
// only images containing at least one object of that supercategory are kept,
// but all of each kept image's objects are retained.
AnnotatedCorpus load_coco_annotations(const std::string& path,
                                      const std::optional<std::string>& supercategory = {});
AnnotatedCorpus parse_coco_annotations(const std::string& text,
                                       const std::optional<std::string>& supercategory = {});

// mu: instance share per class. sigma: Pearson correlation of per-image
// count vectors; classes with zero count variance get correlation 0 with
// everything else, and the matrix is eigenvalue-clipped back to positive
// definite if needed. Result always passes validate_context.
ContextModel estimate_context(const AnnotatedCorpus& corpus, const std::string& name);

CooccurrenceCounts cooccurrence_counts(const AnnotatedCorpus& corpus);

}  // namespace ctxfuse
