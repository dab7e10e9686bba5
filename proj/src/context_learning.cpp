#include "ctxfuse/context_learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace ctxfuse {

namespace {

nlohmann::json parse_json(const std::string& text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Err::ParseError, std::string(what) + ": " + e.what());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Err::IoError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

AnnotatedCorpus parse_native_corpus(const std::string& text) {
    const nlohmann::json j = parse_json(text, "native corpus");
    if (!j.is_array()) fail(Err::ParseError, "native corpus: expected a list of images");

    std::set<std::string> names;
    for (const auto& img : j) {
        if (!img.is_array()) fail(Err::ParseError, "native corpus: image must be a list");
        for (const auto& label : img) {
            if (!label.is_string()) fail(Err::ParseError, "native corpus: label must be a string");
            names.insert(label.get<std::string>());
        }
    }
    if (names.empty()) fail(Err::ParseError, "native corpus: no labels present");

    AnnotatedCorpus corpus;
    corpus.catalog = ClassCatalog({names.begin(), names.end()});
    for (const auto& img : j) {
        std::vector<int> ids;
        ids.reserve(img.size());
        for (const auto& label : img) {
            ids.push_back(*corpus.catalog.index_of(label.get<std::string>()));
        }
        corpus.images.push_back(std::move(ids));
    }
    return corpus;
}

AnnotatedCorpus load_native_corpus(const std::string& path) {
    return parse_native_corpus(slurp(path));
}

AnnotatedCorpus parse_coco_annotations(const std::string& text,
                                       const std::optional<std::string>& supercategory) {
    const nlohmann::json j = parse_json(text, "coco annotations");
    try {
        std::map<long, std::string> cat_name;         // category id -> name
        std::map<long, std::string> cat_super;        // category id -> supercategory
        std::vector<std::string> names;
        std::set<std::string> supers;
        for (const auto& c : j.at("categories")) {
            const long id = c.at("id").get<long>();
            cat_name[id] = c.at("name").get<std::string>();
            cat_super[id] = c.value("supercategory", std::string{});
            names.push_back(cat_name[id]);
            supers.insert(cat_super[id]);
        }
        if (names.empty()) fail(Err::ParseError, "coco annotations: no categories");
        if (supercategory && !supers.count(*supercategory))
            fail(Err::UnknownSupercategory, "unknown supercategory: " + *supercategory);

        ClassCatalog catalog(names);

        std::map<long, std::vector<int>> by_image;    // image id -> class ids
        std::map<long, bool> has_super;
        for (const auto& a : j.at("annotations")) {
            const long img = a.at("image_id").get<long>();
            const long cat = a.at("category_id").get<long>();
            auto it = cat_name.find(cat);
            if (it == cat_name.end())
                fail(Err::ParseError, "coco annotations: unknown category id");
            by_image[img].push_back(*catalog.index_of(it->second));
            if (supercategory && cat_super[cat] == *supercategory) has_super[img] = true;
        }

        AnnotatedCorpus corpus;
        corpus.catalog = std::move(catalog);
        for (auto& [img, ids] : by_image) {
            if (supercategory && !has_super[img]) continue;
            corpus.images.push_back(std::move(ids));
        }
        return corpus;
    } catch (const nlohmann::json::exception& e) {
        fail(Err::ParseError, std::string("coco annotations: ") + e.what());
    }
}

AnnotatedCorpus load_coco_annotations(const std::string& path,
                                      const std::optional<std::string>& supercategory) {
    return parse_coco_annotations(slurp(path), supercategory);
}

ContextModel estimate_context(const AnnotatedCorpus& corpus, const std::string& name) {
    if (corpus.images.empty()) fail(Err::EmptyCorpus, "corpus has no images");
    const int m = corpus.catalog.size();
    const long n_img = static_cast<long>(corpus.images.size());

    // per-image count vectors
    Mat counts = Mat::Zero(n_img, m);
    for (long i = 0; i < n_img; ++i) {
        for (int cls : corpus.images[static_cast<std::size_t>(i)]) counts(i, cls) += 1.0;
    }
    const double total = counts.sum();
    if (total <= 0.0) fail(Err::NoObjects, "corpus has no labeled objects");

    ContextModel model;
    model.name = name;
    model.mu = counts.colwise().sum().transpose() / total;

    const Vec mean = counts.colwise().mean().transpose();
    Mat centered = counts.rowwise() - mean.transpose();
    Vec var = centered.array().square().colwise().sum().transpose() / static_cast<double>(n_img);

    Mat corr = Mat::Identity(m, m);
    for (int a = 0; a < m; ++a) {
        if (var[a] <= 0.0) continue;  // degenerate class: independent of everything
        for (int b = a + 1; b < m; ++b) {
            if (var[b] <= 0.0) continue;
            const double cov = centered.col(a).dot(centered.col(b)) / static_cast<double>(n_img);
            const double r = cov / std::sqrt(var[a] * var[b]);
            corr(a, b) = r;
            corr(b, a) = r;
        }
    }

    // clip eigenvalues if the patched matrix lost definiteness, then rescale
    // back to unit diagonal
    Eigen::SelfAdjointEigenSolver<Mat> es(corr);
    if (es.eigenvalues().minCoeff() <= kEigenFloor) {
        Vec ev = es.eigenvalues().cwiseMax(1e-6);
        corr = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        Vec d = corr.diagonal().cwiseSqrt();
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) corr(a, b) /= d[a] * d[b];
        corr = 0.5 * (corr + corr.transpose());
        corr.diagonal().setOnes();
    }
    model.sigma = std::move(corr);

    normalize_mu(model.mu);  // exact renormalization of accumulated rounding
    return validate_context(std::move(model));
}

CooccurrenceCounts cooccurrence_counts(const AnnotatedCorpus& corpus) {
    if (corpus.images.empty()) fail(Err::EmptyCorpus, "corpus has no images");
    const int m = corpus.catalog.size();
    CooccurrenceCounts out;
    out.pair_counts = Eigen::MatrixXi::Zero(m, m);
    out.image_counts = Eigen::VectorXi::Zero(m);
    out.total_images = static_cast<long>(corpus.images.size());

    std::vector<int> present;
    for (const auto& img : corpus.images) {
        present.assign(img.begin(), img.end());
        std::sort(present.begin(), present.end());
        present.erase(std::unique(present.begin(), present.end()), present.end());
        for (std::size_t i = 0; i < present.size(); ++i) {
            out.image_counts[present[i]] += 1;
            out.pair_counts(present[i], present[i]) += 1;
            for (std::size_t k = i + 1; k < present.size(); ++k) {
                out.pair_counts(present[i], present[k]) += 1;
                out.pair_counts(present[k], present[i]) += 1;
            }
        }
    }
    return out;
}

}  // namespace ctxfuse
