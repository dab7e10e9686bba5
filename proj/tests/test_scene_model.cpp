#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "ctxfuse/scene_model.hpp"
#include "ctxfuse/scenario.hpp"

using namespace ctxfuse;

namespace {

// Independent positive-definiteness oracle: leading principal minors of a
// 3x3 symmetric matrix, expanded by hand.
double minor1(const Mat& s) { return s(0, 0); }
double minor2(const Mat& s) { return s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0); }
double minor3(const Mat& s) {
    return s(0, 0) * (s(1, 1) * s(2, 2) - s(1, 2) * s(2, 1)) -
           s(0, 1) * (s(1, 0) * s(2, 2) - s(1, 2) * s(2, 0)) +
           s(0, 2) * (s(1, 0) * s(2, 1) - s(1, 1) * s(2, 0));
}

Mat sym3(double ab, double ac, double bc) {
    Mat s(3, 3);
    s << 1.0, ab, ac,
         ab, 1.0, bc,
         ac, bc, 1.0;
    return s;
}

ContextModel model3(const Vec& mu, const Mat& sigma) {
    ContextModel m;
    m.name = "test";
    m.mu = mu;
    m.sigma = sigma;
    return m;
}

}  // namespace

TEST_CASE("catalog sorts case-insensitively with case-sensitive tie break") {
    ClassCatalog cat({"dog", "Cat", "apple", "Banana"});
    CHECK(cat.names() == std::vector<std::string>{"apple", "Banana", "Cat", "dog"});

    ClassCatalog ties({"aa", "AA", "Ab"});
    CHECK(ties.names() == std::vector<std::string>{"AA", "aa", "Ab"});

    CHECK(cat.index_of("Cat") == 2);
    CHECK(!cat.index_of("cat").has_value());
    CHECK_THROWS_AS(ClassCatalog({"x", "x"}), Error);
    CHECK_THROWS_AS(ClassCatalog(std::vector<std::string>{}), Error);
}

TEST_CASE("scenario correlation matrices pass validation and the minor oracle") {
    for (const char* name : {"iowa", "ohio", "utah"}) {
        const ContextModel ctx = toy_context(name);
        CAPTURE(name);
        CHECK(minor1(ctx.sigma) > 0.0);
        CHECK(minor2(ctx.sigma) > 0.0);
        CHECK(minor3(ctx.sigma) > 0.0);
        CHECK_NOTHROW(validate_context(ctx));
    }
}

TEST_CASE("identity correlation with flat frequencies is valid") {
    Vec mu(3);
    mu << 1.0 / 3, 1.0 / 3, 1.0 / 3;
    CHECK_NOTHROW(validate_context(model3(mu, Mat::Identity(3, 3))));
}

TEST_CASE("indefinite correlation matrix is rejected") {
    // off-diagonals 0.99, 0.99, -0.99: the 3x3 determinant comes out negative
    const Mat s = sym3(0.99, 0.99, -0.99);
    CHECK(minor3(s) < 0.0);
    Vec mu(3);
    mu << 0.5, 0.3, 0.2;
    try {
        validate_context(model3(mu, s));
        FAIL("expected NotPositiveDefinite");
    } catch (const Error& e) {
        CHECK(e.code() == Err::NotPositiveDefinite);
    }
}

TEST_CASE("context validation rejects malformed inputs") {
    Vec mu(3);
    mu << 0.5, 0.3, 0.2;

    Mat asym = sym3(0.2, 0.1, 0.0);
    asym(0, 1) = 0.25;
    CHECK_THROWS_AS(validate_context(model3(mu, asym)), Error);

    Mat diag = Mat::Identity(3, 3);
    diag(1, 1) = 1.1;
    CHECK_THROWS_AS(validate_context(model3(mu, diag)), Error);

    Vec neg(3);
    neg << 0.5, -0.1, 0.6;
    CHECK_THROWS_AS(validate_context(model3(neg, Mat::Identity(3, 3))), Error);

    Vec unnorm(3);
    unnorm << 0.5, 0.3, 0.3;
    CHECK_THROWS_AS(validate_context(model3(unnorm, Mat::Identity(3, 3))), Error);

    bool rescaled = normalize_mu(unnorm);
    CHECK(rescaled);
    CHECK(unnorm.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_NOTHROW(validate_context(model3(unnorm, Mat::Identity(3, 3))));
    CHECK(!normalize_mu(unnorm));
}

TEST_CASE("context file round-trip preserves every bit") {
    const ContextModel ctx = toy_context("ohio");
    const ClassCatalog cat = toy_catalog();
    const auto path = std::filesystem::temp_directory_path() / "ctxfuse_roundtrip.json";
    save_context_file(ctx, cat, path.string());
    const ContextFile loaded = load_context_file(path.string());
    std::filesystem::remove(path);

    CHECK(loaded.catalog == cat);
    CHECK(loaded.model.name == ctx.name);
    REQUIRE(loaded.model.mu.size() == ctx.mu.size());
    for (int i = 0; i < ctx.mu.size(); ++i) CHECK(loaded.model.mu[i] == ctx.mu[i]);
    for (int i = 0; i < ctx.sigma.rows(); ++i)
        for (int j = 0; j < ctx.sigma.cols(); ++j)
            CHECK(loaded.model.sigma(i, j) == ctx.sigma(i, j));
    CHECK(!loaded.mu_was_rescaled);
}

TEST_CASE("context file loader rescales frequencies instead of failing") {
    const std::string text = R"({
        "name": "t", "classes": ["a", "b"],
        "mu": [2.0, 2.0],
        "sigma": [[1.0, 0.0], [0.0, 1.0]]
    })";
    const ContextFile f = parse_context_json(text);
    CHECK(f.mu_was_rescaled);
    CHECK(f.model.mu[0] == doctest::Approx(0.5));
}

TEST_CASE("latent checker enforces the coupling between eta and assignments") {
    LatentScene l;
    l.eta_raw = Vec::Zero(3);
    l.eta = Vec::Constant(3, 2.0 / 3.0);
    l.assignments = Mat::Constant(3, 2, 1.0 / 3.0);
    CHECK_NOTHROW(check_latent(l, 2));

    SUBCASE("row sums off eta beyond 1e-9") {
        l.assignments(0, 0) += 5e-9;
        l.assignments(1, 0) -= 5e-9;  // columns still sum to 1
        CHECK_THROWS_AS(check_latent(l, 2), Error);
    }
    SUBCASE("column sum broken") {
        l.assignments(0, 0) += 1e-3;
        CHECK_THROWS_AS(check_latent(l, 2), Error);
    }
    SUBCASE("eta sum drifts from the object count") {
        l.eta[0] += 1e-6;
        CHECK_THROWS_AS(check_latent(l, 2), Error);
    }
    SUBCASE("entry outside the unit interval") {
        l.eta << 2.0, -0.5, 0.5;
        l.assignments.col(0) << 1.0, -0.25, 0.25;
        l.assignments.col(1) << 1.0, -0.25, 0.25;
        CHECK_THROWS_AS(check_latent(l, 2), Error);
    }
}

TEST_CASE("scene validation") {
    Scene s;
    s.catalog = ClassCatalog({"a", "b"});
    SensorReading r;
    r.probs = Vec(2);
    r.probs << 0.7, 0.3;
    r.uncertainty = 0.1;
    s.readings.push_back(r);
    CHECK_NOTHROW(validate_scene(s));

    SUBCASE("no readings") {
        s.readings.clear();
        CHECK_THROWS_AS(validate_scene(s), Error);
    }
    SUBCASE("bad sum") {
        s.readings[0].probs << 0.7, 0.4;
        CHECK_THROWS_AS(validate_scene(s), Error);
    }
    SUBCASE("zero uncertainty") {
        s.readings[0].uncertainty = 0.0;
        CHECK_THROWS_AS(validate_scene(s), Error);
    }
}
