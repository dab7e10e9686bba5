#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path();
    const fs::path out = dir / ("ctxfuse_out_" + std::to_string(counter) + ".txt");
    const fs::path err = dir / ("ctxfuse_err_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string(CLI_BINARY) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return r;
}

}  // namespace

TEST_CASE("toy runs are byte-identical for a fixed seed") {
    const std::string args =
        "toy --subcase sensor-alone --seed 5 --iterations 4000 --burn-in 1000 --no-timestamps";
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    CHECK(a.out == b.out);
    CHECK(!a.out.empty());
    CHECK(a.out.find("P(TRIOZAP") != std::string::npos);
}

TEST_CASE("toy json output is machine readable") {
    const RunResult r = run_cli(
        "toy --subcase ohio-full --seed 2 --iterations 4000 --burn-in 1000 --json");
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("subcase") == "ohio-full");
    CHECK(j.at("p_triozap_blurry").get<double>() > 0.0);
    CHECK(j.contains("diagnostics"));
}

TEST_CASE("unknown subcase fails cleanly") {
    const RunResult r = run_cli("toy --subcase nowhere --iterations 500 --burn-in 100");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("unknown subcase") != std::string::npos);
}

TEST_CASE("exit codes distinguish warnings from success") {
    // an absurdly tight band cannot be satisfied: completed with warnings
    const RunResult warn = run_cli(
        "toy --subcase ohio-full --seed 1 --iterations 4000 --burn-in 1000 "
        "--geweke-threshold 1e-9");
    CHECK(warn.exit_code == 2);

    // an absurdly loose band always converges
    const RunResult ok = run_cli(
        "toy --subcase ohio-full --seed 1 --iterations 4000 --burn-in 1000 "
        "--geweke-threshold 1e9");
    CHECK(ok.exit_code == 0);
}

TEST_CASE("malformed scenario file exits with a parse diagnostic") {
    const RunResult r = run_cli(std::string("fuse ") + FIXTURE_DIR + "/bad_scenario.json");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("bn build and query on the bundled corpus") {
    const fs::path graph = fs::temp_directory_path() / "ctxfuse_graph.json";
    const RunResult build = run_cli(std::string("bn build ") + FIXTURE_DIR +
                                    "/native_corpus.json -o " + graph.string());
    REQUIRE(build.exit_code == 0);

    const RunResult query = run_cli("bn query -i " + graph.string() +
                                    " --evidence cat --query dog");
    CHECK(query.exit_code == 0);
    CHECK(std::stod(query.out) == doctest::Approx(2.0 / 3.0).epsilon(1e-5));

    const RunResult rank =
        run_cli("bn rank -i " + graph.string() + " --evidence cat --no-timestamps");
    CHECK(rank.exit_code == 0);
    CHECK(rank.out.find("dog") != std::string::npos);
    fs::remove(graph);
}

TEST_CASE("learn writes a context file with hand-checked frequencies") {
    const fs::path out = fs::temp_directory_path() / "ctxfuse_ctx.json";
    const RunResult r = run_cli(std::string("learn ") + FIXTURE_DIR +
                                "/native_corpus.json --native --name fixture -o " +
                                out.string());
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    // corpus instances: cat x3, dog x2
    CHECK(j.at("classes") == nlohmann::json({"cat", "dog"}));
    CHECK(j.at("mu")[0].get<double>() == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(j.at("mu")[1].get<double>() == doctest::Approx(0.4).epsilon(1e-12));
    fs::remove(out);

    const RunResult bad = run_cli(std::string("learn ") + FIXTURE_DIR +
                                  "/mini_coco.json --coco --supercategory nothing -o " +
                                  out.string());
    CHECK(bad.exit_code == 1);

    // filtered corpus still carries the full catalog
    const RunResult coco = run_cli(std::string("learn ") + FIXTURE_DIR +
                                   "/mini_coco.json --coco --supercategory animal -o " +
                                   out.string());
    REQUIRE(coco.exit_code == 0);
    const auto jc = nlohmann::json::parse(slurp(out));
    CHECK(jc.at("classes").size() == 3);
    fs::remove(out);
}

TEST_CASE("bad flags exit with the input-error code") {
    const RunResult r = run_cli("toy --not-a-flag");
    CHECK(r.exit_code == 1);
    const RunResult help = run_cli("--help");
    CHECK(help.exit_code == 0);
}

TEST_CASE("bench prints the report table") {
    const RunResult r = run_cli(
        "bench --subcase ohio-full --seed 1 --iterations 3000 --burn-in 500 --no-timestamps");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("us/iter") != std::string::npos);
    CHECK(r.out.find("ohio-full") != std::string::npos);
}
