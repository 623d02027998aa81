#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cosym/cli.hpp"
#include "test_support.hpp"

using namespace cosym;

namespace {

std::string minimal_manifest = R"({
  "chart": {"coordinates": ["x1", "x2", "t", "z1"], "time": "t"},
  "omega": [{"indices": ["x1", "x2"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}],
  "eta": [{"indices": ["t"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}]
})";

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/cosym_test_") + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("parse_manifest: minimal manifest gets the documented defaults") {
    Manifest m = parse_manifest_text(minimal_manifest);
    CHECK(m.chart.dim() == 4);
    CHECK(m.chart.time_index() == 2);
    CHECK(m.verification.radius == rat(1, 2));
    CHECK(m.verification.grid == 5);
    CHECK(m.verification.steps == 64);
    CHECK(m.verification.tol == 1e-5);
    CHECK(m.omega.degree() == 2);
    CHECK(m.eta.degree() == 1);
}

TEST_CASE("parse_manifest: rational coefficients are exact") {
    std::string text = R"({
      "chart": {"coordinates": ["x", "y", "t"], "time": "t"},
      "omega": [{"indices": ["x", "y"], "coeff_terms": [{"monomial": {}, "coeff": "1/3"}]}],
      "eta": [{"indices": ["t"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}]
    })";
    Manifest m = parse_manifest_text(text);
    CHECK(m.omega.coefficient({0, 1}).constant_value() == rat(1, 3));
}

TEST_CASE("parse_manifest rejections") {
    // duplicate coordinate label
    std::string dup = R"({"chart": {"coordinates": ["x", "x"]}, "omega": [], "eta": []})";
    CHECK_THROWS_AS(parse_manifest_text(dup), error);

    // unknown top-level field
    std::string unknown = R"({
      "chart": {"coordinates": ["x", "y", "t"], "time": "t"},
      "omega": [], "eta": [], "extra": 1
    })";
    CHECK_THROWS_AS(parse_manifest_text(unknown), error);

    // float coefficient
    std::string floaty = R"({
      "chart": {"coordinates": ["x", "y", "t"], "time": "t"},
      "omega": [{"indices": ["x", "y"], "coeff_terms": [{"monomial": {}, "coeff": 0.5}]}],
      "eta": []
    })";
    CHECK_THROWS_AS(parse_manifest_text(floaty), error);

    // malformed JSON
    CHECK_THROWS_AS(parse_manifest_text("{"), error);

    // unknown label inside a monomial (also how b-dependent tables die)
    std::string badlabel = R"({
      "chart": {"coordinates": ["x", "y", "t"], "time": "t"},
      "omega": [{"indices": ["x", "y"], "coeff_terms": [{"monomial": {"b1": 1}, "coeff": "1"}]}],
      "eta": []
    })";
    CHECK_THROWS_AS(parse_manifest_text(badlabel), error);
}

TEST_CASE("manifest round-trip preserves the forms") {
    Manifest m = parse_manifest_text(minimal_manifest);
    json j = manifest_to_json(m);
    Manifest m2 = parse_manifest(j);
    CHECK(m2.omega == m.omega);
    CHECK(m2.eta == m.eta);
    CHECK(m2.chart == m.chart);
    CHECK(manifest_to_json(m2) == j);
}

TEST_CASE("execute_check classifies the Darboux manifest") {
    Manifest m = parse_manifest_text(minimal_manifest);
    cli::Report r = cli::execute_check(m);
    CHECK(r.status == "pass");
    CHECK(r.values["p"] == 1);
    CHECK(r.values["k"] == 1);
    CHECK(r.values["reeb_direction"] == "d/dt");
    CHECK(r.exit_code() == 0);
}

TEST_CASE("execute_check fails on a non-closed omega") {
    std::string text = R"({
      "chart": {"coordinates": ["x", "y", "t"], "time": "t"},
      "omega": [{"indices": ["x", "y"], "coeff_terms": [{"monomial": {"t": 1}, "coeff": "1"}]}],
      "eta": [{"indices": ["t"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}]
    })";
    cli::Report r = cli::execute_check(parse_manifest_text(text));
    CHECK(r.status == "fail");
    CHECK(r.exit_code() == 1);
}

TEST_CASE("execute_darboux certifies the congruence") {
    QMat f(4, 4);
    f(0, 1) = 1;
    f(1, 0) = -1;
    f(0, 2) = 1;
    f(2, 0) = -1;
    cli::Report r = cli::execute_darboux(f, std::nullopt);
    CHECK(r.status == "pass");
    CHECK(r.values["p"] == 1);
    CHECK(r.values["kernel_dim"] == 2);
}

TEST_CASE("embed then verify-embed round-trips through the manifest format") {
    Manifest m = parse_manifest_text(minimal_manifest);
    std::string out = "/tmp/cosym_test_thickened.json";
    cli::Report r1 = cli::execute_embed(m, std::nullopt, out);
    CHECK(r1.status == "pass");
    REQUIRE(r1.artifacts.size() == 1);

    Manifest thick = load_manifest(out);
    REQUIRE(thick.thickening.has_value());
    CHECK(thick.chart.dim() == 5);

    cli::Report r2 = cli::execute_verify_embed(m, thick);
    CHECK(r2.status == "pass");
}

TEST_CASE("execute_moser runs the documented pair") {
    std::string flat = R"({
      "chart": {"coordinates": ["x", "y", "t"], "time": "t"},
      "omega": [{"indices": ["x", "y"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}],
      "eta": [{"indices": ["t"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}],
      "submanifold": ["x"],
      "verification": {"grid": 3, "steps": 16}
    })";
    std::string deformed = R"({
      "chart": {"coordinates": ["x", "y", "t"], "time": "t"},
      "omega": [{"indices": ["x", "y"], "coeff_terms": [
        {"monomial": {}, "coeff": "1"}, {"monomial": {"x": 2}, "coeff": "1"}]}],
      "eta": [{"indices": ["t"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]},
              {"indices": ["x"], "coeff_terms": [{"monomial": {"x": 1}, "coeff": "1"}]}],
      "submanifold": ["x"]
    })";
    cli::Report r =
        cli::execute_moser(parse_manifest_text(flat), parse_manifest_text(deformed));
    CHECK(r.status == "pass");
}

TEST_CASE("structured reports are byte-identical across runs") {
    Manifest m = parse_manifest_text(minimal_manifest);
    cli::Report r1 = cli::execute_check(m);
    cli::Report r2 = cli::execute_check(m);
    CHECK(cli::emit_structured(r1) == cli::emit_structured(r2));

    std::string out = "/tmp/cosym_test_thick2.json";
    cli::Report e1 = cli::execute_embed(m, std::nullopt, out);
    cli::Report e2 = cli::execute_embed(m, std::nullopt, out);
    CHECK(cli::emit_structured(e1) == cli::emit_structured(e2));
}

#ifdef COSYM_CLI_BIN
namespace {

int run_binary(const std::string& args) {
    std::string cmd = std::string(COSYM_CLI_BIN) + " " + args + " > /dev/null 2> /dev/null";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli process exit codes: 0 pass, 1 fail, 2 parse error") {
    std::string good = write_temp("good.json", minimal_manifest);
    CHECK(run_binary("check " + good) == 0);
    CHECK(run_binary("check " + good + " --human") == 0);

    std::string failing = write_temp("fail.json", R"({
      "chart": {"coordinates": ["x", "y", "t"], "time": "t"},
      "omega": [{"indices": ["x", "y"], "coeff_terms": [{"monomial": {"t": 1}, "coeff": "1"}]}],
      "eta": [{"indices": ["t"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}]
    })");
    CHECK(run_binary("check " + failing) == 1);

    std::string broken = write_temp("broken.json", "{ not json");
    CHECK(run_binary("check " + broken) == 2);

    CHECK(run_binary("no-such-command") == 2);

    // module error: embed on a non-Darboux manifest (no time coordinate)
    std::string no_time = write_temp("notime.json", R"({
      "chart": {"coordinates": ["x", "y", "z"]},
      "omega": [{"indices": ["x", "y"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}],
      "eta": [{"indices": ["z"], "coeff_terms": [{"monomial": {}, "coeff": "1"}]}]
    })");
    CHECK(run_binary("embed " + no_time + " -o /tmp/cosym_test_unused.json") == 1);
}

TEST_CASE("cli process round-trip: embed then verify-embed") {
    std::string good = write_temp("roundtrip.json", minimal_manifest);
    std::string out = "/tmp/cosym_test_roundtrip_thick.json";
    CHECK(run_binary("embed " + good + " -o " + out) == 0);
    CHECK(run_binary("verify-embed " + good + " " + out) == 0);
}

TEST_CASE("cli process output is byte-identical across runs") {
    std::string good = write_temp("determinism.json", minimal_manifest);
    auto capture = [&](const std::string& sink) {
        std::string cmd = std::string(COSYM_CLI_BIN) + " check " + good + " > " + sink +
                          " 2> /dev/null";
        REQUIRE(std::system(cmd.c_str()) == 0);
        std::ifstream in(sink);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string first = capture("/tmp/cosym_test_det1.out");
    std::string second = capture("/tmp/cosym_test_det2.out");
    CHECK(first == second);
    CHECK(!first.empty());
}
#endif
