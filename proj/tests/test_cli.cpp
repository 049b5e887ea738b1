#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "twy/runner.hpp"

using namespace twy;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base() {
    return json::parse(R"({
      "model": {"sign": "+", "N": 3, "rho": "3/7", "sites": [{"kind": "vector", "c": "2/3"}], "boundary": "trivial"},
      "excitations": {"m": [1], "roots": [["5/3"]]},
      "tasks": [{"kind": "verify-suite", "parameters": {"suite": "vacuum"}}]
    })");
}

std::string config_error(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string corpus(const std::string& name) { return std::string(TWY_SOURCE_DIR) + "/configs/" + name; }

}  // namespace

TEST(Config, ParsesModel) {
    auto c = parse_config(base());
    EXPECT_EQ(c.model.N, 3);
    EXPECT_EQ(c.model.rho, GaussRat::frac(3, 7));
    ASSERT_TRUE(c.roots.has_value());
    EXPECT_EQ((*c.roots)[0][0], GaussRat::frac(5, 3));
    EXPECT_EQ(c.tasks.size(), 1u);
}

TEST(Config, UnknownKeysNamed) {
    auto j = base();
    j["model"]["boundry"] = "trivial";
    EXPECT_NE(config_error(j).find("model.boundry"), std::string::npos);
    j = base();
    j["tasks"][0]["parameters"]["sweet"] = 1;
    EXPECT_NE(config_error(j).find("tasks[0].parameters.sweet"), std::string::npos);
    j = base();
    j["extra"] = true;
    EXPECT_NE(config_error(j).find("'extra'"), std::string::npos);
}

TEST(Config, TypedValidation) {
    auto j = base();
    j["model"]["rho"] = 0.5;
    EXPECT_NE(config_error(j).find("model.rho"), std::string::npos);
    j = base();
    j["excitations"]["m"] = {1, 2};
    EXPECT_NE(config_error(j).find("excitations.m"), std::string::npos);
    j = base();
    j["model"]["sign"] = "-";
    EXPECT_NE(config_error(j).find("symplectic"), std::string::npos);
    j = base();
    j["tasks"][0]["kind"] = "dance";
    EXPECT_NE(config_error(j).find("tasks[0].kind"), std::string::npos);
    j = base();
    j["mode"] = "fuzzy";
    EXPECT_FALSE(config_error(j).empty());
    j = base();
    j["tasks"][0]["parameters"]["suite"] = "nope";
    EXPECT_THROW(run_config(parse_config(j)), ConfigError);
}

TEST(Config, FlagsOverride) {
    auto c = parse_config(base());
    RunFlags f;
    f.seed = 99;
    f.mode = Mode::Float;
    f.reading = Reading::Strict;
    apply_flags(c, f);
    EXPECT_EQ(c.sampling.seed, 99u);
    EXPECT_EQ(c.mode, Mode::Float);
    EXPECT_EQ(c.source["reading"], "strict");
}

TEST(Run, DeterministicReport) {
    auto c = load_config(corpus("gl4-recurrence.json"));
    auto a = run_config(c), b = run_config(c);
    EXPECT_TRUE(a.pass);
    a.report.erase("timing");
    b.report.erase("timing");
    EXPECT_EQ(a.report.dump(), b.report.dump());
    EXPECT_EQ(a.report["tool"]["version"], kToolVersion);
}

TEST(Run, CorruptedRFails) {
    auto out = run_config(load_config(corpus("negative-corrupted-r.json")));
    EXPECT_FALSE(out.pass);
    bool witness = false;
    for (auto& ch : out.report["results"][0]["checks"])
        if (ch["status"] == "fail" && ch.contains("witness")) witness = true;
    EXPECT_TRUE(witness);
}

TEST(Golden, BundledGoldensMatch) {
    for (auto name : {"golden-B3.json", "golden-B3x2.json", "golden-B4.json", "golden-B5.json"}) {
        auto out = run_config(load_config(corpus(name)));
        EXPECT_TRUE(out.pass) << name << " " << out.report.dump();
        for (auto& r : out.report["results"]) EXPECT_EQ(r["golden_status"], "match") << name;
    }
}

TEST(Golden, RegenerateAndMismatch) {
    fs::path dir = fs::temp_directory_path() / "twy-golden-test";
    fs::create_directories(dir);
    auto j = base();
    j["tasks"] = json::parse(R"([{"kind": "build-vector", "parameters": {"construction": "nested", "golden": "g.txt"}}])");
    auto c = parse_config(j, dir.string());
    fs::remove(dir / "g.txt");
    EXPECT_FALSE(run_config(c).pass);
    EXPECT_TRUE(run_config(c, true).pass);
    EXPECT_TRUE(run_config(c).pass);
    std::ofstream(dir / "g.txt") << "legs s1:3 bd:1\n2,1 0\n";
    auto bad = run_config(c);
    EXPECT_FALSE(bad.pass);
    EXPECT_NE(bad.report["results"][0]["witness"].get<std::string>().find("line 2"), std::string::npos);
    c.mode = Mode::Float;
    auto fl = run_config(c);
    EXPECT_TRUE(fl.pass);
    EXPECT_EQ(fl.report["results"][0]["golden_status"], "excluded (float mode)");
}

TEST(Golden, CompareNamesFirstDiff) {
    fs::path g = fs::temp_directory_path() / "twy-golden-cmp.txt";
    std::ofstream(g) << "a\nb\nc\n";
    EXPECT_NO_THROW(compare_golden("a\nb\nc\n", g.string()));
    try {
        compare_golden("a\nx\nc\n", g.string());
        FAIL();
    } catch (const GoldenMismatch& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_THROW(compare_golden("a", (g.string() + ".missing")), GoldenMismatch);
}
