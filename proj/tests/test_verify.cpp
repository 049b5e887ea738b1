#include <gtest/gtest.h>

#include <map>
#include <set>

#include "twy/verify.hpp"

using namespace twy;

namespace {

GaussRat q(long a, long b = 1) { return GaussRat::frac(a, b); }

SuiteParams params(int sign, int N, std::vector<int> m) {
    SuiteParams p;
    p.model.sign = sign;
    p.model.N = N;
    p.model.rho = q(3, 7);
    p.model.cs = {q(2, 3)};
    p.m = std::move(m);
    return p;
}

// A model on which every check of the suite is meaningful.
SuiteParams representative(const std::string& suite, const std::string& check = "") {
    if (check.rfind("example-RR5", 0) == 0) return params(1, 5, {1, 1});
    if (suite == "nested-rtt") return params(1, 5, {1, 1});
    if (suite == "trace-formula") return params(1, 3, {2});
    if (suite == "recurrence-even") return params(1, 4, {1, 1});
    if (suite == "recurrence-odd") return params(1, 3, {2});
    if (suite == "recurrence-gln") return params(1, 5, {1, 2});
    if (suite == "lemma-snn" || suite == "lemma-psi-j") return params(1, 3, {2});
    if (suite == "spectrum") return params(1, 4, {1, 1});
    if (suite == "on-shell" || suite == "negative-controls") {
        auto p = params(1, 3, {1});
        p.model.eps = {q(1), q(17, 10)};
        return p;
    }
    if (suite == "block-relations") return params(1, 4, {});
    return params(1, 3, {});
}

}  // namespace

TEST(Registry, IdentitiesUniqueAndSuitesKnown) {
    std::set<std::string> seen;
    auto ids = suite_ids();
    std::set<std::string> suites(ids.begin(), ids.end());
    for (auto& e : identity_registry()) {
        EXPECT_TRUE(seen.insert(e.identity).second) << "duplicate identity " << e.identity;
        EXPECT_TRUE(suites.count(e.suite)) << e.identity << " -> unknown suite " << e.suite;
        EXPECT_FALSE(e.check.empty());
    }
    // every suite except the negative controls checks at least one identity
    for (auto& s : ids) {
        if (s == "negative-controls") continue;
        bool any = false;
        for (auto& e : identity_registry()) any = any || e.suite == s;
        EXPECT_TRUE(any) << "suite without identities: " << s;
    }
}

TEST(Registry, EveryIdentityIsExercised) {
    std::map<std::string, std::vector<CheckResult>> runs;
    for (auto& e : identity_registry()) {
        std::string key = e.suite + (e.check.rfind("example-RR5", 0) == 0 ? "/5" : "");
        if (!runs.count(key)) {
            Mode mode = (e.suite == "on-shell") ? Mode::Float : Mode::Exact;
            runs[key] = run_suite(e.suite, representative(e.suite, e.check), SampleConfig{}, mode);
        }
        bool found = false;
        for (auto& r : runs[key])
            if (r.id.rfind(e.check, 0) == 0) {
                found = true;
                EXPECT_EQ(r.status, Status::Pass) << e.identity << ": " << r.id << " " << r.witness << " " << r.detail;
            }
        EXPECT_TRUE(found) << e.identity << " has no check with prefix " << e.check << " in " << e.suite;
    }
}

TEST(Sampler, DeterministicPerSeedAndStream) {
    SampleConfig c;
    c.seed = 42;
    Sampler a(c, "x"), b(c, "x"), d(c, "y");
    auto pa = a.point(5), pb = b.point(5), pd = d.point(5);
    EXPECT_EQ(pa, pb);
    EXPECT_NE(pa, pd);
    for (auto& x : pa) EXPECT_TRUE(x.is_real());
    c.complex = true;
    Sampler z(c, "x");
    bool any_im = false;
    for (auto& x : z.point(10)) any_im = any_im || !x.is_real();
    EXPECT_TRUE(any_im);
}

TEST(Sampler, ExhaustionUnderForcedCollision) {
    SampleConfig c;
    c.num_lo = c.num_hi = 3;
    c.den_hi = 1;
    c.max_resamples = 5;
    Sampler s(c);
    auto distinct = [](const std::vector<GaussRat>& x) { return x[0] != x[1]; };
    EXPECT_THROW(s.point(2, distinct), SamplingExhausted);
    EXPECT_NO_THROW(s.point(2));
}

TEST(Suites, SuiteResultsReproducible) {
    auto p = params(1, 3, {});
    auto a = run_suite("defining-relations", p, SampleConfig{}), b = run_suite("defining-relations", p, SampleConfig{});
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].id, b[i].id);
        EXPECT_EQ(a[i].status, b[i].status);
        EXPECT_EQ(a[i].witness, b[i].witness);
    }
    for (size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].id, a[i].id);
}

TEST(Suites, CorruptedRFailsWithWitness) {
    auto p = params(1, 2, {});
    p.corrupt_r = true;
    bool failed = false;
    for (auto& r : run_suite("r-matrix", p, SampleConfig{}))
        if (r.id.rfind("ybe-k", 0) == 0 && r.status == Status::Fail) {
            failed = true;
            EXPECT_NE(r.witness.find("lhs"), std::string::npos);
        }
    EXPECT_TRUE(failed);
}

TEST(Suites, StrictReadingDiscrepanciesReported) {
    auto p = params(1, 3, {2});
    p.reading = Reading::Strict;
    bool failed = false;
    for (auto& r : run_suite("recurrence-odd", p, SampleConfig{}))
        if (r.status == Status::Fail) {
            failed = true;
            EXPECT_FALSE(r.witness.empty());
        }
    EXPECT_TRUE(failed);
    auto v = params(1, 3, {});
    v.reading = Reading::Strict;
    auto rs = run_suite("vacuum", v, SampleConfig{});
    EXPECT_FALSE(all_pass(rs));
}

TEST(Suites, UnknownSuiteThrows) { EXPECT_THROW(run_suite("nope", params(1, 2, {}), SampleConfig{}), UnknownSuite); }

TEST(Suites, FloatModeAgrees) {
    auto p = params(1, 4, {1, 1});
    EXPECT_TRUE(all_pass(run_suite("trace-formula", p, SampleConfig{}, Mode::Float)));
}
