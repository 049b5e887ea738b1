#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "twy/bethe.hpp"
#include "twy/monodromy.hpp"
#include "twy/repspace.hpp"
#include "twy/spectrum.hpp"

namespace twy {

struct SamplingExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownSuite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SampleConfig {
    uint64_t seed = 1;
    long num_lo = -20, num_hi = 20;
    long den_hi = 7;
    bool complex = false;
    int max_resamples = 200;
};

enum class Mode { Exact, Float };
enum class Status { Pass, Fail, Skipped };

inline std::string to_string(Status s) {
    return s == Status::Pass ? "pass" : s == Status::Fail ? "fail" : "skipped";
}
inline std::string to_string(Mode m) { return m == Mode::Exact ? "exact" : "float"; }

struct CheckResult {
    std::string id;
    Status status = Status::Skipped;
    std::string witness;
    Mode mode = Mode::Exact;
    std::string detail;
    int samples = 0;
};

// Predicate on a sampled tuple: true if acceptable.
using Constraint = std::function<bool(const std::vector<GaussRat>&)>;

class Sampler {
public:
    Sampler(const SampleConfig& cfg, const std::string& stream = "");
    GaussRat next();
    std::vector<GaussRat> point(size_t count, const Constraint& ok = {});

private:
    SampleConfig cfg_;
    std::mt19937_64 rng_;
};

// x_i - x_j, x_i - ~x_j, x_i - c, ~x_i - c outside {0, +-1}; 2x + rho and the boundary shift nonzero.
Constraint generic_constraint(const ModelSpec<GaussRat>& m);

struct SuiteParams {
    ModelSpec<GaussRat> model;
    std::vector<int> m;  // excitation numbers per level
    int samples = 0;     // 0 selects the suite default
    Reading reading = Reading::Amended;
    std::vector<int> dims{2, 3};  // r-matrix suite
    bool corrupt_r = false;       // flip one sign of R (negative control)
    double tol = 1e-9;            // float-mode comparison tolerance
};

std::vector<std::string> suite_ids();
std::vector<CheckResult> run_suite(const std::string& suite, const SuiteParams& p, const SampleConfig& cfg,
                                   Mode mode = Mode::Exact);

// Identity registry: each identity id belongs to exactly one suite.
struct IdentityEntry {
    std::string identity;
    std::string suite;
    std::string check;  // prefix of the check ids that exercise it
};
const std::vector<IdentityEntry>& identity_registry();

bool all_pass(const std::vector<CheckResult>& rs);

}  // namespace twy
