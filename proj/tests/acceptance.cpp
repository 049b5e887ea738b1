// Acceptance run: one pass/fail line per criterion, with its runtime against the budget.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "twy/runner.hpp"

using namespace twy;

namespace {

GaussRat q(long a, long b = 1) { return GaussRat::frac(a, b); }

SuiteParams params(int sign, int N, std::vector<int> m = {}, BoundaryKind b = BoundaryKind::Trivial, int ell = 1) {
    SuiteParams p;
    p.model.sign = sign;
    p.model.N = N;
    p.model.rho = q(3, 7);
    p.model.cs = {q(2, 3), q(-1, 4), q(5, 6)};
    p.model.cs.resize(ell);
    p.model.boundary = b;
    p.m = std::move(m);
    return p;
}

// One site holds too little weight for the multi-level vectors (N=4, m=(2,2) vanishes there).
SuiteParams chain2(int sign, int N, std::vector<int> m = {}) { return params(sign, N, std::move(m), BoundaryKind::Trivial, 2); }

std::vector<SuiteParams> criterion2_models() {
    std::vector<SuiteParams> r;
    for (auto [s, N] : std::vector<std::pair<int, int>>{{1, 2}, {-1, 2}, {1, 3}, {1, 4}, {-1, 4}, {1, 5}})
        r.push_back(params(s, N));
    r.push_back(params(1, 4, {}, BoundaryKind::Vector));
    return r;
}

std::string label(const SuiteParams& p) {
    std::string s = std::string(p.model.sign > 0 ? "+" : "-") + std::to_string(p.model.N);
    if (p.model.cs.size() != 1) s += " l=" + std::to_string(p.model.cs.size());
    if (p.model.boundary == BoundaryKind::Vector) s += "v";
    if (!p.m.empty()) {
        s += " m=(";
        for (size_t i = 0; i < p.m.size(); ++i) s += (i ? "," : "") + std::to_string(p.m[i]);
        s += ")";
    }
    return s;
}

struct Tally {
    bool pass = true;
    int checks = 0;
    std::string first_failure;
    std::vector<std::string> notes;

    void add(const std::string& where, const std::vector<CheckResult>& rs, const std::vector<std::string>& need = {}) {
        for (auto& r : rs) {
            if (r.status == Status::Skipped) continue;
            ++checks;
            if (r.status == Status::Fail && pass) {
                pass = false;
                first_failure = where + " " + r.id + ": " + r.witness + " " + r.detail;
            }
        }
        for (auto& n : need) {
            bool found = false;
            for (auto& r : rs) found = found || (r.id.rfind(n, 0) == 0 && r.status != Status::Skipped);
            if (!found && pass) {
                pass = false;
                first_failure = where + ": no check " + n;
            }
        }
    }
};

Tally suite_over(const std::string& suite, const std::vector<SuiteParams>& ps, int samples,
                 const std::vector<std::string>& need = {}, Mode mode = Mode::Exact) {
    Tally t;
    for (auto p : ps) {
        p.samples = samples;
        t.add(suite + " " + label(p), run_suite(suite, p, SampleConfig{}, mode), need);
    }
    return t;
}

Tally criterion1() {
    auto p = params(1, 2);
    p.dims = {2, 3};
    return suite_over("r-matrix", {p}, 20, {"ybe-k2", "ybe-k3", "tybe-k2", "tybe-k3", "q-squared-k4"});
}

Tally criterion2() { return suite_over("defining-relations", criterion2_models(), 10, {"re", "symm"}); }

Tally criterion3() {
    return suite_over("block-relations", {chain2(1, 3), chain2(1, 4), chain2(-1, 4)}, 5,
                      {"ab", "bb", "aa", "ca", "symmd", "symmb"});
}

Tally criterion4() {
    return suite_over("vacuum", criterion2_models(), 5, {"vacuum-lower", "vacuum-diagonal", "vacuum-last"});
}

Tally criterion5() {
    Tally t = suite_over("nested-rtt", {chain2(1, 4, {1, 1})}, 3, {"rtt-level-2"});
    Tally o = suite_over("nested-rtt", {chain2(1, 5, {1, 1})}, 3, {"rtt-level-2", "rtt-full-top", "rtt-reduced-equals-full"});
    if (!o.pass && t.pass) {
        t.pass = false;
        t.first_failure = o.first_failure;
    }
    t.checks += o.checks;
    return t;
}

Tally criterion6() {
    std::vector<SuiteParams> ps{chain2(1, 3, {1}), chain2(1, 3, {2}), chain2(1, 4, {1, 1}), chain2(1, 4, {2, 1}),
                                chain2(1, 5, {1, 1})};
    Tally t = suite_over("trace-formula", ps, 3, {"trace-formula"});
    for (auto name : {"golden-B3.json", "golden-B4.json", "golden-B5.json"}) {
        auto out = run_config(load_config(std::string(TWY_SOURCE_DIR) + "/configs/" + name));
        ++t.checks;
        if (!out.pass && t.pass) {
            t.pass = false;
            t.first_failure = std::string(name) + " golden mismatch";
        }
    }
    return t;
}

Tally criterion7() {
    Tally t = suite_over("recurrence-even", {chain2(1, 4, {1, 1}), chain2(1, 4, {2, 2})}, 2, {"rr-even-j1", "example-RR4"});
    Tally o = suite_over("recurrence-odd", {chain2(1, 3, {2}), chain2(1, 5, {1, 1}), chain2(1, 5, {1, 2})}, 2,
                         {"rr-odd-j1"});
    if (!o.pass && t.pass) {
        t.pass = false;
        t.first_failure = o.first_failure;
    }
    t.checks += o.checks;
    // strict reading: report, do not gate
    for (auto p : {chain2(1, 3, {2}), chain2(1, 5, {1, 2}), chain2(1, 4, {2, 2})}) {
        p.reading = Reading::Strict;
        p.samples = 2;
        std::string suite = p.model.N % 2 ? "recurrence-odd" : "recurrence-even";
        int fails = 0;
        std::string w;
        for (auto& r : run_suite(suite, p, SampleConfig{}))
            if (r.status == Status::Fail) {
                if (!fails) w = r.id + " " + r.witness;
                ++fails;
            }
        t.notes.push_back("strict " + label(p) + ": " + std::to_string(fails) + " discrepancies" +
                          (fails ? " (first: " + w + ")" : ""));
    }
    return t;
}

Tally criterion8() {
    std::vector<SuiteParams> ps{chain2(1, 3, {1}), chain2(1, 3, {2}), chain2(1, 5, {0, 2}), chain2(1, 5, {1, 2})};
    Tally t = suite_over("lemma-snn", ps, 2, {"snn"});
    Tally o = suite_over("lemma-psi-j", ps, 2, {"psi-j"});
    if (!o.pass && t.pass) {
        t.pass = false;
        t.first_failure = o.first_failure;
    }
    t.checks += o.checks;
    t.notes.push_back("N=5, m=(0,2): the Bethe vector vanishes identically, so both sides are 0");
    return t;
}

Tally criterion9() {
    auto yp = params(1, 3, {1});
    yp.model.eps = {q(1), q(17, 10)};
    auto ym = params(-1, 2, {1}, BoundaryKind::Vector);
    Tally t = suite_over("on-shell", {yp, ym}, 24, {"on-shell"}, Mode::Float);
    Tally v = suite_over("spectrum", criterion2_models(), 5, {"tau-vacuum"});
    if (!v.pass && t.pass) {
        t.pass = false;
        t.first_failure = v.first_failure;
    }
    t.checks += v.checks;
    t.notes.push_back("Y-(gl2) runs with the vector boundary; with the trivial boundary every fixed point is degenerate");
    return t;
}

Tally criterion10() {
    Tally t;
    auto p = params(1, 2);
    p.corrupt_r = true;
    bool ybe_failed = false;
    for (auto& r : run_suite("r-matrix", p, SampleConfig{}))
        if (r.id.rfind("ybe-k", 0) == 0 && r.status == Status::Fail && !r.witness.empty()) ybe_failed = true;
    ++t.checks;
    auto n = params(1, 3, {1});
    n.model.eps = {q(1), q(17, 10)};
    bool offshell = false;
    for (auto& r : run_suite("negative-controls", n, SampleConfig{}, Mode::Float))
        if (r.id == "eigen-offshell-fails" && r.status == Status::Pass && !r.witness.empty()) offshell = true;
    ++t.checks;
    t.pass = ybe_failed && offshell;
    if (!ybe_failed) t.first_failure = "corrupted R passed YBE";
    if (!offshell) t.first_failure += " off-shell roots passed eigen_check";
    return t;
}

}  // namespace

int main() {
    struct Crit {
        int id;
        const char* name;
        double budget;
        std::function<Tally()> run;
    };
    std::vector<Crit> crits{{1, "R-matrix suite", 5, criterion1},
                            {2, "defining relations", 120, criterion2},
                            {3, "block relations", 120, criterion3},
                            {4, "vacuum suite", 30, criterion4},
                            {5, "nested RTT", 120, criterion5},
                            {6, "trace formula + goldens", 300, criterion6},
                            {7, "recurrence relations", 600, criterion7},
                            {8, "lemmas snn / Psi-j", 300, criterion8},
                            {9, "on-shell spectrum", 60, criterion9},
                            {10, "negative controls", 30, criterion10}};
    bool all = true;
    for (auto& c : crits) {
        auto t0 = std::chrono::steady_clock::now();
        Tally t;
        try {
            t = c.run();
        } catch (const std::exception& e) {
            t.pass = false;
            t.first_failure = std::string("exception: ") + e.what();
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool ok = t.pass && dt < c.budget;
        all = all && ok;
        std::printf("criterion %2d %-26s %s  %4d checks  %7.2fs (budget %.0fs)\n", c.id, c.name, ok ? "PASS" : "FAIL",
                    t.checks, dt, c.budget);
        if (!t.pass) std::printf("    first failure: %s\n", t.first_failure.c_str());
        for (auto& n : t.notes) std::printf("    note: %s\n", n.c_str());
    }
    std::printf("%s\n", all ? "all criteria pass" : "some criteria FAIL");
    return all ? 0 : 1;
}
