#include "twy/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace twy {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

template <class T>
T get_as(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + where + "." + key + "': " + j.dump());
    }
}

GaussRat exact_scalar(const json& j, const std::string& where) {
    try {
        if (j.is_number_integer()) return GaussRat(j.get<long>());
        if (j.is_string()) return GaussRat::parse(j.get<std::string>());
    } catch (const std::invalid_argument&) {
    }
    throw ConfigError("'" + where + "' must be an exact scalar string like \"3/7\" or \"1/2+1/3*i\", got " + j.dump());
}

Roots<Cplx> floated(const Roots<GaussRat>& r) {
    Roots<Cplx> out;
    for (auto& lv : r) {
        out.emplace_back();
        for (auto& x : lv) out.back().push_back(x.to_complex());
    }
    return out;
}

template <class S>
json roots_json(const Roots<S>& r) {
    json out = json::array();
    for (auto& lv : r) {
        json l = json::array();
        for (auto& x : lv) l.push_back(to_string(x));
        out.push_back(l);
    }
    return out;
}

template <class S>
std::string canonical_text(const ModelSpec<S>& m, const Vec<S>& v) {
    Vec<S> r = v.reordered(m.quantum_leg_names());
    for (auto it = r.data.begin(); it != r.data.end();)
        it = is_zero(it->second) ? r.data.erase(it) : std::next(it);
    return serialize(r);
}

int count_roots(const std::vector<int>& m) {
    int s = 0;
    for (int x : m) s += x;
    return s;
}

Roots<GaussRat> sample_roots(const RunConfig& cfg, const std::string& stream) {
    Sampler smp(cfg.sampling, stream);
    auto xs = smp.point(size_t(count_roots(cfg.m)), generic_constraint(cfg.model));
    Roots<GaussRat> r;
    size_t p = 0;
    for (int k : cfg.m) {
        r.emplace_back();
        for (int j = 0; j < k; ++j) r.back().push_back(xs[p++]);
    }
    return r;
}

std::string param_str(const json& p, const std::string& key, const std::string& def) {
    return p.contains(key) ? get_as<std::string>(p[key], key, "parameters") : def;
}
int param_int(const json& p, const std::string& key, int def) {
    return p.contains(key) ? get_as<int>(p[key], key, "parameters") : def;
}
double param_double(const json& p, const std::string& key, double def) {
    return p.contains(key) ? get_as<double>(p[key], key, "parameters") : def;
}

const std::map<std::string, std::set<std::string>>& task_keys() {
    static const std::map<std::string, std::set<std::string>> k{
        {"verify-suite", {"suite", "samples", "dims", "corrupt_r", "tol", "m"}},
        {"build-vector", {"construction", "example", "golden"}},
        {"compare-trace", {"samples", "tol"}},
        {"check-recurrence", {"form", "samples"}},
        {"solve-bethe", {"seeds", "box", "max_iter", "tol", "form"}},
        {"eigen-check", {"seeds", "samples", "tol", "perturb"}},
    };
    return k;
}

SuiteParams suite_params(const RunConfig& cfg) {
    SuiteParams sp;
    sp.model = cfg.model;
    sp.m = cfg.m;
    sp.reading = cfg.reading;
    return sp;
}

json suite_result(const std::vector<CheckResult>& rs, bool& pass) {
    json checks = json::array();
    pass = true;
    for (auto& r : rs) {
        checks.push_back(to_json(r));
        if (r.status == Status::Fail) pass = false;
    }
    return checks;
}

void task_verify_suite(const RunConfig& cfg, const json& p, json& out, bool& pass) {
    if (!p.contains("suite")) throw ConfigError("verify-suite needs 'parameters.suite'");
    SuiteParams sp = suite_params(cfg);
    std::string suite = p["suite"].get<std::string>();
    sp.samples = param_int(p, "samples", 0);
    if (p.contains("dims")) sp.dims = get_as<std::vector<int>>(p["dims"], "dims", "parameters");
    if (p.contains("corrupt_r")) sp.corrupt_r = get_as<bool>(p["corrupt_r"], "corrupt_r", "parameters");
    if (p.contains("m")) sp.m = get_as<std::vector<int>>(p["m"], "m", "parameters");
    sp.tol = param_double(p, "tol", sp.tol);
    out["suite"] = suite;
    try {
        out["checks"] = suite_result(run_suite(suite, sp, cfg.sampling, cfg.mode), pass);
    } catch (const UnknownSuite& e) {
        throw ConfigError(std::string("unknown suite '") + e.what() + "'");
    }
}

template <class S>
Vec<S> construct(const ModelSpec<S>& m, const std::string& how, const std::string& example, const Roots<S>& roots,
                 Reading reading) {
    Monodromy<S> mono(m);
    if (how == "nested") return bethe_vector(mono, roots);
    if (how == "trace") return trace_formula_vector(mono, roots);
    if (how == "example") return example_b_vector(mono, example, roots, reading);
    throw ConfigError("construction must be nested, trace or example, got '" + how + "'");
}

void task_build_vector(const RunConfig& cfg, const json& p, json& out, bool& pass, bool regen) {
    std::string how = param_str(p, "construction", "nested");
    std::string example = param_str(p, "example", "");
    if (how == "example" && example.empty()) throw ConfigError("construction 'example' needs 'parameters.example'");
    Roots<GaussRat> roots = cfg.roots ? *cfg.roots : sample_roots(cfg, "build-vector");
    out["construction"] = how;
    if (!example.empty()) out["example"] = example;
    pass = true;
    if (cfg.mode == Mode::Exact) {
        out["roots"] = roots_json(roots);
        std::string text = canonical_text(cfg.model, construct(cfg.model, how, example, roots, cfg.reading));
        out["vector"] = text;
        if (p.contains("golden")) {
            fs::path g = fs::path(cfg.base_dir) / p["golden"].get<std::string>();
            out["golden"] = p["golden"];
            if (regen) {
                std::ofstream(g) << text;
                out["golden_status"] = "regenerated";
            } else {
                try {
                    compare_golden(text, g.string());
                    out["golden_status"] = "match";
                } catch (const GoldenMismatch& e) {
                    out["golden_status"] = "mismatch";
                    out["witness"] = e.what();
                    pass = false;
                }
            }
        }
    } else {
        auto fm = to_float(cfg.model);
        auto fr = floated(roots);
        out["roots"] = roots_json(fr);
        out["vector"] = canonical_text(fm, construct(fm, how, example, fr, cfg.reading));
        if (p.contains("golden")) out["golden_status"] = "excluded (float mode)";
    }
}

template <class S>
std::optional<std::string> trace_vs_nested(const ModelSpec<S>& m, const Roots<S>& roots, double tol) {
    Monodromy<S> mono(m);
    Vec<S> a = trace_formula_vector(mono, roots), b = bethe_vector(mono, roots);
    if constexpr (std::is_same_v<S, GaussRat>)
        return first_difference(a, b);
    else
        return approx_difference(a, b, tol);
}

void task_compare_trace(const RunConfig& cfg, const json& p, json& out, bool& pass) {
    int samples = param_int(p, "samples", 3);
    double tol = param_double(p, "tol", 1e-9);
    std::vector<Roots<GaussRat>> sets;
    if (cfg.roots)
        sets.push_back(*cfg.roots);
    else
        for (int i = 0; i < samples; ++i) sets.push_back(sample_roots(cfg, "compare-trace-" + std::to_string(i)));
    json cases = json::array();
    pass = true;
    for (auto& r : sets) {
        std::optional<std::string> d;
        if (cfg.mode == Mode::Exact)
            d = trace_vs_nested(cfg.model, r, tol);
        else
            d = trace_vs_nested(to_float(cfg.model), floated(r), tol);
        json c{{"roots", roots_json(r)}, {"status", d ? "fail" : "pass"}};
        if (d) {
            c["witness"] = *d;
            pass = false;
        }
        cases.push_back(c);
    }
    out["cases"] = cases;
}

void task_check_recurrence(const RunConfig& cfg, const json& p, json& out, bool& pass) {
    std::string form = param_str(p, "form", cfg.model.N % 2 ? "odd" : "even");
    if (form != "even" && form != "odd" && form != "gln") throw ConfigError("form must be even, odd or gln");
    SuiteParams sp = suite_params(cfg);
    sp.samples = param_int(p, "samples", 0);
    out["suite"] = "recurrence-" + form;
    out["checks"] = suite_result(run_suite("recurrence-" + form, sp, cfg.sampling, cfg.mode), pass);
}

std::vector<BetheSolution> solve(const RunConfig& cfg, const json& p) {
    SolveOptions opt;
    opt.max_iter = param_int(p, "max_iter", opt.max_iter);
    opt.tol = param_double(p, "tol", opt.tol);
    std::string form = param_str(p, "form", "explicit");
    if (form != "explicit" && form != "residue") throw ConfigError("form must be explicit or residue");
    opt.explicit_form = form == "explicit";
    auto seeds = random_seeds(cfg.m, param_int(p, "seeds", 24), cfg.sampling.seed, param_double(p, "box", 3.0));
    return solve_bethe(to_float(cfg.model), cfg.m, seeds, opt);
}

void task_solve_bethe(const RunConfig& cfg, const json& p, json& out, bool& pass) {
    auto sols = solve(cfg, p);
    json arr = json::array();
    pass = false;
    for (auto& s : sols) {
        arr.push_back(to_json(s));
        pass = pass || s.admissible;
    }
    out["solutions"] = arr;
}

void task_eigen_check(const RunConfig& cfg, const json& p, json& out, bool& pass) {
    auto fm = to_float(cfg.model);
    std::vector<Roots<Cplx>> sets;
    if (cfg.roots) {
        sets.push_back(floated(*cfg.roots));
    } else {
        json sp = json::object();
        if (p.contains("seeds")) sp["seeds"] = p["seeds"];
        for (auto& s : solve(cfg, sp))
            if (s.admissible) sets.push_back(s.roots);
    }
    double tol = param_double(p, "tol", 1e-8), perturb = param_double(p, "perturb", 0.0);
    Sampler smp(cfg.sampling, "eigen-check");
    std::vector<Cplx> vs;
    for (int i = 0; i < param_int(p, "samples", 5); ++i) vs.push_back(smp.next().to_complex());
    json cases = json::array();
    pass = !sets.empty();
    for (auto r : sets) {
        if (perturb != 0 && !r.empty() && !r[0].empty()) r[0][0] += perturb;
        auto rep = eigen_check(fm, r, vs, tol);
        json c{{"roots", roots_json(r)}, {"status", rep.pass ? "pass" : "fail"}};
        json res = json::array();
        for (double x : rep.residuals) res.push_back(x);
        c["relative_residuals"] = res;
        if (!rep.pass) c["witness"] = "v=" + to_string(rep.worst_v) + " relative residual " + std::to_string(rep.worst);
        pass = pass && rep.pass;
        cases.push_back(c);
    }
    if (sets.empty()) out["detail"] = "no admissible roots to check";
    out["cases"] = cases;
}

}  // namespace

Mode parse_mode(const std::string& s) {
    if (s == "exact") return Mode::Exact;
    if (s == "float") return Mode::Float;
    throw ConfigError("mode must be exact or float, got '" + s + "'");
}

Reading parse_reading(const std::string& s) {
    if (s == "amended") return Reading::Amended;
    if (s == "strict") return Reading::Strict;
    throw ConfigError("reading must be amended or strict, got '" + s + "'");
}

RunConfig parse_config(const json& j, const std::string& base_dir) {
    check_keys(j, {"name", "model", "excitations", "tasks", "sampling", "mode", "reading", "report"}, "");
    RunConfig c;
    c.source = j;
    c.base_dir = base_dir;
    if (!j.contains("model")) throw ConfigError("missing key 'model'");
    const json& m = j["model"];
    check_keys(m, {"sign", "N", "rho", "sites", "boundary", "twist"}, "model");
    if (m.contains("sign")) {
        const json& s = m["sign"];
        if (s == "+" || s == 1)
            c.model.sign = 1;
        else if (s == "-" || s == -1)
            c.model.sign = -1;
        else
            throw ConfigError("bad value for 'model.sign': " + s.dump());
    }
    if (!m.contains("N")) throw ConfigError("missing key 'model.N'");
    c.model.N = get_as<int>(m["N"], "N", "model");
    c.model.rho = m.contains("rho") ? exact_scalar(m["rho"], "model.rho") : GaussRat(0);
    if (m.contains("sites")) {
        if (!m["sites"].is_array()) throw ConfigError("'model.sites' must be an array");
        for (size_t i = 0; i < m["sites"].size(); ++i) {
            const json& s = m["sites"][i];
            std::string w = "model.sites[" + std::to_string(i) + "]";
            check_keys(s, {"kind", "c"}, w);
            if (s.contains("kind") && s["kind"] != "vector")
                throw ConfigError("bad value for '" + w + ".kind': only \"vector\" sites are supported");
            if (!s.contains("c")) throw ConfigError("missing key '" + w + ".c'");
            c.model.cs.push_back(exact_scalar(s["c"], w + ".c"));
        }
    }
    if (m.contains("boundary")) {
        std::string b = get_as<std::string>(m["boundary"], "boundary", "model");
        if (b == "trivial")
            c.model.boundary = BoundaryKind::Trivial;
        else if (b == "vector")
            c.model.boundary = BoundaryKind::Vector;
        else
            throw ConfigError("bad value for 'model.boundary': " + b);
    }
    if (m.contains("twist"))
        for (size_t i = 0; i < m["twist"].size(); ++i)
            c.model.eps.push_back(exact_scalar(m["twist"][i], "model.twist[" + std::to_string(i) + "]"));
    try {
        c.model.validate();
    } catch (const InvalidSpec& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    c.m.assign(size_t(c.model.n()), 0);
    if (j.contains("excitations")) {
        const json& e = j["excitations"];
        check_keys(e, {"m", "roots"}, "excitations");
        if (e.contains("m")) c.m = get_as<std::vector<int>>(e["m"], "m", "excitations");
        if (int(c.m.size()) != c.model.n())
            throw ConfigError("'excitations.m' needs " + std::to_string(c.model.n()) + " entries");
        for (int x : c.m)
            if (x < 0) throw ConfigError("'excitations.m' entries must be nonnegative");
        if (e.contains("roots")) {
            const json& r = e["roots"];
            if (!r.is_array() || r.size() != c.m.size()) throw ConfigError("'excitations.roots' needs one list per level");
            Roots<GaussRat> roots;
            for (size_t k = 0; k < r.size(); ++k) {
                if (!r[k].is_array() || int(r[k].size()) != c.m[k])
                    throw ConfigError("'excitations.roots[" + std::to_string(k) + "]' needs m[" + std::to_string(k) +
                                      "] entries");
                roots.emplace_back();
                for (size_t i = 0; i < r[k].size(); ++i)
                    roots.back().push_back(exact_scalar(r[k][i], "excitations.roots[" + std::to_string(k) + "][" +
                                                                     std::to_string(i) + "]"));
            }
            c.roots = roots;
        }
    }
    if (j.contains("sampling")) {
        const json& s = j["sampling"];
        check_keys(s, {"seed", "num_lo", "num_hi", "den_hi", "complex", "max_resamples"}, "sampling");
        if (s.contains("seed")) c.sampling.seed = get_as<uint64_t>(s["seed"], "seed", "sampling");
        if (s.contains("num_lo")) c.sampling.num_lo = get_as<long>(s["num_lo"], "num_lo", "sampling");
        if (s.contains("num_hi")) c.sampling.num_hi = get_as<long>(s["num_hi"], "num_hi", "sampling");
        if (s.contains("den_hi")) c.sampling.den_hi = get_as<long>(s["den_hi"], "den_hi", "sampling");
        if (s.contains("complex")) c.sampling.complex = get_as<bool>(s["complex"], "complex", "sampling");
        if (s.contains("max_resamples"))
            c.sampling.max_resamples = get_as<int>(s["max_resamples"], "max_resamples", "sampling");
        if (c.sampling.max_resamples < 1) throw ConfigError("'sampling.max_resamples' must be at least 1");
        if (c.sampling.num_lo > c.sampling.num_hi || c.sampling.den_hi < 1)
            throw ConfigError("'sampling' bounds are empty");
    }
    if (j.contains("mode")) c.mode = parse_mode(get_as<std::string>(j["mode"], "mode", ""));
    if (j.contains("reading")) c.reading = parse_reading(get_as<std::string>(j["reading"], "reading", ""));
    if (j.contains("report")) c.report = get_as<std::string>(j["report"], "report", "");
    if (!j.contains("tasks") || !j["tasks"].is_array()) throw ConfigError("missing array 'tasks'");
    for (size_t i = 0; i < j["tasks"].size(); ++i) {
        const json& t = j["tasks"][i];
        std::string w = "tasks[" + std::to_string(i) + "]";
        check_keys(t, {"kind", "parameters"}, w);
        if (!t.contains("kind")) throw ConfigError("missing key '" + w + ".kind'");
        Task task;
        task.kind = get_as<std::string>(t["kind"], "kind", w);
        auto it = task_keys().find(task.kind);
        if (it == task_keys().end()) throw ConfigError("bad value for '" + w + ".kind': " + task.kind);
        if (t.contains("parameters")) {
            check_keys(t["parameters"], it->second, w + ".parameters");
            task.params = t["parameters"];
        }
        c.tasks.push_back(task);
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

void apply_flags(RunConfig& cfg, const RunFlags& f) {
    if (f.seed) {
        cfg.sampling.seed = *f.seed;
        cfg.source["sampling"]["seed"] = *f.seed;
    }
    if (f.mode) {
        cfg.mode = *f.mode;
        cfg.source["mode"] = to_string(*f.mode);
    }
    if (f.reading) {
        cfg.reading = *f.reading;
        cfg.source["reading"] = *f.reading == Reading::Amended ? "amended" : "strict";
    }
    if (f.report) {
        cfg.report = *f.report;
        cfg.source["report"] = *f.report;
    }
}

void compare_golden(const std::string& serialized, const std::string& golden_path) {
    std::ifstream in(golden_path);
    if (!in) throw GoldenMismatch("golden file '" + golden_path + "' is missing");
    std::stringstream buf;
    buf << in.rdbuf();
    std::string g = buf.str();
    if (g == serialized) return;
    std::istringstream a(serialized), b(g);
    std::string la, lb;
    for (int line = 1;; ++line) {
        bool ha = bool(std::getline(a, la)), hb = bool(std::getline(b, lb));
        if (!ha && !hb) break;
        if (!ha || !hb || la != lb)
            throw GoldenMismatch("line " + std::to_string(line) + ": got '" + (ha ? la : "<eof>") + "', golden '" +
                                 (hb ? lb : "<eof>") + "'");
    }
    throw GoldenMismatch("trailing whitespace differs");
}

json to_json(const CheckResult& r) {
    json j{{"id", r.id}, {"status", to_string(r.status)}, {"mode", to_string(r.mode)}, {"samples", r.samples}};
    if (!r.witness.empty()) j["witness"] = r.witness;
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

json to_json(const BetheSolution& s) {
    return json{{"roots", roots_json(s.roots)}, {"residual", s.residual}, {"converged", s.converged},
                {"admissible", s.admissible}, {"iterations", s.iterations}, {"note", s.note}};
}

RunOutcome run_config(const RunConfig& cfg, bool regen_golden) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    json results = json::array(), times = json::array();
    bool all = true;
    for (size_t i = 0; i < cfg.tasks.size(); ++i) {
        const Task& t = cfg.tasks[i];
        auto ts = clock::now();
        json out{{"index", i}, {"kind", t.kind}};
        bool pass = false;
        try {
            if (t.kind == "verify-suite")
                task_verify_suite(cfg, t.params, out, pass);
            else if (t.kind == "build-vector")
                task_build_vector(cfg, t.params, out, pass, regen_golden);
            else if (t.kind == "compare-trace")
                task_compare_trace(cfg, t.params, out, pass);
            else if (t.kind == "check-recurrence")
                task_check_recurrence(cfg, t.params, out, pass);
            else if (t.kind == "solve-bethe")
                task_solve_bethe(cfg, t.params, out, pass);
            else if (t.kind == "eigen-check")
                task_eigen_check(cfg, t.params, out, pass);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            pass = false;
            out["error"] = e.what();
        }
        out["status"] = pass ? "pass" : "fail";
        all = all && pass;
        results.push_back(out);
        times.push_back({{"index", i}, {"seconds", std::chrono::duration<double>(clock::now() - ts).count()}});
    }
    RunOutcome o;
    o.pass = all;
    o.report = json{{"tool", {{"name", "twy"}, {"version", kToolVersion}}},
                    {"config", cfg.source},
                    {"results", results},
                    {"status", all ? "pass" : "fail"},
                    {"timing", {{"total_seconds", std::chrono::duration<double>(clock::now() - t0).count()},
                                {"tasks", times}}}};
    return o;
}

}  // namespace twy
