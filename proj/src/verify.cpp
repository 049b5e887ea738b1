#include "twy/verify.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <map>
#include <set>

namespace twy {

Sampler::Sampler(const SampleConfig& cfg, const std::string& stream) : cfg_(cfg) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : stream) h = (h ^ c) * 1099511628211ull;
    rng_.seed(cfg.seed ^ h);
}

GaussRat Sampler::next() {
    std::uniform_int_distribution<long> num(cfg_.num_lo, cfg_.num_hi), den(1, std::max(1L, cfg_.den_hi));
    mpq_class re(num(rng_), den(rng_));
    mpq_class im(0);
    if (cfg_.complex) im = mpq_class(num(rng_), den(rng_));
    return GaussRat(re, im);
}

std::vector<GaussRat> Sampler::point(size_t count, const Constraint& ok) {
    for (int attempt = 0; attempt < std::max(1, cfg_.max_resamples); ++attempt) {
        std::vector<GaussRat> p;
        for (size_t i = 0; i < count; ++i) p.push_back(next());
        if (!ok || ok(p)) return p;
    }
    throw SamplingExhausted("no admissible sample after " + std::to_string(cfg_.max_resamples) + " attempts");
}

Constraint generic_constraint(const ModelSpec<GaussRat>& m) {
    return [m](const std::vector<GaussRat>& xs) {
        auto bad = [](const GaussRat& d) { return d.is_zero() || d == GaussRat(1) || d == GaussRat(-1); };
        GaussRat sh = (m.rho + GaussRat(m.sign)) * GaussRat(mpq_class(1, 2));
        for (size_t i = 0; i < xs.size(); ++i) {
            GaussRat t = tilde(xs[i], m.rho);
            if (bad(xs[i] - t)) return false;
            if ((xs[i] + sh).is_zero() || (t + sh).is_zero()) return false;
            for (auto& c : m.cs)
                if (bad(xs[i] - c) || bad(t - c)) return false;
            for (size_t j = i + 1; j < xs.size(); ++j)
                if (bad(xs[i] - xs[j]) || bad(xs[i] - tilde(xs[j], m.rho))) return false;
        }
        return true;
    };
}

bool all_pass(const std::vector<CheckResult>& rs) {
    for (auto& r : rs)
        if (r.status == Status::Fail) return false;
    return true;
}

namespace {

template <class S>
ModelSpec<S> model_as(const ModelSpec<GaussRat>& m) {
    if constexpr (std::is_same_v<S, GaussRat>)
        return m;
    else
        return to_float(m);
}

template <class S>
std::optional<std::string> differ(const Vec<S>& a, const Vec<S>& b, double tol) {
    if constexpr (std::is_same_v<S, GaussRat>)
        return first_difference(a, b);
    else
        return approx_difference(a, b, tol);
}

template <class S>
std::optional<std::string> differ_scalar(const S& a, const S& b, double tol) {
    bool eq;
    if constexpr (std::is_same_v<S, GaussRat>)
        eq = a == b;
    else
        eq = std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
    if (eq) return std::nullopt;
    return "lhs " + to_string(a) + " rhs " + to_string(b);
}

template <class S>
using Body = std::function<std::optional<std::string>(const std::vector<S>&)>;
using Job = std::function<CheckResult()>;

std::string sci(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", x);
    return b;
}

std::string point_str(const std::vector<GaussRat>& p) {
    std::string s = "(";
    for (size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + p[i].str();
    return s + ")";
}

template <class S>
CheckResult sampled(const std::string& id, const SampleConfig& cfg, Mode mode, size_t nvars, int samples,
                    const Constraint& cons, const Body<S>& body) {
    CheckResult r;
    r.id = id;
    r.mode = mode;
    Sampler smp(cfg, id);
    int retries = 0;
    try {
        while (r.samples < samples) {
            auto pt = smp.point(nvars, cons);
            std::vector<S> ps;
            for (auto& x : pt) ps.push_back(from_exact<S>(x));
            try {
                if (auto w = body(ps)) {
                    r.status = Status::Fail;
                    r.witness = "at " + point_str(pt) + ": " + *w;
                    ++r.samples;
                    return r;
                }
                ++r.samples;
            } catch (const PoleError& e) {
                if (++retries > cfg.max_resamples) throw SamplingExhausted(std::string("poles: ") + e.what());
            }
        }
        r.status = Status::Pass;
    } catch (const SamplingExhausted& e) {
        r.status = Status::Fail;
        r.detail = e.what();
    }
    return r;
}

CheckResult skipped(const std::string& id, Mode mode, const std::string& why) {
    CheckResult r;
    r.id = id;
    r.mode = mode;
    r.status = Status::Skipped;
    r.detail = why;
    return r;
}

template <class S>
std::optional<std::string> on_basis(const LegDims& ld, const std::function<bool(const Key&)>& keep,
                                    const std::function<Vec<S>(const Vec<S>&)>& lhs,
                                    const std::function<Vec<S>(const Vec<S>&)>& rhs, double tol) {
    std::vector<int> dims;
    for (auto& [l, d] : ld) dims.push_back(d);
    std::optional<std::string> out;
    for_each_index(dims, [&](const Key& k) {
        if (out || (keep && !keep(k))) return;
        Vec<S> e = Vec<S>::basis(ld, k);
        if (auto d = differ(lhs(e), rhs(e), tol)) {
            std::string ks;
            for (size_t i = 0; i < k.size(); ++i) ks += (i ? "," : "") + std::to_string(k[i]);
            out = "basis (" + ks + ") " + *d;
        }
    });
    return out;
}

std::vector<CheckResult> run_jobs(std::vector<Job> jobs) {
    std::vector<std::future<CheckResult>> fs;
    for (auto& j : jobs) fs.push_back(std::async(std::launch::async, j));
    std::vector<CheckResult> out;
    for (auto& f : fs) out.push_back(f.get());
    std::sort(out.begin(), out.end(), [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
    return out;
}

Constraint distinct_constraint() {
    return [](const std::vector<GaussRat>& xs) {
        for (size_t i = 0; i < xs.size(); ++i)
            for (size_t j = i + 1; j < xs.size(); ++j)
                if (xs[i] == xs[j]) return false;
        return true;
    };
}

int total_roots(const std::vector<int>& m) {
    int t = 0;
    for (int x : m) t += x;
    return t;
}

template <class S>
Roots<S> split_roots(const std::vector<int>& m, const std::vector<S>& xs, size_t offset = 0) {
    Roots<S> r(m.size());
    size_t p = offset;
    for (size_t k = 0; k < m.size(); ++k)
        for (int j = 0; j < m[k]; ++j) r[k].push_back(xs.at(p++));
    return r;
}

// ---- r-matrix ----

template <class S>
Vec<S> r_action(const Vec<S>& v, const std::string& a, const std::string& b, const S& u, bool corrupt) {
    if (!corrupt) return act_r(v, a, b, u);
    int k = v.dim(a);
    S c = -inv(u);
    return local(v, {a, b}, {{a, k}, {b, k}}, [&](const Key& x, Emit<S>& e) {
        e({x[0], x[1]}, S(1));
        e({x[1], x[0]}, (x[0] == 1 && x[1] == 2) ? -c : c);
    });
}

template <class S>
std::vector<Job> r_matrix_jobs(const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    std::vector<Job> jobs;
    int samples = p.samples ? p.samples : 20;
    bool bad = p.corrupt_r;
    double tol = p.tol;
    for (int k : p.dims) {
        LegDims ld{{"x1", k}, {"x2", k}, {"x3", k}};
        jobs.push_back([=] {
            return sampled<S>("ybe-k" + std::to_string(k), cfg, mode, 3, samples, distinct_constraint(),
                              [=](const std::vector<S>& x) {
                                  const S &u = x[0], &v = x[1], &z = x[2];
                                  return on_basis<S>(
                                      ld, {},
                                      [&](const Vec<S>& e) {
                                          return r_action(r_action(r_action(e, "x2", "x3", v - z, bad), "x1", "x3", u - z, bad),
                                                          "x1", "x2", u - v, bad);
                                      },
                                      [&](const Vec<S>& e) {
                                          return r_action(r_action(r_action(e, "x1", "x2", u - v, bad), "x1", "x3", u - z, bad),
                                                          "x2", "x3", v - z, bad);
                                      },
                                      tol);
                              });
        });
        jobs.push_back([=] {
            return sampled<S>("tybe-k" + std::to_string(k), cfg, mode, 3, samples, distinct_constraint(),
                              [=](const std::vector<S>& x) {
                                  const S &u = x[0], &v = x[1], &z = x[2];
                                  return on_basis<S>(
                                      ld, {},
                                      [&](const Vec<S>& e) {
                                          return r_action(act_rq(act_rq(e, "x1", "x3", u - z), "x2", "x3", v - z), "x1", "x2",
                                                          u - v, bad);
                                      },
                                      [&](const Vec<S>& e) {
                                          return act_rq(act_rq(r_action(e, "x1", "x2", u - v, bad), "x2", "x3", v - z), "x1",
                                                        "x3", u - z);
                                      },
                                      tol);
                              });
        });
    }
    int kmax = std::max(4, p.dims.empty() ? 4 : *std::max_element(p.dims.begin(), p.dims.end()));
    for (int k = 1; k <= kmax; ++k)
        jobs.push_back([=] {
            CheckResult r;
            r.id = "q-squared-k" + std::to_string(k);
            r.mode = mode;
            r.samples = 1;
            LegDims ld{{"x1", k}, {"x2", k}};
            auto w = on_basis<S>(
                ld, {}, [](const Vec<S>& e) { return act_q(act_q(e, "x1", "x2"), "x1", "x2"); },
                [k](const Vec<S>& e) { return act_q(e, "x1", "x2").scaled(S(k)); }, tol);
            r.status = w ? Status::Fail : Status::Pass;
            if (w) r.witness = *w;
            return r;
        });
    return jobs;
}

// ---- defining relations ----

template <class S>
LegDims with_quantum(const ModelSpec<S>& m, LegDims aux) {
    for (auto& q : m.quantum_legs()) aux.push_back(q);
    return aux;
}

template <class S>
std::vector<Job> defining_jobs(const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto m = model_as<S>(p.model);
    int K = 2 * m.nh();
    int samples = p.samples ? p.samples : 10;
    auto cons = generic_constraint(p.model);
    double tol = p.tol;
    std::vector<Job> jobs;
    jobs.push_back([=] {
        Monodromy<S> mono(m);
        auto th = theta_signs(m.sign, K);
        LegDims ld = with_quantum(m, {{"x1", K}, {"x2", K}});
        return sampled<S>("re", cfg, mode, 2, samples, cons, [&](const std::vector<S>& x) {
            const S &u = x[0], &v = x[1];
            S vt = tilde(v, m.rho);
            return on_basis<S>(
                ld, {},
                [&](const Vec<S>& e) {
                    Vec<S> w = mono.act(e, "x2", v);
                    w = act_rq(w, "x1", "x2", vt - u, th);
                    w = mono.act(w, "x1", u);
                    return act_r(w, "x1", "x2", u - v);
                },
                [&](const Vec<S>& e) {
                    Vec<S> w = act_r(e, "x1", "x2", u - v);
                    w = mono.act(w, "x1", u);
                    w = act_rq(w, "x1", "x2", vt - u, th);
                    return mono.act(w, "x2", v);
                },
                tol);
        });
    });
    jobs.push_back([=] {
        Monodromy<S> mono(m);
        auto th = theta_signs(m.sign, K);
        LegDims ld = m.quantum_legs();
        return sampled<S>("symm", cfg, mode, 1, samples, cons, [&](const std::vector<S>& x) -> std::optional<std::string> {
            const S& u = x[0];
            S ut = tilde(u, m.rho);
            S c = S(m.sign) * inv(u - ut);
            for (int a = 1; a <= K; ++a)
                for (int b = 1; b <= K; ++b) {
                    int ab = K - a + 1, bb = K - b + 1;
                    auto w = on_basis<S>(
                        ld, {},
                        [&](const Vec<S>& e) { return mono.s2(bb, ab, ut, e).scaled(S(th[ab] * th[bb])); },
                        [&](const Vec<S>& e) {
                            Vec<S> su = mono.s2(a, b, u, e);
                            Vec<S> r = su.scaled(S(1) + c);
                            r.axpy(-c, mono.s2(a, b, ut, e));
                            return r;
                        },
                        tol);
                    if (w) return "entry (" + std::to_string(a) + "," + std::to_string(b) + ") " + *w;
                }
            return std::nullopt;
        });
    });
    return jobs;
}

// ---- block relations ----

template <class S>
std::vector<Job> block_jobs(const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto m = model_as<S>(p.model);
    int nh = m.nh();
    int samples = p.samples ? p.samples : 5;
    auto cons = generic_constraint(p.model);
    double tol = p.tol;
    LegDims ld = with_quantum(m, {{"a", nh}, {"b", nh}});
    std::vector<Job> jobs;
    using F = std::function<Vec<S>(const Vec<S>&)>;
    // builds (lhs, rhs) for u, v
    using Pair = std::function<std::pair<F, F>(const Monodromy<S>&, const S&, const S&)>;
    auto rel = [&](const std::string& id, Pair mk) {
        jobs.push_back([=] {
            Monodromy<S> mono(m);
            return sampled<S>(id, cfg, mode, 2, samples, cons, [&](const std::vector<S>& x) {
                auto [l, r] = mk(mono, x[0], x[1]);
                return on_basis<S>(ld, {}, l, r, tol);
            });
        });
    };
    const S sg(m.sign);
    const S rho = m.rho;
    auto X = [](const Monodromy<S>& mo, Block w, const Vec<S>& v, const char* leg, const S& u) {
        return mo.act_block(w, v, leg, u);
    };
    rel("ab", [=](const Monodromy<S>& mo, const S& u, const S& v) -> std::pair<F, F> {
        S vt = tilde(v, rho);
        F l = [=, &mo](const Vec<S>& e) { return X(mo, Block::A, X(mo, Block::B, e, "a", u), "b", v); };
        F r = [=, &mo](const Vec<S>& e) {
            Vec<S> t1 = act_r(X(mo, Block::B, act_rq(X(mo, Block::A, e, "b", v), "a", "b", vt - u), "a", u), "a", "b", u - v);
            Vec<S> t2 = act_p(X(mo, Block::B, act_rq(X(mo, Block::A, e, "b", u), "a", "b", vt - u), "a", v), "a", "b");
            Vec<S> t3 = X(mo, Block::B, act_q(X(mo, Block::D, e, "a", u), "a", "b"), "b", v);
            t1.axpy(inv(u - v), t2);
            t1.axpy(-sg * inv(u - vt), t3);
            return t1;
        };
        return {l, r};
    });
    rel("bb", [=](const Monodromy<S>& mo, const S& u, const S& v) -> std::pair<F, F> {
        S vt = tilde(v, rho);
        F l = [=, &mo](const Vec<S>& e) {
            return act_r(X(mo, Block::B, act_rq(X(mo, Block::B, e, "b", v), "a", "b", vt - u), "a", u), "a", "b", u - v);
        };
        F r = [=, &mo](const Vec<S>& e) {
            return X(mo, Block::B, act_rq(X(mo, Block::B, act_r(e, "a", "b", u - v), "a", u), "a", "b", vt - u), "b", v);
        };
        return {l, r};
    });
    rel("aa", [=](const Monodromy<S>& mo, const S& u, const S& v) -> std::pair<F, F> {
        S vt = tilde(v, rho);
        F l = [=, &mo](const Vec<S>& e) {
            Vec<S> a = act_r(X(mo, Block::A, X(mo, Block::A, e, "b", v), "a", u), "a", "b", u - v);
            a -= X(mo, Block::A, X(mo, Block::A, act_r(e, "a", "b", u - v), "a", u), "b", v);
            return a;
        };
        F r = [=, &mo](const Vec<S>& e) {
            Vec<S> a = act_r(X(mo, Block::B, act_q(X(mo, Block::C, e, "b", v), "a", "b"), "a", u), "a", "b", u - v);
            a -= X(mo, Block::B, act_q(X(mo, Block::C, act_r(e, "a", "b", u - v), "a", u), "a", "b"), "b", v);
            return a.scaled(-sg * inv(u - vt));
        };
        return {l, r};
    });
    rel("ca", [=](const Monodromy<S>& mo, const S& u, const S& v) -> std::pair<F, F> {
        S vt = tilde(v, rho);
        F l = [=, &mo](const Vec<S>& e) { return X(mo, Block::C, X(mo, Block::A, e, "b", v), "a", u); };
        F r = [=, &mo](const Vec<S>& e) {
            Vec<S> t1 = X(mo, Block::A, act_rq(X(mo, Block::C, act_r(e, "a", "b", u - v), "a", u), "a", "b", vt - u), "b", v);
            Vec<S> t2 = act_p(X(mo, Block::A, act_rq(X(mo, Block::C, e, "b", v), "a", "b", vt - u), "a", u), "a", "b");
            Vec<S> t3 = X(mo, Block::D, act_q(X(mo, Block::C, e, "b", v), "a", "b"), "a", u);
            t1.axpy(inv(u - v), t2);
            t1.axpy(-sg * inv(u - vt), t3);
            return t1;
        };
        return {l, r};
    });
    auto symm_block = [=](const std::string& id, bool isB) {
        return [=] {
            Monodromy<S> mono(m);
            LegDims q = m.quantum_legs();
            return sampled<S>(id, cfg, mode, 1, samples, cons, [&](const std::vector<S>& x) -> std::optional<std::string> {
                const S& u = x[0];
                S ut = tilde(u, m.rho);
                S c = sg * inv(u - ut);
                for (int a = 1; a <= nh; ++a)
                    for (int b = 1; b <= nh; ++b) {
                        int ab = nh - a + 1, bb = nh - b + 1;
                        auto w = on_basis<S>(
                            q, {},
                            [&](const Vec<S>& e) {
                                return isB ? mono.s2(bb, nh + ab, ut, e).scaled(sg) : mono.s2(nh + bb, nh + ab, ut, e);
                            },
                            [&](const Vec<S>& e) {
                                int col = isB ? nh + b : b;
                                Vec<S> r = mono.s2(a, col, u, e).scaled(S(1) + c);
                                r.axpy(-c, mono.s2(a, col, ut, e));
                                return r;
                            },
                            tol);
                        if (w) return "entry (" + std::to_string(a) + "," + std::to_string(b) + ") " + *w;
                    }
                return std::nullopt;
            });
        };
    };
    jobs.push_back(symm_block("symmd", false));
    jobs.push_back(symm_block("symmb", true));
    return jobs;
}

// ---- vacuum ----

template <class S>
std::vector<Job> vacuum_jobs(const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto m = model_as<S>(p.model);
    int samples = p.samples ? p.samples : 5;
    auto cons = generic_constraint(p.model);
    double tol = p.tol;
    Reading reading = p.reading;
    std::vector<Job> jobs;
    jobs.push_back([=] {
        Monodromy<S> mono(m);
        Vec<S> eta = build_quantum_space(m).eta;
        return sampled<S>("vacuum-lower", cfg, mode, 1, samples, cons, [&](const std::vector<S>& x) -> std::optional<std::string> {
            for (int i = 1; i <= m.N; ++i)
                for (int j = 1; j < i; ++j) {
                    Vec<S> w = mono.s(i, j, x[0], eta);
                    if (auto d = differ(w, Vec<S>(w.layout()), tol))
                        return "s_" + std::to_string(i) + std::to_string(j) + " " + *d;
                }
            return std::nullopt;
        });
    });
    jobs.push_back([=] {
        Monodromy<S> mono(m);
        Vec<S> eta = build_quantum_space(m).eta;
        return sampled<S>("vacuum-diagonal", cfg, mode, 1, samples, cons, [&](const std::vector<S>& x) -> std::optional<std::string> {
            for (int i = 1; i < m.N; ++i)
                if (auto d = differ(mono.s(i, i, x[0], eta), eta.scaled(mu_weight(m, i, x[0], reading)), tol))
                    return "s_" + std::to_string(i) + std::to_string(i) + " " + *d;
            return std::nullopt;
        });
    });
    // s_NN(u) eta from the symmetry relation at the (1,1) entry, evaluated at ~u.
    jobs.push_back([=] {
        Monodromy<S> mono(m);
        Vec<S> eta = build_quantum_space(m).eta;
        return sampled<S>("vacuum-last", cfg, mode, 1, samples, cons, [&](const std::vector<S>& x) -> std::optional<std::string> {
            S u = x[0], ut = tilde(u, m.rho);
            S mu1u = mu_weight(m, 1, ut, reading), mu1t = mu_weight(m, 1, u, reading);
            S val = mu1u + S(m.sign) * (mu1u - mu1t) * inv(ut - u);
            if (auto d = differ(mono.s(m.N, m.N, u, eta), eta.scaled(val), tol)) return "s_NN " + *d;
            return std::nullopt;
        });
    });
    return jobs;
}

// ---- nested RTT ----

// Exact basis of the level-r vacuum subspace of the quantum space (kernel of the kill operators).
std::vector<Vec<GaussRat>> vacuum_subspace(const ModelSpec<GaussRat>& m, int r, const SampleConfig& cfg) {
    Monodromy<GaussRat> mono(m);
    int n = m.n(), nh = m.nh();
    std::vector<std::pair<int, int>> kill;
    for (int i = n + 1; i <= m.N; ++i)
        for (int j = 1; j <= nh; ++j)
            if (i > j) kill.emplace_back(i, j);
    for (int q = 1; q <= r; ++q)
        for (int i = 1; i < n - q + 1; ++i) kill.emplace_back(n - q + 1, i);
    LegDims ld = m.quantum_legs();
    std::vector<int> dims;
    for (auto& [l, d] : ld) dims.push_back(d);
    std::vector<Key> cols;
    for_each_index(dims, [&](const Key& k) { cols.push_back(k); });
    size_t D = cols.size();
    std::map<Key, size_t> colpos;
    for (size_t i = 0; i < D; ++i) colpos[cols[i]] = i;
    std::vector<std::vector<GaussRat>> rows;
    Sampler smp(cfg, "vacuum-subspace");
    auto cons = generic_constraint(m);
    std::vector<GaussRat> pts = smp.point(3, cons);
    for (auto& u : pts)
        for (auto [i, j] : kill) {
            std::map<Key, std::vector<GaussRat>> out;
            for (size_t c = 0; c < D; ++c) {
                Vec<GaussRat> w = mono.s(i, j, u, Vec<GaussRat>::basis(ld, cols[c])).reordered(m.quantum_leg_names());
                for (auto& [k, x] : w.data) {
                    auto& row = out[k];
                    if (row.empty()) row.assign(D, GaussRat(0));
                    row[c] = x;
                }
            }
            for (auto& [k, row] : out) rows.push_back(row);
        }
    // reduced row echelon form
    std::vector<int> pivcol;
    size_t rank = 0;
    for (size_t c = 0; c < D && rank < rows.size(); ++c) {
        size_t p = rank;
        while (p < rows.size() && rows[p][c].is_zero()) ++p;
        if (p == rows.size()) continue;
        std::swap(rows[p], rows[rank]);
        GaussRat ip = inv(rows[rank][c]);
        for (auto& x : rows[rank]) x *= ip;
        for (size_t q = 0; q < rows.size(); ++q) {
            if (q == rank || rows[q][c].is_zero()) continue;
            GaussRat f = rows[q][c];
            for (size_t k = c; k < D; ++k) rows[q][k] -= f * rows[rank][k];
        }
        pivcol.push_back(int(c));
        ++rank;
    }
    std::vector<Vec<GaussRat>> basis;
    for (size_t c = 0; c < D; ++c) {
        if (std::find(pivcol.begin(), pivcol.end(), int(c)) != pivcol.end()) continue;
        Vec<GaussRat> v(ld);
        v.data[cols[c]] = GaussRat(1);
        for (size_t q = 0; q < rank; ++q)
            if (!rows[q][c].is_zero()) v.data[cols[pivcol[q]]] = -rows[q][c];
        basis.push_back(v);
    }
    return basis;
}

template <class S>
Vec<S> convert_vec(const Vec<GaussRat>& v) {
    if constexpr (std::is_same_v<S, GaussRat>) {
        return v;
    } else {
        Vec<S> r;
        r.legs = v.legs;
        r.dims = v.dims;
        for (auto& [k, x] : v.data) r.data[k] = x.to_complex();
        return r;
    }
}

struct FreeLeg {
    std::string leg;
    int dim;
    std::vector<int> values;
};

// All tensor products of the quantum vectors with the listed auxiliary basis choices.
template <class S>
std::vector<Vec<S>> product_vectors(const std::vector<Vec<S>>& quantum, const std::vector<FreeLeg>& aux) {
    std::vector<Vec<S>> out = quantum;
    for (auto& f : aux) {
        std::vector<Vec<S>> next;
        for (auto& v : out)
            for (int x : f.values) next.push_back(add_leg(v, f.leg, f.dim, x));
        out = std::move(next);
    }
    return out;
}

template <class S>
std::optional<std::string> on_vectors(const std::vector<Vec<S>>& vecs, const std::function<Vec<S>(const Vec<S>&)>& lhs,
                                      const std::function<Vec<S>(const Vec<S>&)>& rhs, double tol) {
    for (size_t i = 0; i < vecs.size(); ++i)
        if (auto d = differ(lhs(vecs[i]), rhs(vecs[i]), tol)) return "vector #" + std::to_string(i) + " " + *d;
    return std::nullopt;
}

template <class S>
std::vector<Job> rtt_jobs(const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto m = model_as<S>(p.model);
    int n = m.n(), nh = m.nh();
    std::vector<Job> jobs;
    if (n < 2 || int(p.m.size()) != n) {
        jobs.push_back([=] { return skipped("rtt", mode, "nested matrices need n >= 2 and one m per level"); });
        return jobs;
    }
    int samples = p.samples ? p.samples : 3;
    auto cons = generic_constraint(p.model);
    double tol = p.tol;
    std::vector<int> mv = p.m;
    size_t nr = total_roots(mv);
    bool odd = nh != n;
    auto range = [](int lo, int hi) {
        std::vector<int> r;
        for (int i = lo; i <= hi; ++i) r.push_back(i);
        return r;
    };
    // T^{(k)} acts in W_{a^k} (x) (L^{(k)})^0, and T^{(n)} in L^{(n-1)} (odd: its reduced subspace)
    auto space = [=](int k) {
        std::vector<Vec<S>> q;
        for (auto& v : vacuum_subspace(p.model, n - k, cfg)) q.push_back(convert_vec<S>(v));
        std::vector<FreeLeg> aux{{"A", k, range(1, k)}, {"B", k, range(1, k)}};
        for (int j = 1; j < n; ++j)
            for (int i = 1; i <= mv[j - 1]; ++i) {
                if (j < k) continue;
                aux.push_back({leg_a(j, i), j, j == k ? range(1, j) : std::vector<int>{1}});
            }
        for (int i = 1; i <= mv[n - 1]; ++i) {
            std::vector<int> vals = k < n ? std::vector<int>{1 + nh - n} : odd ? range(2, nh) : range(1, nh);
            aux.push_back({leg_ad(i), nh, vals});
        }
        for (int i = 1; i <= mv[n - 1]; ++i) {
            std::vector<int> vals = (k < n || odd) ? std::vector<int>{1} : range(1, nh);
            aux.push_back({leg_add(i), nh, vals});
        }
        return product_vectors(q, aux);
    };
    auto make = [=](const std::string& id, int k, int variant) {
        return [=] {
            Monodromy<S> mono(m);
            auto vecs = space(k);
            return sampled<S>(id, cfg, mode, nr + 2, samples, cons, [&](const std::vector<S>& x) {
                Roots<S> roots = split_roots(mv, x);
                const S &v = x[nr], &w = x[nr + 1];
                Nested<S> red(mono, nested_spec(m, roots, false));
                Nested<S> full(mono, nested_spec(m, roots, true));
                if (variant == 2)
                    return on_vectors<S>(
                        vecs, [&](const Vec<S>& e) { return red.act(k, e, "A", v); },
                        [&](const Vec<S>& e) { return full.act(k, e, "A", v); }, tol);
                const Nested<S>& T = variant == 1 ? full : red;
                return on_vectors<S>(
                    vecs, [&](const Vec<S>& e) { return act_r(T.act(k, T.act(k, e, "B", w), "A", v), "A", "B", v - w); },
                    [&](const Vec<S>& e) { return T.act(k, T.act(k, act_r(e, "A", "B", v - w), "A", v), "B", w); }, tol);
            });
        };
    };
    for (int k = 2; k <= n; ++k) jobs.push_back(make("rtt-level-" + std::to_string(k), k, 0));
    if (odd) {
        jobs.push_back(make("rtt-full-top", n, 1));
        jobs.push_back(make("rtt-reduced-equals-full", n, 2));
    }
    return jobs;
}

// ---- Bethe vectors ----

template <class S>
std::vector<Job> trace_jobs(const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto m = model_as<S>(p.model);
    int n = m.n();
    std::vector<Job> jobs;
    int samples = p.samples ? p.samples : 3;
    auto cons = generic_constraint(p.model);
    double tol = p.tol;
    Reading reading = p.reading;
    std::vector<int> mv = p.m;
    if (int(mv.size()) == n) {
        size_t nr = total_roots(mv);
        jobs.push_back([=] {
            Monodromy<S> mono(m);
            return sampled<S>("trace-formula", cfg, mode, nr, samples, cons, [&](const std::vector<S>& x) {
                Roots<S> r = split_roots(mv, x);
                return differ(trace_formula_vector(mono, r), bethe_vector(mono, r), tol);
            });
        });
        for (int k = 1; k <= n; ++k) {
            if (mv[k - 1] < 2) continue;
            jobs.push_back([=] {
                Monodromy<S> mono(m);
                return sampled<S>("bv-symmetry-level-" + std::to_string(k), cfg, mode, nr, samples, cons,
                                  [&](const std::vector<S>& x) {
                                      Roots<S> r = split_roots(mv, x), r2 = r;
                                      std::reverse(r2[k - 1].begin(), r2[k - 1].end());
                                      return differ(bethe_vector(mono, r), bethe_vector(mono, r2), tol);
                                  });
            });
        }
    }
    auto example = [=](const std::string& which, std::vector<int> em) {
        return [=]() -> CheckResult {
            std::string id = "example-" + which;
            if (which == "B3x2" && reading == Reading::Strict)
                return skipped(id, mode, "printed formula refers to a third root; not well-typed");
            Monodromy<S> mono(m);
            return sampled<S>(id, cfg, mode, total_roots(em), samples, cons, [&](const std::vector<S>& x) {
                Roots<S> r = split_roots(em, x);
                Vec<S> ex = example_b_vector(mono, which, r, reading);
                if (auto d = differ(bethe_vector(mono, r), ex, tol)) return std::optional<std::string>("nested " + *d);
                if (auto d = differ(trace_formula_vector(mono, r), ex, tol)) return std::optional<std::string>("trace " + *d);
                return std::optional<std::string>{};
            });
        };
    };
    if (m.N == 3) {
        jobs.push_back(example("B3", {1}));
        jobs.push_back(example("B3x2", {2}));
    }
    if (m.N == 4) jobs.push_back(example("B4", {1, 1}));
    if (m.N == 5) jobs.push_back(example("B5", {1, 1}));
    if (jobs.empty()) jobs.push_back([=] { return skipped("trace-formula", mode, "no excitation numbers given"); });
    return jobs;
}

template <class S>
std::vector<Job> recurrence_jobs(const std::string& suite, const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto m = model_as<S>(p.model);
    int n = m.n(), nh = m.nh();
    std::vector<Job> jobs;
    std::vector<int> mv = p.m;
    bool even = nh == n;
    if (int(mv.size()) != n || mv[n - 1] < 1) {
        jobs.push_back([=] { return skipped(suite, mode, "needs m_n >= 1"); });
        return jobs;
    }
    if ((suite == "recurrence-even") != even && suite != "recurrence-gln") {
        jobs.push_back([=] { return skipped(suite, mode, "wrong parity of N"); });
        return jobs;
    }
    int samples = p.samples ? p.samples : 2;
    auto cons = generic_constraint(p.model);
    double tol = p.tol;
    Reading reading = p.reading;
    size_t nr = total_roots(mv);
    if (suite == "recurrence-gln") {
        for (int depth : {1, 2}) {
            int spaces = even ? 2 * mv[n - 1] : mv[n - 1];
            if (spaces < depth) continue;
            jobs.push_back([=] {
                Monodromy<S> mono(m);
                return sampled<S>("gln-depth-" + std::to_string(depth), cfg, mode, nr, samples, cons,
                                  [&](const std::vector<S>& x) {
                                      auto g = gln_from_roots(m, split_roots(mv, x));
                                      return differ(rr_gln_rhs(mono, g, depth), gln_vector(mono, g), tol);
                                  });
            });
        }
        return jobs;
    }
    for (int j = 1; j <= mv[n - 1]; ++j) {
        std::string tag = (even ? "rr-even-j" : "rr-odd-j") + std::to_string(j);
        jobs.push_back([=] {
            Monodromy<S> mono(m);
            return sampled<S>(tag, cfg, mode, nr, samples, cons, [&](const std::vector<S>& x) {
                Roots<S> r = split_roots(mv, x);
                Vec<S> rhs = even ? rr_even_rhs(mono, r, j, reading) : rr_odd_rhs(mono, r, j, reading);
                return differ(rhs, bethe_vector(mono, r), tol);
            });
        });
        std::string ex = m.N == 3 ? "RR3" : m.N == 4 ? "RR4" : m.N == 5 ? "RR5" : "";
        if (ex.empty()) continue;
        jobs.push_back([=] {
            Monodromy<S> mono(m);
            std::string id = "example-" + ex + "-j" + std::to_string(j);
            return sampled<S>(id, cfg, mode, nr, samples, cons, [&](const std::vector<S>& x) {
                Roots<S> r = split_roots(mv, x);
                Vec<S> rhs = even ? rr_even_rhs(mono, r, j, reading) : rr_odd_rhs(mono, r, j, reading);
                return differ(rhs, rr_example(mono, ex, r, j), tol);
            });
        });
    }
    return jobs;
}

template <class S>
std::vector<Job> lemma_jobs(const std::string& suite, const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto m = model_as<S>(p.model);
    int n = m.n(), nh = m.nh();
    std::vector<Job> jobs;
    std::vector<int> mv = p.m;
    if (nh == n || int(mv.size()) != n) {
        jobs.push_back([=] { return skipped(suite, mode, "lemma is stated for odd N"); });
        return jobs;
    }
    int samples = p.samples ? p.samples : 2;
    auto cons = generic_constraint(p.model);
    double tol = p.tol;
    size_t nr = total_roots(mv);
    if (suite == "lemma-snn") {
        jobs.push_back([=] {
            Monodromy<S> mono(m);
            return sampled<S>("snn", cfg, mode, nr + 1, samples, cons, [&](const std::vector<S>& x) {
                Roots<S> r = split_roots(mv, x);
                return differ(snn_lhs(mono, r, x[nr]), snn_rhs(mono, r, x[nr]), tol);
            });
        });
        return jobs;
    }
    for (int j = 1; j <= mv[n - 1]; ++j)
        jobs.push_back([=] {
            Monodromy<S> mono(m);
            return sampled<S>("psi-j" + std::to_string(j), cfg, mode, nr, samples, cons, [&](const std::vector<S>& x) {
                Roots<S> r = split_roots(mv, x);
                return differ(psi_j_vector(mono, r, j), psi_j_rhs(mono, r, j), tol);
            });
        });
    if (jobs.empty()) jobs.push_back([=] { return skipped(suite, mode, "m_n = 0"); });
    return jobs;
}

// ---- spectrum ----

template <class S>
std::vector<Job> spectrum_jobs(const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto m = model_as<S>(p.model);
    int n = m.n();
    std::vector<Job> jobs;
    int samples = p.samples ? p.samples : 5;
    auto cons = generic_constraint(p.model);
    double tol = p.tol;
    jobs.push_back([=] {
        Monodromy<S> mono(m);
        Vec<S> eta = build_quantum_space(m).eta;
        Roots<S> none(n);
        return sampled<S>("tau-vacuum", cfg, mode, 1, samples, cons, [&](const std::vector<S>& x) {
            return differ(transfer_apply(mono, x[0], eta), eta.scaled(eigenvalue_lambda(m, x[0], none)), tol);
        });
    });
    std::vector<int> mv = p.m;
    if (int(mv.size()) != n || total_roots(mv) == 0) return jobs;
    size_t nr = total_roots(mv);
    jobs.push_back([=] {
        return sampled<S>("bethe-equation-forms", cfg, mode, nr, samples, cons, [&](const std::vector<S>& x) -> std::optional<std::string> {
            Roots<S> r = split_roots(mv, x);
            for (int k = 1; k <= n; ++k)
                for (int j = 1; j <= mv[k - 1]; ++j) {
                    S a(0), b(0);
                    for (auto& t : residue_terms(m, r, k, j)) (t.k == k && !t.tilded ? a : b) += t.value;
                    auto [l, rh] = bethe_explicit_sides(m, r, k, j);
                    if (auto d = differ_scalar(l * inv(rh), -a * inv(b), tol))
                        return "(k,j)=(" + std::to_string(k) + "," + std::to_string(j) + ") " + *d;
                }
            return std::nullopt;
        });
    });
    jobs.push_back([=] {
        return sampled<S>("lambda-symmetry", cfg, mode, nr + 1, samples, cons, [&](const std::vector<S>& x) -> std::optional<std::string> {
            Roots<S> r = split_roots(mv, x), r2 = r;
            for (auto& lv : r2) std::reverse(lv.begin(), lv.end());
            return differ_scalar(eigenvalue_lambda(m, x[nr], r), eigenvalue_lambda(m, x[nr], r2), tol);
        });
    });
    return jobs;
}

// Float-only: solve, verify on shell, and check both equation forms at the solution.
std::vector<Job> on_shell_jobs(const SuiteParams& p, const SampleConfig& cfg, Mode, bool negative) {
    std::vector<Job> jobs;
    auto m = to_float(p.model);
    std::vector<int> mv = p.m;
    int seeds = p.samples ? p.samples : 24;
    jobs.push_back([=] {
        CheckResult r;
        r.id = negative ? "eigen-offshell-fails" : "on-shell";
        r.mode = Mode::Float;
        auto sols = solve_bethe(m, mv, random_seeds(mv, seeds, cfg.seed));
        std::vector<const BetheSolution*> good;
        for (auto& s : sols)
            if (s.admissible && s.residual < 1e-12) good.push_back(&s);
        r.samples = int(sols.size());
        if (good.empty()) {
            r.status = Status::Fail;
            r.detail = std::to_string(sols.size()) + " converged, none admissible";
            return r;
        }
        Sampler smp(cfg, r.id);
        std::vector<Cplx> vs;
        for (int i = 0; i < 5; ++i) vs.push_back(smp.next().to_complex());
        bool all_ok = true, any_off_fail = false;
        std::string detail, witness;
        for (auto* best : good) {
            Roots<Cplx> roots = best->roots;
            if (negative) roots[0][0] += 0.1;
            auto rep = eigen_check(m, roots, vs, 1e-8);
            double res = inf_norm(bethe_residuals(m, best->roots));
            std::string rs;
            for (auto& lv : best->roots)
                for (auto& x : lv) rs += (rs.empty() ? "" : ", ") + to_string(x);
            if (!detail.empty()) detail += "; ";
            detail += "roots (" + rs + ") explicit-form " + sci(best->residual) + " residue-form " +
                      sci(res) + " eigen residual " + sci(rep.worst);
            bool ok = rep.pass && res < 1e-9;
            if (!ok && witness.empty())
                witness = "roots (" + rs + ") v=" + to_string(rep.worst_v) + " relative residual " + sci(rep.worst);
            all_ok = all_ok && ok;
            any_off_fail = any_off_fail || !rep.pass;
        }
        r.detail = detail;
        if (negative)
            r.status = any_off_fail ? Status::Pass : Status::Fail;
        else
            r.status = all_ok ? Status::Pass : Status::Fail;
        r.witness = witness;
        return r;
    });
    return jobs;
}

template <class S>
std::vector<Job> jobs_for(const std::string& suite, const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    if (suite == "r-matrix") return r_matrix_jobs<S>(p, cfg, mode);
    if (suite == "defining-relations") return defining_jobs<S>(p, cfg, mode);
    if (suite == "block-relations") return block_jobs<S>(p, cfg, mode);
    if (suite == "vacuum") return vacuum_jobs<S>(p, cfg, mode);
    if (suite == "nested-rtt") return rtt_jobs<S>(p, cfg, mode);
    if (suite == "trace-formula") return trace_jobs<S>(p, cfg, mode);
    if (suite == "recurrence-even" || suite == "recurrence-odd" || suite == "recurrence-gln")
        return recurrence_jobs<S>(suite, p, cfg, mode);
    if (suite == "lemma-snn" || suite == "lemma-psi-j") return lemma_jobs<S>(suite, p, cfg, mode);
    if (suite == "spectrum") return spectrum_jobs<S>(p, cfg, mode);
    if (suite == "on-shell") return on_shell_jobs(p, cfg, mode, false);
    if (suite == "negative-controls") {
        SuiteParams q = p;
        q.corrupt_r = true;
        q.dims = {2};
        auto js = r_matrix_jobs<S>(q, cfg, mode);
        std::vector<Job> out;
        out.push_back([js] {
            CheckResult c = js.front()();
            c.id = "ybe-corrupted-fails";
            c.status = c.status == Status::Fail && !c.witness.empty() ? Status::Pass : Status::Fail;
            return c;
        });
        auto neg = on_shell_jobs(p, cfg, mode, true);
        out.insert(out.end(), neg.begin(), neg.end());
        return out;
    }
    throw UnknownSuite(suite);
}

}  // namespace

std::vector<std::string> suite_ids() {
    return {"r-matrix",        "defining-relations", "block-relations", "vacuum",    "nested-rtt",
            "trace-formula",   "recurrence-even",    "recurrence-odd",  "recurrence-gln", "lemma-snn",
            "lemma-psi-j",     "spectrum",           "on-shell",        "negative-controls"};
}

const std::vector<IdentityEntry>& identity_registry() {
    static const std::vector<IdentityEntry> reg{
        {"YBE", "r-matrix", "ybe-k"},
        {"tYBE", "r-matrix", "tybe-k"},
        {"Q-idempotent", "r-matrix", "q-squared-k"},
        {"RE", "defining-relations", "re"},
        {"symm", "defining-relations", "symm"},
        {"AB", "block-relations", "ab"},
        {"BB", "block-relations", "bb"},
        {"AA", "block-relations", "aa"},
        {"CA", "block-relations", "ca"},
        {"symmD", "block-relations", "symmd"},
        {"symmB", "block-relations", "symmb"},
        {"mu", "vacuum", "vacuum-diagonal"},
        {"YBE-k", "nested-rtt", "rtt-level-"},
        {"tf", "trace-formula", "trace-formula"},
        {"B-exam", "trace-formula", "example-B"},
        {"BV-symm", "trace-formula", "bv-symmetry-level-"},
        {"RR-even", "recurrence-even", "rr-even-j"},
        {"RR4", "recurrence-even", "example-RR4-j"},
        {"RR-odd", "recurrence-odd", "rr-odd-j"},
        {"RR3", "recurrence-odd", "example-RR3-j"},
        {"RR5", "recurrence-odd", "example-RR5-j"},
        {"RR1-gln", "recurrence-gln", "gln-depth-1"},
        {"RR2-gln", "recurrence-gln", "gln-depth-2"},
        {"snn", "lemma-snn", "snn"},
        {"Psi-j", "lemma-psi-j", "psi-j"},
        {"eig-vacuum", "spectrum", "tau-vacuum"},
        {"BE1-BE2", "spectrum", "bethe-equation-forms"},
        {"Lambda-symm", "spectrum", "lambda-symmetry"},
        {"eig", "on-shell", "on-shell"},
    };
    return reg;
}

std::vector<CheckResult> run_suite(const std::string& suite, const SuiteParams& p, const SampleConfig& cfg, Mode mode) {
    auto ids = suite_ids();
    if (std::find(ids.begin(), ids.end(), suite) == ids.end()) throw UnknownSuite(suite);
    p.model.validate();
    if (mode == Mode::Exact) return run_jobs(jobs_for<GaussRat>(suite, p, cfg, mode));
    return run_jobs(jobs_for<Cplx>(suite, p, cfg, mode));
}

}  // namespace twy
