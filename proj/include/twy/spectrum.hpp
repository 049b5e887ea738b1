#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "twy/bethe.hpp"

namespace twy {

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ToleranceExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// tau(v) = tr M S(v); the middle index of odd N is counted once.
template <class S>
Vec<S> transfer_apply(const Monodromy<S>& mono, const S& v, const Vec<S>& state) {
    const auto& m = mono.spec();
    Vec<S> acc(state.legs.empty() ? m.quantum_legs() : state.layout());
    for (int i = 1; i <= m.nh(); ++i) {
        Vec<S> t = mono.s(i, i, v, state);
        if (m.bar(i) != i) t += mono.s(m.bar(i), m.bar(i), v, state);
        acc.axpy(m.twist(i), t);
    }
    return acc;
}

template <class S>
S halving(const ModelSpec<S>& m, int k) {
    return (m.nh() != m.n() && k == m.nh()) ? inv(S(2)) : S(1);
}

template <class S>
S eigenvalue_lambda(const ModelSpec<S>& m, const S& v, const Roots<S>& roots) {
    S tot(0);
    S vt = tilde(v, m.rho);
    for (int k = 1; k <= m.nh(); ++k) {
        S c = halving(m, k) * m.twist(k);
        tot += c * (p_factor(v, m.rho, m.sign) * gamma(m, k, v, roots) + p_factor(vt, m.rho, m.sign) * gamma(m, k, vt, roots));
    }
    return tot;
}

// ---- residues by linear-factor cancellation ----

namespace detail {

// c * (z - a); `tag` marks a = u^{(k)}_j (tilde = false) or a = ~u^{(k)}_j (tilde = true).
template <class S>
struct Lin {
    S c, a;
    int k = 0, j = 0;
    bool tilde = false;
};

template <class S>
struct LinProd {
    S scalar{1};
    std::vector<Lin<S>> num, den;
};

template <class S>
void push_f(LinProd<S>& p, int sign, const std::vector<S>& xs, int k, bool tl, const S& rho) {
    for (size_t i = 0; i < xs.size(); ++i) {
        S a = tl ? tilde(xs[i], rho) : xs[i];
        p.num.push_back({S(1), a - S(sign), 0, 0, false});
        p.den.push_back({S(1), a, k, int(i) + 1, tl});
    }
}

template <class S>
LinProd<S> gamma_factors(const ModelSpec<S>& m, int k, const Roots<S>& roots) {
    int n = m.n(), nh = m.nh();
    LinProd<S> p;
    auto lev = [&](int l) { return level(roots, l); };
    int muk = k;
    if (k < nh) {
        push_f(p, -1, lev(k - 1), k - 1, false, m.rho);
        push_f(p, 1, lev(k), k, false, m.rho);
    } else if (nh == n) {
        push_f(p, -1, lev(n - 1), n - 1, false, m.rho);
        push_f(p, 1, lev(n), n, false, m.rho);
        push_f(p, 1, lev(n), n, true, m.rho);
    } else {
        push_f(p, -1, lev(n), n, false, m.rho);
        push_f(p, 1, lev(n), n, true, m.rho);
        muk = nh;
    }
    S sh = (m.rho + S(m.sign)) * inv(S(2));
    p.num.push_back({S(1), S(boundary_weight(m, muk)) - sh});
    p.den.push_back({S(1), -sh});
    S lam(muk == 1 ? 1 : 0);
    for (auto& c : m.cs) {
        p.num.push_back({S(1), c + lam});
        p.den.push_back({S(1), c});
    }
    return p;
}

}  // namespace detail

template <class S>
struct ResidueTerm {
    int k;        // Gamma index
    bool tilded;  // evaluated at ~v
    S value;
};

// Contributions to Res_{v -> u^{(k)}_j} Lambda(v).
template <class S>
std::vector<ResidueTerm<S>> residue_terms(const ModelSpec<S>& m, const Roots<S>& roots, int k, int j) {
    if (k < 1 || k > m.n() || j < 1 || j > int(level(roots, k).size())) throw NonSimplePole("no such root");
    const S u = roots[k - 1][j - 1];
    const S ut = tilde(u, m.rho);
    std::vector<ResidueTerm<S>> out;
    for (int g = 1; g <= m.nh(); ++g) {
        auto lp = detail::gamma_factors(m, g, roots);
        for (bool tl : {false, true}) {
            // z = v or z = ~v = -v - rho, so that dz/dv = +1 or -1
            S z = tl ? ut : u;
            int hits = 0;
            S val = S(1);
            for (auto& f : lp.num) val *= f.c * (z - f.a);
            for (auto& f : lp.den) {
                if (f.k == k && f.j == j && f.tilde == tl) {
                    ++hits;
                    val *= inv(f.c * S(tl ? -1 : 1));
                } else {
                    val *= inv(f.c * (z - f.a));
                }
            }
            if (hits == 0) continue;
            if (hits > 1) throw NonSimplePole("pole of order > 1");
            val *= halving(m, g) * m.twist(g) * p_factor(z, m.rho, m.sign);
            out.push_back({g, tl, val});
        }
    }
    return out;
}

template <class S>
S residue_lambda(const ModelSpec<S>& m, const Roots<S>& roots, int k, int j) {
    S r(0);
    for (auto& t : residue_terms(m, roots, k, j)) r += t.value;
    return r;
}

template <class S>
std::vector<S> bethe_residuals(const ModelSpec<S>& m, const Roots<S>& roots) {
    std::vector<S> r;
    for (int k = 1; k <= m.n(); ++k)
        for (int j = 1; j <= int(roots[k - 1].size()); ++j) r.push_back(residue_lambda(m, roots, k, j));
    return r;
}

// ---- explicit Bethe equations in z-variables ----

template <class S>
S z_shift(const ModelSpec<S>& m, int k) { return (S(k) - m.rho) * inv(S(2)); }

inline int cartan_a(int n, int k, int l) {
    if (k == l) return 2;
    return std::abs(k - l) == 1 && k >= 1 && l >= 1 && k <= n && l <= n ? -1 : 0;
}

template <class S>
int cartan_b(const ModelSpec<S>& m, int k, int l) {
    int n = m.n();
    if (m.nh() != n) return 0;
    if (k == n && l == n) return 2;
    if ((k == n - 1 && l == n) || (k == n && l == n - 1)) return -1;
    return 0;
}

// Return (LHS, RHS) of the explicit equation for u^{(k)}_j.
template <class S>
std::pair<S, S> bethe_explicit_sides(const ModelSpec<S>& m, const Roots<S>& roots, int k, int j) {
    int n = m.n(), nh = m.nh();
    auto z = [&](int l, const S& x) { return x - z_shift(m, l); };
    const S u = roots[k - 1][j - 1];
    const S zk = z(k, u);
    const S half = inv(S(2));
    S lhs(1), rhs;
    if (k < n) {
        for (int l = k - 1; l <= k + 1; ++l)
            for (auto& x : level(roots, l)) {
                S zl = z(l, x);
                S a = S(cartan_a(n, k, l)) * half, b = S(cartan_b(m, k, l)) * half;
                lhs *= (zk - zl + a) * inv(zk - zl - a) * (zk + zl + S(n) + b) * inv(zk + zl + S(n) - b);
            }
        rhs = -m.twist(k + 1) * inv(m.twist(k)) * mu_weight(m, k + 1, u) * inv(mu_weight(m, k, u));
    } else {
        S pre = (zk + S(n + 1) * half) * inv(zk + S(nh - 1) * half);
        lhs = m.sign > 0 ? pre : inv(pre);
        for (int l = n - 1; l <= n; ++l)
            for (auto& x : level(roots, l)) {
                S zl = z(l, x), a = S(cartan_a(n, n, l)) * half;
                lhs *= (zk - zl + a) * inv(zk - zl - a);
            }
        for (int l = nh - 1; l <= n; ++l)
            for (auto& x : level(roots, l)) {
                S zl = z(l, x), b = S(cartan_b(m, n, l)) * half;
                lhs *= (zk + zl + S(n) + b) * inv(zk + zl + S(nh) - b);
            }
        rhs = -m.twist(nh) * inv(m.twist(n)) * mu_weight(m, nh, tilde(u, m.rho)) * inv(mu_weight(m, n, u));
    }
    return {lhs, rhs};
}

template <class S>
std::vector<S> bethe_residuals_explicit(const ModelSpec<S>& m, const Roots<S>& roots) {
    std::vector<S> r;
    for (int k = 1; k <= m.n(); ++k)
        for (int j = 1; j <= int(roots[k - 1].size()); ++j) {
            auto [l, rh] = bethe_explicit_sides(m, roots, k, j);
            r.push_back(l - rh);
        }
    return r;
}

// ---- admissibility ----

template <class S>
bool admissible(const ModelSpec<S>& m, const Roots<S>& roots, double tol = 1e-8) {
    auto close = [&](const S& a, const S& b) { return magnitude(a - b) <= tol; };
    for (int k = 1; k <= m.n(); ++k) {
        const auto& r = roots[k - 1];
        for (size_t i = 0; i < r.size(); ++i) {
            S d = r[i] - tilde(r[i], m.rho);
            if (close(d, S(0)) || close(d, S(1)) || close(d, S(-1))) return false;
            for (size_t j = i + 1; j < r.size(); ++j) {
                S e = r[i] - r[j];
                if (close(e, S(0)) || close(e, S(1)) || close(e, S(-1))) return false;
                S f = r[i] - tilde(r[j], m.rho);
                if (close(f, S(0)) || close(f, S(1)) || close(f, S(-1))) return false;
            }
        }
    }
    try {
        for (auto& x : bethe_residuals(m, roots))
            if (!std::isfinite(magnitude(x))) return false;
    } catch (const PoleError&) {
        return false;
    } catch (const NonSimplePole&) {
        return false;
    }
    return true;
}

// ---- float Newton solver ----

struct SolveOptions {
    int max_iter = 200;
    int max_halvings = 30;
    double tol = 1e-12;
    double dedup_radius = 1e-6;
    bool explicit_form = true;
    double max_root = 1e3;
};

struct BetheSolution {
    Roots<Cplx> roots;
    double residual = 0;
    bool converged = false;
    bool admissible = false;
    int iterations = 0;
    std::string note;
};

inline double inf_norm(const std::vector<Cplx>& v) {
    double r = 0;
    for (auto& x : v) r = std::max(r, std::abs(x));
    return r;
}

inline std::vector<Cplx> solve_linear(std::vector<std::vector<Cplx>> a, std::vector<Cplx> b) {
    size_t n = b.size();
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        for (size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        if (std::abs(a[p][c]) == 0) throw NoConvergence("singular Jacobian");
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (size_t r = c + 1; r < n; ++r) {
            Cplx f = a[r][c] / a[c][c];
            for (size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<Cplx> x(n);
    for (size_t i = n; i-- > 0;) {
        Cplx s = b[i];
        for (size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

inline Roots<Cplx> unflatten(const std::vector<int>& m, const std::vector<Cplx>& x) {
    Roots<Cplx> r(m.size());
    size_t p = 0;
    for (size_t k = 0; k < m.size(); ++k)
        for (int j = 0; j < m[k]; ++j) r[k].push_back(x[p++]);
    return r;
}

inline std::vector<Cplx> residual_vector(const ModelSpec<Cplx>& m, const Roots<Cplx>& r, bool explicit_form) {
    try {
        auto f = explicit_form ? bethe_residuals_explicit(m, r) : bethe_residuals(m, r);
        for (auto& x : f)
            if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) throw PoleError("non-finite residual");
        return f;
    } catch (const NonSimplePole&) {
        throw PoleError("coincident roots");
    }
}

// Newton in z-variables z^{(k)}_j = u^{(k)}_j - (k - rho)/2.
inline BetheSolution newton_solve(const ModelSpec<Cplx>& m, const std::vector<int>& mvec, const Roots<Cplx>& seed,
                                  const SolveOptions& opt) {
    std::vector<Cplx> shift;
    for (size_t k = 0; k < mvec.size(); ++k)
        for (int j = 0; j < mvec[k]; ++j) shift.push_back(z_shift(m, int(k) + 1));
    std::vector<Cplx> z;
    for (auto& lv : seed)
        for (auto& u : lv) z.push_back(u);
    for (size_t i = 0; i < z.size(); ++i) z[i] -= shift[i];
    auto F = [&](const std::vector<Cplx>& zz) {
        std::vector<Cplx> u = zz;
        for (size_t i = 0; i < u.size(); ++i) u[i] += shift[i];
        return residual_vector(m, unflatten(mvec, u), opt.explicit_form);
    };
    BetheSolution sol;
    std::vector<Cplx> f;
    try {
        f = F(z);
    } catch (const PoleError&) {
        sol.note = "seed at a pole";
        return sol;
    }
    double nf = inf_norm(f);
    int it = 0;
    for (; it < opt.max_iter && nf >= opt.tol; ++it) {
        size_t n = z.size();
        std::vector<std::vector<Cplx>> jac(n, std::vector<Cplx>(n));
        try {
            for (size_t c = 0; c < n; ++c) {
                double h = 1e-7 * std::max(1.0, std::abs(z[c]));
                auto zp = z, zm = z;
                zp[c] += h;
                zm[c] -= h;
                auto fp_ = F(zp), fm_ = F(zm);
                for (size_t r = 0; r < n; ++r) jac[r][c] = (fp_[r] - fm_[r]) / (2 * h);
            }
        } catch (const PoleError&) {
            sol.note = "pole while differentiating";
            break;
        }
        std::vector<Cplx> step;
        try {
            std::vector<Cplx> rhs(f.size());
            for (size_t i = 0; i < f.size(); ++i) rhs[i] = -f[i];
            step = solve_linear(jac, rhs);
        } catch (const NoConvergence&) {
            sol.note = "singular Jacobian";
            break;
        }
        double t = 1.0;
        bool moved = false;
        for (int h = 0; h <= opt.max_halvings; ++h, t /= 2) {
            auto zn = z;
            bool far = false;
            for (size_t i = 0; i < n; ++i) {
                zn[i] += t * step[i];
                if (std::abs(zn[i] + shift[i]) > opt.max_root) far = true;
            }
            if (far) continue;
            try {
                auto fn = F(zn);
                double nn = inf_norm(fn);
                if (nn < nf) {
                    z = zn;
                    f = fn;
                    nf = nn;
                    moved = true;
                    break;
                }
            } catch (const PoleError&) {
            }
        }
        if (!moved) {
            sol.note = "damping exhausted";
            break;
        }
    }
    for (size_t i = 0; i < z.size(); ++i) z[i] += shift[i];
    sol.roots = unflatten(mvec, z);
    sol.residual = nf;
    sol.iterations = it;
    sol.converged = nf < opt.tol;
    sol.admissible = sol.converged && admissible(m, sol.roots);
    for (auto& lv : sol.roots)
        for (auto& u : lv)
            if (std::abs(u) > opt.max_root) sol.admissible = false;
    if (sol.converged && !sol.admissible) sol.note = "inadmissible";
    return sol;
}

inline Roots<Cplx> canonical(Roots<Cplx> r) {
    auto lt = [](const Cplx& a, const Cplx& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    };
    for (auto& lv : r) std::sort(lv.begin(), lv.end(), lt);
    return r;
}

inline double root_distance(const Roots<Cplx>& a, const Roots<Cplx>& b) {
    double d = 0;
    for (size_t k = 0; k < a.size(); ++k)
        for (size_t j = 0; j < a[k].size(); ++j) d = std::max(d, std::abs(a[k][j] - b[k][j]));
    return d;
}

// Random seeds: real parts in [-box, box], imaginary parts in a band of a quarter of that.
inline std::vector<Roots<Cplx>> random_seeds(const std::vector<int>& mvec, int count, uint64_t seed, double box = 3.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> re(-box, box), im(-box / 4, box / 4);
    std::vector<Roots<Cplx>> out;
    for (int s = 0; s < count; ++s) {
        Roots<Cplx> r(mvec.size());
        for (size_t k = 0; k < mvec.size(); ++k)
            for (int j = 0; j < mvec[k]; ++j) r[k].push_back({re(rng), im(rng)});
        out.push_back(r);
    }
    return out;
}

inline std::vector<BetheSolution> solve_bethe(const ModelSpec<Cplx>& m, const std::vector<int>& mvec,
                                              const std::vector<Roots<Cplx>>& seeds, const SolveOptions& opt = {}) {
    if (int(mvec.size()) != m.n()) throw ShapeError("m needs n entries");
    std::vector<std::future<BetheSolution>> fut;
    for (auto& s : seeds) fut.push_back(std::async(std::launch::async, [&m, &mvec, s, &opt] { return newton_solve(m, mvec, s, opt); }));
    std::vector<BetheSolution> all;
    for (auto& f : fut) {
        BetheSolution s = f.get();
        if (!s.converged) continue;
        s.roots = canonical(s.roots);
        all.push_back(std::move(s));
    }
    std::vector<BetheSolution> uniq;
    for (auto& s : all) {
        bool dup = false;
        for (auto& u : uniq)
            if (root_distance(u.roots, s.roots) < opt.dedup_radius) {
                dup = true;
                if (s.residual < u.residual) u = s;
                break;
            }
        if (!dup) uniq.push_back(s);
    }
    std::sort(uniq.begin(), uniq.end(), [](const BetheSolution& a, const BetheSolution& b) {
        if (a.residual != b.residual) return a.residual < b.residual;
        for (size_t k = 0; k < a.roots.size(); ++k)
            for (size_t j = 0; j < a.roots[k].size(); ++j) {
                auto x = a.roots[k][j], y = b.roots[k][j];
                if (x.real() != y.real()) return x.real() < y.real();
                if (x.imag() != y.imag()) return x.imag() < y.imag();
            }
        return false;
    });
    return uniq;
}

struct EigenReport {
    bool pass = false;
    double worst = 0;
    Cplx worst_v{0};
    std::vector<double> residuals;
};

inline double vec_inf(const Vec<Cplx>& v) { return v.max_abs(); }

inline EigenReport eigen_check(const ModelSpec<Cplx>& m, const Roots<Cplx>& roots, const std::vector<Cplx>& vs,
                               double tol) {
    Monodromy<Cplx> mono(m);
    Vec<Cplx> psi = bethe_vector(mono, roots);
    double np = vec_inf(psi);
    EigenReport rep;
    if (np == 0) {
        rep.worst = INFINITY;
        return rep;
    }
    for (auto& v : vs) {
        Vec<Cplx> d = transfer_apply(mono, v, psi);
        d.axpy(-eigenvalue_lambda(m, v, roots), psi);
        double r = vec_inf(d) / np;
        rep.residuals.push_back(r);
        if (r >= rep.worst) {
            rep.worst = r;
            rep.worst_v = v;
        }
    }
    rep.pass = rep.worst < tol;
    return rep;
}

}  // namespace twy
