#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "twy/monodromy.hpp"
#include "twy/repspace.hpp"
#include "twy/scalars.hpp"
#include "twy/tensor.hpp"

namespace twy {

template <class S>
using Roots = std::vector<std::vector<S>>;  // level k at index k-1

template <class S>
struct BetheState {
    Vec<S> vector;
    std::vector<std::string> pending;
    std::string provenance;
};

struct NonSimplePole : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class S>
std::vector<S> without(const std::vector<S>& xs, const std::vector<S>& drop) {
    std::vector<S> r = xs;
    for (auto& d : drop) {
        auto it = std::find(r.begin(), r.end(), d);
        if (it != r.end()) r.erase(it);
    }
    return r;
}

template <class S>
std::vector<S> tildes(const std::vector<S>& xs, const S& rho) {
    std::vector<S> r;
    for (auto& x : xs) r.push_back(tilde(x, rho));
    return r;
}

template <class S>
std::vector<std::vector<S>> pairs_of(const std::vector<S>& xs) {
    std::vector<std::vector<S>> r;
    for (size_t i = 0; i < xs.size(); ++i)
        for (size_t j = i + 1; j < xs.size(); ++j) r.push_back({xs[i], xs[j]});
    return r;
}

template <class S>
void accumulate(Vec<S>& acc, bool& started, const S& c, const Vec<S>& v) {
    if (!started) {
        acc = v.scaled(c);
        started = true;
    } else {
        acc.axpy(c, v);
    }
}

}  // namespace detail

template <class S>
std::vector<S> level(const Roots<S>& r, int l) {
    if (l < 1 || l > int(r.size())) return {};
    return r[l - 1];
}

// ---- scalar building blocks ----

template <class S>
S gamma(const ModelSpec<S>& m, int k, const S& z, const Roots<S>& roots) {
    int n = m.n(), nh = m.nh();
    if (k < nh) return f_minus(z, level(roots, k - 1)) * f_plus(z, level(roots, k)) * mu_weight(m, k, z);
    auto un = level(roots, n);
    auto unt = detail::tildes(un, m.rho);
    if (nh == n) return f_minus(z, level(roots, n - 1)) * f_plus(z, un) * f_plus(z, unt) * mu_weight(m, n, z);
    return f_minus(z, un) * f_plus(z, unt) * mu_weight(m, nh, z);
}

template <class S>
S gamma_prod(const ModelSpec<S>& m, int k, const std::vector<S>& zs, const Roots<S>& roots) {
    S r(1);
    for (auto& z : zs) r *= gamma(m, k, z, roots);
    return r;
}

template <class S>
S determinant(std::vector<std::vector<S>> a) {
    size_t n = a.size();
    S det(1);
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        while (p < n && is_zero(a[p][c])) ++p;
        if (p == n) return S(0);
        if (p != c) {
            std::swap(a[p], a[c]);
            det = -det;
        }
        det *= a[c][c];
        S ip = inv(a[c][c]);
        for (size_t r = c + 1; r < n; ++r) {
            if (is_zero(a[r][c])) continue;
            S f = a[r][c] * ip;
            for (size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return det;
}

// Domain-wall partition function K(u|v).
template <class S>
S dwpf(const std::vector<S>& us, const std::vector<S>& vs) {
    if (us.size() != vs.size()) throw ShapeError("dwpf needs tuples of equal length");
    size_t n = us.size();
    S num(1), den(1);
    for (auto& a : us)
        for (auto& b : vs) num *= a - b + S(1);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) den *= (us[i] - us[j]) * (vs[j] - vs[i]);
    std::vector<std::vector<S>> mat(n, std::vector<S>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            S d = us[i] - vs[j];
            mat[i][j] = inv(d * (d + S(1)));
        }
    return num * inv(den) * determinant(mat);
}

// ---- nested Bethe vectors ----

template <class S>
int hat_one(const ModelSpec<S>& m) { return 1 + m.nh() - m.n(); }

template <class S>
LegDims auxiliary_layout(const ModelSpec<S>& m, const Roots<S>& roots) {
    LegDims ld;
    for (int k = 1; k < m.n(); ++k)
        for (size_t i = 1; i <= roots[k - 1].size(); ++i) ld.emplace_back(leg_a(k, int(i)), k);
    size_t mn = roots[m.n() - 1].size();
    for (size_t i = 1; i <= mn; ++i) ld.emplace_back(leg_ad(int(i)), m.nh());
    for (size_t i = 1; i <= mn; ++i) ld.emplace_back(leg_add(int(i)), m.nh());
    return ld;
}

// Nested vacuum vector: E_1 on a^k legs, E_{1+nh-n} on the dotted legs, E_1 on the double-dotted legs.
template <class S>
Vec<S> nested_vacuum(const ModelSpec<S>& m, const Roots<S>& roots) {
    LegDims ld = auxiliary_layout(m, roots);
    Key idx;
    for (auto& [l, d] : ld) idx.push_back(l.rfind("ad", 0) == 0 && l.rfind("add", 0) != 0 ? hat_one(m) : 1);
    for (auto& q : m.quantum_legs()) {
        ld.push_back(q);
        idx.push_back(1);
    }
    return Vec<S>::basis(ld, idx);
}

template <class S>
NestedSpec<S> nested_spec(const ModelSpec<S>& m, const Roots<S>& roots, bool full_top = false) {
    NestedSpec<S> ns;
    for (int k = 1; k < m.n(); ++k) ns.lower.push_back(roots[k - 1]);
    const auto& un = roots[m.n() - 1];
    int mn = int(un.size());
    for (int i = mn; i >= 1; --i) ns.top.emplace_back(leg_ad(i), un[i - 1]);
    if (m.nh() == m.n() || full_top)
        for (int i = mn; i >= 1; --i) ns.top.emplace_back(leg_add(i), tilde(un[i - 1], m.rho));
    ns.full_top = full_top;
    return ns;
}

template <class S>
Vec<S> drop_legs(const Vec<S>& v, const std::vector<std::string>& legs) {
    Vec<S> r;
    for (size_t i = 0; i < v.legs.size(); ++i)
        if (std::find(legs.begin(), legs.end(), v.legs[i]) == legs.end()) {
            r.legs.push_back(v.legs[i]);
            r.dims.push_back(v.dims[i]);
        }
    return r;
}

// b^{(k)}_{a^k_i}(u): contracts the leg a^k_i.
template <class S>
Vec<S> apply_b_level(const Nested<S>& nest, int k, const std::string& leg, const S& u, const Vec<S>& v) {
    Vec<S> acc = drop_legs(v, {leg});
    for (int j = 1; j <= k; ++j) {
        Vec<S> comp = take_component(v, leg, j);
        if (comp.is_zero()) continue;
        acc += nest.entry(k + 1, k - j + 1, k + 1, u, comp);
    }
    return acc;
}

// b^{(n)}_{ad,add}(u): contracts the two level-n legs against B-block entries.
template <class S>
Vec<S> apply_b_top(const Monodromy<S>& mono, const S& u, const std::string& legd, const std::string& legdd,
                   const Vec<S>& v) {
    const auto& m = mono.spec();
    int nh = m.nh(), n = m.n();
    Vec<S> acc = drop_legs(v, {legd, legdd});
    for (int k = 1; k <= nh; ++k)
        for (int l = 1; l <= nh; ++l) {
            Vec<S> comp = take_component(take_component(v, legd, k), legdd, l);
            if (comp.is_zero()) continue;
            acc += mono.s(nh - k + 1, n + l, u, comp);
        }
    return acc;
}

template <class S>
Vec<S> apply_B_top(const Monodromy<S>& mono, const std::vector<S>& un, const Vec<S>& v) {
    const auto& m = mono.spec();
    int mn = int(un.size());
    Vec<S> w = v;
    for (int i = 1; i <= mn; ++i) {
        S ut = tilde(un[i - 1], m.rho);
        for (int j = mn; j > i; --j) {
            w = act_r(w, leg_ad(i), leg_add(j), ut - un[j - 1]);
            if (m.nh() == m.n()) w = w.scaled(inv(fm(ut, un[j - 1])));
        }
        w = apply_b_top(mono, un[i - 1], leg_ad(i), leg_add(i), w);
    }
    return w;
}

template <class S>
Vec<S> apply_B_level(const Nested<S>& nest, int k, const std::vector<S>& uk, const Vec<S>& v) {
    Vec<S> w = v;
    for (size_t i = 1; i <= uk.size(); ++i) w = apply_b_level(nest, k, leg_a(k, int(i)), uk[i - 1], w);
    return w;
}

// Psi^{(K)}: creation operators of levels 1..K applied to `start`.
template <class S>
Vec<S> psi_levels(const Monodromy<S>& mono, const Roots<S>& roots, int K, const Vec<S>& start,
                  bool full_top = false) {
    const auto& m = mono.spec();
    Nested<S> nest(mono, nested_spec(m, roots, full_top));
    Vec<S> w = start;
    for (int k = 1; k <= K; ++k) {
        if (k < m.n())
            w = apply_B_level(nest, k, roots[k - 1], w);
        else
            w = apply_B_top(mono, roots[m.n() - 1], w);
    }
    return w;
}

template <class S>
void check_roots(const ModelSpec<S>& m, const Roots<S>& roots) {
    if (int(roots.size()) != m.n()) throw ShapeError("need one root tuple per level 1..n");
}

template <class S>
Vec<S> bethe_vector(const Monodromy<S>& mono, const Roots<S>& roots) {
    const auto& m = mono.spec();
    check_roots(m, roots);
    return psi_levels(mono, roots, m.n(), nested_vacuum(m, roots)).reordered(m.quantum_leg_names());
}

template <class S>
BetheState<S> bethe_state(const Monodromy<S>& mono, const Roots<S>& roots) {
    return {bethe_vector(mono, roots), {}, "nested"};
}

// ---- trace formula ----

template <class S>
Vec<S> trace_formula_vector(const Monodromy<S>& mono, const Roots<S>& roots) {
    const auto& m = mono.spec();
    check_roots(m, roots);
    int N = m.N;
    std::vector<std::pair<int, int>> labels;
    for (int k = 1; k <= m.n(); ++k)
        for (size_t i = 1; i <= roots[k - 1].size(); ++i) labels.emplace_back(k, int(i));
    std::vector<std::pair<int, int>> rev(labels.rbegin(), labels.rend());
    auto lg = [](std::pair<int, int> ki) { return "t" + std::to_string(ki.first) + "_" + std::to_string(ki.second); };
    auto u = [&](std::pair<int, int> ki) { return roots[ki.first - 1][ki.second - 1]; };
    LegDims ld;
    Key idx;
    for (auto& ki : labels) {
        ld.emplace_back(lg(ki), N);
        idx.push_back(ki.first + 1);
    }
    for (auto& q : m.quantum_legs()) {
        ld.push_back(q);
        idx.push_back(1);
    }
    struct Factor {
        char kind;
        std::pair<int, int> a, b;
    };
    std::vector<Factor> fs;
    for (auto& ki : rev)
        for (auto& lj : rev)
            if (lj < ki) fs.push_back({'R', ki, lj});
    for (auto& ki : rev) {
        fs.push_back({'S', ki, ki});
        for (auto& lj : rev)
            if (lj < ki) fs.push_back({'H', ki, lj});
    }
    auto theta = theta_signs(m.sign, N);
    Vec<S> w = Vec<S>::basis(ld, idx);
    for (auto it = fs.rbegin(); it != fs.rend(); ++it) {
        if (it->kind == 'R')
            w = act_r(w, lg(it->a), lg(it->b), u(it->a) - u(it->b));
        else if (it->kind == 'H')
            w = act_rq(w, lg(it->a), lg(it->b), tilde(u(it->a), m.rho) - u(it->b), theta);
        else
            w = mono.act_full(w, lg(it->a), u(it->a));
    }
    for (auto& ki : labels) w = take_component(w, lg(ki), ki.first);
    S norm(1);
    for (int k = 1; k <= m.n(); ++k) {
        const auto& r = roots[k - 1];
        for (size_t i = 0; i < r.size(); ++i)
            for (size_t j = 0; j < i; ++j) {
                norm *= inv(fp(r[j], r[i]));
                if (m.nh() == m.n() && k == m.n()) norm *= inv(fp(r[j], tilde(r[i], m.rho)));
            }
    }
    return w.scaled(norm).reordered(m.quantum_leg_names());
}

// Example formulas for B_3, B_4, B_5 acting on eta. `which` is "B3", "B3x2", "B4" or "B5".
template <class S>
Vec<S> example_b_vector(const Monodromy<S>& mono, const std::string& which, const Roots<S>& roots,
                        Reading reading = Reading::Amended) {
    const auto& m = mono.spec();
    Vec<S> eta = build_quantum_space(m).eta;
    auto s = [&](int i, int j, const S& x, const Vec<S>& v) { return mono.s(i, j, x, v); };
    auto t = [&](const S& x) { return tilde(x, m.rho); };
    if (which == "B3") return s(1, 2, roots[0][0], eta);
    if (which == "B3x2") {
        const S &u1 = roots[0][0], &u2 = roots[0][1];
        if (reading == Reading::Strict) throw ShapeError("printed B_3(u1,u2) refers to a third root");
        return s(1, 2, u2, s(1, 2, u1, eta)) + s(1, 3, u2, s(2, 2, u1, eta)).scaled(inv(u1 - t(u2)));
    }
    const S &a = roots[0][0], &b = roots[1][0];
    if (which == "B4") {
        Vec<S> r = s(2, 3, b, s(1, 2, a, eta));
        r.axpy(inv(a - t(b)), s(2, 4, b, s(2, 2, a, eta)));
        r.axpy((a - t(b) + S(1)) * inv((a - b) * (a - t(b))), s(1, 3, b, s(2, 2, a, eta)));
        return r;
    }
    if (which == "B5") {
        Vec<S> r = s(2, 3, b, s(1, 2, a, eta));
        r.axpy(inv(a - b), s(1, 3, b, s(2, 2, a, eta)));
        r.axpy(inv(a - t(b)), s(2, 5, b, s(3, 2, a, eta)));
        r.axpy(inv((a - b) * (a - t(b))), s(1, 4, b, s(3, 2, a, eta)));
        return r;
    }
    throw ShapeError("unknown example " + which);
}

// ---- recurrence relations ----

template <class S>
Roots<S> with_level(Roots<S> r, int k, std::vector<S> v) {
    r[k - 1] = std::move(v);
    return r;
}

// Even N: right side of the recurrence with u^{(n)}_III = u_j.
template <class S>
Vec<S> rr_even_rhs(const Monodromy<S>& mono, const Roots<S>& roots, int j, Reading reading = Reading::Amended) {
    const auto& m = mono.spec();
    int n = m.n();
    if (m.nh() != n) throw ShapeError("even recurrence needs even N");
    const S uj = roots[n - 1].at(j - 1);
    const S ut = tilde(uj, m.rho);
    const auto UIn = detail::without(roots[n - 1], {uj});
    Vec<S> acc;
    bool started = false;
    auto psiI = [&](const Roots<S>& I) { return bethe_vector(mono, I); };
    using Choice = std::map<int, std::vector<S>>;

    for (int i = 1; i <= n; ++i) {
        std::function<void(int, Choice)> rec = [&](int l, Choice ch) {
            if (l == n) {
                Roots<S> I(n);
                for (int q = 1; q < n; ++q) I[q - 1] = detail::without(roots[q - 1], ch.count(q) ? ch[q] : std::vector<S>{});
                I[n - 1] = UIn;
                Choice II = ch;
                II[n] = {ut};
                S c(1);
                for (int k = i + 1; k <= n; ++k) {
                    c *= gamma_prod(m, k, II[k - 1], I);
                    std::vector<S> rhs = II[k];
                    if (k == n) rhs.push_back(uj);
                    c *= dwpf(II[k - 1], rhs);
                }
                detail::accumulate(acc, started, c, mono.s(i, 2 * n - i + 1, uj, psiI(I)));
                return;
            }
            for (auto& pr : detail::pairs_of(roots[l - 1])) {
                Choice nx = ch;
                nx[l] = pr;
                rec(l + 1, nx);
            }
        };
        rec(i, {});
    }

    for (int i = 1; i <= n; ++i)
        for (int J = i + 1; J <= n; ++J) {
            std::function<void(int, std::map<int, S>)> r3;
            std::function<void(int, std::map<int, S>, std::map<int, S>)> r2;
            auto term = [&](std::map<int, S> c3, std::map<int, S> c2) {
                Roots<S> I(n), IandII(n);
                for (int q = 1; q < n; ++q) {
                    std::vector<S> drop;
                    if (c3.count(q)) drop.push_back(c3[q]);
                    if (c2.count(q)) drop.push_back(c2[q]);
                    I[q - 1] = detail::without(roots[q - 1], drop);
                    IandII[q - 1] = I[q - 1];
                    if (c2.count(q)) IandII[q - 1].push_back(c2[q]);
                }
                I[n - 1] = UIn;
                IandII[n - 1] = UIn;
                auto III = c3;
                III[n] = uj;
                auto II = c2;
                II[n] = ut;
                S c(1);
                for (int k = i + 1; k < J; ++k) c *= gamma(m, k, III[k - 1], I) * inv(III[k - 1] - III[k]);
                c *= gamma(m, J, III[J - 1], I);
                for (int k = J + 1; k <= n; ++k) {
                    S g3 = k < n ? gamma(m, k, III[k - 1], IandII)
                                 : f_plus(III[n - 1], {II[n]}) * gamma(m, n, III[n - 1], I) *
                                       (reading == Reading::Amended ? f_minus(III[n - 1], {II[n - 1]}) : S(1));
                    c *= gamma(m, k, II[k - 1], I) * g3 * inv((II[k - 1] - II[k]) * (III[k - 1] - III[k]));
                }
                Vec<S> ps = psiI(I);
                Vec<S> v = mono.s(i, 2 * n - J + 1, uj, ps).scaled(f_plus(III[J - 1], {II[J]}) * inv(III[J - 1] - III[J]));
                v.axpy(inv(III[J - 1] - II[J]), mono.s(J, 2 * n - i + 1, uj, ps));
                detail::accumulate(acc, started, c, v);
            };
            r3 = [&](int l, std::map<int, S> c3) {
                if (l == n) return r2(J, c3, {});
                for (auto& x : roots[l - 1]) {
                    auto nx = c3;
                    nx[l] = x;
                    r3(l + 1, nx);
                }
            };
            r2 = [&](int l, std::map<int, S> c3, std::map<int, S> c2) {
                if (l == n) return term(c3, c2);
                for (auto& x : roots[l - 1]) {
                    if (c3.count(l) && c3[l] == x) continue;
                    auto nx = c2;
                    nx[l] = x;
                    r2(l + 1, c3, nx);
                }
            };
            r3(i, {});
        }
    if (!started) acc = Vec<S>(m.quantum_legs());
    return acc;
}

template <class S>
S beta_block(const S& a2, const S& a3, const S& b2, const S& b3, const S& t3, int which) {
    if (which == 0)
        return fm(a3, a2) * fp(a3, t3) * inv((a2 - t3) * (a3 - b3) * (b2 - t3));
    if (which == 1) return (a3 - b3) * inv(a3 - b2) * (a2 - t3 + S(1) + (a3 - t3) * inv(a2 - b2));
    if (which == 2) return fp(a2, b2) * (a2 - t3) * inv(a3 - b2) + ((a2 - b3) * (a3 - t3) + S(1)) * inv(a2 - b2);
    return (a2 - t3) * (a3 - t3) * (a2 - b3) * (a3 - b3);
}

// Odd N: right side of the four-sum recurrence with u^{(n)}_III = u_j.
template <class S>
Vec<S> rr_odd_rhs(const Monodromy<S>& mono, const Roots<S>& roots, int j, Reading reading = Reading::Amended) {
    const auto& m = mono.spec();
    int n = m.n(), nh = m.nh();
    if (nh == n) throw ShapeError("odd recurrence needs odd N");
    const S uj = roots[n - 1].at(j - 1);
    const S ut = tilde(uj, m.rho);
    const auto Un = detail::without(roots[n - 1], {uj});
    const bool strict = reading == Reading::Strict;
    Vec<S> acc;
    bool started = false;
    auto psiI = [&](const Roots<S>& I) { return bethe_vector(mono, I); };
    using Single = std::map<int, S>;

    std::function<void(int, int, const Single&, Single, const std::function<void(const Single&)>&)> singles =
        [&](int l, int last, const Single& excl, Single cur, const std::function<void(const Single&)>& cb) {
            if (l > last) return cb(cur);
            const auto& pool = l < n ? roots[l - 1] : Un;
            for (auto& x : pool) {
                auto it = excl.find(l);
                if (it != excl.end() && it->second == x) continue;
                auto nx = cur;
                nx[l] = x;
                singles(l + 1, last, excl, nx, cb);
            }
        };
    auto reduce = [&](const Single& a, const Single& b, const std::vector<S>& top) {
        Roots<S> I(n);
        for (int q = 1; q < n; ++q) {
            std::vector<S> drop;
            if (a.count(q)) drop.push_back(a.at(q));
            if (b.count(q)) drop.push_back(b.at(q));
            I[q - 1] = detail::without(roots[q - 1], drop);
        }
        I[n - 1] = top;
        return I;
    };

    for (int i = 1; i <= n; ++i)
        singles(i, n - 1, {}, {}, [&](const Single& c3) {
            Single III = c3;
            III[n] = uj;
            Roots<S> I = reduce(c3, {}, Un);
            S c(1);
            for (int k = i + 1; k <= n; ++k) c *= gamma(m, k, III[k - 1], I) * inv(III[k - 1] - III[k]);
            detail::accumulate(acc, started, c, mono.s(i, nh, uj, psiI(I)));
        });

    for (int i = 1; i <= (strict ? n - 1 : n); ++i)
        singles(i, n, {}, {}, [&](const Single& II) {
            Roots<S> I = reduce(II, {}, detail::without(Un, {II.at(n)}));
            S c(1);
            for (int k = i + 1; k <= n; ++k) c *= gamma(m, k, II.at(k - 1), I) * inv(II.at(k - 1) - II.at(k));
            c *= gamma(m, nh, II.at(n), I) * inv(II.at(n) - ut);
            Vec<S> ps = psiI(I);
            Vec<S> v;
            if (i == n) {
                v = mono.s(n, nh + 1, uj, ps);
            } else {
                int tgt = strict ? nh + i + 1 : 2 * nh - i;
                v = mono.s(i, nh + 1, uj, ps).scaled((II.at(n - 1) - II.at(n) + S(1)) * inv(II.at(n - 1) - uj));
                v += mono.s(n, tgt, uj, ps);
            }
            detail::accumulate(acc, started, c, v);
        });

    for (int i = 1; i < n; ++i) {
        std::function<void(int, std::map<int, std::vector<S>>)> rec = [&](int l, std::map<int, std::vector<S>> ch) {
            if (l == n) {
                for (auto& y : Un) {
                    Roots<S> I(n);
                    for (int q = 1; q < n; ++q) I[q - 1] = detail::without(roots[q - 1], ch.count(q) ? ch[q] : std::vector<S>{});
                    I[n - 1] = detail::without(Un, {y});
                    auto II = ch;
                    II[n] = {y};
                    S c(1);
                    for (int k = i + 1; k <= n; ++k) {
                        c *= gamma_prod(m, k, II[k - 1], I);
                        std::vector<S> rhs = II[k];
                        if (k == n) rhs.push_back(uj);
                        c *= dwpf(II[k - 1], rhs);
                    }
                    c *= gamma(m, nh, y, I) * inv(y - ut);
                    detail::accumulate(acc, started, c, mono.s(i, 2 * nh - i, uj, psiI(I)));
                }
                return;
            }
            for (auto& pr : detail::pairs_of(roots[l - 1])) {
                auto nx = ch;
                nx[l] = pr;
                rec(l + 1, nx);
            }
        };
        rec(i, {});
    }

    for (int i = 1; i < n; ++i)
        for (int J = i + 1; J < n; ++J)
            singles(i, n - 1, {}, {}, [&](const Single& c3) {
                singles(J, n, c3, {}, [&](const Single& II) {
                    Single III = c3;
                    III[n] = uj;
                    Roots<S> I = reduce(c3, II, detail::without(Un, {II.at(n)}));
                    Roots<S> IandII = I;
                    for (int q = 1; q < n; ++q)
                        if (II.count(q)) IandII[q - 1].push_back(II.at(q));
                    S c(1);
                    for (int k = i + 1; k < J; ++k) c *= gamma(m, k, III[k - 1], I) * inv(III[k - 1] - III[k]);
                    c *= gamma(m, J, III[J - 1], I);
                    for (int k = J + 1; k < n; ++k)
                        c *= gamma(m, k, II.at(k - 1), I) * gamma(m, k, III[k - 1], IandII) *
                             inv((II.at(k - 1) - II.at(k)) * (III[k - 1] - III[k]));
                    c *= gamma(m, n, II.at(n - 1), I) * gamma(m, n, III[n - 1], I);
                    c *= gamma(m, nh, II.at(n), I);
                    const S &a2 = II.at(n - 1), &a3 = III[n - 1], &b2 = II.at(n);
                    S be0 = beta_block(a2, a3, b2, uj, ut, 0), be1 = beta_block(a2, a3, b2, uj, ut, 1);
                    S be2 = beta_block(a2, a3, b2, uj, ut, 2), ga = beta_block(a2, a3, b2, uj, ut, 3);
                    S h = inv(S(2) * ga);
                    const S &x3 = III[J - 1], &x2 = II.at(J), &y3 = III[J];
                    S c1 = (be0 + be2 * h) * fp(x3, x2) * inv(x3 - y3) + be1 * h * inv(x3 - x2);
                    S c2 = be1 * h * fp(x3, x2) * inv(x3 - y3) + (be0 + be2 * h) * inv(x3 - x2);
                    Vec<S> ps = psiI(I);
                    Vec<S> v = mono.s(i, 2 * nh - J, uj, ps).scaled(c1);
                    v.axpy(c2, mono.s(J, 2 * nh - i, uj, ps));
                    detail::accumulate(acc, started, c, v);
                });
            });
    return acc;
}

// The n = 1, 2 specialisations printed as worked examples, evaluated independently.
template <class S>
Vec<S> rr_example(const Monodromy<S>& mono, const std::string& which, const Roots<S>& roots, int j) {
    const auto& m = mono.spec();
    int n = m.n();
    const S uj = roots[n - 1].at(j - 1);
    const S ut = tilde(uj, m.rho);
    auto Un = detail::without(roots[n - 1], {uj});
    Vec<S> acc;
    bool started = false;
    auto psi = [&](const Roots<S>& r) { return bethe_vector(mono, r); };
    if (which == "RR3") {
        Roots<S> I{Un};
        detail::accumulate(acc, started, S(1), mono.s(1, 2, uj, psi(I)));
        for (auto& y : Un) {
            Roots<S> I2{detail::without(Un, {y})};
            acc.axpy(gamma(m, 2, y, I2) * inv(y - ut), mono.s(1, 3, uj, psi(I2)));
        }
        return acc;
    }
    const auto& u1 = roots[0];
    if (which == "RR4") {
        Roots<S> I{u1, Un};
        detail::accumulate(acc, started, S(1), mono.s(2, 3, uj, psi(I)));
        for (auto& pr : detail::pairs_of(u1)) {
            Roots<S> I2{detail::without(u1, pr), Un};
            acc.axpy(gamma_prod(m, 2, pr, I2) * dwpf(pr, std::vector<S>{ut, uj}), mono.s(1, 4, uj, psi(I2)));
        }
        for (auto& x : u1) {
            Roots<S> I2{detail::without(u1, {x}), Un};
            Vec<S> ps = psi(I2);
            S g = gamma(m, 2, x, I2);
            acc.axpy(g * fp(x, ut) * inv(x - uj), mono.s(1, 3, uj, ps));
            acc.axpy(g * inv(x - ut), mono.s(2, 4, uj, ps));
        }
        return acc;
    }
    if (which == "RR5") {
        Roots<S> I{u1, Un};
        detail::accumulate(acc, started, S(1), mono.s(2, 3, uj, psi(I)));
        for (auto& x : u1) {
            Roots<S> I2{detail::without(u1, {x}), Un};
            acc.axpy(gamma(m, 2, x, I2) * inv(x - uj), mono.s(1, 3, uj, psi(I2)));
        }
        for (auto& y : Un) {
            Roots<S> I2{u1, detail::without(Un, {y})};
            acc.axpy(gamma(m, 3, y, I2) * inv(y - ut), mono.s(2, 4, uj, psi(I2)));
        }
        for (auto& x : u1)
            for (auto& y : Un) {
                Roots<S> I2{detail::without(u1, {x}), detail::without(Un, {y})};
                Vec<S> ps = psi(I2);
                S c = gamma(m, 2, x, I2) * gamma(m, 3, y, I2) * inv(y - ut);
                acc.axpy(c * fp(x, y) * inv(x - uj), mono.s(1, 4, uj, ps));
                acc.axpy(c * inv(x - y), mono.s(2, 5, uj, ps));
            }
        for (auto& pr : detail::pairs_of(u1))
            for (auto& y : Un) {
                Roots<S> I2{detail::without(u1, pr), detail::without(Un, {y})};
                S c = gamma_prod(m, 2, pr, I2) * gamma(m, 3, y, I2) * inv(y - ut) * dwpf(pr, std::vector<S>{y, uj});
                acc.axpy(c, mono.s(1, 5, uj, psi(I2)));
            }
        return acc;
    }
    throw ShapeError("unknown example " + which);
}

// ---- lemmas for odd N ----

template <class S>
Vec<S> psi_j_vector(const Monodromy<S>& mono, const Roots<S>& roots, int j) {
    const auto& m = mono.spec();
    if (m.nh() == m.n()) throw ShapeError("Psi_j is defined for odd N");
    Vec<S> e = nested_vacuum(m, roots);
    const std::string lj = leg_ad(j);
    e = local(e, {lj}, {{lj, m.nh()}}, [](const Key& x, Emit<S>& em) {
        if (x[0] == 2) em({1}, S(1));
    });
    return psi_levels(mono, roots, m.n(), e, true).reordered(m.quantum_leg_names());
}

template <class S>
Vec<S> psi_j_rhs(const Monodromy<S>& mono, const Roots<S>& roots, int j) {
    const auto& m = mono.spec();
    int n = m.n();
    const auto& u = roots[n - 1];
    Vec<S> acc(m.quantum_legs());
    for (int i = 1; i <= j; ++i) {
        const S ui = u[i - 1];
        Roots<S> rest = with_level(roots, n, detail::without(u, {ui}));
        S c = inv(u[j - 1] - ui + S(1)) * gamma(m, m.nh(), ui, rest);
        for (size_t k = j + 1; k <= u.size(); ++k) c *= inv(fp(u[k - 1], ui));
        acc.axpy(c, bethe_vector(mono, rest));
    }
    return acc;
}

template <class S>
Vec<S> snn_lhs(const Monodromy<S>& mono, const Roots<S>& roots, const S& v) {
    int nh = mono.spec().nh();
    return mono.s(nh, nh, v, bethe_vector(mono, roots));
}

template <class S>
Vec<S> snn_rhs(const Monodromy<S>& mono, const Roots<S>& roots, const S& v) {
    const auto& m = mono.spec();
    int n = m.n(), nh = m.nh();
    if (nh == n) throw ShapeError("snn lemma is for odd N");
    const auto& u = roots[n - 1];
    int mn = int(u.size());
    auto ut = detail::tildes(u, m.rho);
    Vec<S> acc = bethe_vector(mono, roots).scaled(f_factor(-1, {v}, u) * f_factor(1, {v}, ut) * mu_weight(m, nh, v));
    for (int i = 1; i <= mn; ++i) {
        const S ui = u[i - 1];
        std::vector<S> sig = detail::without(u, {ui});
        std::vector<S> rest = sig;
        sig.push_back(ui);
        Roots<S> rs = with_level(roots, n, sig);
        Vec<S> w = psi_levels(mono, rs, n - 1, nested_vacuum(m, rs));
        for (int k = 1; k < mn; ++k) w = act_r(w, leg_ad(k), leg_add(mn), tilde(sig[k - 1], m.rho) - ui);
        for (int a = 1; a < mn; ++a) {
            for (int b = mn - 1; b > a; --b) w = act_r(w, leg_ad(a), leg_add(b), tilde(rest[a - 1], m.rho) - rest[b - 1]);
            w = apply_b_top(mono, rest[a - 1], leg_ad(a), leg_add(a), w);
        }
        // residue of f^-(w,u) f^+(w,u~) mu_nh(w) at w = u_i
        S res = -f_factor(-1, {ui}, rest) * f_factor(1, {ui}, ut) * mu_weight(m, nh, ui);
        Vec<S> tot;
        bool started = false;
        for (const S& vv : {v, tilde(v, m.rho)})
            detail::accumulate(tot, started, p_factor(vv, m.rho, m.sign) * inv(ui - vv),
                               apply_b_top(mono, vv, leg_ad(mn), leg_add(mn), w));
        acc.axpy(res * inv(p_factor(ui, m.rho, m.sign)), tot.reordered(m.quantum_leg_names()));
    }
    return acc;
}

// ---- gl_n-type recurrence on the level-(n-1) vectors ----

template <class S>
struct GlnData {
    std::vector<std::vector<S>> lower;                           // v^{(1..n-1)}
    std::vector<std::pair<std::string, S>> spaces;               // level-n spaces, leftmost first
    std::map<std::string, int> ref;                              // reference index on each space
};

template <class S>
Vec<S> gln_vector(const Monodromy<S>& mono, const GlnData<S>& g) {
    const auto& m = mono.spec();
    NestedSpec<S> ns;
    ns.lower = g.lower;
    ns.top = g.spaces;
    Nested<S> nest(mono, ns);
    LegDims ld;
    Key idx;
    for (int k = 1; k < m.n(); ++k)
        for (size_t i = 1; i <= g.lower[k - 1].size(); ++i) {
            ld.emplace_back(leg_a(k, int(i)), k);
            idx.push_back(1);
        }
    for (auto& [l, p] : g.spaces) {
        ld.emplace_back(l, m.nh());
        idx.push_back(g.ref.at(l));
    }
    for (auto& q : m.quantum_legs()) {
        ld.push_back(q);
        idx.push_back(1);
    }
    Vec<S> w = Vec<S>::basis(ld, idx);
    for (int k = 1; k < m.n(); ++k) w = apply_B_level(nest, k, g.lower[k - 1], w);
    return w;
}

template <class S>
GlnData<S> gln_from_roots(const ModelSpec<S>& m, const Roots<S>& roots) {
    GlnData<S> g;
    for (int k = 1; k < m.n(); ++k) g.lower.push_back(roots[k - 1]);
    NestedSpec<S> ns = nested_spec(m, roots);
    g.spaces = ns.top;
    for (auto& [l, p] : g.spaces) g.ref[l] = (l.rfind("add", 0) == 0) ? 1 : hat_one(m);
    return g;
}

template <class S>
S gln_lambda(const ModelSpec<S>& m, int k, const S& z, const std::vector<std::vector<S>>& lower,
             const std::vector<S>& vn) {
    auto r = [&](int l) -> std::vector<S> {
        if (l >= 1 && l < m.n()) return lower[l - 1];
        if (l == m.n()) return vn;
        return {};
    };
    return f_minus(z, r(k - 1)) * f_plus(z, r(k)) * mu_weight(m, k, z);
}

template <class S>
int gln_basis_index(const ModelSpec<S>& m, int k) { return m.nh() == m.n() ? k : k + 1; }

// Expansion in the leftmost (depth 1) or two leftmost (depth 2) level-n spaces.
template <class S>
Vec<S> rr_gln_rhs(const Monodromy<S>& mono, const GlnData<S>& g, int depth) {
    const auto& m = mono.spec();
    int n = m.n();
    if (depth < 1 || depth > 2 || int(g.spaces.size()) < depth) throw ShapeError("bad expansion depth");
    std::vector<std::pair<std::string, S>> rest(g.spaces.begin() + depth, g.spaces.end());
    std::vector<S> vnI;
    for (auto& [l, p] : rest) vnI.push_back(p);
    Vec<S> acc;
    bool started = false;
    auto emit = [&](const S& c, const std::vector<std::vector<S>>& lowI, std::vector<int> es) {
        GlnData<S> sub{lowI, rest, g.ref};
        Vec<S> w = gln_vector(mono, sub);
        LegDims nl;
        Key nk;
        for (int d = 0; d < depth; ++d) {
            nl.emplace_back(g.spaces[d].first, m.nh());
            nk.push_back(gln_basis_index(m, es[d]));
        }
        w = local(w, {}, nl, [&](const Key&, Emit<S>& e) { e.put(nk, S(1)); });
        detail::accumulate(acc, started, c, w);
    };
    auto lowered = [&](const std::map<int, std::vector<S>>& drop) {
        std::vector<std::vector<S>> r;
        for (int l = 1; l < n; ++l)
            r.push_back(detail::without(g.lower[l - 1], drop.count(l) ? drop.at(l) : std::vector<S>{}));
        return r;
    };

    if (depth == 1) {
        const S v2 = g.spaces[0].second;
        for (int i = 1; i <= n; ++i) {
            std::function<void(int, std::map<int, S>)> rec = [&](int l, std::map<int, S> ch) {
                if (l == n) {
                    std::map<int, std::vector<S>> drop;
                    for (auto& [q, x] : ch) drop[q] = {x};
                    auto lowI = lowered(drop);
                    auto II = ch;
                    II[n] = v2;
                    S c(1);
                    for (int k = i + 1; k <= n; ++k) c *= gln_lambda(m, k, II[k - 1], lowI, vnI) * inv(II[k - 1] - II[k]);
                    emit(c, lowI, {n - i + 1});
                    return;
                }
                for (auto& x : g.lower[l - 1]) {
                    auto nx = ch;
                    nx[l] = x;
                    rec(l + 1, nx);
                }
            };
            rec(i, {});
        }
        return acc;
    }

    const S v3 = g.spaces[0].second, v2 = g.spaces[1].second;
    for (int i = 1; i <= n; ++i) {
        std::function<void(int, std::map<int, std::vector<S>>)> rec = [&](int l, std::map<int, std::vector<S>> ch) {
            if (l == n) {
                auto lowI = lowered(ch);
                auto II = ch;
                II[n] = {v2};
                S c(1);
                for (int k = i + 1; k <= n; ++k) {
                    for (auto& z : II[k - 1]) c *= gln_lambda(m, k, z, lowI, vnI);
                    std::vector<S> rhs = II[k];
                    if (k == n) rhs.push_back(v3);
                    c *= dwpf(II[k - 1], rhs);
                }
                emit(c, lowI, {n - i + 1, n - i + 1});
                return;
            }
            for (auto& pr : detail::pairs_of(g.lower[l - 1])) {
                auto nx = ch;
                nx[l] = pr;
                rec(l + 1, nx);
            }
        };
        rec(i, {});
    }
    for (int i = 1; i <= n; ++i)
        for (int J = i + 1; J <= n; ++J) {
            std::function<void(int, std::map<int, S>)> r3;
            std::function<void(int, std::map<int, S>, std::map<int, S>)> r2;
            auto term = [&](std::map<int, S> c3, std::map<int, S> c2) {
                std::map<int, std::vector<S>> drop;
                for (auto& [q, x] : c3) drop[q].push_back(x);
                for (auto& [q, x] : c2) drop[q].push_back(x);
                auto lowI = lowered(drop);
                auto III = c3;
                III[n] = v3;
                auto II = c2;
                II[n] = v2;
                auto lowIII = lowI;
                for (int l = 1; l < n; ++l)
                    if (II.count(l)) lowIII[l - 1].push_back(II[l]);
                auto vnIII = vnI;
                vnIII.push_back(v2);
                S c(1);
                for (int k = i + 1; k < J; ++k) c *= gln_lambda(m, k, III[k - 1], lowI, vnI) * inv(III[k - 1] - III[k]);
                c *= gln_lambda(m, J, III[J - 1], lowI, vnI);
                for (int k = J + 1; k <= n; ++k)
                    c *= gln_lambda(m, k, II[k - 1], lowI, vnI) * gln_lambda(m, k, III[k - 1], lowIII, vnIII) *
                         inv((II[k - 1] - II[k]) * (III[k - 1] - III[k]));
                emit(c * fp(III[J - 1], II[J]) * inv(III[J - 1] - III[J]), lowI, {n - i + 1, n - J + 1});
                emit(c * inv(III[J - 1] - II[J]), lowI, {n - J + 1, n - i + 1});
            };
            r3 = [&](int l, std::map<int, S> c3) {
                if (l == n) return r2(J, c3, {});
                for (auto& x : g.lower[l - 1]) {
                    auto nx = c3;
                    nx[l] = x;
                    r3(l + 1, nx);
                }
            };
            r2 = [&](int l, std::map<int, S> c3, std::map<int, S> c2) {
                if (l == n) return term(c3, c2);
                for (auto& x : g.lower[l - 1]) {
                    if (c3.count(l) && c3[l] == x) continue;
                    auto nx = c2;
                    nx[l] = x;
                    r2(l + 1, c3, nx);
                }
            };
            r3(i, {});
        }
    return acc;
}

}  // namespace twy
