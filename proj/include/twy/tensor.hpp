#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "twy/scalars.hpp"

namespace twy {

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownLeg : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Key = std::vector<int>;
using LegDims = std::vector<std::pair<std::string, int>>;

enum class LegRole { Auxiliary, Site, Boundary };

// Indices are 1-based; keys are big-endian in leg order.
template <class S>
struct Vec {
    std::vector<std::string> legs;
    std::vector<int> dims;
    std::map<Key, S> data;

    Vec() = default;
    explicit Vec(const LegDims& ld) {
        for (auto& [l, d] : ld) {
            legs.push_back(l);
            dims.push_back(d);
        }
    }
    static Vec basis(const LegDims& ld, const Key& idx) {
        Vec v(ld);
        v.data[idx] = S(1);
        return v;
    }

    int pos(const std::string& leg) const {
        for (size_t i = 0; i < legs.size(); ++i)
            if (legs[i] == leg) return int(i);
        return -1;
    }
    bool has(const std::string& leg) const { return pos(leg) >= 0; }
    int dim(const std::string& leg) const {
        int p = pos(leg);
        if (p < 0) throw UnknownLeg(leg);
        return dims[p];
    }
    LegDims layout() const {
        LegDims r;
        for (size_t i = 0; i < legs.size(); ++i) r.emplace_back(legs[i], dims[i]);
        return r;
    }
    bool is_zero() const { return data.empty(); }

    Vec scaled(const S& c) const {
        Vec r;
        r.legs = legs;
        r.dims = dims;
        if (is_zero_scalar(c)) return r;
        for (auto& [k, x] : data) r.data.emplace(k, x * c);
        return r;
    }

    Vec reordered(const std::vector<std::string>& order) const {
        if (order.size() != legs.size()) throw DimensionMismatch("reorder: leg sets differ");
        std::vector<int> p;
        Vec r;
        for (auto& l : order) {
            int i = pos(l);
            if (i < 0) throw UnknownLeg(l);
            p.push_back(i);
            r.legs.push_back(l);
            r.dims.push_back(dims[i]);
        }
        Key nk(p.size());
        for (auto& [k, x] : data) {
            for (size_t i = 0; i < p.size(); ++i) nk[i] = k[p[i]];
            r.data.emplace(nk, x);
        }
        return r;
    }

    Vec& axpy(const S& c, const Vec& o) {
        if (legs.empty() && data.empty()) {
            legs = o.legs;
            dims = o.dims;
        }
        if (o.legs == legs) {
            merge(c, o);
        } else {
            merge(c, o.reordered(legs));
        }
        return *this;
    }
    Vec& operator+=(const Vec& o) { return axpy(S(1), o); }
    Vec& operator-=(const Vec& o) { return axpy(S(-1), o); }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator+(Vec a, const Vec& b) { return a += b; }

    double max_abs() const {
        double m = 0;
        for (auto& [k, x] : data) m = std::max(m, magnitude(x));
        return m;
    }

    std::string key_str(const Key& k) const {
        std::string s;
        for (size_t i = 0; i < k.size(); ++i) s += (i ? "," : "") + std::to_string(k[i]);
        return s;
    }

private:
    void merge(const S& c, const Vec& w) {
        for (auto& [k, x] : w.data) {
            S add = x * c;
            auto it = data.find(k);
            if (it == data.end()) {
                if (!is_zero_scalar(add)) data.emplace(k, std::move(add));
            } else {
                it->second += add;
                if (is_zero_scalar(it->second)) data.erase(it);
            }
        }
    }
    static bool is_zero_scalar(const S& x) { return twy::is_zero(x); }
};

template <class S>
class Emit {
public:
    Emit(std::map<Key, S>& out, size_t nrest, size_t nout) : out_(out), key_(nrest + nout), nrest_(nrest) {}

    void reset(const Key& src, const std::vector<int>& prest, const S* coef) {
        for (size_t i = 0; i < nrest_; ++i) key_[i] = src[prest[i]];
        coef_ = coef;
    }
    void operator()(std::initializer_list<int> o, const S& c) { put(o.begin(), c); }
    void put(const int* o, const S& c) {
        if (is_zero(c)) return;
        for (size_t i = nrest_; i < key_.size(); ++i) key_[i] = o[i - nrest_];
        S add = c * *coef_;
        auto it = out_.find(key_);
        if (it == out_.end())
            out_.emplace(key_, std::move(add));
        else {
            it->second += add;
            if (is_zero(it->second)) out_.erase(it);
        }
    }
    void put(const Key& o, const S& c) { put(o.data(), c); }

private:
    std::map<Key, S>& out_;
    Key key_;
    size_t nrest_;
    const S* coef_ = nullptr;
};

// Linear map acting on legs `in`, producing legs `out` (appended after the untouched legs).
// fn(in_index, emit) calls emit({out_index...}, coefficient).
template <class S, class F>
Vec<S> local(const Vec<S>& v, const std::vector<std::string>& in, const LegDims& out, F&& fn) {
    std::vector<int> pin, prest;
    for (auto& l : in) {
        int p = v.pos(l);
        if (p < 0) throw UnknownLeg(l);
        pin.push_back(p);
    }
    Vec<S> r;
    for (size_t i = 0; i < v.legs.size(); ++i) {
        if (std::find(pin.begin(), pin.end(), int(i)) != pin.end()) continue;
        prest.push_back(int(i));
        r.legs.push_back(v.legs[i]);
        r.dims.push_back(v.dims[i]);
    }
    for (auto& [l, d] : out) {
        if (r.has(l)) throw DimensionMismatch("leg already present: " + l);
        r.legs.push_back(l);
        r.dims.push_back(d);
    }
    Emit<S> e(r.data, prest.size(), out.size());
    Key kin(pin.size());
    for (auto& [k, x] : v.data) {
        for (size_t i = 0; i < pin.size(); ++i) kin[i] = k[pin[i]];
        e.reset(k, prest, &x);
        fn(kin, e);
    }
    return r;
}

template <class S>
Vec<S> add_leg(const Vec<S>& v, const std::string& leg, int dim, int idx) {
    return local(v, {}, {{leg, dim}}, [&](const Key&, Emit<S>& e) { e({idx}, S(1)); });
}

template <class S>
Vec<S> take_component(const Vec<S>& v, const std::string& leg, int idx) {
    return local(v, {leg}, {}, [&](const Key& k, Emit<S>& e) {
        if (k[0] == idx) e.put(static_cast<const int*>(nullptr), S(1));
    });
}

template <class S>
Vec<S> relabel(const Vec<S>& v, const std::string& from, const std::string& to) {
    Vec<S> r = v;
    int p = r.pos(from);
    if (p < 0) throw UnknownLeg(from);
    r.legs[p] = to;
    return r;
}

template <class S>
Vec<S> embed_leg(const Vec<S>& v, const std::string& from, const std::string& to, int big) {
    return local(v, {from}, {{to, big}}, [](const Key& k, Emit<S>& e) { e({k[0]}, S(1)); });
}

template <class S>
Vec<S> project_leg(const Vec<S>& v, const std::string& from, const std::string& to, int small) {
    return local(v, {from}, {{to, small}}, [small](const Key& k, Emit<S>& e) {
        if (k[0] <= small) e({k[0]}, S(1));
    });
}

// ---- elementary two-leg actions (legs a, b of dimension k) ----

template <class S>
Vec<S> act_p(const Vec<S>& v, const std::string& a, const std::string& b) {
    int k = v.dim(a);
    return local(v, {a, b}, {{a, k}, {b, k}}, [](const Key& x, Emit<S>& e) { e({x[1], x[0]}, S(1)); });
}

template <class S>
Vec<S> act_q(const Vec<S>& v, const std::string& a, const std::string& b) {
    int k = v.dim(a);
    return local(v, {a, b}, {{a, k}, {b, k}}, [k](const Key& x, Emit<S>& e) {
        if (k - x[0] + 1 != x[1]) return;
        for (int p = 1; p <= k; ++p) e({p, k - p + 1}, S(1));
    });
}

template <class S>
Vec<S> act_r(const Vec<S>& v, const std::string& a, const std::string& b, const S& u) {
    int k = v.dim(a);
    S c = -inv(u);
    return local(v, {a, b}, {{a, k}, {b, k}}, [&](const Key& x, Emit<S>& e) {
        e({x[0], x[1]}, S(1));
        e({x[1], x[0]}, c);
    });
}

// I - u^{-1} Q^theta where Q^theta = sum theta_i theta_j E_ij (x) E_{ibar jbar}; theta empty means all +1.
template <class S>
Vec<S> act_rq(const Vec<S>& v, const std::string& a, const std::string& b, const S& u,
              const std::vector<int>& theta = {}) {
    int k = v.dim(a);
    S c = -inv(u);
    return local(v, {a, b}, {{a, k}, {b, k}}, [&](const Key& x, Emit<S>& e) {
        e({x[0], x[1]}, S(1));
        if (k - x[0] + 1 != x[1]) return;
        for (int p = 1; p <= k; ++p) {
            int t = theta.empty() ? 1 : theta[p] * theta[x[0]];
            e({p, k - p + 1}, t > 0 ? c : -c);
        }
    });
}

// I - x^{-1} Q restricted to V_b(kb) (x) V_a(ka), bars taken in dimension nbar.
template <class S>
Vec<S> act_rq_restricted(const Vec<S>& v, const std::string& b, const std::string& a, int kb, int ka, int nbar,
                         const S& x) {
    S c = -inv(x);
    return local(v, {b, a}, {{b, kb}, {a, ka}}, [&](const Key& k, Emit<S>& e) {
        e({k[0], k[1]}, S(1));
        if (nbar - k[0] + 1 != k[1]) return;
        for (int p = 1; p <= nbar; ++p) {
            int pb = nbar - p + 1;
            if (p <= kb && pb <= ka) e({p, pb}, c);
        }
    });
}

// ---- explicit sparse operators ----

template <class S>
struct Op {
    std::vector<std::string> legs;
    std::vector<int> dims;
    std::map<std::pair<Key, Key>, S> entries;

    LegDims layout() const {
        LegDims r;
        for (size_t i = 0; i < legs.size(); ++i) r.emplace_back(legs[i], dims[i]);
        return r;
    }
    int pos(const std::string& l) const {
        for (size_t i = 0; i < legs.size(); ++i)
            if (legs[i] == l) return int(i);
        return -1;
    }
    void add(const Key& row, const Key& col, const S& c) {
        if (is_zero(c)) return;
        auto key = std::make_pair(row, col);
        auto it = entries.find(key);
        if (it == entries.end())
            entries.emplace(key, c);
        else {
            it->second += c;
            if (is_zero(it->second)) entries.erase(it);
        }
    }
    bool operator==(const Op& o) const { return legs == o.legs && dims == o.dims && entries == o.entries; }

    std::string dump() const {
        std::ostringstream os;
        auto ks = [](const Key& k) {
            std::string s;
            for (size_t i = 0; i < k.size(); ++i) s += (i ? "," : "") + std::to_string(k[i]);
            return s;
        };
        for (auto& [rc, x] : entries) os << ks(rc.first) << " | " << ks(rc.second) << " | " << to_string(x) << "\n";
        return os.str();
    }
};

inline void for_each_index(const std::vector<int>& dims, const std::function<void(const Key&)>& f) {
    Key k(dims.size(), 1);
    if (dims.empty()) {
        f(k);
        return;
    }
    while (true) {
        f(k);
        size_t i = dims.size();
        while (i > 0) {
            --i;
            if (++k[i] <= dims[i]) break;
            k[i] = 1;
            if (i == 0) return;
        }
    }
}

// Matrix of a linear map on the given legs, built column by column.
template <class S>
Op<S> materialize(const LegDims& ld, const std::function<Vec<S>(const Vec<S>&)>& f) {
    Op<S> op;
    std::vector<std::string> names;
    for (auto& [l, d] : ld) {
        op.legs.push_back(l);
        op.dims.push_back(d);
        names.push_back(l);
    }
    for_each_index(op.dims, [&](const Key& col) {
        Vec<S> w = f(Vec<S>::basis(ld, col)).reordered(names);
        for (auto& [row, x] : w.data) op.add(row, col, x);
    });
    return op;
}

template <class S>
Op<S> two_leg_op(const std::string& a, const std::string& b, int k,
                 const std::function<Vec<S>(const Vec<S>&)>& f) {
    return materialize<S>({{a, k}, {b, k}}, f);
}

template <class S>
Op<S> build_identity(const std::string& a, const std::string& b, int k) {
    return two_leg_op<S>(a, b, k, [](const Vec<S>& v) { return v; });
}
template <class S>
Op<S> build_p(const std::string& a, const std::string& b, int k) {
    return two_leg_op<S>(a, b, k, [&](const Vec<S>& v) { return act_p(v, a, b); });
}
template <class S>
Op<S> build_q(const std::string& a, const std::string& b, int k) {
    return two_leg_op<S>(a, b, k, [&](const Vec<S>& v) { return act_q(v, a, b); });
}
template <class S>
Op<S> build_r(const std::string& a, const std::string& b, int k, const S& u) {
    if (is_zero(u)) throw PoleError("R(u) at u = 0");
    return two_leg_op<S>(a, b, k, [&](const Vec<S>& v) { return act_r(v, a, b, u); });
}
template <class S>
Op<S> build_r_tilde(const std::string& a, const std::string& b, int k, const S& u) {
    if (is_zero(u)) throw PoleError("R~(u) at u = 0");
    return two_leg_op<S>(a, b, k, [&](const Vec<S>& v) { return act_rq(v, a, b, u); });
}
template <class S>
Op<S> build_r_check(const std::string& a, const std::string& b, int k, const S& u) {
    if (is_zero(u) || is_zero(u - S(1))) throw PoleError("check R(u) at u in {0,1}");
    S c = u * inv(u - S(1));
    return two_leg_op<S>(a, b, k, [&](const Vec<S>& v) { return act_p(act_r(v, a, b, u), a, b).scaled(c); });
}

// theta is 1-based (theta[0] unused).
inline std::vector<int> theta_signs(int sign, int k) {
    std::vector<int> t(k + 1, 1);
    if (sign < 0)
        for (int i = 1; i <= k; ++i) t[i] = (2 * i > k) ? 1 : -1;
    return t;
}

// Entrywise transposition on one leg: E_ij -> theta_i theta_j E_{jbar ibar}.
template <class S>
Op<S> transpose_leg(const Op<S>& op, const std::string& leg, const std::vector<int>& theta = {}) {
    int p = op.pos(leg);
    if (p < 0) throw UnknownLeg(leg);
    int k = op.dims[p];
    Op<S> r;
    r.legs = op.legs;
    r.dims = op.dims;
    for (auto& [rc, x] : op.entries) {
        Key row = rc.first, col = rc.second;
        int i = row[p], j = col[p];
        row[p] = k - j + 1;
        col[p] = k - i + 1;
        int t = theta.empty() ? 1 : theta[i] * theta[j];
        r.add(row, col, t > 0 ? x : -x);
    }
    return r;
}

template <class S>
Op<S> build_r_hat(const std::string& a, const std::string& b, int k, const S& u, const std::vector<int>& theta) {
    return transpose_leg(build_r<S>(a, b, k, u), b, theta);
}

template <class S>
Vec<S> apply(const Op<S>& op, const Vec<S>& v) {
    for (size_t i = 0; i < op.legs.size(); ++i) {
        int p = v.pos(op.legs[i]);
        if (p < 0) throw DimensionMismatch("operator leg " + op.legs[i] + " not in vector");
        if (v.dims[p] != op.dims[i]) throw DimensionMismatch("dimension of leg " + op.legs[i]);
    }
    std::map<Key, std::vector<std::pair<const Key*, const S*>>> bycol;
    for (auto& [rc, x] : op.entries) bycol[rc.second].push_back({&rc.first, &x});
    Vec<S> r = local(v, op.legs, op.layout(), [&](const Key& k, Emit<S>& e) {
        auto it = bycol.find(k);
        if (it == bycol.end()) return;
        for (auto& [row, x] : it->second) e.put(*row, *x);
    });
    return r.reordered(v.legs);
}

template <class S>
LegDims union_layout(const Op<S>& a, const Op<S>& b) {
    LegDims ld = a.layout();
    for (size_t i = 0; i < b.legs.size(); ++i) {
        int p = a.pos(b.legs[i]);
        if (p < 0)
            ld.emplace_back(b.legs[i], b.dims[i]);
        else if (a.dims[p] != b.dims[i])
            throw DimensionMismatch("compose: leg " + b.legs[i]);
    }
    return ld;
}

// Operator product a*b (b acts first).
template <class S>
Op<S> compose(const Op<S>& a, const Op<S>& b) {
    return materialize<S>(union_layout(a, b), [&](const Vec<S>& v) { return apply(a, apply(b, v)); });
}

template <class S>
Op<S> operator+(const Op<S>& a, const Op<S>& b) {
    return materialize<S>(union_layout(a, b), [&](const Vec<S>& v) { return apply(a, v) + apply(b, v); });
}

template <class S>
Op<S> scaled(const Op<S>& a, const S& c) {
    Op<S> r = a;
    r.entries.clear();
    for (auto& [rc, x] : a.entries) r.add(rc.first, rc.second, x * c);
    return r;
}

template <class S>
Op<S> partial_trace(const Op<S>& op, const std::vector<std::string>& traced) {
    std::vector<int> tp, kp;
    for (auto& l : traced) {
        int p = op.pos(l);
        if (p < 0) throw UnknownLeg(l);
        tp.push_back(p);
    }
    Op<S> r;
    for (size_t i = 0; i < op.legs.size(); ++i)
        if (std::find(tp.begin(), tp.end(), int(i)) == tp.end()) {
            kp.push_back(int(i));
            r.legs.push_back(op.legs[i]);
            r.dims.push_back(op.dims[i]);
        }
    for (auto& [rc, x] : op.entries) {
        bool diag = true;
        for (int p : tp) diag = diag && rc.first[p] == rc.second[p];
        if (!diag) continue;
        Key row, col;
        for (int p : kp) {
            row.push_back(rc.first[p]);
            col.push_back(rc.second[p]);
        }
        r.add(row, col, x);
    }
    return r;
}

// First entry where two vectors differ; empty when equal.
template <class S>
std::optional<std::string> first_difference(const Vec<S>& a, const Vec<S>& b) {
    Vec<S> d = a - b;
    if (d.is_zero()) return std::nullopt;
    auto& [k, x] = *d.data.begin();
    Vec<S> ar = a, br = b.reordered(a.legs);
    auto get = [&](const Vec<S>& v) {
        auto it = v.data.find(k);
        return it == v.data.end() ? S(0) : it->second;
    };
    std::string legs;
    for (size_t i = 0; i < a.legs.size(); ++i) legs += (i ? "," : "") + a.legs[i];
    return "[" + legs + "]=(" + a.key_str(k) + "): lhs " + to_string(get(ar)) + " rhs " + to_string(get(br));
}

// Float analogue: largest entry of a - b must stay below tol relative to the larger norm.
template <class S>
std::optional<std::string> approx_difference(const Vec<S>& a, const Vec<S>& b, double tol) {
    Vec<S> d = a - b;
    double scale = std::max({1.0, a.max_abs(), b.max_abs()});
    const Key* worst = nullptr;
    double w = 0;
    for (auto& [k, x] : d.data)
        if (magnitude(x) > w) {
            w = magnitude(x);
            worst = &k;
        }
    if (!worst || w <= tol * scale) return std::nullopt;
    Key k = *worst;
    Vec<S> br = b.reordered(a.legs);
    auto get = [&](const Vec<S>& v) {
        auto it = v.data.find(k);
        return it == v.data.end() ? S(0) : it->second;
    };
    std::string legs;
    for (size_t i = 0; i < a.legs.size(); ++i) legs += (i ? "," : "") + a.legs[i];
    return "[" + legs + "]=(" + a.key_str(k) + "): lhs " + to_string(get(a)) + " rhs " + to_string(get(br)) +
           " rel " + std::to_string(w / scale);
}

// Canonical text form: header line with the legs, then one "key value" line per nonzero entry.
template <class S>
std::string serialize(const Vec<S>& v) {
    std::ostringstream os;
    os << "legs";
    for (size_t i = 0; i < v.legs.size(); ++i) os << ' ' << v.legs[i] << ':' << v.dims[i];
    os << '\n';
    for (auto& [k, x] : v.data) os << v.key_str(k) << ' ' << to_string(x) << '\n';
    return os.str();
}

}  // namespace twy
