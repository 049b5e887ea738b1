#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "twy/repspace.hpp"
#include "twy/tensor.hpp"

namespace twy {

struct LevelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Block { A, B, C, D };

template <class S>
class Monodromy {
public:
    explicit Monodromy(ModelSpec<S> spec) : m_(std::move(spec)) { m_.validate(); }
    const ModelSpec<S>& spec() const { return m_; }

    // Lax operator I - u^{-1} P on (aux a, site).
    Vec<S> lax(const Vec<S>& v, const std::string& a, const std::string& site, const S& u) const {
        int N = m_.N;
        S c = -inv(u);
        return local(v, {a, site}, {{a, N}, {site, N}}, [&](const Key& k, Emit<S>& e) {
            e({k[0], k[1]}, S(1));
            e({k[1], k[0]}, c);
        });
    }

    // Hat Lax operator: entry (p,q) = theta_{qbar pbar} (delta_pq - u^{-1} e_{pbar qbar}).
    Vec<S> lax_hat(const Vec<S>& v, const std::string& a, const std::string& site, const S& u) const {
        int N = m_.N;
        S c = -inv(u);
        return local(v, {a, site}, {{a, N}, {site, N}}, [&](const Key& k, Emit<S>& e) {
            int q = k[0], x = k[1];
            e({q, x}, S(1));
            if (m_.bar(q) != x) return;
            for (int p = 1; p <= N; ++p) {
                int t = m_.theta(m_.bar(q)) * m_.theta(m_.bar(p));
                e({p, m_.bar(p)}, t > 0 ? c : -c);
            }
        });
    }

    // Boundary factor: entry (p,q) = delta_pq - w^{-1} f_qp.
    Vec<S> lax_boundary(const Vec<S>& v, const std::string& a, const S& w) const {
        if (m_.boundary == BoundaryKind::Trivial) return v;
        int N = m_.N;
        S c = -inv(w);
        const std::string bd = m_.boundary_leg();
        return local(v, {a, bd}, {{a, N}, {bd, N}}, [&](const Key& k, Emit<S>& e) {
            int q = k[0], x = k[1];
            e({q, x}, S(1));
            for (int p = 1; p <= N; ++p)
                for (auto [y, s] : boundary_f(m_, q, p, x)) e({p, y}, s > 0 ? c : -c);
        });
    }

    // S^{(N)}_a(u) on an N-dimensional auxiliary leg.
    Vec<S> act_full(const Vec<S>& v, const std::string& a, const S& u) const {
        S ut = tilde(u, m_.rho);
        Vec<S> w = v;
        for (int i = 1; i <= m_.ell(); ++i) w = lax_hat(w, a, m_.site_leg(i), ut - m_.cs[i - 1]);
        w = lax_boundary(w, a, u + (m_.rho + S(m_.sign)) * inv(S(2)));
        for (int i = m_.ell(); i >= 1; --i) w = lax(w, a, m_.site_leg(i), u - m_.cs[i - 1]);
        return w;
    }

    // s_ij(u) in N-indexing.
    Vec<S> s(int i, int j, const S& u, const Vec<S>& v) const {
        static const std::string tmp = "__s";
        Vec<S> w = act_full(add_leg(v, tmp, m_.N, j), tmp, u);
        return take_component(w, tmp, i);
    }

    // Doubled generating matrix on a 2nh-dimensional leg.
    Vec<S> act(const Vec<S>& v, const std::string& a, const S& u) const {
        int K = 2 * m_.nh();
        static const std::string tmp = "__S2";
        Vec<S> w = local(v, {a}, {{tmp, m_.N}}, [&](const Key& k, Emit<S>& e) { e({m_.alpha(k[0])}, S(1)); });
        w = act_full(w, tmp, u);
        return local(w, {tmp}, {{a, K}}, [&](const Key& k, Emit<S>& e) {
            for (int p = 1; p <= K; ++p)
                if (m_.alpha(p) == k[0]) e({p}, S(1));
        });
    }

    // Entry (p,q) of the doubled matrix: s_{alpha(p) alpha(q)}(u).
    Vec<S> s2(int p, int q, const S& u, const Vec<S>& v) const { return s(m_.alpha(p), m_.alpha(q), u, v); }

    // Block X of S^{(2nh)}(u) on an nh-dimensional auxiliary leg.
    Vec<S> act_block(Block which, const Vec<S>& v, const std::string& a, const S& u) const {
        int nh = m_.nh();
        int ro = (which == Block::C || which == Block::D) ? nh : 0;
        int co = (which == Block::B || which == Block::D) ? nh : 0;
        static const std::string tmp = "__blk";
        Vec<S> w = local(v, {a}, {{tmp, 2 * nh}}, [&](const Key& k, Emit<S>& e) { e({k[0] + co}, S(1)); });
        w = act(w, tmp, u);
        return local(w, {tmp}, {{a, nh}}, [&](const Key& k, Emit<S>& e) {
            if (k[0] > ro && k[0] <= ro + nh) e({k[0] - ro}, S(1));
        });
    }

    // Upper-left dim x dim corner of S^{(N)}(u).
    Vec<S> act_corner(const Vec<S>& v, const std::string& a, const S& u, int dim) const {
        static const std::string tmp = "__cor";
        Vec<S> w = embed_leg(v, a, tmp, m_.N);
        w = act_full(w, tmp, u);
        return project_leg(w, tmp, a, dim);
    }

private:
    ModelSpec<S> m_;
};

// Operator-valued matrix whose entries are built on demand and memoized.
template <class S>
class OperatorMatrix {
public:
    using Action = std::function<Vec<S>(int, int, const Vec<S>&)>;
    OperatorMatrix(int dim, LegDims space, Action act)
        : dim_(dim), space_(std::move(space)), act_(std::move(act)), memo_(std::make_shared<Memo>()) {}

    int dim() const { return dim_; }
    const LegDims& space() const { return space_; }
    Vec<S> apply(int i, int j, const Vec<S>& v) const { return act_(i, j, v); }

    const Op<S>& entry(int i, int j) const {
        if (i < 1 || j < 1 || i > dim_ || j > dim_) throw ShapeError("entry out of range");
        std::lock_guard<std::mutex> lock(memo_->mu);
        auto it = memo_->ops.find({i, j});
        if (it != memo_->ops.end()) return it->second;
        Op<S> op = materialize<S>(space_, [&](const Vec<S>& v) { return act_(i, j, v); });
        return memo_->ops.emplace(std::make_pair(i, j), std::move(op)).first->second;
    }

    OperatorMatrix sub(int row0, int col0, int size) const {
        if (row0 + size > dim_ || col0 + size > dim_) throw ShapeError("block does not fit");
        auto act = act_;
        return OperatorMatrix(size, space_, [act, row0, col0](int i, int j, const Vec<S>& v) {
            return act(i + row0, j + col0, v);
        });
    }

private:
    struct Memo {
        std::mutex mu;
        std::map<std::pair<int, int>, Op<S>> ops;
    };
    int dim_;
    LegDims space_;
    Action act_;
    std::shared_ptr<Memo> memo_;
};

template <class S>
OperatorMatrix<S> s_matrix(const ModelSpec<S>& spec, const S& u) {
    auto mono = std::make_shared<Monodromy<S>>(spec);
    return OperatorMatrix<S>(2 * spec.nh(), spec.quantum_legs(),
                             [mono, u](int i, int j, const Vec<S>& v) { return mono->s2(i, j, u, v); });
}

template <class S>
OperatorMatrix<S> block(const OperatorMatrix<S>& opm, Block which) {
    if (opm.dim() % 2) throw ShapeError("block needs an even-dimensional matrix");
    int h = opm.dim() / 2;
    int ro = (which == Block::C || which == Block::D) ? h : 0;
    int co = (which == Block::B || which == Block::D) ? h : 0;
    return opm.sub(ro, co, h);
}

// ---- nested monodromy matrices ----

inline std::string leg_a(int k, int i) { return "a" + std::to_string(k) + "_" + std::to_string(i); }
inline std::string leg_ad(int i) { return "ad" + std::to_string(i); }
inline std::string leg_add(int i) { return "add" + std::to_string(i); }

// Data of the nested chain: roots at levels 1..n-1 (legs a^k_i) and the level-n
// auxiliary spaces with their parameters, listed leftmost first as in T^{(nh)}.
template <class S>
struct NestedSpec {
    std::vector<std::vector<S>> lower;
    std::vector<std::pair<std::string, S>> top;
    bool full_top = false;  // odd N: use [T^{(nh)}]^{(n)} instead of T^{(n)'}
};

template <class S>
class Nested {
public:
    Nested(const Monodromy<S>& mono, NestedSpec<S> ns) : mono_(mono), ns_(std::move(ns)) {}
    const NestedSpec<S>& spec() const { return ns_; }

    // T^{(nh)}_a(v) on an nh-dimensional leg.
    Vec<S> act_hat(const Vec<S>& v, const std::string& a, const S& x) const {
        int nh = mono_.spec().nh();
        Vec<S> w = mono_.act_corner(v, a, x, nh);
        for (auto it = ns_.top.rbegin(); it != ns_.top.rend(); ++it)
            w = act_rq_restricted(w, it->first, a, nh, nh, nh, it->second - x);
        return w;
    }

    // Level-n matrix of dimension n: T^{(nh)} (even), T^{(n)'} or [T^{(nh)}]^{(n)} (odd).
    Vec<S> act_top(const Vec<S>& v, const std::string& a, const S& x) const {
        const auto& m = mono_.spec();
        int n = m.n(), nh = m.nh();
        if (n == nh) return act_hat(v, a, x);
        if (ns_.full_top) {
            static const std::string tmp = "__Tfull";
            Vec<S> w = embed_leg(v, a, tmp, nh);
            w = act_hat(w, tmp, x);
            return project_leg(w, tmp, a, n);
        }
        Vec<S> w = mono_.act_corner(v, a, x, n);
        for (auto it = ns_.top.rbegin(); it != ns_.top.rend(); ++it)
            w = act_rq_restricted(w, it->first, a, nh, n, nh, it->second - x);
        return w;
    }

    // T^{(k)}_a(v) for 2 <= k <= n on a k-dimensional leg.
    Vec<S> act(int k, const Vec<S>& v, const std::string& a, const S& x) const {
        int n = mono_.spec().n();
        if (k < 2 || k > n) throw LevelError("nested level " + std::to_string(k) + " outside 2..n");
        if (k == n) return act_top(v, a, x);
        const std::string tmp = "__T" + std::to_string(k);
        Vec<S> w = embed_leg(v, a, tmp, k + 1);
        w = act(k + 1, w, tmp, x);
        w = project_leg(w, tmp, a, k);
        const auto& uk = ns_.lower.at(k - 1);
        for (size_t i = 0; i < uk.size(); ++i) w = act_rq_restricted(w, leg_a(k, int(i) + 1), a, k, k, k, uk[i] - x);
        return w;
    }

    Vec<S> entry(int k, int p, int q, const S& x, const Vec<S>& v) const {
        const std::string tmp = "__E" + std::to_string(k);
        Vec<S> w = act(k, add_leg(v, tmp, k, q), tmp, x);
        return take_component(w, tmp, p);
    }

    OperatorMatrix<S> matrix(int k, const S& x, const LegDims& space) const {
        auto self = std::make_shared<Nested>(*this);
        return OperatorMatrix<S>(k, space, [self, k, x](int p, int q, const Vec<S>& v) {
            return self->entry(k, p, q, x, v);
        });
    }

private:
    Monodromy<S> mono_;
    NestedSpec<S> ns_;
};

// Level-k vacuum subspace test at the given sample points.
template <class S>
bool vacuum_level_test(const Monodromy<S>& mono, const Vec<S>& vec, int level, const std::vector<S>& points) {
    const auto& m = mono.spec();
    int n = m.n(), nh = m.nh();
    std::vector<std::pair<int, int>> kill;
    for (int i = n + 1; i <= m.N; ++i)
        for (int j = 1; j <= nh; ++j)
            if (i > j) kill.emplace_back(i, j);
    for (int r = 1; r <= level; ++r)
        for (int i = 1; i < n - r + 1; ++i) kill.emplace_back(n - r + 1, i);
    for (auto& u : points)
        for (auto [i, j] : kill)
            if (!mono.s(i, j, u, vec).is_zero()) return false;
    return true;
}

}  // namespace twy
