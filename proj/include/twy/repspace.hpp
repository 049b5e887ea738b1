#pragma once

#include <string>
#include <vector>

#include "twy/scalars.hpp"
#include "twy/tensor.hpp"

namespace twy {

struct InvalidSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BoundaryKind { Trivial, Vector };
enum class Reading { Amended, Strict };

template <class S>
struct ModelSpec {
    int sign = 1;
    int N = 2;
    S rho{0};
    std::vector<S> cs;
    BoundaryKind boundary = BoundaryKind::Trivial;
    std::vector<S> eps;  // twist, length nh; empty means all ones

    int n() const { return N / 2; }
    int nh() const { return N / 2 + N % 2; }
    int ell() const { return int(cs.size()); }
    int bar(int i) const { return N - i + 1; }
    int theta(int i) const { return (sign > 0 || 2 * i > N) ? 1 : -1; }
    int alpha(int i) const { return i <= nh() ? i : i + n() - nh(); }
    S twist(int k) const { return eps.empty() ? S(1) : eps.at(k - 1); }

    void validate() const {
        if (N < 2) throw InvalidSpec("N must be at least 2");
        if (sign != 1 && sign != -1) throw InvalidSpec("sign must be +1 or -1");
        if (sign < 0 && N % 2) throw InvalidSpec("symplectic case needs even N");
        for (size_t i = 0; i < cs.size(); ++i)
            for (size_t j = i + 1; j < cs.size(); ++j)
                if (cs[i] == cs[j]) throw InvalidSpec("inhomogeneities must be distinct");
        if (!eps.empty() && int(eps.size()) != nh()) throw InvalidSpec("twist must have nh entries");
        for (auto& e : eps)
            if (is_zero(e)) throw InvalidSpec("twist entries must be nonzero");
    }

    std::string site_leg(int i) const { return "s" + std::to_string(i); }
    static std::string boundary_leg() { return "bd"; }
    int boundary_dim() const { return boundary == BoundaryKind::Vector ? N : 1; }

    LegDims quantum_legs() const {
        LegDims r;
        for (int i = 1; i <= ell(); ++i) r.emplace_back(site_leg(i), N);
        r.emplace_back(boundary_leg(), boundary_dim());
        return r;
    }
    std::vector<std::string> quantum_leg_names() const {
        std::vector<std::string> r;
        for (auto& [l, d] : quantum_legs()) r.push_back(l);
        return r;
    }
};

inline ModelSpec<Cplx> to_float(const ModelSpec<GaussRat>& m) {
    ModelSpec<Cplx> r;
    r.sign = m.sign;
    r.N = m.N;
    r.rho = m.rho.to_complex();
    for (auto& c : m.cs) r.cs.push_back(c.to_complex());
    r.boundary = m.boundary;
    for (auto& e : m.eps) r.eps.push_back(e.to_complex());
    return r;
}

template <class S>
struct QuantumSpace {
    LegDims legs;
    std::vector<LegRole> roles;
    Vec<S> eta;
};

template <class S>
QuantumSpace<S> build_quantum_space(const ModelSpec<S>& m) {
    m.validate();
    QuantumSpace<S> q;
    q.legs = m.quantum_legs();
    for (int i = 0; i < m.ell(); ++i) q.roles.push_back(LegRole::Site);
    q.roles.push_back(LegRole::Boundary);
    q.eta = Vec<S>::basis(q.legs, Key(q.legs.size(), 1));
    return q;
}

// f_ij on the boundary vector representation: E_ij - theta_i theta_j E_{jbar ibar}.
template <class S>
std::vector<std::pair<int, int>> boundary_f(const ModelSpec<S>& m, int i, int j, int x) {
    std::vector<std::pair<int, int>> out;
    if (j == x) out.emplace_back(i, 1);
    if (m.bar(i) == x) out.emplace_back(m.bar(j), -m.theta(i) * m.theta(j));
    return out;
}

// Weight of the boundary highest vector, read from the f_ii action.
template <class S>
int boundary_weight(const ModelSpec<S>& m, int i) {
    if (m.boundary == BoundaryKind::Trivial) return 0;
    int w = 0;
    for (auto [y, c] : boundary_f(m, i, i, 1))
        if (y == 1) w += c;
    return w;
}

template <class S>
S mu_weight(const ModelSpec<S>& m, int i, const S& u, Reading reading = Reading::Amended) {
    S w = u + (m.rho + S(m.sign)) * inv(S(2));
    S r = (w - S(boundary_weight(m, i))) * inv(w);
    S lam(i == 1 ? 1 : 0);
    S ut = tilde(u, m.rho);
    for (auto& c : m.cs) {
        r *= (u - c - lam) * inv(u - c);
        if (reading == Reading::Strict) r *= (ut - c - lam) * inv(ut - c);
    }
    return r;
}

}  // namespace twy
