#include <gtest/gtest.h>

#include "dense.hpp"
#include "twy/monodromy.hpp"

using namespace twy;
using dense::Mat;

namespace {

GaussRat q(long a, long b = 1) { return GaussRat::frac(a, b); }

ModelSpec<GaussRat> model(int sign, int N, BoundaryKind b = BoundaryKind::Trivial) {
    ModelSpec<GaussRat> m;
    m.sign = sign;
    m.N = N;
    m.rho = q(3, 7);
    m.cs = {q(2, 3)};
    m.boundary = b;
    return m;
}

// e_ab on C^N, 1-based.
Mat unit(int N, int a, int b) {
    Mat r(N);
    r(a - 1, b - 1) = GaussRat(1);
    return r;
}

// Dense s_ij(u) on site (x) boundary, built directly from L(u-c) M(w) Lhat(u~-c).
Mat dense_s(const ModelSpec<GaussRat>& m, int i, int j, const GaussRat& u) {
    int N = m.N, B = m.boundary_dim();
    GaussRat c = m.cs[0], ut = tilde(u, m.rho), w = u + (m.rho + GaussRat(m.sign)) / GaussRat(2);
    auto th = [&](int a) { return m.theta(a); };
    auto bar = [&](int a) { return N + 1 - a; };
    auto L = [&](int a, int b) {
        Mat r = dense::scale(unit(N, b, a), -inv(u - c));
        if (a == b) r = r + dense::identity(N);
        return r;
    };
    auto Lhat = [&](int a, int b) {
        Mat r = dense::scale(unit(N, bar(a), bar(b)), GaussRat(-th(bar(a)) * th(bar(b))) * inv(ut - c));
        if (a == b) r = r + dense::identity(N);
        return r;
    };
    auto M = [&](int a, int b) {
        if (m.boundary == BoundaryKind::Trivial) return a == b ? dense::identity(1) : Mat(1);
        // f_ba = E_ba - theta_b theta_a E_{abar bbar}
        Mat f = unit(N, b, a) + dense::scale(unit(N, bar(a), bar(b)), GaussRat(-th(b) * th(a)));
        Mat r = dense::scale(f, -inv(w));
        if (a == b) r = r + dense::identity(N);
        return r;
    };
    Mat s(N * B);
    for (int k = 1; k <= N; ++k)
        for (int l = 1; l <= N; ++l)
            s = s + dense::kron(L(i, k), dense::identity(B)) * dense::kron(dense::identity(N), M(k, l)) *
                        dense::kron(Lhat(l, j), dense::identity(B));
    return s;
}

Mat sparse_s(const Monodromy<GaussRat>& mono, int i, int j, const GaussRat& u) {
    const auto& m = mono.spec();
    int N = m.N, B = m.boundary_dim();
    Mat r(N * B);
    for (int x = 1; x <= N; ++x)
        for (int y = 1; y <= B; ++y) {
            auto out = mono.s(i, j, u, Vec<GaussRat>::basis(m.quantum_legs(), {x, y})).reordered(m.quantum_leg_names());
            for (auto& [k, c] : out.data) r((k[0] - 1) * B + k[1] - 1, (x - 1) * B + y - 1) = c;
        }
    return r;
}

}  // namespace

TEST(Monodromy, EntriesMatchDenseProduct) {
    for (auto [sign, N] : std::vector<std::pair<int, int>>{{1, 2}, {-1, 2}, {1, 3}, {1, 4}, {-1, 4}, {1, 5}})
        for (auto b : {BoundaryKind::Trivial, BoundaryKind::Vector}) {
            auto m = model(sign, N, b);
            Monodromy<GaussRat> mono(m);
            GaussRat u = q(11, 5);
            for (int i = 1; i <= N; ++i)
                for (int j = 1; j <= N; ++j)
                    EXPECT_EQ(sparse_s(mono, i, j, u), dense_s(m, i, j, u)) << sign << " N=" << N << " " << i << j;
        }
}

TEST(Monodromy, ReflectionEquationDense) {
    for (auto [sign, N] : std::vector<std::pair<int, int>>{{1, 2}, {-1, 2}, {1, 4}, {-1, 4}}) {
        auto m = model(sign, N);
        int K = N, D = N;
        auto th = theta_signs(sign, K);
        std::vector<int> t0(th.begin() + 1, th.end());
        auto S1 = [&](const GaussRat& u) {
            Mat r(K * K * D);
            for (int i = 1; i <= K; ++i)
                for (int j = 1; j <= K; ++j)
                    r = r + dense::kron(dense::kron(unit(K, i, j), dense::identity(K)), dense_s(m, i, j, u));
            return r;
        };
        auto S2 = [&](const GaussRat& u) {
            Mat r(K * K * D);
            for (int i = 1; i <= K; ++i)
                for (int j = 1; j <= K; ++j)
                    r = r + dense::kron(dense::kron(dense::identity(K), unit(K, i, j)), dense_s(m, i, j, u));
            return r;
        };
        GaussRat u = q(5, 3), v = q(-4, 7);
        Mat R = dense::kron(dense::r_matrix(K, u - v), dense::identity(D));
        GaussRat x = tilde(v, m.rho) - u;
        Mat Rh = dense::kron(dense::identity(K * K) + dense::scale(dense::qmat(K, t0), -inv(x)), dense::identity(D));
        EXPECT_EQ(R * S1(u) * Rh * S2(v), S2(v) * Rh * S1(u) * R) << sign << " N=" << N;
    }
}

TEST(Monodromy, DoubledAndBlocks) {
    auto m = model(1, 3);
    Monodromy<GaussRat> mono(m);
    EXPECT_EQ(m.nh(), 2);
    EXPECT_EQ(m.alpha(3), 2);
    EXPECT_EQ(m.alpha(4), 3);
    GaussRat u = q(7, 4);
    auto eta = build_quantum_space(m).eta;
    for (int p = 1; p <= 4; ++p)
        for (int qq = 1; qq <= 4; ++qq) {
            auto direct = mono.s(m.alpha(p), m.alpha(qq), u, eta);
            EXPECT_TRUE((mono.s2(p, qq, u, eta) - direct).is_zero());
        }
    // B block entry (r,l) is s2(r, nh+l)
    for (int r = 1; r <= 2; ++r)
        for (int l = 1; l <= 2; ++l) {
            auto w = mono.act_block(Block::B, add_leg(eta, "a", 2, l), "a", u);
            auto got = take_component(w, "a", r);
            EXPECT_TRUE((got - mono.s2(r, 2 + l, u, eta)).is_zero());
        }
}

TEST(Monodromy, InvalidSpecs) {
    auto m = model(-1, 3);
    EXPECT_THROW(Monodromy<GaussRat>{m}, InvalidSpec);
    m = model(1, 3);
    m.cs = {q(1), q(1)};
    EXPECT_THROW(Monodromy<GaussRat>{m}, InvalidSpec);
    m = model(1, 1);
    EXPECT_THROW(Monodromy<GaussRat>{m}, InvalidSpec);
    m = model(1, 4);
    m.eps = {q(1)};
    EXPECT_THROW(Monodromy<GaussRat>{m}, InvalidSpec);
}
