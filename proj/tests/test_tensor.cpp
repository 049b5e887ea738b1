#include <gtest/gtest.h>

#include <random>

#include "dense.hpp"
#include "twy/tensor.hpp"

using namespace twy;

namespace {

GaussRat q(long a, long b = 1) { return GaussRat::frac(a, b); }

std::vector<GaussRat> points(int count, uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_int_distribution<long> num(-20, 20), den(1, 7);
    std::vector<GaussRat> r;
    while (int(r.size()) < count) {
        GaussRat x = GaussRat::frac(num(g), den(g));
        if (!x.is_zero()) r.push_back(x);
    }
    return r;
}

// Three-leg operator from a two-leg action on legs (a,b), materialized on x1,x2,x3.
Op<GaussRat> three(int k, const std::function<Vec<GaussRat>(const Vec<GaussRat>&)>& f) {
    return materialize<GaussRat>({{"x1", k}, {"x2", k}, {"x3", k}}, f);
}

}  // namespace

TEST(Tensor, RMatrixMatchesDense) {
    for (int k : {2, 3, 4})
        for (auto& u : points(3, k)) EXPECT_EQ(dense::from_op(build_r<GaussRat>("a", "b", k, u)), dense::r_matrix(k, u));
}

TEST(Tensor, PermutationAndQ) {
    for (int k = 1; k <= 4; ++k) {
        auto P = dense::from_op(build_p<GaussRat>("a", "b", k));
        auto Q = dense::from_op(build_q<GaussRat>("a", "b", k));
        EXPECT_EQ(P, dense::perm(k));
        EXPECT_EQ(Q, dense::qmat(k));
        EXPECT_EQ(P * P, dense::identity(k * k));
        EXPECT_EQ(Q * Q, dense::scale(Q, GaussRat(k)));
    }
}

TEST(Tensor, YangBaxterDenseOracle) {
    for (int k : {2, 3}) {
        auto pts = points(6, 100 + k);
        for (int s = 0; s < 3; ++s) {
            GaussRat u = pts[2 * s], v = pts[2 * s + 1];
            if ((u - v).is_zero()) continue;
            auto R = [&](const GaussRat& x, int p, int r) { return dense::on_pair(dense::r_matrix(k, x), k, p, r); };
            auto lhs = R(u - v, 0, 1) * R(u, 0, 2) * R(v, 1, 2);
            auto rhs = R(v, 1, 2) * R(u, 0, 2) * R(u - v, 0, 1);
            EXPECT_EQ(lhs, rhs);
            // the sparse engine agrees with the dense product
            auto sparse = three(k, [&](const Vec<GaussRat>& e) {
                return act_r(act_r(act_r(e, "x2", "x3", v), "x1", "x3", u), "x1", "x2", u - v);
            });
            EXPECT_EQ(dense::from_op(sparse), lhs);
        }
    }
}

TEST(Tensor, TransposedRAndThetaSigns) {
    EXPECT_EQ(theta_signs(-1, 4), (std::vector<int>{1, -1, -1, 1, 1}));
    EXPECT_EQ(theta_signs(1, 3), (std::vector<int>{1, 1, 1, 1}));
    for (int sign : {1, -1})
        for (int k : {2, 4}) {
            auto th = theta_signs(sign, k);
            std::vector<int> t0(th.begin() + 1, th.end());
            GaussRat u = q(7, 3);
            auto want = dense::identity(k * k) + dense::scale(dense::qmat(k, t0), -inv(u));
            auto viaact = materialize<GaussRat>({{"a", k}, {"b", k}},
                                                [&](const Vec<GaussRat>& e) { return act_rq(e, "a", "b", u, th); });
            EXPECT_EQ(dense::from_op(viaact), want);
            EXPECT_EQ(dense::from_op(build_r_hat<GaussRat>("a", "b", k, u, th)), want);
        }
}

TEST(Tensor, VectorAlgebra) {
    LegDims ld{{"a", 2}, {"b", 3}};
    auto e = Vec<GaussRat>::basis(ld, {1, 2});
    auto f = Vec<GaussRat>::basis(ld, {2, 3}).scaled(q(1, 2));
    auto s = e + f;
    EXPECT_EQ(s.data.size(), 2u);
    EXPECT_TRUE((s - e - f).is_zero());
    auto r = s.reordered({"b", "a"});
    EXPECT_EQ(r.data.at({3, 2}), q(1, 2));
    EXPECT_EQ(serialize(s), "legs a:2 b:3\n1,2 1\n2,3 1/2\n");
    EXPECT_FALSE(first_difference(s, r).has_value());
    auto d = first_difference(s, e);
    ASSERT_TRUE(d.has_value());
    EXPECT_NE(d->find("lhs 1/2 rhs 0"), std::string::npos);
    EXPECT_THROW(e.dim("zz"), UnknownLeg);
}

TEST(Tensor, LegHelpers) {
    LegDims ld{{"a", 3}};
    auto e = Vec<GaussRat>::basis(ld, {2});
    auto w = add_leg(e, "b", 4, 3);
    EXPECT_EQ(w.data.at({2, 3}), GaussRat(1));
    EXPECT_TRUE(take_component(w, "b", 1).is_zero());
    EXPECT_EQ(take_component(w, "b", 3).data.at({2}), GaussRat(1));
    auto big = embed_leg(e, "a", "c", 5);
    EXPECT_EQ(big.dim("c"), 5);
    EXPECT_EQ(project_leg(big, "c", "a", 3).data, e.data);
    EXPECT_TRUE(project_leg(embed_leg(Vec<GaussRat>::basis(ld, {3}), "a", "c", 5), "c", "a", 2).is_zero());
}

TEST(Tensor, ComposeTraceFloat) {
    GaussRat u = q(5, 2);
    auto R = build_r<GaussRat>("a", "b", 3, u);
    auto RR = compose(R, R);
    EXPECT_EQ(dense::from_op(RR), dense::r_matrix(3, u) * dense::r_matrix(3, u));
    // tr_b (I - P/u) = 3 I - I/u on leg a
    auto t = partial_trace(R, {"b"});
    EXPECT_EQ(dense::from_op(t), dense::scale(dense::identity(3), GaussRat(3) - inv(u)));
    Vec<Cplx> x = Vec<Cplx>::basis({{"a", 2}}, {1}), y = x.scaled(Cplx(1 + 1e-12));
    EXPECT_FALSE(approx_difference(x, y, 1e-9).has_value());
    EXPECT_TRUE(approx_difference(x, y.scaled(Cplx(2)), 1e-9).has_value());
}
