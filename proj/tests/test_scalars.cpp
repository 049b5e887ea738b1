#include <gtest/gtest.h>

#include <random>

#include "twy/scalars.hpp"

using namespace twy;

namespace {

GaussRat q(long a, long b = 1) { return GaussRat::frac(a, b); }

GaussRat random_gauss(std::mt19937_64& g) {
    std::uniform_int_distribution<long> num(-30, 30), den(1, 9);
    return GaussRat::frac(num(g), den(g), num(g), den(g));
}

}  // namespace

TEST(Scalars, CanonicalEquality) {
    EXPECT_EQ(q(2, 4), q(1, 2));
    EXPECT_EQ(q(-3, -6), q(1, 2));
    EXPECT_EQ(q(1, 2).str(), "1/2");
    EXPECT_NE(q(1, 2), GaussRat::frac(1, 2, 1, 3));
}

TEST(Scalars, FieldOperations) {
    GaussRat a = GaussRat::frac(1, 2, 1, 3), b = GaussRat::frac(-2, 5, 3, 7);
    // (a+bi)(c+di) = (ac-bd) + (ad+bc)i
    GaussRat prod = GaussRat(mpq_class(1, 2) * mpq_class(-2, 5) - mpq_class(1, 3) * mpq_class(3, 7),
                             mpq_class(1, 2) * mpq_class(3, 7) + mpq_class(1, 3) * mpq_class(-2, 5));
    EXPECT_EQ(a * b, prod);
    EXPECT_EQ((a / b) * b, a);
    EXPECT_EQ(a - a, GaussRat(0));
    EXPECT_THROW(a / GaussRat(0), PoleError);
    EXPECT_THROW(inv(GaussRat(0)), PoleError);
    EXPECT_THROW(inv(Cplx(0)), PoleError);
}

TEST(Scalars, ParseRoundTrip) {
    std::mt19937_64 g(7);
    for (int i = 0; i < 20; ++i) {
        GaussRat x = random_gauss(g);
        EXPECT_EQ(GaussRat::parse(x.str()), x) << x.str();
    }
    EXPECT_EQ(GaussRat::parse("-3/7"), q(-3, 7));
    EXPECT_EQ(GaussRat::parse("1/2+1/3*i"), GaussRat::frac(1, 2, 1, 3));
    EXPECT_EQ(GaussRat::parse("2*i"), GaussRat::frac(0, 1, 2, 1));
    EXPECT_THROW(GaussRat::parse("0.5"), std::invalid_argument);
    EXPECT_THROW(GaussRat::parse(""), std::invalid_argument);
}

TEST(Scalars, Tilde) {
    EXPECT_EQ(tilde(GaussRat(0), GaussRat(0)), GaussRat(0));
    EXPECT_EQ(tilde(GaussRat(1), GaussRat(2)), GaussRat(-3));
    std::mt19937_64 g(3);
    for (int i = 0; i < 10; ++i) {
        GaussRat u = random_gauss(g), rho = random_gauss(g);
        EXPECT_EQ(tilde(tilde(u, rho), rho), u);
    }
}

TEST(Scalars, FFactor) {
    EXPECT_EQ(f_factor<GaussRat>(1, {GaussRat(3)}, {GaussRat(1)}), q(3, 2));
    EXPECT_EQ(f_factor<GaussRat>(-1, {GaussRat(3)}, {GaussRat(1)}), q(1, 2));
    EXPECT_EQ(f_factor<GaussRat>(1, {}, {GaussRat(5)}), GaussRat(1));
    std::mt19937_64 g(11);
    for (int i = 0; i < 10; ++i) {
        GaussRat u1 = random_gauss(g), u2 = random_gauss(g), v = random_gauss(g);
        EXPECT_EQ(f_factor<GaussRat>(1, {u1, u2}, {v}), fp(u1, v) * fp(u2, v));
        EXPECT_EQ(fp(u1, v), (u1 - v + GaussRat(1)) / (u1 - v));
        EXPECT_EQ(fm(u1, v), (u1 - v - GaussRat(1)) / (u1 - v));
    }
    EXPECT_THROW(f_factor<GaussRat>(1, {q(1, 3)}, {q(1, 3)}), PoleError);
}

TEST(Scalars, PFactor) {
    GaussRat rho = q(3, 7), v = q(2, 5);
    EXPECT_EQ(p_factor(v, rho, 1), GaussRat(1) + GaussRat(1) / (GaussRat(2) * v + rho));
    EXPECT_EQ(p_factor(v, rho, -1), GaussRat(1) - GaussRat(1) / (GaussRat(2) * v + rho));
    std::mt19937_64 g(5);
    for (int i = 0; i < 10; ++i) {
        GaussRat x = random_gauss(g);
        for (int s : {1, -1}) EXPECT_EQ(p_factor(x, rho, s) + p_factor(tilde(x, rho), rho, s), GaussRat(2));
    }
    EXPECT_THROW(p_factor(q(-3, 14), rho, 1), PoleError);
}

TEST(Scalars, FloatMirrors) {
    Cplx u(0.3, -1.1), v(2.0, 0.5);
    GaussRat ue = GaussRat::frac(3, 10, -11, 10), ve = GaussRat::frac(2, 1, 1, 2);
    EXPECT_NEAR(std::abs(fp(u, v) - fp(ue, ve).to_complex()), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(p_factor(u, Cplx(0.5), 1) - p_factor(ue, q(1, 2), 1).to_complex()), 0.0, 1e-14);
    EXPECT_EQ(to_string(Cplx(1.5, -2)), "1.5-2*i");
}
