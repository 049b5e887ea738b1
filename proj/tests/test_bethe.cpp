#include <gtest/gtest.h>

#include "twy/bethe.hpp"

using namespace twy;

namespace {

GaussRat q(long a, long b = 1) { return GaussRat::frac(a, b); }

ModelSpec<GaussRat> model(int N, int sign = 1, std::vector<GaussRat> cs = {q(2, 3)}) {
    ModelSpec<GaussRat> m;
    m.sign = sign;
    m.N = N;
    m.rho = q(3, 7);
    m.cs = std::move(cs);
    return m;
}

void expect_same(const Vec<GaussRat>& a, const Vec<GaussRat>& b) {
    auto d = first_difference(a, b);
    EXPECT_FALSE(d.has_value()) << *d;
}

}  // namespace

TEST(Bethe, SingleMagnonIsS12) {
    auto m = model(3);
    Monodromy<GaussRat> mono(m);
    GaussRat u = q(5, 3);
    auto eta = build_quantum_space(m).eta;
    expect_same(bethe_vector(mono, Roots<GaussRat>{{u}}), mono.s(1, 2, u, eta));
    EXPECT_FALSE(bethe_vector(mono, Roots<GaussRat>{{u}}).is_zero());
}

TEST(Bethe, VacuumIsEta) {
    for (int N : {2, 3, 4, 5}) {
        auto m = model(N);
        Monodromy<GaussRat> mono(m);
        Roots<GaussRat> empty(size_t(m.n()));
        expect_same(bethe_vector(mono, empty), build_quantum_space(m).eta);
    }
}

TEST(Bethe, ExamplesMatchNested) {
    struct Case {
        int N;
        const char* which;
        Roots<GaussRat> roots;
    };
    std::vector<Case> cases{{3, "B3", {{q(5, 3)}}},
                            {3, "B3x2", {{q(5, 3), q(-2, 7)}}},
                            {4, "B4", {{q(5, 3)}, {q(-2, 7)}}},
                            {5, "B5", {{q(5, 3)}, {q(-2, 7)}}}};
    for (auto& c : cases) {
        Monodromy<GaussRat> mono(model(c.N, 1, {q(2, 3), q(-1, 4)}));
        expect_same(bethe_vector(mono, c.roots), example_b_vector(mono, c.which, c.roots));
    }
    Monodromy<GaussRat> mono(model(3));
    EXPECT_THROW(example_b_vector(mono, "B3x2", Roots<GaussRat>{{q(1), q(2)}}, Reading::Strict), ShapeError);
}

TEST(Bethe, TraceFormulaAgrees) {
    std::vector<std::pair<int, Roots<GaussRat>>> cases{{3, {{q(5, 3), q(-2, 7)}}},
                                                       {4, {{q(5, 3), q(9, 4)}, {q(-2, 7)}}},
                                                       {5, {{q(5, 3)}, {q(-2, 7)}}},
                                                       {2, {{q(1, 6), q(-8, 5)}}}};
    for (auto& [N, r] : cases) {
        Monodromy<GaussRat> mono(model(N));
        expect_same(trace_formula_vector(mono, r), bethe_vector(mono, r));
    }
}

TEST(Bethe, WithinLevelSymmetry) {
    Monodromy<GaussRat> mono(model(4));
    Roots<GaussRat> a{{q(5, 3), q(9, 4)}, {q(-2, 7)}}, b{{q(9, 4), q(5, 3)}, {q(-2, 7)}};
    expect_same(bethe_vector(mono, a), bethe_vector(mono, b));
    Monodromy<GaussRat> odd(model(3));
    expect_same(bethe_vector(odd, Roots<GaussRat>{{q(1, 2), q(-3, 5)}}), bethe_vector(odd, Roots<GaussRat>{{q(-3, 5), q(1, 2)}}));
}

TEST(Bethe, RecurrenceExamples) {
    GaussRat a = q(5, 3), b = q(-2, 7), c = q(7, 2);
    Monodromy<GaussRat> m3(model(3));
    for (int j : {1, 2}) {
        Roots<GaussRat> r{{a, b}};
        expect_same(rr_odd_rhs(m3, r, j), bethe_vector(m3, r));
        expect_same(rr_example(m3, "RR3", r, j), bethe_vector(m3, r));
    }
    Monodromy<GaussRat> m4(model(4));
    Roots<GaussRat> r4{{a, c}, {b, q(1, 9)}};
    for (int j : {1, 2}) expect_same(rr_even_rhs(m4, r4, j), bethe_vector(m4, r4));
    Monodromy<GaussRat> m5(model(5));
    Roots<GaussRat> r5{{a}, {b, c}};
    for (int j : {1, 2}) expect_same(rr_odd_rhs(m5, r5, j), bethe_vector(m5, r5));
}

TEST(Bethe, StrictOddRecurrenceDiffersAtN3) {
    Monodromy<GaussRat> m3(model(3));
    Roots<GaussRat> r{{q(5, 3), q(-2, 7)}};
    EXPECT_TRUE(first_difference(rr_odd_rhs(m3, r, 2, Reading::Strict), bethe_vector(m3, r)).has_value());
}

TEST(Bethe, Lemmas) {
    Monodromy<GaussRat> m3(model(3));
    Roots<GaussRat> r{{q(5, 3), q(-2, 7)}};
    GaussRat v = q(11, 6);
    expect_same(snn_lhs(m3, r, v), snn_rhs(m3, r, v));
    for (int j : {1, 2}) expect_same(psi_j_vector(m3, r, j), psi_j_rhs(m3, r, j));
    Monodromy<GaussRat> m4(model(4));
    EXPECT_THROW(snn_rhs(m4, Roots<GaussRat>{{q(1)}, {q(2)}}, v), ShapeError);
}

TEST(Bethe, GlnRecurrence) {
    Monodromy<GaussRat> m5(model(5));
    auto g = gln_from_roots(m5.spec(), Roots<GaussRat>{{q(5, 3)}, {q(-2, 7), q(7, 2)}});
    for (int depth : {1, 2}) expect_same(rr_gln_rhs(m5, g, depth), gln_vector(m5, g));
}

TEST(Bethe, GammaAndDwpf) {
    auto m = model(4);
    GaussRat z = q(13, 5);
    Roots<GaussRat> empty(2);
    EXPECT_EQ(gamma(m, 1, z, empty), mu_weight(m, 1, z));
    Roots<GaussRat> r{{q(1, 3)}, {}};
    EXPECT_EQ(gamma(m, 1, z, r), fp(z, q(1, 3)) * mu_weight(m, 1, z));
    EXPECT_EQ(gamma(m, 2, z, r), fm(z, q(1, 3)) * mu_weight(m, 2, z));
    GaussRat u = q(4, 3), w = q(-1, 2), x = q(5, 2), y = q(1, 7);
    EXPECT_EQ(dwpf<GaussRat>({u}, {w}), inv(u - w));
    EXPECT_EQ(dwpf<GaussRat>({u, x}, {w, y}), dwpf<GaussRat>({x, u}, {w, y}));
    EXPECT_EQ(dwpf<GaussRat>({u, x}, {w, y}), dwpf<GaussRat>({u, x}, {y, w}));
    EXPECT_THROW(dwpf<GaussRat>({u}, {w, y}), ShapeError);
}
