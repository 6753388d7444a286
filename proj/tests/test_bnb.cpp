#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "polyreach/bnb.hpp"
#include "polyreach/bounds.hpp"
#include "polyreach/oracle.hpp"
#include "support.hpp"

using namespace polyreach;
using namespace polyreach::testing;

namespace {

BnBNode node_for(const Box& box) { return BnBNode{box, 0.0, 0.0}; }

Box box2(double l0, double u0, double l1, double u1) {
    return Box((Vector(2) << l0, l1).finished(), (Vector(2) << u0, u1).finished());
}

}  // namespace

TEST_CASE("branch splits the widest side") {
    const auto [a, b] = branch(node_for(box2(0, 1, 0, 4)));
    CHECK(a.box.upper() == (Vector(2) << 1.0, 2.0).finished());
    CHECK(b.box.lower() == (Vector(2) << 0.0, 2.0).finished());
    CHECK(b.box.upper() == (Vector(2) << 1.0, 4.0).finished());
}

TEST_CASE("branch tie goes to the lowest index") {
    const auto [a, b] = branch(node_for(box2(0, 2, 0, 2)));
    CHECK(a.box.upper()(0) == 1.0);
    CHECK(a.box.upper()(1) == 2.0);
    CHECK(b.box.lower()(0) == 1.0);
}

TEST_CASE("branch normalizes by the reference widths") {
    const Vector ref = (Vector(2) << 1.0, 10.0).finished();
    const auto [a, b] = branch(node_for(box2(0, 1, 0, 4)), ref);
    // 1/1 > 4/10: dimension 0 wins although it is narrower
    CHECK(a.box.upper()(0) == 0.5);
    CHECK(b.box.lower()(0) == 0.5);
}

TEST_CASE("branch twice on the unit cube gives four quarter boxes") {
    const Box cube = unit_box(3);
    const auto [a, b] = branch(node_for(cube));
    const auto [a1, a2] = branch(a);
    const auto [b1, b2] = branch(b);
    double total = 0.0;
    std::mt19937_64 rng(1);
    for (const auto* n : {&a1, &a2, &b1, &b2}) {
        CHECK(n->box.volume() == doctest::Approx(0.25));
        total += n->box.volume();
    }
    CHECK(total == doctest::Approx(1.0));
    for (int s = 0; s < 1000; ++s) {
        const Vector x = sample_box(cube, rng);
        int hits = 0;
        for (const auto* n : {&a1, &a2, &b1, &b2}) {
            hits += n->box.contains(x) ? 1 : 0;
        }
        CHECK(hits >= 1);
    }
}

TEST_CASE("branch refuses a point box") {
    const Box p(Vector::Ones(2), Vector::Ones(2));
    CHECK_THROWS_AS(branch(node_for(p)), Error);
}

TEST_CASE("lower_bound on a point box is the exact value") {
    const auto net = net_with_widths({2, 5, 1}, 2);
    const Vector x = (Vector(2) << 0.3, 0.7).finished();
    const Box p(x, x);
    CHECK(lower_bound(net, Vector::Ones(1), p) == net.evaluate(x)(0));
    const auto r = maximize(BnBProblem{&net, Vector::Ones(1), p, 1e-6});
    CHECK(r.lower == doctest::Approx(net.evaluate(x)(0)).epsilon(1e-12));
    CHECK(r.upper - r.lower <= 1e-6);
}

TEST_CASE("lower_bound never exceeds the upper bound") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto net = net_with_widths({2, 4 + trial % 6, 3, 2}, trial);
        const Vector c = random_vector(2, rng);
        const Vector lo = random_vector(2, rng);
        const Box box(lo, lo + Vector::Constant(2, 0.05 + 0.01 * (trial % 50)));
        REQUIRE(lower_bound(net, c, box) <= upper_bound_objective(net, c, box) + 1e-9);
    }
}

TEST_CASE("affine net: exact support value at iteration 1") {
    std::mt19937_64 rng(2);
    const SequentialReluNetwork net({AffineLayer{random_matrix(2, 2, rng), random_vector(2, rng)}});
    BranchAndBound bb(BnBProblem{&net, (Vector(2) << 1.0, 0.0).finished(), unit_box(2), 1e-9});
    const auto r = bb.solve();
    CHECK(r.iterations == 1);
    const auto& l = net.layers()[0];
    const double exact = l.b(0) + std::max(l.W(0, 0), 0.0) + std::max(l.W(0, 1), 0.0);
    CHECK(r.upper == doctest::Approx(exact).epsilon(1e-12));
    CHECK(r.upper - r.lower <= 1e-9);
}

TEST_CASE("constant network: bounds coincide immediately") {
    const SequentialReluNetwork net({AffineLayer{Matrix::Zero(3, 2), Vector::Ones(3)},
                                     AffineLayer{Matrix::Zero(1, 3), (Vector(1) << 2.5).finished()}});
    const auto r = maximize(BnBProblem{&net, Vector::Ones(1), unit_box(2), 1e-6});
    CHECK(r.lower == 2.5);
    CHECK(r.upper == 2.5);
    CHECK(r.iterations == 1);
}

TEST_CASE("problem validation") {
    const auto net = net_with_widths({2, 3, 1}, 0);
    CHECK_THROWS_AS(maximize(BnBProblem{&net, Vector::Ones(1), unit_box(2), 0.0}), Error);
    CHECK_THROWS_AS(maximize(BnBProblem{&net, Vector::Ones(2), unit_box(2), 0.1}), DimensionError);
    CHECK_THROWS_AS(maximize(BnBProblem{&net, Vector::Ones(1), unit_box(3), 0.1}), DimensionError);
    CHECK_THROWS_AS(maximize(BnBProblem{nullptr, Vector::Ones(1), unit_box(2), 0.1}), Error);
}

TEST_CASE("fixed 2-3-1 net: BnB brackets the exact maximum 1.1") {
    Matrix W0(3, 2);
    W0 << 1.0, -1.0, 0.5, 1.0, -1.0, 0.5;
    Matrix W1(1, 3);
    W1 << 1.0, -2.0, 1.5;
    const SequentialReluNetwork net({AffineLayer{W0, (Vector(3) << 0.0, -0.5, 0.25).finished()},
                                     AffineLayer{W1, (Vector(1) << 0.1).finished()}});
    const auto r = maximize(BnBProblem{&net, Vector::Ones(1), unit_box(2), 1e-4});
    CHECK(r.lower <= 1.1 + 1e-12);
    CHECK(r.upper >= 1.1 - 1e-12);
    CHECK(r.upper - r.lower <= 1e-4);
}

TEST_CASE("2-10-5-1 random nets: interval contains the oracle maximum") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto net = net_with_widths({2, 10, 5, 1}, 1000 + trial);
        const Vector c = random_vector(1, rng);
        const Box box = unit_box(2);
        const double exact = exact_maximize(net, c, box).value;
        const auto r = maximize(BnBProblem{&net, c, box, 0.01});
        CHECK(r.lower <= exact + 1e-8);
        CHECK(r.upper >= exact - 1e-8);
        CHECK(r.upper - r.lower <= 0.01);
    }
}

TEST_CASE("small nets: ε in {0.01, 0.001} certificates contain the oracle value") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto net = net_with_widths({2, 3 + trial % 4, 3, 1}, 2000 + trial);
        const Vector c = random_vector(1, rng);
        const Vector lo = random_vector(2, rng);
        const Box box(lo, lo + Vector::Constant(2, 1.0));
        const double exact = exact_maximize(net, c, box).value;
        for (const double eps : {0.01, 0.001}) {
            const auto r = maximize(BnBProblem{&net, c, box, eps});
            REQUIRE(r.lower <= exact + 1e-8);
            REQUIRE(r.upper >= exact - 1e-8);
            REQUIRE(r.upper - r.lower <= eps);
        }
    }
}

TEST_CASE("bounds are monotone and the partition tiles the box") {
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = net_with_widths({2, 8, 6, 1}, 3000 + trial);
        const Box box(-Vector::Ones(2), Vector::Ones(2));
        BranchAndBound bb(BnBProblem{&net, Vector::Ones(1), box, 1e-4});
        double lower = bb.global_lower();
        double upper = bb.global_upper();
        while (bb.step()) {
            REQUIRE(bb.global_lower() >= lower);
            REQUIRE(bb.global_upper() <= upper + 1e-12);
            lower = bb.global_lower();
            upper = bb.global_upper();
            double live = 0.0;
            for (const auto& n : bb.live_nodes()) {
                REQUIRE(n.lower <= n.upper);
                REQUIRE((n.box.lower().array() >= box.lower().array()).all());
                REQUIRE((n.box.upper().array() <= box.upper().array()).all());
                live += n.box.volume();
            }
            REQUIRE(std::abs(live + bb.pruned_volume() - box.volume()) <= 1e-9);
        }
        CHECK(bb.converged());
    }
}

TEST_CASE("node cap raises with a sound partial result") {
    const auto net = net_with_widths({2, 10, 10, 1}, 77);
    const Box box(-Vector::Ones(2) * 3.0, Vector::Ones(2) * 3.0);
    BnBProblem p{&net, Vector::Ones(1), box, 1e-9, 5};
    try {
        maximize(p);
        FAIL("expected BnBCapExceeded");
    } catch (const BnBCapExceeded& e) {
        CHECK(e.partial.iterations == 5);
        CHECK(e.partial.lower <= e.partial.upper);
        const double exact = exact_maximize(net_with_widths({2, 10, 10, 1}, 77), Vector::Ones(1),
                                            box).value;
        CHECK(e.partial.upper >= exact - 1e-8);
        CHECK(e.partial.lower <= exact + 1e-8);
    }
}

TEST_CASE("BnB is deterministic") {
    const auto net = net_with_widths({3, 10, 4, 1}, 5);
    const BnBProblem p{&net, Vector::Ones(1), unit_box(3), 1e-3};
    const auto a = maximize(p);
    const auto b = maximize(p);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("degenerate box dimension is never split") {
    const auto net = net_with_widths({2, 6, 1}, 6);
    const Box box((Vector(2) << 0.0, 0.5).finished(), (Vector(2) << 1.0, 0.5).finished());
    const auto r = maximize(BnBProblem{&net, Vector::Ones(1), box, 1e-5});
    CHECK(r.upper - r.lower <= 1e-5);
}
