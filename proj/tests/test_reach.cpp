#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "polyreach/lp.hpp"
#include "polyreach/oracle.hpp"
#include "polyreach/reach.hpp"
#include "support.hpp"

using namespace polyreach;
using namespace polyreach::testing;

namespace {

void require_contains_all(const ReachResult& r, const Trajectories& t, std::size_t first_step = 0) {
    for (std::size_t k = first_step; k < r.polytopes.size(); ++k) {
        for (const Vector& x : t.points[k]) {
            REQUIRE(contains(r.polytopes[k], x, 1e-6));
        }
    }
}

ReachOptions options(double eps = 0.01, unsigned threads = 1) {
    ReachOptions o;
    o.epsilon = eps;
    o.threads = threads;
    return o;
}

}  // namespace

TEST_CASE("Polytope::from_box and contains") {
    const Polytope p = Polytope::from_box(unit_box(2));
    CHECK(p.C.rows() == 4);
    CHECK(p.d == (Vector(4) << 1, 0, 1, 0).finished());
    CHECK(contains(p, (Vector(2) << 0.5, 0.5).finished(), 0.0));
    CHECK_FALSE(contains(p, (Vector(2) << 1.1, 0.0).finished(), 1e-9));
    CHECK(contains(p, (Vector(2) << 1.0 + 1e-10, 0.0).finished(), 1e-9));
    CHECK_THROWS_AS(contains(p, Vector::Zero(3), 0.0), DimensionError);
    CHECK_THROWS_AS((Polytope{TemplateMatrix::box(2), Vector::Zero(3)}.validate()), DimensionError);
}

TEST_CASE("horizon 0 returns only the initial box") {
    const auto sys = double_integrator(net_with_widths({2, 10, 5, 1}, 1));
    const auto r = reach(sys, 0, options());
    REQUIRE(r.polytopes.size() == 1);
    CHECK(r.direction_solves() == 0);
    CHECK(r.polytopes[0].d == (Vector(4) << 3.0, -2.5, 0.25, 0.25).finished());
}

TEST_CASE("identity dynamics: every step contains the initial box corners") {
    auto sys = double_integrator(net_with_widths({2, 10, 5, 1}, 1));
    sys.A = Matrix::Identity(2, 2);
    sys.B = Matrix::Zero(2, 1);
    const auto r = reach(sys, 3, options());
    REQUIRE(r.polytopes.size() == 4);
    const Box& b = sys.initial_box;
    for (const auto& p : r.polytopes) {
        for (int corner = 0; corner < 4; ++corner) {
            const Vector x = (Vector(2) << ((corner & 1) ? b.upper()(0) : b.lower()(0)),
                              ((corner & 2) ? b.upper()(1) : b.lower()(1)))
                                 .finished();
            CHECK(contains(p, x, 1e-9));
        }
    }
}

TEST_CASE("double integrator with a random controller is sound over 5 steps") {
    const auto sys = double_integrator(net_with_widths({2, 10, 5, 1}, 2024));
    const auto r = reach(sys, 5, options());
    REQUIRE(r.polytopes.size() == 6);
    for (const auto& s : r.per_direction_stats) {
        CHECK(s.bnb.upper - s.bnb.lower <= 0.01);
    }
    MESSAGE("direction solves: " << r.direction_solves());
    CHECK(r.direction_solves() > 0);
    require_contains_all(r, simulate(sys, 10000, 5, 7));
}

TEST_CASE("every reach polytope is bounded") {
    std::mt19937_64 rng(5);
    ControlledSystem sys{random_matrix(3, 3, rng, 0.6), random_matrix(3, 2, rng),
                         random_vector(3, rng, 0.1), net_with_widths({3, 8, 2}, 6), unit_box(3),
                         std::nullopt, std::nullopt};
    const auto r = reach(sys, 3, options(0.05));
    for (const auto& p : r.polytopes) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            for (const double s : {1.0, -1.0}) {
                Vector obj = Vector::Zero(3);
                obj(j) = s;
                CHECK(lp_maximize(LpProblem{obj, p.C.directions(), p.d}).status ==
                      LpStatus::Optimal);
            }
        }
    }
    require_contains_all(r, simulate(sys, 2000, 3, 1));
}

TEST_CASE("offsets are bit-identical across thread counts") {
    const auto sys = double_integrator(net_with_widths({2, 10, 5, 1}, 99));
    const auto a = reach(sys, 3, options(0.01, 1));
    const auto b = reach(sys, 3, options(0.01, 4));
    REQUIRE(a.polytopes.size() == b.polytopes.size());
    for (std::size_t k = 0; k < a.polytopes.size(); ++k) {
        CHECK(a.polytopes[k].C.directions() == b.polytopes[k].C.directions());
        CHECK(a.polytopes[k].d == b.polytopes[k].d);
    }
}

TEST_CASE("node cap aborts with the offending step and the completed prefix") {
    const auto sys = double_integrator(net_with_widths({2, 10, 5, 1}, 3));
    ReachOptions o = options(1e-9);
    o.node_cap = 3;
    try {
        reach(sys, 3, o);
        FAIL("expected ReachAborted");
    } catch (const ReachAborted& e) {
        CHECK(e.step >= 1);
        CHECK(e.partial.polytopes.size() == e.step);
    }
}

TEST_CASE("invalid options are rejected") {
    const auto sys = double_integrator(net_with_widths({2, 4, 1}, 3));
    ReachOptions o;
    o.epsilon = 0.0;
    CHECK_THROWS(reach(sys, 1, o));
    o = ReachOptions{};
    o.lambda = 1.5;
    CHECK_THROWS(reach(sys, 1, o));
}

TEST_CASE("on_step is called once per step") {
    const auto sys = double_integrator(net_with_widths({2, 4, 1}, 3));
    ReachOptions o = options(0.05);
    std::vector<std::size_t> seen;
    o.on_step = [&](std::size_t k, const Polytope&) { seen.push_back(k); };
    reach(sys, 3, o);
    CHECK(seen == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("zonotope initial set: the step-0 polytope is the z-box and later steps are sound") {
    auto sys = double_integrator(net_with_widths({2, 10, 5, 1}, 12));
    sys.generator = (Matrix(2, 2) << 0.25, 0.05, 0.0, 0.25).finished();
    sys.initial_box = Box::symmetric(2, 1.0);
    sys.e = (Vector(2) << 2.75, 0.0).finished();
    const auto r = reach(sys, 3, options());
    CHECK(r.polytopes[0].d == Vector::Ones(4));
    require_contains_all(r, simulate(sys, 5000, 3, 2), 1);
}

TEST_CASE("quadrotor-shaped system, short horizon") {
    const auto sys = quadrotor(net_with_widths({6, 8, 3}, 6));
    const auto r = reach(sys, 2, options(0.01, 0));
    REQUIRE(r.polytopes.size() == 3);
    require_contains_all(r, simulate(sys, 2000, 2, 4));
}
