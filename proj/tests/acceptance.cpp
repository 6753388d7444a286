// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 4        run a subset

#include "polyreach/io.hpp"
#include "polyreach/lp.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace polyreach;
using namespace polyreach::testing;

namespace {

const std::filesystem::path kConfigs = POLYREACH_CONFIG_DIR;

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Random width in [lo, hi].
Eigen::Index draw(std::mt19937_64& rng, Eigen::Index lo, Eigen::Index hi) {
    return std::uniform_int_distribution<Eigen::Index>(lo, hi)(rng);
}

Outcome equivalence() {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int sys_i = 0; sys_i < 20; ++sys_i) {
        const Eigen::Index n = draw(rng, 1, 6);
        const Eigen::Index m = draw(rng, 1, 3);
        std::vector<Eigen::Index> widths{n};
        const int hidden = static_cast<int>(draw(rng, 0, 2));
        for (int h = 0; h < hidden; ++h) {
            widths.push_back(draw(rng, 1, 32));
        }
        widths.push_back(m);
        ControlledSystem sys{random_matrix(n, n, rng), random_matrix(n, m, rng),
                             random_vector(n, rng), net_with_widths(widths, 200 + sys_i),
                             Box::symmetric(n, 1.0), std::nullopt, std::nullopt};
        const auto feq = build_equivalent_step(sys);
        for (int s = 0; s < 10000; ++s) {
            const Vector x = random_vector(n, rng, 3.0);
            const Vector direct = sys.A * x + sys.B * sys.controller.evaluate(x) + sys.e;
            worst = std::max(worst, (feq.evaluate(x) - direct).cwiseAbs().maxCoeff());
        }
    }
    return {worst <= 1e-9, fmt("20 systems x 1e4 inputs, max |F_eq - direct| = %.2e", worst)};
}

Outcome bnb_vs_oracle() {
    std::mt19937_64 rng(202);
    int violations = 0;
    double widest = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const Eigen::Index n = draw(rng, 1, 3);
        const Eigen::Index h1 = draw(rng, 2, 8);
        const Eigen::Index h2 = draw(rng, 1, 14 - h1);
        const auto net = net_with_widths({n, h1, h2, 1}, 300 + inst);
        const Vector c = random_vector(1, rng);
        const Vector lo = random_vector(n, rng);
        const Box box(lo, lo + Vector::Constant(n, 0.5 + 0.1 * (inst % 10)));
        const double exact = exact_maximize(net, c, box).value;
        const BnBResult r = maximize(BnBProblem{&net, c, box, 1e-3});
        widest = std::max(widest, r.upper - r.lower);
        if (!(r.lower <= exact + 1e-8 && r.upper >= exact - 1e-8 && r.upper - r.lower <= 1e-3)) {
            ++violations;
        }
    }
    return {violations == 0,
            fmt("50 instances (<= 14 ReLUs), eps = 1e-3: %d violations, widest gap %.2e",
                violations, widest)};
}

// Criteria 3 and 4 share one run.
struct DoubleIntegratorRun {
    ReachResult result;
    Trajectories trajectories;
    double epsilon = 0.0;
};

const DoubleIntegratorRun& double_integrator_run() {
    static const DoubleIntegratorRun run = [] {
        RunConfig c = load_config(kConfigs / "double_integrator.json");
        c.horizon = 5;
        c.epsilon = 0.01;
        c.lambda = 0.98;
        const ControlledSystem sys = make_system(c);
        DoubleIntegratorRun out;
        out.result = reach(sys, c.horizon, c.reach_options());
        out.trajectories = simulate(sys, 100000, c.horizon, 12345);
        out.epsilon = c.epsilon;
        return out;
    }();
    return run;
}

Outcome double_integrator_soundness() {
    const auto& run = double_integrator_run();
    const AuditReport a = audit_containment(run.result, run.trajectories, 1e-6);
    std::ostringstream rows;
    for (std::size_t k = 1; k < run.result.polytopes.size(); ++k) {
        rows << (k > 1 ? "," : "") << run.result.polytopes[k].C.rows();
    }
    return {a.violations == 0 && a.checked == 600000,
            fmt("1e5 trajectories x 6 steps: %zu violations (worst excess %.2e); rows per step "
                "%s; %zu direction solves in %.2f s",
                a.violations, a.worst_excess, rows.str().c_str(),
                run.result.direction_solves(), run.result.wall_time.count())};
}

Outcome double_integrator_tightness() {
    const auto& run = double_integrator_run();
    const double slack = run.epsilon + 0.05;
    bool pass = true;
    std::ostringstream per_step;
    for (std::size_t k = 1; k < run.result.polytopes.size(); ++k) {
        const Polytope& p = run.result.polytopes[k];
        Vector best = Vector::Constant(p.C.rows(), -std::numeric_limits<double>::infinity());
        for (const Vector& x : run.trajectories.points[k]) {
            best = best.cwiseMax(p.C.directions() * x);
        }
        Eigen::Index tight = 0;
        for (Eigen::Index i = 0; i < p.C.rows(); ++i) {
            tight += best(i) >= p.d(i) - slack ? 1 : 0;
        }
        pass = pass && 2 * tight >= p.C.rows();
        per_step << (k > 1 ? " " : "") << "k" << k << ":" << tight << "/" << p.C.rows();
    }
    return {pass, "rows attained within eps + 0.05 by a sample: " + per_step.str()};
}

Outcome facet_count() {
    std::mt19937_64 rng(505);
    int mismatches = 0;
    int done = 0;
    std::ostringstream example;
    while (done < 20) {
        std::vector<Eigen::Index> widths{draw(rng, 1, 6)};
        const int depth = static_cast<int>(draw(rng, 1, 4));
        for (int i = 0; i < depth; ++i) {
            widths.push_back(draw(rng, 1, 16));
        }
        const auto net = net_with_widths(widths, 600 + done);
        const Eigen::Index m = draw(rng, 1, 6);
        const TemplateMatrix C(random_matrix(m, widths[0], rng));
        std::vector<bool> relu(net.depth(), true);
        relu.back() = false;
        const auto rows = layer_directions(C, net.layers(), relu).rows();
        const auto formula = directions_count_before_pruning(m, widths);
        const auto mirrored = mirrored_directions_count(widths);
        if (rows - mirrored != formula) {
            ++mismatches;
        }
        if (example.tellp() == 0 && mirrored > 0) {
            example << "e.g. m=" << m << " widths=";
            for (std::size_t i = 0; i < widths.size(); ++i) {
                example << (i ? "-" : "") << widths[i];
            }
            example << ": " << rows << " rows = " << formula << " + " << mirrored << " mirrored";
        }
        ++done;
    }
    return {mismatches == 0,
            fmt("20 architectures, %d mismatches against m + sum n_i + sum (n_i - n_{i-1})+ "
                "(+-u_i pairs counted once); ",
                mismatches) +
                example.str()};
}

Outcome boundedness() {
    std::mt19937_64 rng(606);
    int unbounded = 0;
    int lps = 0;
    for (int sys_i = 0; sys_i < 20; ++sys_i) {
        const Eigen::Index n = draw(rng, 2, 4);
        const Eigen::Index m = draw(rng, 1, n);
        Matrix A = random_matrix(n, n, rng, 0.7);
        while (svd(A).singular_values.minCoeff() < 1e-3) {
            A = random_matrix(n, n, rng, 0.7);
        }
        ControlledSystem sys{A, random_matrix(n, m, rng), random_vector(n, rng, 0.1),
                             net_with_widths({n, draw(rng, 2, 8), m}, 700 + sys_i), unit_box(n),
                             std::nullopt, std::nullopt};
        ReachOptions o;
        o.epsilon = 0.01;
        const ReachResult r = reach(sys, 3, o);
        for (const Polytope& p : r.polytopes) {
            for (Eigen::Index j = 0; j < n; ++j) {
                for (const double s : {1.0, -1.0}) {
                    Vector obj = Vector::Zero(n);
                    obj(j) = s;
                    ++lps;
                    if (lp_maximize(LpProblem{obj, p.C.directions(), p.d}).status !=
                        LpStatus::Optimal) {
                        ++unbounded;
                    }
                }
            }
        }
    }
    return {unbounded == 0,
            fmt("20 full-rank systems, horizon 3: %d of %d coordinate LPs not optimal", unbounded,
                lps)};
}

Outcome tall_tightness() {
    std::mt19937_64 rng(707);
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t vertices = 0;
    for (int t = 0; t < 20; ++t) {
        const Matrix W = random_matrix(2, 1, rng);
        const Vector b = random_vector(2, rng);
        const double lo = -std::abs(random_vector(1, rng)(0)) - 0.1;
        const double hi = std::abs(random_vector(1, rng)(0)) + 0.1;
        const TemplateMatrix C((Matrix(2, 1) << 1.0, -1.0).finished());
        const Vector d = (Vector(2) << hi, -lo).finished();
        const auto out = affine_directions(C, W);
        Vector dp(out.rows());
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            const Vector ci = out.directions().row(i).transpose();
            const double a = ci.dot(W.col(0));
            dp(i) = ci.dot(b) + std::max(a * hi, a * lo);
        }
        const Matrix wp = pinv(W);
        for (const Vector& v : polytope_vertices_2d(out.directions(), dp)) {
            ++vertices;
            worst = std::max(worst, (C.directions() * (wp * (v - b)) - d).maxCoeff());
        }
    }
    return {vertices >= 40 && worst <= 1e-7,
            fmt("20 tall 2x1 layers, %zu vertices, max excess of C W+(v - b) over d: %.2e",
                vertices, worst)};
}

Outcome quadrotor_scale() {
    RunConfig c = load_config(kConfigs / "quadrotor.json");
    c.horizon = 4;
    c.epsilon = 0.01;
    const ControlledSystem sys = make_system(c);
    try {
        const ReachResult r = reach(sys, c.horizon, c.reach_options());
        const Trajectories t = simulate(sys, 10000, c.horizon, 777);
        const AuditReport a = audit_containment(r, t, 1e-6);
        std::ostringstream rows;
        for (std::size_t k = 1; k < r.polytopes.size(); ++k) {
            rows << (k > 1 ? "," : "") << r.polytopes[k].C.rows();
        }
        return {a.violations == 0,
                fmt("6-32-32-3 controller, horizon 4, eps 0.01: %zu/%zu states outside, rows per "
                    "step %s, %zu direction solves in %.1f s",
                    a.violations, a.checked, rows.str().c_str(), r.direction_solves(),
                    r.wall_time.count())};
    } catch (const ReachAborted& e) {
        return {false, std::string("cap exceeded: ") + e.what()};
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "F_eq equivalence", equivalence},
        {2, "BnB certificate vs exact oracle", bnb_vs_oracle},
        {3, "double integrator end-to-end soundness", double_integrator_soundness},
        {4, "double integrator tightness indicator", double_integrator_tightness},
        {5, "template facet-count formula", facet_count},
        {6, "boundedness of reach polytopes", boundedness},
        {7, "tall-layer tightness", tall_tightness},
        {8, "quadrotor-shaped 6-state run", quadrotor_scale},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::atoi(argv[i]));
    }

    int failures = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.contains(c.id)) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
