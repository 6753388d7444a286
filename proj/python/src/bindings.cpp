#include "polyreach/bnb.hpp"
#include "polyreach/bounds.hpp"
#include "polyreach/io.hpp"
#include "polyreach/oracle.hpp"
#include "polyreach/reach.hpp"
#include "polyreach/templates.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace polyreach;

namespace {

SequentialReluNetwork network_from_pairs(const std::vector<std::pair<Matrix, Vector>>& layers) {
    std::vector<AffineLayer> out;
    out.reserve(layers.size());
    for (const auto& [W, b] : layers) {
        out.push_back({W, b});
    }
    return SequentialReluNetwork(std::move(out));
}

std::vector<std::pair<Matrix, Vector>> network_pairs(const SequentialReluNetwork& net) {
    std::vector<std::pair<Matrix, Vector>> out;
    for (const auto& layer : net.layers()) {
        out.emplace_back(layer.W, layer.b);
    }
    return out;
}

py::object module_attr(const char* name) {
    return py::module_::import("polyreach._core").attr(name);
}

ReachOptions make_options(double epsilon, double lambda, double rank_tol, std::size_t node_cap,
                          unsigned threads) {
    ReachOptions o;
    o.epsilon = epsilon;
    o.lambda = lambda;
    o.rank_tol = rank_tol;
    o.node_cap = node_cap;
    o.threads = threads;
    return o;
}

// (horizon + 1, n_samples, dim) array.
py::array_t<double> trajectories_array(const Trajectories& t) {
    const auto steps = static_cast<py::ssize_t>(t.points.size());
    const py::ssize_t samples = steps ? static_cast<py::ssize_t>(t.points[0].size()) : 0;
    const py::ssize_t dim = samples ? t.points[0][0].size() : 0;
    py::array_t<double> out({steps, samples, dim});
    auto view = out.mutable_unchecked<3>();
    for (py::ssize_t k = 0; k < steps; ++k) {
        for (py::ssize_t s = 0; s < samples; ++s) {
            for (py::ssize_t i = 0; i < dim; ++i) {
                view(k, s, i) = t.points[k][s](i);
            }
        }
    }
    return out;
}

Trajectories trajectories_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) {
        throw DimensionError("trajectories must be a (steps, samples, dim) array");
    }
    auto view = a.unchecked<3>();
    Trajectories t;
    t.points.resize(a.shape(0));
    for (py::ssize_t k = 0; k < a.shape(0); ++k) {
        t.points[k].reserve(a.shape(1));
        for (py::ssize_t s = 0; s < a.shape(1); ++s) {
            Vector x(a.shape(2));
            for (py::ssize_t i = 0; i < a.shape(2); ++i) {
                x(i) = view(k, s, i);
            }
            t.points[k].push_back(std::move(x));
        }
    }
    return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reachability of ReLU-controlled affine systems with adaptive template polytopes.";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<RankDeficientError>(m, "RankDeficientError", error.ptr());

    // Exceptions carrying partial results are re-raised by hand so the
    // payload survives.
    py::exception<BnBCapExceeded>(m, "BnBCapExceeded", error.ptr());
    py::exception<ReachAborted>(m, "ReachAborted", error.ptr());

    py::class_<Box>(m, "Box")
        .def(py::init<Vector, Vector>(), py::arg("lower"), py::arg("upper"))
        .def_static("symmetric", &Box::symmetric, py::arg("dim"), py::arg("radius"))
        .def_property_readonly("lower", &Box::lower)
        .def_property_readonly("upper", &Box::upper)
        .def_property_readonly("dim", &Box::dim)
        .def("center", &Box::center)
        .def("widths", &Box::widths)
        .def("volume", &Box::volume)
        .def("contains", &Box::contains, py::arg("x"), py::arg("tol") = 0.0)
        .def("__repr__", [](const Box& b) {
            return "<Box dim=" + std::to_string(b.dim()) + ">";
        });

    py::class_<SequentialReluNetwork>(m, "Network")
        .def(py::init(&network_from_pairs), py::arg("layers"),
             "Build from a list of (W, b) pairs; ReLU between consecutive layers.")
        .def_property_readonly("layers", &network_pairs)
        .def_property_readonly("depth", &SequentialReluNetwork::depth)
        .def_property_readonly("input_dim", &SequentialReluNetwork::input_dim)
        .def_property_readonly("output_dim", &SequentialReluNetwork::output_dim)
        .def_property_readonly("relu_count", &SequentialReluNetwork::relu_count)
        .def("evaluate", &SequentialReluNetwork::evaluate, py::arg("x"))
        .def("__call__", &SequentialReluNetwork::evaluate, py::arg("x"))
        .def_static(
            "random",
            [](const std::vector<Eigen::Index>& widths, std::uint64_t seed, double bias_scale) {
                return random_network(widths, seed, bias_scale);
            },
            py::arg("widths"), py::arg("seed"), py::arg("bias_scale") = 0.1)
        .def("__repr__", [](const SequentialReluNetwork& n) {
            std::string s = "<Network " + std::to_string(n.input_dim());
            for (const auto& l : n.layers()) {
                s += "-" + std::to_string(l.out_dim());
            }
            return s + ">";
        });

    py::class_<ControlledSystem>(m, "ControlledSystem")
        .def(py::init([](Matrix A, Matrix B, Vector e, SequentialReluNetwork controller,
                         Box initial_box, std::optional<Matrix> generator) {
                 ControlledSystem sys{std::move(A),          std::move(B),
                                      std::move(e),          std::move(controller),
                                      std::move(initial_box), std::move(generator),
                                      std::nullopt};
                 sys.validate();
                 return sys;
             }),
             py::arg("A"), py::arg("B"), py::arg("e"), py::arg("controller"),
             py::arg("initial_box"), py::arg("generator") = std::nullopt)
        .def_readonly("A", &ControlledSystem::A)
        .def_readonly("B", &ControlledSystem::B)
        .def_readonly("e", &ControlledSystem::e)
        .def_readonly("controller", &ControlledSystem::controller)
        .def_readonly("initial_box", &ControlledSystem::initial_box)
        .def_readonly("generator", &ControlledSystem::generator)
        .def_property_readonly("state_dim", &ControlledSystem::state_dim)
        .def_property_readonly("control_dim", &ControlledSystem::control_dim)
        .def("step", &ControlledSystem::step, py::arg("x"))
        .def("initial_state", &ControlledSystem::initial_state, py::arg("z"));

    m.def("build_equivalent_step", &build_equivalent_step, py::arg("system"));
    m.def("unroll", &unroll, py::arg("step_net"), py::arg("k"));
    m.def("unrolled_closed_loop", &unrolled_closed_loop, py::arg("system"), py::arg("k"));

    m.def(
        "propagate",
        [](const SequentialReluNetwork& net, const Box& box) {
            std::vector<std::pair<Vector, Vector>> out;
            for (const auto& b : propagate(net, box)) {
                out.emplace_back(b.l, b.u);
            }
            return out;
        },
        py::arg("net"), py::arg("box"), "Pre-activation (lower, upper) bounds for every layer.");
    m.def("upper_bound_objective", &upper_bound_objective, py::arg("net"), py::arg("c"),
          py::arg("box"));
    m.def("lower_bound", &lower_bound, py::arg("net"), py::arg("c"), py::arg("box"));

    py::class_<BnBResult>(m, "BnBResult")
        .def_readonly("lower", &BnBResult::lower)
        .def_readonly("upper", &BnBResult::upper)
        .def_readonly("iterations", &BnBResult::iterations)
        .def_readonly("max_live_nodes", &BnBResult::max_live_nodes)
        .def("__repr__", [](const BnBResult& r) {
            return "<BnBResult lower=" + std::to_string(r.lower) +
                   " upper=" + std::to_string(r.upper) +
                   " iterations=" + std::to_string(r.iterations) + ">";
        });

    m.def(
        "maximize",
        [](const SequentialReluNetwork& net, const Vector& c, const Box& box, double epsilon,
           std::size_t node_cap) {
            BnBProblem problem{&net, c, box, epsilon, node_cap};
            try {
                py::gil_scoped_release release;
                return maximize(problem);
            } catch (const BnBCapExceeded& e) {
                py::object type = module_attr("BnBCapExceeded");
                py::object exc = type(e.what());
                exc.attr("partial") = py::cast(e.partial);
                PyErr_SetObject(type.ptr(), exc.ptr());
                throw py::error_already_set();
            }
        },
        py::arg("net"), py::arg("c"), py::arg("box"), py::arg("epsilon"),
        py::arg("node_cap") = kDefaultNodeCap,
        "Branch and bound for max c^T net(x) over box, to an absolute gap of epsilon.");

    py::class_<ExactMaxResult>(m, "ExactMaxResult")
        .def_readonly("value", &ExactMaxResult::value)
        .def_readonly("argmax", &ExactMaxResult::argmax)
        .def_readonly("pattern", &ExactMaxResult::pattern)
        .def_readonly("patterns_visited", &ExactMaxResult::patterns_visited)
        .def_readonly("feasible_patterns", &ExactMaxResult::feasible_patterns)
        .def_readonly("lps_solved", &ExactMaxResult::lps_solved);
    m.def(
        "exact_maximize",
        [](const SequentialReluNetwork& net, const Vector& c, const Box& box) {
            py::gil_scoped_release release;
            return exact_maximize(net, c, box);
        },
        py::arg("net"), py::arg("c"), py::arg("box"));
    m.attr("MAX_ORACLE_NEURONS") = kMaxOracleNeurons;

    py::class_<Polytope>(m, "Polytope")
        .def(py::init([](Matrix C, Vector d) {
                 Polytope p{TemplateMatrix(std::move(C)), std::move(d)};
                 p.validate();
                 return p;
             }),
             py::arg("C"), py::arg("d"))
        .def_static("from_box", &Polytope::from_box, py::arg("box"))
        .def_property_readonly("C", [](const Polytope& p) { return p.C.directions(); })
        .def_readonly("d", &Polytope::d)
        .def_property_readonly("dim", &Polytope::dim)
        .def("contains",
             [](const Polytope& p, const Vector& x, double tol) { return contains(p, x, tol); },
             py::arg("x"), py::arg("tol") = 1e-9)
        .def(
            "project",
            [](const Polytope& p, Eigen::Index i, Eigen::Index j, std::size_t n_angles) {
                return project_2d(p, {i, j}, n_angles);
            },
            py::arg("i") = 0, py::arg("j") = 1, py::arg("n_angles") = 64,
            "Outer polygon of the projection onto coordinates (i, j), counterclockwise.")
        .def("__repr__", [](const Polytope& p) {
            return "<Polytope rows=" + std::to_string(p.C.rows()) +
                   " dim=" + std::to_string(p.dim()) + ">";
        });

    py::class_<DirectionStats>(m, "DirectionStats")
        .def_readonly("step", &DirectionStats::step)
        .def_readonly("direction", &DirectionStats::direction)
        .def_readonly("bnb", &DirectionStats::bnb);

    py::class_<ReachResult>(m, "ReachResult")
        .def_readonly("polytopes", &ReachResult::polytopes)
        .def_readonly("per_direction_stats", &ReachResult::per_direction_stats)
        .def_property_readonly("wall_time",
                               [](const ReachResult& r) { return r.wall_time.count(); })
        .def_property_readonly("direction_solves", &ReachResult::direction_solves)
        .def("to_json", [](const ReachResult& r) { return result_to_json(r); })
        .def("save", [](const ReachResult& r, const std::filesystem::path& p) { save_result(r, p); },
             py::arg("path"));
    m.def("load_result", &load_result, py::arg("path"));
    m.def("parse_result", &parse_result, py::arg("text"));

    m.def(
        "reach",
        [](const ControlledSystem& sys, std::size_t horizon, double epsilon, double lambda,
           double rank_tol, std::size_t node_cap, unsigned threads) {
            const ReachOptions options = make_options(epsilon, lambda, rank_tol, node_cap, threads);
            try {
                py::gil_scoped_release release;
                return reach(sys, horizon, options);
            } catch (const ReachAborted& e) {
                py::object type = module_attr("ReachAborted");
                py::object exc = type(e.what());
                exc.attr("step") = e.step;
                exc.attr("direction") = e.direction;
                exc.attr("partial") = py::cast(e.partial);
                PyErr_SetObject(type.ptr(), exc.ptr());
                throw py::error_already_set();
            }
        },
        py::arg("system"), py::arg("horizon"), py::arg("epsilon") = 0.01,
        py::arg("lam") = kDefaultLambda, py::arg("rank_tol") = kDefaultRankTol,
        py::arg("node_cap") = kDefaultNodeCap, py::arg("threads") = 0u,
        "Template polytopes over-approximating the reachable states for k = 0..horizon.");

    m.def(
        "simulate",
        [](const ControlledSystem& sys, std::size_t n_samples, std::size_t horizon,
           std::uint64_t seed) { return trajectories_array(simulate(sys, n_samples, horizon, seed)); },
        py::arg("system"), py::arg("n_samples"), py::arg("horizon"), py::arg("seed") = 0,
        "Sampled closed-loop states as a (horizon + 1, n_samples, dim) array.");

    m.def(
        "audit",
        [](const ReachResult& result, const py::array_t<double, py::array::c_style | py::array::forcecast>& traj,
           double tol, std::size_t first_step) {
            const AuditReport a = audit_containment(result, trajectories_from_array(traj), tol, first_step);
            py::dict d;
            d["checked"] = a.checked;
            d["violations"] = a.violations;
            d["worst_excess"] = a.worst_excess;
            d["worst_step"] = a.worst_step;
            return d;
        },
        py::arg("result"), py::arg("trajectories"), py::arg("tol") = 1e-6,
        py::arg("first_step") = 0);

    py::class_<RunConfig>(m, "RunConfig")
        .def_readwrite("A", &RunConfig::A)
        .def_readwrite("B", &RunConfig::B)
        .def_readwrite("e", &RunConfig::e)
        .def_readwrite("x0_lower", &RunConfig::x0_lower)
        .def_readwrite("x0_upper", &RunConfig::x0_upper)
        .def_readwrite("generator", &RunConfig::generator)
        .def_readwrite("weights", &RunConfig::weights)
        .def_readwrite("horizon", &RunConfig::horizon)
        .def_readwrite("epsilon", &RunConfig::epsilon)
        .def_readwrite("lam", &RunConfig::lambda)
        .def_readwrite("rank_tol", &RunConfig::rank_tol)
        .def_readwrite("node_cap", &RunConfig::node_cap)
        .def_readwrite("seed", &RunConfig::seed)
        .def("validate", &RunConfig::validate);
    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("text"),
          py::arg("base_dir") = std::filesystem::path{});
    m.def("make_system", &make_system, py::arg("config"));
    m.def("load_weights", &load_weights, py::arg("path"));
    m.def("save_weights", &save_weights, py::arg("net"), py::arg("path"));

    m.def("polygon_area", &polygon_area, py::arg("polygon"));

    m.def(
        "step_directions",
        [](const Matrix& C, const ControlledSystem& sys, double lambda, double rank_tol) {
            return step_directions(TemplateMatrix(C), sys, lambda, rank_tol).directions();
        },
        py::arg("C"), py::arg("system"), py::arg("lam") = kDefaultLambda,
        py::arg("rank_tol") = kDefaultRankTol,
        "Template for the next step's polytope from the current template rows.");
}
