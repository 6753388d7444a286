#include "polyreach/reach.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace polyreach {

Polytope Polytope::from_box(const Box& box) {
    const Eigen::Index n = box.dim();
    Vector d(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(2 * i) = box.upper()(i);
        d(2 * i + 1) = -box.lower()(i);
    }
    return Polytope{TemplateMatrix::box(n), std::move(d)};
}

void Polytope::validate() const {
    if (C.rows() != d.size()) {
        throw DimensionError("polytope: " + std::to_string(C.rows()) + " directions but " +
                             std::to_string(d.size()) + " offsets");
    }
    require_finite(d, "polytope offsets");
}

bool contains(const Polytope& poly, const Vector& x, double tol) {
    if (x.size() != poly.dim()) {
        throw DimensionError("contains: point dimension != polytope dimension");
    }
    return ((poly.C.directions() * x - poly.d).array() <= tol).all();
}

namespace {

struct SolveFailure {
    std::size_t direction;
    std::string message;
};

// Solves every row of `C` on `net` over `box`. Results are independent of the
// thread count; on failure the lowest failing row is reported.
std::vector<BnBResult> solve_directions(const SequentialReluNetwork& net, const TemplateMatrix& C,
                                        const Box& box, const ReachOptions& options,
                                        std::optional<SolveFailure>& failure) {
    const auto rows = static_cast<std::size_t>(C.rows());
    std::vector<BnBResult> results(rows);
    std::vector<std::optional<SolveFailure>> errors(rows);
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < rows; i = next++) {
            try {
                BnBProblem problem{&net, C.directions().row(static_cast<Eigen::Index>(i)).transpose(),
                                   box, options.epsilon, options.node_cap};
                results[i] = maximize(problem);
            } catch (const BnBCapExceeded& e) {
                errors[i] = SolveFailure{i, e.what()};
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) {
                    fatal = std::current_exception();
                }
            }
        }
    };

    unsigned threads = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(rows, 1)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (fatal) {
        std::rethrow_exception(fatal);
    }
    for (auto& e : errors) {
        if (e) {
            failure = std::move(e);
            break;
        }
    }
    return results;
}

}  // namespace

ReachResult reach(const ControlledSystem& sys, std::size_t horizon, const ReachOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    sys.validate();
    if (!(options.epsilon > 0.0)) {
        throw Error("reach: epsilon must be positive");
    }
    if (!(options.lambda > 0.0 && options.lambda <= 1.0)) {
        throw Error("reach: lambda must lie in (0, 1]");
    }

    const ControlledSystem lifted = sys.generator ? absorb_zonotope(sys) : sys;
    const ControlledSystem later_steps = without_input_map(lifted);
    const Box& x0 = lifted.initial_box;

    ReachResult out;
    out.polytopes.push_back(Polytope::from_box(x0));
    TemplateMatrix C = out.polytopes.front().C;

    for (std::size_t k = 1; k <= horizon; ++k) {
        C = step_directions(C, k == 1 ? lifted : later_steps, options.lambda, options.rank_tol);
        const SequentialReluNetwork net = unrolled_closed_loop(lifted, k);

        std::optional<SolveFailure> failure;
        const std::vector<BnBResult> results = solve_directions(net, C, x0, options, failure);
        if (failure) {
            out.wall_time = std::chrono::steady_clock::now() - start;
            throw ReachAborted("reach: step " + std::to_string(k) + ", direction " +
                                   std::to_string(failure->direction) + ": " + failure->message,
                               k, failure->direction, std::move(out));
        }

        Vector d(C.rows());
        for (std::size_t i = 0; i < results.size(); ++i) {
            d(static_cast<Eigen::Index>(i)) = results[i].upper;
            out.per_direction_stats.push_back(DirectionStats{k, i, results[i]});
        }
        out.polytopes.push_back(Polytope{C, std::move(d)});
        if (options.on_step) {
            options.on_step(k, out.polytopes.back());
        }
    }
    out.wall_time = std::chrono::steady_clock::now() - start;
    return out;
}

}  // namespace polyreach
