#include "polyreach/oracle.hpp"

#include <limits>
#include <random>
#include <string>

namespace polyreach {

namespace {

class PatternSearch {
public:
    PatternSearch(const SequentialReluNetwork& net, const Vector& c, const Box& box)
        : net_(net), c_(c), n_(box.dim()), total_(net.relu_count()) {
        rows_.reserve(static_cast<std::size_t>(2 * n_) + total_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            Vector up = Vector::Zero(n_);
            up(i) = 1.0;
            push(up, box.upper()(i));
            push(-up, -box.lower()(i));
        }
        result_.value = -std::numeric_limits<double>::infinity();
        pattern_.reserve(total_);
    }

    ExactMaxResult run() {
        // Post-activation map of the layer "before" the first: the input itself.
        descend(0, 0, Matrix::Identity(n_, n_), Vector::Zero(n_), Matrix(), Vector(), box_center());
        if (result_.feasible_patterns == 0) {
            throw NumericalError("exact_maximize: no feasible activation pattern");
        }
        return std::move(result_);
    }

private:
    Vector box_center() const {
        Vector x(n_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            x(i) = 0.5 * (rhs_[2 * static_cast<std::size_t>(i)] -
                          rhs_[2 * static_cast<std::size_t>(i) + 1]);
        }
        return x;
    }

    void push(const Vector& g, double h) {
        rows_.push_back(g);
        rhs_.push_back(h);
    }
    void pop() {
        rows_.pop_back();
        rhs_.pop_back();
    }

    LpProblem problem(const Vector& objective) const {
        LpProblem p{objective, Matrix(static_cast<Eigen::Index>(rows_.size()), n_),
                    Vector(static_cast<Eigen::Index>(rows_.size()))};
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            p.constraints.row(static_cast<Eigen::Index>(r)) = rows_[r].transpose();
            p.rhs(static_cast<Eigen::Index>(r)) = rhs_[r];
        }
        return p;
    }

    bool satisfied(const Vector& x) const {
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (rows_[r].dot(x) > rhs_[r]) {
                return false;
            }
        }
        return true;
    }

    // `prev_P x + prev_q` is the post-activation output of layer - 1 (the
    // input when layer == 0). cur_P/cur_q accumulate the post-activation rows
    // of `layer` for neurons already assigned. `witness` satisfies every
    // constraint on the stack.
    void descend(std::size_t layer, Eigen::Index neuron, const Matrix& prev_P, const Vector& prev_q,
                 Matrix cur_P, Vector cur_q, const Vector& witness) {
        const auto layers = net_.layers();
        const std::size_t last = layers.size() - 1;
        if (layer == last) {
            leaf(prev_P, prev_q);
            return;
        }
        const AffineLayer& l = layers[layer];
        if (neuron == 0) {
            cur_P = Matrix::Zero(l.out_dim(), n_);
            cur_q = Vector::Zero(l.out_dim());
        }
        if (neuron == l.out_dim()) {
            descend(layer + 1, 0, cur_P, cur_q, Matrix(), Vector(), witness);
            return;
        }
        const Vector g = (l.W.row(neuron) * prev_P).transpose();
        const double h = l.W.row(neuron).dot(prev_q) + l.b(neuron);

        for (const bool active : {true, false}) {
            // active: g x + h >= 0; inactive: g x + h <= 0
            if (active) {
                push(-g, h);
            } else {
                push(g, -h);
            }
            pattern_.push_back(active);
            Vector next_witness = witness;
            bool feasible = satisfied(witness);
            if (!feasible) {
                ++result_.lps_solved;
                const LpResult lp = lp_maximize(problem(Vector::Zero(n_)));
                feasible = lp.status == LpStatus::Optimal;
                if (feasible) {
                    next_witness = lp.witness;
                }
            }
            if (feasible) {
                if (active) {
                    cur_P.row(neuron) = g.transpose();
                    cur_q(neuron) = h;
                } else {
                    cur_P.row(neuron).setZero();
                    cur_q(neuron) = 0.0;
                }
                descend(layer, neuron + 1, prev_P, prev_q, cur_P, cur_q, next_witness);
            } else {
                result_.patterns_visited += std::uint64_t{1} << (total_ - pattern_.size());
            }
            pattern_.pop_back();
            pop();
        }
    }

    void leaf(const Matrix& P, const Vector& q) {
        const AffineLayer& out = net_.layers().back();
        const Vector obj = (c_.transpose() * out.W * P).transpose();
        const double constant = c_.dot(out.W * q + out.b);
        ++result_.patterns_visited;
        ++result_.lps_solved;
        const LpResult lp = lp_maximize(problem(obj));
        if (lp.status == LpStatus::Unbounded) {
            throw NumericalError("exact_maximize: unbounded LP over a bounded box");
        }
        if (lp.status != LpStatus::Optimal) {
            return;
        }
        ++result_.feasible_patterns;
        const double value = lp.value + constant;
        if (value > result_.value) {
            result_.value = value;
            result_.argmax = lp.witness;
            result_.pattern = pattern_;
        }
    }

    const SequentialReluNetwork& net_;
    const Vector& c_;
    Eigen::Index n_;
    std::size_t total_;
    std::vector<Vector> rows_;
    std::vector<double> rhs_;
    ActivationPattern pattern_;
    ExactMaxResult result_;
};

}  // namespace

ExactMaxResult exact_maximize(const SequentialReluNetwork& net, const Vector& c, const Box& box) {
    if (box.dim() != net.input_dim() || c.size() != net.output_dim()) {
        throw DimensionError("exact_maximize: dimension mismatch");
    }
    if (net.relu_count() > kMaxOracleNeurons) {
        throw Error("exact_maximize: " + std::to_string(net.relu_count()) +
                    " ReLU neurons exceeds the enumeration budget of " +
                    std::to_string(kMaxOracleNeurons));
    }
    return PatternSearch(net, c, box).run();
}

Trajectories simulate(const ControlledSystem& sys, std::size_t n_samples, std::size_t horizon,
                      std::uint64_t seed) {
    sys.validate();
    if (n_samples == 0) {
        throw Error("simulate: need at least one sample");
    }
    std::mt19937_64 rng(seed);
    const Box& box = sys.initial_box;
    Trajectories out;
    out.points.assign(horizon + 1, std::vector<Vector>(n_samples));
    for (std::size_t s = 0; s < n_samples; ++s) {
        Vector z(box.dim());
        for (Eigen::Index i = 0; i < box.dim(); ++i) {
            const double u = std::generate_canonical<double, 53>(rng);
            z(i) = box.lower()(i) + u * (box.upper()(i) - box.lower()(i));
        }
        Vector x = sys.initial_state(z);
        out.points[0][s] = x;
        for (std::size_t k = 1; k <= horizon; ++k) {
            x = sys.step(x);
            out.points[k][s] = x;
        }
    }
    return out;
}

}  // namespace polyreach
