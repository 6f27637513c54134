/**
 * @file autodiff.hpp
 * @brief Reverse-mode automatic differentiation over vector-valued nodes.
 *
 * The tape is append-only: every operation evaluates eagerly and records
 * its inputs, so nodes are stored in topological order and backward() is a
 * single reverse sweep. Values and adjoints live in two flat arenas; clear()
 * keeps their capacity so one tape can be reused across training steps.
 *
 * Subgradients at kinks are zero: relu'(0) = 0 and abs'(0) = 0.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lakedo {

/// Handle to a tape node.
struct Var {
    std::uint32_t id = 0;
};

class Tape {
public:
    Var constant(std::span<const double> values);
    Var constant(double value);
    /// Leaf whose adjoint is read back after backward().
    Var parameter(std::span<const double> values);

    /// W x + b with W row-major (rows = |b|, cols = |x|).
    Var affine(Var w, Var x, Var b);
    /// W x with W row-major (rows = |W| / |x|).
    Var matvec(Var w, Var x);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double factor);
    Var add_scalar(Var a, double offset);

    Var sigmoid(Var a);
    Var tanh(Var a);
    Var relu(Var a);
    Var abs(Var a);
    Var square(Var a);
    /// log(1 + exp(a)), numerically stable.
    Var softplus(Var a);

    Var slice(Var a, std::size_t offset, std::size_t length);
    Var element(Var a, std::size_t index) { return slice(a, index, 1); }

    /// Scalar: sum of all entries of `a`.
    Var sum(Var a);
    /// Scalar: constant + sum_i coeff[i] * inputs[i], inputs scalar.
    Var linear_combination(std::span<const Var> inputs, std::span<const double> coeff, double constant);
    /// Scalar: (sum of scalar inputs) / n, summed left to right; 0 when empty.
    Var mean(std::span<const Var> inputs);

    std::size_t size(Var v) const { return nodes_[v.id].size; }
    double value(Var v) const;
    std::span<const double> values(Var v) const;
    std::span<const double> grad(Var v) const;

    /// Seed d(out)/d(out) = 1 and propagate. `out` must be scalar.
    void backward(Var out);

    void clear();
    std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        Leaf,
        Affine,
        MatVec,
        Add,
        Sub,
        Mul,
        Scale,
        AddScalar,
        Sigmoid,
        Tanh,
        Relu,
        Abs,
        Square,
        Softplus,
        Slice,
        Sum,
        LinComb,
        Mean,
    };

    struct Node {
        Op op = Op::Leaf;
        std::uint32_t a = 0, b = 0, c = 0;
        std::size_t offset = 0;
        std::size_t size = 0;
        std::size_t aux = 0;      // offset into index/coeff pools, or slice offset
        std::size_t aux_len = 0;  // count of pooled entries
        std::size_t coeff = 0;    // offset into the coefficient pool
        double scalar = 0.0;
    };

    Var push(Op op, std::size_t size, std::uint32_t a = 0, std::uint32_t b = 0, std::uint32_t c = 0);
    double* val(std::uint32_t id) { return values_.data() + nodes_[id].offset; }
    const double* val(std::uint32_t id) const { return values_.data() + nodes_[id].offset; }
    double* adj(std::uint32_t id) { return grads_.data() + nodes_[id].offset; }
    void require_same_size(Var a, Var b, const char* op) const;

    std::vector<Node> nodes_;
    std::vector<double> values_;
    std::vector<double> grads_;
    std::vector<std::uint32_t> index_pool_;
    std::vector<double> coeff_pool_;
};

/// Named parameter block, row-major.
struct Tensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

using ParamSet = std::vector<Tensor>;

std::size_t parameter_count(const ParamSet& params);

/// Bias-corrected adaptive-moment update over a ParamSet.
class Adam {
public:
    Adam(const ParamSet& shape, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
         double epsilon = 1e-8);

    void step(ParamSet& params, const std::vector<std::vector<double>>& gradient);
    std::size_t steps() const noexcept { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// Builds a scalar loss on the tape from parameter leaves (one per block,
/// in ParamSet order).
using LossProgram = std::function<Var(Tape&, std::span<const Var>)>;

struct ValueAndGradient {
    double value = 0.0;
    std::vector<std::vector<double>> gradient;  // same shape as the ParamSet
};

ValueAndGradient evaluate_with_gradient(const LossProgram& program, const ParamSet& params);

/// Loss value only (no backward pass).
double evaluate_loss(const LossProgram& program, const ParamSet& params);

/// Max coordinate-wise relative error between the reverse-mode gradient and
/// fourth-order central differences with step `eps`. Coordinates where both magnitudes are
/// below 1e-8 count as exact.
double gradient_check(const LossProgram& program, const ParamSet& params, double eps);

}  // namespace lakedo
