#include "lakedo/autodiff.hpp"

#include "lakedo/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lakedo {

namespace {

double sigmoid_value(double x) {
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double softplus_value(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

Var Tape::push(Op op, std::size_t size, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    Node node;
    node.op = op;
    node.a = a;
    node.b = b;
    node.c = c;
    node.offset = values_.size();
    node.size = size;
    nodes_.push_back(node);
    values_.resize(values_.size() + size, 0.0);
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::require_same_size(Var a, Var b, const char* op) const {
    if (nodes_[a.id].size != nodes_[b.id].size) {
        throw DomainError(std::string("tape ") + op + ": operand sizes differ (" +
                          std::to_string(nodes_[a.id].size) + " vs " + std::to_string(nodes_[b.id].size) + ")");
    }
}

Var Tape::constant(std::span<const double> values) {
    const Var v = push(Op::Leaf, values.size());
    std::copy(values.begin(), values.end(), val(v.id));
    return v;
}

Var Tape::constant(double value) { return constant(std::span<const double>(&value, 1)); }

Var Tape::parameter(std::span<const double> values) { return constant(values); }

Var Tape::affine(Var w, Var x, Var b) {
    const std::size_t rows = nodes_[b.id].size;
    const std::size_t cols = nodes_[x.id].size;
    if (nodes_[w.id].size != rows * cols) throw DomainError("tape affine: weight shape mismatch");
    const Var out = push(Op::Affine, rows, w.id, x.id, b.id);
    const double* W = val(w.id);
    const double* X = val(x.id);
    const double* B = val(b.id);
    double* Y = val(out.id);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = B[r];
        const double* row = W + r * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * X[j];
        Y[r] = acc;
    }
    return out;
}

Var Tape::matvec(Var w, Var x) {
    const std::size_t cols = nodes_[x.id].size;
    if (cols == 0 || nodes_[w.id].size % cols != 0) throw DomainError("tape matvec: weight shape mismatch");
    const std::size_t rows = nodes_[w.id].size / cols;
    const Var out = push(Op::MatVec, rows, w.id, x.id);
    const double* W = val(w.id);
    const double* X = val(x.id);
    double* Y = val(out.id);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = W + r * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * X[j];
        Y[r] = acc;
    }
    return out;
}

Var Tape::add(Var a, Var b) {
    require_same_size(a, b, "add");
    const Var out = push(Op::Add, size(a), a.id, b.id);
    for (std::size_t i = 0; i < size(a); ++i) val(out.id)[i] = val(a.id)[i] + val(b.id)[i];
    return out;
}

Var Tape::sub(Var a, Var b) {
    require_same_size(a, b, "sub");
    const Var out = push(Op::Sub, size(a), a.id, b.id);
    for (std::size_t i = 0; i < size(a); ++i) val(out.id)[i] = val(a.id)[i] - val(b.id)[i];
    return out;
}

Var Tape::mul(Var a, Var b) {
    require_same_size(a, b, "mul");
    const Var out = push(Op::Mul, size(a), a.id, b.id);
    for (std::size_t i = 0; i < size(a); ++i) val(out.id)[i] = val(a.id)[i] * val(b.id)[i];
    return out;
}

Var Tape::scale(Var a, double factor) {
    const Var out = push(Op::Scale, size(a), a.id);
    nodes_[out.id].scalar = factor;
    for (std::size_t i = 0; i < size(a); ++i) val(out.id)[i] = val(a.id)[i] * factor;
    return out;
}

Var Tape::add_scalar(Var a, double offset) {
    const Var out = push(Op::AddScalar, size(a), a.id);
    nodes_[out.id].scalar = offset;
    for (std::size_t i = 0; i < size(a); ++i) val(out.id)[i] = val(a.id)[i] + offset;
    return out;
}

#define LAKEDO_UNARY(name, OP, expr)                                      \
    Var Tape::name(Var a) {                                               \
        const Var out = push(Op::OP, size(a), a.id);                      \
        for (std::size_t i = 0; i < size(a); ++i) {                       \
            const double x = val(a.id)[i];                                \
            val(out.id)[i] = (expr);                                      \
        }                                                                 \
        return out;                                                       \
    }

LAKEDO_UNARY(sigmoid, Sigmoid, sigmoid_value(x))
LAKEDO_UNARY(tanh, Tanh, std::tanh(x))
LAKEDO_UNARY(relu, Relu, x > 0.0 ? x : 0.0)
LAKEDO_UNARY(abs, Abs, std::abs(x))
LAKEDO_UNARY(square, Square, x * x)
LAKEDO_UNARY(softplus, Softplus, softplus_value(x))

#undef LAKEDO_UNARY

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
    if (offset + length > size(a)) throw DomainError("tape slice out of range");
    const Var out = push(Op::Slice, length, a.id);
    nodes_[out.id].aux = offset;
    std::copy_n(val(a.id) + offset, length, val(out.id));
    return out;
}

Var Tape::sum(Var a) {
    const Var out = push(Op::Sum, 1, a.id);
    double acc = 0.0;
    for (std::size_t i = 0; i < size(a); ++i) acc += val(a.id)[i];
    val(out.id)[0] = acc;
    return out;
}

Var Tape::linear_combination(std::span<const Var> inputs, std::span<const double> coeff, double constant) {
    if (inputs.size() != coeff.size()) throw DomainError("tape linear_combination: size mismatch");
    const Var out = push(Op::LinComb, 1);
    auto& node = nodes_[out.id];
    node.aux = index_pool_.size();
    node.aux_len = inputs.size();
    node.coeff = coeff_pool_.size();
    double acc = constant;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (size(inputs[i]) != 1) throw DomainError("tape linear_combination: inputs must be scalar");
        index_pool_.push_back(inputs[i].id);
        coeff_pool_.push_back(coeff[i]);
        acc += coeff[i] * val(inputs[i].id)[0];
    }
    val(out.id)[0] = acc;
    return out;
}

Var Tape::mean(std::span<const Var> inputs) {
    if (inputs.empty()) return constant(0.0);
    const Var out = push(Op::Mean, 1);
    auto& node = nodes_[out.id];
    node.aux = index_pool_.size();
    node.aux_len = inputs.size();
    double acc = 0.0;
    for (const Var in : inputs) {
        if (size(in) != 1) throw DomainError("tape mean: inputs must be scalar");
        index_pool_.push_back(in.id);
        acc += val(in.id)[0];
    }
    val(out.id)[0] = acc / static_cast<double>(inputs.size());
    return out;
}

double Tape::value(Var v) const {
    if (size(v) != 1) throw DomainError("tape value: node is not scalar");
    return val(v.id)[0];
}

std::span<const double> Tape::values(Var v) const { return {val(v.id), size(v)}; }

std::span<const double> Tape::grad(Var v) const {
    if (grads_.size() != values_.size()) return {};
    return {grads_.data() + nodes_[v.id].offset, size(v)};
}

void Tape::backward(Var out) {
    if (size(out) != 1) throw DomainError("backward requires a scalar output");
    grads_.assign(values_.size(), 0.0);
    adj(out.id)[0] = 1.0;
    for (std::size_t n = out.id + 1; n-- > 0;) {
        const Node& node = nodes_[n];
        const std::uint32_t id = static_cast<std::uint32_t>(n);
        const double* g = adj(id);
        const double* y = val(id);
        const std::size_t len = node.size;
        switch (node.op) {
            case Op::Leaf:
                break;
            case Op::Affine:
            case Op::MatVec: {
                const std::size_t cols = nodes_[node.b].size;
                const double* W = val(node.a);
                const double* X = val(node.b);
                double* gW = adj(node.a);
                double* gX = adj(node.b);
                for (std::size_t r = 0; r < len; ++r) {
                    const double gr = g[r];
                    if (gr == 0.0) continue;
                    const double* row = W + r * cols;
                    double* grow = gW + r * cols;
                    for (std::size_t j = 0; j < cols; ++j) {
                        grow[j] += gr * X[j];
                        gX[j] += gr * row[j];
                    }
                }
                if (node.op == Op::Affine) {
                    double* gB = adj(node.c);
                    for (std::size_t r = 0; r < len; ++r) gB[r] += g[r];
                }
                break;
            }
            case Op::Add:
                for (std::size_t i = 0; i < len; ++i) {
                    adj(node.a)[i] += g[i];
                    adj(node.b)[i] += g[i];
                }
                break;
            case Op::Sub:
                for (std::size_t i = 0; i < len; ++i) {
                    adj(node.a)[i] += g[i];
                    adj(node.b)[i] -= g[i];
                }
                break;
            case Op::Mul: {
                const double* A = val(node.a);
                const double* B = val(node.b);
                for (std::size_t i = 0; i < len; ++i) {
                    adj(node.a)[i] += g[i] * B[i];
                    adj(node.b)[i] += g[i] * A[i];
                }
                break;
            }
            case Op::Scale:
                for (std::size_t i = 0; i < len; ++i) adj(node.a)[i] += g[i] * node.scalar;
                break;
            case Op::AddScalar:
                for (std::size_t i = 0; i < len; ++i) adj(node.a)[i] += g[i];
                break;
            case Op::Sigmoid:
                for (std::size_t i = 0; i < len; ++i) adj(node.a)[i] += g[i] * y[i] * (1.0 - y[i]);
                break;
            case Op::Tanh:
                for (std::size_t i = 0; i < len; ++i) adj(node.a)[i] += g[i] * (1.0 - y[i] * y[i]);
                break;
            case Op::Relu: {
                const double* A = val(node.a);
                for (std::size_t i = 0; i < len; ++i)
                    if (A[i] > 0.0) adj(node.a)[i] += g[i];
                break;
            }
            case Op::Abs: {
                const double* A = val(node.a);
                for (std::size_t i = 0; i < len; ++i) {
                    if (A[i] > 0.0) adj(node.a)[i] += g[i];
                    else if (A[i] < 0.0) adj(node.a)[i] -= g[i];
                }
                break;
            }
            case Op::Square: {
                const double* A = val(node.a);
                for (std::size_t i = 0; i < len; ++i) adj(node.a)[i] += 2.0 * A[i] * g[i];
                break;
            }
            case Op::Softplus: {
                const double* A = val(node.a);
                for (std::size_t i = 0; i < len; ++i) adj(node.a)[i] += g[i] * sigmoid_value(A[i]);
                break;
            }
            case Op::Slice:
                for (std::size_t i = 0; i < len; ++i) adj(node.a)[node.aux + i] += g[i];
                break;
            case Op::Sum: {
                double* gA = adj(node.a);
                for (std::size_t i = 0; i < nodes_[node.a].size; ++i) gA[i] += g[0];
                break;
            }
            case Op::LinComb:
                for (std::size_t i = 0; i < node.aux_len; ++i) {
                    adj(index_pool_[node.aux + i])[0] += g[0] * coeff_pool_[node.coeff + i];
                }
                break;
            case Op::Mean: {
                const double share = g[0] / static_cast<double>(node.aux_len);
                for (std::size_t i = 0; i < node.aux_len; ++i) adj(index_pool_[node.aux + i])[0] += share;
                break;
            }
        }
    }
}

void Tape::clear() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
    index_pool_.clear();
    coeff_pool_.clear();
}

Adam::Adam(const ParamSet& shape, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    for (const auto& block : shape) {
        m_.emplace_back(block.size(), 0.0);
        v_.emplace_back(block.size(), 0.0);
    }
}

void Adam::step(ParamSet& params, const std::vector<std::vector<double>>& gradient) {
    if (gradient.size() != params.size() || params.size() != m_.size()) {
        throw DomainError("adam: gradient shape does not match parameters");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& w = params[b].values;
        const auto& g = gradient[b];
        if (g.size() != w.size()) throw DomainError("adam: block size mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) {
            m_[b][i] = beta1_ * m_[b][i] + (1.0 - beta1_) * g[i];
            v_[b][i] = beta2_ * v_[b][i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m_[b][i] / c1;
            const double vhat = v_[b][i] / c2;
            w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::size_t parameter_count(const ParamSet& params) {
    std::size_t n = 0;
    for (const auto& t : params) n += t.size();
    return n;
}

namespace {

Var run_program(Tape& tape, const LossProgram& program, const ParamSet& params, std::vector<Var>& leaves) {
    leaves.clear();
    for (const auto& block : params) leaves.push_back(tape.parameter(block.values));
    const Var out = program(tape, leaves);
    if (tape.size(out) != 1) throw DomainError("loss program must produce a scalar");
    return out;
}

}  // namespace

ValueAndGradient evaluate_with_gradient(const LossProgram& program, const ParamSet& params) {
    Tape tape;
    std::vector<Var> leaves;
    const Var out = run_program(tape, program, params, leaves);
    tape.backward(out);
    ValueAndGradient result;
    result.value = tape.value(out);
    for (const Var leaf : leaves) {
        const auto g = tape.grad(leaf);
        result.gradient.emplace_back(g.begin(), g.end());
    }
    return result;
}

double evaluate_loss(const LossProgram& program, const ParamSet& params) {
    Tape tape;
    std::vector<Var> leaves;
    return tape.value(run_program(tape, program, params, leaves));
}

double gradient_check(const LossProgram& program, const ParamSet& params, double eps) {
    if (!(eps > 0.0)) throw DomainError("gradient_check: eps must be > 0");
    const auto analytic = evaluate_with_gradient(program, params);
    ParamSet probe = params;
    double worst = 0.0;
    for (std::size_t b = 0; b < probe.size(); ++b) {
        for (std::size_t i = 0; i < probe[b].values.size(); ++i) {
            const double original = probe[b].values[i];
            auto at = [&](double offset) {
                probe[b].values[i] = original + offset;
                return evaluate_loss(program, probe);
            };
            const double numeric =
                (at(-2.0 * eps) - 8.0 * at(-eps) + 8.0 * at(eps) - at(2.0 * eps)) / (12.0 * eps);
            probe[b].values[i] = original;
            const double exact = analytic.gradient[b][i];
            const double scale = std::max(std::abs(numeric), std::abs(exact));
            if (scale < 1e-8) continue;
            worst = std::max(worst, std::abs(numeric - exact) / scale);
        }
    }
    return worst;
}

}  // namespace lakedo
