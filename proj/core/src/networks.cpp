#include "lakedo/networks.hpp"

#include "lakedo/csv.hpp"
#include "lakedo/error.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace lakedo {

namespace {

constexpr const char* kCheckpointMagic = "lakedo-checkpoint 1";

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double z = std::exp(x);
    return z / (1.0 + z);
}

Tensor make_tensor(std::string name, std::size_t rows, std::size_t cols) {
    return Tensor{std::move(name), rows, cols, std::vector<double>(rows * cols, 0.0)};
}

void fill_uniform(ParamSet& blocks, double bound, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& block : blocks)
        for (double& w : block.values) w = dist(rng);
}

void check_finite(const ParamSet& blocks) {
    for (const auto& block : blocks)
        for (double w : block.values)
            if (!std::isfinite(w)) throw DomainError("parameter block '" + block.name + "' is not finite");
}

}  // namespace

FeatureMatrix features_of(const LakeSeries& series) {
    return {series.features, series.size(), series.feature_count};
}

PredictorParams PredictorParams::zeros(std::size_t m, std::size_t h) {
    PredictorParams p;
    p.feature_count = m;
    p.hidden_size = h;
    p.blocks.push_back(make_tensor("lstm.input_weights", 4 * h, m));
    p.blocks.push_back(make_tensor("lstm.recurrent_weights", 4 * h, h));
    p.blocks.push_back(make_tensor("lstm.bias", 4 * h, 1));
    p.blocks.push_back(make_tensor("head.weights", 3, h));
    p.blocks.push_back(make_tensor("head.bias", 3, 1));
    return p;
}

PredictorParams PredictorParams::initialize(std::size_t m, std::size_t h, std::uint64_t seed) {
    auto p = zeros(m, h);
    fill_uniform(p.blocks, 1.0 / std::sqrt(static_cast<double>(h)), seed);
    return p;
}

void PredictorParams::validate() const {
    if (hidden_size < kMinHidden || hidden_size > kMaxHidden) {
        throw DomainError("hidden size " + std::to_string(hidden_size) + " outside [20, 200]");
    }
    const auto ref = zeros(feature_count, hidden_size);
    if (blocks.size() != ref.blocks.size()) throw DomainError("predictor: wrong number of parameter blocks");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].rows != ref.blocks[b].rows || blocks[b].cols != ref.blocks[b].cols ||
            blocks[b].values.size() != ref.blocks[b].values.size()) {
            throw DomainError("predictor: block '" + ref.blocks[b].name + "' has the wrong shape");
        }
    }
    check_finite(blocks);
}

std::vector<LayerState> predictor_forward(const PredictorParams& p, FeatureMatrix x) {
    if (x.cols != p.feature_count) {
        throw DomainError("feature dimension " + std::to_string(x.cols) + " does not match predictor input " +
                          std::to_string(p.feature_count));
    }
    const std::size_t H = p.hidden_size;
    const std::size_t m = p.feature_count;
    const auto& Wx = p.blocks[PredictorParams::kInputWeights].values;
    const auto& Wh = p.blocks[PredictorParams::kRecurrentWeights].values;
    const auto& bias = p.blocks[PredictorParams::kGateBias].values;
    const auto& Wo = p.blocks[PredictorParams::kHeadWeights].values;
    const auto& bo = p.blocks[PredictorParams::kHeadBias].values;

    std::vector<double> h(H, 0.0), c(H, 0.0), z(4 * H);
    std::vector<LayerState> out(x.rows);
    for (std::size_t t = 0; t < x.rows; ++t) {
        const auto xt = x.row(t);
        for (std::size_t r = 0; r < 4 * H; ++r) {
            double acc = bias[r];
            for (std::size_t j = 0; j < m; ++j) acc += Wx[r * m + j] * xt[j];
            for (std::size_t j = 0; j < H; ++j) acc += Wh[r * H + j] * h[j];
            z[r] = acc;
        }
        for (std::size_t j = 0; j < H; ++j) {
            const double in = sigmoid(z[j]);
            const double forget = sigmoid(z[H + j]);
            const double outg = sigmoid(z[2 * H + j]);
            const double cand = std::tanh(z[3 * H + j]);
            c[j] = forget * c[j] + in * cand;
            h[j] = outg * std::tanh(c[j]);
        }
        double heads[3];
        for (std::size_t r = 0; r < 3; ++r) {
            double acc = bo[r];
            for (std::size_t j = 0; j < H; ++j) acc += Wo[r * H + j] * h[j];
            heads[r] = acc;
        }
        out[t] = LayerState{heads[0], heads[1], heads[2]};
    }
    return out;
}

std::vector<Var> predictor_forward(Tape& tape, const PredictorParams& p, std::span<const Var> blocks,
                                   FeatureMatrix x) {
    if (x.cols != p.feature_count) {
        throw DomainError("feature dimension " + std::to_string(x.cols) + " does not match predictor input " +
                          std::to_string(p.feature_count));
    }
    if (blocks.size() != PredictorParams::kBlockCount) throw DomainError("predictor: wrong leaf count");
    const std::size_t H = p.hidden_size;
    const std::vector<double> zeros(H, 0.0);
    Var h = tape.constant(zeros);
    Var c = tape.constant(zeros);
    std::vector<Var> out;
    out.reserve(x.rows);
    for (std::size_t t = 0; t < x.rows; ++t) {
        const Var xt = tape.constant(x.row(t));
        const Var z = tape.add(tape.affine(blocks[PredictorParams::kInputWeights], xt,
                                           blocks[PredictorParams::kGateBias]),
                               tape.matvec(blocks[PredictorParams::kRecurrentWeights], h));
        const Var in = tape.sigmoid(tape.slice(z, 0, H));
        const Var forget = tape.sigmoid(tape.slice(z, H, H));
        const Var outg = tape.sigmoid(tape.slice(z, 2 * H, H));
        const Var cand = tape.tanh(tape.slice(z, 3 * H, H));
        c = tape.add(tape.mul(forget, c), tape.mul(in, cand));
        h = tape.mul(outg, tape.tanh(c));
        out.push_back(tape.affine(blocks[PredictorParams::kHeadWeights], h, blocks[PredictorParams::kHeadBias]));
    }
    return out;
}

std::vector<LayerState> predict_series(const PredictorParams& params, const LakeSeries& series,
                                       std::size_t window_length) {
    if (window_length == 0) throw DomainError("window length must be > 0");
    std::vector<LayerState> out;
    out.reserve(series.size());
    const auto all = features_of(series);
    for (std::size_t begin = 0; begin < series.size(); begin += window_length) {
        const std::size_t rows = std::min(window_length, series.size() - begin);
        const FeatureMatrix window{all.data.subspan(begin * all.cols, rows * all.cols), rows, all.cols};
        auto part = predictor_forward(params, window);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

DiscriminatorParams DiscriminatorParams::zeros(std::size_t input_size, std::vector<std::size_t> hidden) {
    DiscriminatorParams d;
    d.input_size = input_size;
    d.hidden = std::move(hidden);
    std::size_t fan_in = input_size;
    for (std::size_t l = 0; l < d.hidden.size(); ++l) {
        d.blocks.push_back(make_tensor("disc.w" + std::to_string(l), d.hidden[l], fan_in));
        d.blocks.push_back(make_tensor("disc.b" + std::to_string(l), d.hidden[l], 1));
        fan_in = d.hidden[l];
    }
    d.blocks.push_back(make_tensor("disc.w_out", 1, fan_in));
    d.blocks.push_back(make_tensor("disc.b_out", 1, 1));
    return d;
}

DiscriminatorParams DiscriminatorParams::initialize(std::size_t input_size, std::vector<std::size_t> hidden,
                                                    std::uint64_t seed) {
    auto d = zeros(input_size, std::move(hidden));
    std::mt19937_64 rng(seed);
    for (auto& block : d.blocks) {
        // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases share the bound of their layer.
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(block.cols, 1)));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : block.values) w = dist(rng);
    }
    return d;
}

void DiscriminatorParams::validate() const {
    if (hidden.empty()) throw DomainError("discriminator needs at least one hidden layer");
    const auto ref = zeros(input_size, hidden);
    if (blocks.size() != ref.blocks.size()) throw DomainError("discriminator: wrong number of blocks");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].rows != ref.blocks[b].rows || blocks[b].cols != ref.blocks[b].cols ||
            blocks[b].values.size() != ref.blocks[b].values.size()) {
            throw DomainError("discriminator: block '" + ref.blocks[b].name + "' has the wrong shape");
        }
    }
    check_finite(blocks);
}

double discriminator_logit(const DiscriminatorParams& d, std::span<const double> x) {
    if (x.size() != d.input_size) {
        throw DomainError("discriminator input has " + std::to_string(x.size()) + " features, expected " +
                          std::to_string(d.input_size));
    }
    std::vector<double> a(x.begin(), x.end()), next;
    const std::size_t layers = d.hidden.size();
    for (std::size_t l = 0; l <= layers; ++l) {
        const auto& W = d.blocks[2 * l];
        const auto& b = d.blocks[2 * l + 1];
        next.assign(W.rows, 0.0);
        for (std::size_t r = 0; r < W.rows; ++r) {
            double acc = b.values[r];
            for (std::size_t j = 0; j < W.cols; ++j) acc += W.values[r * W.cols + j] * a[j];
            next[r] = l < layers ? std::tanh(acc) : acc;
        }
        a.swap(next);
    }
    return a[0];
}

double discriminator_forward(const DiscriminatorParams& d, std::span<const double> x) {
    return sigmoid(discriminator_logit(d, x));
}

Var discriminator_logit(Tape& tape, const DiscriminatorParams& d, std::span<const Var> blocks, Var x) {
    if (tape.size(x) != d.input_size) throw DomainError("discriminator input size mismatch");
    if (blocks.size() != d.blocks.size()) throw DomainError("discriminator: wrong leaf count");
    const std::size_t layers = d.hidden.size();
    Var a = x;
    for (std::size_t l = 0; l < layers; ++l) a = tape.tanh(tape.affine(blocks[2 * l], a, blocks[2 * l + 1]));
    return tape.affine(blocks[2 * layers], a, blocks[2 * layers + 1]);
}

std::string format_checkpoint(const Checkpoint& cp) {
    std::ostringstream out;
    out << kCheckpointMagic << '\n';
    for (const auto& [key, value] : cp.meta) out << "meta " << key << ' ' << value << '\n';
    for (const auto& block : cp.blocks) {
        out << "block " << block.name << ' ' << block.rows << ' ' << block.cols << '\n';
        for (std::size_t r = 0; r < block.rows; ++r) {
            for (std::size_t c = 0; c < block.cols; ++c) {
                out << (c ? " " : "") << csv::format_double(block.values[r * block.cols + c]);
            }
            out << '\n';
        }
    }
    out << "end\n";
    return out.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic) {
        throw SchemaError("checkpoint: missing header '" + std::string(kCheckpointMagic) + "'");
    }
    Checkpoint cp;
    std::size_t line_no = 1;
    bool ended = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string kind;
        fields >> kind;
        if (kind == "meta") {
            std::string key, value;
            fields >> key;
            std::getline(fields >> std::ws, value);
            if (key.empty()) throw SchemaError("checkpoint line " + std::to_string(line_no) + ": empty meta key");
            cp.meta[key] = value;
        } else if (kind == "block") {
            Tensor t;
            if (!(fields >> t.name >> t.rows >> t.cols)) {
                throw SchemaError("checkpoint line " + std::to_string(line_no) + ": malformed block header");
            }
            t.values.reserve(t.rows * t.cols);
            for (std::size_t r = 0; r < t.rows; ++r) {
                if (!std::getline(in, line)) throw SchemaError("checkpoint: truncated block '" + t.name + "'");
                ++line_no;
                std::size_t count = 0;
                std::istringstream row(line);
                std::string token;
                while (row >> token) {
                    t.values.push_back(csv::parse_double(token, "checkpoint line " + std::to_string(line_no)));
                    ++count;
                }
                if (count != t.cols) {
                    throw SchemaError("checkpoint line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(t.cols) + " values in block '" + t.name + "'");
                }
            }
            cp.blocks.push_back(std::move(t));
        } else if (kind == "end") {
            ended = true;
            break;
        } else if (!kind.empty()) {
            throw SchemaError("checkpoint line " + std::to_string(line_no) + ": unexpected '" + kind + "'");
        }
    }
    if (!ended) throw SchemaError("checkpoint: missing 'end' marker");
    return cp;
}

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    csv::write_file_atomic(path, format_checkpoint(checkpoint));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(csv::read_file(path)); }

namespace {

std::size_t meta_size(const Checkpoint& cp, const std::string& key) {
    const auto it = cp.meta.find(key);
    if (it == cp.meta.end()) throw SchemaError("checkpoint: missing meta '" + key + "'");
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw SchemaError("checkpoint: meta '" + key + "' is not an unsigned integer");
    }
}

void require_kind(const Checkpoint& cp, const char* kind) {
    const auto it = cp.meta.find("kind");
    if (it == cp.meta.end() || it->second != kind) {
        throw SchemaError(std::string("checkpoint: expected kind '") + kind + "'");
    }
}

}  // namespace

Checkpoint to_checkpoint(const PredictorParams& p) {
    Checkpoint cp;
    cp.meta["kind"] = "predictor";
    cp.meta["features"] = std::to_string(p.feature_count);
    cp.meta["hidden"] = std::to_string(p.hidden_size);
    cp.blocks = p.blocks;
    return cp;
}

PredictorParams predictor_from_checkpoint(const Checkpoint& cp) {
    require_kind(cp, "predictor");
    PredictorParams p;
    p.feature_count = meta_size(cp, "features");
    p.hidden_size = meta_size(cp, "hidden");
    p.blocks = cp.blocks;
    p.validate();
    return p;
}

Checkpoint to_checkpoint(const DiscriminatorParams& d) {
    Checkpoint cp;
    cp.meta["kind"] = "discriminator";
    cp.meta["inputs"] = std::to_string(d.input_size);
    std::string widths;
    for (std::size_t l = 0; l < d.hidden.size(); ++l) widths += (l ? "," : "") + std::to_string(d.hidden[l]);
    cp.meta["hidden"] = widths;
    cp.blocks = d.blocks;
    return cp;
}

DiscriminatorParams discriminator_from_checkpoint(const Checkpoint& cp) {
    require_kind(cp, "discriminator");
    DiscriminatorParams d;
    d.input_size = meta_size(cp, "inputs");
    const auto it = cp.meta.find("hidden");
    if (it == cp.meta.end()) throw SchemaError("checkpoint: missing meta 'hidden'");
    for (auto cell : csv::split_line(it->second)) {
        d.hidden.push_back(static_cast<std::size_t>(csv::parse_double(cell, "checkpoint hidden widths")));
    }
    d.blocks = cp.blocks;
    d.validate();
    return d;
}

}  // namespace lakedo
