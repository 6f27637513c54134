/**
 * @file networks.hpp
 * @brief The recurrent DO generator and the mild/drastic discriminator,
 *        each with a plain forward pass and a tape-recording one.
 *
 * Generator: a four-gate LSTM cell (input, forget, output, candidate)
 * followed by three affine heads (epi, hyp, total) emitted every day.
 * Discriminator: tanh MLP with a sigmoid output giving P(day is mild).
 */
#pragma once

#include "lakedo/autodiff.hpp"
#include "lakedo/physics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lakedo {

/// Row-major T x m view of per-day features.
struct FeatureMatrix {
    std::span<const double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const double> row(std::size_t t) const { return data.subspan(t * cols, cols); }
};

FeatureMatrix features_of(const LakeSeries& series);

inline constexpr std::size_t kMinHidden = 20;
inline constexpr std::size_t kMaxHidden = 200;

struct PredictorParams {
    // Block order in `blocks`.
    enum Block : std::size_t { kInputWeights, kRecurrentWeights, kGateBias, kHeadWeights, kHeadBias, kBlockCount };

    std::size_t feature_count = 0;
    std::size_t hidden_size = 0;
    ParamSet blocks;

    /// Uniform in [-1/sqrt(H), 1/sqrt(H)] from `seed`.
    static PredictorParams initialize(std::size_t feature_count, std::size_t hidden_size, std::uint64_t seed);
    static PredictorParams zeros(std::size_t feature_count, std::size_t hidden_size);

    /// Throws DomainError on shape mismatch, non-finite weights or H out of range.
    void validate() const;
};

/// Per-day predictions; all three heads are set on every day.
std::vector<LayerState> predictor_forward(const PredictorParams& params, FeatureMatrix features);

/// Tape version; `blocks` are the parameter leaves in Block order. Returns
/// one 3-vector node (epi, hyp, total) per day.
std::vector<Var> predictor_forward(Tape& tape, const PredictorParams& shape, std::span<const Var> blocks,
                                   FeatureMatrix features);

/// Predictions for a whole series, restarting the recurrent state every
/// `window_length` days from the series start (matches training windows).
std::vector<LayerState> predict_series(const PredictorParams& params, const LakeSeries& series,
                                       std::size_t window_length);

struct DiscriminatorParams {
    std::size_t input_size = 0;
    std::vector<std::size_t> hidden;  // widths of the tanh layers
    ParamSet blocks;                  // W0, b0, W1, b1, ..., W_out, b_out

    static DiscriminatorParams initialize(std::size_t input_size, std::vector<std::size_t> hidden,
                                          std::uint64_t seed);
    static DiscriminatorParams zeros(std::size_t input_size, std::vector<std::size_t> hidden);
    void validate() const;
};

/// Probability in (0, 1) that the day is mild.
double discriminator_forward(const DiscriminatorParams& params, std::span<const double> x);
/// Pre-sigmoid logit.
double discriminator_logit(const DiscriminatorParams& params, std::span<const double> x);
/// Tape version returning the scalar logit node.
Var discriminator_logit(Tape& tape, const DiscriminatorParams& shape, std::span<const Var> blocks, Var x);

/// Text checkpoint: a magic line, `meta key value` lines, then
/// `block name rows cols` headers each followed by `rows` lines of
/// space-separated values at 17 significant digits, closed by `end`.
struct Checkpoint {
    std::map<std::string, std::string> meta;
    ParamSet blocks;
};

std::string format_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);
void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(const PredictorParams& params);
PredictorParams predictor_from_checkpoint(const Checkpoint& checkpoint);
Checkpoint to_checkpoint(const DiscriminatorParams& params);
DiscriminatorParams discriminator_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace lakedo
