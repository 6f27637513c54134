#include "lakedo/config_io.hpp"

#include "lakedo/csv.hpp"
#include "lakedo/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <type_traits>
#include <set>

namespace lakedo {

using nlohmann::json;

namespace {

class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError("config section " + path_ + " must be an object");
    }

    bool has(const char* key) const { return node_.contains(key); }

    const json& child(const char* key) {
        seen_.insert(key);
        return node_.at(key);
    }

    void read(const char* key, double& out) {
        if (!has(key)) return;
        const auto& v = child(key);
        if (!v.is_number()) fail(key, "expected a number");
        out = v.get<double>();
    }
    void read(const char* key, std::size_t& out) {
        if (!has(key)) return;
        const auto& v = child(key);
        if (!v.is_number_unsigned()) fail(key, "expected a nonnegative integer");
        out = v.get<std::size_t>();
    }
    void read(const char* key, int& out) {
        if (!has(key)) return;
        const auto& v = child(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        out = v.get<int>();
    }
    void read(const char* key, bool& out) {
        if (!has(key)) return;
        const auto& v = child(key);
        if (!v.is_boolean()) fail(key, "expected true or false");
        out = v.get<bool>();
    }
    void read(const char* key, std::optional<double>& out) {
        if (!has(key)) return;
        const auto& v = child(key);
        if (v.is_null()) {
            out.reset();
            return;
        }
        if (!v.is_number()) fail(key, "expected a number or null");
        out = v.get<double>();
    }
    template <class T>
    void read(const char* key, std::vector<T>& out) {
        if (!has(key)) return;
        const auto& v = child(key);
        if (!v.is_array()) fail(key, "expected an array");
        std::vector<T> values;
        for (const auto& e : v) {
            if constexpr (std::is_integral_v<T>) {
                if (!e.is_number_unsigned()) fail(key, "expected nonnegative integers");
            } else {
                if (!e.is_number()) fail(key, "expected numbers");
            }
            values.push_back(e.get<T>());
        }
        out = std::move(values);
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) throw ConfigError("unknown config key " + path_ + "." + key);
        }
    }

private:
    [[noreturn]] void fail(const char* key, const char* why) const {
        throw ConfigError("config field " + path_ + "." + key + ": " + why);
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

// One field list per struct drives both reading and writing.
template <class Visitor>
void visit(TrainConfig& c, Visitor&& v) {
    v("lambda_mc_epi", c.lambda_mc_epi);
    v("lambda_mc_hyp", c.lambda_mc_hyp);
    v("lambda_mc_total", c.lambda_mc_total);
    v("tau_mc", c.tau_mc);
    v("learning_rate", c.learning_rate);
    v("batch_size", c.batch_size);
    v("window_length", c.window_length);
    v("validation_windows", c.validation_windows);
    v("max_epochs", c.max_epochs);
    v("patience", c.patience);
    v("hidden_size", c.hidden_size);
    v("substep_k", c.substep_k);
    v("seed", c.seed);
}

template <class Visitor>
void visit(AprilConfig& c, Visitor&& v) {
    v("gamma_factor", c.gamma_factor);
    v("volume_change_threshold", c.volume_change_threshold);
    v("k_drastic", c.k_drastic);
    v("threshold", c.threshold);
    v("discriminator_hidden", c.discriminator_hidden);
    v("imbalance_weight", c.imbalance_weight);
    v("discriminator_updates", c.discriminator_updates);
    v("discriminator_learning_rate", c.discriminator_learning_rate);
    v("per_layer_gamma", c.per_layer_gamma);
    v("retrain_from_scratch", c.retrain_from_scratch);
    v("finetune_epochs", c.finetune_epochs);
    v("finetune_early_stopping", c.finetune_early_stopping);
}

template <class Visitor>
void visit(GenConfig& c, Visitor&& v) {
    v("lakes", c.lakes);
    v("years", c.years);
    v("stratified_start", c.stratified_start);
    v("stratified_end", c.stratified_end);
    v("epi_fraction_mean", c.epi_fraction_mean);
    v("epi_fraction_drift", c.epi_fraction_drift);
    v("epi_fraction_noise", c.epi_fraction_noise);
    v("epi_fraction_cap", c.epi_fraction_cap);
    v("epi_fraction_floor", c.epi_fraction_floor);
    v("shock_probability", c.shock_probability);
    v("shock_magnitude", c.shock_magnitude);
    v("saturation_mean", c.saturation_mean);
    v("saturation_amplitude", c.saturation_amplitude);
    v("seasonal_phase", c.seasonal_phase);
    v("reaeration_rate", c.reaeration_rate);
    v("epi_production_amplitude", c.epi_production_amplitude);
    v("hyp_demand_amplitude", c.hyp_demand_amplitude);
    v("hyp_half_saturation", c.hyp_half_saturation);
    v("flux_noise", c.flux_noise);
    v("sparsity", c.sparsity);
    v("observation_sigma", c.observation_sigma);
    v("scenario_a_per_year", c.scenario_a_per_year);
    v("scenario_a_ratio", c.scenario_a_ratio);
    v("scenario_a_flux", c.scenario_a_flux);
    v("scenario_a_offset", c.scenario_a_offset);
    v("scenario_a_max_hyp_do", c.scenario_a_max_hyp_do);
    v("scenario_b_per_year", c.scenario_b_per_year);
    v("scenario_b_ratio", c.scenario_b_ratio);
    v("scenario_b_flux", c.scenario_b_flux);
    v("scenario_b_offset", c.scenario_b_offset);
    v("noise_channels", c.noise_channels);
    v("truth_substeps", c.truth_substeps);
    v("volume_mean", c.volume_mean);
    v("seed", c.seed);
}

template <class Visitor>
void visit(SweepConfig& c, Visitor&& v) {
    v("lambda_epi", c.lambda_epi);
    v("lambda_hyp", c.lambda_hyp);
}

template <class T>
void read_section(const json& root, const char* name, T& out) {
    if (!root.contains(name)) return;
    Section section(root.at(name), name);
    visit(out, [&](const char* key, auto& field) { section.read(key, field); });
    section.finish();
}

template <class T>
json write_section(const T& in) {
    json out = json::object();
    visit(const_cast<T&>(in), [&](const char* key, const auto& field) {
        using F = std::decay_t<decltype(field)>;
        if constexpr (std::is_same_v<F, std::optional<double>>) {
            out[key] = field ? json(*field) : json(nullptr);
        } else {
            out[key] = field;
        }
    });
    return out;
}

}  // namespace

void SweepConfig::validate() const {
    if (lambda_epi.empty()) throw ConfigError("sweep.lambda_epi must list at least one value");
    if (lambda_hyp.empty()) throw ConfigError("sweep.lambda_hyp must list at least one value");
    for (double l : lambda_epi)
        if (!(l >= 0.0 && l <= kMaxLambda)) throw ConfigError("sweep.lambda_epi values must lie in [0, 1000]");
    for (double l : lambda_hyp)
        if (!(l >= 0.0 && l <= kMaxLambda)) throw ConfigError("sweep.lambda_hyp values must lie in [0, 1000]");
}

void ExperimentConfig::validate() const {
    train.validate();
    april.validate();
    generate.validate();
    sweep.validate();
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    if (!root.contains("schema_version")) throw ConfigError("config field schema_version is missing");
    const auto& version = root.at("schema_version");
    if (!version.is_number_integer() || version.get<int>() != kConfigSchemaVersion) {
        throw ConfigError("config field schema_version: expected " + std::to_string(kConfigSchemaVersion));
    }
    for (const auto& [key, value] : root.items()) {
        if (key != "schema_version" && key != "train" && key != "april" && key != "generate" && key != "sweep") {
            throw ConfigError("unknown config key " + key);
        }
    }
    ExperimentConfig config;
    read_section(root, "train", config.train);
    read_section(root, "april", config.april);
    read_section(root, "generate", config.generate);
    read_section(root, "sweep", config.sweep);
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = csv::read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return parse_config(text);
}

std::string canonical_json(const ExperimentConfig& config) {
    json root = json::object();
    root["schema_version"] = kConfigSchemaVersion;
    root["train"] = write_section(config.train);
    root["april"] = write_section(config.april);
    root["generate"] = write_section(config.generate);
    root["sweep"] = write_section(config.sweep);
    return root.dump();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_json(config)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace lakedo
