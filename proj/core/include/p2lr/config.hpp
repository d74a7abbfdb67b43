#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace p2lr {

/// Sample-scoring criterion driving the refinery. `none` selects every
/// sample at every step (the plain clustering baseline).
enum class Criterion { kl_ideal, l2_centroid, consistency, internal_classifier, reweight, none };

std::string_view to_string(Criterion criterion) noexcept;
/// Throws enum_error on unknown names.
Criterion criterion_from_string(std::string_view name);
std::vector<Criterion> all_criteria();

/// Full-length step count; runs default to a shorter
/// horizon to keep the test suite fast.
inline constexpr int kFullLengthSteps = 100;

struct RefineryConfig {
    std::uint64_t seed = 0;

    // synthetic target domain
    int c_true = 20;
    int d = 16;
    int n_per_id = 30;
    double noise_sigma = 0.1;
    double shift_scale = 0.2;
    double min_separation = 0.5;
    double corrupt_fraction = 0.0;

    // clustering; k = 0 means k = c_true
    int k = 0;
    int kmeans_max_iters = 100;
    double kmeans_tol = 1e-10;
    int recluster_every = 1;
    bool warm_start = false;

    // uncertainty and schedule
    double alpha = 20.0;
    double epsilon = 0.99;
    double p0 = 0.3;
    double h = 1.5;
    int T = 30;

    // model refinement
    double lr = 1e-2;
    int n_grad_steps = 25;
    double momentum = 0.9;
    /// Reweighting temperature; 0 means the mean uncertainty of the step.
    double reweight_temperature = 0.0;

    Criterion criterion = Criterion::kl_ideal;

    // evaluation
    double query_fraction = 0.3;

    // outputs (used by the CLI)
    std::string out_dir = "p2lr_out";
    int checkpoint_every = 0;
    bool dump_scores = false;
    bool dump_selection = false;

    [[nodiscard]] int effective_k() const { return k > 0 ? k : c_true; }
};

/// Throws config_error naming the first offending key.
void validate(const RefineryConfig& config);

/// Contents of a config file: run parameters plus optional sweep axes for
/// the ablation command.
struct ConfigFile {
    RefineryConfig run;
    std::vector<Criterion> criteria;
    std::vector<std::uint64_t> seeds;
};

/// Parses a flat JSON object with "version": 1. Unknown keys are rejected.
ConfigFile parse_config(std::string_view json_text);
ConfigFile load_config(const std::filesystem::path& path);

/// Flat JSON object (ordered keys) echoing every run parameter.
std::string config_to_json(const RefineryConfig& config, int indent = 2);

} // namespace p2lr
