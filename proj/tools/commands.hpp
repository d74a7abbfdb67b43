#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "p2lr/config.hpp"

namespace p2lr::cli {

/// Flags shared by every subcommand. Set values win over the config file.
struct Overrides {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> criterion;
    std::optional<std::string> out;
    std::optional<int> T;
    std::optional<int> k;
    std::optional<double> p0;
    std::optional<double> h;
    std::optional<double> alpha;
    std::optional<double> epsilon;
    std::optional<double> corrupt;
};

/// Config file (or defaults) with overrides applied, validated.
ConfigFile resolve_config(const Overrides& flags);

void cmd_generate(const ConfigFile& file, bool csv);
void cmd_run(const ConfigFile& file);
void cmd_ablate(const ConfigFile& file);

struct ScoreInputs {
    std::filesystem::path features;
    std::optional<std::filesystem::path> pseudo_labels;
    std::optional<std::filesystem::path> corruption;
};
void cmd_score(const ConfigFile& file, const ScoreInputs& inputs);

/// Prints `key=value` lines for the final metrics of a report.
void cmd_eval(const std::filesystem::path& report_path);

/// Plot-ready series: uncertainty curve, p_t curve and p(t) over several h;
/// with an ablation file also the per-criterion bars.
void cmd_export(const std::filesystem::path& report_path,
                const std::optional<std::filesystem::path>& ablation_path,
                const std::string& format, const std::filesystem::path& out_dir);

} // namespace p2lr::cli
