#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "p2lr/config.hpp"
#include "p2lr/embedder.hpp"
#include "p2lr/error.hpp"
#include "p2lr/synthgen.hpp"
#include "p2lr/types.hpp"

namespace p2lr::refinery {

inline constexpr const char* kReportSchema = "p2lr-report-1";

/// Metrics of one alternation step. Everything is measured on teacher
/// embeddings at the start of the step, before the model update.
struct StepRecord {
    int t = 0;
    double p_t = 0.0;
    double beta = 0.0;
    Index n_selected = 0;
    double mean_u_all = 0.0;
    double mean_u_selected = 0.0;
    std::optional<double> mean_u_rejected;
    double purity = 0.0;
    Index n_corrupted = 0;
    std::optional<double> detection_precision;
    std::optional<double> detection_recall;
    std::optional<double> detection_auroc;
    double wstep_loss_before = 0.0;
    double wstep_loss_after = 0.0;
    double map = 0.0;
    double rank1 = 0.0;
    double rank5 = 0.0;
    double rank10 = 0.0;
    double inertia = 0.0;
};

/// Evaluation of the final teacher after the last step: a fresh clustering
/// plus retrieval on the hidden identities.
struct Summary {
    double final_purity = 0.0;
    double final_map = 0.0;
    double final_rank1 = 0.0;
    double final_rank5 = 0.0;
    double final_rank10 = 0.0;
    std::optional<double> final_detection_auroc;
    double initial_map = 0.0;
    double initial_purity = 0.0;
};

struct Failure {
    int step = 0;
    std::string stage;
    std::string code;
    std::string message;
};

struct RefineryReport {
    RefineryConfig config;
    std::vector<StepRecord> steps;
    std::optional<Summary> summary;
    std::optional<Failure> failure;
    /// Wall-clock seconds per step. Not part of the JSON report, which must
    /// be byte-identical across runs; written to a separate timings file.
    std::vector<double> step_seconds;
};

/// Per-sample view of a step handed to observers (score dumps, checkpoints).
struct StepSnapshot {
    int t = 0;
    const Labels& pseudo_labels;
    const Labels& hidden_labels;
    const Mask* corruption_mask = nullptr;
    const std::vector<double>& scores;
    const Mask& selected;
    double beta = 0.0;
    double p_t = 0.0;
    const embedder::EmbeddingModel& student;
    const embedder::TeacherState& teacher;
};

using StepObserver = std::function<void(const StepSnapshot&)>;

/// Raised when a step fails; carries the report up to the failing step.
class RefineryAborted : public Error {
public:
    RefineryAborted(ErrorCode code, const std::string& message, RefineryReport partial)
        : Error(code, message), partial_(std::move(partial)) {}
    [[nodiscard]] const RefineryReport& partial() const noexcept { return partial_; }

private:
    RefineryReport partial_;
};

/// The synthetic target domain a config describes.
synthgen::TargetDomain make_domain(const RefineryConfig& config);

/// Full alternation for t = 0..T: teacher-embed, cluster, score, select,
/// refine the student on the selected samples, EMA-update the teacher.
RefineryReport run_refinery(const RefineryConfig& config, const StepObserver& observer = {});

struct AblationRow {
    Criterion criterion = Criterion::kl_ideal;
    int runs = 0;
    int failures = 0;
    double purity_mean = 0.0, purity_std = 0.0;
    double map_mean = 0.0, map_std = 0.0;
    double rank1_mean = 0.0, rank1_std = 0.0;
    /// Over runs whose final AUROC is defined.
    std::optional<double> auroc_mean, auroc_std;
};

struct AblationCell {
    Criterion criterion = Criterion::kl_ideal;
    std::uint64_t seed = 0;
    std::optional<RefineryReport> report;
    std::optional<std::string> error;
};

struct AblationResult {
    std::vector<AblationRow> rows;
    std::vector<AblationCell> cells;
};

/// One run per (criterion, seed). A failing cell is recorded and skipped.
AblationResult run_ablation(const RefineryConfig& base, const std::vector<Criterion>& criteria,
                            const std::vector<std::uint64_t>& seeds);

// Serialization ------------------------------------------------------------

std::string report_to_json(const RefineryReport& report);
/// Throws schema_error unless the schema field is "p2lr-report-1".
RefineryReport report_from_json(const std::string& text);
/// `t,p_t,beta,n_selected,...` one row per step.
std::string steps_to_csv(const RefineryReport& report);
std::string timings_to_json(const RefineryReport& report);
std::string ablation_to_csv(const AblationResult& result);
std::string ablation_to_json(const AblationResult& result);

} // namespace p2lr::refinery
