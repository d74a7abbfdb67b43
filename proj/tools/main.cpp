#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "p2lr/error.hpp"

namespace {

int report_error(p2lr::ErrorCode code, const std::string& message) {
    std::cerr << p2lr::to_string(code) << ":" << message << "\n";
    return p2lr::exit_code(code);
}

void add_run_flags(CLI::App* cmd, p2lr::cli::Overrides& o) {
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--criterion", o.criterion, "kl_ideal, l2_centroid, consistency, "
                                                "internal_classifier, reweight or none");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--T", o.T, "number of refinement steps");
    cmd->add_option("--k", o.k, "cluster count (0 = number of identities)");
    cmd->add_option("--p0", o.p0, "initial selected fraction");
    cmd->add_option("--h", o.h, "schedule curvature");
    cmd->add_option("--alpha", o.alpha, "cosine classifier temperature");
    cmd->add_option("--epsilon", o.epsilon, "mass of the ideal distribution on the label");
    cmd->add_option("--corrupt", o.corrupt, "fraction of pseudo labels to corrupt");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uncertainty-guided progressive pseudo-label refinement"};
    // "--h" is the schedule curvature, so help is long-form only
    app.set_help_flag("--help", "print this help and exit");
    app.require_subcommand(1, 1);

    p2lr::cli::Overrides flags;

    auto* generate = app.add_subcommand("generate", "write a synthetic target domain");
    add_run_flags(generate, flags);
    bool csv = false;
    generate->add_flag("--csv", csv, "also write features.csv");

    auto* run = app.add_subcommand("run", "run the refinement loop and write a report");
    add_run_flags(run, flags);

    auto* ablate = app.add_subcommand("ablate", "compare criteria over several seeds");
    add_run_flags(ablate, flags);
    std::vector<std::string> criteria;
    std::vector<std::uint64_t> seeds;
    ablate->add_option("--criteria", criteria, "criteria to compare")->delimiter(',');
    ablate->add_option("--seeds", seeds, "seeds to run")->delimiter(',');

    auto* score = app.add_subcommand("score", "score a feature file against its clusters");
    add_run_flags(score, flags);
    p2lr::cli::ScoreInputs score_inputs;
    score->add_option("--features", score_inputs.features, "P2LRFS1 or CSV features")->required();
    score->add_option("--labels", score_inputs.pseudo_labels,
                      "P2LRLB1 pseudo labels (default: k-means)");
    score->add_option("--corruption", score_inputs.corruption,
                      "P2LRLB1 0/1 corruption mask to append as a column");

    auto* eval = app.add_subcommand("eval", "print the metrics of a report");
    std::filesystem::path report_path;
    eval->add_option("report", report_path, "report.json")->required();

    auto* exporter = app.add_subcommand("export", "write plot-ready series from a report");
    std::filesystem::path export_report;
    std::optional<std::filesystem::path> ablation_path;
    std::string format = "csv";
    std::string export_out = ".";
    exporter->add_option("report", export_report, "report.json")->required();
    exporter->add_option("--ablation", ablation_path, "ablation.json for per-criterion bars");
    exporter->add_option("--format", format, "csv or json");
    exporter->add_option("--out", export_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(p2lr::ErrorCode::usage_error, e.what());
    }

    try {
        if (*eval) {
            p2lr::cli::cmd_eval(report_path);
        } else if (*exporter) {
            p2lr::cli::cmd_export(export_report, ablation_path, format, export_out);
        } else {
            auto file = p2lr::cli::resolve_config(flags);
            if (*generate) {
                p2lr::cli::cmd_generate(file, csv);
            } else if (*run) {
                p2lr::cli::cmd_run(file);
            } else if (*ablate) {
                if (!criteria.empty()) {
                    file.criteria.clear();
                    for (const auto& name : criteria) {
                        file.criteria.push_back(p2lr::criterion_from_string(name));
                    }
                }
                if (!seeds.empty()) {
                    file.seeds = seeds;
                }
                p2lr::cli::cmd_ablate(file);
            } else if (*score) {
                p2lr::cli::cmd_score(file, score_inputs);
            }
        }
    } catch (const p2lr::Error& e) {
        return report_error(e.code(), e.what());
    } catch (const std::exception& e) {
        return report_error(p2lr::ErrorCode::io_error, e.what());
    }
    return 0;
}
