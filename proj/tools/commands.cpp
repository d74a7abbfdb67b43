#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "p2lr/clusterer.hpp"
#include "p2lr/embedder.hpp"
#include "p2lr/error.hpp"
#include "p2lr/feature_io.hpp"
#include "p2lr/refinery.hpp"
#include "p2lr/rng.hpp"
#include "p2lr/selector.hpp"
#include "p2lr/synthgen.hpp"
#include "p2lr/uncertainty.hpp"

namespace p2lr::cli {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// h values for the p(t) family curve
constexpr double kScheduleHs[] = {0.5, 1.0, 1.5, 3.0, 5.0};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string opt_num(const std::optional<double>& v) {
    return v ? num(*v) : std::string();
}

fs::path ensure_dir(const std::string& dir) {
    const fs::path path(dir);
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec || !fs::is_directory(path)) {
        fail(ErrorCode::io_error, "cannot create output directory " + path.string());
    }
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::io_error, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string step_name(const char* prefix, int t, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_step%03d.%s", prefix, t, ext);
    return buf;
}

std::string criterion_label(uncertainty::Criterion c) {
    return std::string(uncertainty::to_string(c));
}

nlohmann::json load_ablation(const fs::path& path) {
    auto j = nlohmann::json::parse(slurp(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("schema", "") != "p2lr-ablation-1") {
        fail(ErrorCode::schema_error, "expected schema p2lr-ablation-1 in " + path.string());
    }
    return j;
}

} // namespace

ConfigFile resolve_config(const Overrides& flags) {
    ConfigFile file = flags.config ? load_config(*flags.config) : ConfigFile{};
    auto& c = file.run;
    if (flags.seed) c.seed = *flags.seed;
    if (flags.criterion) c.criterion = criterion_from_string(*flags.criterion);
    if (flags.out) c.out_dir = *flags.out;
    if (flags.T) c.T = *flags.T;
    if (flags.k) c.k = *flags.k;
    if (flags.p0) c.p0 = *flags.p0;
    if (flags.h) c.h = *flags.h;
    if (flags.alpha) c.alpha = *flags.alpha;
    if (flags.epsilon) c.epsilon = *flags.epsilon;
    if (flags.corrupt) c.corrupt_fraction = *flags.corrupt;
    validate(c);
    return file;
}

void cmd_generate(const ConfigFile& file, bool csv) {
    const auto& c = file.run;
    const auto dir = ensure_dir(c.out_dir);
    const auto domain = refinery::make_domain(c);
    io::write_features(dir / "features.p2lrfs", domain.raw_features);
    io::write_labels(dir / "labels.p2lrlb", domain.hidden_labels);
    if (csv) {
        io::write_features_csv(dir / "features.csv", {domain.raw_features, domain.hidden_labels});
    }

    ojson side;
    side["format"] = "P2LRFS1";
    side["n"] = domain.raw_features.rows();
    side["d"] = domain.raw_features.cols();
    side["seed"] = c.seed;
    side["c_true"] = c.c_true;
    side["n_per_id"] = c.n_per_id;
    side["noise_sigma"] = c.noise_sigma;
    side["shift_scale"] = c.shift_scale;
    side["min_separation"] = c.min_separation;
    io::write_file_atomic(dir / "features.json", side.dump(2) + "\n");
    std::cout << "wrote " << domain.raw_features.rows() << "x" << domain.raw_features.cols()
              << " features to " << dir.string() << "\n";
}

void cmd_run(const ConfigFile& file) {
    const auto& c = file.run;
    const auto dir = ensure_dir(c.out_dir);

    refinery::StepObserver observer;
    if (c.dump_scores || c.dump_selection || c.checkpoint_every > 0) {
        observer = [&](const refinery::StepSnapshot& s) {
            if (c.dump_scores) {
                std::string out = "sample_index,criterion,score,pseudo_label";
                out += s.corruption_mask ? ",is_corrupted\n" : "\n";
                const auto name = std::string(to_string(c.criterion));
                for (std::size_t i = 0; i < s.scores.size(); ++i) {
                    out += std::to_string(i) + "," + name + "," + num(s.scores[i]) + "," +
                           std::to_string(s.pseudo_labels[i]);
                    if (s.corruption_mask) {
                        out += "," + std::to_string(int((*s.corruption_mask)[i]));
                    }
                    out += "\n";
                }
                io::write_file_atomic(dir / step_name("scores", s.t, "csv"), out);
            }
            if (c.dump_selection) {
                std::string out = "step,sample_index,u,selected,beta,p_t\n";
                for (std::size_t i = 0; i < s.scores.size(); ++i) {
                    out += std::to_string(s.t) + "," + std::to_string(i) + "," + num(s.scores[i]) +
                           "," + std::to_string(int(s.selected[i])) + "," + num(s.beta) + "," +
                           num(s.p_t) + "\n";
                }
                io::write_file_atomic(dir / step_name("selection", s.t, "csv"), out);
            }
            if (c.checkpoint_every > 0 && s.t % c.checkpoint_every == 0) {
                io::write_file_atomic(dir / step_name("checkpoint", s.t, "json"),
                                      embedder::checkpoint_to_json(s.student, s.teacher));
            }
        };
    }

    refinery::RefineryReport report;
    try {
        report = refinery::run_refinery(c, observer);
    } catch (const refinery::RefineryAborted& e) {
        // keep what was measured before the failure
        io::write_file_atomic(dir / "report.json", refinery::report_to_json(e.partial()));
        throw;
    }
    io::write_file_atomic(dir / "report.json", refinery::report_to_json(report));
    io::write_file_atomic(dir / "steps.csv", refinery::steps_to_csv(report));
    io::write_file_atomic(dir / "timings.json", refinery::timings_to_json(report));

    const auto& s = *report.summary;
    std::cout << "criterion=" << to_string(c.criterion) << " steps=" << report.steps.size()
              << " final_purity=" << num(s.final_purity) << " final_map=" << num(s.final_map)
              << "\n";
}

void cmd_ablate(const ConfigFile& file) {
    const auto& c = file.run;
    const auto dir = ensure_dir(c.out_dir);
    const auto criteria = file.criteria.empty()
                              ? std::vector<Criterion>{Criterion::kl_ideal, Criterion::l2_centroid,
                                                       Criterion::consistency, Criterion::reweight,
                                                       Criterion::none}
                              : file.criteria;
    const auto seeds = file.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : file.seeds;
    const auto result = refinery::run_ablation(c, criteria, seeds);
    const auto csv = refinery::ablation_to_csv(result);
    io::write_file_atomic(dir / "ablation.csv", csv);
    io::write_file_atomic(dir / "ablation.json", refinery::ablation_to_json(result));
    std::cout << csv;
}

void cmd_score(const ConfigFile& file, const ScoreInputs& inputs) {
    const auto& c = file.run;
    const Matrix features = io::read_feature_file(inputs.features);
    const auto n = static_cast<std::size_t>(features.rows());

    clusterer::ClusterModel cluster;
    if (inputs.pseudo_labels) {
        cluster.assignments = io::read_labels(*inputs.pseudo_labels);
        if (cluster.assignments.size() != n) {
            fail(ErrorCode::input_error, "pseudo labels have " +
                                             std::to_string(cluster.assignments.size()) +
                                             " entries for " + std::to_string(n) + " samples");
        }
        std::int32_t top = 0;
        for (const auto label : cluster.assignments) {
            if (label < 0) {
                fail(ErrorCode::input_error, "negative pseudo label");
            }
            top = std::max(top, label);
        }
        const std::set<std::int32_t> used(cluster.assignments.begin(), cluster.assignments.end());
        if (used.size() != static_cast<std::size_t>(top) + 1) {
            fail(ErrorCode::input_error, "pseudo labels must cover 0.." + std::to_string(top));
        }
        cluster.centroids = clusterer::cluster_means(
            features, cluster.assignments, Matrix::Zero(top + 1, features.cols()));
    } else {
        cluster = clusterer::kmeans(features, {.k = c.effective_k(),
                                               .max_iters = c.kmeans_max_iters,
                                               .tol = c.kmeans_tol,
                                               .seed = derive_seed(c.seed, 1000)});
    }

    std::vector<uncertainty::UncertaintyRecord> records;
    switch (c.criterion) {
    case Criterion::kl_ideal:
        records = uncertainty::score_all(features, cluster, c.alpha, c.epsilon);
        break;
    case Criterion::l2_centroid:
        records = uncertainty::l2_uncertainty(features, cluster);
        break;
    default:
        fail(ErrorCode::usage_error, "score supports the kl_ideal and l2_centroid criteria only");
    }

    std::optional<Mask> corrupted;
    if (inputs.corruption) {
        const auto raw = io::read_labels(*inputs.corruption);
        if (raw.size() != n) {
            fail(ErrorCode::input_error, "corruption mask length does not match the features");
        }
        corrupted = Mask(raw.begin(), raw.end());
    }

    std::string out = "sample_index,criterion,score,pseudo_label";
    out += corrupted ? ",is_corrupted\n" : "\n";
    for (const auto& r : records) {
        const auto i = static_cast<std::size_t>(r.sample_index);
        out += std::to_string(i) + "," + criterion_label(r.criterion) + "," + num(r.score) + "," +
               std::to_string(cluster.assignments[i]);
        if (corrupted) {
            out += "," + std::to_string(int((*corrupted)[i] != 0));
        }
        out += "\n";
    }
    const auto dir = ensure_dir(c.out_dir);
    io::write_file_atomic(dir / "scores.csv", out);
    std::cout << "scored " << records.size() << " samples into " << (dir / "scores.csv").string()
              << "\n";
}

void cmd_eval(const fs::path& report_path) {
    const auto report = refinery::report_from_json(slurp(report_path));
    std::cout << "criterion=" << to_string(report.config.criterion) << "\n"
              << "steps=" << report.steps.size() << "\n";
    if (report.failure) {
        std::cout << "failed_step=" << report.failure->step << "\n"
                  << "failed_stage=" << report.failure->stage << "\n"
                  << "error=" << report.failure->code << ":" << report.failure->message << "\n";
    }
    if (!report.steps.empty()) {
        const auto& first = report.steps.front();
        const auto& last = report.steps.back();
        std::cout << "mean_u_selected_first=" << num(first.mean_u_selected) << "\n"
                  << "mean_u_selected_last=" << num(last.mean_u_selected) << "\n";
    }
    if (report.summary) {
        const auto& s = *report.summary;
        std::cout << "initial_purity=" << num(s.initial_purity) << "\n"
                  << "initial_map=" << num(s.initial_map) << "\n"
                  << "final_purity=" << num(s.final_purity) << "\n"
                  << "final_map=" << num(s.final_map) << "\n"
                  << "final_rank1=" << num(s.final_rank1) << "\n"
                  << "final_rank5=" << num(s.final_rank5) << "\n"
                  << "final_rank10=" << num(s.final_rank10) << "\n"
                  << "final_detection_auroc=" << opt_num(s.final_detection_auroc) << "\n";
    }
}

void cmd_export(const fs::path& report_path, const std::optional<fs::path>& ablation_path,
                const std::string& format, const fs::path& out_dir) {
    if (format != "csv" && format != "json") {
        fail(ErrorCode::enum_error, "unknown export format '" + format + "'");
    }
    const auto report = refinery::report_from_json(slurp(report_path));
    const auto& c = report.config;
    const auto dir = ensure_dir(out_dir.string());

    std::vector<int> steps_t;
    for (int t = 0; t <= c.T; ++t) {
        steps_t.push_back(t);
    }

    if (format == "json") {
        ojson j;
        j["uncertainty"] = ojson::array();
        for (const auto& s : report.steps) {
            j["uncertainty"].push_back({{"t", s.t},
                                        {"mean_u_all", s.mean_u_all},
                                        {"mean_u_selected", s.mean_u_selected},
                                        {"mean_u_rejected", s.mean_u_rejected
                                                                ? ojson(*s.mean_u_rejected)
                                                                : ojson(nullptr)}});
        }
        j["p_t"] = ojson::array();
        for (const auto& s : report.steps) {
            j["p_t"].push_back({{"t", s.t}, {"p_t", s.p_t}});
        }
        j["schedule_by_h"] = ojson::array();
        for (const int t : steps_t) {
            ojson row{{"t", t}};
            for (const double h : kScheduleHs) {
                row["h=" + num(h)] = selector::schedule_p(t, c.T, c.p0, h);
            }
            j["schedule_by_h"].push_back(std::move(row));
        }
        if (ablation_path) {
            j["criterion_bars"] = load_ablation(*ablation_path).at("rows");
        }
        io::write_file_atomic(dir / "series.json", j.dump(2) + "\n");
        std::cout << "wrote " << (dir / "series.json").string() << "\n";
        return;
    }

    std::string u = "t,mean_u_all,mean_u_selected,mean_u_rejected\n";
    std::string p = "t,p_t\n";
    for (const auto& s : report.steps) {
        u += std::to_string(s.t) + "," + num(s.mean_u_all) + "," + num(s.mean_u_selected) + "," +
             opt_num(s.mean_u_rejected) + "\n";
        p += std::to_string(s.t) + "," + num(s.p_t) + "\n";
    }
    std::string hcurve = "t";
    for (const double h : kScheduleHs) {
        hcurve += ",h=" + num(h);
    }
    hcurve += "\n";
    for (const int t : steps_t) {
        hcurve += std::to_string(t);
        for (const double h : kScheduleHs) {
            hcurve += "," + num(selector::schedule_p(t, c.T, c.p0, h));
        }
        hcurve += "\n";
    }
    io::write_file_atomic(dir / "uncertainty_curve.csv", u);
    io::write_file_atomic(dir / "p_t_curve.csv", p);
    io::write_file_atomic(dir / "schedule_by_h.csv", hcurve);

    if (ablation_path) {
        const auto ab = load_ablation(*ablation_path);
        std::string bars = "criterion,purity_mean,purity_std,map_mean,map_std,rank1_mean,rank1_std\n";
        for (const auto& row : ab.at("rows")) {
            bars += row.at("criterion").get<std::string>();
            for (const char* key : {"purity_mean", "purity_std", "map_mean", "map_std",
                                    "rank1_mean", "rank1_std"}) {
                bars += "," + num(row.at(key).get<double>());
            }
            bars += "\n";
        }
        io::write_file_atomic(dir / "criterion_bars.csv", bars);
    }
    std::cout << "wrote series for " << report.steps.size() << " steps to " << dir.string()
              << "\n";
}

} // namespace p2lr::cli
