#include "p2lr/refinery.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "p2lr/clusterer.hpp"
#include "p2lr/evalkit.hpp"
#include "p2lr/rng.hpp"
#include "p2lr/selector.hpp"
#include "p2lr/uncertainty.hpp"

namespace p2lr::refinery {
namespace {

// Seed streams, one per random consumer.
enum Stream : std::uint64_t {
    kPrototypes = 1,
    kTarget = 2,
    kRetrievalSplit = 3,
    kFinalClustering = 4,
    kClusteringBase = 1'000,
    kCorruptionBase = 1'000'000,
};

double mean(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

// Tracks which stage is running so failures carry "step t, stage s".
struct StageGuard {
    std::string& slot;
    StageGuard(std::string& s, const char* name) : slot(s) { slot = name; }
};

bool uses_binary_selection(Criterion c) {
    return c == Criterion::kl_ideal || c == Criterion::l2_centroid || c == Criterion::consistency ||
           c == Criterion::internal_classifier;
}

} // namespace

synthgen::TargetDomain make_domain(const RefineryConfig& config) {
    const auto prototypes = synthgen::generate_prototypes(
        config.c_true, config.d, config.min_separation, derive_seed(config.seed, kPrototypes));
    return synthgen::sample_target(prototypes, config.n_per_id, config.noise_sigma,
                                   config.shift_scale, derive_seed(config.seed, kTarget));
}

RefineryReport run_refinery(const RefineryConfig& config, const StepObserver& observer) {
    validate(config);
    RefineryReport report;
    report.config = config;

    std::string stage = "setup";
    int current_step = -1;
    try {
        const auto domain = make_domain(config);
        const Matrix& raw = domain.raw_features;
        const Labels& hidden = domain.hidden_labels;
        const auto n = static_cast<Index>(raw.rows());
        const Index k = config.effective_k();
        const auto split_seed = derive_seed(config.seed, kRetrievalSplit);

        // Source-biased starting point: the identity map ignores the domain shift.
        embedder::EmbeddingModel student = embedder::EmbeddingModel::identity(config.d);
        embedder::TeacherState teacher{student, config.momentum};

        clusterer::ClusterModel cluster;
        Labels pseudo_labels;
        Mask corruption_mask;
        std::optional<Matrix> internal_classifier;
        const bool internal = config.criterion == Criterion::internal_classifier;

        for (int t = 0; t <= config.T; ++t) {
            current_step = t;
            const auto started = std::chrono::steady_clock::now();
            StepRecord rec;
            rec.t = t;

            Matrix teacher_feats;
            Matrix student_feats;
            {
                StageGuard g(stage, "embed");
                teacher_feats = embedder::embed(teacher.model, raw);
                if (config.criterion == Criterion::consistency) {
                    student_feats = embedder::embed(student, raw);
                }
            }

            {
                StageGuard g(stage, "cluster");
                if (t % config.recluster_every == 0) {
                    clusterer::KMeansOptions opts;
                    opts.k = k;
                    opts.max_iters = config.kmeans_max_iters;
                    opts.tol = config.kmeans_tol;
                    opts.seed = derive_seed(config.seed, kClusteringBase + static_cast<std::uint64_t>(t));
                    // The internal classifier is indexed by cluster id, so its
                    // runs keep cluster ids stable through warm starts.
                    if ((config.warm_start || internal) && t > 0) {
                        opts.initial_centroids = cluster.centroids;
                    }
                    cluster = clusterer::kmeans(teacher_feats, opts);
                    pseudo_labels = cluster.assignments;
                    corruption_mask.assign(static_cast<std::size_t>(n), 0);
                    if (config.corrupt_fraction > 0.0) {
                        auto corrupted = synthgen::corrupt_labels(
                            pseudo_labels, config.corrupt_fraction, k,
                            derive_seed(config.seed, kCorruptionBase + static_cast<std::uint64_t>(t)));
                        pseudo_labels = std::move(corrupted.labels);
                        corruption_mask = std::move(corrupted.mask);
                    }
                    cluster.assignments = pseudo_labels;
                } else {
                    cluster.centroids =
                        clusterer::cluster_means(teacher_feats, pseudo_labels, cluster.centroids);
                }
                rec.inertia = cluster.inertia;
                rec.n_corrupted = selector::count_selected(corruption_mask);
                if (internal && !internal_classifier) {
                    internal_classifier = cluster.centroids;
                }
            }
            const Matrix& classifier = internal ? *internal_classifier : cluster.centroids;

            std::vector<double> scores;
            {
                StageGuard g(stage, "score");
                switch (config.criterion) {
                case Criterion::l2_centroid:
                    scores = uncertainty::scores_of(uncertainty::l2_uncertainty(teacher_feats, cluster));
                    break;
                case Criterion::consistency:
                    scores = uncertainty::scores_of(uncertainty::consistency_uncertainty(
                        teacher_feats, student_feats, cluster, config.alpha));
                    break;
                default:
                    scores = uncertainty::scores_of(uncertainty::score_all(
                        teacher_feats, classifier, pseudo_labels, config.alpha, config.epsilon));
                    break;
                }
            }

            Mask selected;
            std::vector<double> sample_weights;
            {
                StageGuard g(stage, "select");
                if (uses_binary_selection(config.criterion)) {
                    rec.p_t = selector::schedule_p(t, config.T, config.p0, config.h);
                    const auto threshold = selector::compute_beta(scores, rec.p_t);
                    selected = selector::vstep(scores, threshold.beta, threshold.count);
                    rec.beta = threshold.beta;
                } else {
                    rec.p_t = 1.0;
                    rec.beta = *std::max_element(scores.begin(), scores.end());
                    selected.assign(static_cast<std::size_t>(n), 1);
                }
                rec.n_selected = selector::count_selected(selected);
                if (config.criterion == Criterion::reweight) {
                    const double temperature = config.reweight_temperature > 0.0
                                                   ? config.reweight_temperature
                                                   : std::max(mean(scores), 1e-12);
                    sample_weights = selector::reweight_indicators(scores, temperature);
                } else {
                    sample_weights.resize(selected.size());
                    std::transform(selected.begin(), selected.end(), sample_weights.begin(),
                                   [](auto v) { return v ? 1.0 : 0.0; });
                }

                std::vector<double> in;
                std::vector<double> out;
                for (std::size_t i = 0; i < scores.size(); ++i) {
                    (selected[i] ? in : out).push_back(scores[i]);
                }
                rec.mean_u_all = mean(scores);
                rec.mean_u_selected = mean(in);
                if (!out.empty()) {
                    rec.mean_u_rejected = mean(out);
                }
            }

            {
                StageGuard g(stage, "evaluate");
                rec.purity = clusterer::cluster_purity(pseudo_labels, hidden);
                const Mask wrong = clusterer::majority_wrong_mask(pseudo_labels, hidden);
                const double wrong_rate = 1.0 - rec.purity;
                const auto detection = evalkit::detection_metrics(
                    scores, wrong, wrong_rate > 0.0 ? wrong_rate : 1.0 / static_cast<double>(n));
                rec.detection_precision = detection.precision;
                rec.detection_recall = detection.recall;
                rec.detection_auroc = detection.auroc;
                const auto retrieval =
                    evalkit::retrieval_eval(teacher_feats, hidden, config.query_fraction, split_seed);
                rec.map = retrieval.map;
                rec.rank1 = retrieval.cmc.at(1);
                rec.rank5 = retrieval.cmc.at(5);
                rec.rank10 = retrieval.cmc.at(10);
            }

            if (observer) {
                StageGuard g(stage, "observe");
                observer(StepSnapshot{t, pseudo_labels, hidden, &corruption_mask, scores, selected,
                                      rec.beta, rec.p_t, student, teacher});
            }

            {
                StageGuard g(stage, "wstep");
                const embedder::WStepProblem problem{raw,           classifier,   pseudo_labels,
                                                     sample_weights, config.alpha, config.epsilon};
                const embedder::OptimizeOptions options{config.lr, config.n_grad_steps, 20};
                embedder::OptimizeTrace trace;
                if (internal) {
                    student = embedder::wstep_optimize_joint(student, *internal_classifier, problem,
                                                             options, &trace);
                } else {
                    student = embedder::wstep_optimize(student, problem, options, &trace);
                }
                rec.wstep_loss_before = trace.loss_before;
                rec.wstep_loss_after = trace.loss_after;
            }
            {
                StageGuard g(stage, "ema");
                teacher = embedder::ema_update(teacher, student);
            }

            report.steps.push_back(rec);
            report.step_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
        }

        current_step = config.T + 1;
        StageGuard g(stage, "summary");
        const Matrix final_feats = embedder::embed(teacher.model, raw);
        clusterer::KMeansOptions opts;
        opts.k = k;
        opts.max_iters = config.kmeans_max_iters;
        opts.tol = config.kmeans_tol;
        opts.seed = derive_seed(config.seed, kFinalClustering);
        const auto final_cluster = clusterer::kmeans(final_feats, opts);
        const auto final_retrieval =
            evalkit::retrieval_eval(final_feats, hidden, config.query_fraction, split_seed);
        Summary summary;
        summary.final_purity = clusterer::cluster_purity(final_cluster.assignments, hidden);
        summary.final_map = final_retrieval.map;
        summary.final_rank1 = final_retrieval.cmc.at(1);
        summary.final_rank5 = final_retrieval.cmc.at(5);
        summary.final_rank10 = final_retrieval.cmc.at(10);
        summary.final_detection_auroc = report.steps.back().detection_auroc;
        summary.initial_map = report.steps.front().map;
        summary.initial_purity = report.steps.front().purity;
        report.summary = summary;
    } catch (const Error& e) {
        report.failure = Failure{current_step, stage, std::string(to_string(e.code())), e.what()};
        throw RefineryAborted(e.code(),
                              "step " + std::to_string(current_step) + ", stage " + stage + ": " +
                                  e.what(),
                              std::move(report));
    }
    return report;
}

namespace {

void mean_std(const std::vector<double>& v, double& m, double& s) {
    m = mean(v);
    s = 0.0;
    if (v.size() > 1) {
        double acc = 0.0;
        for (const double x : v) {
            acc += (x - m) * (x - m);
        }
        s = std::sqrt(acc / static_cast<double>(v.size() - 1));
    }
}

} // namespace

AblationResult run_ablation(const RefineryConfig& base, const std::vector<Criterion>& criteria,
                            const std::vector<std::uint64_t>& seeds) {
    if (criteria.empty()) {
        fail(ErrorCode::config_error, "criteria: at least one criterion required");
    }
    if (seeds.empty()) {
        fail(ErrorCode::config_error, "seeds: at least one seed required");
    }
    AblationResult result;
    for (const auto criterion : criteria) {
        AblationRow row;
        row.criterion = criterion;
        std::vector<double> purity, map, rank1, auroc;
        for (const auto seed : seeds) {
            RefineryConfig config = base;
            config.criterion = criterion;
            config.seed = seed;
            AblationCell cell{criterion, seed, std::nullopt, std::nullopt};
            try {
                cell.report = run_refinery(config);
                const auto& s = *cell.report->summary;
                purity.push_back(s.final_purity);
                map.push_back(s.final_map);
                rank1.push_back(s.final_rank1);
                if (s.final_detection_auroc) {
                    auroc.push_back(*s.final_detection_auroc);
                }
                ++row.runs;
            } catch (const Error& e) {
                cell.error = std::string(to_string(e.code())) + ":" + e.what();
                ++row.failures;
            }
            result.cells.push_back(std::move(cell));
        }
        mean_std(purity, row.purity_mean, row.purity_std);
        mean_std(map, row.map_mean, row.map_std);
        mean_std(rank1, row.rank1_mean, row.rank1_std);
        if (!auroc.empty()) {
            double m = 0.0, s = 0.0;
            mean_std(auroc, m, s);
            row.auroc_mean = m;
            row.auroc_std = s;
        }
        result.rows.push_back(row);
    }
    return result;
}

} // namespace p2lr::refinery
