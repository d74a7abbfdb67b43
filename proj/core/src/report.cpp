#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "p2lr/refinery.hpp"

namespace p2lr::refinery {
namespace {

using ojson = nlohmann::ordered_json;

ojson optional_value(const std::optional<double>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<double>();
}

ojson step_to_json(const StepRecord& r) {
    ojson j;
    j["t"] = r.t;
    j["p_t"] = r.p_t;
    j["beta"] = r.beta;
    j["n_selected"] = r.n_selected;
    j["mean_u_all"] = r.mean_u_all;
    j["mean_u_selected"] = r.mean_u_selected;
    j["mean_u_rejected"] = optional_value(r.mean_u_rejected);
    j["purity"] = r.purity;
    j["n_corrupted"] = r.n_corrupted;
    j["detection_precision"] = optional_value(r.detection_precision);
    j["detection_recall"] = optional_value(r.detection_recall);
    j["detection_auroc"] = optional_value(r.detection_auroc);
    j["wstep_loss_before"] = r.wstep_loss_before;
    j["wstep_loss_after"] = r.wstep_loss_after;
    j["map"] = r.map;
    j["rank1"] = r.rank1;
    j["rank5"] = r.rank5;
    j["rank10"] = r.rank10;
    j["inertia"] = r.inertia;
    return j;
}

StepRecord step_from_json(const nlohmann::json& j) {
    StepRecord r;
    r.t = j.at("t").get<int>();
    r.p_t = j.at("p_t").get<double>();
    r.beta = j.at("beta").get<double>();
    r.n_selected = j.at("n_selected").get<Index>();
    r.mean_u_all = j.at("mean_u_all").get<double>();
    r.mean_u_selected = j.at("mean_u_selected").get<double>();
    r.mean_u_rejected = optional_from(j, "mean_u_rejected");
    r.purity = j.at("purity").get<double>();
    r.n_corrupted = j.at("n_corrupted").get<Index>();
    r.detection_precision = optional_from(j, "detection_precision");
    r.detection_recall = optional_from(j, "detection_recall");
    r.detection_auroc = optional_from(j, "detection_auroc");
    r.wstep_loss_before = j.at("wstep_loss_before").get<double>();
    r.wstep_loss_after = j.at("wstep_loss_after").get<double>();
    r.map = j.at("map").get<double>();
    r.rank1 = j.at("rank1").get<double>();
    r.rank5 = j.at("rank5").get<double>();
    r.rank10 = j.at("rank10").get<double>();
    r.inertia = j.at("inertia").get<double>();
    return r;
}

// Doubles in CSV exports: 17 significant digits, lossless.
std::string num(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

std::string num(const std::optional<double>& v) {
    return v ? num(*v) : std::string();
}

} // namespace

std::string report_to_json(const RefineryReport& report) {
    ojson j;
    j["schema"] = kReportSchema;
    j["config"] = ojson::parse(config_to_json(report.config));
    ojson steps = ojson::array();
    for (const auto& s : report.steps) {
        steps.push_back(step_to_json(s));
    }
    j["steps"] = std::move(steps);
    if (report.summary) {
        const auto& s = *report.summary;
        ojson sj;
        sj["final_purity"] = s.final_purity;
        sj["final_map"] = s.final_map;
        sj["final_rank1"] = s.final_rank1;
        sj["final_rank5"] = s.final_rank5;
        sj["final_rank10"] = s.final_rank10;
        sj["final_detection_auroc"] = optional_value(s.final_detection_auroc);
        sj["initial_purity"] = s.initial_purity;
        sj["initial_map"] = s.initial_map;
        j["summary"] = std::move(sj);
    } else {
        j["summary"] = nullptr;
    }
    if (report.failure) {
        const auto& f = *report.failure;
        j["failure"] = {{"step", f.step}, {"stage", f.stage}, {"code", f.code}, {"message", f.message}};
    } else {
        j["failure"] = nullptr;
    }
    return j.dump(2) + "\n";
}

RefineryReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format_error, std::string("report is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema") || !j.at("schema").is_string()) {
        fail(ErrorCode::schema_error, "report has no schema field");
    }
    if (j.at("schema").get<std::string>() != kReportSchema) {
        fail(ErrorCode::schema_error, "unsupported report schema '" +
                                          j.at("schema").get<std::string>() + "', expected " +
                                          kReportSchema);
    }
    try {
        RefineryReport report;
        report.config = parse_config(j.at("config").dump()).run;
        for (const auto& s : j.at("steps")) {
            report.steps.push_back(step_from_json(s));
        }
        if (!j.at("summary").is_null()) {
            const auto& sj = j.at("summary");
            Summary s;
            s.final_purity = sj.at("final_purity").get<double>();
            s.final_map = sj.at("final_map").get<double>();
            s.final_rank1 = sj.at("final_rank1").get<double>();
            s.final_rank5 = sj.at("final_rank5").get<double>();
            s.final_rank10 = sj.at("final_rank10").get<double>();
            s.final_detection_auroc = optional_from(sj, "final_detection_auroc");
            s.initial_purity = sj.at("initial_purity").get<double>();
            s.initial_map = sj.at("initial_map").get<double>();
            report.summary = s;
        }
        if (j.contains("failure") && !j.at("failure").is_null()) {
            const auto& fj = j.at("failure");
            report.failure = Failure{fj.at("step").get<int>(), fj.at("stage").get<std::string>(),
                                     fj.at("code").get<std::string>(),
                                     fj.at("message").get<std::string>()};
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format_error, std::string("malformed report: ") + e.what());
    }
}

std::string steps_to_csv(const RefineryReport& report) {
    std::ostringstream out;
    out << "t,p_t,beta,n_selected,mean_u_all,mean_u_selected,mean_u_rejected,purity,n_corrupted,"
           "detection_precision,detection_recall,detection_auroc,wstep_loss_before,"
           "wstep_loss_after,map,rank1,rank5,rank10,inertia\n";
    for (const auto& r : report.steps) {
        out << r.t << ',' << num(r.p_t) << ',' << num(r.beta) << ',' << r.n_selected << ','
            << num(r.mean_u_all) << ',' << num(r.mean_u_selected) << ','
            << num(r.mean_u_rejected) << ',' << num(r.purity) << ',' << r.n_corrupted << ','
            << num(r.detection_precision) << ',' << num(r.detection_recall) << ','
            << num(r.detection_auroc) << ',' << num(r.wstep_loss_before) << ','
            << num(r.wstep_loss_after) << ',' << num(r.map) << ',' << num(r.rank1) << ','
            << num(r.rank5) << ',' << num(r.rank10) << ',' << num(r.inertia) << '\n';
    }
    return out.str();
}

std::string timings_to_json(const RefineryReport& report) {
    ojson j;
    j["step_seconds"] = report.step_seconds;
    double total = 0.0;
    for (const double s : report.step_seconds) {
        total += s;
    }
    j["total_seconds"] = total;
    return j.dump(2) + "\n";
}

std::string ablation_to_csv(const AblationResult& result) {
    std::ostringstream out;
    out << "criterion,runs,failures,purity_mean,purity_std,map_mean,map_std,rank1_mean,rank1_std,"
           "auroc_mean,auroc_std\n";
    for (const auto& r : result.rows) {
        out << to_string(r.criterion) << ',' << r.runs << ',' << r.failures << ','
            << num(r.purity_mean) << ',' << num(r.purity_std) << ',' << num(r.map_mean) << ','
            << num(r.map_std) << ',' << num(r.rank1_mean) << ',' << num(r.rank1_std) << ','
            << num(r.auroc_mean) << ',' << num(r.auroc_std) << '\n';
    }
    return out.str();
}

std::string ablation_to_json(const AblationResult& result) {
    ojson j;
    j["schema"] = "p2lr-ablation-1";
    ojson rows = ojson::array();
    for (const auto& r : result.rows) {
        ojson row;
        row["criterion"] = std::string(to_string(r.criterion));
        row["runs"] = r.runs;
        row["failures"] = r.failures;
        row["purity_mean"] = r.purity_mean;
        row["purity_std"] = r.purity_std;
        row["map_mean"] = r.map_mean;
        row["map_std"] = r.map_std;
        row["rank1_mean"] = r.rank1_mean;
        row["rank1_std"] = r.rank1_std;
        row["auroc_mean"] = optional_value(r.auroc_mean);
        row["auroc_std"] = optional_value(r.auroc_std);
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    ojson cells = ojson::array();
    for (const auto& c : result.cells) {
        ojson cell;
        cell["criterion"] = std::string(to_string(c.criterion));
        cell["seed"] = c.seed;
        cell["ok"] = c.report.has_value();
        if (c.report && c.report->summary) {
            cell["final_purity"] = c.report->summary->final_purity;
            cell["final_map"] = c.report->summary->final_map;
        }
        cell["error"] = c.error ? ojson(*c.error) : ojson(nullptr);
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

} // namespace p2lr::refinery
