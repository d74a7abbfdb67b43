#include "p2lr/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "p2lr/error.hpp"

namespace p2lr {
namespace {

constexpr std::array<std::pair<Criterion, std::string_view>, 6> kCriterionNames{{
    {Criterion::kl_ideal, "kl_ideal"},
    {Criterion::l2_centroid, "l2_centroid"},
    {Criterion::consistency, "consistency"},
    {Criterion::internal_classifier, "internal_classifier"},
    {Criterion::reweight, "reweight"},
    {Criterion::none, "none"},
}};

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) {
        fail(ErrorCode::config_error, std::string(key) + ": " + what);
    }
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& target) {
    if (!j.contains(key)) {
        return;
    }
    try {
        target = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::config_error, std::string(key) + ": wrong type");
    }
}

} // namespace

std::string_view to_string(Criterion criterion) noexcept {
    for (const auto& [value, name] : kCriterionNames) {
        if (value == criterion) {
            return name;
        }
    }
    return "unknown";
}

Criterion criterion_from_string(std::string_view name) {
    for (const auto& [value, text] : kCriterionNames) {
        if (text == name) {
            return value;
        }
    }
    fail(ErrorCode::enum_error, "unknown criterion '" + std::string(name) + "'");
}

std::vector<Criterion> all_criteria() {
    std::vector<Criterion> out;
    for (const auto& entry : kCriterionNames) {
        out.push_back(entry.first);
    }
    return out;
}

void validate(const RefineryConfig& c) {
    require(c.c_true >= 2, "c_true", "must be >= 2");
    require(c.d >= 2, "d", "must be >= 2");
    require(c.n_per_id >= 2, "n_per_id", "must be >= 2 (retrieval needs query and gallery)");
    require(c.noise_sigma >= 0.0 && std::isfinite(c.noise_sigma), "noise_sigma", "must be >= 0");
    require(c.shift_scale >= 0.0 && std::isfinite(c.shift_scale), "shift_scale", "must be >= 0");
    require(c.min_separation >= 0.0 && c.min_separation < 2.0, "min_separation", "must lie in [0, 2)");
    require(c.corrupt_fraction >= 0.0 && c.corrupt_fraction <= 1.0, "corrupt_fraction",
            "must lie in [0, 1]");
    require(c.k >= 0 && c.effective_k() <= c.c_true * c.n_per_id, "k", "must lie in [0, N]");
    require(c.effective_k() >= 2, "k", "must be >= 2");
    require(c.kmeans_max_iters >= 1, "kmeans_max_iters", "must be >= 1");
    require(c.kmeans_tol >= 0.0, "kmeans_tol", "must be >= 0");
    require(c.recluster_every >= 1, "recluster_every", "must be >= 1");
    require(c.alpha > 0.0 && std::isfinite(c.alpha), "alpha", "must be > 0");
    require(c.epsilon > 1.0 / c.effective_k() && c.epsilon <= 1.0, "epsilon", "must lie in (1/k, 1]");
    require(c.p0 > 0.0 && c.p0 < 1.0, "p0", "must lie in (0, 1)");
    require(c.h > 0.0 && std::isfinite(c.h), "h", "must be > 0");
    require(c.T >= 0, "T", "must be >= 0");
    require(c.lr > 0.0 && std::isfinite(c.lr), "lr", "must be > 0");
    require(c.n_grad_steps >= 1, "n_grad_steps", "must be >= 1");
    require(c.momentum >= 0.0 && c.momentum < 1.0, "momentum", "must lie in [0, 1)");
    require(c.reweight_temperature >= 0.0, "reweight_temperature", "must be >= 0");
    require(c.query_fraction > 0.0 && c.query_fraction < 1.0, "query_fraction", "must lie in (0, 1)");
    require(c.checkpoint_every >= 0, "checkpoint_every", "must be >= 0");
}

ConfigFile parse_config(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_error, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        fail(ErrorCode::config_error, "config must be a JSON object");
    }
    if (!j.contains("version") || !j.at("version").is_number_integer() ||
        j.at("version").get<int>() != 1) {
        fail(ErrorCode::config_error, "version: must be 1");
    }

    static const std::array<const char*, 32> known{
        "version", "seed", "c_true", "d", "n_per_id", "noise_sigma", "shift_scale",
        "min_separation", "corrupt_fraction", "k", "kmeans_max_iters", "kmeans_tol",
        "recluster_every", "warm_start", "alpha", "epsilon", "p0", "h", "T", "lr",
        "n_grad_steps", "momentum", "reweight_temperature", "criterion", "query_fraction",
        "out_dir", "checkpoint_every", "dump_scores", "dump_selection", "criteria", "seeds",
        "comment"};
    for (const auto& item : j.items()) {
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return item.key() == k; }) == known.end()) {
            fail(ErrorCode::config_error, item.key() + ": unknown key");
        }
    }

    ConfigFile file;
    auto& c = file.run;
    read_key(j, "seed", c.seed);
    read_key(j, "c_true", c.c_true);
    read_key(j, "d", c.d);
    read_key(j, "n_per_id", c.n_per_id);
    read_key(j, "noise_sigma", c.noise_sigma);
    read_key(j, "shift_scale", c.shift_scale);
    read_key(j, "min_separation", c.min_separation);
    read_key(j, "corrupt_fraction", c.corrupt_fraction);
    read_key(j, "k", c.k);
    read_key(j, "kmeans_max_iters", c.kmeans_max_iters);
    read_key(j, "kmeans_tol", c.kmeans_tol);
    read_key(j, "recluster_every", c.recluster_every);
    read_key(j, "warm_start", c.warm_start);
    read_key(j, "alpha", c.alpha);
    read_key(j, "epsilon", c.epsilon);
    read_key(j, "p0", c.p0);
    read_key(j, "h", c.h);
    read_key(j, "T", c.T);
    read_key(j, "lr", c.lr);
    read_key(j, "n_grad_steps", c.n_grad_steps);
    read_key(j, "momentum", c.momentum);
    read_key(j, "reweight_temperature", c.reweight_temperature);
    read_key(j, "query_fraction", c.query_fraction);
    read_key(j, "out_dir", c.out_dir);
    read_key(j, "checkpoint_every", c.checkpoint_every);
    read_key(j, "dump_scores", c.dump_scores);
    read_key(j, "dump_selection", c.dump_selection);
    if (j.contains("criterion")) {
        std::string name;
        read_key(j, "criterion", name);
        c.criterion = criterion_from_string(name);
    }
    if (j.contains("criteria")) {
        std::vector<std::string> names;
        read_key(j, "criteria", names);
        for (const auto& name : names) {
            file.criteria.push_back(criterion_from_string(name));
        }
    }
    read_key(j, "seeds", file.seeds);
    return file;
}

ConfigFile load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::io_error, "cannot open config " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_json(const RefineryConfig& c, int indent) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["seed"] = c.seed;
    j["c_true"] = c.c_true;
    j["d"] = c.d;
    j["n_per_id"] = c.n_per_id;
    j["noise_sigma"] = c.noise_sigma;
    j["shift_scale"] = c.shift_scale;
    j["min_separation"] = c.min_separation;
    j["corrupt_fraction"] = c.corrupt_fraction;
    j["k"] = c.k;
    j["kmeans_max_iters"] = c.kmeans_max_iters;
    j["kmeans_tol"] = c.kmeans_tol;
    j["recluster_every"] = c.recluster_every;
    j["warm_start"] = c.warm_start;
    j["alpha"] = c.alpha;
    j["epsilon"] = c.epsilon;
    j["p0"] = c.p0;
    j["h"] = c.h;
    j["T"] = c.T;
    j["lr"] = c.lr;
    j["n_grad_steps"] = c.n_grad_steps;
    j["momentum"] = c.momentum;
    j["reweight_temperature"] = c.reweight_temperature;
    j["criterion"] = std::string(to_string(c.criterion));
    j["query_fraction"] = c.query_fraction;
    j["out_dir"] = c.out_dir;
    j["checkpoint_every"] = c.checkpoint_every;
    j["dump_scores"] = c.dump_scores;
    j["dump_selection"] = c.dump_selection;
    return j.dump(indent);
}

} // namespace p2lr
