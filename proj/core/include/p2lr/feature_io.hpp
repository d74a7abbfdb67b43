#pragma once

#include <filesystem>
#include <optional>

#include "p2lr/types.hpp"

namespace p2lr::io {

/// Features plus optional labels as stored on disk.
struct FeatureSet {
    Matrix features;
    std::optional<Labels> labels;
};

// Binary layout, all little-endian:
//   features: "P2LRFS1\0", u32 N, u32 d, N*d f64 row-major
//   labels:   "P2LRLB1\0", u32 N, N u32
void write_features(const std::filesystem::path& path, const Matrix& features);
Matrix read_features(const std::filesystem::path& path);

void write_labels(const std::filesystem::path& path, const Labels& labels);
Labels read_labels(const std::filesystem::path& path);

/// CSV with header `f0,...,f{d-1}[,label]`. Values use 17 significant digits.
void write_features_csv(const std::filesystem::path& path, const FeatureSet& set);
FeatureSet read_features_csv(const std::filesystem::path& path);

/// Dispatches on the file's leading bytes: P2LRFS1 magic or CSV.
Matrix read_feature_file(const std::filesystem::path& path);

/// Writes `contents` to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace p2lr::io
