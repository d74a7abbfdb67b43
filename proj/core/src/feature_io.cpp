#include "p2lr/feature_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "p2lr/error.hpp"

namespace p2lr::io {
namespace {

constexpr std::array<char, 8> kFeatureMagic{'P', '2', 'L', 'R', 'F', 'S', '1', '\0'};
constexpr std::array<char, 8> kLabelMagic{'P', '2', 'L', 'R', 'L', 'B', '1', '\0'};

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
void put_le(std::string& out, T value) {
    std::array<char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.append(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const std::string& in, std::size_t& offset, const std::filesystem::path& path) {
    if (offset + sizeof(T) > in.size()) {
        fail(ErrorCode::format_error, "truncated file: " + path.string());
    }
    std::array<char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), in.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    offset += sizeof(T);
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::io_error, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void check_magic(const std::string& data, const std::array<char, 8>& magic,
                 const std::filesystem::path& path) {
    if (data.size() < magic.size() || std::memcmp(data.data(), magic.data(), magic.size()) != 0) {
        fail(ErrorCode::format_error, "bad magic in " + path.string());
    }
}

std::uint32_t checked_u32(Index value, const char* what) {
    if (value < 0 || value > static_cast<Index>(std::numeric_limits<std::uint32_t>::max())) {
        fail(ErrorCode::input_error, std::string(what) + " does not fit in u32");
    }
    return static_cast<std::uint32_t>(value);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) {
        if (!field.empty() && field.back() == '\r') {
            field.pop_back();
        }
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

} // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorCode::io_error, "cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            fail(ErrorCode::io_error, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        fail(ErrorCode::io_error, "cannot rename " + tmp.string() + " to " + path.string() + ": " +
                                      ec.message());
    }
}

void write_features(const std::filesystem::path& path, const Matrix& features) {
    std::string out;
    out.reserve(16 + static_cast<std::size_t>(features.size()) * 8);
    out.append(kFeatureMagic.data(), kFeatureMagic.size());
    put_le(out, checked_u32(features.rows(), "N"));
    put_le(out, checked_u32(features.cols(), "d"));
    for (Index r = 0; r < features.rows(); ++r) {
        for (Index c = 0; c < features.cols(); ++c) {
            put_le(out, features(r, c));
        }
    }
    write_file_atomic(path, out);
}

Matrix read_features(const std::filesystem::path& path) {
    const std::string data = slurp(path);
    check_magic(data, kFeatureMagic, path);
    std::size_t offset = kFeatureMagic.size();
    const auto n = get_le<std::uint32_t>(data, offset, path);
    const auto d = get_le<std::uint32_t>(data, offset, path);
    const std::size_t expected = offset + static_cast<std::size_t>(n) * d * sizeof(double);
    if (data.size() != expected) {
        fail(ErrorCode::format_error, "size mismatch in " + path.string() + ": header says " +
                                          std::to_string(n) + "x" + std::to_string(d));
    }
    Matrix features(n, d);
    for (Index r = 0; r < features.rows(); ++r) {
        for (Index c = 0; c < features.cols(); ++c) {
            features(r, c) = get_le<double>(data, offset, path);
        }
    }
    return features;
}

void write_labels(const std::filesystem::path& path, const Labels& labels) {
    std::string out;
    out.append(kLabelMagic.data(), kLabelMagic.size());
    put_le(out, checked_u32(static_cast<Index>(labels.size()), "N"));
    for (const auto label : labels) {
        if (label < 0) {
            fail(ErrorCode::input_error, "negative label cannot be stored as u32");
        }
        put_le(out, static_cast<std::uint32_t>(label));
    }
    write_file_atomic(path, out);
}

Labels read_labels(const std::filesystem::path& path) {
    const std::string data = slurp(path);
    check_magic(data, kLabelMagic, path);
    std::size_t offset = kLabelMagic.size();
    const auto n = get_le<std::uint32_t>(data, offset, path);
    if (data.size() != offset + static_cast<std::size_t>(n) * sizeof(std::uint32_t)) {
        fail(ErrorCode::format_error, "size mismatch in " + path.string());
    }
    Labels labels(n);
    for (auto& label : labels) {
        const auto raw = get_le<std::uint32_t>(data, offset, path);
        if (raw > static_cast<std::uint32_t>(std::numeric_limits<std::int32_t>::max())) {
            fail(ErrorCode::format_error, "label value too large in " + path.string());
        }
        label = static_cast<std::int32_t>(raw);
    }
    return labels;
}

void write_features_csv(const std::filesystem::path& path, const FeatureSet& set) {
    const Index d = set.features.cols();
    if (set.labels && static_cast<Index>(set.labels->size()) != set.features.rows()) {
        fail(ErrorCode::input_error, "label count does not match feature rows");
    }
    std::ostringstream out;
    out << std::setprecision(17);
    for (Index j = 0; j < d; ++j) {
        out << (j ? "," : "") << 'f' << j;
    }
    if (set.labels) {
        out << ",label";
    }
    out << '\n';
    for (Index r = 0; r < set.features.rows(); ++r) {
        for (Index j = 0; j < d; ++j) {
            out << (j ? "," : "") << set.features(r, j);
        }
        if (set.labels) {
            out << ',' << (*set.labels)[static_cast<std::size_t>(r)];
        }
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

FeatureSet read_features_csv(const std::filesystem::path& path) {
    std::istringstream in(slurp(path));
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorCode::format_error, "empty CSV: " + path.string());
    }
    const auto header = split_csv_line(line);
    bool has_label = !header.empty() && header.back() == "label";
    const std::size_t d = header.size() - (has_label ? 1 : 0);
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j] != "f" + std::to_string(j)) {
            fail(ErrorCode::format_error, "unexpected CSV header column '" + header[j] + "' in " +
                                              path.string());
        }
    }

    std::vector<double> values;
    Labels labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            fail(ErrorCode::format_error, "row " + std::to_string(rows + 1) + " has " +
                                              std::to_string(fields.size()) + " fields, expected " +
                                              std::to_string(header.size()));
        }
        try {
            for (std::size_t j = 0; j < d; ++j) {
                std::size_t used = 0;
                values.push_back(std::stod(fields[j], &used));
                if (used != fields[j].size()) {
                    throw std::invalid_argument(fields[j]);
                }
            }
            if (has_label) {
                labels.push_back(static_cast<std::int32_t>(std::stol(fields[d])));
            }
        } catch (const std::exception&) {
            fail(ErrorCode::format_error, "unparsable value in row " + std::to_string(rows + 1) +
                                              " of " + path.string());
        }
        ++rows;
    }

    FeatureSet set;
    set.features.resize(static_cast<Index>(rows), static_cast<Index>(d));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            set.features(static_cast<Index>(r), static_cast<Index>(j)) = values[r * d + j];
        }
    }
    if (has_label) {
        set.labels = std::move(labels);
    }
    return set;
}

Matrix read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::io_error, "cannot open " + path.string());
    }
    std::array<char, 8> head{};
    in.read(head.data(), head.size());
    if (in.gcount() == 8 && head == kFeatureMagic) {
        return read_features(path);
    }
    return read_features_csv(path).features;
}

} // namespace p2lr::io
