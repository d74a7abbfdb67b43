#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "p2lr/error.hpp"
#include "p2lr/feature_io.hpp"
#include "p2lr/rng.hpp"
#include "p2lr/synthgen.hpp"

using namespace p2lr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "p2lr_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string bytes_of(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("binary feature files round-trip bit-exactly") {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const Index n = 1 + static_cast<Index>(rng.uniform_index(40));
        const Index d = 1 + static_cast<Index>(rng.uniform_index(9));
        Matrix m(n, d);
        for (Index i = 0; i < m.size(); ++i) {
            m.data()[i] = rng.normal() * 1e3;
        }
        const auto path = scratch("roundtrip.p2lrfs");
        io::write_features(path, m);
        CHECK(io::read_features(path) == m);
        CHECK(io::read_feature_file(path) == m);
    }
}

TEST_CASE("binary layout is magic, u32 N, u32 d, little-endian f64") {
    Matrix m(1, 2);
    m << 1.0, -2.0;
    const auto path = scratch("layout.p2lrfs");
    io::write_features(path, m);
    const auto raw = bytes_of(path);
    REQUIRE(raw.size() == 8 + 4 + 4 + 16);
    CHECK(raw.substr(0, 8) == std::string("P2LRFS1\0", 8));
    CHECK(raw[8] == 1);
    CHECK(raw[12] == 2);
    // 1.0 = 0x3FF0000000000000 little-endian
    CHECK(static_cast<unsigned char>(raw[16 + 7]) == 0x3F);
    CHECK(static_cast<unsigned char>(raw[16 + 6]) == 0xF0);
}

TEST_CASE("label files round-trip and check magic") {
    const Labels labels{0, 4, 2, 2, 19};
    const auto path = scratch("labels.p2lrlb");
    io::write_labels(path, labels);
    CHECK(io::read_labels(path) == labels);
    CHECK(bytes_of(path).substr(0, 8) == std::string("P2LRLB1\0", 8));
    try {
        io::read_features(path);
        FAIL("label file accepted as features");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format_error);
    }
}

TEST_CASE("truncated feature files are rejected") {
    Matrix m = Matrix::Ones(3, 3);
    const auto path = scratch("trunc.p2lrfs");
    io::write_features(path, m);
    auto raw = bytes_of(path);
    raw.resize(raw.size() - 3);
    std::ofstream(path, std::ios::binary | std::ios::trunc) << raw;
    CHECK_THROWS_AS(io::read_features(path), Error);
}

TEST_CASE("CSV features round-trip with labels") {
    const auto p = synthgen::generate_prototypes(3, 4, 0.2, 1);
    const auto target = synthgen::sample_target(p, 4, 0.3, 0.2, 9);
    const auto path = scratch("features.csv");
    io::write_features_csv(path, {target.raw_features, target.hidden_labels});
    const auto back = io::read_features_csv(path);
    CHECK(back.features == target.raw_features);
    REQUIRE(back.labels.has_value());
    CHECK(*back.labels == target.hidden_labels);
    CHECK(io::read_feature_file(path) == target.raw_features);
    const auto header = bytes_of(path).substr(0, bytes_of(path).find('\n'));
    CHECK(header == "f0,f1,f2,f3,label");
}

TEST_CASE("CSV with a bad header or ragged row fails") {
    const auto path = scratch("bad.csv");
    std::ofstream(path) << "f0,x1\n1,2\n";
    CHECK_THROWS_AS(io::read_features_csv(path), Error);
    std::ofstream(path, std::ios::trunc) << "f0,f1\n1,2\n3\n";
    CHECK_THROWS_AS(io::read_features_csv(path), Error);
    CHECK_THROWS_AS(io::read_features(scratch("missing.bin")), Error);
}
