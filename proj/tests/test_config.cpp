#include <doctest.h>

#include <string>

#include "p2lr/config.hpp"
#include "p2lr/error.hpp"

using namespace p2lr;

namespace {

ErrorCode code_of(const std::string& json) {
    try {
        parse_config(json);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::usage_error;
}

std::string message_of(const RefineryConfig& c) {
    try {
        validate(c);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("defaults validate") {
    RefineryConfig c;
    CHECK_NOTHROW(validate(c));
    CHECK(c.effective_k() == c.c_true);
    CHECK(c.alpha == 20.0);
    CHECK(c.epsilon == 0.99);
    CHECK(c.p0 == 0.3);
    CHECK(c.h == 1.5);
    CHECK(c.momentum == 0.9);
}

TEST_CASE("validation names the offending key") {
    RefineryConfig c;
    c.d = 0;
    CHECK(message_of(c).rfind("d:", 0) == 0);
    c = {};
    c.p0 = 1.0;
    CHECK(message_of(c).rfind("p0:", 0) == 0);
    c = {};
    c.epsilon = 0.01;
    CHECK(message_of(c).rfind("epsilon:", 0) == 0);
    c = {};
    c.k = 100000;
    CHECK(message_of(c).rfind("k:", 0) == 0);
}

TEST_CASE("criterion names round-trip") {
    for (const auto c : all_criteria()) {
        CHECK(criterion_from_string(to_string(c)) == c);
    }
    CHECK(all_criteria().size() == 6);
    try {
        criterion_from_string("entropy");
        FAIL("accepted unknown name");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::enum_error);
    }
}

TEST_CASE("config files") {
    const auto f = parse_config(R"({"version": 1, "seed": 7, "T": 4, "criterion": "none",
                                    "criteria": ["kl_ideal", "none"], "seeds": [1, 2, 3]})");
    CHECK(f.run.seed == 7);
    CHECK(f.run.T == 4);
    CHECK(f.run.criterion == Criterion::none);
    CHECK(f.criteria == std::vector<Criterion>{Criterion::kl_ideal, Criterion::none});
    CHECK(f.seeds == std::vector<std::uint64_t>{1, 2, 3});

    CHECK(code_of(R"({"seed": 1})") == ErrorCode::config_error);
    CHECK(code_of(R"({"version": 2})") == ErrorCode::config_error);
    CHECK(code_of(R"({"version": 1, "sede": 1})") == ErrorCode::config_error);
    CHECK(code_of(R"({"version": 1, "T": "ten"})") == ErrorCode::config_error);
    CHECK(code_of(R"({"version": 1, "criterion": "bogus"})") == ErrorCode::enum_error);
    CHECK(code_of("[1, 2") == ErrorCode::config_error);
    // range checks run after overrides are applied, not at parse time
    const auto unchecked = parse_config(R"({"version": 1, "d": 0})");
    CHECK(unchecked.run.d == 0);
    CHECK_THROWS_AS(validate(unchecked.run), Error);
}

TEST_CASE("config JSON echoes every parameter") {
    RefineryConfig c;
    c.seed = 42;
    c.criterion = Criterion::reweight;
    c.lr = 0.125;
    const auto text = config_to_json(c);
    CHECK(text.find("\"version\": 1") != std::string::npos);
    const auto back = parse_config(text).run;
    CHECK(back.seed == 42);
    CHECK(back.criterion == Criterion::reweight);
    CHECK(back.lr == 0.125);
    CHECK(config_to_json(back) == config_to_json(c));
}
