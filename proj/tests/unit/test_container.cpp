// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/container.hpp"
#include "spectral_bridge/error.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

using namespace spectral_bridge;

namespace {

Container sample() {
    Container c;
    c.header["stage"] = "pretrained";
    c.header["note"] = "utf-8 \xc3\xa9";
    c.tensors.push_back({"w", {2, 3}, {1, -2, 3.5f, std::numeric_limits<float>::denorm_min(), -0.0f, 1e30f}});
    c.tensors.push_back({"b", {3}, {0.25f, 0.5f, 0.75f}});
    c.tensors.push_back({"scalar", {}, {7.0f}});
    return c;
}

std::string bytes(const Container& c) {
    std::ostringstream out;
    write_container(c, out);
    return out.str();
}

Container parse(const std::string& s) {
    std::istringstream in(s);
    return read_container(in);
}

} // namespace

TEST_CASE("containers round-trip bit-exactly, including signed zero") {
    const auto c = sample();
    const auto s = bytes(c);
    CHECK(s.rfind("SBCKPT 1\n", 0) == 0);
    const auto back = parse(s);
    CHECK(back == c);
    CHECK(std::signbit(back.tensor("w").data[4]));
    CHECK(bytes(back) == s);
    CHECK(back.get("stage") == "pretrained");
    CHECK_THROWS_WITH_AS(back.get("missing"), doctest::Contains("missing"), ValidationError);
    CHECK_THROWS_WITH_AS(back.tensor("nope"), doctest::Contains("nope"), ValidationError);
}

TEST_CASE("damaged containers are rejected") {
    const auto s = bytes(sample());
    CHECK_THROWS_AS(parse("XXCKPT 1\n" + s.substr(9)), ValidationError);
    CHECK_THROWS_AS(parse("SBCKPT 2\n" + s.substr(9)), ValidationError);
    for (std::size_t cut : {std::size_t{12}, s.size() / 2, s.size() - 1}) CHECK_THROWS_AS(parse(s.substr(0, cut)), ValidationError);
}

TEST_CASE("writer refuses inconsistent tensors and unsafe names") {
    auto c = sample();
    c.tensors[0].shape = {4, 4};
    std::ostringstream out;
    CHECK_THROWS_AS(write_container(c, out), ValidationError);
    auto d = sample();
    d.tensors[1].name = "has space";
    CHECK_THROWS_AS(write_container(d, out), ValidationError);
    auto e = sample();
    e.header["bad=key"] = "v";
    CHECK_THROWS_AS(write_container(e, out), ValidationError);
}
