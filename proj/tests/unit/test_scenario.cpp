#include <gtest/gtest.h>

#include <sstream>

#include "clocksync/scenario.hpp"

using namespace clocksync;

namespace {

Settings parse(const std::string& text) {
    std::istringstream is(text);
    return read_settings(is);
}

}  // namespace

TEST(Scenario, ParsesSectionsAndComments) {
    const Settings s = parse(
        "# comment\nnodes = 3\nedges = 0-1, 1-2 # trailing\n\n[delay]\nkind = constant\nmean = 0.002\n"
        "[rates]\nskew = 2\n");
    EXPECT_EQ(s.at("nodes"), "3");
    EXPECT_EQ(s.at("edges"), "0-1, 1-2");
    EXPECT_EQ(s.at("delay.kind"), "constant");
    const Scenario sc = build_scenario(s);
    EXPECT_EQ(sc.nodes, 3);
    ASSERT_EQ(sc.edges.size(), 2u);
    EXPECT_EQ(sc.edges[1], std::make_pair(1, 2));
    EXPECT_EQ(sc.delay.kind, DelayModel::Kind::constant);
    EXPECT_EQ(sc.rate_skew, 2.0);
    EXPECT_EQ(sc.clocks[0].epsilon, 0.0);
    EXPECT_EQ(sc.clocks[2].epsilon, 1.0);
}

TEST(Scenario, Defaults) {
    const Scenario sc = build_scenario({});
    EXPECT_EQ(sc.nodes, 2);
    EXPECT_EQ(sc.edges.size(), 2u);  // both directions to the reference
    EXPECT_EQ(sc.protocol, Protocol::mbcsp);
    EXPECT_EQ(sc.sep_skew, 40);
    EXPECT_EQ(sc.sep_roundtrip, 20);
    EXPECT_EQ(sc.links().size(), 1u);
}

TEST(Scenario, RatesScaleWithEdgeCount) {
    Scenario sc = build_scenario({{"nodes", "3"}, {"edges", "0-1,1-0,1-2"}});
    EXPECT_DOUBLE_EQ(sc.skew_exchange_rate(), 3.0);
    EXPECT_DOUBLE_EQ(sc.offset_exchange_rate(), 18.0);
    sc = build_scenario({{"nodes", "3"}, {"edges", "0-1,1-0,1-2"}, {"rates.per_edge", "false"}});
    EXPECT_DOUBLE_EQ(sc.skew_exchange_rate(), 1.0);
}

TEST(Scenario, SpreadFullAndNodeEpsilon) {
    const Scenario sc =
        build_scenario({{"delay.mean", "0.004"}, {"delay.spread", "full"}, {"epsilon_0", "0.5"}, {"epsilon_1", "2"}});
    EXPECT_EQ(sc.delay.spread, 0.004);
    EXPECT_EQ(sc.clocks[0].epsilon, 0.5);
    EXPECT_EQ(sc.clocks[1].epsilon, 2.0);
}

TEST(Scenario, ErrorsNameTheKey) {
    auto message = [](const Settings& s) {
        try {
            build_scenario(s);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message({{"bogus", "1"}}).find("bogus"), std::string::npos);
    EXPECT_NE(message({{"dt", "abc"}}).find("dt"), std::string::npos);
    EXPECT_NE(message({{"dt", "-1"}}).find("dt"), std::string::npos);
    EXPECT_NE(message({{"protocol", "ntp"}}).find("protocol"), std::string::npos);
    EXPECT_NE(message({{"edges", "0-5"}}).find("edges"), std::string::npos);
    EXPECT_NE(message({{"nodes", "3"}, {"edges", "0-1"}}).find("connected"), std::string::npos);
    EXPECT_NE(message({{"epsilon_7", "1"}}).find("epsilon_7"), std::string::npos);
    EXPECT_NE(message({{"rates.per_edge", "maybe"}}).find("rates.per_edge"), std::string::npos);
}

TEST(Scenario, OverridesAndMissingFile) {
    EXPECT_EQ(parse_override("horizon=3"), std::make_pair(std::string("horizon"), std::string("3")));
    EXPECT_EQ(parse_override(" delay.mean = 1e-3 ").first, "delay.mean");
    EXPECT_THROW(parse_override("horizon"), ConfigError);
    EXPECT_THROW(load_scenario("/nonexistent/scenario.ini"), ConfigError);
    const Scenario sc = load_scenario("", {"horizon=3", "protocol=ss"});
    EXPECT_EQ(sc.horizon, 3.0);
    EXPECT_EQ(sc.protocol, Protocol::ss);
    EXPECT_THROW(parse(" = 3\n"), ConfigError);
    EXPECT_THROW(parse("[delay\n"), ConfigError);
}

TEST(Scenario, EdgeParsing) {
    const auto e = parse_edges("0-1, 1-2,2-0");
    ASSERT_EQ(e.size(), 3u);
    EXPECT_EQ(e[2], std::make_pair(2, 0));
    EXPECT_THROW(parse_edges("0:1"), ConfigError);
    EXPECT_THROW(parse_edges("a-b"), ConfigError);
}
