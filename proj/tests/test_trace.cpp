#include <doctest.h>

#include <cmath>

#include "floodlab/error.hpp"
#include "floodlab/trace.hpp"

using namespace floodlab;

TEST_SUITE_BEGIN("trace");

TEST_CASE("synth_benign matches the calibrated packet budget") {
    // 60,401 packets over 600 s gives the 100.67 pps offered rate.
    Rng rng(7);
    TrafficTrace trace = synth_benign(100.67, 600.0, rng);
    const double expected = 60401.0;
    CHECK(std::abs(static_cast<double>(trace.packets.size()) - expected) / expected < 0.05);
    trace.check_sorted();
    for (const auto& p : trace.packets) CHECK(p.protocol == Protocol::MAVLINK);
}

TEST_CASE("synth_benign edge cases") {
    Rng rng(1);
    CHECK(synth_benign(100.0, 0.0, rng).packets.empty());
    CHECK_THROWS_AS(synth_benign(0.0, 10.0, rng), InvalidArgument);
    CHECK_THROWS_AS(synth_benign(-1.0, 10.0, rng), InvalidArgument);
}

TEST_CASE("synth_benign is deterministic under the seed") {
    Rng a(42), b(42);
    TrafficTrace ta = synth_benign(50.0, 30.0, a);
    TrafficTrace tb = synth_benign(50.0, 30.0, b);
    REQUIRE(ta.packets.size() == tb.packets.size());
    for (std::size_t i = 0; i < ta.packets.size(); ++i) {
        CHECK(ta.packets[i].t_rel == tb.packets[i].t_rel);
        CHECK(ta.packets[i].length_bytes == tb.packets[i].length_bytes);
        CHECK(ta.packets[i].info == tb.packets[i].info);
    }
}

TEST_CASE("icmp flood reproduces the target arrival rate") {
    Rng rng(11);
    TrafficTrace trace = synth_flood(icmp_flood_profile(), 600.0, rng);
    InterArrivalStats stats = trace_stats(trace, Protocol::ICMP);
    CHECK(stats.arrival_rate_pps == doctest::Approx(178.57).epsilon(0.10));
    CHECK(stats.mean_s == doctest::Approx(5.6e-3).epsilon(0.15));
    for (const auto& p : trace.packets) {
        CHECK(p.length_bytes == 1000 + kFloodHeaderBytes);
    }
}

TEST_CASE("tcp flood median inter-arrival is within a factor of 2 of the table") {
    Rng rng(12);
    TrafficTrace trace = synth_flood(tcp_flood_profile(), 600.0, rng);
    InterArrivalStats stats = trace_stats(trace, Protocol::TCP);
    CHECK(stats.p50_s > 4.9e-5 / 2.0);
    CHECK(stats.p50_s < 4.9e-5 * 2.0);
}

TEST_CASE("synth_flood edge cases") {
    Rng rng(3);
    CHECK(synth_flood(tcp_flood_profile(), 0.0, rng).packets.empty());

    FloodProfile bad = tcp_flood_profile();
    bad.port.reset();  // TCP profile without a port
    CHECK_THROWS_AS(synth_flood(bad, 1.0, rng), InvalidArgument);

    FloodProfile icmp_with_port = icmp_flood_profile();
    icmp_with_port.port = 80;
    CHECK_THROWS_AS(synth_flood(icmp_with_port, 1.0, rng), InvalidArgument);
}

TEST_CASE("flood rate recovery holds across seeds and durations") {
    for (std::uint64_t seed : {101, 102, 103, 104, 105}) {
        Rng rng(seed);
        TrafficTrace trace = synth_flood(icmp_flood_profile(), 60.0, rng);
        InterArrivalStats stats = trace_stats(trace, Protocol::ICMP);
        CHECK(std::abs(stats.arrival_rate_pps - 178.57) / 178.57 < 0.10);
    }
}

TEST_CASE("mixture fit matches mean exactly and median within a factor of 2") {
    for (const auto& profile : {tcp_flood_profile(), icmp_flood_profile()}) {
        const InterArrivalStats& target = profile.target_stats;
        InterArrivalMixture mix = fit_interarrival_mixture(target);
        const double mixture_mean = mix.burst_weight * mix.burst_mean_s +
                                    (1.0 - mix.burst_weight) * mix.pause_mean_s;
        CHECK(mixture_mean == doctest::Approx(target.mean_s).epsilon(1e-9));
        const double q50 = mix.quantile(0.5);
        CHECK(q50 > target.p50_s / 2.0);
        CHECK(q50 < target.p50_s * 2.0);
    }
}

TEST_CASE("trace_stats on uniform gaps") {
    TrafficTrace trace;
    trace.duration_s = 3.0;
    for (double t : {0.0, 1.0, 2.0, 3.0}) {
        trace.packets.push_back({t, Protocol::MAVLINK, 23, "a", "b", ""});
    }
    InterArrivalStats s = trace_stats(trace, Protocol::MAVLINK);
    CHECK(s.mean_s == doctest::Approx(1.0));
    CHECK(s.std_s == doctest::Approx(0.0));
    CHECK(s.p25_s == doctest::Approx(1.0));
    CHECK(s.p50_s == doctest::Approx(1.0));
    CHECK(s.p75_s == doctest::Approx(1.0));
    CHECK(s.arrival_rate_pps == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("trace_stats two-packet case and errors") {
    TrafficTrace trace;
    trace.duration_s = 1.0;
    trace.packets.push_back({0.0, Protocol::MAVLINK, 23, "a", "b", ""});
    trace.packets.push_back({0.1, Protocol::MAVLINK, 23, "a", "b", ""});
    InterArrivalStats s = trace_stats(trace, Protocol::MAVLINK);
    CHECK(s.arrival_rate_pps == doctest::Approx(2.0));
    CHECK(s.p50_s == doctest::Approx(0.1));

    CHECK_THROWS_AS(trace_stats(trace, Protocol::TCP), InsufficientData);
}

TEST_CASE("synth_scenario composes labeled segments") {
    ScenarioSpec spec;
    spec.benign_rate_pps = 100.67;
    spec.seed = 42;
    spec.segments.push_back({SegmentKind::BENIGN, {}, 60.0});
    spec.segments.push_back({SegmentKind::ATTACK, {tcp_flood_profile()}, 60.0});

    ScenarioResult result = synth_scenario(spec);
    result.trace.check_sorted();
    CHECK(result.trace.duration_s == doctest::Approx(120.0));
    REQUIRE(result.labels.size() == 2);
    CHECK(result.labels[0].label == 0);
    CHECK(result.labels[1].label == 1);
    CHECK(result.labels[0].start_s == doctest::Approx(0.0));
    CHECK(result.labels[0].end_s == doctest::Approx(60.0));
    CHECK(result.labels[1].end_s == doctest::Approx(120.0));

    // Benign half carries full-rate MAVLink; attack half is thinned.
    std::size_t benign_mav = 0, attack_mav = 0, tcp = 0;
    for (const auto& p : result.trace.packets) {
        if (p.protocol == Protocol::MAVLINK) {
            (p.t_rel < 60.0 ? benign_mav : attack_mav)++;
        } else if (p.protocol == Protocol::TCP) {
            ++tcp;
            CHECK(p.t_rel >= 60.0);
        }
    }
    CHECK(std::abs(static_cast<double>(benign_mav) - 60.0 * 100.67) / (60.0 * 100.67) < 0.10);
    // Mean delivery fraction is (0.05+0.40)/2; allow generous slack.
    CHECK(attack_mav < benign_mav / 2);
    CHECK(tcp > 0);
}

TEST_CASE("hybrid attack carries both flood rates") {
    ScenarioSpec spec;
    spec.benign_rate_pps = 60.04;
    spec.seed = 9;
    spec.segments.push_back(
        {SegmentKind::ATTACK, {tcp_flood_profile(), icmp_flood_profile()}, 600.0});

    ScenarioResult result = synth_scenario(spec);
    std::size_t floods = 0;
    for (const auto& p : result.trace.packets) {
        if (p.protocol == Protocol::TCP || p.protocol == Protocol::ICMP) ++floods;
    }
    const double expected = (129.87 + 178.57) * 600.0;
    CHECK(std::abs(static_cast<double>(floods) - expected) / expected < 0.10);
}

TEST_CASE("single benign segment labels everything 0") {
    ScenarioSpec spec;
    spec.benign_rate_pps = 10.0;
    spec.segments.push_back({SegmentKind::BENIGN, {}, 5.0});
    ScenarioResult result = synth_scenario(spec);
    REQUIRE(result.labels.size() == 1);
    CHECK(result.labels[0].label == 0);
}

TEST_CASE("scenario determinism and label partition") {
    ScenarioSpec spec;
    spec.benign_rate_pps = 90.34;
    spec.seed = 1234;
    spec.segments.push_back({SegmentKind::BENIGN, {}, 30.0});
    spec.segments.push_back({SegmentKind::ATTACK, {icmp_flood_profile()}, 30.0});
    spec.segments.push_back({SegmentKind::BENIGN, {}, 15.0});

    ScenarioResult a = synth_scenario(spec);
    ScenarioResult b = synth_scenario(spec);
    REQUIRE(a.trace.packets.size() == b.trace.packets.size());
    for (std::size_t i = 0; i < a.trace.packets.size(); ++i) {
        CHECK(a.trace.packets[i].t_rel == b.trace.packets[i].t_rel);
        CHECK(a.trace.packets[i].protocol == b.trace.packets[i].protocol);
        CHECK(a.trace.packets[i].src_id == b.trace.packets[i].src_id);
    }

    // Labels partition [0, total) without gaps or overlaps.
    double cursor = 0.0;
    for (const auto& iv : a.labels) {
        CHECK(iv.start_s == doctest::Approx(cursor));
        CHECK(iv.end_s > iv.start_s);
        cursor = iv.end_s;
    }
    CHECK(cursor == doctest::Approx(a.trace.duration_s));
}

TEST_CASE("scenario validation errors") {
    ScenarioSpec spec;  // no segments
    CHECK_THROWS_AS(synth_scenario(spec), InvalidArgument);

    spec.segments.push_back({SegmentKind::ATTACK, {}, 10.0});  // attack without profiles
    CHECK_THROWS_AS(synth_scenario(spec), InvalidArgument);

    spec.segments.clear();
    spec.segments.push_back({SegmentKind::BENIGN, {}, -1.0});
    CHECK_THROWS_AS(synth_scenario(spec), InvalidArgument);

    spec.segments.clear();
    spec.segments.push_back({SegmentKind::BENIGN, {}, 10.0});
    spec.degradation.delivery_fraction_min = 0.0;
    CHECK_THROWS_AS(synth_scenario(spec), InvalidArgument);
}

TEST_SUITE_END();
