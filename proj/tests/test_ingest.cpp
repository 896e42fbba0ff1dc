#include <doctest.h>

#include <sstream>

#include "floodlab/capture_csv.hpp"
#include "floodlab/error.hpp"

using namespace floodlab;

TEST_SUITE_BEGIN("ingest");

TEST_CASE("parses a well-formed row") {
    std::istringstream in(
        "No.,Time,Source,Destination,Protocol,Length,Info\n"
        "1,0.000000,10.42.0.1,10.42.0.34,MAVLINK,23,HEARTBEAT\n");
    TrafficTrace trace = parse_capture_csv(in);
    REQUIRE(trace.packets.size() == 1);
    CHECK(trace.packets[0].t_rel == 0.0);
    CHECK(trace.packets[0].protocol == Protocol::MAVLINK);
    CHECK(trace.packets[0].length_bytes == 23);
    CHECK(trace.packets[0].src_id == "10.42.0.1");
    CHECK(trace.packets[0].info == "HEARTBEAT");
}

TEST_CASE("protocol mapping is case-insensitive with MAVLINK prefixes") {
    std::istringstream in(
        "No.,Time,Source,Destination,Protocol,Length,Info\n"
        "1,0.000000,a,b,mavlink_v2,23,x\n"
        "2,0.100000,a,b,tcp,100,y\n"
        "3,0.200000,a,b,Icmp,50,z\n"
        "4,0.300000,a,b,ARP,42,w\n");
    TrafficTrace trace = parse_capture_csv(in);
    CHECK(trace.packets[0].protocol == Protocol::MAVLINK);
    CHECK(trace.packets[1].protocol == Protocol::TCP);
    CHECK(trace.packets[2].protocol == Protocol::ICMP);
    CHECK(trace.packets[3].protocol == Protocol::OTHER);
}

TEST_CASE("accepts quoted fields as Wireshark exports them") {
    std::istringstream in(
        "\"No.\",\"Time\",\"Source\",\"Destination\",\"Protocol\",\"Length\",\"Info\"\n"
        "\"1\",\"0.500000\",\"a\",\"b\",\"TCP\",\"60\",\"[SYN]\"\n");
    TrafficTrace trace = parse_capture_csv(in);
    REQUIRE(trace.packets.size() == 1);
    CHECK(trace.packets[0].t_rel == doctest::Approx(0.5));
    CHECK(trace.packets[0].length_bytes == 60);
}

TEST_CASE("missing header is a format error") {
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_capture_csv(empty), FormatError);
    std::istringstream wrong("Time,Source\n");
    CHECK_THROWS_AS(parse_capture_csv(wrong), FormatError);
}

TEST_CASE("malformed length names the line") {
    std::istringstream in(
        "No.,Time,Source,Destination,Protocol,Length,Info\n"
        "1,0.000000,a,b,TCP,60,ok\n"
        "2,0.100000,a,b,TCP,abc,bad\n");
    try {
        parse_capture_csv(in);
        FAIL("expected RowError");
    } catch (const RowError& e) {
        CHECK(e.line_number == 3);
        CHECK(std::string(e.what()).find("Length") != std::string::npos);
    }
}

TEST_CASE("malformed time names the line") {
    std::istringstream in(
        "No.,Time,Source,Destination,Protocol,Length,Info\n"
        "1,zero,a,b,TCP,60,ok\n");
    CHECK_THROWS_AS(parse_capture_csv(in), RowError);
}

TEST_CASE("decreasing time is an order error, not silently repaired") {
    std::istringstream in(
        "No.,Time,Source,Destination,Protocol,Length,Info\n"
        "1,0.200000,a,b,TCP,60,x\n"
        "2,0.100000,a,b,TCP,60,y\n");
    CHECK_THROWS_AS(parse_capture_csv(in), OrderError);
}

TEST_CASE("write then parse reproduces fields") {
    TrafficTrace trace;
    trace.duration_s = 1.0;
    trace.packets.push_back({0.123456, Protocol::MAVLINK, 23, "10.0.0.1", "10.0.0.2", "HEARTBEAT"});
    trace.packets.push_back({0.5, Protocol::TCP, 1042, "1.2.3.4", "10.0.0.2", "[SYN] -> 80"});
    trace.packets.push_back(
        {0.9999994, Protocol::ICMP, 1042, "9.9.9.9", "10.0.0.2", "Echo (ping) request"});

    std::ostringstream out;
    write_capture_csv(trace, out);
    std::istringstream in(out.str());
    TrafficTrace parsed = parse_capture_csv(in);

    REQUIRE(parsed.packets.size() == trace.packets.size());
    for (std::size_t i = 0; i < trace.packets.size(); ++i) {
        CHECK(std::abs(parsed.packets[i].t_rel - trace.packets[i].t_rel) <= 1e-6);
        CHECK(parsed.packets[i].protocol == trace.packets[i].protocol);
        CHECK(parsed.packets[i].length_bytes == trace.packets[i].length_bytes);
        CHECK(parsed.packets[i].src_id == trace.packets[i].src_id);
        CHECK(parsed.packets[i].dst_id == trace.packets[i].dst_id);
        CHECK(parsed.packets[i].info == trace.packets[i].info);
    }
}

TEST_CASE("empty trace writes a header-only file") {
    TrafficTrace trace;
    std::ostringstream out;
    write_capture_csv(trace, out);
    CHECK(out.str() == "No.,Time,Source,Destination,Protocol,Length,Info\n");
}

TEST_CASE("two-packet trace writes three lines") {
    TrafficTrace trace;
    trace.duration_s = 1.0;
    trace.packets.push_back({0.1, Protocol::TCP, 60, "a", "b", "x"});
    trace.packets.push_back({0.2, Protocol::TCP, 60, "a", "b", "y"});
    std::ostringstream out;
    write_capture_csv(trace, out);
    std::size_t lines = 0;
    for (char c : out.str()) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 3);
}

TEST_CASE("merge keeps time order with a-before-b ties") {
    auto mk = [](std::initializer_list<double> times, const char* tag) {
        TrafficTrace t;
        for (double x : times) {
            t.packets.push_back({x, Protocol::TCP, 60, tag, "d", ""});
            t.duration_s = std::max(t.duration_s, x);
        }
        return t;
    };
    TrafficTrace a = mk({0.1}, "a");
    TrafficTrace b = mk({0.05, 0.2}, "b");
    TrafficTrace merged = merge_traces(a, b);
    REQUIRE(merged.packets.size() == 3);
    CHECK(merged.packets[0].t_rel == doctest::Approx(0.05));
    CHECK(merged.packets[1].t_rel == doctest::Approx(0.1));
    CHECK(merged.packets[2].t_rel == doctest::Approx(0.2));
    CHECK(merged.duration_s == doctest::Approx(0.2));

    TrafficTrace empty;
    TrafficTrace same = merge_traces(a, empty);
    CHECK(same.packets.size() == a.packets.size());

    TrafficTrace tie_a = mk({0.3}, "a");
    TrafficTrace tie_b = mk({0.3}, "b");
    TrafficTrace tied = merge_traces(tie_a, tie_b);
    CHECK(tied.packets[0].src_id == "a");
    CHECK(tied.packets[1].src_id == "b");

    TrafficTrace bad;
    bad.duration_s = 1.0;
    bad.packets.push_back({0.5, Protocol::TCP, 60, "x", "d", ""});
    bad.packets.push_back({0.1, Protocol::TCP, 60, "x", "d", ""});
    CHECK_THROWS_AS(merge_traces(bad, empty), OrderError);
}

TEST_SUITE_END();
