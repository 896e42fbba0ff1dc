#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "floodlab/rng.hpp"

namespace floodlab {

enum class Protocol { MAVLINK, TCP, ICMP, OTHER };

const char* protocol_name(Protocol p);
Protocol protocol_from_string(const std::string& s);

/// One captured packet. Times are seconds relative to capture start.
struct PacketRecord {
    double t_rel = 0.0;
    Protocol protocol = Protocol::OTHER;
    std::uint32_t length_bytes = 1;
    std::string src_id;
    std::string dst_id;
    std::string info;
};

/// Ordered packet sequence. Packets are sorted by non-decreasing t_rel and
/// every t_rel lies in [0, duration_s].
struct TrafficTrace {
    std::vector<PacketRecord> packets;
    double duration_s = 0.0;

    void check_sorted() const;  // throws OrderError on violation
};

/// Summary statistics of successive inter-arrival gaps for one protocol.
struct InterArrivalStats {
    double mean_s = 0.0;
    double std_s = 0.0;
    double p25_s = 0.0;
    double p50_s = 0.0;
    double p75_s = 0.0;
    double arrival_rate_pps = 0.0;
};

/// Statistical description of one flooding stream.
struct FloodProfile {
    Protocol protocol = Protocol::TCP;  // TCP or ICMP only
    InterArrivalStats target_stats;
    std::uint32_t payload_bytes = 1000;
    std::optional<std::uint16_t> port;  // present iff protocol == TCP

    void validate() const;
};

/// Two-exponential mixture fitted to InterArrivalStats: with probability
/// burst_weight a gap is Exp(burst_mean_s), otherwise Exp(pause_mean_s).
/// The mixture mean equals the target mean exactly; the weight and burst mean
/// are chosen by grid search to bring the quartiles as close as possible.
struct InterArrivalMixture {
    double burst_weight = 0.5;
    double burst_mean_s = 1e-4;
    double pause_mean_s = 1e-2;

    double sample(Rng& rng) const;
    double cdf(double x) const;
    double quantile(double q) const;
};

InterArrivalMixture fit_interarrival_mixture(const InterArrivalStats& target);

/// Per-window fraction of offered benign traffic that survives an attack.
struct DegradationModel {
    double delivery_fraction_min = 0.05;
    double delivery_fraction_max = 0.40;

    void validate() const;
};

enum class SegmentKind { BENIGN, ATTACK };

struct Segment {
    SegmentKind kind = SegmentKind::BENIGN;
    std::vector<FloodProfile> attack_profiles;  // used when kind == ATTACK
    double duration_s = 0.0;
};

/// Benign/attack timeline of one experiment.
struct ScenarioSpec {
    std::vector<Segment> segments;
    double benign_rate_pps = 100.67;
    DegradationModel degradation;
    std::uint64_t seed = 42;

    void validate() const;
    double total_duration_s() const;
};

/// Half-open labeled span [start_s, end_s); label 1 = DDoS, 0 = normal.
struct LabelInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    int label = 0;
};

struct ScenarioResult {
    TrafficTrace trace;
    std::vector<LabelInterval> labels;
};

// Generators. All are deterministic given the seed carried by `rng` (or the
// ScenarioSpec) and never touch global state.

TrafficTrace synth_benign(double rate_pps, double duration_s, Rng& rng);
TrafficTrace synth_flood(const FloodProfile& profile, double duration_s, Rng& rng);
ScenarioResult synth_scenario(const ScenarioSpec& spec);

/// Sample statistics of successive same-protocol inter-arrival gaps.
/// Requires at least two packets of `protocol`; rate is count / duration.
InterArrivalStats trace_stats(const TrafficTrace& trace, Protocol protocol);

// Table-derived presets used by the shipped scenario files.
FloodProfile tcp_flood_profile();
FloodProfile icmp_flood_profile();

inline constexpr double kBenignRateTcpTrain = 100.67;   // 60,401 pkts / 600 s
inline constexpr double kBenignRateIcmpTrain = 122.77;  // 73,663 pkts / 600 s
inline constexpr double kBenignRateTcpTest = 90.34;     // 54,203 pkts / 600 s
inline constexpr double kBenignRateIcmpTest = 90.34;
inline constexpr double kBenignRateHybridTest = 60.04;  // 36,025 pkts / 600 s
inline constexpr std::uint32_t kFloodHeaderBytes = 42;

}  // namespace floodlab
