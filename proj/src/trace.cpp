#include "floodlab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "floodlab/error.hpp"

namespace floodlab {

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::MAVLINK: return "MAVLINK";
        case Protocol::TCP: return "TCP";
        case Protocol::ICMP: return "ICMP";
        default: return "OTHER";
    }
}

Protocol protocol_from_string(const std::string& s) {
    std::string up;
    up.reserve(s.size());
    for (char c : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (up.rfind("MAVLINK", 0) == 0) return Protocol::MAVLINK;
    if (up == "TCP") return Protocol::TCP;
    if (up == "ICMP") return Protocol::ICMP;
    return Protocol::OTHER;
}

void TrafficTrace::check_sorted() const {
    for (std::size_t i = 1; i < packets.size(); ++i) {
        if (packets[i].t_rel < packets[i - 1].t_rel) {
            throw OrderError("trace not sorted at packet " + std::to_string(i));
        }
    }
    for (const auto& p : packets) {
        if (p.t_rel < 0.0 || p.t_rel > duration_s) {
            throw OrderError("packet time outside [0, duration]");
        }
    }
}

void FloodProfile::validate() const {
    if (protocol != Protocol::TCP && protocol != Protocol::ICMP) {
        throw InvalidArgument("flood profile protocol must be TCP or ICMP");
    }
    if (port.has_value() != (protocol == Protocol::TCP)) {
        throw InvalidArgument("port must be present iff protocol is TCP");
    }
    if (payload_bytes == 0) throw InvalidArgument("payload_bytes must be positive");
    const auto& s = target_stats;
    if (!(s.mean_s > 0.0) || !(s.arrival_rate_pps > 0.0)) {
        throw InvalidArgument("flood profile needs positive mean and arrival rate");
    }
    if (!(s.p25_s <= s.p50_s && s.p50_s <= s.p75_s)) {
        throw InvalidArgument("flood profile percentiles must be non-decreasing");
    }
}

void DegradationModel::validate() const {
    if (!(delivery_fraction_min > 0.0) || !(delivery_fraction_min <= delivery_fraction_max) ||
        !(delivery_fraction_max <= 1.0)) {
        throw InvalidArgument("degradation fractions must satisfy 0 < min <= max <= 1");
    }
}

void ScenarioSpec::validate() const {
    if (segments.empty()) throw InvalidArgument("scenario needs at least one segment");
    if (!(benign_rate_pps > 0.0)) throw InvalidArgument("benign rate must be positive");
    degradation.validate();
    for (const auto& seg : segments) {
        if (!(seg.duration_s > 0.0)) throw InvalidArgument("segment durations must be positive");
        if (seg.kind == SegmentKind::ATTACK) {
            if (seg.attack_profiles.empty()) {
                throw InvalidArgument("attack segment needs at least one flood profile");
            }
            for (const auto& p : seg.attack_profiles) p.validate();
        }
    }
}

double ScenarioSpec::total_duration_s() const {
    double t = 0.0;
    for (const auto& seg : segments) t += seg.duration_s;
    return t;
}

// ---------------------------------------------------------------------------
// Inter-arrival mixture

double InterArrivalMixture::sample(Rng& rng) const {
    const bool burst = rng.uniform() < burst_weight;
    return rng.exponential(burst ? burst_mean_s : pause_mean_s);
}

double InterArrivalMixture::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    return burst_weight * (1.0 - std::exp(-x / burst_mean_s)) +
           (1.0 - burst_weight) * (1.0 - std::exp(-x / pause_mean_s));
}

double InterArrivalMixture::quantile(double q) const {
    double lo = 0.0;
    double hi = 50.0 * std::max(burst_mean_s, pause_mean_s);
    for (int i = 0; i < 200 && cdf(hi) < q; ++i) hi *= 2.0;
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        (cdf(mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

InterArrivalMixture fit_interarrival_mixture(const InterArrivalStats& target) {
    const double m = target.mean_s;
    const double targets[3] = {target.p25_s, target.p50_s, target.p75_s};
    if (!(m > 0.0) || !(targets[0] > 0.0)) {
        throw InvalidArgument("mixture fit needs positive mean and percentiles");
    }

    // The pause mean is pinned by the mean constraint, leaving (weight, burst
    // mean) free. Exhaustive search keeps the fit deterministic. The median
    // must land within a factor of 2 (the generator's contract); among
    // candidates that achieve it the outer quartiles are balanced. Some
    // published quartile spreads cannot be matched within a factor of 2 on
    // all three by a two-exponential mixture, so the outer quartiles are
    // best-effort.
    const double mb_lo = targets[0] / 8.0;
    const double mb_hi = std::min(targets[2] * 8.0, 0.999 * m);
    const int n_mb = 140;
    const double log_lo = std::log(mb_lo), log_hi = std::log(mb_hi);
    const double median_cap = std::log(1.9);  // margin under 2 for sampling noise

    InterArrivalMixture best, best_feasible;
    double best_loss = 1e300, best_feasible_loss = 1e300;
    for (int wi = 5; wi <= 95; ++wi) {
        const double w = wi / 100.0;
        for (int bi = 0; bi < n_mb; ++bi) {
            const double mb = std::exp(log_lo + (log_hi - log_lo) * bi / (n_mb - 1));
            const double mp = (m - w * mb) / (1.0 - w);
            if (!(mp > mb)) continue;  // pause must be the slow component
            InterArrivalMixture cand{w, mb, mp};
            const double median_err = std::abs(std::log(cand.quantile(0.50) / targets[1]));
            const double outer_err =
                std::max(std::abs(std::log(cand.quantile(0.25) / targets[0])),
                         std::abs(std::log(cand.quantile(0.75) / targets[2])));
            const double overall = std::max(median_err, outer_err);
            if (overall < best_loss) {
                best_loss = overall;
                best = cand;
            }
            if (median_err <= median_cap && outer_err < best_feasible_loss) {
                best_feasible_loss = outer_err;
                best_feasible = cand;
            }
        }
    }
    if (best_loss == 1e300) throw InvalidArgument("mixture fit found no admissible parameters");
    return best_feasible_loss < 1e300 ? best_feasible : best;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct MavlinkMessage {
    const char* name;
    std::uint32_t length;
};

// Typical GCS<->UAV telemetry messages; lengths include framing.
constexpr MavlinkMessage kMavlinkMessages[] = {
    {"HEARTBEAT", 23},     {"SYS_STATUS", 45},  {"ATTITUDE", 42},
    {"GLOBAL_POSITION_INT", 44}, {"GPS_RAW_INT", 46}, {"VFR_HUD", 36},
};
constexpr const char* kGcsAddr = "10.42.0.1";
constexpr const char* kUavAddr = "10.42.0.34";

std::string spoofed_source(Rng& rng) {
    const std::uint64_t r = rng.next_u64();
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u",
                  static_cast<unsigned>(1 + (r & 0xff) % 254),
                  static_cast<unsigned>(1 + ((r >> 8) & 0xff) % 254),
                  static_cast<unsigned>(1 + ((r >> 16) & 0xff) % 254),
                  static_cast<unsigned>(1 + ((r >> 24) & 0xff) % 254));
    return buf;
}

}  // namespace

TrafficTrace synth_benign(double rate_pps, double duration_s, Rng& rng) {
    if (!(rate_pps > 0.0)) throw InvalidArgument("benign rate must be positive");
    if (duration_s < 0.0) throw InvalidArgument("duration must be non-negative");

    TrafficTrace trace;
    trace.duration_s = duration_s;
    const double mean_gap = 1.0 / rate_pps;
    double t = rng.exponential(mean_gap);
    while (t <= duration_s) {
        const auto& msg = kMavlinkMessages[rng.uniform_int(std::size(kMavlinkMessages))];
        trace.packets.push_back(
            {t, Protocol::MAVLINK, msg.length, kGcsAddr, kUavAddr, msg.name});
        t += rng.exponential(mean_gap);
    }
    return trace;
}

TrafficTrace synth_flood(const FloodProfile& profile, double duration_s, Rng& rng) {
    profile.validate();
    if (duration_s < 0.0) throw InvalidArgument("duration must be non-negative");

    const InterArrivalMixture mix = fit_interarrival_mixture(profile.target_stats);
    const std::uint32_t length = profile.payload_bytes + kFloodHeaderBytes;
    std::string info;
    if (profile.protocol == Protocol::TCP) {
        info = "[SYN] -> " + std::to_string(*profile.port);
    } else {
        info = "Echo (ping) request";
    }

    TrafficTrace trace;
    trace.duration_s = duration_s;
    double t = mix.sample(rng);
    while (t <= duration_s) {
        trace.packets.push_back({t, profile.protocol, length, spoofed_source(rng), kUavAddr, info});
        t += mix.sample(rng);
    }
    return trace;
}

ScenarioResult synth_scenario(const ScenarioSpec& spec) {
    spec.validate();
    Rng master(spec.seed);

    ScenarioResult out;
    out.trace.duration_s = spec.total_duration_s();

    double seg_start = 0.0;
    for (const auto& seg : spec.segments) {
        Rng benign_rng = master.fork();
        TrafficTrace benign = synth_benign(spec.benign_rate_pps, seg.duration_s, benign_rng);

        std::vector<PacketRecord> seg_packets;
        if (seg.kind == SegmentKind::BENIGN) {
            seg_packets = std::move(benign.packets);
        } else {
            // Packet delivery degrades under attack: thin the offered benign
            // stream per 0.1 s window by a sampled delivery fraction.
            Rng degrade_rng = master.fork();
            const double w = 0.1;
            const std::size_t n_windows =
                static_cast<std::size_t>(std::ceil(seg.duration_s / w));
            std::vector<double> fraction(n_windows);
            for (auto& f : fraction) {
                f = degrade_rng.uniform(spec.degradation.delivery_fraction_min,
                                        spec.degradation.delivery_fraction_max);
            }
            for (auto& p : benign.packets) {
                std::size_t k = static_cast<std::size_t>(p.t_rel / w);
                if (k >= n_windows) k = n_windows - 1;
                if (degrade_rng.uniform() < fraction[k]) seg_packets.push_back(std::move(p));
            }
            for (const auto& profile : seg.attack_profiles) {
                Rng flood_rng = master.fork();
                TrafficTrace flood = synth_flood(profile, seg.duration_s, flood_rng);
                seg_packets.insert(seg_packets.end(),
                                   std::make_move_iterator(flood.packets.begin()),
                                   std::make_move_iterator(flood.packets.end()));
            }
            std::stable_sort(seg_packets.begin(), seg_packets.end(),
                             [](const PacketRecord& a, const PacketRecord& b) {
                                 return a.t_rel < b.t_rel;
                             });
        }

        for (auto& p : seg_packets) {
            p.t_rel += seg_start;
            out.trace.packets.push_back(std::move(p));
        }
        out.labels.push_back(
            {seg_start, seg_start + seg.duration_s, seg.kind == SegmentKind::ATTACK ? 1 : 0});
        seg_start += seg.duration_s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

double percentile_linear(const std::vector<double>& sorted, double q) {
    const double rank = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

InterArrivalStats trace_stats(const TrafficTrace& trace, Protocol protocol) {
    std::vector<double> times;
    for (const auto& p : trace.packets) {
        if (p.protocol == protocol) times.push_back(p.t_rel);
    }
    if (times.size() < 2) {
        throw InsufficientData("trace_stats needs at least 2 packets of the protocol");
    }
    if (!(trace.duration_s > 0.0)) {
        throw InvalidArgument("trace_stats needs a positive trace duration");
    }

    std::vector<double> gaps(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) gaps[i - 1] = times[i] - times[i - 1];

    double sum = 0.0;
    for (double g : gaps) sum += g;
    const double mean = sum / static_cast<double>(gaps.size());
    double ss = 0.0;
    for (double g : gaps) ss += (g - mean) * (g - mean);
    // Population std: matches the scaler convention used downstream.
    const double stddev = std::sqrt(ss / static_cast<double>(gaps.size()));

    std::sort(gaps.begin(), gaps.end());
    InterArrivalStats s;
    s.mean_s = mean;
    s.std_s = stddev;
    s.p25_s = percentile_linear(gaps, 0.25);
    s.p50_s = percentile_linear(gaps, 0.50);
    s.p75_s = percentile_linear(gaps, 0.75);
    s.arrival_rate_pps = static_cast<double>(times.size()) / trace.duration_s;
    return s;
}

// ---------------------------------------------------------------------------
// Presets

FloodProfile tcp_flood_profile() {
    FloodProfile p;
    p.protocol = Protocol::TCP;
    p.target_stats = {7.7e-3, 4.52e-2, 1.2e-5, 4.9e-5, 4.126e-3, 129.87};
    p.payload_bytes = 1000;
    p.port = 80;
    return p;
}

FloodProfile icmp_flood_profile() {
    FloodProfile p;
    p.protocol = Protocol::ICMP;
    p.target_stats = {5.6e-3, 4.48e-2, 1.1e-5, 5.55e-4, 1.475e-3, 178.57};
    p.payload_bytes = 1000;
    p.port.reset();
    return p;
}

}  // namespace floodlab
