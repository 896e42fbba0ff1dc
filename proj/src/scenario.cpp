#include "floodlab/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include "floodlab/error.hpp"

namespace floodlab {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

ScenarioSpec parse_scenario_config(std::istream& in) {
    ScenarioSpec spec;
    spec.segments.clear();
    std::uint32_t payload_bytes = 1000;
    std::uint16_t tcp_port = 80;
    bool saw_rate = false;

    std::string raw;
    std::size_t line_no = 0;
    std::vector<std::vector<std::string>> pending_profiles;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("scenario line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        auto parse_num = [&](double& out) {
            std::istringstream vs(value);
            if (!(vs >> out) || !(vs >> std::ws).eof()) {
                throw ConfigError("scenario line " + std::to_string(line_no) + ": bad number '" +
                                  value + "'");
            }
        };

        if (key == "benign_rate_pps") {
            parse_num(spec.benign_rate_pps);
            saw_rate = true;
        } else if (key == "degradation_min") {
            parse_num(spec.degradation.delivery_fraction_min);
        } else if (key == "degradation_max") {
            parse_num(spec.degradation.delivery_fraction_max);
        } else if (key == "payload_bytes") {
            double v = 0;
            parse_num(v);
            payload_bytes = static_cast<std::uint32_t>(v);
        } else if (key == "tcp_port") {
            double v = 0;
            parse_num(v);
            tcp_port = static_cast<std::uint16_t>(v);
        } else if (key == "segment") {
            std::istringstream vs(value);
            std::string kind;
            double duration = 0.0;
            if (!(vs >> kind >> duration)) {
                throw ConfigError("scenario line " + std::to_string(line_no) +
                                  ": segment needs '<kind> <duration_s>'");
            }
            std::vector<std::string> profiles;
            std::string tok;
            while (vs >> tok) {
                // split tcp+icmp style tokens
                std::stringstream ts(tok);
                std::string part;
                while (std::getline(ts, part, '+')) {
                    if (!part.empty()) profiles.push_back(part);
                }
            }
            Segment seg;
            seg.duration_s = duration;
            if (kind == "benign") {
                if (!profiles.empty()) {
                    throw ConfigError("scenario line " + std::to_string(line_no) +
                                      ": benign segment cannot list flood profiles");
                }
                seg.kind = SegmentKind::BENIGN;
            } else if (kind == "attack") {
                seg.kind = SegmentKind::ATTACK;
                if (profiles.empty()) {
                    throw ConfigError("scenario line " + std::to_string(line_no) +
                                      ": attack segment needs flood profiles (tcp, icmp)");
                }
            } else {
                throw ConfigError("scenario line " + std::to_string(line_no) +
                                  ": unknown segment kind '" + kind + "'");
            }
            spec.segments.push_back(seg);
            pending_profiles.push_back(profiles);
        } else {
            throw ConfigError("scenario line " + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
        }
    }

    if (!saw_rate) throw ConfigError("scenario config: benign_rate_pps is required");
    if (spec.segments.empty()) throw ConfigError("scenario config: at least one segment required");

    // Resolve profile names now that payload/port overrides are known.
    for (std::size_t i = 0; i < spec.segments.size(); ++i) {
        for (const auto& name : pending_profiles[i]) {
            FloodProfile profile;
            if (name == "tcp") {
                profile = tcp_flood_profile();
                profile.port = tcp_port;
            } else if (name == "icmp") {
                profile = icmp_flood_profile();
            } else {
                throw ConfigError("scenario config: unknown flood profile '" + name + "'");
            }
            profile.payload_bytes = payload_bytes;
            spec.segments[i].attack_profiles.push_back(profile);
        }
    }
    spec.validate();
    return spec;
}

ScenarioSpec load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario file '" + path + "'");
    return parse_scenario_config(in);
}

}  // namespace floodlab
