#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tubekit/cli.hpp"

namespace tubekit::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_real(const std::string& text, const std::string& source, long line) {
    const std::string t = trim(text);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ParseError(source, line, "not a number: '" + t + "'");
    }
    return v;
}

long to_int(const std::string& text, const std::string& source, long line) {
    const double v = to_real(text, source, line);
    if (v != std::floor(v) || !std::isfinite(v)) {
        throw ParseError(source, line, "not an integer: '" + trim(text) + "'");
    }
    return static_cast<long>(v);
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!trim(item).empty()) {
            out.push_back(to_real(item, "<list>", 1));
        }
    }
    if (out.empty()) {
        throw ParseError("<list>", 1, "empty list");
    }
    return out;
}

std::vector<LevelSpec> parse_levels(const std::string& text) {
    std::vector<LevelSpec> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::stringstream parts(item);
        std::string stride, lo, hi;
        if (!std::getline(parts, stride, ':') || !std::getline(parts, lo, ':') || !std::getline(parts, hi)) {
            throw ParseError("<levels>", 1, "expected stride:min:max, got '" + item + "'");
        }
        LevelSpec spec;
        spec.stride = static_cast<int>(to_int(stride, "<levels>", 1));
        spec.min_size = to_real(lo, "<levels>", 1);
        spec.max_size = to_real(hi, "<levels>", 1);
        if (spec.stride < 1 || !(spec.min_size < spec.max_size)) {
            throw ParseError("<levels>", 1, "bad level '" + item + "'");
        }
        out.push_back(spec);
    }
    if (out.empty()) {
        throw ParseError("<levels>", 1, "empty level spec");
    }
    return out;
}

std::string format_levels(std::span<const LevelSpec> levels) {
    std::ostringstream os;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (i) os << ',';
        os << levels[i].stride << ':' << levels[i].min_size << ':';
        if (std::isinf(levels[i].max_size)) {
            os << "inf";
        } else {
            os << levels[i].max_size;
        }
    }
    return os.str();
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& source) {
    std::stringstream in(text);
    std::string raw;
    long line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParseError(source, line, "expected key=value");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key == "eta") {
            cfg.decompose.eta = to_real(value, source, line);
        } else if (key == "max_extent") {
            cfg.decompose.max_extent = static_cast<int>(to_int(value, source, line));
        } else if (key == "beta") {
            cfg.link.beta = to_real(value, source, line);
        } else if (key == "phi") {
            cfg.link.phi = to_real(value, source, line);
        } else if (key == "gamma1") {
            cfg.link.gamma1 = to_real(value, source, line);
        } else if (key == "gamma2") {
            cfg.link.gamma2 = to_real(value, source, line);
        } else if (key == "min_track_len") {
            cfg.link.min_track_len = static_cast<int>(to_int(value, source, line));
        } else if (key == "iou_thresh") {
            cfg.iou_thresh = to_real(value, source, line);
        } else if (key == "levels") {
            cfg.levels = parse_levels(value);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(to_int(value, source, line));
        } else if (key == "jobs") {
            cfg.jobs = static_cast<int>(to_int(value, source, line));
        } else {
            throw ParseError(source, line, "unknown key '" + key + "'");
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), path.string());
}

}  // namespace tubekit::cli
