#include "tubekit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <tuple>

namespace tubekit {

ParseError::ParseError(const std::string& source, long line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

struct FieldParser {
    const std::string& source;
    long line;

    double real(std::string_view field) const {
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
            throw ParseError(source, line, "not a number: '" + std::string(field) + "'");
        }
        return value;
    }

    int integer(std::string_view field) const {
        const double v = real(field);
        if (v != std::floor(v) || std::abs(v) > 1e9) {
            throw ParseError(source, line, "not an integer: '" + std::string(field) + "'");
        }
        return static_cast<int>(v);
    }
};

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

}  // namespace

std::vector<Track> read_mot(std::istream& in, MotFlavor flavor, const std::string& source) {
    std::map<TrackId, Track> tracks;
    std::string raw;
    long line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() < 6) {
            throw ParseError(source, line_no, "expected at least 6 comma-separated fields");
        }
        const FieldParser p{source, line_no};
        const Frame frame = p.integer(fields[0]);
        const TrackId id = p.integer(fields[1]);
        const double x = p.real(fields[2]);
        const double y = p.real(fields[3]);
        const double w = p.real(fields[4]);
        const double h = p.real(fields[5]);
        if (w < 0.0 || h < 0.0) {
            throw ParseError(source, line_no, "negative box size");
        }

        const bool gt = flavor == MotFlavor::GroundTruth || (flavor == MotFlavor::Auto && fields.size() == 9);
        std::optional<double> visibility;
        if (gt) {
            if (fields.size() < 7) {
                throw ParseError(source, line_no, "ground-truth row needs a flag column");
            }
            if (p.real(fields[6]) == 0.0) {
                continue;
            }
            if (fields.size() >= 8) {
                const int cls = p.integer(fields[7]);
                if (cls != 1 && cls != -1) {
                    continue;
                }
            }
            if (fields.size() >= 9) {
                const double v = p.real(fields[8]);
                if (v >= 0.0) {
                    visibility = v;
                }
            }
        } else {
            for (std::size_t i = 6; i < fields.size(); ++i) {
                p.real(fields[i]);
            }
        }

        Track& track = tracks[id];
        track.id = id;
        if (!track.boxes.emplace(frame, BBox{x, y, x + w, y + h}).second) {
            throw ParseError(source, line_no,
                             "duplicate entry for frame " + std::to_string(frame) + ", id " + std::to_string(id));
        }
        if (visibility) {
            track.visibility.emplace(frame, *visibility);
        }
    }
    if (in.bad()) {
        throw IoError("read error on " + source);
    }
    std::vector<Track> out;
    out.reserve(tracks.size());
    for (auto& [id, track] : tracks) {
        out.push_back(std::move(track));
    }
    return out;
}

std::vector<Track> read_mot_file(const std::filesystem::path& path, MotFlavor flavor) {
    auto in = open_input(path);
    return read_mot(in, flavor, path.string());
}

namespace {

template <typename RowFn>
void write_rows(std::ostream& out, std::span<const Track> tracks, RowFn&& row) {
    std::vector<std::tuple<Frame, TrackId, const Track*, const BBox*>> rows;
    for (const auto& track : tracks) {
        for (const auto& [frame, box] : track.boxes) {
            rows.emplace_back(frame, track.id, &track, &box);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    for (const auto& [frame, id, track, box] : rows) {
        out << frame << ',' << id << ',' << fmt(box->x1) << ',' << fmt(box->y1) << ',' << fmt(box->width()) << ','
            << fmt(box->height()) << ',';
        row(out, *track, frame);
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed");
    }
}

}  // namespace

void write_mot(std::ostream& out, std::span<const Track> tracks) {
    write_rows(out, tracks, [](std::ostream& os, const Track&, Frame) { os << "1,-1,-1,-1"; });
}

void write_mot_gt(std::ostream& out, std::span<const Track> tracks) {
    write_rows(out, tracks, [](std::ostream& os, const Track& track, Frame frame) {
        const auto it = track.visibility.find(frame);
        os << "1,1," << fmt(it != track.visibility.end() ? it->second : 1.0);
    });
}

std::vector<TubeRecord> read_tubes(std::istream& in, const std::string& source) {
    std::vector<TubeRecord> out;
    std::string raw;
    long line_no = 0;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            if (line != kTubeFileHeader) {
                throw ParseError(source, line_no, std::string("expected header '") + kTubeFileHeader + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.front() == '#') {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 16 && fields.size() != 17) {
            throw ParseError(source, line_no, "expected 16 or 17 fields, got " + std::to_string(fields.size()));
        }
        const FieldParser p{source, line_no};
        TubeRecord rec;
        rec.track_id = p.integer(fields[0]);
        BTube& t = rec.tube;
        t.ts = p.integer(fields[1]);
        t.tm = p.integer(fields[2]);
        t.te = p.integer(fields[3]);
        BBox* boxes[3] = {&t.bs, &t.bm, &t.be};
        for (int b = 0; b < 3; ++b) {
            *boxes[b] = {p.real(fields[4 + 4 * b]), p.real(fields[5 + 4 * b]), p.real(fields[6 + 4 * b]),
                         p.real(fields[7 + 4 * b])};
        }
        if (!t.valid()) {
            throw ParseError(source, line_no, "invalid tube (frame order or inverted box)");
        }
        if (fields.size() == 17) {
            rec.score = p.real(fields[16]);
        }
        out.push_back(rec);
    }
    if (!header_seen) {
        throw ParseError(source, line_no, "missing tube file header");
    }
    return out;
}

std::vector<TubeRecord> read_tubes_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_tubes(in, path.string());
}

void write_tubes(std::ostream& out, std::span<const TubeRecord> tubes) {
    out << kTubeFileHeader << '\n';
    for (const auto& rec : tubes) {
        const BTube& t = rec.tube;
        out << rec.track_id << ',' << t.ts << ',' << t.tm << ',' << t.te;
        for (const BBox* b : {&t.bs, &t.bm, &t.be}) {
            out << ',' << fmt(b->x1) << ',' << fmt(b->y1) << ',' << fmt(b->x2) << ',' << fmt(b->y2);
        }
        if (rec.score) {
            out << ',' << fmt(*rec.score);
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed");
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        }
        out << contents;
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at '" + path.string() + "'");
    }
}

UniformSource::UniformSource(std::uint64_t seed) : engine_(seed) {}

double UniformSource::unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double UniformSource::symmetric() {
    // 53-bit grid over [-1, 1] including both ends
    constexpr double kMax = 9007199254740991.0;  // 2^53 - 1
    return 2.0 * (static_cast<double>(engine_() >> 11) / kMax) - 1.0;
}

double UniformSource::range(double lo, double hi) { return lo + (hi - lo) * unit(); }

int UniformSource::integer(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
}

namespace {

BBox jitter_box(const BBox& b, const JitterSpec& spec, UniformSource& rng) {
    const double ux = rng.symmetric();
    const double uy = rng.symmetric();
    const double vx = rng.symmetric();
    const double vy = rng.symmetric();
    const double w = b.width();
    const double h = b.height();
    const double dx = ux * spec.cn * w;
    const double dy = uy * spec.cn * h;
    double nw = w * (1.0 + vx * spec.sn);
    double nh = h * (1.0 + vy * spec.sn);
    if (spec.sn > 0.0) {
        nw = std::max(nw, 1.0);
        nh = std::max(nh, 1.0);
    }
    const double gx = 0.5 * (nw - w);
    const double gy = 0.5 * (nh - h);
    return {b.x1 + dx - gx, b.y1 + dy - gy, b.x2 + dx + gx, b.y2 + dy + gy};
}

}  // namespace

std::vector<BTube> jitter_tubes(std::span<const BTube> tubes, const JitterSpec& spec) {
    if (spec.cn < 0.0 || spec.sn < 0.0) {
        throw std::invalid_argument("jitter_tubes: noise fractions must be non-negative");
    }
    UniformSource rng(spec.seed);
    std::vector<BTube> out;
    out.reserve(tubes.size());
    for (const auto& tube : tubes) {
        BTube j = tube;
        j.bs = jitter_box(tube.bs, spec, rng);
        j.bm = jitter_box(tube.bm, spec, rng);
        j.be = jitter_box(tube.be, spec, rng);
        out.push_back(j);
    }
    return out;
}

namespace {

constexpr double kLaneHeight = 140.0;
constexpr double kMinHeight = 60.0;
constexpr double kMaxHeight = 120.0;
constexpr double kAspect = 0.41;

struct Mover {
    double x = 0.0;  // left edge
    double y = 0.0;  // top edge
    double vx = 0.0;
    double vy = 0.0;
};

void add_occlusion(Track& track, const OcclusionSpec& occ, UniformSource& rng) {
    for (const auto& [frame, box] : track.boxes) {
        track.visibility[frame] = 1.0;
    }
    if (occ.probability <= 0.0 || occ.length <= 0 || rng.unit() >= occ.probability) {
        return;
    }
    const int n = static_cast<int>(track.boxes.size());
    if (n < occ.length + 2) {
        return;
    }
    const int start = rng.integer(1, n - occ.length - 1);
    auto it = std::next(track.boxes.begin(), start);
    for (int k = 0; k < occ.length; ++k, ++it) {
        track.visibility[it->first] = occ.visibility;
    }
}

}  // namespace

std::vector<Track> synth_tracks(const SynthSpec& spec) {
    if (spec.n_targets < 1) {
        throw std::invalid_argument("synth_tracks: need at least one target");
    }
    if (spec.n_frames < 1) {
        throw std::invalid_argument("synth_tracks: need at least one frame");
    }
    if (spec.crossing_rate < 0.0 || spec.crossing_rate > 1.0 || spec.turn_rate < 0.0 || spec.turn_rate > 1.0) {
        throw std::invalid_argument("synth_tracks: rates must lie in [0, 1]");
    }
    const int pairs = static_cast<int>(std::lround(spec.crossing_rate * (spec.n_targets / 2)));
    const int singles = spec.n_targets - 2 * pairs;
    const int lanes = singles + pairs;
    if (lanes * kLaneHeight > spec.arena_h || spec.arena_w < 4.0 * kMaxHeight) {
        throw std::invalid_argument("synth_tracks: arena " + fmt(spec.arena_w) + "x" + fmt(spec.arena_h) +
                                    " too small for " + std::to_string(lanes) + " lanes");
    }

    UniformSource rng(spec.seed);
    std::vector<Track> tracks;
    TrackId next_id = 1;
    const double t_total = spec.n_frames;

    for (int lane = 0; lane < lanes; ++lane) {
        const double lane_top = lane * kLaneHeight;
        if (lane < pairs) {
            // Two targets meeting near mid-arena around mid-video, moving
            // horizontally in opposite directions.
            const double meet_x = spec.arena_w * rng.range(0.4, 0.6);
            const int meet_t = std::max(1, static_cast<int>(std::lround(t_total * rng.range(0.4, 0.6))));
            for (int side = 0; side < 2; ++side) {
                Track track;
                track.id = next_id++;
                const double h = rng.range(kMinHeight, kMaxHeight);
                const double w = kAspect * h;
                const double speed = rng.range(2.0, 5.0);
                const double vx = side == 0 ? speed : -speed;
                const double top = lane_top + (kLaneHeight - h) * (side == 0 ? 0.25 : 0.75);
                for (Frame f = 1; f <= spec.n_frames; ++f) {
                    const double cx = meet_x + vx * (f - meet_t);
                    // Only while fully inside the arena; linear motion keeps this contiguous.
                    if (cx - 0.5 * w >= 0.0 && cx + 0.5 * w <= spec.arena_w) {
                        track.boxes.emplace_hint(track.boxes.end(), f,
                                                 BBox{cx - 0.5 * w, top, cx + 0.5 * w, top + h});
                    }
                }
                tracks.push_back(std::move(track));
            }
            continue;
        }

        Track track;
        track.id = next_id++;
        const double h = rng.range(kMinHeight, kMaxHeight);
        const double w = kAspect * h;
        Frame first = 1;
        Frame last = spec.n_frames;
        if (spec.n_frames >= 10) {
            first = rng.integer(1, std::max(1, spec.n_frames / 5));
            last = rng.integer(spec.n_frames - spec.n_frames / 5, spec.n_frames);
        }
        const int frames = last - first + 1;
        Mover m;
        m.x = rng.range(0.0, spec.arena_w - w);
        m.y = lane_top + 0.5 * (kLaneHeight - h);
        // Head towards the side with more room, slow enough not to reach the wall.
        const double room = m.x > 0.5 * (spec.arena_w - w) ? m.x : spec.arena_w - w - m.x;
        const double speed = std::min(rng.range(1.0, 4.0), room / std::max(1, frames));
        m.vx = m.x > 0.5 * (spec.arena_w - w) ? -speed : speed;
        const double y_lo = lane_top + 2.0;
        const double y_hi = lane_top + kLaneHeight - h - 2.0;
        for (Frame f = first; f <= last; ++f) {
            track.boxes.emplace_hint(track.boxes.end(), f, BBox{m.x, m.y, m.x + w, m.y + h});
            if (spec.turn_rate > 0.0 && rng.unit() < spec.turn_rate) {
                const double s = rng.range(1.0, 4.0);
                const double angle = rng.range(-0.3, 0.3);
                const double dir = rng.unit() < 0.5 ? -1.0 : 1.0;
                m.vx = dir * s * std::cos(angle);
                m.vy = s * std::sin(angle);
            }
            m.x += m.vx;
            m.y += m.vy;
            if (m.x < 0.0 || m.x > spec.arena_w - w) {
                m.vx = -m.vx;
                m.x = std::clamp(m.x, 0.0, spec.arena_w - w);
            }
            if (m.y < y_lo || m.y > y_hi) {
                m.vy = -m.vy;
                m.y = std::clamp(m.y, y_lo, y_hi);
            }
        }
        tracks.push_back(std::move(track));
    }

    for (auto& track : tracks) {
        add_occlusion(track, spec.occlusion, rng);
    }
    return tracks;
}

}  // namespace tubekit
