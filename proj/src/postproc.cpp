#include "tubekit/postproc.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace tubekit {

void LinkConfig::validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(beta) || !unit(gamma1) || !unit(gamma2)) {
        throw std::invalid_argument("LinkConfig: beta, gamma1 and gamma2 must lie in [0, 1]");
    }
    if (phi < 0.0) {
        throw std::invalid_argument("LinkConfig: phi must be non-negative");
    }
    if (min_track_len < 0) {
        throw std::invalid_argument("LinkConfig: min_track_len must be non-negative");
    }
}

bool tube_suppresses(const BTube& kept, const BTube& lower, double gamma1, double gamma2) {
    if (kept.tm != lower.tm) {
        return false;
    }
    const Frame s = std::max(kept.ts, lower.ts);
    const Frame e = std::min(kept.te, lower.te);
    if (s > e) {
        return false;
    }
    return box_iou(kept.bm, lower.bm) > gamma1 &&
           box_iou(interpolate(kept, s), interpolate(lower, s)) > gamma2 &&
           box_iou(interpolate(kept, e), interpolate(lower, e)) > gamma2;
}

namespace {

std::vector<std::vector<std::size_t>> group_by_mid_frame(std::span<const ScoredTube> tubes) {
    std::map<Frame, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < tubes.size(); ++i) {
        groups[tubes[i].tube.tm].push_back(i);
    }
    std::vector<std::vector<std::size_t>> out;
    out.reserve(groups.size());
    for (auto& [frame, idx] : groups) {
        out.push_back(std::move(idx));
    }
    return out;
}

}  // namespace

std::vector<ScoredTube> tube_nms(std::span<const ScoredTube> tubes, double gamma1, double gamma2) {
    const auto groups = group_by_mid_frame(tubes);
    std::vector<char> keep(tubes.size(), 0);
    const long n_groups = static_cast<long>(groups.size());

#pragma omp parallel for schedule(dynamic)
    for (long g = 0; g < n_groups; ++g) {
        std::vector<std::size_t> order = groups[g];
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return tubes[a].score > tubes[b].score; });
        std::vector<std::size_t> kept;
        for (std::size_t idx : order) {
            const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
                return tube_suppresses(tubes[k].tube, tubes[idx].tube, gamma1, gamma2);
            });
            if (!suppressed) {
                kept.push_back(idx);
                keep[idx] = 1;
            }
        }
    }

    std::vector<ScoredTube> out;
    for (std::size_t i = 0; i < tubes.size(); ++i) {
        if (keep[i]) {
            out.push_back(tubes[i]);
        }
    }
    return out;
}

std::optional<double> matching_score(const Track& track, const BTube& tube, double phi) {
    if (track.empty()) {
        return std::nullopt;
    }
    const Frame s = std::max(track.first_frame(), tube.ts);
    const Frame e = std::min(track.last_frame(), tube.te);
    if (s > e) {
        return std::nullopt;
    }
    double sum = 0.0;
    for (Frame f = s; f <= e; ++f) {
        const auto it = track.boxes.find(f);
        if (it != track.boxes.end()) {
            sum += box_iou(it->second, interpolate(tube, f));
        }
    }
    const double m = sum / static_cast<double>(e - s + 1);

    Vec2 track_dir;
    const auto first = track.boxes.find(s);
    const auto last = track.boxes.find(e);
    if (first != track.boxes.end() && last != track.boxes.end()) {
        track_dir = mdv(first->second, last->second);
    }
    const Vec2 tube_dir = mdv(interpolate(tube, s), interpolate(tube, e));
    return std::max(0.0, m * (1.0 + phi * cos_angle(track_dir, tube_dir)));
}

namespace {

void link_in_place(Track& track, const BTube& tube) {
    if (track.empty() || std::max(track.first_frame(), tube.ts) > std::min(track.last_frame(), tube.te)) {
        throw std::invalid_argument("link: track and tube do not overlap in time");
    }
    for (Frame f = tube.ts; f <= tube.te; ++f) {
        const BBox b = interpolate(tube, f);
        auto [it, inserted] = track.boxes.try_emplace(f, b);
        if (!inserted) {
            BBox& k = it->second;
            k = {0.5 * (k.x1 + b.x1), 0.5 * (k.y1 + b.y1), 0.5 * (k.x2 + b.x2), 0.5 * (k.y2 + b.y2)};
        }
    }
}

Track track_from_tube(TrackId id, const BTube& tube) {
    Track t;
    t.id = id;
    for (Frame f = tube.ts; f <= tube.te; ++f) {
        t.boxes.emplace_hint(t.boxes.end(), f, interpolate(tube, f));
    }
    return t;
}

}  // namespace

Track link(const Track& track, const BTube& tube) {
    Track out = track;
    link_in_place(out, tube);
    return out;
}

std::vector<std::vector<double>> score_matrix(std::span<const Track> tracks, std::span<const BTube> tubes,
                                              double phi) {
    std::vector<std::vector<double>> s(tracks.size(), std::vector<double>(tubes.size(), -1.0));
    const long rows = static_cast<long>(tracks.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < tubes.size(); ++j) {
            if (const auto score = matching_score(tracks[i], tubes[j], phi)) {
                s[i][j] = *score;
            }
        }
    }
    return s;
}

std::vector<Track> greedy_link(std::span<const ScoredTube> tubes, const LinkConfig& cfg, int video_len) {
    cfg.validate();
    std::vector<Track> tracks;
    TrackId next_id = 1;

    for (const auto& group : group_by_mid_frame(tubes)) {
        std::vector<BTube> step;
        step.reserve(group.size());
        for (std::size_t idx : group) {
            step.push_back(tubes[idx].tube);
        }

        std::vector<char> used(step.size(), 0);
        if (!tracks.empty()) {
            const auto s = score_matrix(tracks, step, cfg.phi);
            std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
            for (std::size_t i = 0; i < s.size(); ++i) {
                for (std::size_t j = 0; j < step.size(); ++j) {
                    if (s[i][j] >= 0.0 && s[i][j] >= cfg.beta) {
                        pairs.emplace_back(s[i][j], i, j);
                    }
                }
            }
            std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
                if (std::get<0>(a) != std::get<0>(b)) {
                    return std::get<0>(a) > std::get<0>(b);
                }
                return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
            });
            std::vector<char> row_done(tracks.size(), 0);
            for (const auto& [score, i, j] : pairs) {
                if (row_done[i] || used[j]) {
                    continue;
                }
                link_in_place(tracks[i], step[j]);
                row_done[i] = 1;
                used[j] = 1;
            }
        }
        for (std::size_t j = 0; j < step.size(); ++j) {
            if (!used[j]) {
                tracks.push_back(track_from_tube(next_id++, step[j]));
            }
        }
    }

    std::vector<Track> out;
    for (auto& track : tracks) {
        if (video_len > 0) {
            std::erase_if(track.boxes, [video_len](const auto& kv) { return kv.first < 1 || kv.first > video_len; });
        }
        if (!track.empty() && static_cast<int>(track.boxes.size()) >= cfg.min_track_len) {
            out.push_back(std::move(track));
        }
    }
    return out;
}

}  // namespace tubekit
