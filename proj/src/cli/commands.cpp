#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "tubekit/cli.hpp"

namespace tubekit::cli {

std::vector<TubeRecord> decompose_all(std::span<const Track> gt, const DecomposeParams& params) {
    std::vector<std::vector<BTube>> per_track(gt.size());
    const long n = static_cast<long>(gt.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        if (!gt[i].empty()) {
            per_track[i] = decompose_track(gt[i], params);
        }
    }
    std::vector<TubeRecord> out;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        for (const auto& tube : per_track[i]) {
            out.push_back({gt[i].id, tube, std::nullopt});
        }
    }
    return out;
}

namespace {

Frame last_frame_of(std::span<const Track> tracks) {
    Frame last = 0;
    for (const auto& t : tracks) {
        if (!t.empty()) last = std::max(last, t.last_frame());
    }
    return last;
}

std::vector<ScoredTube> scored(std::span<const TubeRecord> records) {
    std::vector<ScoredTube> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back({r.tube, r.score.value_or(1.0)});
    }
    return out;
}

}  // namespace

MotReport run_linking_pipeline(std::span<const Track> gt, std::span<const TubeRecord> tubes,
                               const JitterSpec& jitter, const RunConfig& cfg) {
    std::vector<BTube> raw;
    raw.reserve(tubes.size());
    for (const auto& r : tubes) raw.push_back(r.tube);
    const auto noisy = jitter_tubes(raw, jitter);
    std::vector<ScoredTube> candidates;
    candidates.reserve(noisy.size());
    for (const auto& t : noisy) candidates.push_back({t, 1.0});
    const auto kept = tube_nms(candidates, cfg.link.gamma1, cfg.link.gamma2);
    const auto tracks = greedy_link(kept, cfg.link, last_frame_of(gt));
    return evaluate(tracks, gt, cfg.iou_thresh);
}

std::vector<RobustnessCell> robustness_sweep(std::span<const Track> gt, std::span<const double> cn_list,
                                             std::span<const double> sn_list, int seeds, const RunConfig& cfg) {
    if (cn_list.empty() || sn_list.empty()) {
        throw std::invalid_argument("robustness_sweep: noise lists must be non-empty");
    }
    if (seeds < 1) {
        throw std::invalid_argument("robustness_sweep: need at least one seed");
    }
    cfg.link.validate();
    const auto tubes = decompose_all(gt, cfg.decompose);
    const long n_cells = static_cast<long>(cn_list.size() * sn_list.size());
    std::vector<RobustnessCell> cells(n_cells);
    const int jobs = std::max(1, cfg.jobs);
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (long c = 0; c < n_cells; ++c) {
        RobustnessCell cell;
        cell.cn = cn_list[c / sn_list.size()];
        cell.sn = sn_list[c % sn_list.size()];
        for (int k = 0; k < seeds; ++k) {
            const JitterSpec jitter{cell.cn, cell.sn, cfg.seed + static_cast<std::uint64_t>(k)};
            const MotReport r = run_linking_pipeline(gt, tubes, jitter, cfg);
            cell.mota += r.mota;
            cell.idf1 += r.idf1;
            cell.mt += r.mt;
            cell.ml += r.ml;
            cell.ids += static_cast<double>(r.ids);
        }
        cell.mota /= seeds;
        cell.idf1 /= seeds;
        cell.mt /= seeds;
        cell.ml /= seeds;
        cell.ids /= seeds;
        cells[c] = cell;
    }
    return cells;
}

// Two lines per cn row: "MOTA IDF1" on the first, "MT ML" underneath.
std::string format_robustness_grid(std::span<const RobustnessCell> cells, std::span<const double> cn_list,
                                   std::span<const double> sn_list) {
    std::ostringstream os;
    os << std::fixed;
    os << std::setw(7) << "cn\\sn";
    for (double sn : sn_list) {
        os << "  " << std::setw(11) << std::setprecision(2) << sn;
    }
    os << '\n';
    for (std::size_t i = 0; i < cn_list.size(); ++i) {
        const auto row = cells.subspan(i * sn_list.size(), sn_list.size());
        os << std::setw(7) << std::setprecision(2) << cn_list[i];
        for (const auto& c : row) {
            os << "  " << std::setprecision(1) << std::setw(5) << 100.0 * c.mota << ' ' << std::setw(5)
               << 100.0 * c.idf1;
        }
        os << '\n' << std::setw(7) << "";
        for (const auto& c : row) {
            os << "  " << std::setprecision(1) << std::setw(5) << c.mt << ' ' << std::setw(5) << c.ml;
        }
        os << '\n';
    }
    return os.str();
}

namespace {

std::string tubes_text(std::span<const TubeRecord> records) {
    std::ostringstream os;
    write_tubes(os, records);
    return os.str();
}

std::string mot_text(std::span<const Track> tracks) {
    std::ostringstream os;
    write_mot(os, tracks);
    return os.str();
}

void add_link_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--beta", cfg.link.beta, "linking threshold on the matching score");
    sub->add_option("--phi", cfg.link.phi, "weight of the moving-direction term");
    sub->add_option("--gamma1", cfg.link.gamma1, "NMS threshold on IoU(B_m)");
    sub->add_option("--gamma2", cfg.link.gamma2, "NMS threshold on IoU of the end boxes");
    sub->add_option("--min-track-len", cfg.link.min_track_len, "drop shorter output tracks");
}

void add_decompose_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--eta", cfg.decompose.eta, "minimum mean IoU of a generated tube");
    sub->add_option("--max-extent", cfg.decompose.max_extent, "max te - ts of a generated tube");
}

// The config file is applied before CLI11 sees the flags, so options bound
// straight into RunConfig naturally take precedence over it.
std::optional<std::string> prescan_config(int argc, const char* const* argv) {
    std::optional<std::string> path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            path = argv[i + 1];
        } else if (arg.rfind("--config=", 0) == 0) {
            path = arg.substr(9);
        }
    }
    return path;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        if (const char* env = std::getenv("TUBEKIT_CONFIG"); env != nullptr && *env != '\0') {
            apply_config_file(cfg, env);
        }
        if (const auto path = prescan_config(argc, argv)) {
            apply_config_file(cfg, *path);
        }
    } catch (const std::exception& e) {
        err << "tubekit: " << e.what() << '\n';
        return 2;
    }

    CLI::App app{"Bounding-tube tracking toolkit", "tubekit"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key=value config file (flags override it)");
    std::string levels_text = format_levels(cfg.levels);

    std::string in_path, out_path, gt_path, pred_path;

    auto* decompose = app.add_subcommand("decompose", "split ground-truth tracks into tubes");
    decompose->add_option("--gt", gt_path, "MOT ground-truth file")->required();
    decompose->add_option("--out", out_path, "tube file to write")->required();
    add_decompose_options(decompose, cfg);

    JitterSpec jitter;
    auto* jit = app.add_subcommand("jitter", "perturb tube boxes with uniform noise");
    jit->add_option("--in", in_path, "tube file")->required();
    jit->add_option("--out", out_path, "tube file to write")->required();
    jit->add_option("--cn", jitter.cn, "center noise fraction");
    jit->add_option("--sn", jitter.sn, "scale noise fraction");
    jit->add_option("--seed", cfg.seed, "random seed");

    auto* nms = app.add_subcommand("nms", "tube non-maximum suppression");
    nms->add_option("--in", in_path, "tube file")->required();
    nms->add_option("--out", out_path, "tube file to write")->required();
    nms->add_option("--gamma1", cfg.link.gamma1, "threshold on IoU(B_m)");
    nms->add_option("--gamma2", cfg.link.gamma2, "threshold on IoU of the end boxes");

    int video_len = 0;
    auto* lnk = app.add_subcommand("link", "greedily link tubes into tracks");
    lnk->add_option("--in", in_path, "tube file")->required();
    lnk->add_option("--out", out_path, "MOT results file to write")->required();
    lnk->add_option("--video-len", video_len, "clip tracks to frames [1, N] when positive");
    add_link_options(lnk, cfg);

    std::string format = "text";
    int bins = 0;
    auto* ev = app.add_subcommand("eval", "CLEAR MOT and identity metrics");
    ev->add_option("--pred", pred_path, "MOT results file")->required();
    ev->add_option("--gt", gt_path, "MOT ground-truth file")->required();
    ev->add_option("--iou-thresh", cfg.iou_thresh, "match threshold");
    ev->add_option("--format", format, "text or kv")->check(CLI::IsMember({"text", "kv"}));
    ev->add_option("--visibility-bins", bins, "also report per-visibility statistics");
    ev->add_option("--out", out_path, "also write the report to this file");

    std::string cn_text = "0,0.05,0.15,0.25";
    std::string sn_text = "0,0.05,0.10,0.15,0.20,0.25";
    int seeds = 5;
    auto* rob = app.add_subcommand("robustness", "linking under jittered ground-truth tubes");
    rob->add_option("--gt", gt_path, "MOT ground-truth file")->required();
    rob->add_option("--cn", cn_text, "comma-separated center noise levels");
    rob->add_option("--sn", sn_text, "comma-separated scale noise levels");
    rob->add_option("--seeds", seeds, "jitter draws averaged per cell");
    rob->add_option("--seed", cfg.seed, "first seed");
    rob->add_option("--jobs", cfg.jobs, "cells evaluated in parallel");
    rob->add_option("--iou-thresh", cfg.iou_thresh, "match threshold");
    rob->add_option("--out", out_path, "also write the grid to this file");
    add_decompose_options(rob, cfg);
    add_link_options(rob, cfg);

    EncodeParams enc;
    auto* encode = app.add_subcommand("encode", "build training target maps for one clip");
    encode->add_option("--in", in_path, "tube file")->required();
    encode->add_option("--out", out_path, "binary map file to write")->required();
    encode->add_option("--clip-start", enc.clip_start, "first frame of the clip")->required();
    encode->add_option("--clip-len", enc.clip_len, "frames in the clip");
    encode->add_option("--image-h", enc.image_h, "image height")->required();
    encode->add_option("--image-w", enc.image_w, "image width")->required();
    encode->add_option("--levels", levels_text, "stride:min:max,... (max may be inf)");

    SynthSpec synth;
    auto* syn = app.add_subcommand("synth", "generate synthetic ground-truth tracks");
    syn->add_option("--out", out_path, "MOT ground-truth file to write")->required();
    syn->add_option("--targets", synth.n_targets, "number of targets");
    syn->add_option("--frames", synth.n_frames, "video length");
    syn->add_option("--arena-w", synth.arena_w, "arena width");
    syn->add_option("--arena-h", synth.arena_h, "arena height");
    syn->add_option("--crossing-rate", synth.crossing_rate, "fraction of targets in crossing pairs");
    syn->add_option("--turn-rate", synth.turn_rate, "per-frame direction change probability");
    syn->add_option("--occlusion-prob", synth.occlusion.probability, "per-track occlusion probability");
    syn->add_option("--occlusion-len", synth.occlusion.length, "occlusion length in frames");
    syn->add_option("--occlusion-vis", synth.occlusion.visibility, "visibility while occluded");
    syn->add_option("--seed", cfg.seed, "random seed");

    for (auto* sub : app.get_subcommands({})) {
        sub->add_option("--config", config_path, "key=value config file (flags override it)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "tubekit: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    try {
        if (*decompose) {
            const auto gt = read_mot_file(gt_path, MotFlavor::Auto);
            const auto records = decompose_all(gt, cfg.decompose);
            write_file_atomic(out_path, tubes_text(records));
            double mean = 0.0;
            for (const auto& r : records) mean += r.tube.te - r.tube.ts;
            if (!records.empty()) mean /= static_cast<double>(records.size());
            out << "tubes " << records.size() << '\n'
                << "mean_length " << std::fixed << std::setprecision(3) << mean << '\n';
        } else if (*jit) {
            auto records = read_tubes_file(in_path);
            std::vector<BTube> raw;
            for (const auto& r : records) raw.push_back(r.tube);
            jitter.seed = cfg.seed;
            const auto noisy = jitter_tubes(raw, jitter);
            for (std::size_t i = 0; i < records.size(); ++i) records[i].tube = noisy[i];
            write_file_atomic(out_path, tubes_text(records));
            out << "tubes " << records.size() << '\n';
        } else if (*nms) {
            const auto records = read_tubes_file(in_path);
            const auto kept = tube_nms(scored(records), cfg.link.gamma1, cfg.link.gamma2);
            // Survivors come back in input order, so a forward walk recovers
            // which rows they were.
            std::vector<TubeRecord> survivors;
            std::size_t j = 0;
            for (const auto& k : kept) {
                while (j < records.size() &&
                       !(records[j].tube == k.tube && records[j].score.value_or(1.0) == k.score)) {
                    ++j;
                }
                survivors.push_back(records[j++]);
            }
            write_file_atomic(out_path, tubes_text(survivors));
            out << "kept " << survivors.size() << " of " << records.size() << '\n';
        } else if (*lnk) {
            cfg.link.validate();
            const auto records = read_tubes_file(in_path);
            const auto tracks = greedy_link(scored(records), cfg.link, video_len);
            write_file_atomic(out_path, mot_text(tracks));
            out << "tracks " << tracks.size() << '\n';
        } else if (*ev) {
            const auto pred = read_mot_file(pred_path, MotFlavor::Results);
            const auto gt = read_mot_file(gt_path, MotFlavor::Auto);
            const MotReport r = evaluate(pred, gt, cfg.iou_thresh);
            std::string report = format == "kv" ? format_report_kv(r) : format_report_text(r);
            if (bins > 0) {
                const auto edges = uniform_bin_edges(bins);
                report += format_visibility_text(visibility_analysis(pred, gt, edges, cfg.iou_thresh));
            }
            out << report;
            if (!out_path.empty()) write_file_atomic(out_path, report);
        } else if (*rob) {
            const auto gt = read_mot_file(gt_path, MotFlavor::Auto);
            const auto cn = parse_list(cn_text);
            const auto sn = parse_list(sn_text);
            const auto cells = robustness_sweep(gt, cn, sn, seeds, cfg);
            const std::string grid = format_robustness_grid(cells, cn, sn);
            out << grid;
            if (!out_path.empty()) write_file_atomic(out_path, grid);
        } else if (*encode) {
            enc.levels = parse_levels(levels_text);
            const auto records = read_tubes_file(in_path);
            std::vector<BTube> in_clip;
            for (const auto& r : records) {
                if (r.tube.tm >= enc.clip_start && r.tube.tm < enc.clip_start + enc.clip_len) {
                    in_clip.push_back(r.tube);
                }
            }
            const TargetMaps maps = encode_targets(in_clip, enc);
            std::ostringstream bin(std::ios::binary);
            write_target_maps(bin, maps);
            write_file_atomic(out_path, bin.str());
            std::size_t positives = 0;
            for (const auto& level : maps.levels) {
                positives += static_cast<std::size_t>(
                    std::count(level.confidence.begin(), level.confidence.end(), 1.0));
            }
            out << "tubes " << in_clip.size() << '\n' << "positives " << positives << '\n';
        } else if (*syn) {
            synth.seed = cfg.seed;
            const auto tracks = synth_tracks(synth);
            std::ostringstream os;
            write_mot_gt(os, tracks);
            write_file_atomic(out_path, os.str());
            out << "tracks " << tracks.size() << '\n';
        }
    } catch (const IoError& e) {
        err << "tubekit: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        err << "tubekit: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "tubekit: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tubekit::cli
