// Acceptance run: one PASS / FAIL / SKIP line per criterion, nonzero exit
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "decompose_oracle.hpp"
#include "fixtures.hpp"
#include "matching_oracle.hpp"
#include "raster_oracle.hpp"
#include "scenarios.hpp"
#include "tubekit/assignment.hpp"
#include "tubekit/cli.hpp"
#include "tubekit/data.hpp"
#include "tubekit/encoder.hpp"
#include "tubekit/losses.hpp"
#include "tubekit/metrics.hpp"
#include "tubekit/postproc.hpp"

using namespace tubekit;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status = Status::Pass;
    std::string detail;
};

Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::Skip, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Status::Pass : Status::Fail, std::move(d)}; }

std::string num(double v, int precision = 3) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::optional<fs::path> mot17_02() {
    if (const char* env = std::getenv("TUBEKIT_MOT17_02"); env != nullptr && *env != '\0') {
        return fs::path(env);
    }
    const fs::path local = fs::path(TUBEKIT_SOURCE_DIR) / "tests" / "data" / "MOT17-02" / "gt.txt";
    if (fs::exists(local)) return local;
    return std::nullopt;
}

struct CellResult {
    cli::RobustnessCell cell;
    double seconds = 0.0;
};

CellResult run_cell(const std::vector<Track>& gt, double cn, double sn, int seeds) {
    cli::RunConfig cfg;
    cfg.jobs = 1;
    const std::vector<double> cns{cn}, sns{sn};
    const auto t0 = std::chrono::steady_clock::now();
    const auto cells = cli::robustness_sweep(gt, cns, sns, seeds, cfg);
    return {cells.front(), seconds_since(t0)};
}

std::vector<Track> synthetic_corpus(std::uint64_t seed) {
    SynthSpec spec;
    spec.n_targets = 6;
    spec.n_frames = 300;
    spec.crossing_rate = 0.5;
    spec.turn_rate = 0.02;
    spec.occlusion = {0.3, 8, 0.2};
    spec.seed = seed;
    return synth_tracks(spec);
}

Outcome table_reproduction() {
    const auto path = mot17_02();
    if (!path) {
        return skip("MOT17-02 ground truth not found; set TUBEKIT_MOT17_02 or place it at "
                    "tests/data/MOT17-02/gt.txt");
    }
    const auto gt = read_mot_file(*path, MotFlavor::GroundTruth);
    const CellResult clean = run_cell(gt, 0.0, 0.0, 1);
    const CellResult noisy = run_cell(gt, 0.25, 0.25, 5);
    const auto& c = clean.cell;
    const auto& n = noisy.cell;
    const bool ok = c.mota >= 0.95 && c.idf1 >= 0.88 && c.ml <= 1.0 && n.mota >= 0.78 && n.mota <= 0.98 &&
                    n.idf1 >= 0.70 && clean.seconds < 60.0 && noisy.seconds < 60.0;
    return verdict(ok, "clean MOTA " + num(100 * c.mota) + " IDF1 " + num(100 * c.idf1) + " MT " + num(c.mt) +
                           " ML " + num(c.ml) + "; cn=sn=0.25 MOTA " + num(100 * n.mota) + " IDF1 " +
                           num(100 * n.idf1) + "; " + num(clean.seconds) + " s / " + num(noisy.seconds) + " s");
}

Outcome robustness_trend() {
    std::vector<std::pair<std::string, std::vector<Track>>> corpora;
    for (std::uint64_t s : {11u, 12u, 13u}) corpora.emplace_back("synthetic seed " + std::to_string(s), synthetic_corpus(s));
    if (const auto path = mot17_02()) corpora.emplace_back("MOT17-02", read_mot_file(*path, MotFlavor::GroundTruth));
    bool ok = true;
    std::string detail;
    for (const auto& [name, gt] : corpora) {
        const double clean = run_cell(gt, 0.0, 0.0, 5).cell.mota;
        const double noisy = run_cell(gt, 0.25, 0.25, 5).cell.mota;
        ok = ok && clean >= noisy;
        detail += (detail.empty() ? "" : "; ") + name + ": " + num(100 * clean) + " >= " + num(100 * noisy);
    }
    if (corpora.size() == 3) detail += " (MOT17-02 absent)";
    return verdict(ok, detail);
}

Outcome benchmark_tables() {
    return skip("detector benchmark MOTA/IDF1 need GPU training on a large synthetic video corpus; "
                "covered instead by criteria 4 to 9");
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-2); }

Outcome geometry_oracle() {
    std::mt19937 rng(4);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool bounds = true;
    for (int i = 0; i < 200; ++i) {
        const BTube a = fixtures::random_tube(rng), b = fixtures::random_tube(rng);
        const auto m = oracle::rasterize(a, b);
        const double iou = tube_iou(a, b), giou = tube_giou(a, b);
        worst = std::max({worst, rel_err(tube_volume(a), m.vol_a), rel_err(tube_volume(b), m.vol_b),
                          rel_err(iou, m.iou()), rel_err(giou, m.giou())});
        bounds = bounds && giou <= iou + 1e-12 && giou > -1.0 && giou <= 1.0;
    }
    const double secs = seconds_since(t0);
    return verdict(worst <= 1e-2 && bounds && secs < 30.0,
                   "200 pairs, worst relative error " + num(worst) + ", GIoU bounds " + (bounds ? "hold" : "violated") +
                       ", " + num(secs) + " s");
}

Track random_track(std::mt19937& rng, int id) {
    std::uniform_int_distribution<int> len(2, 30);
    Track t = fixtures::wandering_track(rng, id, len(rng));
    // Every third track loses a stretch of frames in the middle.
    if (id % 3 == 0 && t.boxes.size() >= 8) {
        const Frame cut = t.first_frame() + static_cast<Frame>(t.boxes.size()) / 2;
        t.boxes.erase(t.boxes.find(cut), t.boxes.find(cut + 2));
    }
    return t;
}

Outcome decomposition_oracle() {
    std::mt19937 rng(5);
    const DecomposeParams params{0.8, 16};
    int mismatched = 0, below_eta = 0, tubes = 0;
    for (int id = 1; id <= 50; ++id) {
        const Track track = random_track(rng, id);
        const auto got = decompose_track(track, params);
        const auto want = oracle::decompose(track, params.eta, params.max_extent);
        if (got != want) ++mismatched;
        for (const auto& tube : got) {
            ++tubes;
            if (mean_fit_iou(tube, track.boxes) < params.eta - 1e-12) ++below_eta;
        }
    }
    double recompose_err = 0.0;
    for (int id = 1; id <= 20; ++id) {
        std::uniform_real_distribution<double> v(-4, 4);
        const Track line = fixtures::linear_track(id, 1, 30, {100, 100, 140, 180}, v(rng), v(rng));
        const auto back = recompose(decompose_track(line, params));
        for (const auto& [f, b] : line.boxes) {
            const BBox& r = back.at(f);
            recompose_err = std::max({recompose_err, std::abs(r.x1 - b.x1), std::abs(r.y1 - b.y1),
                                      std::abs(r.x2 - b.x2), std::abs(r.y2 - b.y2)});
        }
    }
    return verdict(mismatched == 0 && below_eta == 0 && recompose_err <= 1e-9,
                   "50 tracks, " + std::to_string(tubes) + " tubes, " + std::to_string(mismatched) +
                       " differ from exhaustive search, " + std::to_string(below_eta) + " below eta; recompose error " +
                       num(recompose_err));
}

Outcome encoder_round_trip() {
    std::mt19937 rng(6);
    double worst = 0.0;
    long positives = 0, clamped = 0, frame_errors = 0;
    double c_lo = 1.0, c_hi = 0.0;
    for (int k = 0; k < 100; ++k) {
        const BTube tube = fixtures::random_image_tube(rng, 20, 8);
        const TargetMaps maps = encode_targets(std::vector<BTube>{tube}, {20, 8, 400, 400});
        for (const auto& level : maps.levels) {
            for (int t = 0; t < level.frames; ++t) {
                for (int y = 0; y < level.height; ++y) {
                    for (int x = 0; x < level.width; ++x) {
                        const auto idx = level.index(t, y, x);
                        c_lo = std::min(c_lo, level.centerness[idx]);
                        c_hi = std::max(c_hi, level.centerness[idx]);
                        if (level.confidence[idx] != 1.0) continue;
                        ++positives;
                        const auto d = decode_target(map_point(level.spec, 20, t, y, x), level.regression[idx]);
                        clamped += d.clamped;
                        frame_errors += d.tube.ts != tube.ts || d.tube.tm != tube.tm || d.tube.te != tube.te;
                        const BBox* pa[] = {&d.tube.bs, &d.tube.bm, &d.tube.be};
                        const BBox* pb[] = {&tube.bs, &tube.bm, &tube.be};
                        for (int i = 0; i < 3; ++i) {
                            worst = std::max({worst, std::abs(pa[i]->x1 - pb[i]->x1), std::abs(pa[i]->y1 - pb[i]->y1),
                                              std::abs(pa[i]->x2 - pb[i]->x2), std::abs(pa[i]->y2 - pb[i]->y2)});
                        }
                    }
                }
            }
        }
    }
    // Symmetric points: equal opposite distances and equal temporal extents.
    std::uniform_real_distribution<double> d(0.5, 100);
    std::uniform_int_distribution<int> len(0, 10);
    double sym_err = 0.0;
    for (int k = 0; k < 1000; ++k) {
        RegressionTarget r;
        r.lm = r.rm = d(rng);
        r.tm = r.bm = d(rng);
        r.ds = r.de = len(rng);
        sym_err = std::max(sym_err, std::abs(centerness(r) - 1.0));
    }
    const bool ok = positives > 0 && clamped == 0 && frame_errors == 0 && worst <= 1e-6 && sym_err <= 1e-12 &&
                    c_lo >= 0.0 && c_hi <= 1.0;
    return verdict(ok, std::to_string(positives) + " positive points, worst box error " + num(worst) +
                           ", center-ness at symmetric points off by " + num(sym_err) + ", range [" + num(c_lo) +
                           ", " + num(c_hi) + "]");
}

Outcome gradient_check() {
    std::mt19937 rng(7);
    const double h = 1e-4;
    int checked = 0;
    double worst = 0.0;
    for (int attempt = 0; attempt < 20000 && checked < 100; ++attempt) {
        const RegressionTarget gt = fixtures::random_gt(rng);
        const RegressionTarget pred = fixtures::random_pred(rng, gt);
        if (!fixtures::is_smooth(pred, gt, 0.05)) continue;
        ++checked;
        const TubeLoss l = tube_giou_loss(pred, gt);
        for (std::size_t k = 0; k < RegressionTarget::kSize; ++k) {
            auto up = pred.to_array(), down = pred.to_array();
            up[k] += h;
            down[k] -= h;
            const double fd = (tube_giou_loss(RegressionTarget::from_array(up), gt).loss -
                               tube_giou_loss(RegressionTarget::from_array(down), gt).loss) /
                              (2 * h);
            worst = std::max(worst, std::abs(fd - l.grad[k]) / std::max({std::abs(fd), std::abs(l.grad[k]), 1e-6}));
        }
    }
    return verdict(checked == 100 && worst <= 1e-3,
                   std::to_string(checked) + " points, max relative error " + num(worst));
}

Outcome linking_sanity() {
    std::string detail;
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthSpec spec;
        spec.n_targets = 6;
        spec.n_frames = 200;
        spec.turn_rate = 0.03;
        spec.seed = seed;
        const auto gt = synth_tracks(spec);
        const auto r = cli::run_linking_pipeline(gt, cli::decompose_all(gt, {}), {}, cli::RunConfig{});
        ok = ok && r.ids == 0 && r.mota == 1.0;
        detail += (detail.empty() ? "" : ", ") + num(100 * r.mota, 4) + "/" + std::to_string(r.ids);
    }
    const auto tubes = fixtures::symmetric_crossing();
    const auto tracks = greedy_link(tubes, LinkConfig{});
    const auto cx = [](const Track& t, Frame f) { return t.boxes.at(f).cx(); };
    const bool crossing = tracks.size() == 2 && cx(tracks[0], 1) < 50 && cx(tracks[0], 10) > 50 &&
                          cx(tracks[1], 1) > 50 && cx(tracks[1], 10) < 50;
    return verdict(ok && crossing, "MOTA/IDS on 5 non-crossing scenes: " + detail + "; symmetric crossing " +
                                       (crossing ? "keeps identities" : "swaps identities"));
}

Outcome metrics_oracle() {
    const auto [pred, gt] = fixtures::hand_counted_scenario();
    const MotReport r = evaluate(pred, gt);
    const bool hand = r.fp == 2 && r.fn == 5 && r.ids == 1 && std::abs(r.mota - 0.92) < 1e-12;

    std::mt19937 rng(9);
    int disagreements = 0;
    for (int k = 0; k < 200; ++k) {
        const auto g = fixtures::random_scene(rng, 1 + k % 5, 20);
        const auto p = fixtures::noisy_predictions(rng, g);
        const MotReport got = evaluate(p, g);
        const auto want = oracle::clear_mot(p, g, 0.5);
        disagreements += got.fp != want.fp || got.fn != want.fn || got.ids != want.ids || got.matches != want.matches;
    }

    std::uniform_real_distribution<double> u(0, 1);
    int assignment_errors = 0;
    for (int k = 0; k < 500; ++k) {
        const int rows = 1 + k % 5, cols = 1 + (k / 5) % 5;
        std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
        std::vector<std::vector<bool>> allowed(rows, std::vector<bool>(cols));
        for (auto& row : cost) for (auto& c : row) c = u(rng);
        for (auto&& row : allowed) for (auto&& a : row) a = u(rng) < 0.6;
        const auto got = min_cost_assignment(cost, allowed);
        const auto best = oracle::best_matching(cost, allowed);
        int pairs = 0;
        double total = 0;
        for (int i = 0; i < rows; ++i) {
            if (got[i] < 0) continue;
            ++pairs;
            total += cost[i][got[i]];
        }
        assignment_errors += pairs != best.pairs || std::abs(total - best.cost) > 1e-9;
    }
    return verdict(hand && disagreements == 0 && assignment_errors == 0,
                   "hand-counted MOTA " + num(r.mota, 6) + " (FP " + std::to_string(r.fp) + ", FN " +
                       std::to_string(r.fn) + ", IDS " + std::to_string(r.ids) + "); " +
                       std::to_string(disagreements) + "/200 CLEAR MOT and " + std::to_string(assignment_errors) +
                       "/500 assignment disagreements with exhaustive search");
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome cli_determinism() {
    const fs::path root = fs::temp_directory_path() / ("tubekit_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "synth --out gt.txt --targets 6 --frames 150 --crossing-rate 0.5 --turn-rate 0.03 "
                  "--occlusion-prob 0.5 --seed 21"},
        {"decompose", "decompose --gt gt.txt --out tubes.txt"},
        {"jitter", "jitter --in tubes.txt --out noisy.txt --cn 0.2 --sn 0.1 --seed 3"},
        {"nms", "nms --in noisy.txt --out kept.txt"},
        {"link", "link --in kept.txt --out pred.txt --video-len 150"},
        {"eval", "eval --pred pred.txt --gt gt.txt --visibility-bins 5 --out report.txt"},
        {"eval-kv", "eval --pred pred.txt --gt gt.txt --format kv"},
        {"encode", "encode --in tubes.txt --out maps.bin --clip-start 40 --clip-len 8 --image-h 256 --image-w 512"},
        {"robustness", "robustness --gt gt.txt --cn 0,0.25 --sn 0,0.25 --seeds 2 --seed 4 --jobs 4 --out grid.txt"},
    };
    std::vector<std::string> differing;
    int failures = 0;
    std::vector<std::vector<std::string>> snapshots(2);
    for (int round = 0; round < 2; ++round) {
        const fs::path dir = root / std::to_string(round);
        fs::create_directories(dir);
        for (const auto& [name, args] : commands) {
            const std::string cmd = "cd " + quoted(dir) + " && " + quoted(TUBEKIT_CLI_PATH) + " " + args + " > " +
                                    quoted(dir / (name + ".stdout")) + " 2>&1";
            if (std::system(cmd.c_str()) != 0) ++failures;
        }
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path().filename());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) snapshots[round].push_back(f.string() + "\n" + fixtures::slurp(dir / f));
    }
    const bool same_set = snapshots[0].size() == snapshots[1].size();
    if (same_set) {
        for (std::size_t i = 0; i < snapshots[0].size(); ++i) {
            if (snapshots[0][i] != snapshots[1][i]) differing.push_back(snapshots[0][i].substr(0, snapshots[0][i].find('\n')));
        }
    }
    fs::remove_all(root);
    std::string detail = std::to_string(commands.size()) + " commands, " + std::to_string(snapshots[0].size()) +
                         " outputs compared";
    if (failures) detail += ", " + std::to_string(failures) + " commands failed";
    for (const auto& d : differing) detail += ", differs: " + d;
    return verdict(failures == 0 && same_set && differing.empty(), detail);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"MOT17-02 robustness table", table_reproduction},
        {"robustness trend", robustness_trend},
        {"benchmark tables", benchmark_tables},
        {"geometry oracle", geometry_oracle},
        {"decomposition oracle", decomposition_oracle},
        {"encoder round trip", encoder_round_trip},
        {"gradient check", gradient_check},
        {"linking sanity", linking_sanity},
        {"metrics oracle", metrics_oracle},
        {"CLI determinism", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = fail(std::string("threw: ") + e.what());
        }
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
        failed += o.status == Status::Fail;
        std::cout << tag << "  " << (i + 1) << "  " << criteria[i].first << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
