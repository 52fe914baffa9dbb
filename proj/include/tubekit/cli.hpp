#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tubekit/data.hpp"
#include "tubekit/encoder.hpp"
#include "tubekit/metrics.hpp"
#include "tubekit/postproc.hpp"
#include "tubekit/tubegen.hpp"

namespace tubekit::cli {

/// Settings shared by every subcommand. Defaults are the published
/// hyper-parameters; a key=value config file overrides them and command-line
/// flags override the file.
struct RunConfig {
    LinkConfig link;
    DecomposeParams decompose;
    double iou_thresh = 0.5;
    std::vector<LevelSpec> levels = default_levels();
    std::uint64_t seed = 0;
    int jobs = 1;
};

/// Applies "key = value" lines ('#' starts a comment). Unknown keys and bad
/// values throw ParseError.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& source = "<config>");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// "stride:min:max,..." with "inf" allowed as max.
std::vector<LevelSpec> parse_levels(const std::string& text);
std::string format_levels(std::span<const LevelSpec> levels);
std::vector<double> parse_list(const std::string& text);

/// Decomposes every track (in parallel across tracks); rows keep track order.
std::vector<TubeRecord> decompose_all(std::span<const Track> gt, const DecomposeParams& params);

/// jitter -> Tube NMS -> greedy linking -> evaluation against `gt`.
MotReport run_linking_pipeline(std::span<const Track> gt, std::span<const TubeRecord> tubes,
                               const JitterSpec& jitter, const RunConfig& cfg);

struct RobustnessCell {
    double cn = 0.0;
    double sn = 0.0;
    double mota = 0.0;
    double idf1 = 0.0;
    double mt = 0.0;
    double ml = 0.0;
    double ids = 0.0;
};

/// Metrics averaged over `seeds` jitter draws (seeds base, base + 1, ...).
/// Cells run in parallel on up to cfg.jobs threads.
std::vector<RobustnessCell> robustness_sweep(std::span<const Track> gt, std::span<const double> cn_list,
                                             std::span<const double> sn_list, int seeds, const RunConfig& cfg);
std::string format_robustness_grid(std::span<const RobustnessCell> cells, std::span<const double> cn_list,
                                   std::span<const double> sn_list);

/// Entry point of the `tubekit` executable. Returns the process exit code:
/// 0 on success, 2 on usage or I/O errors, 1 on other failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tubekit::cli
