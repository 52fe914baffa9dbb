#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubekit/geometry.hpp"
#include "tubekit/tubegen.hpp"

namespace tubekit {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, long line, const std::string& what);
    long line() const { return line_; }

private:
    long line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MotFlavor {
    Auto,         // 9 columns -> ground truth, otherwise results
    GroundTruth,  // frame,id,x,y,w,h,flag,class,visibility
    Results,      // frame,id,x,y,w,h,conf,-1,-1,-1
};

/// Reads MOTChallenge CSV. Ground-truth rows with flag 0 or a class other
/// than pedestrian (1) are dropped. Tracks come back sorted by id.
std::vector<Track> read_mot(std::istream& in, MotFlavor flavor = MotFlavor::Auto,
                            const std::string& source = "<stream>");
std::vector<Track> read_mot_file(const std::filesystem::path& path, MotFlavor flavor = MotFlavor::Auto);

/// Results flavor, conf 1, sorted by frame then id.
void write_mot(std::ostream& out, std::span<const Track> tracks);
/// Ground-truth flavor, flag 1, class 1, visibility (1 when absent).
void write_mot_gt(std::ostream& out, std::span<const Track> tracks);

/// One row of a tube file.
struct TubeRecord {
    TrackId track_id = 0;
    BTube tube;
    std::optional<double> score;
};

inline constexpr const char* kTubeFileHeader = "#tubekit-tubes v1";

std::vector<TubeRecord> read_tubes(std::istream& in, const std::string& source = "<stream>");
std::vector<TubeRecord> read_tubes_file(const std::filesystem::path& path);
void write_tubes(std::ostream& out, std::span<const TubeRecord> tubes);

/// Writes through a temporary file renamed into place on success.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

struct JitterSpec {
    double cn = 0.0;  // center shift, fraction of the box size
    double sn = 0.0;  // scale change, fraction of the box size
    std::uint64_t seed = 0;
};

/// Perturbs each of B_s, B_m, B_e independently: the center moves by
/// (u_x cn w, u_y cn h) and the size scales by (1 + v_x sn, 1 + v_y sn),
/// u, v uniform on [-1, 1]. Jittered sizes are kept >= 1 px. Frames untouched.
std::vector<BTube> jitter_tubes(std::span<const BTube> tubes, const JitterSpec& spec);

/// Uniform draws from std::mt19937_64 with a fixed bits-to-double mapping,
/// so sequences match across standard libraries.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed);
    double symmetric();            // [-1, 1]
    double unit();                 // [0, 1)
    double range(double lo, double hi);
    int integer(int lo, int hi);   // inclusive

private:
    std::mt19937_64 engine_;
};

struct OcclusionSpec {
    double probability = 0.0;  // per track
    int length = 5;            // frames
    double visibility = 0.2;   // inside the window
};

struct SynthSpec {
    int n_targets = 6;
    int n_frames = 200;
    double arena_w = 1920.0;
    double arena_h = 1080.0;
    double crossing_rate = 0.0;  // fraction of targets paired into crossings
    double turn_rate = 0.0;      // per-frame probability of a direction change
    OcclusionSpec occlusion;
    std::uint64_t seed = 0;
};

/// Piecewise-linear, constant-size tracks. Non-crossing targets keep to
/// their own horizontal lane; crossing pairs share a lane and pass each
/// other once moving in opposite directions. Throws std::invalid_argument
/// when the lanes do not fit in the arena.
std::vector<Track> synth_tracks(const SynthSpec& spec);

}  // namespace tubekit
