#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "teleop/reference.hpp"

namespace teleop {

/// Recorded operator stream, one JSON object per line:
///
///   {"t": 0.02, "p": [x, y, z], "q": [w, x, y, z]}
///
/// t in seconds (strictly increasing), p in meters (robot base frame),
/// q a unit quaternion (w first). Blank lines and lines starting with '#'
/// are skipped. Quaternions are normalized on read.
std::vector<TargetSample> parse_recording(std::istream& in, const std::string& source = "<stream>");
std::vector<TargetSample> load_recording(const std::filesystem::path& path);

void write_recording(std::ostream& out, const std::vector<TargetSample>& samples);
void save_recording(const std::filesystem::path& path, const std::vector<TargetSample>& samples);

/// t_last - t_first, 0 for fewer than two samples.
double recording_duration(const std::vector<TargetSample>& samples);

struct SweepSpec {
  double duration = 10.0;         // s
  double sample_rate = 50.0;      // Hz
  double amplitude = 0.3;         // m, along world y
  double frequency = 0.5;         // Hz
  double roll_start = 2.0;        // s
  double roll_length = 6.0;       // s
  double roll_peak = EIGEN_PI / 2;  // rad, about world x
};

/// Synthetic aggressive operator input around `start`: a sinusoidal sweep
///   p(t) = p0 + [0, A sin(2 pi f t), 0]
/// with a smooth roll excursion
///   phi(t) = (peak / 2) (1 - cos(2 pi (t - t_s) / T_r))   for t in [t_s, t_s + T_r]
///   R(t) = Rx(phi) R0.
std::vector<TargetSample> make_sweep_recording(const Pose& start, const SweepSpec& spec = {});

}  // namespace teleop
