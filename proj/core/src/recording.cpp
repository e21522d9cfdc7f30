#include "teleop/recording.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace teleop {

namespace {

using nlohmann::json;

Vec3 read_vec3(const json& j, const char* key, const std::string& source, int line) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
    throw ParseError(source, line, std::string("field '") + key + "' must be an array of 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[key][i].is_number()) {
      throw ParseError(source, line, std::string("field '") + key + "' must hold numbers");
    }
    v[i] = j[key][i].get<double>();
  }
  return v;
}

}  // namespace

std::vector<TargetSample> parse_recording(std::istream& in, const std::string& source) {
  std::vector<TargetSample> out;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(source, line, "expected a JSON object");
    if (!j.contains("t") || !j["t"].is_number()) {
      throw ParseError(source, line, "field 't' must be a number");
    }
    TargetSample s;
    s.t = j["t"].get<double>();
    s.pose.p = read_vec3(j, "p", source, line);
    if (!j.contains("q") || !j["q"].is_array() || j["q"].size() != 4) {
      throw ParseError(source, line, "field 'q' must be an array [w, x, y, z]");
    }
    double qv[4];
    for (int i = 0; i < 4; ++i) {
      if (!j["q"][i].is_number()) throw ParseError(source, line, "field 'q' must hold numbers");
      qv[i] = j["q"][i].get<double>();
    }
    Eigen::Quaterniond q(qv[0], qv[1], qv[2], qv[3]);
    if (!std::isfinite(s.t) || !s.pose.p.allFinite() || !q.coeffs().allFinite() ||
        q.norm() < 1e-9) {
      throw ParseError(source, line, "non-finite value or zero quaternion");
    }
    s.pose.R = q.normalized().toRotationMatrix();
    if (!out.empty() && !(s.t > out.back().t)) {
      throw ParseError(source, line, "timestamps must be strictly increasing");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<TargetSample> load_recording(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open recording: " + path.string());
  return parse_recording(in, path.string());
}

void write_recording(std::ostream& out, const std::vector<TargetSample>& samples) {
  for (const auto& s : samples) {
    Eigen::Quaterniond q(s.pose.R);
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    json j;
    j["t"] = s.t;
    j["p"] = {s.pose.p.x(), s.pose.p.y(), s.pose.p.z()};
    j["q"] = {q.w(), q.x(), q.y(), q.z()};
    out << j.dump() << '\n';
  }
}

void save_recording(const std::filesystem::path& path, const std::vector<TargetSample>& samples) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write recording: " + path.string());
  write_recording(out, samples);
}

double recording_duration(const std::vector<TargetSample>& samples) {
  if (samples.size() < 2) return 0.0;
  return samples.back().t - samples.front().t;
}

std::vector<TargetSample> make_sweep_recording(const Pose& start, const SweepSpec& spec) {
  if (!(spec.duration >= 0.0) || !(spec.sample_rate > 0.0)) {
    throw ParameterError("sweep: duration must be >= 0 and sample rate > 0");
  }
  const long count = std::lround(spec.duration * spec.sample_rate);
  std::vector<TargetSample> out;
  out.reserve(count + 1);
  for (long i = 0; i <= count; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    TargetSample s;
    s.t = t;
    s.pose.p = start.p + Vec3(0.0, spec.amplitude * std::sin(2.0 * EIGEN_PI * spec.frequency * t), 0.0);
    double phi = 0.0;
    if (t >= spec.roll_start && t <= spec.roll_start + spec.roll_length) {
      phi = 0.5 * spec.roll_peak *
            (1.0 - std::cos(2.0 * EIGEN_PI * (t - spec.roll_start) / spec.roll_length));
    }
    s.pose.R = Eigen::AngleAxisd(phi, Vec3::UnitX()).toRotationMatrix() * start.R;
    out.push_back(s);
  }
  return out;
}

}  // namespace teleop
