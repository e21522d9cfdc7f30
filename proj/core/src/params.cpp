#include "teleop/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "teleop/robot_config.hpp"

namespace teleop {

using nlohmann::json;

namespace {

template <int N>
Eigen::Matrix<double, N, 1> read_vector(const json& j, const char* key) {
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(N)) {
    throw ConfigError(std::string("'") + key + "' must be an array of " + std::to_string(N) +
                      " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = arr.at(i).get<double>();
  return v;
}

template <typename Vec>
json write_vector(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

void ParameterSet::validate() const {
  weights.validate();
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!gravity.allFinite()) throw ConfigError("gravity must be finite");
  if (velocity_window < 2) throw ConfigError("velocity_window must be >= 2");
  if (solver.max_iterations < 0) throw ConfigError("solver.max_iterations must be >= 0");
  if (!(solver.stationarity_tol > 0.0) || !(solver.constraint_tol > 0.0)) {
    throw ConfigError("solver tolerances must be positive");
  }
}

ParameterSet builtin_p1() {
  ParameterSet p;
  p.name = "P1";
  p.weights.w3 = 0.0;
  return p;
}

ParameterSet builtin_p2() {
  ParameterSet p;
  p.name = "P2";
  p.weights.w3 = 10.0;
  return p;
}

ParameterSet parse_parameter_set(std::string_view json_text, const std::string& source) {
  ParameterSet p;
  try {
    const json j = json::parse(json_text);
    p.name = j.value("name", std::string("custom"));
    const json& w = j.at("weights");
    p.weights.w1p = read_vector<3>(w, "w1p");
    p.weights.w1o = w.at("w1o").get<double>();
    p.weights.w2a = read_vector<kJointCount>(w, "w2a");
    p.weights.w2b = read_vector<kJointCount>(w, "w2b");
    p.weights.w3 = w.at("w3").get<double>();
    p.horizon = j.value("horizon", p.horizon);
    p.dt = j.value("dt", p.dt);
    if (j.contains("gravity")) p.gravity = read_vector<3>(j, "gravity");
    p.velocity_window = j.value("velocity_window", p.velocity_window);
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      p.solver.max_iterations = s.value("max_iterations", p.solver.max_iterations);
      p.solver.stationarity_tol = s.value("stationarity_tol", p.solver.stationarity_tol);
      p.solver.constraint_tol = s.value("constraint_tol", p.solver.constraint_tol);
      p.solver.activation_distance = s.value("activation_distance", p.solver.activation_distance);
      p.solver.line_search_steps = s.value("line_search_steps", p.solver.line_search_steps);
      p.solver.armijo = s.value("armijo", p.solver.armijo);
    }
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return p;
}

ParameterSet load_parameter_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open parameter file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_parameter_set(buf.str(), path.string());
}

ParameterSet resolve_parameter_set(const std::string& name_or_path) {
  if (name_or_path == "P1" || name_or_path == "P2") {
    const auto path = config_root() / "params" / (name_or_path + ".json");
    if (std::filesystem::exists(path)) return load_parameter_set(path);
    return name_or_path == "P1" ? builtin_p1() : builtin_p2();
  }
  return load_parameter_set(name_or_path);
}

std::string to_json(const ParameterSet& p) {
  json j;
  j["name"] = p.name;
  j["weights"] = {{"w1p", write_vector(p.weights.w1p)},
                  {"w1o", p.weights.w1o},
                  {"w2a", write_vector(p.weights.w2a)},
                  {"w2b", write_vector(p.weights.w2b)},
                  {"w3", p.weights.w3}};
  j["horizon"] = p.horizon;
  j["dt"] = p.dt;
  j["gravity"] = write_vector(p.gravity);
  j["velocity_window"] = p.velocity_window;
  j["solver"] = {{"max_iterations", p.solver.max_iterations},
                 {"stationarity_tol", p.solver.stationarity_tol},
                 {"constraint_tol", p.solver.constraint_tol},
                 {"activation_distance", p.solver.activation_distance},
                 {"line_search_steps", p.solver.line_search_steps},
                 {"armijo", p.solver.armijo}};
  return j.dump(2);
}

}  // namespace teleop
