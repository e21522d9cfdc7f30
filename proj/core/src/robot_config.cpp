#include "teleop/robot_config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace teleop {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double to_double(const std::string& tok, const std::string& source, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, "expected a number, got '" + tok + "'");
  }
}

int to_int(const std::string& tok, const std::string& source, int line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, "expected an integer, got '" + tok + "'");
  }
}

void expect_arity(const std::vector<std::string>& t, std::size_t n, const std::string& source,
                  int line) {
  if (t.size() != n) {
    throw ParseError(source, line,
                     "'" + t[0] + "' record takes " + std::to_string(n - 1) + " fields, got " +
                         std::to_string(t.size() - 1));
  }
}

}  // namespace

void RobotConfig::validate() const {
  dh.validate();
  limits.validate();
  std::map<int, int> seen;
  for (const auto& s : spheres) {
    s.validate();
    if (++seen[s.id] > 1) throw ConfigError("duplicate sphere id " + std::to_string(s.id));
  }
  if (!(reach > 0.0)) throw ConfigError("reach must be positive");
  if (!home.allFinite()) throw ConfigError("home configuration is not finite");
}

RobotConfig parse_robot_config(std::string_view text, const std::string& source) {
  RobotConfig cfg;
  std::istringstream in{std::string(text)};
  int dh_rows = 0;
  bool have_reach = false;
  int lineno = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto t = tokenize(raw);
    if (t.empty()) continue;
    const std::string& kind = t[0];
    if (kind == "dh") {
      expect_arity(t, 5, source, lineno);
      if (dh_rows >= kJointCount) throw ParseError(source, lineno, "more than 6 dh records");
      cfg.dh.rows[dh_rows++] = {to_double(t[1], source, lineno), to_double(t[2], source, lineno),
                                to_double(t[3], source, lineno), to_double(t[4], source, lineno)};
    } else if (kind == "sphere") {
      expect_arity(t, 7, source, lineno);
      SphereSpec s;
      s.id = to_int(t[1], source, lineno);
      s.link = to_int(t[2], source, lineno);
      s.local_center = {to_double(t[3], source, lineno), to_double(t[4], source, lineno),
                        to_double(t[5], source, lineno)};
      s.radius = to_double(t[6], source, lineno);
      try {
        s.validate();
      } catch (const ConfigError& e) {
        throw ParseError(source, lineno, e.what());
      }
      cfg.spheres.push_back(s);
    } else if (kind == "limit") {
      expect_arity(t, 5, source, lineno);
      JointVector* lo = nullptr;
      JointVector* hi = nullptr;
      if (t[1] == "q") {
        lo = &cfg.limits.q_min, hi = &cfg.limits.q_max;
      } else if (t[1] == "qd") {
        lo = &cfg.limits.qd_min, hi = &cfg.limits.qd_max;
      } else if (t[1] == "u") {
        lo = &cfg.limits.u_min, hi = &cfg.limits.u_max;
      } else {
        throw ParseError(source, lineno, "limit kind must be q, qd or u");
      }
      const double vmin = to_double(t[3], source, lineno);
      const double vmax = to_double(t[4], source, lineno);
      if (t[2] == "all") {
        lo->setConstant(vmin);
        hi->setConstant(vmax);
      } else {
        const int j = to_int(t[2], source, lineno);
        if (j < 0 || j >= kJointCount) throw ParseError(source, lineno, "joint index out of range");
        (*lo)[j] = vmin;
        (*hi)[j] = vmax;
      }
    } else if (kind == "home") {
      expect_arity(t, 1 + kJointCount, source, lineno);
      for (int j = 0; j < kJointCount; ++j) cfg.home[j] = to_double(t[1 + j], source, lineno);
    } else if (kind == "reach") {
      expect_arity(t, 2, source, lineno);
      cfg.reach = to_double(t[1], source, lineno);
      have_reach = true;
    } else {
      throw ParseError(source, lineno, "unknown record '" + kind + "'");
    }
  }
  if (dh_rows != kJointCount) {
    throw ConfigError(source + ": expected 6 dh records, found " + std::to_string(dh_rows));
  }
  if (!have_reach) cfg.reach = default_reach(cfg.dh);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RobotConfig load_robot_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open robot config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_robot_config(buf.str(), path.string());
}

std::filesystem::path config_root() {
  if (const char* env = std::getenv("TELEOP_CONFIG_ROOT"); env != nullptr && *env != '\0') {
    return env;
  }
#ifdef TELEOP_DEFAULT_CONFIG_ROOT
  return TELEOP_DEFAULT_CONFIG_ROOT;
#else
  return "config";
#endif
}

RobotConfig default_robot_config() { return load_robot_config(config_root() / "ur5e.robot"); }

}  // namespace teleop
