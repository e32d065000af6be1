#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "swlab/experiments.hpp"

namespace swlab::cli {

using nlohmann::json;

#ifndef SWLAB_VERSION
#define SWLAB_VERSION "unknown"
#endif

inline const char* version() { return SWLAB_VERSION; }

// Options that only name outputs or tune threads; runs that differ in these
// produce the same artifacts, so they stay out of the embedded config.
inline bool artifact_option(const std::string& name) {
  return name == "out" || name == "csv" || name == "config" || name == "workers" || name == "help";
}

/// Applies a JSON object of option values to a parsed subcommand. Keys are
/// long option names; options given on the command line win.
inline void apply_config(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config", e.what());
  }
  if (!j.is_object()) throw ParseError("config", "top level must be an object");
  auto text = [](const json& v, const std::string& key) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw ParseError(key, "expected a string, number or boolean");
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "config" || key == "help") throw ParseError(key, "not allowed in a config file");
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt) throw ParseError(key, "unknown config field for '" + sub.get_name() + "'");
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(text(v, key));
    } else {
      opt->add_result(text(value, key));
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ParseError(key, e.what());
    }
  }
}

/// Effective option values of a subcommand, as strings, sorted by name.
inline json effective_config(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    if (name.empty() || artifact_option(name)) continue;
    if (opt->get_type_size() == 0) {
      cfg[name] = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1) cfg[name] = r;
      else cfg[name] = r.back();
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Wraps a result body with command, version and config, then stamps the
/// determinism hash (computed without the timestamp) and the timestamp.
inline json envelope(const std::string& command, const json& config, json body) {
  json r = json::object();
  r["command"] = command;
  r["version"] = version();
  r["config"] = config;
  r["result"] = std::move(body);
  r["determinism_hash"] = fnv1a_hex(r.dump());
  r["timestamp"] = utc_timestamp();
  return r;
}

inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ParseError("out", "cannot open " + path + " for writing");
  out << text;
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// NaN and infinities become null in JSON; keep them readable instead.
inline json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline json constants(const std::map<std::string, double>& m) {
  json o = json::object();
  for (const auto& [k, v] : m) o[k] = number(v);
  return o;
}

inline json to_json(const std::vector<TracePoint>& trace) {
  json a = json::array();
  for (const auto& t : trace) a.push_back({t.n, number(std::exp(t.log_value))});
  return a;
}

inline json to_json(const ClassConstantEstimate& e) {
  return {{"class", e.tag},
          {"params", constants(e.params)},
          {"value", number(e.value())},
          {"log_value", number(e.log_value)},
          {"trace", to_json(e.trace)},
          {"verdict", to_string(e.verdict)},
          {"evaluated", e.evaluated},
          {"skipped", e.skipped},
          {"best_ball", numbers(e.best_ball)},
          {"warnings", e.warnings}};
}

inline json to_json(const SuiteCheck& c) {
  return {{"property", c.name},     {"statement", c.statement}, {"asserted", c.asserted}, {"verdict", c.pass ? "PASS" : "FAIL"},
          {"samples", c.samples},   {"constants", constants(c.constants)},            {"notes", c.notes}};
}

inline json to_json(const SuiteReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"suite", r.suite}, {"verdict", r.pass() ? "PASS" : "FAIL"}, {"checks", checks}};
}

inline std::string csv_number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// suite,property,asserted,verdict,samples,constant,value
inline std::string suites_csv(const std::vector<SuiteReport>& reports) {
  std::string out = "suite,property,asserted,verdict,samples,constant,value\n";
  for (const auto& r : reports)
    for (const auto& c : r.checks) {
      const std::string head =
          r.suite + "," + c.name + "," + (c.asserted ? "1" : "0") + "," + (c.pass ? "PASS" : "FAIL") + "," + std::to_string(c.samples) + ",";
      if (c.constants.empty()) out += head + ",\n";
      for (const auto& [k, v] : c.constants) out += head + k + "," + csv_number(v) + "\n";
    }
  return out;
}

inline std::string trace_csv(const ClassConstantEstimate& e) {
  std::string out = "n,value,log_value\n";
  for (const auto& t : e.trace) out += std::to_string(t.n) + "," + csv_number(std::exp(t.log_value)) + "," + csv_number(t.log_value) + "\n";
  return out;
}

}  // namespace swlab::cli
