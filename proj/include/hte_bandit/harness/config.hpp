#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hte_bandit/harness/experiment.hpp"

namespace hte_bandit::config {

// Flat key-value format:
//
//   # comment
//   [environment]
//   scenario = lin_const
//   d = 20
//   [run]
//   seeds = 1..10
//
// Keys are addressed as section.key (environment.scenario) on the command line.

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::uint64_t to_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
  return out;
}

inline double to_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(std::string(value), &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(value) + "'");
  }
}

inline std::vector<std::uint64_t> to_seeds(std::string_view key, std::string_view value) {
  std::vector<std::uint64_t> seeds;
  for (auto part : split(value, ',')) {
    if (part.empty()) continue;
    const auto range = part.find("..");
    if (range == std::string_view::npos) {
      seeds.push_back(to_u64(key, part));
      continue;
    }
    const auto lo = to_u64(key, trim(part.substr(0, range)));
    const auto hi = to_u64(key, trim(part.substr(range + 2)));
    if (hi < lo) throw ConfigError(std::string(key) + ": empty seed range");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  return seeds;
}

inline EpochSchedule to_schedule(std::string_view key, std::string_view value) {
  try {
    if (value == "doubling") return EpochSchedule::doubling();
    if (value.starts_with("fixed:")) return EpochSchedule::fixed_length(to_u64(key, trim(value.substr(6))));
    if (value.starts_with("list:")) {
      std::vector<std::uint64_t> bounds;
      for (auto part : split(value.substr(5), ',')) bounds.push_back(to_u64(key, part));
      return EpochSchedule::explicit_list(std::move(bounds));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
  throw ConfigError(std::string(key) + ": expected doubling, fixed:<length> or list:<t1,t2,...>");
}

}  // namespace detail

/// Applies one `section.key = value` assignment.
inline void apply(RunConfig& config, std::string_view key, std::string_view value) {
  using namespace detail;
  auto range = config.reward_range.value_or(RewardRange{});
  try {
    if (key == "environment.scenario") config.environment.scenario = parse_scenario(value);
    else if (key == "environment.d") config.environment.d = to_u64(key, value);
    else if (key == "environment.K") config.environment.K = to_u64(key, value);
    else if (key == "environment.sigma") config.environment.sigma = to_double(key, value);
    else if (key == "environment.horizon") config.environment.horizon = to_u64(key, value);
    else if (key == "environment.amplitude") config.environment.amplitude = to_double(key, value);
    else if (key == "environment.period") config.environment.period = to_double(key, value);
    else if (key == "policy.algorithm") config.algorithm = parse_algorithm(value);
    else if (key == "policy.delta") config.delta = to_double(key, value);
    else if (key == "policy.schedule") config.schedule = to_schedule(key, value);
    else if (key == "policy.n_min") config.n_min = to_u64(key, value);
    else if (key == "policy.reward_lo") { range.lo = to_double(key, value); config.reward_range = range; }
    else if (key == "policy.reward_hi") { range.hi = to_double(key, value); config.reward_range = range; }
    else if (key == "oracle.ridge_scale") config.oracle.ridge_scale = to_double(key, value);
    else if (key == "oracle.num_folds") config.oracle.num_folds = to_u64(key, value);
    else if (key == "oracle.c_xi") config.oracle.c_xi = to_double(key, value);
    else if (key == "oracle.c_lambda") config.oracle.c_lambda = to_double(key, value);
    else if (key == "run.seeds") config.seeds = to_seeds(key, value);
    else if (key == "run.output") config.output_dir = std::string(value);
    else throw ConfigError("unknown key '" + std::string(key) + "'");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

/// Parses `key=value` where key is section.key.
inline void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' lacks '='");
  apply(config, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

inline RunConfig parse(std::string_view text, RunConfig config = {}) {
  std::string section;
  std::size_t line_no = 0;
  for (auto raw : detail::split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = detail::trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    try {
      apply(config, full, detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

inline RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

}  // namespace hte_bandit::config
