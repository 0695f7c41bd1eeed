#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace hte_bandit {
struct RoundRecord;
}

namespace hte_bandit::csv {

inline constexpr const char* kRunHeader =
    "t,epoch,safe,gamma,action,propensity,reward,expected_regret,cum_expected_regret";
inline constexpr const char* kCurveHeader = "t,mean_cum_regret,std_cum_regret";

/// Shortest round-trip representation; identical inputs give identical text.
inline std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (result.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, result.ptr);
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  const auto append_row = [&text](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text += ',';
      text += cells[i];
    }
    text += '\n';
  };
  append_row(header);
  for (const auto& row : rows) append_row(row);
  write_text(path, text);
}

template <class Records>
std::string render_run(const Records& history) {
  std::string text = kRunHeader;
  text += '\n';
  for (const auto& r : history) {
    text += std::to_string(r.t);
    text += ',';
    text += std::to_string(r.epoch);
    text += ',';
    text += r.safe ? '1' : '0';
    text += ',';
    text += format_double(r.gamma);
    text += ',';
    text += std::to_string(r.action + 1);
    text += ',';
    text += format_double(r.propensity);
    text += ',';
    text += format_double(r.reward);
    text += ',';
    text += format_double(r.expected_regret);
    text += ',';
    text += format_double(r.cum_expected_regret);
    text += '\n';
  }
  return text;
}

template <class Records>
void write_run(const std::filesystem::path& path, const Records& history) {
  write_text(path, render_run(history));
}

inline std::string render_curve(const std::vector<double>& mean, const std::vector<double>& stddev) {
  std::string text = kCurveHeader;
  text += '\n';
  for (std::size_t i = 0; i < mean.size(); ++i) {
    text += std::to_string(i + 1);
    text += ',';
    text += format_double(mean[i]);
    text += ',';
    text += format_double(stddev[i]);
    text += '\n';
  }
  return text;
}

inline void write_curve(const std::filesystem::path& path, const std::vector<double>& mean,
                        const std::vector<double>& stddev) {
  write_text(path, render_curve(mean, stddev));
}

}  // namespace hte_bandit::csv
