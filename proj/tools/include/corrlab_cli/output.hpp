#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "corrlab_cli/config.hpp"
#include "json.hpp"

namespace corrlab::cli {

/// Shortest round-trip decimal form (std::to_chars), "nan"/"inf" for non-finite values.
std::string format_number(double v);

struct Cell {
  std::string text;
  Cell(double v) : text(format_number(v)) {}
  Cell(int v) : text(std::to_string(v)) {}
  Cell(long v) : text(std::to_string(v)) {}
  Cell(unsigned v) : text(std::to_string(v)) {}
  Cell(unsigned long v) : text(std::to_string(v)) {}
  Cell(unsigned long long v) : text(std::to_string(v)) {}
  Cell(bool v) : text(v ? "true" : "false") {}
  Cell(std::string s) : text(std::move(s)) {}
  Cell(const char* s) : text(s) {}
};

/// Comma-separated, header row first, LF line endings. Refuses to overwrite.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<Cell>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

/// Joins integer coordinates as "x1 x2 x3" (a single CSV cell).
std::string join_point(const std::vector<int>& p);

/// Output directory and bookkeeping of one subcommand run.
class RunContext {
 public:
  RunContext(ExperimentConfig cfg, std::string subcommand, int threads);

  const ExperimentConfig& config() const noexcept { return cfg_; }
  const std::string& hash() const noexcept { return hash_; }
  const std::string& subcommand() const noexcept { return subcommand_; }
  int threads() const noexcept { return threads_; }
  /// output_dir / <hash> / <subcommand>; created on first use, must not exist before.
  const std::filesystem::path& dir();
  /// Path of an artifact relative to dir() (may name a subdirectory); recorded in the manifest.
  std::filesystem::path file(const std::string& name);
  void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
  nlohmann::ordered_json& summary() noexcept { return summary_; }

  /// Writes manifest.json (the only artifact carrying timestamps).
  void write_manifest(int exit_status);

 private:
  void record(const std::filesystem::path& path);

  ExperimentConfig cfg_;
  std::string subcommand_;
  int threads_;
  std::string hash_;
  std::filesystem::path dir_;
  bool created_ = false;
  std::vector<std::string> outputs_;
  nlohmann::ordered_json summary_ = nlohmann::ordered_json::object();
  std::chrono::system_clock::time_point started_wall_;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace corrlab::cli
