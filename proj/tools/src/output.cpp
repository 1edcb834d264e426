#include "corrlab_cli/output.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <sstream>

#include "corrlab/errors.hpp"
#include "corrlab/version.hpp"

namespace corrlab::cli {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void ensure_new_file(const fs::path& path) {
  if (fs::exists(path)) throw GuardError("refusing to overwrite existing output " + path.string());
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : columns_(header.size()) {
  ensure_new_file(path);
  out_.open(path, std::ios::binary);
  if (!out_) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_) throw Error("CSV row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text;
  out_ << '\n';
}

std::string join_point(const std::vector<int>& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(p[i]);
  }
  return s;
}

RunContext::RunContext(ExperimentConfig cfg, std::string subcommand, int threads)
    : cfg_(std::move(cfg)),
      subcommand_(std::move(subcommand)),
      threads_(threads),
      hash_(config_hash(cfg_)),
      started_wall_(std::chrono::system_clock::now()),
      started_(std::chrono::steady_clock::now()) {
  dir_ = fs::path(cfg_.output_dir) / hash_ / subcommand_;
}

const fs::path& RunContext::dir() {
  if (!created_) {
    if (fs::exists(dir_) && !fs::is_empty(dir_)) {
      throw GuardError("output directory " + dir_.string() + " already holds a run (outputs are write-once)");
    }
    fs::create_directories(dir_);
    created_ = true;
  }
  return dir_;
}

fs::path RunContext::file(const std::string& name) {
  const fs::path p = dir() / name;
  fs::create_directories(p.parent_path());
  record(p);
  return p;
}

void RunContext::record(const fs::path& path) {
  outputs_.push_back(fs::relative(path, dir_).generic_string());
}

void RunContext::write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  ensure_new_file(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

void RunContext::write_manifest(int exit_status) {
  const auto finished_wall = std::chrono::system_clock::now();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  nlohmann::ordered_json versions = nlohmann::ordered_json::object();
  for (const auto& [name, v] : component_versions()) versions[name] = v;
  nlohmann::ordered_json m;
  m["subcommand"] = subcommand_;
  m["config_hash"] = hash_;
  m["master_seed"] = cfg_.master_seed;
  m["threads"] = threads_;
  m["exit_status"] = exit_status;
  m["versions"] = versions;
  m["started_at"] = iso_time(started_wall_);
  m["finished_at"] = iso_time(finished_wall);
  m["wall_time_seconds"] = wall;
  m["config"] = to_json(cfg_);
  m["outputs"] = outputs_;
  m["summary"] = summary_;
  const fs::path path = dir() / "manifest.json";
  ensure_new_file(path);
  std::ofstream out(path, std::ios::binary);
  out << m.dump(2) << '\n';
}

}  // namespace corrlab::cli
