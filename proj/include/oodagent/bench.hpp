#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/executor.hpp"
#include "oodagent/memory.hpp"
#include "oodagent/pipeline.hpp"
#include "oodagent/simworld.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oodagent::bench {

inline constexpr int kReportVersion = 1;

struct TaskRow {
  std::string id;
  int novel_terms = 0;
  int episodes = 0;
  int successes = 0;
  double sr = 0.0;  // percent
  std::map<std::string, double> timings;  // mean seconds per episode
  friend bool operator==(const TaskRow&, const TaskRow&) = default;
};

struct Report {
  std::string suite;
  std::uint64_t seed = 0;
  int episodes = 0;
  std::string ablation = "full";
  std::vector<TaskRow> rows;  // sorted by task id
  double average = 0.0;
  std::map<std::string, double> timings;
  friend bool operator==(const Report&, const Report&) = default;
};

nlohmann::json to_json(const Report& r);
// Throws load_failure on schema problems or an average that does not match
// the rows.
Report report_from_json(const nlohmann::json& j);
Report load_report(const std::filesystem::path& path);
void save_report(const Report& r, const std::filesystem::path& path);
std::string render_table(const Report& r);

struct EpisodeRecord {
  std::string task;
  int episode = 0;
  bool success = false;
  bool goal_met = false;
  int steps = 0;
  sim::Scene initial;
  std::vector<language::ReplaceDecision> decisions;
  std::vector<std::string> masked_terms;
  std::array<int, kCapabilityCount> calls{};
  std::vector<executor::Event> events;
  language::FinalTaskList final_list;
};

struct BenchOptions {
  int episodes = 50;
  std::uint64_t seed = 0;
  pipeline::AblationConfig ablation;
  int jobs = 1;
  executor::ExecConfig exec;
  bool wall_clock = false;
  // One line-delimited trace per episode when set.
  std::optional<std::filesystem::path> trace_dir;
};

struct BenchRun {
  Report report;
  std::vector<EpisodeRecord> episodes;  // task order, then episode order
};

// Every episode starts from `memory` with its out-of-distribution entries
// dropped, so episodes are independent and can run in parallel.
BenchRun run_bench(const sim::Suite& suite, const BenchOptions& options, const BackendSuite& backends,
                   const MemoryStore& memory);

struct DeltaRow {
  std::string id;
  double a = 0.0, b = 0.0, delta = 0.0;
};

struct Comparison {
  std::string suite;
  std::string a_label, b_label;
  std::vector<DeltaRow> rows;
  double a_average = 0.0, b_average = 0.0, delta = 0.0;
};

// Deltas are B - A. Different suites or task sets: invalid_comparison.
Comparison compare(const Report& a, const Report& b);
std::string render_comparison(const Comparison& c);

}  // namespace oodagent::bench
