#include "oodagent/bench.hpp"

#include "oodagent/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace oodagent::bench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string signed_fixed(double v, int digits) {
  if (std::fabs(v) < 0.5 * std::pow(10.0, -digits)) v = 0.0;
  return (v >= 0 ? "+" : "") + fixed(v, digits);
}

double mean_sr(const std::vector<TaskRow>& rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : rows) sum += r.sr;
  return sum / static_cast<double>(rows.size());
}

std::map<std::string, double> zero_timings() {
  std::map<std::string, double> t;
  for (auto k : kTimingKeys) t[std::string(k)] = 0.0;
  return t;
}

}  // namespace

json to_json(const Report& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"id", row.id},
                    {"novel_terms", row.novel_terms},
                    {"episodes", row.episodes},
                    {"successes", row.successes},
                    {"sr", row.sr},
                    {"timings", row.timings}});
  return {{"version", kReportVersion}, {"suite", r.suite},     {"seed", r.seed},         {"episodes", r.episodes},
          {"ablation", r.ablation},     {"rows", std::move(rows)}, {"average", r.average}, {"timings", r.timings}};
}

Report report_from_json(const json& j) {
  Report r;
  try {
    if (j.at("version").get<int>() != kReportVersion) throw Error(ErrorCode::load_failure, "unsupported report version");
    r.suite = j.at("suite").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.episodes = j.at("episodes").get<int>();
    r.ablation = j.at("ablation").get<std::string>();
    r.average = j.at("average").get<double>();
    r.timings = j.at("timings").get<std::map<std::string, double>>();
    for (const auto& row : j.at("rows")) {
      TaskRow t;
      t.id = row.at("id").get<std::string>();
      t.novel_terms = row.at("novel_terms").get<int>();
      t.episodes = row.at("episodes").get<int>();
      t.successes = row.at("successes").get<int>();
      t.sr = row.at("sr").get<double>();
      t.timings = row.at("timings").get<std::map<std::string, double>>();
      if (t.sr < 0.0 || t.sr > 100.0) throw Error(ErrorCode::load_failure, "row " + t.id + ": SR out of range");
      if (t.episodes > 0 && std::fabs(t.sr - 100.0 * t.successes / t.episodes) > 1e-9)
        throw Error(ErrorCode::load_failure, "row " + t.id + ": SR does not match successes/episodes");
      r.rows.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::load_failure, std::string("malformed report: ") + e.what());
  }
  if (std::fabs(mean_sr(r.rows) - r.average) > 1e-9)
    throw Error(ErrorCode::load_failure, "report average does not match its rows");
  return r;
}

Report load_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::load_failure, "cannot read " + path.string());
  try {
    return report_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::load_failure, path.string() + ": " + e.what());
  }
}

void save_report(const Report& r, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::config_error, "cannot write " + path.string());
  out << to_json(r).dump(2) << '\n';
}

std::string render_table(const Report& r) {
  std::ostringstream out;
  out << "suite " << r.suite << "  ablation " << r.ablation << "  episodes " << r.episodes << "  seed " << r.seed
      << '\n';
  std::size_t w = 4;
  for (const auto& row : r.rows) w = std::max(w, row.id.size());
  out << std::string("task") << std::string(w - 4 + 2, ' ') << "new   SR\n";
  for (const auto& row : r.rows)
    out << row.id << std::string(w - row.id.size() + 2, ' ') << row.novel_terms << "   " << fixed(row.sr, 1) << '\n';
  out << "average" << std::string(w > 7 ? w - 7 + 2 : 2, ' ') << "    " << fixed(r.average, 1) << '\n';
  out << "mean seconds per episode:";
  for (auto k : kTimingKeys) out << ' ' << k << '=' << fixed(r.timings.at(std::string(k)), 3);
  out << '\n';
  return out.str();
}

BenchRun run_bench(const sim::Suite& suite, const BenchOptions& options, const BackendSuite& backends,
                   const MemoryStore& memory) {
  if (options.episodes < 1) throw Error(ErrorCode::config_error, "episodes must be at least 1");
  backends.check_health();
  auto tasks = suite.tasks;
  std::sort(tasks.begin(), tasks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  auto per_task = static_cast<std::size_t>(options.episodes);
  std::vector<EpisodeRecord> records(tasks.size() * per_task);
  std::vector<std::map<std::string, double>> timings(records.size());
  if (options.trace_dir) fs::create_directories(*options.trace_dir);

  auto id_terms = memory.known_list();
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        const auto& task = tasks[i / per_task];
        int ep = static_cast<int>(i % per_task);
        MemoryStore mem = memory;
        mem.reset_ood(id_terms);
        auto scene = sim::sample_scene(task, options.seed, ep);
        std::ofstream trace;
        executor::StepSink sink;
        std::optional<executor::TraceWriter> writer;
        if (options.trace_dir) {
          trace.open(*options.trace_dir / (task.id + "_" + std::to_string(ep) + ".jsonl"));
          writer.emplace(trace);
          sink = writer->sink();
        }
        auto out = pipeline::run_task(task, scene, mem, backends, options.ablation, options.exec, options.wall_clock, sink);
        if (writer) writer->events(out.result.events);
        auto& rec = records[i];
        rec.task = task.id;
        rec.episode = ep;
        rec.success = out.result.success;
        rec.goal_met = out.result.goal_met;
        rec.steps = out.result.steps;
        rec.initial = scene;
        rec.decisions = out.cognition.decisions;
        for (const auto& g : out.cognition.records)
          if (g.mask) rec.masked_terms.push_back(g.term);
        rec.calls = out.calls;
        rec.events = out.result.events;
        rec.final_list = out.cognition.final_list;
        timings[i] = out.result.timings;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = records.size();
      }
    }
  };
  int jobs = std::max(1, options.jobs);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  BenchRun run;
  auto& rep = run.report;
  rep.suite = suite.name;
  rep.seed = options.seed;
  rep.episodes = options.episodes;
  rep.ablation = options.ablation.label();
  rep.timings = zero_timings();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    TaskRow row;
    row.id = tasks[t].id;
    row.novel_terms = tasks[t].novel_terms;
    row.episodes = options.episodes;
    row.timings = zero_timings();
    for (std::size_t e = 0; e < per_task; ++e) {
      auto i = t * per_task + e;
      row.successes += records[i].success ? 1 : 0;
      for (const auto& [k, v] : timings[i]) {
        row.timings[k] += v / static_cast<double>(per_task);
        rep.timings[k] += v / static_cast<double>(records.size());
      }
    }
    row.sr = 100.0 * row.successes / row.episodes;
    rep.rows.push_back(std::move(row));
  }
  rep.average = mean_sr(rep.rows);
  run.episodes = std::move(records);
  return run;
}

Comparison compare(const Report& a, const Report& b) {
  if (a.suite != b.suite)
    throw Error(ErrorCode::invalid_comparison, "reports cover different suites: " + a.suite + " vs " + b.suite);
  if (a.rows.size() != b.rows.size())
    throw Error(ErrorCode::invalid_comparison, "reports cover different task sets");
  Comparison c;
  c.suite = a.suite;
  c.a_label = a.ablation;
  c.b_label = b.ablation;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].id != b.rows[i].id)
      throw Error(ErrorCode::invalid_comparison, "task " + a.rows[i].id + " has no counterpart");
    c.rows.push_back({a.rows[i].id, a.rows[i].sr, b.rows[i].sr, b.rows[i].sr - a.rows[i].sr});
  }
  c.a_average = a.average;
  c.b_average = b.average;
  c.delta = b.average - a.average;
  return c;
}

std::string render_comparison(const Comparison& c) {
  std::ostringstream out;
  out << "suite " << c.suite << "  A=" << c.a_label << "  B=" << c.b_label << '\n';
  std::size_t w = 7;
  for (const auto& r : c.rows) w = std::max(w, r.id.size());
  for (const auto& r : c.rows)
    out << r.id << std::string(w - r.id.size() + 2, ' ') << fixed(r.b, 1) << " (" << signed_fixed(r.delta, 1) << ")\n";
  out << "average" << std::string(w - 7 + 2, ' ') << fixed(c.b_average, 1) << " (" << signed_fixed(c.delta, 1) << ")\n";
  return out.str();
}

}  // namespace oodagent::bench
