#include "oodagent/bench.hpp"
#include "oodagent/error.hpp"
#include "oodagent/pipeline.hpp"
#include "oodagent/remote.hpp"
#include "oodagent/server.hpp"
#include "oodagent/simworld.hpp"
#include "oodagent/stubs.hpp"
#include "oodagent/text.hpp"

#include "CLI11.hpp"

#include <csignal>
#include <fstream>
#include <iostream>

using namespace oodagent;

namespace {

struct Common {
  std::string backends;
  std::string ablate;
  std::string memory_root;
  bool wall_clock = false;
};

BackendSuite make_backends(const Common& c, const stubs::Fixtures& fx) {
  if (c.backends.empty()) return stubs::make_stub_suite(fx);
  return load_backends(c.backends, fx);
}

// An explicit root is loaded (or created) and seeded with the KnownList and
// the in-distribution entries when it has none.
MemoryStore open_memory(const Common& c, const stubs::Fixtures& fx) {
  if (c.memory_root.empty()) return stubs::seeded_memory(fx);
  auto store = MemoryStore::load(c.memory_root);
  if (store.known_list().empty()) {
    auto seeded = stubs::seeded_memory(fx);
    for (const auto& t : store.vision_terms()) seeded.put_vision(*store.vision(t));
    for (const auto& [t, l] : store.replace_map()) seeded.put_replacement(t, l);
    store = seeded;
  }
  return store;
}

// Everything the library raises at this level is a config, backend or
// input problem.
int exit_for(const Error&) { return 2; }

std::string calls_line(const std::array<int, kCapabilityCount>& calls) {
  std::string out;
  for (std::size_t i = 0; i < kCapabilityCount; ++i) {
    if (!out.empty()) out += ' ';
    out += std::string(to_string(static_cast<Capability>(i))) + "=" + std::to_string(calls[i]);
  }
  return out;
}

WireServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embodied-agent orchestration: planning, grounding, replacement, verified execution"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--backends", common.backends, "Backend config file (default: in-process stubs)");
    sub->add_option("--ablate", common.ablate, "Comma list of mask,replace,web,subtask");
    sub->add_option("--memory", common.memory_root, "Memory root directory (default: in-memory, seeded)");
    sub->add_flag("--wall-clock", common.wall_clock, "Measure time instead of charging modeled latencies");
  };

  std::string suite_name = "hard", task_id, out_path, trace_dir;
  int episodes = 50, episode = 0, jobs = 1, max_steps = 400;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run one task once and print the outcome");
  add_common(run);
  run->add_option("--suite", suite_name, "easy, medium, hard or original")->capture_default_str();
  run->add_option("--task", task_id, "Task id")->required();
  run->add_option("--seed", seed, "Placement seed")->capture_default_str();
  run->add_option("--episode", episode, "Episode index under the seed")->capture_default_str();
  run->add_option("--out", out_path, "Line-delimited trace file");
  run->add_option("--max-steps", max_steps)->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Run a suite and write a report");
  add_common(bench);
  bench->add_option("--suite", suite_name)->capture_default_str();
  bench->add_option("--episodes", episodes)->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed)->capture_default_str();
  bench->add_option("--jobs", jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--out", out_path, "Report path");
  bench->add_option("--trace-dir", trace_dir, "Write one trace per episode");

  std::string report_a, report_b;
  auto* cmp = app.add_subcommand("compare", "Per-task SR deltas B - A");
  cmp->add_option("a", report_a)->required();
  cmp->add_option("b", report_b)->required();

  auto* mem = app.add_subcommand("memory", "Inspect or reset a memory root");
  mem->require_subcommand(1);
  std::string mem_root;
  auto* inspect = mem->add_subcommand("inspect", "Print the stored terms");
  inspect->add_option("--root", mem_root)->required();
  auto* reset = mem->add_subcommand("reset-ood", "Drop entries for terms outside the KnownList");
  reset->add_option("--root", mem_root)->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve-stubs", "Host the stub suite over the wire protocol");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto fx = stubs::load_fixtures();
      auto suite = sim::load_suite(suite_name);
      const auto* task = suite.find(task_id);
      if (!task) throw Error(ErrorCode::config_error, "no task '" + task_id + "' in suite " + suite_name);
      auto backends = make_backends(common, fx);
      backends.check_health();
      auto memory = open_memory(common, fx);
      auto ablation = pipeline::AblationConfig::parse(common.ablate);
      executor::ExecConfig cfg;
      cfg.max_steps = max_steps;
      std::ofstream trace;
      std::optional<executor::TraceWriter> writer;
      executor::StepSink sink;
      if (!out_path.empty()) {
        trace.open(out_path);
        if (!trace) throw Error(ErrorCode::config_error, "cannot write " + out_path);
        writer.emplace(trace);
        sink = writer->sink();
      }
      auto out = pipeline::run_task(*task, sim::sample_scene(*task, seed, episode), memory, backends, ablation, cfg,
                                    common.wall_clock, sink);
      if (writer) writer->events(out.result.events);
      if (!common.memory_root.empty()) memory.save(common.memory_root);
      std::cout << "task " << task->id << ": " << task->instruction << '\n';
      std::cout << "final task list:\n";
      for (const auto& st : out.cognition.final_list.subtasks) std::cout << "  " << st.index << ". " << st.text << '\n';
      std::cout << "outcome " << (out.result.success ? "success" : "failure") << " after " << out.result.steps
                << " steps\n";
      std::cout << "calls " << calls_line(out.calls) << '\n';
      for (const auto& e : out.result.events)
        if (e.kind == "backend-error") std::cerr << e.detail << '\n';
      if (!out_path.empty()) std::cout << "trace " << out_path << '\n';
      for (const auto& e : out.result.events)
        if (e.kind == "backend-error") return 2;
      return out.result.success ? 0 : 1;
    }
    if (bench->parsed()) {
      auto fx = stubs::load_fixtures();
      auto suite = sim::load_suite(suite_name);
      auto backends = make_backends(common, fx);
      auto memory = open_memory(common, fx);
      bench::BenchOptions opt;
      opt.episodes = episodes;
      opt.seed = seed;
      opt.jobs = jobs;
      opt.ablation = pipeline::AblationConfig::parse(common.ablate);
      opt.wall_clock = common.wall_clock;
      if (!trace_dir.empty()) opt.trace_dir = trace_dir;
      auto result = bench::run_bench(suite, opt, backends, memory);
      if (!out_path.empty()) bench::save_report(result.report, out_path);
      std::cout << bench::render_table(result.report);
      return 0;
    }
    if (cmp->parsed()) {
      auto c = bench::compare(bench::load_report(report_a), bench::load_report(report_b));
      std::cout << bench::render_comparison(c);
      return 0;
    }
    if (inspect->parsed()) {
      auto store = MemoryStore::load(mem_root);
      std::cout << "known list: " << store.known_list().size() << " labels\n";
      std::cout << "vision memory:\n";
      for (const auto& t : store.vision_terms()) {
        auto v = store.vision(t);
        std::cout << "  " << t << ": " << text::join(v->keywords, ", ") << (v->collage ? "  [collage]" : "") << '\n';
      }
      std::cout << "replace map:\n";
      for (const auto& [t, l] : store.replace_map()) std::cout << "  " << t << " -> " << l << '\n';
      return 0;
    }
    if (reset->parsed()) {
      auto store = MemoryStore::load(mem_root);
      store.reset_ood(store.known_list());
      store.save(mem_root);
      std::cout << "kept " << store.vision_terms().size() << " vision entries, " << store.replace_map().size()
                << " replacements\n";
      return 0;
    }
    if (serve->parsed()) {
      auto fx = stubs::load_fixtures();
      WireServer server(stubs::make_stub_suite(fx));
      int bound = server.bind(host, port);
      std::cout << "serving stubs on http://" << host << ':' << bound << std::endl;
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
