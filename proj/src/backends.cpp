#include "oodagent/backends.hpp"

#include "oodagent/error.hpp"

#include <chrono>

namespace oodagent {

std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::planner: return "planner";
    case Capability::understanding_vision: return "understanding-vision";
    case Capability::understanding_text: return "understanding-text";
    case Capability::detector: return "detector";
    case Capability::segmenter: return "segmenter";
    case Capability::vos: return "vos";
    case Capability::vla: return "vla";
    case Capability::verifier: return "verifier";
    case Capability::image_search: return "image-search";
    case Capability::snippets: return "snippets";
  }
  return "planner";
}

std::string_view module_of(Capability c) {
  switch (c) {
    case Capability::planner: return "planner";
    case Capability::understanding_vision:
    case Capability::detector:
    case Capability::segmenter:
    case Capability::image_search: return "vision";
    case Capability::understanding_text:
    case Capability::snippets: return "language";
    case Capability::vos: return "vos";
    case Capability::vla: return "vla";
    case Capability::verifier: return "verifier";
  }
  return "total";
}

void BackendSuite::check_health() const {
  auto probe = [](const auto& handle, std::string_view name) {
    if (!handle) throw Error(ErrorCode::config_error, "backend '" + std::string(name) + "' is not configured");
    bool ok = false;
    try {
      ok = handle->health();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::backend_failure, "health probe for '" + std::string(name) + "' failed: " + e.what());
    }
    if (!ok) throw Error(ErrorCode::backend_failure, "backend '" + std::string(name) + "' is not ready");
  };
  probe(planner, "planner");
  probe(understanding_vision, "understanding-vision");
  probe(understanding_text, "understanding-text");
  probe(detector, "detector");
  probe(segmenter, "segmenter");
  probe(vos, "vos");
  probe(vla, "vla");
  probe(verifier, "verifier");
  probe(image_search, "image-search");
  probe(snippets, "snippets");
}

double CallMeter::modeled_latency(Capability c) {
  switch (c) {
    case Capability::planner: return 1.5;
    case Capability::understanding_vision: return 2.0;
    case Capability::understanding_text: return 1.25;
    case Capability::detector: return 0.125;
    case Capability::segmenter: return 0.0625;
    case Capability::vos: return 0.03125;
    case Capability::vla: return 0.09375;
    case Capability::verifier: return 0.375;
    case Capability::image_search: return 0.75;
    case Capability::snippets: return 0.5;
  }
  return 0.0;
}

void CallMeter::record(Capability c, double measured_seconds) {
  counts_[static_cast<std::size_t>(c)].fetch_add(1);
  double charge = wall_clock_ ? measured_seconds : modeled_latency(c);
  std::lock_guard lock(mu_);
  seconds_[std::string(module_of(c))] += charge;
}

int CallMeter::total_calls() const {
  int n = 0;
  for (const auto& c : counts_) n += c.load();
  return n;
}

std::map<std::string, double> CallMeter::timings() const {
  std::lock_guard lock(mu_);
  std::map<std::string, double> out;
  double total = 0.0;
  for (auto key : kTimingKeys) {
    if (key == "total") continue;
    auto it = seconds_.find(std::string(key));
    double v = it == seconds_.end() ? 0.0 : it->second;
    out[std::string(key)] = v;
    total += v;
  }
  out["total"] = total;
  return out;
}

namespace {

template <typename F>
auto metered(CallMeter& meter, Capability c, F&& fn) {
  auto start = std::chrono::steady_clock::now();
  struct Recorder {
    CallMeter& meter;
    Capability c;
    std::chrono::steady_clock::time_point start;
    ~Recorder() {
      std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
      meter.record(c, d.count());
    }
  } recorder{meter, c, start};
  return fn();
}

class MeteredGenerator : public Generator {
 public:
  MeteredGenerator(std::shared_ptr<Generator> inner, std::shared_ptr<CallMeter> m, Capability c)
      : inner_(std::move(inner)), meter_(std::move(m)), cap_(c) {}
  std::string generate(std::string_view role, const Messages& messages) override {
    return metered(*meter_, cap_, [&] { return inner_->generate(role, messages); });
  }
  bool health() override { return inner_->health(); }

 private:
  std::shared_ptr<Generator> inner_;
  std::shared_ptr<CallMeter> meter_;
  Capability cap_;
};

class MeteredDetector : public Detector {
 public:
  MeteredDetector(std::shared_ptr<Detector> inner, std::shared_ptr<CallMeter> m)
      : inner_(std::move(inner)), meter_(std::move(m)) {}
  std::vector<BBox> detect(const std::string& term, const std::vector<std::string>& keywords,
                           const Frame& image) override {
    return metered(*meter_, Capability::detector, [&] { return inner_->detect(term, keywords, image); });
  }
  bool health() override { return inner_->health(); }

 private:
  std::shared_ptr<Detector> inner_;
  std::shared_ptr<CallMeter> meter_;
};

class MeteredSegmenter : public Segmenter {
 public:
  MeteredSegmenter(std::shared_ptr<Segmenter> inner, std::shared_ptr<CallMeter> m)
      : inner_(std::move(inner)), meter_(std::move(m)) {}
  Mask segment(const Frame& image, const BBox& box) override {
    return metered(*meter_, Capability::segmenter, [&] { return inner_->segment(image, box); });
  }
  bool health() override { return inner_->health(); }

 private:
  std::shared_ptr<Segmenter> inner_;
  std::shared_ptr<CallMeter> meter_;
};

class MeteredVos : public Vos {
 public:
  MeteredVos(std::shared_ptr<Vos> inner, std::shared_ptr<CallMeter> m)
      : inner_(std::move(inner)), meter_(std::move(m)) {}
  std::string init(const Frame& first, const std::vector<Mask>& masks) override {
    return metered(*meter_, Capability::vos, [&] { return inner_->init(first, masks); });
  }
  std::vector<Mask> step(const std::string& session, const Frame& frame) override {
    return metered(*meter_, Capability::vos, [&] { return inner_->step(session, frame); });
  }
  bool health() override { return inner_->health(); }

 private:
  std::shared_ptr<Vos> inner_;
  std::shared_ptr<CallMeter> meter_;
};

class MeteredPolicy : public Policy {
 public:
  MeteredPolicy(std::shared_ptr<Policy> inner, std::shared_ptr<CallMeter> m)
      : inner_(std::move(inner)), meter_(std::move(m)) {}
  Action act(const std::string& prompt, const Frame& frame) override {
    return metered(*meter_, Capability::vla, [&] { return inner_->act(prompt, frame); });
  }
  bool health() override { return inner_->health(); }

 private:
  std::shared_ptr<Policy> inner_;
  std::shared_ptr<CallMeter> meter_;
};

class MeteredVerifier : public Verifier {
 public:
  MeteredVerifier(std::shared_ptr<Verifier> inner, std::shared_ptr<CallMeter> m)
      : inner_(std::move(inner)), meter_(std::move(m)) {}
  bool verify(const std::string& prompt, const Frame& first, const Frame& last) override {
    return metered(*meter_, Capability::verifier, [&] { return inner_->verify(prompt, first, last); });
  }
  bool health() override { return inner_->health(); }

 private:
  std::shared_ptr<Verifier> inner_;
  std::shared_ptr<CallMeter> meter_;
};

class MeteredImageSearch : public ImageSearch {
 public:
  MeteredImageSearch(std::shared_ptr<ImageSearch> inner, std::shared_ptr<CallMeter> m)
      : inner_(std::move(inner)), meter_(std::move(m)) {}
  std::vector<Image> search(const std::string& query, int limit) override {
    return metered(*meter_, Capability::image_search, [&] { return inner_->search(query, limit); });
  }
  bool health() override { return inner_->health(); }

 private:
  std::shared_ptr<ImageSearch> inner_;
  std::shared_ptr<CallMeter> meter_;
};

class MeteredSnippets : public SnippetSearch {
 public:
  MeteredSnippets(std::shared_ptr<SnippetSearch> inner, std::shared_ptr<CallMeter> m)
      : inner_(std::move(inner)), meter_(std::move(m)) {}
  std::string snippets(const std::vector<std::string>& queries, int limit) override {
    return metered(*meter_, Capability::snippets, [&] { return inner_->snippets(queries, limit); });
  }
  bool health() override { return inner_->health(); }

 private:
  std::shared_ptr<SnippetSearch> inner_;
  std::shared_ptr<CallMeter> meter_;
};

template <typename W, typename T, typename... Extra>
std::shared_ptr<T> wrap(const std::shared_ptr<T>& inner, const std::shared_ptr<CallMeter>& meter, Extra... extra) {
  if (!inner) return nullptr;
  return std::make_shared<W>(inner, meter, extra...);
}

}  // namespace

BackendSuite instrument(const BackendSuite& base, std::shared_ptr<CallMeter> meter) {
  BackendSuite s;
  s.planner = wrap<MeteredGenerator>(base.planner, meter, Capability::planner);
  s.understanding_vision = wrap<MeteredGenerator>(base.understanding_vision, meter, Capability::understanding_vision);
  s.understanding_text = wrap<MeteredGenerator>(base.understanding_text, meter, Capability::understanding_text);
  s.detector = wrap<MeteredDetector>(base.detector, meter);
  s.segmenter = wrap<MeteredSegmenter>(base.segmenter, meter);
  s.vos = wrap<MeteredVos>(base.vos, meter);
  s.vla = wrap<MeteredPolicy>(base.vla, meter);
  s.verifier = wrap<MeteredVerifier>(base.verifier, meter);
  s.image_search = wrap<MeteredImageSearch>(base.image_search, meter);
  s.snippets = wrap<MeteredSnippets>(base.snippets, meter);
  return s;
}

}  // namespace oodagent
