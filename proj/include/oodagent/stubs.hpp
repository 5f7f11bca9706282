#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/memory.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace oodagent::stubs {

struct UnderstandingEntry {
  std::vector<std::string> keywords;
  std::optional<std::string> replacement;
  // What the text request must carry before the replacement is given:
  // "text" (nothing), "snippets", "keywords", or "visual:<tag>".
  std::string evidence = "text";
};

struct WebEntry {
  int images = 0;
  std::vector<std::string> snippets;
};

// Everything the deterministic stand-ins know. Loaded from fixtures/.
struct Fixtures {
  std::map<std::string, std::vector<std::string>> detector_lexicon;
  std::map<std::string, UnderstandingEntry> understanding;
  std::map<std::string, WebEntry> web;
  std::map<std::string, std::string> plans;
  std::vector<std::string> training_corpus;
  std::map<std::string, std::vector<std::string>> id_memory;
  KnownList known;
};

Fixtures load_fixtures(const std::filesystem::path& root);
Fixtures load_fixtures();

// A memory store holding the KnownList and the in-distribution vision entries.
MemoryStore seeded_memory(const Fixtures& fx);

// Deterministic image i of the web corpus for `term`.
Image web_image(const std::string& term, int index);

class StubPlanner : public Generator {
 public:
  explicit StubPlanner(std::map<std::string, std::string> plans) : plans_(std::move(plans)) {}
  std::string generate(std::string_view role, const Messages& messages) override;

 private:
  std::map<std::string, std::string> plans_;
};

class StubUnderstanding : public Generator {
 public:
  explicit StubUnderstanding(std::map<std::string, UnderstandingEntry> entries) : entries_(std::move(entries)) {}
  std::string generate(std::string_view role, const Messages& messages) override;

 private:
  std::map<std::string, UnderstandingEntry> entries_;
};

// Name match (all lexicon tags visible) scores 0.9; two or more keywords
// among the visible tags scores 0.6.
class StubDetector : public Detector {
 public:
  explicit StubDetector(std::map<std::string, std::vector<std::string>> lexicon) : lexicon_(std::move(lexicon)) {}
  std::vector<BBox> detect(const std::string& term, const std::vector<std::string>& keywords,
                           const Frame& image) override;

 private:
  std::map<std::string, std::vector<std::string>> lexicon_;
};

// Ground-truth mask of the record overlapping the box most.
class StubSegmenter : public Segmenter {
 public:
  Mask segment(const Frame& image, const BBox& box) override;
};

// Binds every initial mask to the record it overlaps most and then returns
// that record's ground-truth mask on each frame.
class StubVos : public Vos {
 public:
  std::string init(const Frame& first, const std::vector<Mask>& masks) override;
  std::vector<Mask> step(const std::string& session, const Frame& frame) override;

 private:
  std::mutex mu_;
  int next_ = 0;
  std::map<std::string, std::vector<int>> sessions_;
};

class StubPolicy : public Policy {
 public:
  explicit StubPolicy(KnownList vocab) : vocab_(std::move(vocab)) {}
  Action act(const std::string& prompt, const Frame& frame) override;

 private:
  KnownList vocab_;
};

// Reads the question family off the prompt and checks the symbolic layer.
class StubVerifier : public Verifier {
 public:
  bool verify(const std::string& prompt, const Frame& first, const Frame& last) override;
};

class StubImageSearch : public ImageSearch {
 public:
  explicit StubImageSearch(std::map<std::string, WebEntry> web) : web_(std::move(web)) {}
  std::vector<Image> search(const std::string& query, int limit) override;

 private:
  std::map<std::string, WebEntry> web_;
};

class StubSnippets : public SnippetSearch {
 public:
  explicit StubSnippets(std::map<std::string, WebEntry> web) : web_(std::move(web)) {}
  std::string snippets(const std::vector<std::string>& queries, int limit) override;

 private:
  std::map<std::string, WebEntry> web_;
};

BackendSuite make_stub_suite(const Fixtures& fx);

}  // namespace oodagent::stubs
