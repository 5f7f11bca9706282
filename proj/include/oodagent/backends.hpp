#pragma once

#include "oodagent/frame.hpp"

#include <array>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace oodagent {

// One part of a chat turn: text, or an image (raster plus symbolic layer).
struct MessagePart {
  std::string text;
  std::optional<Frame> image;

  static MessagePart of_text(std::string t) { return {std::move(t), std::nullopt}; }
  static MessagePart of_image(Frame f) { return {{}, std::move(f)}; }
  bool is_image() const { return image.has_value(); }
  friend bool operator==(const MessagePart&, const MessagePart&) = default;
};

struct Message {
  std::string role;
  std::vector<MessagePart> parts;
  friend bool operator==(const Message&, const Message&) = default;
};

using Messages = std::vector<Message>;

// End-effector delta (dx, dy, dz, droll, dpitch, dyaw) plus gripper command.
using Action = std::array<double, 7>;

// Which prompt family a /v1/generate request belongs to.
inline constexpr std::string_view kRolePlanner = "planner";
inline constexpr std::string_view kRoleVision = "understanding-vision";
inline constexpr std::string_view kRoleText = "understanding-text";

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(std::string_view role, const Messages& messages) = 0;
  virtual bool health() { return true; }
};

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<BBox> detect(const std::string& term, const std::vector<std::string>& keywords,
                                   const Frame& image) = 0;
  virtual bool health() { return true; }
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual Mask segment(const Frame& image, const BBox& box) = 0;
  virtual bool health() { return true; }
};

// Video object segmentation. init() returns a session handle that step()
// advances one frame at a time; masks come back in initialization order.
class Vos {
 public:
  virtual ~Vos() = default;
  virtual std::string init(const Frame& first, const std::vector<Mask>& masks) = 0;
  virtual std::vector<Mask> step(const std::string& session, const Frame& frame) = 0;
  virtual bool health() { return true; }
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const std::string& prompt, const Frame& frame) = 0;
  virtual bool health() { return true; }
};

class Verifier {
 public:
  virtual ~Verifier() = default;
  // Compares the start and the end of the segment under review.
  virtual bool verify(const std::string& prompt, const Frame& first, const Frame& last) = 0;
  virtual bool health() { return true; }
};

class ImageSearch {
 public:
  virtual ~ImageSearch() = default;
  virtual std::vector<Image> search(const std::string& query, int limit) = 0;
  virtual bool health() { return true; }
};

class SnippetSearch {
 public:
  virtual ~SnippetSearch() = default;
  virtual std::string snippets(const std::vector<std::string>& queries, int limit) = 0;
  virtual bool health() { return true; }
};

struct BackendSuite {
  std::shared_ptr<Generator> planner;
  std::shared_ptr<Generator> understanding_vision;
  std::shared_ptr<Generator> understanding_text;
  std::shared_ptr<Detector> detector;
  std::shared_ptr<Segmenter> segmenter;
  std::shared_ptr<Vos> vos;
  std::shared_ptr<Policy> vla;
  std::shared_ptr<Verifier> verifier;
  std::shared_ptr<ImageSearch> image_search;
  std::shared_ptr<SnippetSearch> snippets;

  // Throws config_error naming the first missing handle, backend_failure
  // naming the first handle whose probe fails.
  void check_health() const;
};

// Capability names used for call counting; stable, they appear in reports.
enum class Capability {
  planner,
  understanding_vision,
  understanding_text,
  detector,
  segmenter,
  vos,
  vla,
  verifier,
  image_search,
  snippets,
};
inline constexpr std::size_t kCapabilityCount = 10;
std::string_view to_string(Capability c);

// Module rows of the timing breakdown.
inline constexpr std::array<std::string_view, 7> kTimingKeys = {"planner", "vision",   "language", "vos",
                                                                "vla",     "verifier", "total"};
std::string_view module_of(Capability c);

// Per-episode call counts and per-module time. Modeled mode charges a fixed
// latency per call so reports are reproducible; wall-clock mode measures.
class CallMeter {
 public:
  explicit CallMeter(bool wall_clock = false) : wall_clock_(wall_clock) {}

  bool wall_clock() const { return wall_clock_; }
  void record(Capability c, double measured_seconds);
  int calls(Capability c) const { return counts_[static_cast<std::size_t>(c)].load(); }
  int total_calls() const;
  // Keys exactly kTimingKeys; "total" is the sum of the others.
  std::map<std::string, double> timings() const;

  static double modeled_latency(Capability c);

 private:
  bool wall_clock_;
  std::array<std::atomic<int>, kCapabilityCount> counts_{};
  mutable std::mutex mu_;
  std::map<std::string, double> seconds_;
};

// Wraps every handle so calls are counted and timed into `meter`.
BackendSuite instrument(const BackendSuite& base, std::shared_ptr<CallMeter> meter);

}  // namespace oodagent
