#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/frame.hpp"
#include "oodagent/memory.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oodagent::vision {

inline constexpr double kValidScore = 0.35;
inline constexpr int kWebImages = 6;
inline constexpr double kOverlayAlpha = 0.5;

enum class KeywordSource { none, memory, generated };

struct GroundingRecord {
  std::string term;
  std::optional<BBox> bbox;
  std::optional<std::vector<std::string>> keywords;
  KeywordSource keyword_source = KeywordSource::none;
  std::optional<Image> collage;
  // The first frame cropped to the bbox, with its symbolic layer.
  std::optional<Frame> top_crop;
  // Whether the detector produced any box at all, valid or not.
  bool has_scores = false;
  std::optional<Mask> mask;
  // Set when the segmenter failed and the mask is the bbox rectangle.
  bool mask_from_box = false;
  std::optional<std::string> color;

  friend bool operator==(const GroundingRecord& a, const GroundingRecord& b);
};

struct PaletteColor {
  std::string name;
  Rgb rgb;
  friend bool operator==(const PaletteColor&, const PaletteColor&) = default;
};

const std::vector<PaletteColor>& object_palette();
const std::vector<PaletteColor>& location_palette();

struct ColorEntry {
  std::string term;
  PaletteColor color;
  bool is_object = true;
};

struct ColorAssignment {
  std::vector<ColorEntry> entries;
  const ColorEntry* find(std::string_view term) const;
};

// Objects draw from the object palette, locations from the location palette,
// both in list order. A term listed twice keeps its first colour.
ColorAssignment assign_colors(const std::vector<std::string>& objects, const std::vector<std::string>& locations);

// 2 rows x 3 columns; fewer than six inputs repeat cyclically, extras are
// dropped. Cells take the largest input size; smaller inputs sit top-left.
Image build_collage(const std::vector<Image>& images);

// First bracketed list in the output, parsed as JSON strings, cut to five.
// Throws keyword_parse_failure when there is none or it is empty.
std::vector<std::string> parse_keywords(std::string_view model_output);

std::string vision_system_prompt(std::string_view query);
Messages build_vision_messages(std::string_view query, const Image& collage, const Frame& current);

struct GroundOptions {
  bool web_enabled = true;
  double valid_score = kValidScore;
  int web_images = kWebImages;
};

// Double judgment over (valid bbox, keywords in memory); the web branch
// fetches images, asks for keywords, stores them and re-detects.
GroundingRecord ground_term(const std::string& term, const Frame& first, MemoryStore& memory,
                            const BackendSuite& backends, const GroundOptions& options = {});

using EventSink = std::function<void(const std::string& kind, const std::string& detail)>;

// One segmenter call per present bbox. Failures and empty masks fall back to
// the bbox rectangle and are reported through `events`.
void make_masks(std::vector<GroundingRecord>& records, const Frame& first, const BackendSuite& backends,
                const EventSink& events = {});

// Gives every masked record its assigned colour; unmasked records get none.
void attach_colors(std::vector<GroundingRecord>& records, const ColorAssignment& colors);

// Alpha-blends each layer's colour over its mask, layers in order.
Frame compose_overlay(const Frame& frame, const std::vector<ColorLayer>& layers, double alpha = kOverlayAlpha);

// Episode-local VOS routing: initialized once from the first frame's masks,
// then every frame is propagated and overlaid. Location layers are drawn
// before object layers.
class MaskFlow {
 public:
  MaskFlow(const BackendSuite& backends, const Frame& first, const std::vector<GroundingRecord>& records,
           const ColorAssignment& colors, double alpha = kOverlayAlpha);

  // On VOS failure the previous masks are reused and `frozen` is set.
  Frame overlay(const Frame& frame, bool* frozen = nullptr);
  const std::vector<ColorLayer>& layers() const { return layers_; }

 private:
  BackendSuite backends_;
  double alpha_;
  std::string session_;
  std::vector<ColorLayer> layers_;
};

}  // namespace oodagent::vision
