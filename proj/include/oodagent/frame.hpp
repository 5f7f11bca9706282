#pragma once

#include "oodagent/image.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oodagent {

enum class EntityKind { object, container, device, surface };
enum class EntityState { none, open, closed, on, off };

std::string_view to_string(EntityKind k);
std::string_view to_string(EntityState s);
EntityKind entity_kind_from(std::string_view s);
EntityState entity_state_from(std::string_view s);

// What a camera-facing model can perceive about one entity. The entity's
// name is deliberately absent; `visual_class` is the in-distribution class
// the entity looks like to models trained on the original vocabulary.
struct RenderRecord {
  int id = 0;
  std::vector<std::string> tags;
  BBox box;
  Mask mask;
  std::string visual_class;
  EntityKind kind = EntityKind::object;
  EntityState state = EntityState::none;
  bool held = false;
  std::optional<int> support;

  friend bool operator==(const RenderRecord&, const RenderRecord&) = default;
};

struct GripperPose {
  int x = 0, y = 0, z = 0;
  std::optional<int> holding;
  friend bool operator==(const GripperPose&, const GripperPose&) = default;
};

// One colour-coded mask drawn into an overlay frame.
struct ColorLayer {
  std::string color;
  Rgb rgb;
  std::string term;
  Mask mask;

  friend bool operator==(const ColorLayer&, const ColorLayer&) = default;
};

// A rendered camera frame: raster plus the symbolic layer the desk-scale
// stubs read. Overlay frames additionally carry their colour layers.
struct Frame {
  Image raster;
  std::vector<RenderRecord> records;
  std::optional<GripperPose> gripper;
  std::vector<ColorLayer> layers;

  const RenderRecord* record(int id) const;
  // Raster and records restricted to `box`, with coordinates rebased.
  Frame crop(const BBox& box) const;

  friend bool operator==(const Frame&, const Frame&) = default;
};

}  // namespace oodagent
