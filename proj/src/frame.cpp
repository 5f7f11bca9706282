#include "oodagent/frame.hpp"

#include "oodagent/error.hpp"

#include <algorithm>

namespace oodagent {

std::string_view to_string(EntityKind k) {
  switch (k) {
    case EntityKind::object: return "object";
    case EntityKind::container: return "container";
    case EntityKind::device: return "device";
    case EntityKind::surface: return "surface";
  }
  return "object";
}

std::string_view to_string(EntityState s) {
  switch (s) {
    case EntityState::none: return "none";
    case EntityState::open: return "open";
    case EntityState::closed: return "closed";
    case EntityState::on: return "on";
    case EntityState::off: return "off";
  }
  return "none";
}

EntityKind entity_kind_from(std::string_view s) {
  if (s == "object") return EntityKind::object;
  if (s == "container") return EntityKind::container;
  if (s == "device") return EntityKind::device;
  if (s == "surface") return EntityKind::surface;
  throw Error(ErrorCode::invalid_input, "unknown entity kind: " + std::string(s));
}

EntityState entity_state_from(std::string_view s) {
  if (s == "none") return EntityState::none;
  if (s == "open") return EntityState::open;
  if (s == "closed") return EntityState::closed;
  if (s == "on") return EntityState::on;
  if (s == "off") return EntityState::off;
  throw Error(ErrorCode::invalid_input, "unknown entity state: " + std::string(s));
}

const RenderRecord* Frame::record(int id) const {
  for (const auto& r : records)
    if (r.id == id) return &r;
  return nullptr;
}

Frame Frame::crop(const BBox& box) const {
  Frame out;
  out.raster = raster.crop(box);
  int w = out.raster.width(), h = out.raster.height();
  int ox = std::max(box.x0, 0), oy = std::max(box.y0, 0);
  for (const auto& r : records) {
    BBox clipped{std::max(r.box.x0, ox) - ox, std::max(r.box.y0, oy) - oy,
                 std::min(r.box.x1, ox + w) - ox, std::min(r.box.y1, oy + h) - oy, r.box.score};
    if (clipped.x0 >= clipped.x1 || clipped.y0 >= clipped.y1) continue;
    RenderRecord c = r;
    c.box = clipped;
    c.mask = Mask(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (r.mask.width() > 0 && r.mask.get(x + ox, y + oy)) c.mask.set(x, y, true);
    out.records.push_back(std::move(c));
  }
  return out;
}

}  // namespace oodagent
