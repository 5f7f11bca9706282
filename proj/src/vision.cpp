#include "oodagent/vision.hpp"

#include "oodagent/error.hpp"
#include "oodagent/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

namespace oodagent::vision {

namespace {

constexpr std::string_view kVisionSystemTemplate = R"VIS(
    You are an intelligent assistant specialized in analyzing images and extracting meaningful information. Your task is to identify a specific person or object that appears in all provided images and generate five of the most relevant keywords to describe this person or object.
    **Think in ten sentences.** You must follow this rule strictly.
    Guidelines:
    For the combined image:
    If the same person appears in all images:
    Focus on describing the person's gender, skin tone, and occupation.
    Avoid keywords related to clothing or environment.
    Example keywords might include: "female", "light-skinned", "doctor", etc.
    If the same object appears in all images:
    Focus on describing the object's physical characteristics.
    Example keywords might include: "round", "metallic", "small", etc.
    **IMPORTANT** The keywords are going to help another Model to find the same or almost like subjects or persons in the real-world image.
    Thus the keywords should be very specific and descriptive, not general or abstract, and can reflect the basic attributes of this task or thing.
    Making another VLM easily find the same or similar subjects or persons in the real-world image.

    For the current image:
    There is something suitable for the query"{query}", but the model can't find the bbox exactly.
    Your mission is to base on the current image and the combined image to describe the same thing in both.
    
    Output Format:
    Output the keywords in JSON format.
    Ensure the output contains only the keywords, without additional text or explanation.
    The JSON structure should be a list of strings.
    Example JSON Output: ["female", "light-skinned", "doctor", "middle-aged", "smiling"].
    Your output should be in a format that the code below can easily extract the keywords:
    --match = re.search(r"\[.*?\]", output_text[0])
    --  if match:
    --      str_list = json.loads(match.group(0))
    --      print(str_list)

    Task:
    Analyze the provided images and generate five keywords that best describe the identified person or object based on the guidelines above. 
    Output the keywords in the specified JSON format.
    input:{query}
    output:
    )VIS";

std::string substitute(std::string s, std::string_view key, std::string_view value) {
  for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
    s.replace(pos, key.size(), value);
  return s;
}

std::optional<BBox> best_box(const std::vector<BBox>& boxes, const Frame& image, double threshold) {
  const BBox* best = nullptr;
  for (const auto& b : boxes)
    if (!best || b.score > best->score) best = &b;
  if (!best || best->score < threshold || !best->valid_in(image.raster.width(), image.raster.height()))
    return std::nullopt;
  return *best;
}

}  // namespace

bool operator==(const GroundingRecord& a, const GroundingRecord& b) {
  auto crop_eq = [](const std::optional<Frame>& x, const std::optional<Frame>& y) {
    if (x.has_value() != y.has_value()) return false;
    if (!x) return true;
    if (!(x->raster == y->raster) || x->records.size() != y->records.size()) return false;
    for (std::size_t i = 0; i < x->records.size(); ++i) {
      const auto& p = x->records[i];
      const auto& q = y->records[i];
      if (p.id != q.id || p.tags != q.tags || !(p.box == q.box) || !(p.mask == q.mask)) return false;
    }
    return true;
  };
  return a.term == b.term && a.bbox == b.bbox && a.keywords == b.keywords && a.keyword_source == b.keyword_source &&
         a.collage == b.collage && crop_eq(a.top_crop, b.top_crop) && a.has_scores == b.has_scores &&
         a.mask == b.mask && a.mask_from_box == b.mask_from_box && a.color == b.color;
}

const std::vector<PaletteColor>& object_palette() {
  static const std::vector<PaletteColor> p = {
      {"red", {255, 0, 0}}, {"green", {0, 255, 0}}, {"yellow", {255, 255, 0}},
      {"orange", {255, 165, 0}}, {"magenta", {255, 0, 255}}};
  return p;
}

const std::vector<PaletteColor>& location_palette() {
  static const std::vector<PaletteColor> p = {
      {"blue", {0, 0, 255}}, {"purple", {128, 0, 128}}, {"cyan", {0, 255, 255}},
      {"teal", {0, 128, 128}}, {"navy", {0, 0, 128}}};
  return p;
}

const ColorEntry* ColorAssignment::find(std::string_view term) const {
  for (const auto& e : entries)
    if (e.term == term) return &e;
  return nullptr;
}

ColorAssignment assign_colors(const std::vector<std::string>& objects, const std::vector<std::string>& locations) {
  ColorAssignment out;
  auto take = [&](const std::vector<std::string>& terms, const std::vector<PaletteColor>& palette, bool is_object) {
    std::size_t next = 0;
    for (const auto& t : terms) {
      if (out.find(t)) continue;
      if (next >= palette.size())
        throw Error(ErrorCode::palette_exhausted, std::string(is_object ? "object" : "location") +
                                                      " palette has only " + std::to_string(palette.size()) +
                                                      " colours");
      out.entries.push_back({t, palette[next++], is_object});
    }
  };
  take(objects, object_palette(), true);
  take(locations, location_palette(), false);
  return out;
}

Image build_collage(const std::vector<Image>& images) {
  if (images.empty()) throw Error(ErrorCode::invalid_input, "collage needs at least one image");
  std::size_t n = std::min<std::size_t>(images.size(), 6);
  int cw = 0, ch = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cw = std::max(cw, images[i].width());
    ch = std::max(ch, images[i].height());
  }
  Image out(3 * cw, 2 * ch);
  for (int cell = 0; cell < 6; ++cell) {
    const auto& img = images[static_cast<std::size_t>(cell) % n];
    out.blit(img, (cell % 3) * cw, (cell / 3) * ch);
  }
  return out;
}

std::vector<std::string> parse_keywords(std::string_view model_output) {
  static const std::regex first_list(R"(\[[\s\S]*?\])");
  std::string s(model_output);
  std::smatch m;
  if (!std::regex_search(s, m, first_list))
    throw Error(ErrorCode::keyword_parse_failure, "no bracketed list in model output");
  std::vector<std::string> out;
  try {
    auto j = nlohmann::json::parse(m.str());
    for (const auto& v : j) {
      if (!v.is_string()) throw Error(ErrorCode::keyword_parse_failure, "keyword list holds a non-string");
      auto k = text::trim(v.get<std::string>());
      if (!k.empty()) out.push_back(k);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::keyword_parse_failure, std::string("keyword list is not valid JSON: ") + e.what());
  }
  if (out.empty()) throw Error(ErrorCode::keyword_parse_failure, "keyword list is empty");
  if (out.size() > 5) out.resize(5);
  return out;
}

std::string vision_system_prompt(std::string_view query) {
  return substitute(std::string(kVisionSystemTemplate), "{query}", query);
}

Messages build_vision_messages(std::string_view query, const Image& collage, const Frame& current) {
  Frame com;
  com.raster = collage;
  Messages m;
  m.push_back({"system", {MessagePart::of_text(vision_system_prompt(query))}});
  m.push_back({"user", {MessagePart::of_text("Here is the combined image from the web."), MessagePart::of_image(com)}});
  m.push_back({"user", {MessagePart::of_text("This is the current image from the camera."), MessagePart::of_image(current)}});
  return m;
}

GroundingRecord ground_term(const std::string& term, const Frame& first, MemoryStore& memory,
                            const BackendSuite& backends, const GroundOptions& options) {
  GroundingRecord rec;
  rec.term = term;
  auto boxes = backends.detector->detect(term, {}, first);
  rec.has_scores = !boxes.empty();
  rec.bbox = best_box(boxes, first, options.valid_score);

  if (options.web_enabled) {
    auto remembered = memory.vision(term);
    if (remembered) {
      rec.keywords = remembered->keywords;
      rec.keyword_source = KeywordSource::memory;
      rec.collage = remembered->collage;
    }
    if (!rec.bbox || !remembered) {
      if (!remembered) {
        auto images = backends.image_search->search(term, options.web_images);
        if (images.size() > static_cast<std::size_t>(options.web_images)) images.resize(options.web_images);
        if (!images.empty()) {
          auto collage = build_collage(images);
          auto messages = build_vision_messages(term, collage, first);
          std::optional<std::vector<std::string>> keywords;
          for (int attempt = 0; attempt < 2 && !keywords; ++attempt) {
            try {
              keywords = parse_keywords(backends.understanding_vision->generate(kRoleVision, messages));
            } catch (const Error& e) {
              if (e.code() != ErrorCode::keyword_parse_failure) throw;
            }
          }
          if (keywords) {
            memory.put_vision({term, *keywords, collage, images});
            rec.keywords = keywords;
            rec.keyword_source = KeywordSource::generated;
            rec.collage = collage;
          }
        }
      }
      if (!rec.bbox && rec.keywords) {
        auto again = backends.detector->detect(term, *rec.keywords, first);
        rec.has_scores = rec.has_scores || !again.empty();
        rec.bbox = best_box(again, first, options.valid_score);
      }
    }
  }
  if (rec.bbox) rec.top_crop = first.crop(*rec.bbox);
  return rec;
}

void make_masks(std::vector<GroundingRecord>& records, const Frame& first, const BackendSuite& backends,
                const EventSink& events) {
  int w = first.raster.width(), h = first.raster.height();
  for (auto& r : records) {
    if (!r.bbox) continue;
    std::optional<Mask> mask;
    std::string failure;
    try {
      auto m = backends.segmenter->segment(first, *r.bbox);
      if (m.width() != w || m.height() != h) {
        failure = "segmenter mask geometry mismatch";
      } else if (m.empty()) {
        failure = "segmenter returned an empty mask";
      } else {
        mask = std::move(m);
      }
    } catch (const Error& e) {
      failure = e.what();
    }
    if (!mask) {
      mask = Mask::from_box(*r.bbox, w, h);
      r.mask_from_box = true;
      if (events) events("segment_fallback", r.term + ": " + failure);
    }
    r.mask = std::move(mask);
  }
}

void attach_colors(std::vector<GroundingRecord>& records, const ColorAssignment& colors) {
  for (auto& r : records) {
    r.color.reset();
    if (!r.mask) continue;
    if (const auto* e = colors.find(r.term)) r.color = e->color.name;
  }
}

Frame compose_overlay(const Frame& frame, const std::vector<ColorLayer>& layers, double alpha) {
  Frame out = frame;
  out.layers = layers;
  auto blend = [alpha](std::uint8_t f, std::uint8_t c) {
    return static_cast<std::uint8_t>(std::lround((1.0 - alpha) * f + alpha * c));
  };
  int w = out.raster.width(), h = out.raster.height();
  for (const auto& layer : layers) {
    if (layer.mask.width() != w || layer.mask.height() != h) continue;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!layer.mask.get(x, y)) continue;
        auto p = out.raster.at(x, y);
        out.raster.set(x, y, {blend(p.r, layer.rgb.r), blend(p.g, layer.rgb.g), blend(p.b, layer.rgb.b)});
      }
  }
  return out;
}

MaskFlow::MaskFlow(const BackendSuite& backends, const Frame& first, const std::vector<GroundingRecord>& records,
                   const ColorAssignment& colors, double alpha)
    : backends_(backends), alpha_(alpha) {
  for (bool objects : {false, true}) {
    for (const auto& e : colors.entries) {
      if (e.is_object != objects) continue;
      auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.term == e.term; });
      if (it == records.end() || !it->mask || !it->color) continue;
      layers_.push_back({e.color.name, e.color.rgb, e.term, *it->mask});
    }
  }
  if (layers_.empty()) return;
  std::vector<Mask> masks;
  for (const auto& l : layers_) masks.push_back(l.mask);
  session_ = backends_.vos->init(first, masks);
}

Frame MaskFlow::overlay(const Frame& frame, bool* frozen) {
  if (frozen) *frozen = false;
  if (layers_.empty()) return compose_overlay(frame, {}, alpha_);
  try {
    auto masks = backends_.vos->step(session_, frame);
    if (masks.size() != layers_.size()) throw Error(ErrorCode::protocol_error, "vos returned a wrong mask count");
    for (std::size_t i = 0; i < masks.size(); ++i) layers_[i].mask = std::move(masks[i]);
  } catch (const Error&) {
    if (frozen) *frozen = true;
  }
  return compose_overlay(frame, layers_, alpha_);
}

}  // namespace oodagent::vision
