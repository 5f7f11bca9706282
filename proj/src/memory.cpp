#include "oodagent/memory.hpp"

#include "oodagent/error.hpp"
#include "oodagent/text.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

namespace oodagent {

namespace fs = std::filesystem;
using nlohmann::json;

KnownList::KnownList(std::vector<std::string> labels) {
  for (auto& l : labels) {
    auto n = text::normalize(l);
    if (!n.empty()) labels_.push_back(std::move(n));
  }
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
}

bool KnownList::contains(std::string_view label) const {
  return std::binary_search(labels_.begin(), labels_.end(), text::normalize(label));
}

MemoryStore::MemoryStore(KnownList known) : known_(std::move(known)) {}

MemoryStore::MemoryStore(const MemoryStore& other) {
  std::shared_lock lock(other.mu_);
  known_ = other.known_;
  vision_ = other.vision_;
  replace_ = other.replace_;
}

MemoryStore& MemoryStore::operator=(const MemoryStore& other) {
  if (this == &other) return *this;
  MemoryStore copy(other);
  std::unique_lock lock(mu_);
  known_ = std::move(copy.known_);
  vision_ = std::move(copy.vision_);
  replace_ = std::move(copy.replace_);
  return *this;
}

KnownList MemoryStore::known_list() const {
  std::shared_lock lock(mu_);
  return known_;
}

void MemoryStore::set_known_list(KnownList known) {
  std::unique_lock lock(mu_);
  known_ = std::move(known);
}

std::optional<VisionEntry> MemoryStore::vision(std::string_view term) const {
  std::shared_lock lock(mu_);
  auto it = vision_.find(text::normalize(term));
  if (it == vision_.end()) return std::nullopt;
  return it->second;
}

void MemoryStore::put_vision(VisionEntry entry) {
  if (entry.keywords.empty()) throw Error(ErrorCode::invalid_input, "vision entry without keywords");
  entry.term = text::normalize(entry.term);
  std::unique_lock lock(mu_);
  auto key = entry.term;
  vision_[key] = std::move(entry);
}

std::vector<std::string> MemoryStore::vision_terms() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [k, v] : vision_) out.push_back(k);
  return out;
}

std::optional<std::string> MemoryStore::replacement(std::string_view term) const {
  std::shared_lock lock(mu_);
  auto it = replace_.find(text::normalize(term));
  if (it == replace_.end()) return std::nullopt;
  return it->second;
}

void MemoryStore::put_replacement(std::string_view term, std::string_view label) {
  std::unique_lock lock(mu_);
  if (!known_.contains(label))
    throw Error(ErrorCode::invalid_input, "replacement '" + std::string(label) + "' is not in the KnownList");
  replace_[text::normalize(term)] = text::normalize(label);
}

std::map<std::string, std::string> MemoryStore::replace_map() const {
  std::shared_lock lock(mu_);
  return replace_;
}

void MemoryStore::reset_ood(const KnownList& id_terms) {
  std::unique_lock lock(mu_);
  std::erase_if(vision_, [&](const auto& kv) { return !id_terms.contains(kv.first); });
  std::erase_if(replace_, [&](const auto& kv) { return !id_terms.contains(kv.first); });
}

bool operator==(const MemoryStore& a, const MemoryStore& b) {
  if (&a == &b) return true;
  std::shared_lock la(a.mu_), lb(b.mu_);
  return a.known_ == b.known_ && a.vision_ == b.vision_ && a.replace_ == b.replace_;
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::load_failure, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::load_failure, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& body) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::invalid_input, "cannot write " + tmp.string());
    out << body;
  }
  fs::rename(tmp, path);
}

class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw Error(ErrorCode::invalid_input, "cannot open lock file " + path.string());
    ::flock(fd_, LOCK_EX);
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

MemoryStore MemoryStore::load(const fs::path& root) {
  MemoryStore store;
  if (!fs::exists(root)) {
    fs::create_directories(root);
    return store;
  }
  auto known_path = root / "known_list.json";
  if (fs::exists(known_path)) {
    auto j = read_json(known_path);
    if (!j.is_array()) throw Error(ErrorCode::load_failure, known_path.string() + ": expected a string array");
    try {
      store.known_ = KnownList(j.get<std::vector<std::string>>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::load_failure, known_path.string() + ": " + e.what());
    }
  }
  auto map_path = root / "memory" / "replace_map.json";
  if (fs::exists(map_path)) {
    auto j = read_json(map_path);
    if (!j.is_object()) throw Error(ErrorCode::load_failure, map_path.string() + ": expected an object");
    for (const auto& [k, v] : j.items()) {
      if (!v.is_string()) throw Error(ErrorCode::load_failure, map_path.string() + ": non-string value for " + k);
      auto label = v.get<std::string>();
      if (!store.known_.contains(label))
        throw Error(ErrorCode::load_failure, map_path.string() + ": value '" + label + "' not in KnownList");
      store.replace_[text::normalize(k)] = text::normalize(label);
    }
  }
  auto vision_dir = root / "memory" / "vision";
  if (fs::exists(vision_dir)) {
    std::vector<fs::path> dirs;
    for (const auto& d : fs::directory_iterator(vision_dir))
      if (d.is_directory()) dirs.push_back(d.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      auto kw_path = dir / "keywords.json";
      auto j = read_json(kw_path);
      VisionEntry e;
      try {
        e.term = text::normalize(j.at("term").get<std::string>());
        e.keywords = j.at("keywords").get<std::vector<std::string>>();
      } catch (const json::exception& ex) {
        throw Error(ErrorCode::load_failure, kw_path.string() + ": " + ex.what());
      }
      if (e.keywords.empty()) throw Error(ErrorCode::load_failure, kw_path.string() + ": empty keyword list");
      if (fs::exists(dir / "collage.png")) e.collage = read_png(dir / "collage.png");
      for (int i = 0; fs::exists(dir / ("img_" + std::to_string(i) + ".png")); ++i)
        e.raw_images.push_back(read_png(dir / ("img_" + std::to_string(i) + ".png")));
      auto key = e.term;
      store.vision_[key] = std::move(e);
    }
  }
  return store;
}

void MemoryStore::save(const fs::path& root) const {
  fs::create_directories(root / "memory" / "vision");
  FileLock lock_file(root / ".lock");
  std::shared_lock lock(mu_);

  write_text(root / "known_list.json", json(known_.labels()).dump(2) + "\n");
  json map = json::object();
  for (const auto& [k, v] : replace_) map[k] = v;
  write_text(root / "memory" / "replace_map.json", map.dump(2) + "\n");

  auto vision_dir = root / "memory" / "vision";
  fs::remove_all(vision_dir);
  fs::create_directories(vision_dir);
  std::set<std::string> used;
  for (const auto& [term, e] : vision_) {
    auto base = text::slugify(term);
    auto slug = base;
    for (int n = 2; used.count(slug); ++n) slug = base + "_" + std::to_string(n);
    used.insert(slug);
    auto dir = vision_dir / slug;
    fs::create_directories(dir);
    json kw = {{"term", e.term}, {"keywords", e.keywords}};
    write_text(dir / "keywords.json", kw.dump(2) + "\n");
    if (e.collage) write_png(dir / "collage.png", *e.collage);
    for (std::size_t i = 0; i < e.raw_images.size(); ++i)
      write_png(dir / ("img_" + std::to_string(i) + ".png"), e.raw_images[i]);
  }
}

}  // namespace oodagent
