#pragma once

#include "oodagent/image.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace oodagent {

// Closed vocabulary of the action model. Labels are normalized
// (lowercase, single spaces), sorted and unique.
class KnownList {
 public:
  KnownList() = default;
  explicit KnownList(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  bool empty() const { return labels_.empty(); }
  std::size_t size() const { return labels_.size(); }
  bool contains(std::string_view label) const;

  friend bool operator==(const KnownList&, const KnownList&) = default;

 private:
  std::vector<std::string> labels_;
};

// Tokenizes and POS-tags each sentence, keeping nouns and adjacent
// modifier+noun pairs. Throws invalid_input on an empty corpus or an
// empty sentence.
KnownList build_known_list(const std::vector<std::string>& corpus);

struct VisionEntry {
  std::string term;
  std::vector<std::string> keywords;
  std::optional<Image> collage;
  std::vector<Image> raw_images;

  friend bool operator==(const VisionEntry&, const VisionEntry&) = default;
};

// Vision memory, text memory (replace map) and the KnownList. Reads take a
// shared lock, writes an exclusive one; save() additionally holds an
// advisory lock file under the root so separate processes do not interleave.
class MemoryStore {
 public:
  MemoryStore() = default;
  explicit MemoryStore(KnownList known);
  MemoryStore(const MemoryStore& other);
  MemoryStore& operator=(const MemoryStore& other);

  KnownList known_list() const;
  void set_known_list(KnownList known);

  std::optional<VisionEntry> vision(std::string_view term) const;
  void put_vision(VisionEntry entry);
  std::vector<std::string> vision_terms() const;

  std::optional<std::string> replacement(std::string_view term) const;
  // Throws invalid_input unless `label` is a KnownList member.
  void put_replacement(std::string_view term, std::string_view label);
  std::map<std::string, std::string> replace_map() const;

  // Drops every vision entry and replace-map key whose term is not in `id_terms`.
  void reset_ood(const KnownList& id_terms);

  static MemoryStore load(const std::filesystem::path& root);
  void save(const std::filesystem::path& root) const;

  friend bool operator==(const MemoryStore& a, const MemoryStore& b);

 private:
  mutable std::shared_mutex mu_;
  KnownList known_;
  std::map<std::string, VisionEntry> vision_;
  std::map<std::string, std::string> replace_;
};

}  // namespace oodagent
