#ifndef VMA_VERIFICATION_HPP_
#define VMA_VERIFICATION_HPP_

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "vma/map_json.hpp"
#include "vma/pipeline.hpp"

namespace vma {

enum class ElementStatus { Auto, Accepted, Edited, Deleted };

inline const char* to_string(ElementStatus s) {
  switch (s) {
    case ElementStatus::Auto: return "auto";
    case ElementStatus::Accepted: return "accepted";
    case ElementStatus::Edited: return "edited";
    case ElementStatus::Deleted: return "deleted";
  }
  return "auto";
}

/// Human verification state over one map. Every mutation is appended to a
/// journal (JSON lines); replaying the journal over the original map gives
/// the same state, hence the same export bytes.
///
/// Reads may run concurrently; mutations are serialized.
class VerificationSession {
 public:
  explicit VerificationSession(VectorizedMap map, std::filesystem::path journal_path = {},
                               std::optional<json> report = std::nullopt, std::string source = {})
      : frame_(map.frame()),
        elements_(map.elements()),
        status_(elements_.size(), ElementStatus::Auto),
        journal_path_(std::move(journal_path)),
        report_(std::move(report)),
        source_(std::move(source)) {
    if (!journal_path_.empty()) {
      if (journal_path_.has_parent_path()) std::filesystem::create_directories(journal_path_.parent_path());
      std::ofstream truncate(journal_path_, std::ios::binary | std::ios::trunc);
      if (!truncate) throw Error(ErrorCode::Io, "cannot write journal '" + journal_path_.string() + "'");
    }
  }

  json map_json() const {
    std::shared_lock lock(mu_);
    json j = map_to_json(VectorizedMap(frame_, elements_));
    for (std::size_t i = 0; i < elements_.size(); ++i) j["elements"][i]["status"] = to_string(status_[i]);
    return j;
  }

  std::optional<json> element_json(const std::string& id) const {
    std::shared_lock lock(mu_);
    const auto i = index_of(id);
    if (!i) return std::nullopt;
    json j = element_to_json(elements_[*i]);
    j["status"] = to_string(status_[*i]);
    return j;
  }

  const std::optional<json>& report() const { return report_; }

  /// Replaces the points (and attrs / confidence, when given) of an element.
  /// Returns nullopt for an unknown id; throws Error for a body that is
  /// malformed (Parse) or yields an invalid element (InvalidGeometry).
  std::optional<json> patch(const std::string& id, const json& body) {
    std::unique_lock lock(mu_);
    const auto i = index_of(id);
    if (!i) return std::nullopt;
    if (status_[*i] == ElementStatus::Deleted)
      throw Error(ErrorCode::InvalidArgument, "element '" + id + "' is deleted");
    if (!body.is_object()) throw Error(ErrorCode::Parse, "patch body must be an element object");
    const MapElement& cur = elements_[*i];
    json merged = element_to_json(cur);
    for (const char* key : {"id", "kind", "semantic"})
      if (auto it = body.find(key); it != body.end() && *it != merged[key])
        throw Error(ErrorCode::InvalidArgument, std::string("patch may not change ") + key);
    if (!body.contains("points")) throw Error(ErrorCode::Parse, "patch body needs points");
    for (const char* key : {"points", "attrs", "confidence"})
      if (auto it = body.find(key); it != body.end()) merged[key] = *it;
    MapElement next = element_from_json(merged, ParseMode::Strict);
    append({{"op", "patch"}, {"id", id}, {"element", element_to_json(next)}});
    elements_[*i] = std::move(next);
    status_[*i] = ElementStatus::Edited;
    json out = element_to_json(elements_[*i]);
    out["status"] = to_string(status_[*i]);
    return out;
  }

  /// Marks an element accepted or deleted. Returns false for an unknown id.
  bool set_status(const std::string& id, const std::string& status) {
    ElementStatus s;
    if (status == "accepted") s = ElementStatus::Accepted;
    else if (status == "deleted") s = ElementStatus::Deleted;
    else throw Error(ErrorCode::InvalidArgument, "status must be 'accepted' or 'deleted', got '" + status + "'");
    std::unique_lock lock(mu_);
    const auto i = index_of(id);
    if (!i) return false;
    append({{"op", "status"}, {"id", id}, {"status", status}});
    status_[*i] = s;
    return true;
  }

  struct Summary {
    std::size_t accepted = 0, edited = 0, deleted = 0, untouched = 0;
  };

  Summary summary() const {
    std::shared_lock lock(mu_);
    return summary_locked();
  }

  /// The verified map: deleted elements dropped, a status on every element,
  /// and a provenance block marking it eligible as extra training data.
  json export_json() const {
    std::shared_lock lock(mu_);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["frame"] = frame_to_json(frame_);
    json elements = json::array();
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      if (status_[i] == ElementStatus::Deleted) continue;
      json e = element_to_json(elements_[i]);
      e["status"] = to_string(status_[i]);
      elements.push_back(std::move(e));
    }
    j["elements"] = std::move(elements);
    const auto s = summary_locked();
    j["provenance"] = {{"verified", true},
                       {"training_eligible", true},
                       {"source", source_},
                       {"journal_entries", seq_},
                       {"summary", summary_to_json(s)}};
    return j;
  }

  /// Writes verified.json and verified.manifest.json into `dir`; returns the map path.
  std::filesystem::path export_to(const std::filesystem::path& dir) const {
    const json doc = export_json();
    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["tool_version"] = kToolVersion;
    manifest["source"] = source_;
    manifest["summary"] = doc["provenance"]["summary"];
    {
      std::shared_lock lock(mu_);
      json status = json::object();
      for (std::size_t i = 0; i < elements_.size(); ++i) status[elements_[i].id()] = to_string(status_[i]);
      manifest["element_status"] = std::move(status);
      if (!journal_path_.empty()) manifest["journal"] = journal_path_.string();
    }
    const auto path = dir / "verified.json";
    write_json_file(path, doc);
    write_json_file(dir / "verified.manifest.json", manifest);
    return path;
  }

  static json summary_to_json(const Summary& s) {
    return {{"accepted", s.accepted}, {"edited", s.edited}, {"deleted", s.deleted}, {"auto", s.untouched}};
  }

  /// Applies journal lines to a fresh session over `original`.
  static std::unique_ptr<VerificationSession> replay(const VectorizedMap& original,
                                                     const std::vector<std::string>& journal_lines,
                                                     std::string source = {}) {
    auto owned = std::make_unique<VerificationSession>(original, std::filesystem::path{}, std::nullopt, std::move(source));
    auto& session = *owned;
    for (const auto& line : journal_lines) {
      if (line.empty()) continue;
      json entry;
      try {
        entry = json::parse(line);
      } catch (const json::parse_error& ex) {
        throw Error(ErrorCode::Parse, std::string("journal: ") + ex.what());
      }
      const auto op = json_detail::string(json_detail::require(entry, "op", "journal entry"), "op");
      const auto id = json_detail::string(json_detail::require(entry, "id", "journal entry"), "id");
      bool known;
      if (op == "patch") known = session.patch(id, json_detail::require(entry, "element", "journal entry")).has_value();
      else if (op == "status") known = session.set_status(id, json_detail::string(entry.at("status"), "status"));
      else throw Error(ErrorCode::Parse, "unknown journal op '" + op + "'");
      if (!known) throw Error(ErrorCode::Parse, "journal refers to unknown element '" + id + "'");
    }
    return owned;
  }

  static std::vector<std::string> read_journal(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open journal '" + path.string() + "'");
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
  }

 private:
  std::optional<std::size_t> index_of(const std::string& id) const {
    for (std::size_t i = 0; i < elements_.size(); ++i)
      if (elements_[i].id() == id) return i;
    return std::nullopt;
  }

  Summary summary_locked() const {
    Summary s;
    for (auto st : status_) {
      switch (st) {
        case ElementStatus::Accepted: ++s.accepted; break;
        case ElementStatus::Edited: ++s.edited; break;
        case ElementStatus::Deleted: ++s.deleted; break;
        case ElementStatus::Auto: ++s.untouched; break;
      }
    }
    return s;
  }

  // Caller holds the unique lock.
  void append(json entry) {
    entry["seq"] = ++seq_;
    if (journal_path_.empty()) return;
    std::ofstream out(journal_path_, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot append to journal '" + journal_path_.string() + "'");
    out << entry.dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "journal write failed");
  }

  Frame frame_;
  std::vector<MapElement> elements_;
  std::vector<ElementStatus> status_;
  std::filesystem::path journal_path_;
  std::optional<json> report_;
  std::string source_;
  std::size_t seq_ = 0;
  mutable std::shared_mutex mu_;
};

}  // namespace vma

#endif  // VMA_VERIFICATION_HPP_
