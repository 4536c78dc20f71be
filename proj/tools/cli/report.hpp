#pragma once

#include <filesystem>
#include <string>

#include "config.hpp"
#include "json.hpp"

namespace heavysum::cli {

using Json = nlohmann::ordered_json;

/// out/report.json: provenance plus one section per command or check.
/// Sections written under a different config hash are discarded on load.
class Report {
 public:
  static Report open(const ExperimentConfig& cfg, const std::filesystem::path& out);
  /// Reads whatever is on disk, without checking the hash.
  static Report read(const std::filesystem::path& out);

  void set_section(const std::string& name, Json section);
  const Json& sections() const { return doc_["sections"]; }
  const Json& provenance() const { return doc_["provenance"]; }
  bool empty() const { return sections().empty(); }
  bool all_pass() const;
  void save() const;

 private:
  std::filesystem::path file_;
  Json doc_;
  std::string hash_;
};

}  // namespace heavysum::cli
