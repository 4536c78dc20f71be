#include "report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "heavysum/errors.hpp"

#ifndef HEAVYSUM_VERSION
#define HEAVYSUM_VERSION "unknown"
#endif

namespace heavysum::cli {

namespace fs = std::filesystem;

namespace {

Json load_json(const fs::path& file) {
  std::ifstream f(file);
  if (!f) return Json();
  try {
    return Json::parse(f);
  } catch (const std::exception& e) {
    throw Error(file.string() + ": " + e.what());
  }
}

std::string utc_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace

Report Report::open(const ExperimentConfig& cfg, const fs::path& out) {
  Report r;
  r.file_ = out / "report.json";
  r.hash_ = cfg.hash();
  Json old = load_json(r.file_);
  r.doc_["provenance"] = {{"config_hash", r.hash_}, {"code_version", HEAVYSUM_VERSION}, {"config", cfg.canonical()}};
  if (cfg.timestamps) r.doc_["provenance"]["written_at"] = utc_now();
  r.doc_["sections"] = Json::object();
  if (old.is_object() && old.contains("provenance") && old["provenance"].value("config_hash", "") == r.hash_)
    r.doc_["sections"] = old["sections"];
  return r;
}

Report Report::read(const fs::path& out) {
  Report r;
  r.file_ = out / "report.json";
  r.doc_ = load_json(r.file_);
  if (!r.doc_.is_object()) r.doc_ = Json::object();
  if (!r.doc_.contains("provenance")) r.doc_["provenance"] = Json::object();
  if (!r.doc_.contains("sections")) r.doc_["sections"] = Json::object();
  return r;
}

void Report::set_section(const std::string& name, Json section) {
  section["config_hash"] = hash_;
  doc_["sections"][name] = std::move(section);
}

bool Report::all_pass() const {
  for (const auto& [name, s] : sections().items())
    if (!s.value("pass", false)) return false;
  return true;
}

void Report::save() const {
  fs::create_directories(file_.parent_path());
  fs::path tmp = file_;
  tmp += ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw Error("cannot write " + tmp.string());
    f << doc_.dump(2) << "\n";
  }
  fs::rename(tmp, file_);
}

}  // namespace heavysum::cli
