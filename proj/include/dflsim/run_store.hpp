#pragma once

// Directory-backed store for datasets and run records. Everything is plain
// JSON / CSV text so a deployment can be audited with a text editor.
//
//   <root>/datasets/<id>/{meta.json, codebook.json, data.csv}
//   <root>/runs/<id>/{record.json, result.json}
//
// result.json is written once and never touched again.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dflsim/survey_data.hpp"

namespace dflsim {

enum class RunKind { Profile, Training, Simulation };

inline std::string to_string(RunKind k) {
  switch (k) {
    case RunKind::Profile: return "profile";
    case RunKind::Training: return "training";
    case RunKind::Simulation: return "simulation";
  }
  return "?";
}

inline RunKind parse_run_kind(std::string_view s) {
  if (s == "profile") return RunKind::Profile;
  if (s == "training") return RunKind::Training;
  if (s == "simulation") return RunKind::Simulation;
  throw ValidationError("unknown run kind '" + std::string(s) + "'");
}

inline std::string id_prefix(RunKind k) {
  switch (k) {
    case RunKind::Profile: return "profile";
    case RunKind::Training: return "model";
    case RunKind::Simulation: return "sim";
  }
  return "run";
}

struct RunRecord {
  std::string id;
  RunKind kind = RunKind::Simulation;
  std::string status = "done";  // running | done | failed
  json request = json::object();
  json fingerprints = json::object();
  std::string created_at;
  std::string error;

  json to_json() const {
    json j{{"id", id},
           {"kind", to_string(kind)},
           {"status", status},
           {"request", request},
           {"fingerprints", fingerprints},
           {"created_at", created_at}};
    if (!error.empty()) j["error"] = error;
    return j;
  }

  static RunRecord from_json(const json& j) {
    RunRecord r;
    r.id = j.at("id").get<std::string>();
    r.kind = parse_run_kind(j.at("kind").get<std::string>());
    r.status = j.at("status").get<std::string>();
    r.request = j.at("request");
    r.fingerprints = j.value("fingerprints", json::object());
    r.created_at = j.value("created_at", std::string());
    r.error = j.value("error", std::string());
    return r;
  }
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class RunStore {
 public:
  /// Creates the directory tree and checks it is writable. Runs left
  /// "running" by a previous process are marked failed.
  explicit RunStore(std::filesystem::path root) : root_(std::move(root)) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(root_ / "datasets", ec);
    fs::create_directories(root_ / "runs", ec);
    if (ec) throw Error("cannot create data directory '" + root_.string() + "': " + ec.message());
    const auto probe = root_ / ".probe";
    try {
      write_text_file(probe.string(), "ok");
    } catch (const Error&) {
      throw Error("data directory '" + root_.string() + "' is not writable");
    }
    fs::remove(probe, ec);
    for (const auto& e : fs::directory_iterator(root_ / "datasets")) note_id(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(root_ / "runs")) {
      note_id(e.path().filename().string());
      auto rec = load_record(e.path().filename().string());
      if (rec && rec->status == "running") {
        rec->status = "failed";
        rec->error = "interrupted by service restart";
        write_atomic(e.path() / "record.json", rec->to_json().dump(2) + "\n");
      }
    }
  }

  const std::filesystem::path& root() const { return root_; }

  // ---- datasets

  /// Persists a dataset and its metadata; returns the new id.
  std::string add_dataset(const Dataset& dataset, json meta) {
    std::lock_guard lock(mutex_);
    const auto id = next_id_locked("ds");
    const auto dir = root_ / "datasets" / id;
    std::filesystem::create_directories(dir);
    meta["id"] = id;
    write_atomic(dir / "codebook.json", dataset.codebook().to_json().dump(2) + "\n");
    write_atomic(dir / "data.csv", dataset.to_csv());
    write_atomic(dir / "meta.json", meta.dump(2) + "\n");
    datasets_[id] = std::make_shared<const Dataset>(dataset);
    return id;
  }

  std::optional<json> dataset_meta(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    const auto p = root_ / "datasets" / id / "meta.json";
    if (!std::filesystem::exists(p)) return std::nullopt;
    return json::parse(read_text_file(p.string()));
  }

  std::vector<json> list_datasets() const {
    std::vector<json> out;
    for (const auto& id : sorted_ids(root_ / "datasets"))
      if (auto m = dataset_meta(id)) out.push_back(*m);
    return out;
  }

  std::shared_ptr<const Dataset> dataset(const std::string& id) {
    std::lock_guard lock(mutex_);
    if (auto it = datasets_.find(id); it != datasets_.end()) return it->second;
    if (!valid_id(id)) return nullptr;
    const auto dir = root_ / "datasets" / id;
    if (!std::filesystem::exists(dir / "meta.json")) return nullptr;
    const auto meta = json::parse(read_text_file((dir / "meta.json").string()));
    Provenance prov;
    const auto& p = meta.at("provenance");
    prov.kind = p.at("kind") == "synthetic" ? ProvenanceKind::Synthetic : ProvenanceKind::Ingested;
    if (p.contains("seed") && !p["seed"].is_null()) prov.seed = p["seed"].get<std::uint64_t>();
    auto ds = std::make_shared<const Dataset>(Dataset::from_csv(
        load_codebook((dir / "codebook.json").string()), read_text_file((dir / "data.csv").string()), prov));
    datasets_[id] = ds;
    return ds;
  }

  // ---- runs

  /// Assigns an id and creation time, then writes record.json.
  RunRecord create_run(RunKind kind, json request, json fingerprints, std::string status = "running") {
    std::lock_guard lock(mutex_);
    RunRecord r;
    r.id = next_id_locked(id_prefix(kind));
    r.kind = kind;
    r.status = std::move(status);
    r.request = std::move(request);
    r.fingerprints = std::move(fingerprints);
    r.created_at = utc_timestamp();
    std::filesystem::create_directories(root_ / "runs" / r.id);
    write_atomic(root_ / "runs" / r.id / "record.json", r.to_json().dump(2) + "\n");
    return r;
  }

  /// Writes the result once and marks the run done.
  void complete_run(const std::string& id, const std::string& result, const json& extra_fingerprints = json::object()) {
    std::lock_guard lock(mutex_);
    auto rec = load_record(id);
    if (!rec) throw Error("unknown run '" + id + "'");
    const auto path = root_ / "runs" / id / "result.json";
    if (std::filesystem::exists(path)) throw Error("result of run '" + id + "' already written");
    write_atomic(path, result);
    rec->status = "done";
    for (auto it = extra_fingerprints.begin(); it != extra_fingerprints.end(); ++it)
      rec->fingerprints[it.key()] = it.value();
    write_atomic(root_ / "runs" / id / "record.json", rec->to_json().dump(2) + "\n");
  }

  void fail_run(const std::string& id, const std::string& error) {
    std::lock_guard lock(mutex_);
    auto rec = load_record(id);
    if (!rec) return;
    rec->status = "failed";
    rec->error = error;
    write_atomic(root_ / "runs" / id / "record.json", rec->to_json().dump(2) + "\n");
  }

  std::optional<RunRecord> record(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return load_record(id);
  }

  /// Stored bytes of a completed run.
  std::optional<std::string> result(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    const auto p = root_ / "runs" / id / "result.json";
    if (!std::filesystem::exists(p)) return std::nullopt;
    return read_text_file(p.string());
  }

  std::vector<RunRecord> list_runs(std::optional<RunKind> kind = std::nullopt) const {
    std::lock_guard lock(mutex_);
    std::vector<RunRecord> out;
    for (const auto& id : sorted_ids(root_ / "runs"))
      if (auto r = load_record(id); r && (!kind || r->kind == *kind)) out.push_back(*r);
    return out;
  }

 private:
  static bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-')) return false;
    return true;
  }

  std::optional<RunRecord> load_record(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    const auto p = root_ / "runs" / id / "record.json";
    if (!std::filesystem::exists(p)) return std::nullopt;
    return RunRecord::from_json(json::parse(read_text_file(p.string())));
  }

  // ids are <prefix>-<6 digits>; ordering by name is creation order
  static std::vector<std::string> sorted_ids(const std::filesystem::path& dir) {
    std::vector<std::string> ids;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_directory()) ids.push_back(e.path().filename().string());
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
      const auto na = a.substr(a.rfind('-') + 1), nb = b.substr(b.rfind('-') + 1);
      return na != nb ? na < nb : a < b;
    });
    return ids;
  }

  void note_id(const std::string& id) {
    const auto dash = id.rfind('-');
    if (dash == std::string::npos) return;
    if (auto n = detail::parse_number(id.substr(dash + 1)))
      counter_ = std::max(counter_, static_cast<std::uint64_t>(*n));
  }

  // one counter across kinds keeps ids globally ordered
  std::string next_id_locked(const std::string& prefix) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(++counter_));
    return prefix + "-" + buf;
  }

  static void write_atomic(const std::filesystem::path& path, std::string_view text) {
    auto tmp = path;
    tmp += ".tmp";
    write_text_file(tmp.string(), text);
    std::filesystem::rename(tmp, path);
  }

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::uint64_t counter_ = 0;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
};

}  // namespace dflsim
