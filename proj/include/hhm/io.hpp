#pragma once

// Result emission: CSV with fixed columns, JSON via nlohmann, SHA-256 via
// OpenSSL, write-temp-then-rename for every file.

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhm::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string out;
  for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("short write on " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// 17 significant digits round-trip; NaN and infinities spelled out
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

// non-finite doubles become strings in JSON
inline json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

class Csv {
public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += "\n";
  }
  void row(const std::vector<double>& v) {
    if (v.size() != cols_) throw std::invalid_argument("csv row width mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) text_ += (i ? "," : "") + num(v[i]);
    text_ += "\n";
  }
  // leading label columns
  void row(const std::vector<std::string>& labels, const std::vector<double>& v) {
    if (v.size() + labels.size() != cols_) throw std::invalid_argument("csv row width mismatch");
    for (std::size_t i = 0; i < labels.size(); ++i) text_ += (i ? "," : "") + labels[i];
    for (double x : v) text_ += (text_.back() == '\n' ? "" : ",") + num(x);
    text_ += "\n";
  }
  const std::string& str() const { return text_; }

private:
  std::size_t cols_;
  std::string text_;
};

struct EmittedFile {
  std::string name, schema, sha256;
};

// Collects the files of one run; the manifest goes last.
class RunWriter {
public:
  RunWriter(std::filesystem::path dir, std::string command, std::string config_text)
      : dir_(std::move(dir)), command_(std::move(command)), config_hash_(sha256_hex(config_text)) {
    std::filesystem::create_directories(dir_);
    // a stale manifest would mark an aborted rerun as complete
    std::filesystem::remove(dir_ / "manifest.json");
  }
  void write(const std::string& name, const std::string& schema, const std::string& bytes) {
    write_atomic(dir_ / name, bytes);
    files_.push_back({name, schema, sha256_hex(bytes)});
  }
  void write_csv(const std::string& name, const std::string& schema, const Csv& csv) { write(name, schema, csv.str()); }
  void write_json(const std::string& name, const std::string& schema, const json& j) { write(name, schema, j.dump(2) + "\n"); }
  void certificate(const std::string& id, bool pass) { certs_.push_back({{"id", id}, {"pass", pass}}); }
  void stat(const std::string& key, double v) { stats_[key] = jnum(v); }
  const std::string& config_hash() const { return config_hash_; }
  const std::filesystem::path& dir() const { return dir_; }

  // timing lives only here
  void finish(double wall_seconds, json extra = json::object()) {
    json files = json::array();
    for (const auto& f : files_)
      files.push_back({{"name", f.name}, {"schema", f.schema + "/v" + std::to_string(kSchemaVersion)}, {"sha256", f.sha256}});
    bool all = true;
    for (const auto& c : certs_) all = all && c["pass"].get<bool>();
    json m{{"command", command_},
           {"config_sha256", config_hash_},
           {"schema_version", kSchemaVersion},
           {"files", files},
           {"certificates", certs_},
           {"all_certificates_pass", all},
           {"stats", stats_},
           {"wall_clock_seconds", wall_seconds}};
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  }
  bool all_pass() const {
    for (const auto& c : certs_)
      if (!c["pass"].get<bool>()) return false;
    return true;
  }

private:
  std::filesystem::path dir_;
  std::string command_, config_hash_;
  std::vector<EmittedFile> files_;
  json certs_ = json::array();
  json stats_ = json::object();
};

} // namespace hhm::io
