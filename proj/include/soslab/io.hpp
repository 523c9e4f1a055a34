#pragma once

// Field snapshots, content hashes and report files.
//
// Snapshot format, version 1, little-endian:
//   "SOSF"  magic
//   u32     version
//   u32     d
//   u8      convention tag (CubeConvention)
//   i64[d]  lo
//   i64[d]  hi
//   u8      payload kind (SnapshotKind)
//   f64[]   values in VertexFunction / EdgeFunction slot order

#include <cstdint>
#include <filesystem>
#include "json.hpp"
#include <string>
#include <vector>

#include "soslab/field.hpp"

namespace soslab {

enum class SnapshotKind : std::uint8_t { phi_dirichlet = 0, phi_free = 1, tau = 2 };

inline constexpr std::uint32_t kSnapshotVersion = 1;

std::string encode_snapshot(const PhiField& phi);
std::string encode_snapshot(const TauField& tau);
// Throws IoError naming `source` on any malformed or non-finite content.
PhiField decode_phi_snapshot(const std::string& bytes, const std::string& source = "snapshot");
TauField decode_tau_snapshot(const std::string& bytes, const std::string& source = "snapshot");

void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// Hex SHA-1 of "blob <size>\0" + bytes, as git computes object ids.
std::string git_blob_hash(const std::string& bytes);

// Every report carries the config hash and the seed.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

class CsvWriter {
 public:
  CsvWriter(const Provenance& p, std::vector<std::string> columns);
  CsvWriter& row(const std::vector<double>& values);
  CsvWriter& row(const std::vector<std::string>& values);
  std::string str() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

std::string format_number(double v);
// JSON with the provenance fields, keys sorted, two-space indentation.
std::string json_report(const Provenance& p, nlohmann::json body);
// Non-finite numbers become strings ("nan", "inf", "-inf") so the JSON stays valid.
nlohmann::json json_number(double v);

}  // namespace soslab
