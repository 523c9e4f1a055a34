#include "soslab/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "soslab/errors.hpp"

namespace soslab {

static_assert(std::endian::native == std::endian::little, "snapshot IO assumes a little-endian host");

namespace {

template <class T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <class T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) fail(std::string("truncated while reading ") + what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  [[noreturn]] void fail(const std::string& msg) const { throw IoError(source_ + ": corrupted snapshot: " + msg); }

 private:
  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

std::string encode(const LatticeBox& box, SnapshotKind kind, const std::vector<double>& values) {
  std::string out = "SOSF";
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(box.dim()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(box.convention()));
  for (int i = 0; i < box.dim(); ++i) put<std::int64_t>(out, box.lo()[i]);
  for (int i = 0; i < box.dim(); ++i) put<std::int64_t>(out, box.hi()[i]);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
  for (double v : values) put<double>(out, v);
  return out;
}

struct Decoded {
  LatticeBox box;
  SnapshotKind kind;
  std::vector<double> values;
};

Decoded decode(const std::string& bytes, const std::string& source, bool edges) {
  Reader r(bytes, source);
  if (bytes.size() < 4 || bytes.compare(0, 4, "SOSF") != 0) r.fail("bad magic");
  r.get<std::uint32_t>("magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kSnapshotVersion) r.fail("unsupported version " + std::to_string(version));
  const auto d = r.get<std::uint32_t>("dimension");
  if (d < 1 || d > kMaxDim) r.fail("dimension " + std::to_string(d));
  const auto tag = r.get<std::uint8_t>("convention");
  if (tag != static_cast<std::uint8_t>(CubeConvention::closed_box)) r.fail("fields must live on closed boxes");
  Coord lo{}, hi{};
  for (std::uint32_t i = 0; i < d; ++i) lo[i] = r.get<std::int64_t>("lo");
  for (std::uint32_t i = 0; i < d; ++i) hi[i] = r.get<std::int64_t>("hi");
  for (std::uint32_t i = 0; i < d; ++i)
    if (hi[i] < lo[i] || hi[i] - lo[i] > (1 << 20)) r.fail("box extents");
  const auto kind = r.get<std::uint8_t>("payload kind");
  if (kind > static_cast<std::uint8_t>(SnapshotKind::tau)) r.fail("payload kind " + std::to_string(kind));
  const bool is_tau = kind == static_cast<std::uint8_t>(SnapshotKind::tau);
  if (is_tau != edges) r.fail(edges ? "expected a τ payload" : "expected a φ payload");
  Decoded out{LatticeBox::box(static_cast<int>(d), lo, hi), static_cast<SnapshotKind>(kind), {}};
  std::size_t n = out.box.site_count() * (edges ? d : 1);
  if (r.remaining() != n * sizeof(double))
    r.fail("payload holds " + std::to_string(r.remaining()) + " bytes, expected " + std::to_string(n * sizeof(double)));
  out.values.resize(n);
  for (auto& v : out.values) {
    v = r.get<double>("values");
    if (!std::isfinite(v)) r.fail("non-finite value");
  }
  return out;
}

}  // namespace

std::string encode_snapshot(const PhiField& phi) {
  return encode(phi.box(), phi.bc() == BoundaryCondition::dirichlet_zero ? SnapshotKind::phi_dirichlet : SnapshotKind::phi_free,
                phi.values());
}

std::string encode_snapshot(const TauField& tau) { return encode(tau.box(), SnapshotKind::tau, tau.values()); }

PhiField decode_phi_snapshot(const std::string& bytes, const std::string& source) {
  auto d = decode(bytes, source, false);
  PhiField phi(d.box, d.kind == SnapshotKind::phi_dirichlet ? BoundaryCondition::dirichlet_zero : BoundaryCondition::free);
  phi.values() = std::move(d.values);
  try {
    phi.check_invariants();
  } catch (const DomainError& e) {
    throw IoError(source + ": corrupted snapshot: " + e.what());
  }
  return phi;
}

TauField decode_tau_snapshot(const std::string& bytes, const std::string& source) {
  auto d = decode(bytes, source, true);
  TauField tau(d.box);
  tau.values() = std::move(d.values);
  for (std::size_t k = 0; k < tau.values().size(); ++k) {
    const auto x = tau.indexer().coord(k / static_cast<std::size_t>(d.box.dim()));
    const Edge e{x, static_cast<int>(k % static_cast<std::size_t>(d.box.dim()))};
    if (!d.box.has_edge(e) && tau.values()[k] != 0.0) throw IoError(source + ": corrupted snapshot: value on a missing edge");
  }
  return tau;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string git_blob_hash(const std::string& bytes) {
  std::string blob = "blob " + std::to_string(bytes.size());
  blob.push_back('\0');
  blob += bytes;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) throw IoError("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const Provenance& p, std::vector<std::string> columns) : width_(columns.size()) {
  text_ = "# config_hash=" + p.config_hash + " seed=" + std::to_string(p.seed) + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
  text_ += '\n';
}

CsvWriter& CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> s;
  s.reserve(values.size());
  for (double v : values) s.push_back(format_number(v));
  return row(s);
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& values) {
  if (values.size() != width_) throw DomainError("CsvWriter: row width does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i) text_ += (i ? "," : "") + values[i];
  text_ += '\n';
  return *this;
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

std::string json_report(const Provenance& p, nlohmann::json body) {
  body["config_hash"] = p.config_hash;
  body["seed"] = p.seed;
  return body.dump(2) + "\n";
}

}  // namespace soslab
