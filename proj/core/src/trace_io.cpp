#include "sca/trace_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sca {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'A', 'F'};
constexpr uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "trace container I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("truncated trace file: " + path);
  return v;
}

}  // namespace

std::string manifest_path(const std::string& trace_path) { return trace_path + ".manifest"; }

void write_traces(const std::string& path, const TraceMatrix& set, const Manifest& manifest) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);

  os.write(kMagic, 4);
  put<uint16_t>(os, kVersion);
  put<uint32_t>(os, static_cast<uint32_t>(set.rows()));
  put<uint32_t>(os, static_cast<uint32_t>(set.cols()));
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    const auto& l = set.label(i);
    put<uint8_t>(os, static_cast<uint8_t>(l.key_byte));
    put<uint8_t>(os, static_cast<uint8_t>(l.plaintext_byte));
    put<uint16_t>(os, static_cast<uint16_t>(l.device_id));
    os.write(reinterpret_cast<const char*>(set.samples().row(i).data()),
             static_cast<std::streamsize>(sizeof(double)) * set.cols());
  }
  if (!os) throw IoError("write failed: " + path);

  if (!manifest.empty()) {
    std::ofstream ms(manifest_path(path), std::ios::trunc);
    if (!ms) throw IoError("cannot open for writing: " + manifest_path(path));
    for (const auto& [k, v] : manifest) ms << k << "=" << v << "\n";
    if (!ms) throw IoError("write failed: " + manifest_path(path));
  }
}

TraceMatrix read_traces(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a trace file (bad magic): " + path);
  }
  const auto version = get<uint16_t>(is, path);
  if (version != kVersion) {
    throw IoError("unsupported trace file version " + std::to_string(version) + ": " + path);
  }
  const auto m = get<uint32_t>(is, path);
  const auto n = get<uint32_t>(is, path);
  if (m == 0 || n == 0) throw IoError("empty trace file: " + path);

  Mat samples(m, n);
  std::vector<TraceLabel> labels(m);
  for (uint32_t i = 0; i < m; ++i) {
    labels[i].key_byte = get<uint8_t>(is, path);
    labels[i].plaintext_byte = get<uint8_t>(is, path);
    labels[i].device_id = get<uint16_t>(is, path);
    is.read(reinterpret_cast<char*>(samples.row(i).data()),
            static_cast<std::streamsize>(sizeof(double)) * n);
    if (!is) throw IoError("truncated trace file: " + path);
  }
  return TraceMatrix(std::move(samples), std::move(labels));
}

Manifest read_manifest(const std::string& path) {
  Manifest m;
  std::ifstream is(manifest_path(path));
  if (!is) return m;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) continue;
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

}  // namespace sca
