#include "phaselab/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "phaselab/error.hpp"

namespace phaselab {

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

constexpr std::size_t kHeader = 64;

template <class T>
void put(std::string& buf, std::size_t at, T v) {
  std::memcpy(buf.data() + at, &v, sizeof(T));
}

template <class T>
T get(const std::string& buf, std::size_t at) {
  T v;
  std::memcpy(&v, buf.data() + at, sizeof(T));
  return v;
}

}  // namespace

std::string encode_snapshot(const Field& f, SnapshotKind kind) {
  const Grid& g = f.grid();
  std::string buf(kHeader, '\0');
  std::memcpy(buf.data(), "PLFD", 4);
  put<std::uint16_t>(buf, 4, kSnapshotVersion);
  put<std::uint8_t>(buf, 6, static_cast<std::uint8_t>(g.n));
  put<std::uint8_t>(buf, 7, static_cast<std::uint8_t>(f.m()));
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(buf, 8 + 4 * a, static_cast<std::uint32_t>(g.shape[a]));
  put<double>(buf, 20, g.h);
  for (int a = 0; a < 3; ++a) put<double>(buf, 28 + 8 * a, g.origin[a]);
  put<std::uint32_t>(buf, 52, static_cast<std::uint32_t>(kind));
  put<std::uint64_t>(buf, 56, 0);
  const auto& v = f.values();
  buf.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  for (NodeTag t : f.mask()) buf.push_back(static_cast<char>(t));
  return buf;
}

Field decode_snapshot(const std::string& buf, SnapshotKind* kind) {
  if (buf.size() < kHeader || std::memcmp(buf.data(), "PLFD", 4) != 0)
    throw FormatError("missing PLFD header");
  if (get<std::uint16_t>(buf, 4) != kSnapshotVersion) throw FormatError("unsupported snapshot version");
  const int n = get<std::uint8_t>(buf, 6);
  const int m = get<std::uint8_t>(buf, 7);
  std::array<int, 3> shape{};
  for (int a = 0; a < 3; ++a) shape[a] = static_cast<int>(get<std::uint32_t>(buf, 8 + 4 * a));
  std::array<double, 3> origin{};
  for (int a = 0; a < 3; ++a) origin[a] = get<double>(buf, 28 + 8 * a);
  const auto k = get<std::uint32_t>(buf, 52);
  if (k > 1) throw FormatError("unknown snapshot kind");
  Grid g;
  try {
    g = Grid::make(n, shape, get<double>(buf, 20), origin);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  if (m < 1 || m > kMaxComponents) throw FormatError("bad component count");
  const std::size_t nodes = g.size();
  if (buf.size() != kHeader + nodes * m * sizeof(double) + nodes) throw FormatError("truncated or oversized payload");
  Field f(g, m);
  std::memcpy(f.values().data(), buf.data() + kHeader, nodes * m * sizeof(double));
  const char* mask = buf.data() + kHeader + nodes * m * sizeof(double);
  for (std::size_t i = 0; i < nodes; ++i) {
    if (static_cast<unsigned char>(mask[i]) > 2) throw FormatError("bad mask byte");
    f.mask()[i] = static_cast<NodeTag>(mask[i]);
  }
  if (kind) *kind = static_cast<SnapshotKind>(k);
  return f;
}

void write_snapshot(const std::string& path, const Field& f, SnapshotKind kind) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string buf = encode_snapshot(f, kind);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("write failed for " + path);
}

Field read_snapshot(const std::string& path, SnapshotKind* kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open snapshot " + path);
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_snapshot(buf, kind);
}

}  // namespace phaselab
