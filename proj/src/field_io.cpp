#include "homoglab/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "homoglab/errors.hpp"

namespace homog {

static_assert(std::endian::native == std::endian::little,
              "field files are written by memcpy on little-endian hosts");

namespace {

constexpr char kMagic[4] = {'H', 'L', 'F', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

void put_i32(std::string& s, std::int32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  s.append(b, 4);
}

std::int32_t get_i32(const std::string& s, std::size_t off) {
  std::int32_t v;
  std::memcpy(&v, s.data() + off, 4);
  return v;
}

}  // namespace

std::string encode_field(const DiscreteField& f) {
  std::string s(kMagic, 4);
  const Grid& g = f.grid();
  put_i32(s, g.dim());
  put_i32(s, g.n());
  put_i32(s, static_cast<int>(f.rank()) + 16 * static_cast<int>(f.location()));
  put_i32(s, static_cast<int>(g.topology()));
  const std::size_t bytes = f.size() * sizeof(double);
  const std::size_t off = s.size();
  s.resize(off + bytes);
  std::memcpy(s.data() + off, f.data(), bytes);
  return s;
}

DiscreteField decode_field(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes)
    throw FormatError("field file: truncated header", static_cast<std::int64_t>(bytes.size()));
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("field file: bad magic", 0);
  const int dim = get_i32(bytes, 4);
  const int n = get_i32(bytes, 8);
  const int code = get_i32(bytes, 12);
  const int topo = get_i32(bytes, 16);
  if (dim != 2) throw FormatError("field file: unsupported dim " + std::to_string(dim), 4);
  if (n < 8 || n % 2 != 0 || n > (1 << 16))
    throw FormatError("field file: invalid extent N " + std::to_string(n), 8);
  const int rank = code % 16, loc = code / 16;
  if (code < 0 || rank > 3 || loc > 2)
    throw FormatError("field file: invalid rank code " + std::to_string(code), 12);
  if (topo != 0 && topo != 1)
    throw FormatError("field file: invalid topology code " + std::to_string(topo), 16);
  const Grid grid(n, static_cast<Topology>(topo), dim);
  DiscreteField f(grid, static_cast<Rank>(rank), static_cast<Location>(loc));
  const std::size_t need = f.size() * sizeof(double);
  if (bytes.size() < kHeaderBytes + need)
    throw FormatError("field file: truncated payload (expected " + std::to_string(need) +
                          " bytes)",
                      static_cast<std::int64_t>(bytes.size()));
  if (bytes.size() > kHeaderBytes + need)
    throw FormatError("field file: trailing bytes after payload",
                      static_cast<std::int64_t>(kHeaderBytes + need));
  std::memcpy(f.data(), bytes.data() + kHeaderBytes, need);
  if (!f.all_finite()) throw FormatError("field file: non-finite payload value", kHeaderBytes);
  return f;
}

void serialize_field(const DiscreteField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  const std::string s = encode_field(f);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw Error("write failed: " + path);
}

DiscreteField deserialize_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_field(ss.str());
}

}  // namespace homog
