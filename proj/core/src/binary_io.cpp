#include "tempgen/binary_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tempgen/error.hpp"

namespace tempgen::io {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void write_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in, std::string_view what) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) {
    throw DataError("truncated file while reading " + std::string(what));
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

}  // namespace

void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), magic.size()); }
void write_u16(std::ostream& out, std::uint16_t v) { write_le(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
void write_f32(std::ostream& out, float v) { write_le(out, v); }
void write_f64(std::ostream& out, double v) { write_le(out, v); }

void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), s.size());
}

void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), got.size()) || got != magic) {
    throw DataError("malformed header: " + std::string(what) + " does not start with \"" + std::string(magic) +
                    "\"");
  }
}

std::uint16_t read_u16(std::istream& in, std::string_view what) { return read_le<std::uint16_t>(in, what); }
std::uint32_t read_u32(std::istream& in, std::string_view what) { return read_le<std::uint32_t>(in, what); }
std::uint64_t read_u64(std::istream& in, std::string_view what) { return read_le<std::uint64_t>(in, what); }
float read_f32(std::istream& in, std::string_view what) { return read_le<float>(in, what); }
double read_f64(std::istream& in, std::string_view what) { return read_le<double>(in, what); }

std::string read_string(std::istream& in, std::string_view what) {
  const std::uint32_t n = read_u32(in, what);
  if (n > (1u << 20)) throw DataError("implausible string length in " + std::string(what));
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw DataError("truncated file while reading " + std::string(what));
  return s;
}

void read_bytes(std::istream& in, std::span<char> dst, std::string_view what) {
  if (!dst.empty() && !in.read(dst.data(), static_cast<std::streamsize>(dst.size()))) {
    throw DataError("truncated file while reading " + std::string(what));
  }
}

bool at_eof(std::istream& in) { return in.peek() == std::char_traits<char>::eof(); }

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::uint64_t h = 14695981039346656037ull;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace tempgen::io
