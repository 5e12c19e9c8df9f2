#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace tempgen::io {

// Little-endian primitive encoding shared by the TGRD, TBKT and TPAR formats.

void write_magic(std::ostream& out, std::string_view magic);
void write_u16(std::ostream& out, std::uint16_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, std::string_view s);

/// Throws DataError naming `what` when the stream ends early.
void expect_magic(std::istream& in, std::string_view magic, std::string_view what);
std::uint16_t read_u16(std::istream& in, std::string_view what);
std::uint32_t read_u32(std::istream& in, std::string_view what);
std::uint64_t read_u64(std::istream& in, std::string_view what);
float read_f32(std::istream& in, std::string_view what);
double read_f64(std::istream& in, std::string_view what);
std::string read_string(std::istream& in, std::string_view what);
void read_bytes(std::istream& in, std::span<char> dst, std::string_view what);

/// True when the stream has no bytes left.
bool at_eof(std::istream& in);

/// FNV-1a 64-bit digest of a file's bytes, hex encoded. Used for manifests.
std::string file_fingerprint(const std::string& path);

}  // namespace tempgen::io
