#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

// Little-endian binary primitives for the dataset and checkpoint formats.
static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace icl::binio {

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* p, size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("binio: truncated file");
}

inline void write_u32(std::ostream& os, uint32_t v) { write_bytes(os, &v, 4); }
inline void write_u64(std::ostream& os, uint64_t v) { write_bytes(os, &v, 8); }
inline void write_f64(std::ostream& os, double v) { write_bytes(os, &v, 8); }

inline uint32_t read_u32(std::istream& is) {
  uint32_t v;
  read_bytes(is, &v, 4);
  return v;
}
inline uint64_t read_u64(std::istream& is) {
  uint64_t v;
  read_bytes(is, &v, 8);
  return v;
}
inline double read_f64(std::istream& is) {
  double v;
  read_bytes(is, &v, 8);
  return v;
}

inline void write_f64s(std::ostream& os, const std::vector<double>& v) {
  write_bytes(os, v.data(), v.size() * 8);
}

inline void read_f64s(std::istream& is, std::vector<double>& v) {
  read_bytes(is, v.data(), v.size() * 8);
}

inline void write_magic(std::ostream& os, const char (&magic)[8]) { write_bytes(os, magic, 8); }

inline void expect_magic(std::istream& is, const char (&magic)[8], const char* what) {
  char got[8];
  read_bytes(is, got, 8);
  if (std::memcmp(got, magic, 8) != 0)
    throw std::runtime_error(std::string("binio: bad magic for ") + what);
}

/// Shortest decimal form that round-trips a double ("%.17g").
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace icl::binio
