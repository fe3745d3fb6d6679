#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace dpro {

// Shortest round-trip decimal rendering, locale-independent; every CSV/table
// writer goes through this so output bytes never depend on the host. (JSON
// reports rely on the JSON library's own shortest-round-trip number writer,
// which gives the same guarantee.)
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace dpro
