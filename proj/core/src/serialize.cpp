#include "metabalance/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "metabalance/errors.hpp"

namespace metabalance {

std::string format_hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw DataError("malformed number '" + token + "'");
  return v;
}

void write_matrix(std::ostream& out, const ad::MatrixD& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (i > 0) out << ' ';
    out << format_hex(m.data()[i]);
  }
  out << '\n';
}

ad::MatrixD read_matrix(std::istream& in) {
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) throw DataError("malformed matrix header");
  ad::MatrixD m(rows, cols);
  std::string token;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!(in >> token)) throw DataError("truncated matrix data");
    m.data()[i] = parse_hex(token);
  }
  return m;
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t state) {
  for (std::byte b : bytes) {
    state ^= static_cast<std::uint64_t>(b);
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t state) {
  return fnv1a(std::as_bytes(std::span(text.data(), text.size())), state);
}

std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace metabalance
