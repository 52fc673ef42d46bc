#pragma once

// Bit-exact text encoding of matrices (hex floats) and content checksums.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "metabalance/autodiff/tensor.hpp"

namespace metabalance {

/// "rows cols" line followed by one line of hex-float values.
void write_matrix(std::ostream& out, const ad::MatrixD& m);
ad::MatrixD read_matrix(std::istream& in);

std::string format_hex(double v);
double parse_hex(const std::string& token);

/// 64-bit FNV-1a; incremental via the `state` argument.
std::uint64_t fnv1a(std::span<const std::byte> bytes,
                    std::uint64_t state = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex_digest(std::uint64_t h);

}  // namespace metabalance
