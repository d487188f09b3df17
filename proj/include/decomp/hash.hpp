#pragma once

#include <string>

namespace decomp {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(const std::string& data);

}  // namespace decomp
