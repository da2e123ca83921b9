#ifndef FPLAB_SHA256_HPP
#define FPLAB_SHA256_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fplab {

using Digest = std::array<uint8_t, 32>;

/// SHA-256 of a byte string (FIPS 180-4). Validated against the NIST test
/// vectors in the unit tests.
Digest sha256(std::string_view data);

std::string to_hex(const Digest& d);

/// First 8 digest bytes interpreted as a big-endian 64-bit integer.
uint64_t digest_prefix_u64(const Digest& d);

/// Big-endian 8-byte encoding of a 64-bit integer.
std::string be64(uint64_t x);

/// Big-endian 4-byte encoding of each token id, concatenated. This is the
/// canonical byte form of a token sequence for hashing.
std::string encode_token_ids(const std::vector<int>& ids);

/// SHA-256 hex digest of a file's contents.
std::string file_digest_hex(const std::string& path);

}  // namespace fplab

#endif
