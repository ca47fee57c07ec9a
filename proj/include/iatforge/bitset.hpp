#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace iatforge {

/// Fixed-length bitstring backed by 64-bit words.
///
/// Bit i lives in word i/64 at position i%64; serialized byte order is
/// little-endian (bit i at byte i/8, position i%8), so reading the whole
/// string as an integer with bit 0 as the least significant bit matches the
/// word representation.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::uint64_t size_bits);

  static Bitset from_positions(std::uint64_t size_bits, std::span<const std::uint64_t> positions);
  static Bitset from_bytes(std::uint64_t size_bits, std::span<const std::uint8_t> bytes);

  std::uint64_t size() const noexcept { return size_bits_; }
  bool empty() const noexcept { return size_bits_ == 0; }

  void set(std::uint64_t pos, bool value = true);
  bool test(std::uint64_t pos) const;

  std::uint64_t count() const noexcept;

  /// popcount(*this AND other) without materializing the result.
  std::uint64_t and_count(const Bitset& other) const;
  /// popcount(*this XOR other): Hamming distance on the shared universe.
  std::uint64_t xor_count(const Bitset& other) const;

  Bitset and_with(const Bitset& other) const;
  Bitset or_with(const Bitset& other) const;
  Bitset xor_with(const Bitset& other) const;
  /// *this AND NOT other.
  Bitset and_not(const Bitset& other) const;

  void or_inplace(const Bitset& other);

  std::vector<std::uint64_t> positions() const;

  /// Little-endian bytes, ceil(size/8) long; trailing bits of the last byte are zero.
  std::vector<std::uint8_t> to_bytes() const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool operator==(const Bitset& other) const noexcept = default;

 private:
  void check_same_length(const Bitset& other) const;

  std::uint64_t size_bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace iatforge
