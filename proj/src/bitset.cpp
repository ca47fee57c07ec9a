#include "iatforge/bitset.hpp"

#include <bit>

#include "iatforge/error.hpp"

namespace iatforge {

namespace {
constexpr std::uint64_t kWordBits = 64;

std::uint64_t word_count(std::uint64_t size_bits) {
  return (size_bits + kWordBits - 1) / kWordBits;
}
}  // namespace

Bitset::Bitset(std::uint64_t size_bits) : size_bits_(size_bits), words_(word_count(size_bits), 0) {}

Bitset Bitset::from_positions(std::uint64_t size_bits, std::span<const std::uint64_t> positions) {
  Bitset out(size_bits);
  for (std::uint64_t pos : positions) out.set(pos);
  return out;
}

Bitset Bitset::from_bytes(std::uint64_t size_bits, std::span<const std::uint8_t> bytes) {
  Bitset out(size_bits);
  if (bytes.size() * 8 > word_count(size_bits) * kWordBits) {
    raise(Errc::length_mismatch, "byte payload longer than declared bit length");
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    out.words_[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i % 8));
  }
  // Bits beyond size_bits must be zero or the payload is inconsistent.
  if (size_bits % kWordBits != 0 && !out.words_.empty()) {
    std::uint64_t mask = (std::uint64_t{1} << (size_bits % kWordBits)) - 1;
    if ((out.words_.back() & ~mask) != 0) {
      raise(Errc::corrupt_payload, "set bits beyond declared bit length");
    }
  }
  return out;
}

void Bitset::set(std::uint64_t pos, bool value) {
  if (pos >= size_bits_) raise(Errc::index_out_of_range, "bit position " + std::to_string(pos));
  std::uint64_t mask = std::uint64_t{1} << (pos % kWordBits);
  if (value) {
    words_[pos / kWordBits] |= mask;
  } else {
    words_[pos / kWordBits] &= ~mask;
  }
}

bool Bitset::test(std::uint64_t pos) const {
  if (pos >= size_bits_) raise(Errc::index_out_of_range, "bit position " + std::to_string(pos));
  return (words_[pos / kWordBits] >> (pos % kWordBits)) & 1;
}

std::uint64_t Bitset::count() const noexcept {
  std::uint64_t total = 0;
  for (std::uint64_t w : words_) total += std::popcount(w);
  return total;
}

void Bitset::check_same_length(const Bitset& other) const {
  if (size_bits_ != other.size_bits_) {
    raise(Errc::length_mismatch, "bitset lengths " + std::to_string(size_bits_) + " vs " +
                                     std::to_string(other.size_bits_));
  }
}

std::uint64_t Bitset::and_count(const Bitset& other) const {
  check_same_length(other);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) total += std::popcount(words_[i] & other.words_[i]);
  return total;
}

std::uint64_t Bitset::xor_count(const Bitset& other) const {
  check_same_length(other);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) total += std::popcount(words_[i] ^ other.words_[i]);
  return total;
}

Bitset Bitset::and_with(const Bitset& other) const {
  check_same_length(other);
  Bitset out(size_bits_);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = words_[i] & other.words_[i];
  return out;
}

Bitset Bitset::or_with(const Bitset& other) const {
  check_same_length(other);
  Bitset out(size_bits_);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = words_[i] | other.words_[i];
  return out;
}

Bitset Bitset::xor_with(const Bitset& other) const {
  check_same_length(other);
  Bitset out(size_bits_);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = words_[i] ^ other.words_[i];
  return out;
}

Bitset Bitset::and_not(const Bitset& other) const {
  check_same_length(other);
  Bitset out(size_bits_);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = words_[i] & ~other.words_[i];
  return out;
}

void Bitset::or_inplace(const Bitset& other) {
  check_same_length(other);
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

std::vector<std::uint64_t> Bitset::positions() const {
  std::vector<std::uint64_t> out;
  for (std::size_t wi = 0; wi < words_.size(); ++wi) {
    std::uint64_t w = words_[wi];
    while (w != 0) {
      int bit = std::countr_zero(w);
      out.push_back(wi * kWordBits + static_cast<std::uint64_t>(bit));
      w &= w - 1;
    }
  }
  return out;
}

std::vector<std::uint8_t> Bitset::to_bytes() const {
  std::vector<std::uint8_t> out((size_bits_ + 7) / 8, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
  }
  return out;
}

}  // namespace iatforge
