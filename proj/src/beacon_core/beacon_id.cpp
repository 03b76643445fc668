#include <array>
#include <cctype>

#include "beaconnav/beacon_core.hpp"

namespace beaconnav::beacon {

namespace {

constexpr std::array<std::size_t, 4> kHyphens = {8, 13, 18, 23};

}  // namespace

bool BeaconId::is_canonical(std::string_view text) {
  if (text.size() != 36) return false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool hyphen_slot = i == kHyphens[0] || i == kHyphens[1] || i == kHyphens[2] || i == kHyphens[3];
    if (hyphen_slot) {
      if (text[i] != '-') return false;
    } else if (!std::isxdigit(static_cast<unsigned char>(text[i]))) {
      return false;
    }
  }
  return true;
}

BeaconId::BeaconId(std::string_view text) {
  if (!is_canonical(text)) {
    throw Error(ErrorCode::InvalidArgument, "malformed beacon id '" + std::string(text) + "'");
  }
  text_.reserve(text.size());
  for (char c : text) text_.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
}

IdGenerator::IdGenerator() : rng_(std::random_device{}()) {}

BeaconId IdGenerator::operator()() {
  std::array<unsigned char, 16> bytes{};
  const std::uint64_t hi = rng_();
  const std::uint64_t lo = rng_();
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<unsigned char>(hi >> (56 - 8 * i));
    bytes[8 + i] = static_cast<unsigned char>(lo >> (56 - 8 * i));
  }
  bytes[6] = static_cast<unsigned char>((bytes[6] & 0x0F) | 0x40);  // version 4
  bytes[8] = static_cast<unsigned char>((bytes[8] & 0x3F) | 0x80);  // RFC 4122 variant

  static constexpr char kHex[] = "0123456789abcdef";
  std::string text;
  text.reserve(36);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) text.push_back('-');
    text.push_back(kHex[bytes[i] >> 4]);
    text.push_back(kHex[bytes[i] & 0x0F]);
  }
  return BeaconId(text);
}

}  // namespace beaconnav::beacon
