#include <bit>
#include <cmath>
#include <cstring>

#include "beaconnav/bridge.hpp"

namespace beaconnav::bridge {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f64(std::uint8_t* out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(bits >> (8 * i));
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += len;
  }
  return true;
}

Bytes encode_frame(std::string_view topic, std::span<const std::uint8_t> payload) {
  if (topic.size() > kMaxTopicLen) {
    throw Error(ErrorCode::FrameTooLarge, "topic longer than " + std::to_string(kMaxTopicLen) + " bytes");
  }
  if (payload.size() > kMaxPayloadLen) {
    throw Error(ErrorCode::FrameTooLarge, "payload larger than 16 MiB");
  }
  if (!valid_utf8(topic)) throw Error(ErrorCode::FrameTooLarge, "topic is not valid UTF-8");
  Bytes out;
  out.reserve(8 + topic.size() + payload.size());
  put_u32(out, static_cast<std::uint32_t>(topic.size()));
  out.insert(out.end(), topic.begin(), topic.end());
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::optional<Decoded> decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) return std::nullopt;
  const std::uint32_t topic_len = get_u32(bytes.data());
  if (topic_len > kMaxTopicLen) {
    throw Error(ErrorCode::Protocol, "declared topic length " + std::to_string(topic_len) + " exceeds limit");
  }
  if (bytes.size() < 8 + static_cast<std::size_t>(topic_len)) return std::nullopt;
  const std::uint32_t payload_len = get_u32(bytes.data() + 4 + topic_len);
  if (payload_len > kMaxPayloadLen) {
    throw Error(ErrorCode::Protocol, "declared payload length " + std::to_string(payload_len) + " exceeds limit");
  }
  const std::size_t total = 8 + static_cast<std::size_t>(topic_len) + payload_len;
  if (bytes.size() < total) return std::nullopt;

  Decoded d;
  d.frame.topic.assign(reinterpret_cast<const char*>(bytes.data() + 4), topic_len);
  if (!valid_utf8(d.frame.topic)) throw Error(ErrorCode::Protocol, "topic is not valid UTF-8");
  const auto* p = bytes.data() + 8 + topic_len;
  d.frame.payload.assign(p, p + payload_len);
  d.consumed = total;
  return d;
}

void FrameDecoder::feed(std::span<const std::uint8_t> chunk) {
  // Compact once the consumed prefix dominates the buffer.
  if (pos_ > 0 && pos_ * 2 >= buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  buf_.insert(buf_.end(), chunk.begin(), chunk.end());
}

std::optional<Frame> FrameDecoder::next() {
  auto d = decode_frame(std::span(buf_).subspan(pos_));
  if (!d) return std::nullopt;
  pos_ += d->consumed;
  return std::move(d->frame);
}

std::array<std::uint8_t, kPoseMsgLen> encode_pose_msg(const geometry::Pose& p) {
  if (p.frame != geometry::Frame::RobotMap) {
    throw Error(ErrorCode::FrameMismatch, "pose messages carry robot-map poses; convert viewer poses first");
  }
  std::array<std::uint8_t, kPoseMsgLen> out{};
  const double vals[7] = {p.position.x,      p.position.y,      p.position.z,     p.orientation.x(),
                          p.orientation.y(), p.orientation.z(), p.orientation.w()};
  for (int i = 0; i < 7; ++i) put_f64(out.data() + 8 * i, vals[i]);
  return out;
}

geometry::Pose decode_pose_msg(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kPoseMsgLen) {
    throw Error(ErrorCode::Protocol, "pose message must be 56 bytes, got " + std::to_string(bytes.size()));
  }
  double v[7];
  for (int i = 0; i < 7; ++i) v[i] = get_f64(bytes.data() + 8 * i);
  const geometry::Vec3 pos{v[0], v[1], v[2]};
  if (!pos.finite()) throw Error(ErrorCode::Protocol, "pose message has non-finite position");
  try {
    return {pos, geometry::Quat::from_unit(v[3], v[4], v[5], v[6], 1e-6), geometry::Frame::RobotMap};
  } catch (const Error& e) {
    throw Error(ErrorCode::Protocol, std::string("pose message: ") + e.what());
  }
}

Bytes encode_log_msg(std::string_view text) {
  if (!valid_utf8(text)) throw Error(ErrorCode::InvalidArgument, "log text is not valid UTF-8");
  return Bytes(text.begin(), text.end());
}

std::string decode_log_msg(std::span<const std::uint8_t> bytes) {
  std::string s(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!valid_utf8(s)) throw Error(ErrorCode::Protocol, "log message is not valid UTF-8");
  return s;
}

}  // namespace beaconnav::bridge
