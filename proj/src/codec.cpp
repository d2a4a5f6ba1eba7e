#include "elemantra/frames.hpp"

#include <array>
#include <cstring>
#include <json.hpp>

#include "elemantra/error.hpp"

namespace elemantra::codec {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

nlohmann::ordered_json box_to_json(const BoundingBox& b) {
  return {{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max},
          {"confidence", b.confidence}};
}

BoundingBox box_from_json(const nlohmann::json& j) {
  BoundingBox b;
  b.x_min = j.at("x_min").get<double>();
  b.y_min = j.at("y_min").get<double>();
  b.x_max = j.at("x_max").get<double>();
  b.y_max = j.at("y_max").get<double>();
  b.confidence = j.value("confidence", 1.0);
  return b;
}

nlohmann::json params_to_json(const ModificationParams& p) {
  return {{"kind", to_string(p.kind)}, {"alpha", p.alpha}, {"seed", p.seed}};
}

ModificationParams params_from_json(const nlohmann::json& j) {
  ModificationParams p;
  p.kind = modification_from_string(j.at("kind").get<std::string>());
  p.alpha = j.at("alpha").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

nlohmann::json parse_payload(const std::string& payload) {
  try {
    return nlohmann::json::parse(payload);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed payload: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
}

}  // namespace

std::string base64_encode(const std::string& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) |
                   (static_cast<unsigned char>(bytes[i + 1]) << 8) | static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    unsigned n = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) n |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw ParseError("base64 length not a multiple of 4", text.size());
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> v{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw ParseError("base64 data after padding", i + k);
      v[k] = decode_char(c);
      if (v[k] < 0) throw ParseError("invalid base64 character", i + k);
    }
    const unsigned n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out += static_cast<char>((n >> 16) & 0xff);
    if (pad < 2) out += static_cast<char>((n >> 8) & 0xff);
    if (pad < 1) out += static_cast<char>(n & 0xff);
  }
  return out;
}

std::string encode_frame(const ThermalFrame& frame) {
  nlohmann::ordered_json j;
  j["type"] = "frame";
  j["frame_id"] = frame.frame_id;
  j["pn_id"] = frame.pn_id;
  j["timestamp_s"] = frame.timestamp_s;
  j["width"] = frame.width;
  j["height"] = frame.height;
  if (frame.sim_ground_truth) j["sim_ground_truth"] = *frame.sim_ground_truth;
  if (!frame.sim_truth_boxes.empty()) {
    auto boxes = nlohmann::ordered_json::array();
    for (const auto& b : frame.sim_truth_boxes) boxes.push_back(box_to_json(b));
    j["sim_truth_boxes"] = std::move(boxes);
  }
  if (frame.pixels) {
    const Eigen::MatrixXf& px = *frame.pixels;
    if (px.rows() != frame.height || px.cols() != frame.width) {
      throw InvalidInput("encode_frame: pixel matrix does not match width x height");
    }
    std::string raw;
    raw.reserve(static_cast<std::size_t>(px.size()) * 4);
    for (Eigen::Index r = 0; r < px.rows(); ++r) {
      for (Eigen::Index c = 0; c < px.cols(); ++c) {
        std::uint32_t bits = 0;
        const float v = px(r, c);
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 4; ++b) raw += static_cast<char>((bits >> (8 * b)) & 0xff);
      }
    }
    j["pixels_f32le_b64"] = base64_encode(raw);
  }
  return j.dump();
}

ThermalFrame decode_frame(const std::string& payload) {
  const auto j = parse_payload(payload);
  try {
    ThermalFrame f;
    f.frame_id = j.at("frame_id").get<std::string>();
    f.pn_id = j.at("pn_id").get<std::string>();
    f.timestamp_s = j.at("timestamp_s").get<double>();
    f.width = j.at("width").get<int>();
    f.height = j.at("height").get<int>();
    if (j.contains("sim_ground_truth")) f.sim_ground_truth = j["sim_ground_truth"].get<bool>();
    if (j.contains("sim_truth_boxes")) {
      for (const auto& b : j["sim_truth_boxes"]) f.sim_truth_boxes.push_back(box_from_json(b));
    }
    if (j.contains("pixels_f32le_b64")) {
      const std::string raw = base64_decode(j["pixels_f32le_b64"].get<std::string>());
      const auto expected = static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height) * 4;
      if (raw.size() != expected) throw ParseError("pixel block size mismatch", raw.size());
      Eigen::MatrixXf px(f.height, f.width);
      std::size_t at = 0;
      for (Eigen::Index r = 0; r < px.rows(); ++r) {
        for (Eigen::Index c = 0; c < px.cols(); ++c) {
          std::uint32_t bits = 0;
          for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[at++])) << (8 * b);
          float v = 0.0f;
          std::memcpy(&v, &bits, sizeof v);
          px(r, c) = v;
        }
      }
      f.pixels = std::move(px);
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("frame payload: ") + e.what(), 0);
  }
}

std::string encode_command(const RepelCommand& cmd) {
  nlohmann::ordered_json j;
  j["type"] = "repel";
  j["pn_id"] = cmd.pn_id;
  j["frame_id"] = cmd.frame_id;
  j["issued_at_s"] = cmd.issued_at_s;
  j["deterrent"] = params_to_json(cmd.deterrent);
  j["flash_freq_hz"] = cmd.flash_freq_hz;
  j["duration_s"] = cmd.duration_s;
  return j.dump();
}

std::string encode_negative(const NegativeDecision& neg) {
  nlohmann::ordered_json j;
  j["type"] = "negative";
  j["pn_id"] = neg.pn_id;
  j["frame_id"] = neg.frame_id;
  j["issued_at_s"] = neg.issued_at_s;
  return j.dump();
}

CommandPayload decode_command_payload(const std::string& payload) {
  const auto j = parse_payload(payload);
  CommandPayload out;
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "repel") {
      RepelCommand c;
      c.pn_id = j.at("pn_id").get<std::string>();
      c.frame_id = j.at("frame_id").get<std::string>();
      c.issued_at_s = j.at("issued_at_s").get<double>();
      c.deterrent = params_from_json(j.at("deterrent"));
      c.flash_freq_hz = j.at("flash_freq_hz").get<double>();
      c.duration_s = j.at("duration_s").get<double>();
      out.repel = std::move(c);
    } else if (type == "negative") {
      NegativeDecision n;
      n.pn_id = j.at("pn_id").get<std::string>();
      n.frame_id = j.at("frame_id").get<std::string>();
      n.issued_at_s = j.at("issued_at_s").get<double>();
      out.negative = std::move(n);
    } else {
      throw ParseError("unknown command type '" + type + "'", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("command payload: ") + e.what(), 0);
  }
  return out;
}

}  // namespace elemantra::codec
