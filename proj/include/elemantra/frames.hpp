#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "elemantra/deterrent.hpp"

namespace elemantra {

/// Axis-aligned box in pixel coordinates.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  double confidence = 1.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
};

/// Infrared capture. The sim_* fields are scenario ground truth; only the
/// oracle detector may look at them.
struct ThermalFrame {
  std::string frame_id;
  std::string pn_id;
  double timestamp_s = 0.0;
  int width = 160;
  int height = 120;
  std::optional<Eigen::MatrixXf> pixels;  // height x width, values in [0, 1]
  std::optional<bool> sim_ground_truth;
  std::vector<BoundingBox> sim_truth_boxes;
};

struct RepelCommand {
  std::string pn_id;
  std::string frame_id;
  double issued_at_s = 0.0;
  ModificationParams deterrent;
  double flash_freq_hz = 2.0;
  double duration_s = 10.0;
};

struct NegativeDecision {
  std::string pn_id;
  std::string frame_id;
  double issued_at_s = 0.0;
};

struct DetectorDecision {
  std::string frame_id;
  bool elephant_present = false;
  double confidence = 0.0;
  std::vector<BoundingBox> boxes;
};

namespace codec {

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

// Frame wire form: JSON metadata plus an optional base-64 block of
// little-endian float32 pixels in row-major order.
std::string encode_frame(const ThermalFrame& frame);
ThermalFrame decode_frame(const std::string& payload);

std::string encode_command(const RepelCommand& cmd);
std::string encode_negative(const NegativeDecision& neg);

/// Command-topic payloads carry either a repel command or a negative decision.
struct CommandPayload {
  std::optional<RepelCommand> repel;
  std::optional<NegativeDecision> negative;
};
CommandPayload decode_command_payload(const std::string& payload);

}  // namespace codec

}  // namespace elemantra
