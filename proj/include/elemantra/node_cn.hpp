#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "elemantra/deterrent.hpp"
#include "elemantra/frames.hpp"

namespace elemantra::cn {

// ---------------------------------------------------------------------------
// Detectors

/// Plug-in boundary for the infrared elephant detector.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual DetectorDecision detect(const ThermalFrame& frame) const = 0;
  /// Whether decisions carry scored boxes (required by evaluate_ap50).
  virtual bool emits_boxes() const = 0;
  virtual std::string name() const = 0;
};

/// Reads the scenario ground truth. The only detector allowed to do so.
class OracleDetector final : public Detector {
 public:
  DetectorDecision detect(const ThermalFrame& frame) const override;
  bool emits_boxes() const override { return true; }
  std::string name() const override { return "oracle"; }
};

struct StochasticDetectorParams {
  double true_positive_rate = 0.9;
  double false_positive_rate = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Bernoulli stand-in for the learned model, deterministic per (seed, frame_id).
/// Ground truth only selects which rate applies.
class StochasticDetector final : public Detector {
 public:
  explicit StochasticDetector(StochasticDetectorParams params);
  DetectorDecision detect(const ThermalFrame& frame) const override;
  bool emits_boxes() const override { return true; }
  std::string name() const override { return "stochastic"; }

 private:
  StochasticDetectorParams params_;
};

/// Decision with no boxes; models a classifier-only detector.
class PresenceOnlyDetector final : public Detector {
 public:
  DetectorDecision detect(const ThermalFrame& frame) const override;
  bool emits_boxes() const override { return false; }
  std::string name() const override { return "presence_only"; }
};

/// Runs the detector; rejects frames the chosen detector cannot evaluate.
DetectorDecision detect_frame(const ThermalFrame& frame, const Detector& detector);

std::unique_ptr<Detector> make_detector(const std::string& kind, const StochasticDetectorParams& params = {});

// ---------------------------------------------------------------------------
// Box evaluation

double iou(const BoundingBox& a, const BoundingBox& b);

struct LabeledFrame {
  ThermalFrame frame;
  std::vector<BoundingBox> truth;
  std::string split = "test";
};

struct LabeledFrameSet {
  std::vector<LabeledFrame> frames;
};

/// Reads {"frames":[{"frame_id","width","height","split","boxes":[...]}]}.
/// Truth boxes are also attached to the frame as simulated ground truth.
LabeledFrameSet load_labeled_set(const std::filesystem::path& path);
LabeledFrameSet parse_labeled_set(const std::string& json_text);

struct ScoredPrediction {
  std::size_t frame_index = 0;
  BoundingBox box;
};

/// AP at IoU 0.5 from explicit predictions: greedy matching in descending
/// confidence (stable for ties), one match per truth box, all-point
/// interpolated area under the precision-recall curve.
double average_precision_50(const std::vector<std::vector<BoundingBox>>& truth,
                            const std::vector<ScoredPrediction>& predictions);

double evaluate_ap50(const Detector& detector, const LabeledFrameSet& set);

/// Reference values from the authors' models (PyTorch, tflite); not reproduced.
inline constexpr double kReferenceAp50Full = 0.8952;
inline constexpr double kReferenceAp50Lite = 0.6752;

// ---------------------------------------------------------------------------
// Warnings

enum class WarningKind { OfficerMessage, Siren };
std::string to_string(WarningKind kind);

struct WarningRecord {
  WarningKind kind = WarningKind::OfficerMessage;
  double timestamp_s = 0.0;
  std::string pn_id;
  std::string text;
};

std::string to_json_line(const WarningRecord& record);

class WarningSink {
 public:
  virtual ~WarningSink() = default;
  /// Returns false on a write failure.
  virtual bool write(const WarningRecord& record) = 0;
};

/// Appends to one JSON-lines file per kind: <dir>/warnings_<kind>.jsonl.
class JsonlWarningSink final : public WarningSink {
 public:
  explicit JsonlWarningSink(std::filesystem::path directory);
  bool write(const WarningRecord& record) override;
  std::filesystem::path path_for(WarningKind kind) const;

 private:
  std::filesystem::path dir_;
};

class MemoryWarningSink final : public WarningSink {
 public:
  bool write(const WarningRecord& record) override;
  const std::vector<WarningRecord>& records() const { return records_; }

 private:
  std::vector<WarningRecord> records_;
};

/// Spawns `command` per record with the JSON line on its standard input
/// (models an SMS gateway). A non-zero exit status counts as a failure.
class CommandWarningSink final : public WarningSink {
 public:
  explicit CommandWarningSink(std::string command);
  bool write(const WarningRecord& record) override;

 private:
  std::string command_;
};

WarningRecord make_warning(WarningKind kind, const DetectorDecision& decision, const std::string& pn_id,
                           double clock_s);

/// Writes to every sink, retrying each failed write once. Returns anomalies.
std::vector<std::string> deliver_warning(const WarningRecord& record, const std::vector<WarningSink*>& sinks);

struct WarningEmission {
  std::vector<WarningRecord> records;
  std::vector<std::string> anomalies;
};

/// One OfficerMessage and one Siren record per positive decision. Each sink
/// write is retried once; persistent failures become anomalies.
WarningEmission emit_warning(const DetectorDecision& decision, const std::string& pn_id, double clock_s,
                             const std::vector<WarningSink*>& sinks);

// ---------------------------------------------------------------------------
// Central-node step

struct CnConfig {
  double flash_freq_hz = 2.0;
  double repel_duration_s = 10.0;
  AlphaRange alpha_range;
  std::uint64_t seed = 0;  // deterrent draws, derived per frame_id
};

struct FrameReceived {
  ThermalFrame frame;
};
struct DetectorResult {
  DetectorDecision decision;
};
using CnEvent = std::variant<FrameReceived, DetectorResult>;

struct RunDetector {
  ThermalFrame frame;
};
struct PublishRepelCommand {
  RepelCommand command;
};
struct PublishNegativeDecision {
  NegativeDecision decision;
};
struct EmitWarning {
  WarningKind kind = WarningKind::OfficerMessage;
  DetectorDecision decision;
  std::string pn_id;
};
using CnAction = std::variant<RunDetector, PublishRepelCommand, PublishNegativeDecision, EmitWarning>;

struct PendingFrame {
  std::string pn_id;
  double received_at_s = 0.0;
  bool decided = false;
};

/// Frames seen so far, keyed by frame_id.
struct CnState {
  std::map<std::string, PendingFrame> frames;
};

struct CnStepResult {
  CnState state;
  std::vector<CnAction> actions;
  std::optional<std::string> anomaly;
};

CnStepResult cn_step(const CnState& state, const CnEvent& event, const CnConfig& config, double clock_s);

}  // namespace elemantra::cn
