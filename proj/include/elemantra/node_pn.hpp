#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "elemantra/deterrent.hpp"
#include "elemantra/frames.hpp"
#include "elemantra/seismic_detect.hpp"

namespace elemantra::pn {

struct PnConfig {
  std::string node_id = "pn0";
  int ds_threshold = 1;
  Algorithm1Params alg1;
  double repel_cooldown_s = 60.0;
  double flash_freq_hz = 2.0;
  int ir_capture_count = 1;
  double decision_timeout_s = 10.0;
  // Repel locally on ds = 2 without waiting for image confirmation.
  bool prearm_on_ds2 = false;
  double prearm_repel_duration_s = 10.0;
  std::uint64_t seed = 0;
  std::vector<std::string> broker_priority;

  void validate() const;
};

// States. Timed states carry their deadline.
struct Idle {};
struct IrActive {
  std::vector<std::string> frame_ids;
  double deadline_s = 0.0;
};
struct AwaitingDecision {
  std::vector<std::string> pending_frame_ids;
  double deadline_s = 0.0;
};
struct Repelling {
  std::string frame_id;
  double until_s = 0.0;
};
struct Cooldown {
  double until_s = 0.0;
};
using PnState = std::variant<Idle, IrActive, AwaitingDecision, Repelling, Cooldown>;

enum class StateKind { Idle, IrActive, AwaitingDecision, Repelling, Cooldown };
StateKind kind_of(const PnState& state);
std::string to_string(StateKind kind);
inline bool camera_powered(StateKind k) { return k == StateKind::IrActive || k == StateKind::AwaitingDecision; }

// Events.
struct SeismicWindowReady {
  WindowDetection detection;
};
struct FrameCaptured {
  ThermalFrame frame;
};
struct CommandReceived {
  std::variant<RepelCommand, NegativeDecision> command;
};
struct TimerExpired {};
using PnEvent = std::variant<SeismicWindowReady, FrameCaptured, CommandReceived, TimerExpired>;

// Actions.
struct CaptureFrame {};
struct PublishFrame {
  ThermalFrame frame;
};
struct PlayDeterrent {
  RepelCommand command;
};
struct Flash {
  double freq_hz = 0.0;
  double duration_s = 0.0;
};
struct ScheduleTimer {
  double at_s = 0.0;
};
struct RecordScore {
  std::size_t window_index = 0;
  DetectionScore ds = DetectionScore::None;
};
using PnAction = std::variant<CaptureFrame, PublishFrame, PlayDeterrent, Flash, ScheduleTimer, RecordScore>;

std::string action_name(const PnAction& action);

struct PnStepResult {
  PnState state;
  std::vector<PnAction> actions;
  bool accepted = true;
  std::optional<std::string> anomaly;
};

/// Pure transition function of the peripheral node.
PnStepResult pn_step(const PnState& state, const PnEvent& event, const PnConfig& config, double clock_s);

struct FlashSchedule {
  double freq_hz = 0.0;
  double duration_s = 0.0;
  std::vector<std::pair<double, double>> on_intervals;  // relative to activation

  std::size_t cycles() const { return on_intervals.size(); }
};

/// Square wave: on for the first half of each period.
FlashSchedule flash_schedule(double freq_hz, double duration_s);

struct RepelOutput {
  AudioClip audio;
  FlashSchedule flash;
  std::vector<std::string> warnings;
};

RepelOutput execute_repel(const RepelCommand& cmd, const AudioClip& bee_clip);

struct StateSample {
  double t_s = 0.0;
  StateKind kind = StateKind::Idle;
};

/// Fraction of [log.front().t_s, t_end_s] spent with the camera powered.
double ir_duty_cycle(const std::vector<StateSample>& log, double t_end_s);

/// {"t","node","state_from","state_to","action"}
std::string action_log_line(double t_s, const std::string& node, StateKind from, StateKind to,
                            const std::string& action);

}  // namespace elemantra::pn
