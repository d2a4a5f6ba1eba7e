#include "elemantra/node_pn.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "elemantra/error.hpp"

namespace elemantra::pn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

PnStepResult reject(const PnState& state, std::string why) {
  PnStepResult r;
  r.state = state;
  r.accepted = false;
  r.anomaly = std::move(why);
  return r;
}

PnStepResult keep(const PnState& state) {
  PnStepResult r;
  r.state = state;
  return r;
}

PnStepResult start_repel(const RepelCommand& cmd, double clock_s) {
  PnStepResult r;
  const double until = clock_s + cmd.duration_s;
  r.state = Repelling{cmd.frame_id, until};
  r.actions.emplace_back(PlayDeterrent{cmd});
  r.actions.emplace_back(Flash{cmd.flash_freq_hz, cmd.duration_s});
  r.actions.emplace_back(ScheduleTimer{until});
  return r;
}

std::string event_name(const PnEvent& e) {
  return std::visit(overloaded{[](const SeismicWindowReady&) { return std::string("SeismicWindowReady"); },
                               [](const FrameCaptured&) { return std::string("FrameCaptured"); },
                               [](const CommandReceived&) { return std::string("CommandReceived"); },
                               [](const TimerExpired&) { return std::string("TimerExpired"); }},
                    e);
}

}  // namespace

void PnConfig::validate() const {
  if (ds_threshold != 1 && ds_threshold != 2) throw InvalidConfig("PnConfig: ds_threshold must be 1 or 2");
  if (!(repel_cooldown_s >= 0.0)) throw InvalidConfig("PnConfig: negative cooldown");
  if (ir_capture_count < 1) throw InvalidConfig("PnConfig: ir_capture_count must be >= 1");
  if (!(decision_timeout_s > 0.0)) throw InvalidConfig("PnConfig: decision_timeout_s must be positive");
  if (!(flash_freq_hz > 0.0)) throw InvalidConfig("PnConfig: flash_freq_hz must be positive");
  alg1.validate();
}

StateKind kind_of(const PnState& state) { return static_cast<StateKind>(state.index()); }

std::string to_string(StateKind kind) {
  switch (kind) {
    case StateKind::Idle:
      return "Idle";
    case StateKind::IrActive:
      return "IrActive";
    case StateKind::AwaitingDecision:
      return "AwaitingDecision";
    case StateKind::Repelling:
      return "Repelling";
    case StateKind::Cooldown:
      return "Cooldown";
  }
  return "?";
}

std::string action_name(const PnAction& action) {
  return std::visit(overloaded{[](const CaptureFrame&) { return std::string("CaptureFrame"); },
                               [](const PublishFrame&) { return std::string("PublishFrame"); },
                               [](const PlayDeterrent&) { return std::string("PlayDeterrent"); },
                               [](const Flash&) { return std::string("Flash"); },
                               [](const ScheduleTimer&) { return std::string("ScheduleTimer"); },
                               [](const RecordScore&) { return std::string("RecordScore"); }},
                    action);
}

PnStepResult pn_step(const PnState& state, const PnEvent& event, const PnConfig& config, double clock_s) {
  const auto unexpected = [&] {
    return reject(state, event_name(event) + " not accepted in state " + to_string(kind_of(state)));
  };

  // Scores arriving while busy are recorded only.
  if (const auto* w = std::get_if<SeismicWindowReady>(&event); w && !std::holds_alternative<Idle>(state)) {
    PnStepResult r = keep(state);
    r.actions.emplace_back(RecordScore{w->detection.window_index, w->detection.ds});
    return r;
  }

  return std::visit(
      overloaded{
          [&](const Idle&) -> PnStepResult {
            if (const auto* w = std::get_if<SeismicWindowReady>(&event)) {
              const int ds = to_int(w->detection.ds);
              if (ds < config.ds_threshold) return keep(state);
              if (config.prearm_on_ds2 && w->detection.ds == DetectionScore::Strong) {
                Rng rng(derive_seed(derive_seed(config.seed, config.node_id), w->detection.window_index));
                RepelCommand local;
                local.pn_id = config.node_id;
                local.issued_at_s = clock_s;
                local.deterrent = pick_modification(rng);
                local.flash_freq_hz = config.flash_freq_hz;
                local.duration_s = config.prearm_repel_duration_s;
                return start_repel(local, clock_s);
              }
              PnStepResult r;
              const double deadline = clock_s + config.decision_timeout_s;
              r.state = IrActive{{}, deadline};
              r.actions.emplace_back(CaptureFrame{});
              r.actions.emplace_back(ScheduleTimer{deadline});
              return r;
            }
            if (std::holds_alternative<TimerExpired>(event)) return keep(state);
            return unexpected();
          },
          [&](const IrActive& s) -> PnStepResult {
            if (const auto* f = std::get_if<FrameCaptured>(&event)) {
              if (f->frame.pn_id != config.node_id) {
                return reject(state, "frame " + f->frame.frame_id + " belongs to " + f->frame.pn_id);
              }
              IrActive next = s;
              next.frame_ids.push_back(f->frame.frame_id);
              PnStepResult r;
              r.actions.emplace_back(PublishFrame{f->frame});
              if (static_cast<int>(next.frame_ids.size()) < config.ir_capture_count) {
                r.actions.emplace_back(CaptureFrame{});
                r.state = std::move(next);
              } else {
                const double deadline = clock_s + config.decision_timeout_s;
                r.state = AwaitingDecision{std::move(next.frame_ids), deadline};
                r.actions.emplace_back(ScheduleTimer{deadline});
              }
              return r;
            }
            if (std::holds_alternative<TimerExpired>(event)) {
              if (clock_s >= s.deadline_s) {
                PnStepResult r;
                r.state = Idle{};
                r.anomaly = "capture timed out";
                return r;
              }
              return keep(state);
            }
            return unexpected();
          },
          [&](const AwaitingDecision& s) -> PnStepResult {
            if (const auto* c = std::get_if<CommandReceived>(&event)) {
              const auto& pending = s.pending_frame_ids;
              if (const auto* cmd = std::get_if<RepelCommand>(&c->command)) {
                if (std::find(pending.begin(), pending.end(), cmd->frame_id) == pending.end()) {
                  return reject(state, "repel command for frame " + cmd->frame_id + " not pending");
                }
                return start_repel(*cmd, clock_s);
              }
              const auto& neg = std::get<NegativeDecision>(c->command);
              auto it = std::find(pending.begin(), pending.end(), neg.frame_id);
              if (it == pending.end()) return reject(state, "negative decision for frame " + neg.frame_id + " not pending");
              AwaitingDecision next = s;
              next.pending_frame_ids.erase(next.pending_frame_ids.begin() + (it - pending.begin()));
              PnStepResult r;
              if (next.pending_frame_ids.empty()) {
                r.state = Idle{};
              } else {
                r.state = std::move(next);
              }
              return r;
            }
            if (std::holds_alternative<TimerExpired>(event)) {
              if (clock_s >= s.deadline_s) {
                PnStepResult r;
                r.state = Idle{};
                r.anomaly = "decision timed out";
                return r;
              }
              return keep(state);
            }
            return unexpected();
          },
          [&](const Repelling& s) -> PnStepResult {
            if (std::holds_alternative<TimerExpired>(event)) {
              if (clock_s < s.until_s) return keep(state);
              PnStepResult r;
              const double until = clock_s + config.repel_cooldown_s;
              r.state = Cooldown{until};
              r.actions.emplace_back(ScheduleTimer{until});
              return r;
            }
            return unexpected();
          },
          [&](const Cooldown& s) -> PnStepResult {
            if (std::holds_alternative<TimerExpired>(event)) {
              if (clock_s < s.until_s) return keep(state);
              PnStepResult r;
              r.state = Idle{};
              return r;
            }
            return unexpected();
          },
      },
      state);
}

FlashSchedule flash_schedule(double freq_hz, double duration_s) {
  if (!(freq_hz > 0.0) || !(duration_s > 0.0)) throw InvalidInput("flash_schedule: non-positive frequency or duration");
  FlashSchedule fs;
  fs.freq_hz = freq_hz;
  fs.duration_s = duration_s;
  const double period = 1.0 / freq_hz;
  const auto cycles = static_cast<std::size_t>(std::floor(duration_s * freq_hz + 1e-9));
  for (std::size_t k = 0; k < cycles; ++k) {
    const double on = static_cast<double>(k) * period;
    fs.on_intervals.emplace_back(on, on + 0.5 * period);
  }
  return fs;
}

RepelOutput execute_repel(const RepelCommand& cmd, const AudioClip& bee_clip) {
  if (!(cmd.duration_s > 0.0)) throw InvalidInput("execute_repel: duration must be positive");
  auto outcome = apply_modification(bee_clip, cmd.deterrent);
  return {std::move(outcome.clip), flash_schedule(cmd.flash_freq_hz, cmd.duration_s), std::move(outcome.warnings)};
}

double ir_duty_cycle(const std::vector<StateSample>& log, double t_end_s) {
  if (log.empty()) throw InvalidInput("ir_duty_cycle: empty state log");
  const double t0 = log.front().t_s;
  const double span = t_end_s - t0;
  if (span < 0.0) throw InvalidInput("ir_duty_cycle: end precedes first sample");
  if (span == 0.0) return camera_powered(log.front().kind) ? 1.0 : 0.0;
  double on = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double begin = log[i].t_s;
    const double end = i + 1 < log.size() ? log[i + 1].t_s : t_end_s;
    if (end < begin) throw InvalidInput("ir_duty_cycle: state log not sorted by time");
    if (camera_powered(log[i].kind)) on += std::min(end, t_end_s) - begin;
  }
  return on / span;
}

std::string action_log_line(double t_s, const std::string& node, StateKind from, StateKind to,
                            const std::string& action) {
  nlohmann::ordered_json j;
  j["t"] = t_s;
  j["node"] = node;
  j["state_from"] = to_string(from);
  j["state_to"] = to_string(to);
  j["action"] = action;
  return j.dump();
}

}  // namespace elemantra::pn
