#include "elemantra/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <memory>
#include <queue>
#include <set>
#include <sstream>

#include "elemantra/error.hpp"
#include "elemantra/io.hpp"
#include "elemantra/random.hpp"

namespace elemantra::harness {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
}

Envelope envelope_from_string(const std::string& s) {
  if (s == "rectangular") return Envelope::Rectangular;
  if (s == "tukey") return Envelope::Tukey;
  if (s == "hann") return Envelope::Hann;
  throw InvalidConfig("unknown envelope '" + s + "'");
}

RumbleSpec rumble_from_json(const json& j) {
  RumbleSpec r;
  r.duration_s = j.value("duration_s", r.duration_s);
  r.f_start_hz = j.value("f_start_hz", r.f_start_hz);
  r.f_peak_hz = j.value("f_peak_hz", r.f_peak_hz);
  r.f_end_hz = j.value("f_end_hz", r.f_end_hz);
  if (j.contains("envelope")) r.envelope = envelope_from_string(j["envelope"].get<std::string>());
  r.tukey_taper = j.value("tukey_taper", r.tukey_taper);
  r.amplitude = j.value("amplitude", r.amplitude);
  if (j.contains("snr_db") && !j["snr_db"].is_null()) r.snr_db = j["snr_db"].get<double>();
  return r;
}

// A network reference is either an inline object or a path to a JSON file.
mesh::MeshConfig mesh_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) {
    std::filesystem::path p = j.get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return mesh::load_mesh_config(p);
  }
  return mesh::parse_mesh_config(j.dump());
}

mesh::Qos qos_from_string(const std::string& s) {
  if (s == "at_most_once") return mesh::Qos::AtMostOnce;
  if (s == "at_least_once") return mesh::Qos::AtLeastOnce;
  throw InvalidConfig("unknown qos '" + s + "'");
}

void validate_rumble(const RumbleSpec& spec) {
  try {
    elemantra::validate(spec, 1000.0);
  } catch (const InvalidInput& e) {
    throw InvalidConfig(std::string("scenario: ") + e.what());
  }
}

bool is_frame_topic(const std::string& topic) { return mesh::topic_matches(mesh::topics::kAllFrames, topic); }

}  // namespace

// ---------------------------------------------------------------------------
// Scenario and configuration

void Scenario::validate() const {
  if (!(duration_s > 0.0)) throw InvalidConfig("scenario: duration_s must be positive");
  if (pns.empty()) throw InvalidConfig("scenario: no peripheral nodes");
  std::set<std::string> ids;
  for (const auto& p : pns) {
    if (!mesh::valid_topic(p.id) || p.id.find('/') != std::string::npos) {
      throw InvalidConfig("scenario: invalid node id '" + p.id + "'");
    }
    if (!ids.insert(p.id).second) throw InvalidConfig("scenario: duplicate node id '" + p.id + "'");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string where = "scenario: event " + std::to_string(i);
    if (!(e.t_onset_s >= 0.0 && e.t_onset_s < duration_s)) throw InvalidConfig(where + " onset outside the scenario");
    if (e.pns.empty()) throw InvalidConfig(where + " affects no node");
    for (const auto& id : e.pns) {
      if (ids.count(id) == 0) throw InvalidConfig(where + " references unknown node '" + id + "'");
    }
    if (!(e.presence_s >= 0.0)) throw InvalidConfig(where + " has negative presence_s");
    validate_rumble(e.rumble);
  }
  if (detector != "oracle" && detector != "stochastic" && detector != "presence_only") {
    throw InvalidConfig("scenario: unknown detector '" + detector + "'");
  }
  if (network) network->validate();
}

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json j = parse_json(json_text, "scenario");
  Scenario s;
  try {
    s.duration_s = j.at("duration_s").get<double>();
    for (const auto& jp : j.at("pns")) {
      PnSpec p;
      if (jp.is_string()) {
        p.id = jp.get<std::string>();
      } else {
        p.id = jp.at("id").get<std::string>();
        p.position = jp.value("position", std::string());
      }
      s.pns.push_back(std::move(p));
    }
    for (const auto& je : j.value("events", json::array())) {
      ElephantEvent e;
      e.t_onset_s = je.at("t_onset_s").get<double>();
      e.pns = je.at("pns").get<std::vector<std::string>>();
      if (je.contains("rumble")) e.rumble = rumble_from_json(je["rumble"]);
      e.thermal_visible = je.value("thermal_visible", e.thermal_visible);
      e.presence_s = je.value("presence_s", e.presence_s);
      s.events.push_back(std::move(e));
    }
    if (j.contains("network")) s.network = mesh_from_json(j["network"], base_dir);
    s.detector = j.value("detector", s.detector);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what(), 0);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(io::read_file(path), path.parent_path());
}

void SimConfig::validate() const {
  alg1.validate();
  if (std::abs(window_s - alg1.window_s) > 1e-12) {
    throw InvalidConfig("config: window_s (" + io::format_real(window_s) + ") differs from alg1.window_s (" +
                        io::format_real(alg1.window_s) + ")");
  }
  pn.validate();
  if (std::abs(pn.alg1.window_s - alg1.window_s) > 1e-12) throw InvalidConfig("config: pn.alg1 differs from alg1");
  detector.validate();
  if (!(cn.alpha_range.lo > 0.0 && cn.alpha_range.lo < cn.alpha_range.hi)) {
    throw InvalidConfig("config: alpha range must satisfy 0 < lo < hi");
  }
  if (!(cn.repel_duration_s > 0.0) || !(cn.flash_freq_hz > 0.0)) {
    throw InvalidConfig("config: repel duration and flash frequency must be positive");
  }
  if (mesh) mesh->validate();
  if (!(noise_rms >= 0.0)) throw InvalidConfig("config: negative noise_rms");
  if (!(capture_delay_s >= 0.0) || !(detector_latency_s >= 0.0)) throw InvalidConfig("config: negative delay");
  if (!(match_horizon_s >= 0.0)) throw InvalidConfig("config: negative match_horizon_s");
  if (cn_id.empty() || cn_id.find('/') != std::string::npos) throw InvalidConfig("config: invalid cn_id");
}

SimConfig parse_sim_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json j = parse_json(json_text, "config");
  SimConfig c;
  try {
    if (j.contains("alg1")) {
      const auto& ja = j["alg1"];
      c.alg1.band_low_hz = ja.value("band_low_hz", c.alg1.band_low_hz);
      c.alg1.band_high_hz = ja.value("band_high_hz", c.alg1.band_high_hz);
      c.alg1.count_low = ja.value("count_low", c.alg1.count_low);
      c.alg1.count_high = ja.value("count_high", c.alg1.count_high);
      c.alg1.subsegment_s = ja.value("subsegment_s", c.alg1.subsegment_s);
      c.alg1.window_s = ja.value("window_s", j.value("window_s", c.alg1.window_s));
    } else {
      c.alg1.window_s = j.value("window_s", c.alg1.window_s);
    }
    c.window_s = j.value("window_s", c.alg1.window_s);
    if (j.contains("pn")) {
      const auto& jp = j["pn"];
      c.pn.ds_threshold = jp.value("ds_threshold", c.pn.ds_threshold);
      c.pn.repel_cooldown_s = jp.value("repel_cooldown_s", c.pn.repel_cooldown_s);
      c.pn.flash_freq_hz = jp.value("flash_freq_hz", c.pn.flash_freq_hz);
      c.pn.ir_capture_count = jp.value("ir_capture_count", c.pn.ir_capture_count);
      c.pn.decision_timeout_s = jp.value("decision_timeout_s", c.pn.decision_timeout_s);
      c.pn.prearm_on_ds2 = jp.value("prearm_on_ds2", c.pn.prearm_on_ds2);
      c.pn.prearm_repel_duration_s = jp.value("prearm_repel_duration_s", c.pn.prearm_repel_duration_s);
    }
    c.pn.alg1 = c.alg1;
    if (j.contains("cn")) {
      const auto& jc = j["cn"];
      c.cn.flash_freq_hz = jc.value("flash_freq_hz", c.cn.flash_freq_hz);
      c.cn.repel_duration_s = jc.value("repel_duration_s", c.cn.repel_duration_s);
      if (jc.contains("alpha_range")) {
        const auto a = jc["alpha_range"].get<std::vector<double>>();
        if (a.size() != 2) throw InvalidConfig("config: alpha_range needs two values");
        c.cn.alpha_range = AlphaRange{a[0], a[1]};
      }
    }
    if (j.contains("detector")) {
      const auto& jd = j["detector"];
      c.detector.true_positive_rate = jd.value("true_positive_rate", c.detector.true_positive_rate);
      c.detector.false_positive_rate = jd.value("false_positive_rate", c.detector.false_positive_rate);
      c.detector.seed = jd.value("seed", c.detector.seed);
    }
    if (j.contains("mesh")) c.mesh = mesh_from_json(j["mesh"], base_dir);
    if (j.contains("qos")) c.qos = qos_from_string(j["qos"].get<std::string>());
    c.noise_rms = j.value("noise_rms", c.noise_rms);
    c.capture_delay_s = j.value("capture_delay_s", c.capture_delay_s);
    c.detector_latency_s = j.value("detector_latency_s", c.detector_latency_s);
    c.match_horizon_s = j.value("match_horizon_s", c.match_horizon_s);
    c.cn_id = j.value("cn_id", c.cn_id);
    c.warning_command = j.value("warning_command", c.warning_command);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  c.validate();
  return c;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  return parse_sim_config(io::read_file(path), path.parent_path());
}

void validate(const Scenario& scenario, const SimConfig& config) {
  scenario.validate();
  config.validate();
  if (scenario.duration_s < config.window_s) throw InvalidConfig("scenario shorter than one detection window");
  for (const auto& p : scenario.pns) {
    if (p.id == config.cn_id) throw InvalidConfig("node id '" + p.id + "' clashes with the central node id");
  }
  const mesh::MeshConfig& m = scenario.network ? *scenario.network : config.mesh ? *config.mesh : mesh::MeshConfig{};
  for (const auto& b : m.failover.broker_priority) {
    if (b == config.cn_id) throw InvalidConfig("broker id '" + b + "' clashes with the central node id");
    for (const auto& p : scenario.pns) {
      if (p.id == b) throw InvalidConfig("node id '" + p.id + "' clashes with a broker id");
    }
  }
}

// ---------------------------------------------------------------------------
// Seismic synthesis

SeismicTrace synth_pn_trace(const Scenario& scenario, const std::string& pn_id, double noise_rms,
                            double sample_rate_hz) {
  const Eigen::Index n = samples_for(scenario.duration_s, sample_rate_hz);
  SeismicTrace trace;
  trace.sample_rate_hz = sample_rate_hz;
  trace.start_time_s = 0.0;
  trace.samples = white_noise(n, noise_rms, derive_seed(scenario.seed, "seismic/" + pn_id));
  for (const auto& e : scenario.events) {
    if (std::find(e.pns.begin(), e.pns.end(), pn_id) == e.pns.end()) continue;
    RumbleSpec spec = e.rumble;
    if (std::isfinite(spec.snr_db) && noise_rms > 0.0) {
      // Sinusoid power A^2/2 against the background noise power.
      spec.amplitude = std::sqrt(2.0 * noise_rms * noise_rms * std::pow(10.0, spec.snr_db / 10.0));
    }
    const Eigen::VectorXd w = rumble_waveform(spec, sample_rate_hz);
    const Eigen::Index start = samples_for(e.t_onset_s, sample_rate_hz);
    const Eigen::Index len = std::min<Eigen::Index>(w.size(), n - start);
    if (len > 0) trace.samples.segment(start, len) += w.head(len);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Metrics

std::string to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["duration_s"] = r.duration_s;
  j["recall"] = r.recall ? nlohmann::ordered_json(*r.recall) : nlohmann::ordered_json(nullptr);
  j["warning_count"] = r.warning_count;
  j["false_warning_count"] = r.false_warning_count;
  auto events = nlohmann::ordered_json::array();
  for (const auto& e : r.events) {
    nlohmann::ordered_json je;
    je["index"] = e.index;
    je["t_onset_s"] = e.t_onset_s;
    je["detected"] = e.detected;
    je["latency_s"] = e.latency_s ? nlohmann::ordered_json(*e.latency_s) : nlohmann::ordered_json(nullptr);
    events.push_back(std::move(je));
  }
  j["events"] = std::move(events);
  j["ir_duty_cycle"] = nlohmann::ordered_json::object();
  for (const auto& [pn, d] : r.ir_duty_cycle) j["ir_duty_cycle"][pn] = d;
  j["message_counts"] = nlohmann::ordered_json::object();
  for (const auto& [topic, n] : r.message_counts) j["message_counts"][topic] = n;
  j["anomaly_count"] = r.anomaly_count;
  return j.dump(2) + "\n";
}

MetricsReport compute_metrics(const RunLogs& logs, const Scenario& scenario, double match_horizon_s) {
  MetricsReport r;
  r.seed = scenario.seed;
  r.duration_s = scenario.duration_s;
  for (const auto& p : scenario.pns) {
    auto it = logs.state_logs.find(p.id);
    if (it == logs.state_logs.end() || it->second.empty()) {
      throw InvalidInput("compute_metrics: missing state log for " + p.id);
    }
    r.ir_duty_cycle[p.id] = pn::ir_duty_cycle(it->second, logs.end_s);
  }

  const auto affects = [](const ElephantEvent& e, const std::string& pn_id) {
    return std::find(e.pns.begin(), e.pns.end(), pn_id) != e.pns.end();
  };
  const auto in_horizon = [&](const ElephantEvent& e, double t) {
    return t >= e.t_onset_s && t <= e.t_onset_s + match_horizon_s;
  };

  std::size_t detected = 0;
  for (std::size_t i = 0; i < scenario.events.size(); ++i) {
    const auto& e = scenario.events[i];
    EventOutcome o;
    o.index = i;
    o.t_onset_s = e.t_onset_s;
    for (const auto& w : logs.warnings) {
      if (!affects(e, w.pn_id) || !in_horizon(e, w.timestamp_s)) continue;
      const double lat = w.timestamp_s - e.t_onset_s;
      if (!o.latency_s || lat < *o.latency_s) o.latency_s = lat;
    }
    o.detected = o.latency_s.has_value();
    if (o.detected) ++detected;
    r.events.push_back(o);
  }
  if (!scenario.events.empty()) {
    r.recall = static_cast<double>(detected) / static_cast<double>(scenario.events.size());
  }

  r.warning_count = logs.warnings.size();
  for (const auto& w : logs.warnings) {
    const bool matched = std::any_of(scenario.events.begin(), scenario.events.end(), [&](const ElephantEvent& e) {
      return affects(e, w.pn_id) && in_horizon(e, w.timestamp_s);
    });
    if (!matched) ++r.false_warning_count;
  }

  for (const auto& t : logs.trace) {
    if (t.event == mesh::TraceEvent::Publish) ++r.message_counts[t.topic];
  }
  r.anomaly_count = logs.anomalies.size();
  return r;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

enum class LocalKind { WindowReady, FrameCaptured, PnTimer, DetectorDone };

struct LocalEvent {
  double t_s = 0.0;
  std::uint64_t seq = 0;
  LocalKind kind = LocalKind::WindowReady;
  std::string node;
  std::size_t index = 0;  // window index
  ThermalFrame frame;     // DetectorDone
};

struct LocalOrder {
  bool operator()(const LocalEvent& a, const LocalEvent& b) const {
    return a.t_s != b.t_s ? a.t_s > b.t_s : a.seq > b.seq;
  }
};

class Simulation {
 public:
  Simulation(const Scenario& scenario, const SimConfig& config)
      : scenario_(scenario), config_(config), net_(network_config()) {
    cn_config_ = config_.cn;
    cn_config_.seed = derive_seed(scenario_.seed, "cn");
    cn::StochasticDetectorParams dp = config_.detector;
    dp.seed = derive_seed(derive_seed(scenario_.seed, "detector"), config_.detector.seed);
    detector_ = cn::make_detector(scenario_.detector, dp);

    sinks_.push_back(&memory_sink_);
    if (!config_.output_dir.empty()) {
      std::filesystem::create_directories(config_.output_dir);
      jsonl_sink_ = std::make_unique<cn::JsonlWarningSink>(config_.output_dir);
      for (auto kind : {cn::WarningKind::OfficerMessage, cn::WarningKind::Siren}) {
        std::filesystem::remove(jsonl_sink_->path_for(kind));
      }
      sinks_.push_back(jsonl_sink_.get());
    }
    if (!config_.warning_command.empty()) {
      command_sink_ = std::make_unique<cn::CommandWarningSink>(config_.warning_command);
      sinks_.push_back(command_sink_.get());
    }

    net_.add_client(config_.cn_id);
    net_.subscribe(config_.cn_id, mesh::topics::kAllFrames);
    for (const auto& p : scenario_.pns) {
      pn::PnConfig pc = config_.pn;
      pc.node_id = p.id;
      pc.seed = derive_seed(scenario_.seed, "pn/" + p.id);
      pn_configs_[p.id] = pc;
      pn_states_[p.id] = pn::Idle{};
      logs_.state_logs[p.id].push_back(pn::StateSample{0.0, pn::StateKind::Idle});
      net_.add_client(p.id);
      net_.subscribe(p.id, mesh::topics::command(p.id));

      const SeismicTrace trace = synth_pn_trace(scenario_, p.id, config_.noise_rms);
      auto dets = detect_stream(trace, config_.alg1);
      for (const auto& d : dets) {
        schedule(LocalEvent{d.window_end_s, 0, LocalKind::WindowReady, p.id, d.window_index, {}});
      }
      detections_[p.id] = std::move(dets);
    }
  }

  RunResult run() {
    const double end = scenario_.duration_s;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    while (true) {
      const double t_local = local_.empty() ? kInf : local_.top().t_s;
      const double t_net = net_.next_event_time().value_or(kInf);
      const double t = std::min(t_local, t_net);
      if (t > end) break;
      if (t_net <= t_local) {
        for (const auto& d : net_.advance_to(t_net)) on_delivery(d);
      } else {
        LocalEvent e = local_.top();
        local_.pop();
        net_.advance_to(e.t_s);
        on_local(e);
      }
    }
    net_.advance_to(end);

    logs_.end_s = end;
    logs_.trace = net_.trace();
    logs_.transitions = net_.transitions();
    for (const auto& a : net_.anomalies()) logs_.anomalies.push_back("mesh: " + a);
    logs_.warnings = memory_sink_.records();
    for (const auto& p : scenario_.pns) {
      for (const auto& d : detections_[p.id]) logs_.detections.push_back(PnDetection{p.id, d});
    }

    RunResult result;
    result.metrics = compute_metrics(logs_, scenario_, config_.match_horizon_s);
    result.logs = std::move(logs_);
    return result;
  }

 private:
  mesh::MeshConfig network_config() const {
    mesh::MeshConfig m = scenario_.network ? *scenario_.network : config_.mesh ? *config_.mesh : mesh::MeshConfig{};
    m.seed = derive_seed(scenario_.seed, "mesh");
    return m;
  }

  void schedule(LocalEvent e) {
    e.seq = next_seq_++;
    local_.push(std::move(e));
  }

  double now() const { return net_.now(); }

  void on_local(const LocalEvent& e) {
    switch (e.kind) {
      case LocalKind::WindowReady:
        step_pn(e.node, pn::SeismicWindowReady{detections_[e.node].at(e.index)});
        break;
      case LocalKind::FrameCaptured:
        step_pn(e.node, pn::FrameCaptured{capture(e.node)});
        break;
      case LocalKind::PnTimer:
        step_pn(e.node, pn::TimerExpired{});
        break;
      case LocalKind::DetectorDone: {
        DetectorDecision decision = cn::detect_frame(e.frame, *detector_);
        ++logs_.decisions[e.frame.frame_id];
        step_cn(cn::DetectorResult{std::move(decision)});
        break;
      }
    }
  }

  ThermalFrame capture(const std::string& pn_id) {
    ThermalFrame f;
    f.frame_id = pn_id + "-f" + std::to_string(++frame_counter_[pn_id]);
    f.pn_id = pn_id;
    f.timestamp_s = now();
    bool present = false;
    for (const auto& e : scenario_.events) {
      if (!e.thermal_visible || std::find(e.pns.begin(), e.pns.end(), pn_id) == e.pns.end()) continue;
      if (now() >= e.t_onset_s && now() < e.t_onset_s + e.presence_s) present = true;
    }
    f.sim_ground_truth = present;
    if (present) f.sim_truth_boxes.push_back(BoundingBox{40.0, 30.0, 100.0, 90.0, 1.0});
    return f;
  }

  void step_pn(const std::string& id, const pn::PnEvent& event) {
    const pn::PnState before = pn_states_.at(id);
    pn::PnStepResult r = pn::pn_step(before, event, pn_configs_.at(id), now());
    if (r.anomaly) logs_.anomalies.push_back(id + ": " + *r.anomaly);
    const pn::StateKind from = pn::kind_of(before);
    const pn::StateKind to = pn::kind_of(r.state);
    pn_states_[id] = r.state;
    if (from != to) logs_.state_logs[id].push_back(pn::StateSample{now(), to});

    bool logged = false;
    for (const auto& a : r.actions) {
      if (std::holds_alternative<pn::RecordScore>(a)) continue;
      logs_.actions.push_back(ActionRecord{now(), id, pn::to_string(from), pn::to_string(to), pn::action_name(a)});
      logged = true;
      std::visit(overloaded{[&](const pn::CaptureFrame&) {
                              schedule(LocalEvent{now() + config_.capture_delay_s, 0, LocalKind::FrameCaptured, id,
                                                  0, {}});
                            },
                            [&](const pn::PublishFrame& p) {
                              logs_.frames_published.push_back(p.frame.frame_id);
                              logs_.frame_pn[p.frame.frame_id] = id;
                              net_.publish(id, mesh::topics::frame(id), codec::encode_frame(p.frame), config_.qos);
                            },
                            [&](const pn::PlayDeterrent& p) {
                              const std::string key = p.command.frame_id.empty() ? id + "/local" : p.command.frame_id;
                              ++logs_.repel_executions[key];
                            },
                            [&](const pn::ScheduleTimer& s) {
                              schedule(LocalEvent{s.at_s, 0, LocalKind::PnTimer, id, 0, {}});
                            },
                            [](const auto&) {}},
                 a);
    }
    if (!logged && from != to) {
      logs_.actions.push_back(ActionRecord{now(), id, pn::to_string(from), pn::to_string(to), "none"});
    }
  }

  void step_cn(const cn::CnEvent& event) {
    cn::CnStepResult r = cn::cn_step(cn_state_, event, cn_config_, now());
    if (r.anomaly) logs_.anomalies.push_back(config_.cn_id + ": " + *r.anomaly);
    cn_state_ = std::move(r.state);
    for (const auto& a : r.actions) {
      std::visit(
          overloaded{
              [&](const cn::RunDetector& d) {
                log_cn("RunDetector");
                schedule(LocalEvent{now() + config_.detector_latency_s, 0, LocalKind::DetectorDone, config_.cn_id, 0,
                                    d.frame});
              },
              [&](const cn::PublishRepelCommand& p) {
                log_cn("PublishRepelCommand");
                net_.publish(config_.cn_id, mesh::topics::command(p.command.pn_id), codec::encode_command(p.command),
                             config_.qos);
              },
              [&](const cn::PublishNegativeDecision& p) {
                log_cn("PublishNegativeDecision");
                net_.publish(config_.cn_id, mesh::topics::command(p.decision.pn_id),
                             codec::encode_negative(p.decision), config_.qos);
              },
              [&](const cn::EmitWarning& w) {
                log_cn("EmitWarning");
                const cn::WarningRecord rec = cn::make_warning(w.kind, w.decision, w.pn_id, now());
                for (auto& an : cn::deliver_warning(rec, sinks_)) logs_.anomalies.push_back(config_.cn_id + ": " + an);
              }},
          a);
    }
  }

  void log_cn(const std::string& action) {
    logs_.actions.push_back(ActionRecord{now(), config_.cn_id, "Active", "Active", action});
  }

  void on_delivery(const mesh::Delivery& d) {
    // At-least-once transfers can repeat; each endpoint keeps the ids it has seen.
    if (!seen_[d.client].insert(d.message.msg_id).second) return;
    try {
      if (d.client == config_.cn_id) {
        if (!is_frame_topic(d.message.topic)) return;
        ThermalFrame frame = codec::decode_frame(d.message.payload);
        ++logs_.frames_received[frame.frame_id];
        step_cn(cn::FrameReceived{std::move(frame)});
        return;
      }
      if (pn_states_.count(d.client) == 0 || d.message.topic != mesh::topics::command(d.client)) return;
      const codec::CommandPayload cmd = codec::decode_command_payload(d.message.payload);
      if (cmd.repel) {
        step_pn(d.client, pn::CommandReceived{*cmd.repel});
      } else if (cmd.negative) {
        step_pn(d.client, pn::CommandReceived{*cmd.negative});
      }
    } catch (const ParseError& e) {
      logs_.anomalies.push_back(d.client + ": undecodable payload on " + d.message.topic + ": " + e.what());
    }
  }

  const Scenario& scenario_;
  const SimConfig& config_;
  mesh::Network net_;
  cn::CnConfig cn_config_;
  std::unique_ptr<cn::Detector> detector_;
  cn::CnState cn_state_;
  cn::MemoryWarningSink memory_sink_;
  std::unique_ptr<cn::JsonlWarningSink> jsonl_sink_;
  std::unique_ptr<cn::CommandWarningSink> command_sink_;
  std::vector<cn::WarningSink*> sinks_;
  std::map<std::string, pn::PnConfig> pn_configs_;
  std::map<std::string, pn::PnState> pn_states_;
  std::map<std::string, std::vector<WindowDetection>> detections_;
  std::map<std::string, std::set<std::uint64_t>> seen_;
  std::map<std::string, std::uint64_t> frame_counter_;
  std::priority_queue<LocalEvent, std::vector<LocalEvent>, LocalOrder> local_;
  std::uint64_t next_seq_ = 0;
  RunLogs logs_;
};

}  // namespace

RunResult run_scenario(const Scenario& scenario, const SimConfig& config) {
  validate(scenario, config);
  Simulation sim(scenario, config);
  RunResult result = sim.run();
  if (!config.output_dir.empty()) write_outputs(result, config.output_dir);
  return result;
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const RunLogs& logs = result.logs;

  std::ostringstream trace;
  for (const auto& t : logs.trace) trace << mesh::to_json_line(t) << '\n';
  io::write_file(dir / "delivery_trace.jsonl", trace.str());

  std::ostringstream actions;
  for (const auto& a : logs.actions) {
    nlohmann::ordered_json j;
    j["t"] = a.t_s;
    j["node"] = a.node;
    j["state_from"] = a.state_from;
    j["state_to"] = a.state_to;
    j["action"] = a.action;
    actions << j.dump() << '\n';
  }
  io::write_file(dir / "actions.jsonl", actions.str());

  std::ostringstream dets;
  for (const auto& d : logs.detections) {
    nlohmann::ordered_json j;
    j["pn"] = d.pn_id;
    j["window_index"] = d.detection.window_index;
    j["start_s"] = d.detection.window_start_s;
    j["ds"] = to_int(d.detection.ds);
    j["max_run"] = d.detection.max_run;
    dets << j.dump() << '\n';
  }
  io::write_file(dir / "detections.jsonl", dets.str());

  std::ostringstream anomalies;
  for (const auto& a : logs.anomalies) anomalies << nlohmann::json{{"text", a}}.dump() << '\n';
  io::write_file(dir / "anomalies.jsonl", anomalies.str());

  io::write_file(dir / "metrics.json", to_json(result.metrics));
}

}  // namespace elemantra::harness
