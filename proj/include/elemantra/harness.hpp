#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elemantra/meshnet.hpp"
#include "elemantra/node_cn.hpp"
#include "elemantra/node_pn.hpp"
#include "elemantra/seismic_detect.hpp"
#include "elemantra/synth.hpp"

namespace elemantra::harness {

struct PnSpec {
  std::string id;
  std::string position;  // label only
};

struct ElephantEvent {
  double t_onset_s = 0.0;
  std::vector<std::string> pns;
  RumbleSpec rumble;
  bool thermal_visible = true;
  // How long the animal stays in view of the affected cameras after onset.
  double presence_s = 60.0;
};

struct Scenario {
  double duration_s = 60.0;
  std::vector<PnSpec> pns;
  std::vector<ElephantEvent> events;
  std::optional<mesh::MeshConfig> network;
  std::string detector = "oracle";
  std::uint64_t seed = 0;

  void validate() const;
};

/// See README for the schema. A string "network" is a path relative to the
/// scenario file's directory.
Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

struct SimConfig {
  double window_s = 4.0;
  Algorithm1Params alg1;
  pn::PnConfig pn;  // node_id and seed are filled per node
  cn::CnConfig cn;
  cn::StochasticDetectorParams detector;
  std::optional<mesh::MeshConfig> mesh;  // used when the scenario names no network
  mesh::Qos qos = mesh::Qos::AtLeastOnce;
  double noise_rms = 0.1;
  double capture_delay_s = 0.1;
  double detector_latency_s = 0.2;
  double match_horizon_s = 30.0;
  std::string cn_id = "cn";
  std::string warning_command;  // optional external sink, e.g. an SMS gateway script
  std::filesystem::path output_dir;

  void validate() const;
};

SimConfig parse_sim_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
SimConfig load_sim_config(const std::filesystem::path& path);

/// Throws InvalidConfig when the pair cannot be run together.
void validate(const Scenario& scenario, const SimConfig& config);

struct ActionRecord {
  double t_s = 0.0;
  std::string node;
  std::string state_from;
  std::string state_to;
  std::string action;
};

struct PnDetection {
  std::string pn_id;
  WindowDetection detection;
};

/// Everything one run produced.
struct RunLogs {
  double end_s = 0.0;
  std::vector<mesh::TraceRecord> trace;
  std::vector<mesh::BrokerTransition> transitions;
  std::vector<ActionRecord> actions;
  std::vector<cn::WarningRecord> warnings;
  std::vector<PnDetection> detections;
  std::map<std::string, std::vector<pn::StateSample>> state_logs;
  std::vector<std::string> anomalies;

  std::vector<std::string> frames_published;
  std::map<std::string, int> frames_received;  // frame_id -> unique deliveries at the CN
  std::map<std::string, int> decisions;        // frame_id -> detector decisions
  std::map<std::string, int> repel_executions;  // frame_id -> PlayDeterrent actions
  std::map<std::string, std::string> frame_pn;  // frame_id -> publishing node
};

struct EventOutcome {
  std::size_t index = 0;
  double t_onset_s = 0.0;
  bool detected = false;
  std::optional<double> latency_s;
};

struct MetricsReport {
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  std::vector<EventOutcome> events;
  std::optional<double> recall;  // empty without events
  std::size_t warning_count = 0;
  std::size_t false_warning_count = 0;
  std::map<std::string, double> ir_duty_cycle;
  std::map<std::string, std::size_t> message_counts;  // topic -> publishes
  std::size_t anomaly_count = 0;
};

std::string to_json(const MetricsReport& report);

/// A warning matches an event when it names an affected node and falls in
/// [onset, onset + match_horizon_s]. Unmatched warnings are false.
MetricsReport compute_metrics(const RunLogs& logs, const Scenario& scenario, double match_horizon_s = 30.0);

/// Seismic trace a node records over the whole scenario.
SeismicTrace synth_pn_trace(const Scenario& scenario, const std::string& pn_id, double noise_rms,
                            double sample_rate_hz = 1000.0);

struct RunResult {
  MetricsReport metrics;
  RunLogs logs;
};

/// Runs the scenario in one discrete-event loop. With config.output_dir set,
/// warnings_<kind>.jsonl are written by the warning sink during the run and
/// write_outputs is called at the end.
RunResult run_scenario(const Scenario& scenario, const SimConfig& config);

/// delivery_trace.jsonl, actions.jsonl, detections.jsonl, anomalies.jsonl, metrics.json
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

}  // namespace elemantra::harness
