#include "elemantra/node_cn.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <signal.h>
#include <sys/wait.h>

#include "elemantra/error.hpp"
#include "elemantra/io.hpp"
#include "elemantra/random.hpp"

namespace elemantra::cn {

namespace {

bool truth_of(const ThermalFrame& frame, const char* who) {
  if (!frame.sim_ground_truth) {
    throw InvalidInput(std::string(who) + ": frame " + frame.frame_id + " carries no ground truth");
  }
  return *frame.sim_ground_truth;
}

}  // namespace

// ---------------------------------------------------------------------------

DetectorDecision OracleDetector::detect(const ThermalFrame& frame) const {
  DetectorDecision d;
  d.frame_id = frame.frame_id;
  d.elephant_present = truth_of(frame, "oracle detector");
  d.confidence = d.elephant_present ? 1.0 : 0.0;
  if (d.elephant_present) {
    d.boxes = frame.sim_truth_boxes;
    for (auto& b : d.boxes) b.confidence = 1.0;
  }
  return d;
}

void StochasticDetectorParams::validate() const {
  if (!(true_positive_rate >= 0.0 && true_positive_rate <= 1.0) ||
      !(false_positive_rate >= 0.0 && false_positive_rate <= 1.0)) {
    throw InvalidConfig("StochasticDetectorParams: rates must lie in [0, 1]");
  }
}

StochasticDetector::StochasticDetector(StochasticDetectorParams params) : params_(params) { params_.validate(); }

DetectorDecision StochasticDetector::detect(const ThermalFrame& frame) const {
  const bool truth = truth_of(frame, "stochastic detector");
  Rng rng(derive_seed(params_.seed, frame.frame_id));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double draw = u(rng);
  const double confidence = 0.5 + 0.5 * u(rng);

  DetectorDecision d;
  d.frame_id = frame.frame_id;
  d.elephant_present = draw < (truth ? params_.true_positive_rate : params_.false_positive_rate);
  if (!d.elephant_present) return d;
  d.confidence = confidence;
  if (truth && !frame.sim_truth_boxes.empty()) {
    d.boxes = frame.sim_truth_boxes;
    for (auto& b : d.boxes) b.confidence = confidence;
  } else {
    // Spurious box somewhere in the frame.
    const double w = std::max(2.0, 0.25 * frame.width);
    const double h = std::max(2.0, 0.25 * frame.height);
    BoundingBox b;
    b.x_min = u(rng) * (frame.width - w);
    b.y_min = u(rng) * (frame.height - h);
    b.x_max = b.x_min + w;
    b.y_max = b.y_min + h;
    b.confidence = confidence;
    d.boxes.push_back(b);
  }
  return d;
}

DetectorDecision PresenceOnlyDetector::detect(const ThermalFrame& frame) const {
  DetectorDecision d;
  d.frame_id = frame.frame_id;
  d.elephant_present = truth_of(frame, "presence-only detector");
  d.confidence = d.elephant_present ? 1.0 : 0.0;
  return d;
}

DetectorDecision detect_frame(const ThermalFrame& frame, const Detector& detector) {
  DetectorDecision d = detector.detect(frame);
  if (d.elephant_present && !(d.confidence > 0.0)) {
    throw InvalidInput("detect_frame: positive decision with zero confidence");
  }
  return d;
}

std::unique_ptr<Detector> make_detector(const std::string& kind, const StochasticDetectorParams& params) {
  if (kind == "oracle") return std::make_unique<OracleDetector>();
  if (kind == "stochastic") return std::make_unique<StochasticDetector>(params);
  if (kind == "presence_only") return std::make_unique<PresenceOnlyDetector>();
  throw InvalidConfig("unknown detector '" + kind + "'");
}

// ---------------------------------------------------------------------------

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

LabeledFrameSet parse_labeled_set(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("labeled set: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  LabeledFrameSet set;
  try {
    for (const auto& jf : j.at("frames")) {
      LabeledFrame lf;
      lf.frame.frame_id = jf.at("frame_id").get<std::string>();
      lf.frame.pn_id = jf.value("pn_id", std::string("dataset"));
      lf.frame.width = jf.value("width", 160);
      lf.frame.height = jf.value("height", 120);
      lf.split = jf.value("split", std::string("test"));
      for (const auto& jb : jf.value("boxes", nlohmann::json::array())) {
        BoundingBox b;
        b.x_min = jb.at("x_min").get<double>();
        b.y_min = jb.at("y_min").get<double>();
        b.x_max = jb.at("x_max").get<double>();
        b.y_max = jb.at("y_max").get<double>();
        if (!b.valid()) throw InvalidInput("labeled set: degenerate box in frame " + lf.frame.frame_id);
        lf.truth.push_back(b);
      }
      lf.frame.sim_ground_truth = !lf.truth.empty();
      lf.frame.sim_truth_boxes = lf.truth;
      set.frames.push_back(std::move(lf));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("labeled set: ") + e.what(), 0);
  }
  return set;
}

LabeledFrameSet load_labeled_set(const std::filesystem::path& path) {
  return parse_labeled_set(io::read_file(path));
}

double average_precision_50(const std::vector<std::vector<BoundingBox>>& truth,
                            const std::vector<ScoredPrediction>& predictions) {
  std::size_t total = 0;
  for (const auto& t : truth) total += t.size();
  if (total == 0) throw InvalidInput("average_precision_50: no ground-truth boxes");

  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].box.confidence > predictions[b].box.confidence;
  });

  std::vector<std::vector<bool>> used(truth.size());
  for (std::size_t f = 0; f < truth.size(); ++f) used[f].assign(truth[f].size(), false);

  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t idx : order) {
    const auto& p = predictions[idx];
    if (p.frame_index >= truth.size()) throw InvalidInput("average_precision_50: prediction frame out of range");
    const auto& gts = truth[p.frame_index];
    double best = 0.0;
    std::optional<std::size_t> best_gt;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[p.frame_index][g]) continue;
      const double v = iou(p.box, gts[g]);
      if (v >= 0.5 && v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt) {
      used[p.frame_index][*best_gt] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total));
  }

  // All-point interpolation: precision envelope from the right.
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double evaluate_ap50(const Detector& detector, const LabeledFrameSet& set) {
  if (set.frames.empty()) throw InvalidInput("evaluate_ap50: empty labeled set");
  if (!detector.emits_boxes()) throw InvalidInput("evaluate_ap50: detector '" + detector.name() + "' emits no boxes");
  std::vector<std::vector<BoundingBox>> truth;
  std::vector<ScoredPrediction> preds;
  for (std::size_t i = 0; i < set.frames.size(); ++i) {
    truth.push_back(set.frames[i].truth);
    const DetectorDecision d = detect_frame(set.frames[i].frame, detector);
    for (const auto& b : d.boxes) preds.push_back({i, b});
  }
  return average_precision_50(truth, preds);
}

// ---------------------------------------------------------------------------

std::string to_string(WarningKind kind) {
  return kind == WarningKind::OfficerMessage ? "officer_message" : "siren";
}

std::string to_json_line(const WarningRecord& record) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(record.kind);
  j["timestamp_s"] = record.timestamp_s;
  j["pn_id"] = record.pn_id;
  j["text"] = record.text;
  return j.dump();
}

JsonlWarningSink::JsonlWarningSink(std::filesystem::path directory) : dir_(std::move(directory)) {}

std::filesystem::path JsonlWarningSink::path_for(WarningKind kind) const {
  return dir_ / ("warnings_" + to_string(kind) + ".jsonl");
}

bool JsonlWarningSink::write(const WarningRecord& record) {
  std::ofstream out(path_for(record.kind), std::ios::app);
  if (!out) return false;
  out << to_json_line(record) << '\n';
  return static_cast<bool>(out);
}

bool MemoryWarningSink::write(const WarningRecord& record) {
  records_.push_back(record);
  return true;
}

CommandWarningSink::CommandWarningSink(std::string command) : command_(std::move(command)) {}

bool CommandWarningSink::write(const WarningRecord& record) {
  // A command that exits without reading stdin must fail the write, not kill us.
  struct sigaction ignore {}, previous {};
  ignore.sa_handler = SIG_IGN;
  ::sigemptyset(&ignore.sa_mask);
  ::sigaction(SIGPIPE, &ignore, &previous);
  bool ok = false;
  if (FILE* pipe = ::popen(command_.c_str(), "w"); pipe != nullptr) {
    const std::string line = to_json_line(record) + "\n";
    const bool wrote = std::fwrite(line.data(), 1, line.size(), pipe) == line.size();
    const bool flushed = std::fflush(pipe) == 0;
    const int status = ::pclose(pipe);
    ok = wrote && flushed && status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  }
  ::sigaction(SIGPIPE, &previous, nullptr);
  return ok;
}

WarningRecord make_warning(WarningKind kind, const DetectorDecision& decision, const std::string& pn_id,
                           double clock_s) {
  WarningRecord r;
  r.kind = kind;
  r.timestamp_s = clock_s;
  r.pn_id = pn_id;
  char conf[32];
  std::snprintf(conf, sizeof conf, "%.2f", decision.confidence);
  r.text = kind == WarningKind::OfficerMessage
               ? "Elephant detected near " + pn_id + " (frame " + decision.frame_id + ", confidence " + conf + ")"
               : "Siren activated: elephant near " + pn_id;
  return r;
}

std::vector<std::string> deliver_warning(const WarningRecord& record, const std::vector<WarningSink*>& sinks) {
  std::vector<std::string> anomalies;
  for (std::size_t i = 0; i < sinks.size(); ++i) {
    if (sinks[i] == nullptr) continue;
    if (sinks[i]->write(record) || sinks[i]->write(record)) continue;
    anomalies.push_back("warning sink " + std::to_string(i) + " failed twice for " + to_string(record.kind) +
                        " at t=" + io::format_real(record.timestamp_s));
  }
  return anomalies;
}

WarningEmission emit_warning(const DetectorDecision& decision, const std::string& pn_id, double clock_s,
                             const std::vector<WarningSink*>& sinks) {
  WarningEmission out;
  if (!decision.elephant_present) return out;
  for (WarningKind kind : {WarningKind::OfficerMessage, WarningKind::Siren}) {
    WarningRecord r = make_warning(kind, decision, pn_id, clock_s);
    auto anomalies = deliver_warning(r, sinks);
    out.anomalies.insert(out.anomalies.end(), anomalies.begin(), anomalies.end());
    out.records.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

CnStepResult cn_step(const CnState& state, const CnEvent& event, const CnConfig& config, double clock_s) {
  CnStepResult r;
  r.state = state;
  if (const auto* fr = std::get_if<FrameReceived>(&event)) {
    const auto& id = fr->frame.frame_id;
    if (state.frames.count(id) != 0) {
      r.anomaly = "duplicate frame " + id + " ignored";
      return r;
    }
    r.state.frames[id] = PendingFrame{fr->frame.pn_id, clock_s, false};
    r.actions.emplace_back(RunDetector{fr->frame});
    return r;
  }

  const auto& decision = std::get<DetectorResult>(event).decision;
  auto it = r.state.frames.find(decision.frame_id);
  if (it == r.state.frames.end()) {
    r.anomaly = "decision for unknown frame " + decision.frame_id;
    return r;
  }
  if (it->second.decided) {
    r.anomaly = "duplicate decision for frame " + decision.frame_id + " ignored";
    return r;
  }
  it->second.decided = true;
  const std::string& pn_id = it->second.pn_id;
  if (decision.elephant_present) {
    Rng rng(derive_seed(config.seed, decision.frame_id));
    RepelCommand cmd;
    cmd.pn_id = pn_id;
    cmd.frame_id = decision.frame_id;
    cmd.issued_at_s = clock_s;
    cmd.deterrent = pick_modification(rng, config.alpha_range);
    cmd.flash_freq_hz = config.flash_freq_hz;
    cmd.duration_s = config.repel_duration_s;
    r.actions.emplace_back(PublishRepelCommand{std::move(cmd)});
    r.actions.emplace_back(EmitWarning{WarningKind::OfficerMessage, decision, pn_id});
    r.actions.emplace_back(EmitWarning{WarningKind::Siren, decision, pn_id});
  } else {
    r.actions.emplace_back(PublishNegativeDecision{NegativeDecision{pn_id, decision.frame_id, clock_s}});
  }
  return r;
}

}  // namespace elemantra::cn
