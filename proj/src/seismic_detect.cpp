#include "elemantra/seismic_detect.hpp"

#include <cmath>
#include <json.hpp>

#include "elemantra/error.hpp"

namespace elemantra {

void Algorithm1Params::validate() const {
  if (!(band_low_hz > 0.0 && band_low_hz < band_high_hz)) {
    throw InvalidConfig("Algorithm1Params: need 0 < band_low_hz < band_high_hz");
  }
  if (!(count_low > 0 && count_low < count_high)) {
    throw InvalidConfig("Algorithm1Params: need 0 < count_low < count_high");
  }
  if (!(subsegment_s > 0.0 && window_s > 0.0)) {
    throw InvalidConfig("Algorithm1Params: durations must be positive");
  }
  if (count_high * subsegment_s > window_s + 1e-9) {
    throw InvalidConfig("Algorithm1Params: count_high * subsegment_s exceeds window_s");
  }
}

DetectionScore score_from_run(int max_run, const Algorithm1Params& params) {
  if (max_run >= params.count_high) return DetectionScore::Strong;
  if (max_run > params.count_low) return DetectionScore::Likely;
  return DetectionScore::None;
}

int longest_run(const std::vector<bool>& flags) {
  int best = 0;
  int run = 0;
  for (bool f : flags) {
    run = f ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

WindowDetection detect_window(const SeismicTrace& window, const Algorithm1Params& params,
                              std::size_t window_index) {
  params.validate();
  if (window.samples.size() == 0) throw InvalidInput("detect_window: empty window");
  const Eigen::Index expected = samples_for(params.window_s, window.sample_rate_hz);
  if (std::abs(window.samples.size() - expected) > 1) {
    throw InvalidInput("detect_window: window length " + std::to_string(window.samples.size()) +
                       " samples, expected " + std::to_string(expected));
  }

  const Eigen::Index seg_len = samples_for(params.subsegment_s, window.sample_rate_hz);
  if (seg_len < 2) throw InvalidInput("detect_window: sub-segment shorter than two samples");
  const Eigen::Index segments = window.samples.size() / seg_len;
  const Eigen::Index pad = default_pad(seg_len);

  WindowDetection det;
  det.window_index = window_index;
  det.window_start_s = window.start_time_s;
  det.window_end_s = window.end_time_s();
  det.subsegment_peaks_hz.reserve(static_cast<std::size_t>(segments));

  std::vector<bool> hits;
  hits.reserve(static_cast<std::size_t>(segments));
  for (Eigen::Index s = 0; s < segments; ++s) {
    const auto seg = window.samples.segment(s * seg_len, seg_len);
    // A segment with no variation has no spectral peak at all.
    const bool flat = (seg.array() - seg.mean()).abs().maxCoeff() == 0.0;
    const double peak =
        flat ? 0.0 : peak_frequency(compute_spectrum(seg, window.sample_rate_hz, pad));
    det.subsegment_peaks_hz.push_back(peak);
    hits.push_back(!flat && in_band(peak, params));
  }
  det.max_run = longest_run(hits);
  det.ds = score_from_run(det.max_run, params);
  return det;
}

std::vector<WindowDetection> detect_stream(const SeismicTrace& trace, const Algorithm1Params& params) {
  params.validate();
  if (trace.samples.size() == 0) throw InvalidInput("detect_stream: empty trace");
  if (trace.duration_s() + 0.5 / trace.sample_rate_hz < params.window_s) {
    throw InvalidInput("detect_stream: trace shorter than one window");
  }
  const auto windows = window_trace(trace, params.window_s);
  std::vector<WindowDetection> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) out.push_back(detect_window(windows[i], params, i));
  return out;
}

std::string to_json_line(const WindowDetection& d) {
  nlohmann::ordered_json j;
  j["window_index"] = d.window_index;
  j["start_s"] = d.window_start_s;
  j["ds"] = to_int(d.ds);
  j["max_run"] = d.max_run;
  return j.dump();
}

std::vector<RumbleEvent> stft_oracle_detect(const SeismicTrace& trace, const OracleParams& params) {
  if (!(params.min_event_s >= 0.0)) throw InvalidInput("stft_oracle_detect: negative min_event_s");
  StftParams sp;
  sp.frame_s = params.frame_s;
  sp.hop_s = params.hop_s;
  sp.window = WindowFn::Hann;
  const Spectrogram sg = compute_stft(trace, sp);
  const Eigen::VectorXd peaks = peak_trajectory(sg);

  std::vector<RumbleEvent> events;
  const Eigen::Index frames = peaks.size();
  Eigen::Index f = 0;
  while (f < frames) {
    const auto inside = [&](Eigen::Index k) {
      return peaks[k] > params.band_low_hz && peaks[k] < params.band_high_hz;
    };
    if (!inside(f)) {
      ++f;
      continue;
    }
    Eigen::Index last = f;
    while (last + 1 < frames && inside(last + 1)) ++last;

    RumbleEvent ev;
    ev.t_start_s = sg.frame_times_s[f] - 0.5 * sg.frame_s;
    ev.t_end_s = sg.frame_times_s[last] + 0.5 * sg.frame_s;
    for (Eigen::Index k = f; k <= last; ++k) ev.peak_trajectory.emplace_back(sg.frame_times_s[k], peaks[k]);

    bool keep = ev.duration_s() >= params.min_event_s - 1e-9;
    if (keep && params.require_rise_fall) {
      // Plateaus at either end are not a rise or a fall.
      const double top = peaks.segment(f, last - f + 1).maxCoeff();
      keep = top > peaks[f] && top > peaks[last];
    }
    if (keep) events.push_back(std::move(ev));
    f = last + 1;
  }
  return events;
}

RecallReport match_and_recall(const std::vector<WindowDetection>& detections,
                              const std::vector<RumbleEvent>& events, DetectionScore ds_min) {
  RecallReport report;
  report.oracle_count = events.size();
  for (std::size_t e = 0; e < events.size(); ++e) {
    EventMatch m;
    m.event_index = e;
    for (const auto& d : detections) {
      if (to_int(d.ds) < to_int(ds_min)) continue;
      if (d.window_start_s < events[e].t_end_s && d.window_end_s > events[e].t_start_s) {
        m.matched = true;
        m.window_index = d.window_index;
        break;
      }
    }
    if (m.matched) ++report.matched_count;
    report.matches.push_back(m);
  }
  if (report.oracle_count > 0) {
    report.recall = static_cast<double>(report.matched_count) / static_cast<double>(report.oracle_count);
  }
  return report;
}

}  // namespace elemantra
