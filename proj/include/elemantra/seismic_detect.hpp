#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elemantra/signal.hpp"
#include "elemantra/spectral.hpp"

namespace elemantra {

/// Thresholds of the ESP32-side detector. Band and count comparisons are strict
/// except the upper count, which is inclusive (run >= count_high scores 2).
struct Algorithm1Params {
  double band_low_hz = 20.0;
  double band_high_hz = 40.0;
  int count_low = 6;
  int count_high = 24;
  double subsegment_s = 0.125;
  double window_s = 4.0;

  void validate() const;
};

/// Three-level detection score.
enum class DetectionScore : int { None = 0, Likely = 1, Strong = 2 };

inline int to_int(DetectionScore ds) { return static_cast<int>(ds); }

struct WindowDetection {
  std::size_t window_index = 0;
  DetectionScore ds = DetectionScore::None;
  int max_run = 0;
  double window_start_s = 0.0;
  double window_end_s = 0.0;
  std::vector<double> subsegment_peaks_hz;
};

/// Maps the longest in-band run to a score.
DetectionScore score_from_run(int max_run, const Algorithm1Params& params);

/// Longest run of consecutive true values.
int longest_run(const std::vector<bool>& flags);

inline bool in_band(double f_hz, const Algorithm1Params& p) {
  return f_hz > p.band_low_hz && f_hz < p.band_high_hz;
}

/// Scores one window: each sub-segment's rectangular-window peak frequency is
/// tested against the band; the longest consecutive in-band run sets the score.
WindowDetection detect_window(const SeismicTrace& window, const Algorithm1Params& params = {},
                              std::size_t window_index = 0);

std::vector<WindowDetection> detect_stream(const SeismicTrace& trace,
                                           const Algorithm1Params& params = {});

/// {"window_index","start_s","ds","max_run"}
std::string to_json_line(const WindowDetection& d);

// ---------------------------------------------------------------------------
// STFT reference detector

struct RumbleEvent {
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::vector<std::pair<double, double>> peak_trajectory;  // (frame centre, peak Hz)

  double duration_s() const { return t_end_s - t_start_s; }
};

struct OracleParams {
  double frame_s = 0.5;
  double hop_s = 0.125;
  double min_event_s = 3.0;
  bool require_rise_fall = false;
  double band_low_hz = 20.0;
  double band_high_hz = 40.0;
};

/// Maximal runs of Hann-windowed STFT frames whose peak lies strictly inside the
/// band and whose extent (first frame start to last frame end) lasts at least
/// min_event_s. With require_rise_fall the run's highest peak must be strictly
/// above the peaks of its first and last frame.
std::vector<RumbleEvent> stft_oracle_detect(const SeismicTrace& trace, const OracleParams& params = {});

struct EventMatch {
  std::size_t event_index = 0;
  bool matched = false;
  std::optional<std::size_t> window_index;
};

struct RecallReport {
  std::size_t oracle_count = 0;
  std::size_t matched_count = 0;
  std::optional<double> recall;  // empty when there are no oracle events
  std::vector<EventMatch> matches;
};

/// An event counts as found when any window scoring at least ds_min overlaps it.
RecallReport match_and_recall(const std::vector<WindowDetection>& detections,
                              const std::vector<RumbleEvent>& events,
                              DetectionScore ds_min = DetectionScore::Likely);

/// Recall reported on the authors' 44-recording field dataset; reference only.
inline constexpr double kReferenceFieldRecall = 0.82;

}  // namespace elemantra
