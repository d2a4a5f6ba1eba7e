#pragma once

#include <Eigen/Dense>
#include <vector>

namespace elemantra {

inline constexpr double kDefaultSeismicRateHz = 1000.0;

/// Sampled ground-velocity signal (arbitrary units).
struct SeismicTrace {
  Eigen::VectorXd samples;
  double sample_rate_hz = kDefaultSeismicRateHz;
  double start_time_s = 0.0;

  Eigen::Index size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
  double end_time_s() const { return start_time_s + duration_s(); }
};

/// Audio samples in [-1, 1] played back at frame_rate_hz.
struct AudioClip {
  Eigen::VectorXd samples;
  double frame_rate_hz = 8000.0;

  Eigen::Index size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / frame_rate_hz; }
};

/// One-sided magnitude spectrum, DC excluded.
struct Spectrum {
  Eigen::VectorXd freqs_hz;
  Eigen::VectorXd magnitudes;

  Eigen::Index size() const { return freqs_hz.size(); }
};

/// Magnitudes are stored [frame x frequency].
struct Spectrogram {
  Eigen::VectorXd frame_times_s;  // frame centres
  Eigen::VectorXd freqs_hz;
  Eigen::MatrixXd magnitudes;
  double hop_s = 0.0;
  double frame_s = 0.0;

  Eigen::Index frames() const { return magnitudes.rows(); }
  Eigen::Index bins() const { return magnitudes.cols(); }
};

/// Samples per span, rounded to nearest.
Eigen::Index samples_for(double seconds, double rate_hz);

/// Splits a trace into contiguous non-overlapping windows of exactly window_s.
/// A trailing remainder shorter than one window is discarded.
std::vector<SeismicTrace> window_trace(const SeismicTrace& trace, double window_s);

/// Root-mean-square of a sample vector; 0 for an empty one.
double rms(const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace elemantra
