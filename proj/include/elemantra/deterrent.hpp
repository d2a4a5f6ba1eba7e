#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "elemantra/random.hpp"
#include "elemantra/signal.hpp"

namespace elemantra {

enum class ModificationKind { FrameRateScale, PinkNoiseOverlay, SilenceGaps };

std::string to_string(ModificationKind kind);
ModificationKind modification_from_string(const std::string& name);

struct AlphaRange {
  double lo = 0.5;
  double hi = 1.5;
};

struct ModificationParams {
  ModificationKind kind = ModificationKind::FrameRateScale;
  double alpha = 1.0;
  std::uint64_t seed = 0;  // drives noise / gap placement
};

/// Draws a method uniformly over the three kinds and alpha uniformly over range.
ModificationParams pick_modification(Rng& rng, AlphaRange range = {});

/// Reinterprets the samples at alpha times the original frame rate.
AudioClip modify_frame_rate(const AudioClip& clip, double alpha);

/// Unit-RMS, zero-mean noise with 1/f power spectral density above f_min_hz
/// (bins below f_min_hz are shaped as if they were at f_min_hz).
Eigen::VectorXd generate_pink_noise(Eigen::Index n_samples, double sample_rate_hz, std::uint64_t seed,
                                    double f_min_hz = 1.0);

/// The noise term actually added by overlay_pink_noise, RMS = 0.1 * alpha * rms(clip).
Eigen::VectorXd pink_overlay_component(const AudioClip& clip, double alpha, std::uint64_t seed);

/// clip + pink_overlay_component, peak-renormalised into [-1, 1] only if it clips.
AudioClip overlay_pink_noise(const AudioClip& clip, double alpha, std::uint64_t seed);

struct GapOptions {
  double frame_s = 1.0;
  double gap_prob = 0.3;
  double base_gap_s = 0.1;  // GL = alpha * base_gap_s
};

struct SilenceGapResult {
  AudioClip clip;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> gaps;  // [begin, end) sample spans
  std::vector<std::string> warnings;
};

/// Zeroes one span of alpha * 100 ms at a seeded offset inside each selected frame.
SilenceGapResult insert_silence_gaps(const AudioClip& clip, double alpha, std::uint64_t seed,
                                     const GapOptions& options = {});

struct ModificationOutcome {
  AudioClip clip;
  std::vector<std::string> warnings;
};

ModificationOutcome apply_modification(const AudioClip& clip, const ModificationParams& params,
                                       const GapOptions& gap_options = {});

struct SimilarityScore {
  double max_xcorr = 0.0;
  int best_lag_frames = 0;
};

struct SimilarityOptions {
  double frame_s = 0.064;
  double hop_s = 0.032;
  double dynamic_range_db = 60.0;
  double min_overlap_fraction = 0.5;
};

/// Maximum normalised cross-correlation over time-frame lags between the dB
/// spectrograms of two clips, each analysed at its own frame rate and
/// interpolated onto the coarser shared frequency grid. A positive lag means
/// frame i of b aligns with frame i + lag of a.
SimilarityScore stft_similarity(const AudioClip& a, const AudioClip& b, const SimilarityOptions& options = {});

/// L2 distance between the rendered waveforms, relative to the original's
/// norm. Both clips are evaluated on the original's sample grid by linear
/// interpolation in time; a clip is silent past its end.
double relative_l2_delta(const AudioClip& original, const AudioClip& modified);

}  // namespace elemantra
