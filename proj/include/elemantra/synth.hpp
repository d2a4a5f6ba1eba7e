#pragma once

#include <cstdint>
#include <limits>

#include "elemantra/signal.hpp"

namespace elemantra {

enum class Envelope { Rectangular, Tukey, Hann };

/// Synthetic elephant rumble: a phase-continuous chirp whose instantaneous
/// frequency runs f_start -> f_peak -> f_end piecewise-linearly.
struct RumbleSpec {
  double duration_s = 4.0;
  double f_start_hz = 20.0;
  double f_peak_hz = 40.0;
  double f_end_hz = 20.0;
  Envelope envelope = Envelope::Tukey;
  double tukey_taper = 0.1;  // fraction of the duration tapered at each end
  double amplitude = 1.0;
  double snr_db = std::numeric_limits<double>::infinity();
};

/// Rejects negative durations, frequencies outside (0, Nyquist) and bad tapers.
void validate(const RumbleSpec& spec, double sample_rate_hz);

/// Background noise power is chosen from the rumble's nominal sinusoid power
/// (amplitude^2 / 2) so that snr_db holds regardless of duration; a zero-length
/// rumble therefore still yields noise at the same level.
SeismicTrace synth_rumble(const RumbleSpec& spec, double sample_rate_hz, double total_s,
                          double onset_s, std::uint64_t seed);

/// Noise-free chirp samples for the given spec (length = round(duration * rate)).
Eigen::VectorXd rumble_waveform(const RumbleSpec& spec, double sample_rate_hz);

/// Gaussian white noise with the given RMS (population standard deviation).
Eigen::VectorXd white_noise(Eigen::Index n, double rms_level, std::uint64_t seed);

Eigen::VectorXd tone(Eigen::Index n, double freq_hz, double sample_rate_hz, double amplitude = 1.0,
                     double phase = 0.0);

/// Linear chirp from f0 to f1 over n samples.
Eigen::VectorXd linear_chirp(Eigen::Index n, double f0_hz, double f1_hz, double sample_rate_hz,
                             double amplitude = 1.0);

struct BeeBuzzSpec {
  double duration_s = 4.0;
  double frame_rate_hz = 8000.0;
  int bees = 24;
  double fundamental_hz = 230.0;
  double fundamental_spread_hz = 60.0;  // per-bee fundamentals uniform in +/- spread
  double vibrato_depth_hz = 8.0;
  double vibrato_rate_hz = 3.0;
  int max_harmonics = 16;
  double harmonic_rolloff = 2.0;  // harmonic k has amplitude k^-rolloff
  double noise_level = 0.2;  // noise-bed RMS relative to the chorus RMS
  double noise_lowpass_hz = 200.0;  // one-pole low-pass on the noise bed; 0 keeps it white
  double peak = 0.8;
};

/// Hive-like buzz: a chorus of harmonic stacks (one per bee) with detuned
/// wing-beat fundamentals, slow vibrato, amplitude flutter and breath noise.
AudioClip synth_bee_buzz(const BeeBuzzSpec& spec, std::uint64_t seed);

}  // namespace elemantra
