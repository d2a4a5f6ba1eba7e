#include "elemantra/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "elemantra/error.hpp"
#include "elemantra/random.hpp"

namespace elemantra {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double envelope_at(const RumbleSpec& spec, double u) {
  switch (spec.envelope) {
    case Envelope::Rectangular:
      return 1.0;
    case Envelope::Hann:
      return 0.5 - 0.5 * std::cos(kTwoPi * u);
    case Envelope::Tukey: {
      const double a = spec.tukey_taper;
      if (a <= 0.0) return 1.0;
      if (u < a) return 0.5 - 0.5 * std::cos(std::numbers::pi * u / a);
      if (u > 1.0 - a) return 0.5 - 0.5 * std::cos(std::numbers::pi * (1.0 - u) / a);
      return 1.0;
    }
  }
  return 1.0;
}

}  // namespace

void validate(const RumbleSpec& spec, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) throw InvalidInput("rumble: sample rate must be positive");
  if (!(spec.duration_s >= 0.0)) throw InvalidInput("rumble: negative duration");
  const double nyquist = 0.5 * sample_rate_hz;
  for (double f : {spec.f_start_hz, spec.f_peak_hz, spec.f_end_hz}) {
    if (!(f > 0.0 && f < nyquist)) throw InvalidInput("rumble: frequency outside (0, Nyquist)");
  }
  if (!(spec.tukey_taper >= 0.0 && spec.tukey_taper <= 0.5)) {
    throw InvalidInput("rumble: tukey_taper must lie in [0, 0.5]");
  }
  if (!(spec.amplitude >= 0.0)) throw InvalidInput("rumble: negative amplitude");
  if (std::isnan(spec.snr_db)) throw InvalidInput("rumble: snr_db is NaN");
}

Eigen::VectorXd rumble_waveform(const RumbleSpec& spec, double sample_rate_hz) {
  validate(spec, sample_rate_hz);
  const Eigen::Index n = samples_for(spec.duration_s, sample_rate_hz);
  Eigen::VectorXd y(n);
  double phase = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    const double f = u < 0.5 ? spec.f_start_hz + (spec.f_peak_hz - spec.f_start_hz) * (u / 0.5)
                             : spec.f_peak_hz + (spec.f_end_hz - spec.f_peak_hz) * ((u - 0.5) / 0.5);
    y[i] = spec.amplitude * envelope_at(spec, u) * std::sin(phase);
    phase += kTwoPi * f / sample_rate_hz;
  }
  return y;
}

SeismicTrace synth_rumble(const RumbleSpec& spec, double sample_rate_hz, double total_s,
                          double onset_s, std::uint64_t seed) {
  validate(spec, sample_rate_hz);
  if (!(total_s > 0.0)) throw InvalidInput("synth_rumble: total_s must be positive");
  if (onset_s < 0.0 || onset_s + spec.duration_s > total_s + 0.5 / sample_rate_hz) {
    throw InvalidInput("synth_rumble: rumble does not fit inside the trace");
  }

  const Eigen::Index n = samples_for(total_s, sample_rate_hz);
  SeismicTrace trace;
  trace.sample_rate_hz = sample_rate_hz;
  trace.samples = Eigen::VectorXd::Zero(n);

  if (std::isfinite(spec.snr_db)) {
    const double signal_power = 0.5 * spec.amplitude * spec.amplitude;
    const double noise_rms = std::sqrt(signal_power / std::pow(10.0, spec.snr_db / 10.0));
    trace.samples = white_noise(n, noise_rms, seed);
  }

  const Eigen::VectorXd chirp = rumble_waveform(spec, sample_rate_hz);
  const Eigen::Index start = samples_for(onset_s, sample_rate_hz);
  const Eigen::Index len = std::min<Eigen::Index>(chirp.size(), n - start);
  if (len > 0) trace.samples.segment(start, len) += chirp.head(len);
  return trace;
}

Eigen::VectorXd white_noise(Eigen::Index n, double rms_level, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = rms_level * dist(rng);
  return y;
}

Eigen::VectorXd tone(Eigen::Index n, double freq_hz, double sample_rate_hz, double amplitude,
                     double phase) {
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = amplitude * std::sin(kTwoPi * freq_hz * static_cast<double>(i) / sample_rate_hz + phase);
  }
  return y;
}

Eigen::VectorXd linear_chirp(Eigen::Index n, double f0_hz, double f1_hz, double sample_rate_hz,
                             double amplitude) {
  Eigen::VectorXd y(n);
  const double total = static_cast<double>(n) / sample_rate_hz;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    y[i] = amplitude * std::sin(kTwoPi * (f0_hz * t + 0.5 * (f1_hz - f0_hz) / total * t * t));
  }
  return y;
}

AudioClip synth_bee_buzz(const BeeBuzzSpec& spec, std::uint64_t seed) {
  if (!(spec.frame_rate_hz > 0.0) || !(spec.duration_s > 0.0) || !(spec.fundamental_hz > 0.0) ||
      spec.bees < 1) {
    throw InvalidInput("synth_bee_buzz: non-positive rate, duration, fundamental or bee count");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(0.0, kTwoPi);
  std::uniform_real_distribution<double> spread(-spec.fundamental_spread_hz, spec.fundamental_spread_hz);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Eigen::Index n = samples_for(spec.duration_s, spec.frame_rate_hz);
  const double fs = spec.frame_rate_hz;
  const double nyquist = 0.5 * fs;

  AudioClip clip;
  clip.frame_rate_hz = fs;
  clip.samples = Eigen::VectorXd::Zero(n);
  std::vector<double> harm_phase(static_cast<std::size_t>(spec.max_harmonics));
  for (int b = 0; b < spec.bees; ++b) {
    const double f_bee = spec.fundamental_hz + spread(rng);
    const double vib_phase = uni(rng);
    const double flutter_phase = uni(rng);
    const double flutter_rate = 4.0 + 6.0 * uni(rng) / kTwoPi;
    for (auto& p : harm_phase) p = uni(rng);
    double base_phase = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double f0 = f_bee + spec.vibrato_depth_hz * std::sin(kTwoPi * spec.vibrato_rate_hz * t + vib_phase);
      const double flutter = 0.8 + 0.2 * std::sin(kTwoPi * flutter_rate * t + flutter_phase);
      double v = 0.0;
      for (int k = 1; k <= spec.max_harmonics; ++k) {
        if (k * f0 >= nyquist) break;
        v += std::sin(k * base_phase + harm_phase[static_cast<std::size_t>(k - 1)]) /
             std::pow(static_cast<double>(k), spec.harmonic_rolloff);
      }
      clip.samples[i] += flutter * v;
      base_phase += kTwoPi * f0 / fs;
    }
  }
  clip.samples /= std::sqrt(static_cast<double>(spec.bees));
  Eigen::VectorXd bed(n);
  for (Eigen::Index i = 0; i < n; ++i) bed[i] = gauss(rng);
  if (spec.noise_lowpass_hz > 0.0) {
    const double a = std::exp(-kTwoPi * spec.noise_lowpass_hz / fs);
    double state = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) bed[i] = state = a * state + (1.0 - a) * bed[i];
  }
  const double bed_rms = rms(bed);
  if (bed_rms > 0.0) clip.samples += (spec.noise_level * rms(clip.samples) / bed_rms) * bed;
  const double peak = clip.samples.cwiseAbs().maxCoeff();
  if (peak > 0.0) clip.samples *= spec.peak / peak;
  return clip;
}

}  // namespace elemantra
