#include "elemantra/deterrent.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "elemantra/error.hpp"
#include "elemantra/spectral.hpp"

namespace elemantra {

std::string to_string(ModificationKind kind) {
  switch (kind) {
    case ModificationKind::FrameRateScale:
      return "frame_rate";
    case ModificationKind::PinkNoiseOverlay:
      return "pink_noise";
    case ModificationKind::SilenceGaps:
      return "silence_gaps";
  }
  return "unknown";
}

ModificationKind modification_from_string(const std::string& name) {
  if (name == "frame_rate") return ModificationKind::FrameRateScale;
  if (name == "pink_noise") return ModificationKind::PinkNoiseOverlay;
  if (name == "silence_gaps") return ModificationKind::SilenceGaps;
  throw InvalidInput("unknown modification '" + name + "'");
}

ModificationParams pick_modification(Rng& rng, AlphaRange range) {
  if (!(range.lo < range.hi) || !(range.lo > 0.0)) {
    throw InvalidConfig("pick_modification: alpha range must satisfy 0 < lo < hi");
  }
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> alpha(range.lo, range.hi);
  ModificationParams p;
  p.kind = static_cast<ModificationKind>(kind(rng));
  p.alpha = alpha(rng);
  p.seed = rng();
  return p;
}

AudioClip modify_frame_rate(const AudioClip& clip, double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("modify_frame_rate: alpha must be positive");
  AudioClip out = clip;
  out.frame_rate_hz = clip.frame_rate_hz * alpha;
  return out;
}

Eigen::VectorXd generate_pink_noise(Eigen::Index n_samples, double sample_rate_hz, std::uint64_t seed,
                                    double f_min_hz) {
  if (n_samples <= 0) throw InvalidInput("generate_pink_noise: n_samples must be positive");
  if (!(sample_rate_hz > 0.0) || !(f_min_hz > 0.0)) {
    throw InvalidInput("generate_pink_noise: rates must be positive");
  }
  // Shape over a power-of-two block and truncate.
  const Eigen::Index nfft = next_pow2(std::max<Eigen::Index>(n_samples, 2));
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd white(nfft);
  for (Eigen::Index i = 0; i < nfft; ++i) white[i] = gauss(rng);

  Eigen::VectorXcd spec = fft_real(white);
  const double df = sample_rate_hz / static_cast<double>(nfft);
  spec[0] = 0.0;
  for (Eigen::Index k = 1; k <= nfft / 2; ++k) {
    const double f = std::max(static_cast<double>(k) * df, f_min_hz);
    const double gain = 1.0 / std::sqrt(f);
    spec[k] *= gain;
    if (k != nfft - k) spec[nfft - k] = std::conj(spec[k]);
  }
  Eigen::VectorXd y = ifft_real(spec).head(n_samples);
  y.array() -= y.mean();
  const double r = rms(y);
  if (r > 0.0) y /= r;
  return y;
}

Eigen::VectorXd pink_overlay_component(const AudioClip& clip, double alpha, std::uint64_t seed) {
  if (clip.samples.size() == 0) throw InvalidInput("overlay_pink_noise: empty clip");
  if (!(alpha >= 0.0)) throw InvalidInput("overlay_pink_noise: alpha must be non-negative");
  const double scale = 0.1 * alpha * rms(clip.samples);
  if (scale == 0.0) return Eigen::VectorXd::Zero(clip.samples.size());
  return scale * generate_pink_noise(clip.samples.size(), clip.frame_rate_hz, seed);
}

AudioClip overlay_pink_noise(const AudioClip& clip, double alpha, std::uint64_t seed) {
  AudioClip out = clip;
  out.samples += pink_overlay_component(clip, alpha, seed);
  const double peak = out.samples.cwiseAbs().maxCoeff();
  if (peak > 1.0) out.samples /= peak;
  return out;
}

SilenceGapResult insert_silence_gaps(const AudioClip& clip, double alpha, std::uint64_t seed,
                                     const GapOptions& options) {
  if (!(alpha >= 0.0)) throw InvalidInput("insert_silence_gaps: alpha must be non-negative");
  if (!(options.gap_prob >= 0.0 && options.gap_prob <= 1.0)) {
    throw InvalidInput("insert_silence_gaps: gap_prob outside [0, 1]");
  }
  const Eigen::Index frame_len = samples_for(options.frame_s, clip.frame_rate_hz);
  if (frame_len < 1 || clip.samples.size() < frame_len) {
    throw InvalidInput("insert_silence_gaps: clip shorter than one frame");
  }

  SilenceGapResult result;
  result.clip = clip;
  Eigen::Index gap_len = samples_for(alpha * options.base_gap_s, clip.frame_rate_hz);
  if (gap_len > frame_len) {
    result.warnings.push_back("gap length " + std::to_string(alpha * options.base_gap_s) +
                              " s exceeds frame; clamped to " + std::to_string(options.frame_s) + " s");
    gap_len = frame_len;
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<Eigen::Index> offset(0, frame_len - gap_len);
  const Eigen::Index frames = clip.samples.size() / frame_len;
  for (Eigen::Index f = 0; f < frames; ++f) {
    // Both draws happen for every frame so placement is stable across gap_prob.
    const double u = coin(rng);
    const Eigen::Index off = offset(rng);
    if (u >= options.gap_prob || gap_len == 0) continue;
    const Eigen::Index begin = f * frame_len + off;
    result.clip.samples.segment(begin, gap_len).setZero();
    result.gaps.emplace_back(begin, begin + gap_len);
  }
  return result;
}

ModificationOutcome apply_modification(const AudioClip& clip, const ModificationParams& params,
                                       const GapOptions& gap_options) {
  switch (params.kind) {
    case ModificationKind::FrameRateScale:
      return {modify_frame_rate(clip, params.alpha), {}};
    case ModificationKind::PinkNoiseOverlay:
      return {overlay_pink_noise(clip, params.alpha, params.seed), {}};
    case ModificationKind::SilenceGaps: {
      auto r = insert_silence_gaps(clip, params.alpha, params.seed, gap_options);
      return {std::move(r.clip), std::move(r.warnings)};
    }
  }
  throw InvalidInput("apply_modification: unknown kind");
}

namespace {

// dB magnitude spectrogram resampled onto [df, 2df, ..., f_max].
Eigen::MatrixXd db_grid(const AudioClip& clip, const SimilarityOptions& opt, double df, Eigen::Index bins) {
  StftParams sp;
  sp.frame_s = opt.frame_s;
  sp.hop_s = opt.hop_s;
  sp.window = WindowFn::Hann;
  sp.pad_to = next_pow2(samples_for(opt.frame_s, clip.frame_rate_hz));
  const Spectrogram sg = compute_stft(clip.samples, clip.frame_rate_hz, sp);

  Eigen::MatrixXd out(sg.frames(), bins);
  for (Eigen::Index k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k + 1) * df;
    // Linear interpolation on the native axis (which starts at its own df).
    const double pos = f / sg.freqs_hz[0] - 1.0;
    const auto i0 = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), 0, sg.bins() - 1);
    const Eigen::Index i1 = std::min<Eigen::Index>(i0 + 1, sg.bins() - 1);
    const double w = std::clamp(pos - static_cast<double>(i0), 0.0, 1.0);
    out.col(k) = (1.0 - w) * sg.magnitudes.col(i0) + w * sg.magnitudes.col(i1);
  }
  const double peak = out.maxCoeff();
  const double floor = peak > 0.0 ? peak * std::pow(10.0, -opt.dynamic_range_db / 20.0) : 1e-12;
  return (20.0 * out.array().max(floor).log10()).matrix();
}

}  // namespace

SimilarityScore stft_similarity(const AudioClip& a, const AudioClip& b, const SimilarityOptions& options) {
  if (a.duration_s() + 1e-12 < options.frame_s || b.duration_s() + 1e-12 < options.frame_s) {
    throw InvalidInput("stft_similarity: clip shorter than one frame");
  }
  const auto resolution = [&](const AudioClip& c) {
    return c.frame_rate_hz / static_cast<double>(next_pow2(samples_for(options.frame_s, c.frame_rate_hz)));
  };
  const double df = std::max(resolution(a), resolution(b));
  const double f_max = 0.5 * std::min(a.frame_rate_hz, b.frame_rate_hz);
  const auto bins = static_cast<Eigen::Index>(std::floor(f_max / df + 1e-9));
  if (bins < 1) throw InvalidInput("stft_similarity: no shared frequency range");

  const Eigen::MatrixXd sa = db_grid(a, options, df, bins);
  const Eigen::MatrixXd sb = db_grid(b, options, df, bins);
  const Eigen::Index na = sa.rows();
  const Eigen::Index nb = sb.rows();
  const auto min_overlap = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::ceil(options.min_overlap_fraction * static_cast<double>(std::min(na, nb)))));

  SimilarityScore best;
  bool any = false;
  for (Eigen::Index lag = -(nb - 1); lag <= na - 1; ++lag) {
    const Eigen::Index b0 = std::max<Eigen::Index>(0, -lag);
    const Eigen::Index a0 = b0 + lag;
    const Eigen::Index len = std::min(na - a0, nb - b0);
    if (len < min_overlap) continue;
    Eigen::ArrayXXd xa = sa.middleRows(a0, len).array();
    Eigen::ArrayXXd xb = sb.middleRows(b0, len).array();
    xa -= xa.mean();
    xb -= xb.mean();
    const double denom = std::sqrt((xa * xa).sum() * (xb * xb).sum());
    const double r = denom > 0.0 ? (xa * xb).sum() / denom : 0.0;
    if (!any || r > best.max_xcorr) {
      best.max_xcorr = r;
      best.best_lag_frames = static_cast<int>(lag);
      any = true;
    }
  }
  if (!any) throw InvalidInput("stft_similarity: no lag with sufficient overlap");
  best.max_xcorr = std::clamp(best.max_xcorr, -1.0, 1.0);
  return best;
}

double relative_l2_delta(const AudioClip& original, const AudioClip& modified) {
  const double norm = original.samples.norm();
  if (norm == 0.0) throw InvalidInput("relative_l2_delta: silent original");
  if (original.frame_rate_hz == modified.frame_rate_hz && original.size() == modified.size()) {
    return (modified.samples - original.samples).norm() / norm;
  }
  const double span = std::max(original.duration_s(), modified.duration_s());
  const Eigen::Index n = static_cast<Eigen::Index>(std::ceil(span * original.frame_rate_hz));
  const auto value_at = [](const AudioClip& c, double t) {
    const double pos = t * c.frame_rate_hz;
    const auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    if (i0 < 0 || i0 >= c.size()) return 0.0;
    const double w = pos - static_cast<double>(i0);
    const double next = i0 + 1 < c.size() ? c.samples[i0 + 1] : 0.0;
    return (1.0 - w) * c.samples[i0] + w * next;
  };
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / original.frame_rate_hz;
    const double d = value_at(modified, t) - value_at(original, t);
    acc += d * d;
  }
  return std::sqrt(acc) / norm;
}

}  // namespace elemantra
