#include "elemantra/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <vector>

#include "elemantra/error.hpp"

namespace elemantra {

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

Eigen::VectorXcd fft_real(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::FFT<double> fft;
  std::vector<double> in(x.data(), x.data() + x.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return Eigen::Map<Eigen::VectorXcd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

Eigen::VectorXd ifft_real(const Eigen::Ref<const Eigen::VectorXcd>& spectrum) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(spectrum.data(), spectrum.data() + spectrum.size());
  std::vector<std::complex<double>> out;
  fft.inv(out, in);
  Eigen::VectorXd y(static_cast<Eigen::Index>(out.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = out[static_cast<std::size_t>(i)].real();
  return y;
}

namespace detail {

Spectrum compute_spectrum_impl(const Eigen::Ref<const Eigen::VectorXd>& samples,
                               double sample_rate_hz, Eigen::Index pad_to, WindowFn window) {
  const Eigen::Index n = samples.size();
  if (n == 0) throw InvalidInput("compute_spectrum: empty segment");
  if (!(sample_rate_hz > 0.0)) throw InvalidInput("compute_spectrum: sample rate must be positive");
  if (pad_to < n) throw InvalidInput("compute_spectrum: pad_to shorter than segment");

  Eigen::VectorXd buf = Eigen::VectorXd::Zero(pad_to);
  buf.head(n) = samples.array() - samples.mean();
  if (window == WindowFn::Hann && n > 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(n - 1));
      buf[i] *= w;
    }
  }

  const Eigen::VectorXcd full = fft_real(buf);
  const Eigen::Index bins = pad_to / 2;
  Spectrum s;
  s.freqs_hz.resize(bins);
  s.magnitudes.resize(bins);
  const double df = sample_rate_hz / static_cast<double>(pad_to);
  for (Eigen::Index k = 0; k < bins; ++k) {
    s.freqs_hz[k] = static_cast<double>(k + 1) * df;
    s.magnitudes[k] = std::abs(full[k + 1]);
  }
  return s;
}

}  // namespace detail

double peak_frequency(const Spectrum& spectrum) {
  if (spectrum.size() == 0) throw InvalidInput("peak_frequency: empty spectrum");
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < spectrum.size(); ++k) {
    if (spectrum.magnitudes[k] > spectrum.magnitudes[best]) best = k;
  }
  return spectrum.freqs_hz[best];
}

Spectrogram compute_stft(const Eigen::Ref<const Eigen::VectorXd>& samples, double sample_rate_hz,
                         const StftParams& params, double start_time_s) {
  if (!(sample_rate_hz > 0.0)) throw InvalidInput("compute_stft: sample rate must be positive");
  if (!(params.hop_s > 0.0) || params.hop_s > params.frame_s) {
    throw InvalidInput("compute_stft: require 0 < hop_s <= frame_s");
  }
  const Eigen::Index frame_len = samples_for(params.frame_s, sample_rate_hz);
  const Eigen::Index hop_len = samples_for(params.hop_s, sample_rate_hz);
  if (frame_len < 1 || hop_len < 1) throw InvalidInput("compute_stft: frame shorter than one sample");
  if (samples.size() < frame_len) throw InvalidInput("compute_stft: signal shorter than one frame");

  const Eigen::Index pad = params.pad_to > 0 ? params.pad_to : default_pad(frame_len);
  const Eigen::Index frames = (samples.size() - frame_len) / hop_len + 1;

  Spectrogram sg;
  sg.hop_s = static_cast<double>(hop_len) / sample_rate_hz;
  sg.frame_s = static_cast<double>(frame_len) / sample_rate_hz;
  sg.frame_times_s.resize(frames);
  for (Eigen::Index f = 0; f < frames; ++f) {
    const Spectrum s =
        detail::compute_spectrum_impl(samples.segment(f * hop_len, frame_len), sample_rate_hz, pad,
                                      params.window);
    if (f == 0) {
      sg.freqs_hz = s.freqs_hz;
      sg.magnitudes.resize(frames, s.size());
    }
    sg.magnitudes.row(f) = s.magnitudes.transpose();
    sg.frame_times_s[f] =
        start_time_s + (static_cast<double>(f * hop_len) + 0.5 * static_cast<double>(frame_len)) /
                           sample_rate_hz;
  }
  return sg;
}

Eigen::VectorXd peak_trajectory(const Spectrogram& spectrogram) {
  Eigen::VectorXd peaks(spectrogram.frames());
  for (Eigen::Index f = 0; f < spectrogram.frames(); ++f) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < spectrogram.bins(); ++k) {
      if (spectrogram.magnitudes(f, k) > spectrogram.magnitudes(f, best)) best = k;
    }
    peaks[f] = spectrogram.freqs_hz[best];
  }
  return peaks;
}

}  // namespace elemantra
