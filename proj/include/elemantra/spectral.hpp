#pragma once

#include <Eigen/Dense>
#include <complex>

#include "elemantra/signal.hpp"

namespace elemantra {

enum class WindowFn { Rectangular, Hann };

/// Smallest power of two >= n (n >= 1).
Eigen::Index next_pow2(Eigen::Index n);

/// Default zero-padded transform length: next power of two >= 4 * n.
inline Eigen::Index default_pad(Eigen::Index n) { return next_pow2(4 * n); }

namespace detail {
Spectrum compute_spectrum_impl(const Eigen::Ref<const Eigen::VectorXd>& samples,
                               double sample_rate_hz, Eigen::Index pad_to, WindowFn window);
}

/// Magnitude spectrum of a mean-removed, optionally windowed, zero-padded segment.
///
/// Only the positive-frequency half is returned (bins 1 .. pad_to/2), so the
/// output has pad_to/2 entries for even pad_to and the resolution is
/// sample_rate_hz / pad_to. Accepts any real Eigen vector expression.
template <typename Derived>
Spectrum compute_spectrum(const Eigen::MatrixBase<Derived>& samples, double sample_rate_hz,
                          Eigen::Index pad_to, WindowFn window = WindowFn::Rectangular) {
  const Eigen::VectorXd x = samples.template cast<double>();
  return detail::compute_spectrum_impl(x, sample_rate_hz, pad_to, window);
}

template <typename Derived>
Spectrum compute_spectrum(const Eigen::MatrixBase<Derived>& samples, double sample_rate_hz) {
  return compute_spectrum(samples, sample_rate_hz, default_pad(samples.size()));
}

/// Frequency of the largest magnitude; ties resolve to the lowest frequency.
double peak_frequency(const Spectrum& spectrum);

struct StftParams {
  double frame_s = 0.5;
  double hop_s = 0.125;
  WindowFn window = WindowFn::Hann;
  Eigen::Index pad_to = 0;  // 0 selects default_pad(frame length)
};

/// Frames are placed at start + k*hop; frame count is floor((N - L)/H) + 1.
Spectrogram compute_stft(const Eigen::Ref<const Eigen::VectorXd>& samples, double sample_rate_hz,
                         const StftParams& params, double start_time_s = 0.0);

inline Spectrogram compute_stft(const SeismicTrace& trace, const StftParams& params) {
  return compute_stft(trace.samples, trace.sample_rate_hz, params, trace.start_time_s);
}

/// Per-frame peak frequency of a spectrogram (same tie-break as peak_frequency).
Eigen::VectorXd peak_trajectory(const Spectrogram& spectrogram);

/// Forward complex DFT of a real vector (full length).
Eigen::VectorXcd fft_real(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Inverse DFT returning the real part.
Eigen::VectorXd ifft_real(const Eigen::Ref<const Eigen::VectorXcd>& spectrum);

}  // namespace elemantra
