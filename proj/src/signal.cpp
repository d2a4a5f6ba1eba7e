#include "elemantra/signal.hpp"

#include <cmath>

#include "elemantra/error.hpp"

namespace elemantra {

Eigen::Index samples_for(double seconds, double rate_hz) {
  return static_cast<Eigen::Index>(std::llround(seconds * rate_hz));
}

std::vector<SeismicTrace> window_trace(const SeismicTrace& trace, double window_s) {
  if (trace.samples.size() == 0) throw InvalidInput("window_trace: empty trace");
  if (!(window_s > 0.0)) throw InvalidInput("window_trace: window_s must be positive");
  if (!(trace.sample_rate_hz > 0.0)) throw InvalidInput("window_trace: sample rate must be positive");

  const Eigen::Index len = samples_for(window_s, trace.sample_rate_hz);
  if (len < 1) throw InvalidInput("window_trace: window shorter than one sample");

  std::vector<SeismicTrace> windows;
  const Eigen::Index count = trace.samples.size() / len;
  windows.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k) {
    SeismicTrace w;
    w.samples = trace.samples.segment(k * len, len);
    w.sample_rate_hz = trace.sample_rate_hz;
    w.start_time_s = trace.start_time_s + static_cast<double>(k * len) / trace.sample_rate_hz;
    windows.push_back(std::move(w));
  }
  return windows;
}

double rms(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() == 0) return 0.0;
  return std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

}  // namespace elemantra
