#include <doctest.h>

#include <cmath>

#include "elemantra/error.hpp"
#include "elemantra/seismic_detect.hpp"
#include "elemantra/synth.hpp"

using namespace elemantra;

namespace {

SeismicTrace from(const Eigen::VectorXd& x, double start = 0.0) {
  SeismicTrace t;
  t.samples = x;
  t.start_time_s = start;
  return t;
}

// Sub-segment-by-sub-segment replay of the band test, written independently of detect_window.
int hand_max_run(const SeismicTrace& w) {
  int best = 0;
  int cur = 0;
  for (Eigen::Index s = 0; s + 125 <= w.samples.size(); s += 125) {
    const Eigen::VectorXd seg = w.samples.segment(s, 125);
    const Spectrum sp = compute_spectrum(seg, 1000.0, 512);
    const bool in = sp.magnitudes.maxCoeff() > 0.0 && peak_frequency(sp) > 20.0 && peak_frequency(sp) < 40.0;
    cur = in ? cur + 1 : 0;
    best = std::max(best, cur);
  }
  return best;
}

}  // namespace

TEST_SUITE("seismic_detect") {
  TEST_CASE("threshold truth table") {
    const Algorithm1Params p;
    const int runs[] = {0, 6, 7, 23, 24, 32};
    const int want[] = {0, 0, 1, 1, 2, 2};
    for (int i = 0; i < 6; ++i) CHECK(to_int(score_from_run(runs[i], p)) == want[i]);
  }

  TEST_CASE("score is monotone in the run length") {
    const Algorithm1Params p;
    for (int r = 0; r < 32; ++r) CHECK(to_int(score_from_run(r + 1, p)) >= to_int(score_from_run(r, p)));
  }

  TEST_CASE("longest_run") {
    CHECK(longest_run({}) == 0);
    CHECK(longest_run({true, true, false, true, true, true, false}) == 3);
  }

  TEST_CASE("band bounds are strict") {
    const Algorithm1Params p;
    CHECK_FALSE(in_band(20.0, p));
    CHECK_FALSE(in_band(40.0, p));
    CHECK(in_band(20.5, p));
  }

  TEST_CASE("30 Hz tone fills the window") {
    const auto d = detect_window(from(tone(4000, 30.0, 1000.0)));
    CHECK(d.max_run == 32);
    CHECK(d.ds == DetectionScore::Strong);
    CHECK(d.subsegment_peaks_hz.size() == 32);
  }

  TEST_CASE("silence and out-of-band tones score zero") {
    CHECK(detect_window(from(Eigen::VectorXd::Zero(4000))).ds == DetectionScore::None);
    CHECK(detect_window(from(tone(4000, 10.0, 1000.0))).ds == DetectionScore::None);
    CHECK(detect_window(from(tone(4000, 60.0, 1000.0))).ds == DetectionScore::None);
  }

  TEST_CASE("detect_window agrees with a hand replay") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RumbleSpec spec;
      spec.duration_s = 3.0;
      spec.snr_db = 5.0;
      const auto t = synth_rumble(spec, 1000.0, 4.0, 0.5, seed);
      const auto d = detect_window(t);
      CHECK(d.max_run == hand_max_run(t));
      CHECK(d.ds == score_from_run(d.max_run, Algorithm1Params{}));
    }
  }

  TEST_CASE("window length is checked") {
    CHECK_NOTHROW(detect_window(from(Eigen::VectorXd::Zero(4001))));
    CHECK_THROWS_AS(detect_window(from(Eigen::VectorXd::Zero(3000))), InvalidInput);
  }

  TEST_CASE("parameter validation") {
    Algorithm1Params p;
    p.count_high = 40;  // 40 * 0.125 > 4
    CHECK_THROWS_AS(p.validate(), InvalidConfig);
    Algorithm1Params q;
    q.band_low_hz = 50.0;
    CHECK_THROWS_AS(q.validate(), InvalidConfig);
  }

  TEST_CASE("detect_stream composes window_trace and detect_window") {
    RumbleSpec spec;
    spec.snr_db = 15.0;
    const auto t = synth_rumble(spec, 1000.0, 12.0, 4.0, 3);
    const auto stream = detect_stream(t);
    const auto windows = window_trace(t, 4.0);
    REQUIRE(stream.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto d = detect_window(windows[k], Algorithm1Params{}, k);
      CHECK(stream[k].max_run == d.max_run);
      CHECK(stream[k].window_index == k);
      CHECK(stream[k].window_start_s == doctest::Approx(4.0 * static_cast<double>(k)));
    }
    CHECK(stream[1].ds == DetectionScore::Strong);
  }

  TEST_CASE("rumble straddling a window boundary splits its run") {
    RumbleSpec spec;
    spec.envelope = Envelope::Rectangular;
    spec.f_start_hz = 30.0;
    spec.f_peak_hz = 30.0;
    spec.f_end_hz = 30.0;
    const auto t = synth_rumble(spec, 1000.0, 8.0, 2.0, 0);
    const auto s = detect_stream(t);
    REQUIRE(s.size() == 2);
    CHECK(std::abs(s[0].max_run - 16) <= 1);
    CHECK(std::abs(s[1].max_run - 16) <= 1);
  }

  TEST_CASE("json line format") {
    WindowDetection d;
    d.window_index = 3;
    d.window_start_s = 12.0;
    d.ds = DetectionScore::Likely;
    d.max_run = 9;
    CHECK(to_json_line(d) == R"({"window_index":3,"start_s":12.0,"ds":1,"max_run":9})");
  }

  TEST_CASE("oracle finds one event on a clean rumble") {
    RumbleSpec spec;
    const auto t = synth_rumble(spec, 1000.0, 10.0, 3.0, 0);
    const auto ev = stft_oracle_detect(t);
    REQUIRE(ev.size() == 1);
    CHECK(std::abs(ev[0].t_start_s - 3.0) < 0.5);
    CHECK(std::abs(ev[0].t_end_s - 7.0) < 0.5);
    for (const auto& [time, f] : ev[0].peak_trajectory) {
      CHECK(f > 20.0);
      CHECK(f < 40.0);
    }
    OracleParams rf;
    rf.require_rise_fall = true;
    CHECK(stft_oracle_detect(t, rf).size() == 1);
  }

  TEST_CASE("oracle ignores a 10 Hz tone and separates two rumbles") {
    CHECK(stft_oracle_detect(from(tone(8000, 10.0, 1000.0))).empty());
    RumbleSpec spec;
    spec.snr_db = 20.0;
    auto t = synth_rumble(spec, 1000.0, 20.0, 1.0, 4);
    RumbleSpec clean;
    t.samples.segment(15000, 4000) += rumble_waveform(clean, 1000.0);
    CHECK(stft_oracle_detect(t).size() == 2);
  }

  TEST_CASE("rise-fall check rejects a monotone chirp") {
    const auto t = from(linear_chirp(6000, 22.0, 38.0, 1000.0));
    CHECK(stft_oracle_detect(t).size() == 1);
    OracleParams rf;
    rf.require_rise_fall = true;
    CHECK(stft_oracle_detect(t, rf).empty());
  }

  TEST_CASE("oracle is deterministic") {
    RumbleSpec spec;
    spec.snr_db = 8.0;
    const auto t = synth_rumble(spec, 1000.0, 12.0, 5.0, 21);
    const auto a = stft_oracle_detect(t);
    const auto b = stft_oracle_detect(t);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].t_start_s == b[i].t_start_s);
  }

  TEST_CASE("recall formula and the empty case") {
    std::vector<RumbleEvent> events;
    std::vector<WindowDetection> dets;
    for (int i = 0; i < 5; ++i) {
      events.push_back(RumbleEvent{4.0 * i + 0.5, 4.0 * i + 3.5, {}});
      WindowDetection d;
      d.window_index = static_cast<std::size_t>(i);
      d.window_start_s = 4.0 * i;
      d.window_end_s = 4.0 * i + 4.0;
      d.ds = i < 4 ? DetectionScore::Likely : DetectionScore::None;
      dets.push_back(d);
    }
    const auto r = match_and_recall(dets, events);
    CHECK(r.oracle_count == 5);
    CHECK(r.matched_count == 4);
    REQUIRE(r.recall);
    CHECK(*r.recall == doctest::Approx(0.8));
    CHECK_FALSE(r.matches[4].matched);

    CHECK(*match_and_recall({}, events).recall == 0.0);
    CHECK_FALSE(match_and_recall(dets, {}).recall.has_value());
    CHECK(*match_and_recall(dets, events, DetectionScore::Strong).recall == 0.0);
  }

  TEST_CASE("recall is invariant under a common time shift") {
    std::vector<RumbleEvent> events{{1.0, 4.5, {}}, {9.0, 12.0, {}}};
    std::vector<WindowDetection> dets(3);
    for (int i = 0; i < 3; ++i) {
      dets[i].window_start_s = 4.0 * i;
      dets[i].window_end_s = 4.0 * i + 4.0;
    }
    dets[1].ds = DetectionScore::Strong;
    const auto base = match_and_recall(dets, events);
    for (auto& e : events) {
      e.t_start_s += 100.0;
      e.t_end_s += 100.0;
    }
    for (auto& d : dets) {
      d.window_start_s += 100.0;
      d.window_end_s += 100.0;
    }
    CHECK(*match_and_recall(dets, events).recall == *base.recall);
    CHECK(*base.recall == doctest::Approx(0.5));
  }

  TEST_CASE("reference recall constant") { CHECK(kReferenceFieldRecall == 0.82); }
}
