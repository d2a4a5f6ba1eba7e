#include <doctest.h>

#include "elemantra/error.hpp"
#include "elemantra/node_pn.hpp"
#include "elemantra/synth.hpp"

using namespace elemantra;
using namespace elemantra::pn;

namespace {

SeismicWindowReady window(int ds, std::size_t index = 0) {
  WindowDetection d;
  d.window_index = index;
  d.ds = static_cast<DetectionScore>(ds);
  d.max_run = ds == 2 ? 30 : ds == 1 ? 10 : 0;
  return {d};
}

ThermalFrame frame(const std::string& id, const std::string& pn = "pn0") {
  ThermalFrame f;
  f.frame_id = id;
  f.pn_id = pn;
  return f;
}

RepelCommand repel(const std::string& frame_id) {
  RepelCommand c;
  c.pn_id = "pn0";
  c.frame_id = frame_id;
  c.deterrent = ModificationParams{ModificationKind::FrameRateScale, 1.2, 1};
  return c;
}

template <class A>
int count(const PnStepResult& r) {
  int n = 0;
  for (const auto& a : r.actions) n += std::holds_alternative<A>(a) ? 1 : 0;
  return n;
}

}  // namespace

TEST_SUITE("node_pn") {
  TEST_CASE("below threshold stays idle") {
    const PnConfig cfg;
    const auto r = pn_step(Idle{}, window(0), cfg, 4.0);
    CHECK(kind_of(r.state) == StateKind::Idle);
    CHECK(r.actions.empty());
  }

  TEST_CASE("threshold 2 ignores ds 1") {
    PnConfig cfg;
    cfg.ds_threshold = 2;
    CHECK(kind_of(pn_step(Idle{}, window(1), cfg, 4.0).state) == StateKind::Idle);
    CHECK(kind_of(pn_step(Idle{}, window(2), cfg, 4.0).state) == StateKind::IrActive);
  }

  TEST_CASE("full activation cycle") {
    PnConfig cfg;
    auto r = pn_step(Idle{}, window(2), cfg, 4.0);
    CHECK(kind_of(r.state) == StateKind::IrActive);
    CHECK(count<CaptureFrame>(r) == 1);

    r = pn_step(r.state, FrameCaptured{frame("f1")}, cfg, 4.1);
    CHECK(kind_of(r.state) == StateKind::AwaitingDecision);
    REQUIRE(count<PublishFrame>(r) == 1);
    CHECK(std::get<PublishFrame>(r.actions[0]).frame.frame_id == "f1");

    r = pn_step(r.state, CommandReceived{repel("f1")}, cfg, 4.5);
    CHECK(kind_of(r.state) == StateKind::Repelling);
    CHECK(count<PlayDeterrent>(r) == 1);
    CHECK(count<Flash>(r) == 1);
    CHECK(std::get<Repelling>(r.state).until_s == doctest::Approx(14.5));

    // ds events while busy are recorded only.
    auto busy = pn_step(r.state, window(2, 3), cfg, 8.0);
    CHECK(kind_of(busy.state) == StateKind::Repelling);
    CHECK(count<RecordScore>(busy) == 1);
    CHECK(count<CaptureFrame>(busy) == 0);

    r = pn_step(r.state, TimerExpired{}, cfg, 14.5);
    CHECK(kind_of(r.state) == StateKind::Cooldown);
    CHECK(std::get<Cooldown>(r.state).until_s == doctest::Approx(74.5));
    CHECK(kind_of(pn_step(r.state, TimerExpired{}, cfg, 30.0).state) == StateKind::Cooldown);
    r = pn_step(r.state, TimerExpired{}, cfg, 74.5);
    CHECK(kind_of(r.state) == StateKind::Idle);
  }

  TEST_CASE("negative decision and decision timeout return to idle") {
    PnConfig cfg;
    const PnState waiting = AwaitingDecision{{"f1"}, 14.0};
    auto r = pn_step(waiting, CommandReceived{NegativeDecision{"pn0", "f1", 5.0}}, cfg, 5.0);
    CHECK(kind_of(r.state) == StateKind::Idle);
    CHECK(r.accepted);

    r = pn_step(waiting, TimerExpired{}, cfg, 10.0);
    CHECK(kind_of(r.state) == StateKind::AwaitingDecision);
    r = pn_step(waiting, TimerExpired{}, cfg, 14.0);
    CHECK(kind_of(r.state) == StateKind::Idle);
    CHECK(r.anomaly.has_value());
  }

  TEST_CASE("unexpected events are rejected without a state change") {
    PnConfig cfg;
    auto r = pn_step(Idle{}, CommandReceived{repel("f1")}, cfg, 1.0);
    CHECK_FALSE(r.accepted);
    CHECK(kind_of(r.state) == StateKind::Idle);
    CHECK(r.anomaly.has_value());

    const PnState rep = Repelling{"f1", 20.0};
    r = pn_step(rep, CommandReceived{repel("f1")}, cfg, 12.0);
    CHECK_FALSE(r.accepted);
    CHECK(count<PlayDeterrent>(r) == 0);

    r = pn_step(AwaitingDecision{{"f1"}, 20.0}, CommandReceived{repel("other")}, cfg, 12.0);
    CHECK_FALSE(r.accepted);
  }

  TEST_CASE("multiple captures per trigger") {
    PnConfig cfg;
    cfg.ir_capture_count = 2;
    auto r = pn_step(Idle{}, window(1), cfg, 0.0);
    r = pn_step(r.state, FrameCaptured{frame("a")}, cfg, 0.1);
    CHECK(kind_of(r.state) == StateKind::IrActive);
    CHECK(count<CaptureFrame>(r) == 1);
    r = pn_step(r.state, FrameCaptured{frame("b")}, cfg, 0.2);
    REQUIRE(kind_of(r.state) == StateKind::AwaitingDecision);
    CHECK(std::get<AwaitingDecision>(r.state).pending_frame_ids.size() == 2);
    r = pn_step(r.state, CommandReceived{NegativeDecision{"pn0", "a", 0.3}}, cfg, 0.3);
    CHECK(kind_of(r.state) == StateKind::AwaitingDecision);
    r = pn_step(r.state, CommandReceived{repel("b")}, cfg, 0.4);
    CHECK(kind_of(r.state) == StateKind::Repelling);
  }

  TEST_CASE("prearm on ds 2 repels locally") {
    PnConfig cfg;
    cfg.prearm_on_ds2 = true;
    const auto r = pn_step(Idle{}, window(2), cfg, 8.0);
    CHECK(kind_of(r.state) == StateKind::Repelling);
    CHECK(count<PlayDeterrent>(r) == 1);
    CHECK(kind_of(pn_step(Idle{}, window(1), cfg, 8.0).state) == StateKind::IrActive);
  }

  TEST_CASE("step is pure") {
    PnConfig cfg;
    cfg.prearm_on_ds2 = true;
    const auto a = pn_step(Idle{}, window(2, 5), cfg, 8.0);
    const auto b = pn_step(Idle{}, window(2, 5), cfg, 8.0);
    CHECK(std::get<PlayDeterrent>(a.actions[0]).command.deterrent.alpha ==
          std::get<PlayDeterrent>(b.actions[0]).command.deterrent.alpha);
  }

  TEST_CASE("gating over random score streams") {
    PnConfig cfg;
    cfg.ds_threshold = 2;
    Rng rng(3);
    PnState s = Idle{};
    for (int i = 0; i < 500; ++i) {
      const auto r = pn_step(s, window(static_cast<int>(rng() % 2)), cfg, 4.0 * i);
      CHECK(count<CaptureFrame>(r) == 0);
      s = r.state;
    }
  }

  TEST_CASE("config validation") {
    PnConfig cfg;
    cfg.ds_threshold = 3;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    PnConfig neg;
    neg.repel_cooldown_s = -1.0;
    CHECK_THROWS_AS(neg.validate(), InvalidConfig);
  }

  TEST_CASE("flash schedule") {
    const auto f = flash_schedule(2.0, 10.0);
    CHECK(f.cycles() == 20);
    CHECK(f.on_intervals[1].first == doctest::Approx(0.5));
    CHECK(f.on_intervals[1].second == doctest::Approx(0.75));
  }

  TEST_CASE("execute_repel applies the deterrent") {
    BeeBuzzSpec spec;
    spec.duration_s = 1.0;
    const AudioClip clip = synth_bee_buzz(spec, 1);
    const auto out = execute_repel(repel("f"), clip);
    CHECK(out.audio.frame_rate_hz == doctest::Approx(9600.0));
    CHECK(out.flash.cycles() == 20);

    RepelCommand a = repel("f");
    a.deterrent.kind = ModificationKind::PinkNoiseOverlay;
    RepelCommand b = a;
    b.deterrent.seed = 2;
    CHECK(execute_repel(a, clip).audio.samples != execute_repel(b, clip).audio.samples);
  }

  TEST_CASE("ir duty cycle") {
    CHECK(ir_duty_cycle({{0.0, StateKind::Idle}}, 100.0) == 0.0);
    CHECK(ir_duty_cycle({{0.0, StateKind::IrActive}}, 100.0) == 1.0);
    CHECK(ir_duty_cycle({{0.0, StateKind::Idle},
                         {20.0, StateKind::IrActive},
                         {20.1, StateKind::AwaitingDecision},
                         {30.0, StateKind::Repelling},
                         {40.0, StateKind::Cooldown}},
                        100.0) == doctest::Approx(0.10));
    CHECK_THROWS_AS(ir_duty_cycle({}, 1.0), InvalidInput);
  }

  TEST_CASE("action log line") {
    CHECK(action_log_line(4.0, "pn1", StateKind::Idle, StateKind::IrActive, "CaptureFrame") ==
          R"({"t":4.0,"node":"pn1","state_from":"Idle","state_to":"IrActive","action":"CaptureFrame"})");
  }
}
