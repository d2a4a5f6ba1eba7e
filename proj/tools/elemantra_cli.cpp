#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "elemantra/deterrent.hpp"
#include "elemantra/error.hpp"
#include "elemantra/harness.hpp"
#include "elemantra/io.hpp"
#include "elemantra/node_cn.hpp"
#include "elemantra/seismic_detect.hpp"
#include "elemantra/spectral.hpp"
#include "elemantra/synth.hpp"

namespace fs = std::filesystem;
using namespace elemantra;
using ojson = nlohmann::ordered_json;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

SeismicTrace load_trace(const fs::path& p) {
  if (lower_ext(p) == ".jsonl") {
    auto traces = io::load_jsonl(p);
    if (traces.size() != 1) throw InvalidInput(p.string() + ": expected exactly one trace record");
    return traces.front();
  }
  return io::load_csv(p);
}

Envelope parse_envelope(const std::string& s) {
  if (s == "rectangular") return Envelope::Rectangular;
  if (s == "hann") return Envelope::Hann;
  return Envelope::Tukey;
}

void write_grid_csv(const Spectrogram& s, const fs::path& out) {
  std::ostringstream o;
  o << "time_s";
  for (Eigen::Index k = 0; k < s.freqs_hz.size(); ++k) o << ',' << io::format_real(s.freqs_hz[k]);
  o << '\n';
  for (Eigen::Index i = 0; i < s.magnitudes.rows(); ++i) {
    o << io::format_real(s.frame_times_s[i]);
    for (Eigen::Index k = 0; k < s.magnitudes.cols(); ++k) o << ',' << io::format_real(s.magnitudes(i, k));
    o << '\n';
  }
  io::write_file(out, o.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elemantra: seismic detection, deterrents and mesh simulation"};
  app.require_subcommand(1);

  // detect
  auto* detect = app.add_subcommand("detect", "window detection scores over every 4 s window");
  fs::path detect_in;
  bool detect_json = false;
  detect->add_option("--input", detect_in, "trace (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
  detect->add_flag("--json", detect_json, "JSON lines output");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "STFT reference detector");
  fs::path oracle_in;
  bool oracle_rise_fall = false;
  oracle->add_option("--input", oracle_in, "trace (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
  oracle->add_flag("--rise-fall", oracle_rise_fall, "require a rise-then-fall peak trajectory");

  // eval-recall
  auto* recall = app.add_subcommand("eval-recall", "detection-score recall against the STFT reference");
  fs::path recall_in;
  int recall_ds_min = 1;
  recall->add_option("--input", recall_in, "trace (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
  recall->add_option("--ds-min", recall_ds_min, "lowest score counted as a hit")->check(CLI::Range(1, 2));

  // modify-sound
  auto* modify = app.add_subcommand("modify-sound", "apply one deterrent modification to a bee recording");
  fs::path modify_in;
  fs::path modify_out;
  std::uint64_t modify_seed = 0;
  std::string modify_method;
  std::optional<double> modify_alpha;
  modify->add_option("--input", modify_in, "PCM16 mono WAV")->required()->check(CLI::ExistingFile);
  modify->add_option("--seed", modify_seed, "seed for every random draw")->required();
  modify->add_option("--method", modify_method, "frame_rate | pink_noise | silence_gaps")
      ->check(CLI::IsMember({"frame_rate", "pink_noise", "silence_gaps"}));
  modify->add_option("--alpha", modify_alpha, "modification strength")->check(CLI::PositiveNumber);
  modify->add_option("--out", modify_out, "modified WAV");

  // synth
  auto* synth = app.add_subcommand("synth", "write test signals");
  synth->require_subcommand(1);
  auto* synth_rumble_cmd = synth->add_subcommand("rumble", "rumble in white noise, CSV trace");
  fs::path rumble_out;
  RumbleSpec rumble_spec;
  double rumble_total = 4.0;
  double rumble_onset = 0.0;
  double rumble_fs = 1000.0;
  std::uint64_t rumble_seed = 0;
  std::string rumble_env = "tukey";
  synth_rumble_cmd->add_option("--out", rumble_out, "output .csv or .jsonl")->required();
  synth_rumble_cmd->add_option("--duration", rumble_spec.duration_s, "rumble length (s)");
  synth_rumble_cmd->add_option("--total", rumble_total, "trace length (s)");
  synth_rumble_cmd->add_option("--onset", rumble_onset, "rumble onset (s)");
  synth_rumble_cmd->add_option("--snr", rumble_spec.snr_db, "SNR in dB; omit for a clean chirp");
  synth_rumble_cmd->add_option("--f-start", rumble_spec.f_start_hz);
  synth_rumble_cmd->add_option("--f-peak", rumble_spec.f_peak_hz);
  synth_rumble_cmd->add_option("--f-end", rumble_spec.f_end_hz);
  synth_rumble_cmd->add_option("--amplitude", rumble_spec.amplitude);
  synth_rumble_cmd->add_option("--envelope", rumble_env)->check(CLI::IsMember({"rectangular", "tukey", "hann"}));
  synth_rumble_cmd->add_option("--fs", rumble_fs, "sample rate (Hz)")->check(CLI::PositiveNumber);
  synth_rumble_cmd->add_option("--seed", rumble_seed);

  auto* synth_bee = synth->add_subcommand("bee", "synthetic hive buzz, WAV");
  fs::path bee_out;
  BeeBuzzSpec bee_spec;
  std::uint64_t bee_seed = 0;
  synth_bee->add_option("--out", bee_out, "output .wav")->required();
  synth_bee->add_option("--duration", bee_spec.duration_s)->check(CLI::PositiveNumber);
  synth_bee->add_option("--fs", bee_spec.frame_rate_hz)->check(CLI::PositiveNumber);
  synth_bee->add_option("--seed", bee_seed);

  auto* synth_pink = synth->add_subcommand("pinknoise", "unit-RMS pink noise, WAV or CSV");
  fs::path pink_out;
  double pink_duration = 4.0;
  double pink_fs = 8000.0;
  std::uint64_t pink_seed = 0;
  synth_pink->add_option("--out", pink_out, "output .wav or .csv")->required();
  synth_pink->add_option("--duration", pink_duration)->check(CLI::PositiveNumber);
  synth_pink->add_option("--fs", pink_fs)->check(CLI::PositiveNumber);
  synth_pink->add_option("--seed", pink_seed);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a scenario end to end");
  fs::path sim_scenario;
  fs::path sim_config;
  fs::path sim_out;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--scenario", sim_scenario, "scenario.json")->required()->check(CLI::ExistingFile);
  simulate->add_option("--config", sim_config, "sim.json")->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "output directory")->required();
  simulate->add_option("--seed", sim_seed, "override the scenario master seed");

  // eval-ap50
  auto* ap50 = app.add_subcommand("eval-ap50", "AP at IoU 0.5 on a labelled frame set");
  fs::path ap_labels;
  std::string ap_detector = "oracle";
  cn::StochasticDetectorParams ap_params;
  ap50->add_option("--labels", ap_labels, "labelled set JSON")->required()->check(CLI::ExistingFile);
  ap50->add_option("--detector", ap_detector)->check(CLI::IsMember({"oracle", "stochastic", "presence_only"}));
  ap50->add_option("--seed", ap_params.seed);
  ap50->add_option("--tpr", ap_params.true_positive_rate);
  ap50->add_option("--fpr", ap_params.false_positive_rate);

  // spectrogram
  auto* spectro = app.add_subcommand("spectrogram", "magnitude grid for plotting");
  fs::path spec_in;
  fs::path spec_out;
  std::optional<double> spec_frame;
  std::optional<double> spec_hop;
  spectro->add_option("--input", spec_in, ".wav or .csv")->required()->check(CLI::ExistingFile);
  spectro->add_option("--out", spec_out, "grid CSV")->required();
  spectro->add_option("--frame-s", spec_frame, "frame length (s)")->check(CLI::PositiveNumber);
  spectro->add_option("--hop-s", spec_hop, "hop (s)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*detect) {
      const SeismicTrace trace = load_trace(detect_in);
      for (const auto& d : detect_stream(trace)) {
        if (detect_json) {
          std::cout << to_json_line(d) << "\n";
        } else {
          std::cout << d.window_index << " start=" << io::format_real(d.window_start_s) << " ds=" << to_int(d.ds)
                    << " max_run=" << d.max_run << "\n";
        }
      }
    } else if (*oracle) {
      OracleParams p;
      p.require_rise_fall = oracle_rise_fall;
      for (const auto& e : stft_oracle_detect(load_trace(oracle_in), p)) {
        ojson j;
        j["t_start_s"] = e.t_start_s;
        j["t_end_s"] = e.t_end_s;
        j["duration_s"] = e.duration_s();
        std::cout << j.dump() << "\n";
      }
    } else if (*recall) {
      const SeismicTrace trace = load_trace(recall_in);
      const auto dets = detect_stream(trace);
      const auto events = stft_oracle_detect(trace);
      const auto rep = match_and_recall(dets, events, static_cast<DetectionScore>(recall_ds_min));
      ojson j;
      j["oracle_count"] = rep.oracle_count;
      j["matched_count"] = rep.matched_count;
      j["recall"] = rep.recall ? ojson(*rep.recall) : ojson(nullptr);
      j["windows"] = dets.size();
      std::cout << j.dump() << "\n";
    } else if (*modify) {
      const AudioClip clip = io::load_wav(modify_in);
      Rng rng(modify_seed);
      ModificationParams params = pick_modification(rng);
      if (!modify_method.empty()) params.kind = modification_from_string(modify_method);
      if (modify_alpha) params.alpha = *modify_alpha;
      const ModificationOutcome out = apply_modification(clip, params);
      for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
      if (!modify_out.empty()) io::save_wav(out.clip, modify_out);
      ojson j;
      j["kind"] = to_string(params.kind);
      j["alpha"] = params.alpha;
      j["seed"] = modify_seed;
      j["max_xcorr"] = stft_similarity(clip, out.clip).max_xcorr;
      j["l2_delta"] = relative_l2_delta(clip, out.clip);
      std::cout << j.dump() << "\n";
    } else if (*synth_rumble_cmd) {
      rumble_spec.envelope = parse_envelope(rumble_env);
      const SeismicTrace t = synth_rumble(rumble_spec, rumble_fs, rumble_total, rumble_onset, rumble_seed);
      if (lower_ext(rumble_out) == ".jsonl") {
        io::save_jsonl({t}, rumble_out);
      } else {
        io::save_csv(t, rumble_out);
      }
    } else if (*synth_bee) {
      io::save_wav(synth_bee_buzz(bee_spec, bee_seed), bee_out);
    } else if (*synth_pink) {
      const Eigen::VectorXd x = generate_pink_noise(samples_for(pink_duration, pink_fs), pink_fs, pink_seed);
      if (lower_ext(pink_out) == ".csv") {
        SeismicTrace t;
        t.samples = x;
        t.sample_rate_hz = pink_fs;
        io::save_csv(t, pink_out);
      } else {
        // Unit RMS would clip in PCM16; store at a 0.25 peak-safe scale.
        AudioClip c;
        c.samples = x * (0.25 / std::max(1e-12, x.cwiseAbs().maxCoeff()));
        c.frame_rate_hz = pink_fs;
        io::save_wav(c, pink_out);
      }
    } else if (*simulate) {
      harness::Scenario scenario = harness::load_scenario(sim_scenario);
      if (sim_seed) scenario.seed = *sim_seed;
      harness::SimConfig config = sim_config.empty() ? harness::SimConfig{} : harness::load_sim_config(sim_config);
      config.output_dir = sim_out;
      const harness::RunResult r = harness::run_scenario(scenario, config);
      std::cout << (sim_out / "metrics.json").string() << "\n";
      std::cout << "recall=" << (r.metrics.recall ? io::format_real(*r.metrics.recall) : std::string("none"))
                << " warnings=" << r.metrics.warning_count << " false_warnings=" << r.metrics.false_warning_count
                << "\n";
    } else if (*ap50) {
      const cn::LabeledFrameSet set = cn::load_labeled_set(ap_labels);
      const auto det = cn::make_detector(ap_detector, ap_params);
      ojson j;
      j["detector"] = det->name();
      j["frames"] = set.frames.size();
      j["ap50"] = cn::evaluate_ap50(*det, set);
      std::cout << j.dump() << "\n";
    } else if (*spectro) {
      // Audio defaults to the similarity grid, seismic traces to the oracle grid.
      const bool audio = lower_ext(spec_in) == ".wav";
      StftParams stft;
      if (audio) {
        stft.frame_s = 0.064;
        stft.hop_s = 0.032;
      }
      if (spec_frame) stft.frame_s = *spec_frame;
      if (spec_hop) stft.hop_s = *spec_hop;
      Spectrogram s;
      if (audio) {
        const AudioClip c = io::load_wav(spec_in);
        s = compute_stft(c.samples, c.frame_rate_hz, stft, 0.0);
      } else {
        s = compute_stft(load_trace(spec_in), stft);
      }
      write_grid_csv(s, spec_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
