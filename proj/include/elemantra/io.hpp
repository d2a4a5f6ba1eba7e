#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "elemantra/signal.hpp"

namespace elemantra::io {

// PCM16 mono RIFF/WAVE. Samples are scaled by 32767 and clamped; the frame
// rate is stored as an integer, so non-integer rates round on save.
void save_wav(const AudioClip& clip, const std::filesystem::path& path);
AudioClip load_wav(const std::filesystem::path& path);
std::string encode_wav(const AudioClip& clip);
AudioClip decode_wav(const std::string& bytes);

// CSV trace: "# sample_rate_hz=<rate>" header, optional "# start_time_s=<t>",
// then one real per line. Reals are written in shortest round-trip form.
void save_csv(const SeismicTrace& trace, const std::filesystem::path& path);
SeismicTrace load_csv(const std::filesystem::path& path);
void write_csv(const SeismicTrace& trace, std::ostream& out);
SeismicTrace parse_csv(const std::string& text);

// JSON-lines: one {"sample_rate_hz","start_time_s","samples":[...]} record per line.
void save_jsonl(const std::vector<SeismicTrace>& traces, const std::filesystem::path& path);
std::vector<SeismicTrace> load_jsonl(const std::filesystem::path& path);
std::string trace_to_json_line(const SeismicTrace& trace);
std::vector<SeismicTrace> parse_jsonl(const std::string& text);

/// Shortest decimal representation that parses back to the same double.
std::string format_real(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace elemantra::io
