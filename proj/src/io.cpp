#include "elemantra/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "elemantra/error.hpp"

namespace elemantra::io {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void require(std::size_t n, const char* what) const {
    if (remaining() < n) throw ParseError(std::string("truncated WAV: ") + what, pos_);
  }
  std::uint32_t u32(const char* what) {
    require(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint16_t u16(const char* what) {
    require(2, what);
    const auto lo = static_cast<unsigned char>(bytes_[pos_]);
    const auto hi = static_cast<unsigned char>(bytes_[pos_ + 1]);
    pos_ += 2;
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::string tag(const char* what) {
    require(4, what);
    std::string t = bytes_.substr(pos_, 4);
    pos_ += 4;
    return t;
  }
  void skip(std::size_t n, const char* what) {
    require(n, what);
    pos_ += n;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

double parse_real(std::string_view s, std::size_t offset) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("invalid real '" + std::string(s) + "'", offset);
  }
  return v;
}

SeismicTrace trace_from_json(const nlohmann::json& j, std::size_t offset) {
  if (!j.is_object() || !j.contains("sample_rate_hz") || !j.contains("samples") ||
      !j["samples"].is_array() || !j["sample_rate_hz"].is_number()) {
    throw ParseError("trace record needs sample_rate_hz and samples", offset);
  }
  SeismicTrace t;
  t.sample_rate_hz = j["sample_rate_hz"].get<double>();
  if (!(t.sample_rate_hz > 0.0)) throw ParseError("sample_rate_hz must be positive", offset);
  t.start_time_s = j.value("start_time_s", 0.0);
  const auto& arr = j["samples"];
  t.samples.resize(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ParseError("non-numeric sample", offset);
    t.samples[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return t;
}

}  // namespace

std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string encode_wav(const AudioClip& clip) {
  if (!(clip.frame_rate_hz > 0.0)) throw InvalidInput("encode_wav: frame rate must be positive");
  const auto rate = static_cast<std::uint32_t>(std::llround(clip.frame_rate_hz));
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_bytes = n * 2;

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
    const double s = std::clamp(clip.samples[i], -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(s * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

AudioClip decode_wav(const std::string& bytes) {
  ByteReader r(bytes);
  if (r.tag("RIFF header") != "RIFF") throw ParseError("missing RIFF tag", 0);
  r.u32("RIFF size");
  if (r.tag("WAVE tag") != "WAVE") throw ParseError("missing WAVE tag", 8);

  bool have_fmt = false;
  std::uint32_t rate = 0;
  while (true) {
    const std::size_t chunk_at = r.offset();
    if (r.remaining() == 0) throw ParseError("no data chunk", chunk_at);
    const std::string id = r.tag("chunk id");
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16) throw ParseError("fmt chunk too small", chunk_at);
      const std::uint16_t format = r.u16("format");
      const std::uint16_t channels = r.u16("channels");
      rate = r.u32("sample rate");
      r.u32("byte rate");
      r.u16("block align");
      const std::uint16_t bits = r.u16("bits per sample");
      if (format != 1 || channels != 1 || bits != 16) {
        throw ParseError("only PCM16 mono is supported", chunk_at);
      }
      if (rate == 0) throw ParseError("zero sample rate", chunk_at);
      r.skip(size - 16 + (size & 1), "fmt extension");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError("data chunk before fmt chunk", chunk_at);
      if (size % 2 != 0) throw ParseError("odd PCM16 data size", chunk_at);
      r.require(size, "sample data");
      AudioClip clip;
      clip.frame_rate_hz = static_cast<double>(rate);
      clip.samples.resize(size / 2);
      for (Eigen::Index i = 0; i < clip.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(r.u16("sample"));
        clip.samples[i] = static_cast<double>(v) / 32767.0;
      }
      return clip;
    } else {
      r.skip(size + (size & 1), "unknown chunk");
    }
  }
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path) {
  write_file(path, encode_wav(clip));
}

AudioClip load_wav(const std::filesystem::path& path) { return decode_wav(read_file(path)); }

void write_csv(const SeismicTrace& trace, std::ostream& out) {
  out << "# sample_rate_hz=" << format_real(trace.sample_rate_hz) << '\n';
  if (trace.start_time_s != 0.0) out << "# start_time_s=" << format_real(trace.start_time_s) << '\n';
  for (Eigen::Index i = 0; i < trace.samples.size(); ++i) out << format_real(trace.samples[i]) << '\n';
}

SeismicTrace parse_csv(const std::string& text) {
  SeismicTrace trace;
  bool have_rate = false;
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!line.empty() && line.front() == '#') {
      if (!values.empty()) throw ParseError("header line after samples", pos);
      std::string_view body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError("header without '='", pos);
      const std::string_view key = body.substr(0, eq);
      const double v = parse_real(body.substr(eq + 1), pos);
      if (key == "sample_rate_hz") {
        if (!(v > 0.0)) throw ParseError("sample_rate_hz must be positive", pos);
        trace.sample_rate_hz = v;
        have_rate = true;
      } else if (key == "start_time_s") {
        trace.start_time_s = v;
      }
    } else if (!line.empty()) {
      if (!have_rate) throw ParseError("missing '# sample_rate_hz=' header", pos);
      values.push_back(parse_real(line, pos));
    }
    pos = eol + 1;
  }
  if (!have_rate) throw ParseError("missing '# sample_rate_hz=' header", 0);
  trace.samples = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return trace;
}

void save_csv(const SeismicTrace& trace, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_csv(trace, ss);
  write_file(path, ss.str());
}

SeismicTrace load_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string trace_to_json_line(const SeismicTrace& trace) {
  nlohmann::json j;
  j["sample_rate_hz"] = trace.sample_rate_hz;
  j["start_time_s"] = trace.start_time_s;
  j["samples"] = std::vector<double>(trace.samples.data(), trace.samples.data() + trace.samples.size());
  return j.dump();
}

std::vector<SeismicTrace> parse_jsonl(const std::string& text) {
  std::vector<SeismicTrace> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON line: ") + e.what(), pos + (e.byte > 0 ? e.byte - 1 : 0));
      }
      out.push_back(trace_from_json(j, pos));
    }
    pos = eol + 1;
  }
  return out;
}

void save_jsonl(const std::vector<SeismicTrace>& traces, const std::filesystem::path& path) {
  std::string text;
  for (const auto& t : traces) text += trace_to_json_line(t) + "\n";
  write_file(path, text);
}

std::vector<SeismicTrace> load_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_file(path));
}

}  // namespace elemantra::io
