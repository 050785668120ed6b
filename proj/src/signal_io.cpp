// Copyright 2026 The Diverlink Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "diverlink/signal_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "diverlink/error.hpp"

namespace diverlink {

namespace {

constexpr const char* kImuHeader = "t,ax,ay,az,roll,pitch,yaw";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view field, std::size_t line) {
  field = trim(field);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("bad numeric field '" + std::string(field) + "'", line);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite value", line);
  return value;
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

}  // namespace

double normalize_degrees(double deg) {
  if (deg >= -180.0 && deg <= 180.0) return deg;
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0) r += 360.0;
  return r - 180.0;
}

void validate_monotonic(std::span<const ImuSample> samples) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) {
      throw ValidationError("timestamps not strictly increasing at sample " + std::to_string(i) +
                            " (t=" + std::to_string(samples[i].t) + ")");
    }
  }
}

std::vector<ImuSample> parse_imu_csv(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  std::vector<ImuSample> out;

  if (!std::getline(in, raw)) throw ParseError("missing header", 1);
  ++line;
  if (trim(raw) != kImuHeader) {
    throw ParseError(std::string("expected header '") + kImuHeader + "'", line);
  }

  while (std::getline(in, raw)) {
    ++line;
    std::string_view row = trim(raw);
    if (row.empty()) continue;
    std::array<double, 7> v{};
    std::size_t n = 0;
    while (true) {
      auto comma = row.find(',');
      if (n >= v.size()) throw ParseError("too many fields", line);
      v[n++] = parse_field(row.substr(0, comma), line);
      if (comma == std::string_view::npos) break;
      row.remove_prefix(comma + 1);
    }
    if (n != v.size()) throw ParseError("expected 7 fields, got " + std::to_string(n), line);
    ImuSample s;
    s.t = v[0];
    s.accel = {v[1], v[2], v[3]};
    s.euler = {normalize_degrees(v[4]), normalize_degrees(v[5]), normalize_degrees(v[6])};
    out.push_back(s);
  }
  validate_monotonic(out);
  return out;
}

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_imu_csv(ss.str());
}

void write_imu_csv(const std::filesystem::path& path, std::span<const ImuSample> samples) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path.string());
  std::fprintf(f, "%s\n", kImuHeader);
  for (const auto& s : samples) {
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.accel[0], s.accel[1],
                 s.accel[2], s.euler[0], s.euler[1], s.euler[2]);
  }
  bool ok = std::ferror(f) == 0;
  ok = (std::fclose(f) == 0) && ok;
  if (!ok) throw IoError("write failed for " + path.string());
}

AudioSegment decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw UnsupportedFormatError("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint32_t rate = 0;
  AudioSegment out;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    std::uint32_t size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw UnsupportedFormatError("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw UnsupportedFormatError("short fmt chunk");
      std::uint16_t format = read_u16(bytes.data() + body);
      std::uint16_t channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      std::uint16_t bits = read_u16(bytes.data() + body + 14);
      if (format != 1) throw UnsupportedFormatError("only PCM WAV is supported");
      if (channels != 1) throw UnsupportedFormatError("only mono WAV is supported");
      if (bits != 16) throw UnsupportedFormatError("only 16-bit WAV is supported");
      if (rate == 0) throw UnsupportedFormatError("zero sample rate");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw UnsupportedFormatError("data chunk before fmt chunk");
      out.sample_rate = rate;
      out.samples.resize(size / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i] = static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i));
      }
      return out;
    }
    pos = body + size + (size & 1u);
  }
  throw UnsupportedFormatError("no data chunk");
}

AudioSegment read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioSegment& audio) {
  if (!(audio.sample_rate > 0)) throw ArgumentError("sample rate must be positive");
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (auto s : audio.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioSegment& audio) {
  auto bytes = encode_wav(audio);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

std::vector<ImuSample> decimate_imu(std::span<const ImuSample> stream, std::size_t factor) {
  if (factor == 0) throw ArgumentError("decimation factor must be >= 1");
  std::vector<ImuSample> out;
  out.reserve((stream.size() + factor - 1) / factor);
  for (std::size_t i = 0; i < stream.size(); i += factor) out.push_back(stream[i]);
  return out;
}

bool ReplayClock::wait_until_due(double t, std::chrono::milliseconds timeout) {
  if (speed_ <= 0.0) return true;
  using clock = std::chrono::steady_clock;
  auto now = clock::now();
  if (!start_) {
    start_ = now;
    t_start_ = t;
  }
  auto due = *start_ + std::chrono::duration_cast<clock::duration>(
                           std::chrono::duration<double>((t - t_start_) / speed_));
  if (due <= now) return true;
  if (due - now > timeout) {
    std::this_thread::sleep_for(timeout);
    return false;
  }
  std::this_thread::sleep_until(due);
  return true;
}

ImuReplaySource::ImuReplaySource(std::vector<ImuSample> samples, double speed)
    : samples_(std::move(samples)), clock_(speed) {
  validate_monotonic(samples_);
}

std::optional<ImuSample> ImuReplaySource::next(std::chrono::milliseconds timeout) {
  if (exhausted()) return std::nullopt;
  if (!clock_.wait_until_due(samples_[pos_].t, timeout)) return std::nullopt;
  return samples_[pos_++];
}

AudioReplaySource::AudioReplaySource(AudioSegment audio, std::size_t block, double speed)
    : audio_(std::move(audio)), block_(block), clock_(speed) {
  if (block_ == 0) throw ArgumentError("audio block size must be positive");
}

std::optional<AudioSegment> AudioReplaySource::next(std::chrono::milliseconds timeout) {
  if (exhausted()) return std::nullopt;
  const double t = audio_.t0 + static_cast<double>(pos_) / audio_.sample_rate;
  const std::size_t n = std::min(block_, audio_.samples.size() - pos_);
  // A block is available once its last sample has been captured.
  const double t_end = t + static_cast<double>(n) / audio_.sample_rate;
  if (!clock_.wait_until_due(t_end, timeout)) return std::nullopt;
  AudioSegment chunk;
  chunk.sample_rate = audio_.sample_rate;
  chunk.t0 = t;
  chunk.samples.assign(audio_.samples.begin() + static_cast<std::ptrdiff_t>(pos_),
                       audio_.samples.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return chunk;
}

}  // namespace diverlink
