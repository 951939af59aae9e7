// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "signal/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "common/error.hpp"
#include "common/files.hpp"

namespace avseci::signal {

namespace {

std::uint32_t u32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(name + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t len = u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) {
      // Tolerate a truncated trailing data chunk length (streaming writers).
      if (std::memcmp(chunk, "data", 4) == 0) {
        data = bytes.data() + body;
        data_len = bytes.size() - body;
        break;
      }
      throw FormatError(name + ": chunk overruns file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) throw FormatError(name + ": fmt chunk too short");
      format = u16(chunk + 8);
      channels = u16(chunk + 10);
      rate = u32(chunk + 12);
      bits = u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (len < 40) throw FormatError(name + ": extensible fmt too short");
        format = u16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1u);
  }

  if (!have_fmt) throw FormatError(name + ": missing fmt chunk");
  if (data == nullptr) throw FormatError(name + ": missing data chunk");
  if (rate == 0) throw FormatError(name + ": zero sample rate");
  if (channels != 1) {
    throw UnsupportedLayoutError(name + ": " + std::to_string(channels) +
                                 " channels, only mono is supported");
  }

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_len / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::int16_t>(u16(data + 2 * i));
      w.samples[i] = static_cast<double>(s) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_len / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) w.samples[i] = read_f32_le(data + 4 * i);
  } else {
    throw FormatError(name + ": unsupported encoding (format " +
                      std::to_string(format) + ", " + std::to_string(bits) +
                      " bits)");
  }
  return w;
}

void write_wav(const Waveform& w, const std::filesystem::path& path) {
  if (w.sample_rate_hz <= 0) throw DataError("write_wav: invalid sample rate");
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, 2 * n);
  for (double s : w.samples) {
    const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  write_file_atomic(path, out);
}

double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  long double acc = 0.0;
  for (double v : x) acc += static_cast<long double>(v) * v;
  return std::sqrt(static_cast<double>(acc / x.size()));
}

double peak_abs(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

}  // namespace avseci::signal
