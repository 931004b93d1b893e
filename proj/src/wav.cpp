#include "chordbench/wav.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "chordbench/error.h"

namespace chordbench {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

void put16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>(v >> 8);
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const std::string where = "'" + path.string() + "': ";
  if (data.size() < 12 || std::memcmp(bytes, "RIFF", 4) != 0 || std::memcmp(bytes + 8, "WAVE", 4) != 0) {
    throw ParseError(where + "not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const std::uint32_t size = le32(bytes + pos + 4);
    const unsigned char* body = bytes + pos + 8;
    const std::size_t avail = data.size() - pos - 8;
    if (std::memcmp(bytes + pos, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw ParseError(where + "truncated fmt chunk");
      format = le16(body);
      channels = le16(body + 2);
      rate = le32(body + 4);
      bits = le16(body + 14);
    } else if (std::memcmp(bytes + pos, "data", 4) == 0) {
      pcm = body;
      pcm_size = std::min<std::size_t>(size, avail);
    }
    pos += 8 + size + (size & 1u);
  }
  if (format != 1 || bits != 16) throw ParseError(where + "only 16-bit PCM is supported");
  if (channels == 0 || rate == 0) throw ParseError(where + "bad fmt chunk");
  if (pcm == nullptr) throw ParseError(where + "missing data chunk");

  AudioBuffer audio;
  audio.sample_rate_hz = static_cast<int>(rate);
  const std::size_t frames = pcm_size / (2u * channels);
  audio.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const auto v = static_cast<std::int16_t>(le16(pcm + 2 * (i * channels + c)));
      acc += v / 32767.0;
    }
    audio.samples[i] = std::clamp(acc / channels, -1.0, 1.0);
  }
  return audio;
}

void write_wav(const AudioBuffer& audio, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  put32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
  put32(out, static_cast<std::uint32_t>(audio.sample_rate_hz) * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, 2 * n);
  for (double s : audio.samples) {
    const auto v = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 1.0) * 32767.0));
    put16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed on '" + path.string() + "'");
}

}  // namespace chordbench
