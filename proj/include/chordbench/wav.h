#pragma once

#include <filesystem>
#include <vector>

namespace chordbench {

/// Mono audio with samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 22050;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

/// Reads 16-bit PCM WAV. Multi-channel input is averaged down to mono.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono WAV. Samples are clipped to [-1, 1].
void write_wav(const AudioBuffer& audio, const std::filesystem::path& path);

}  // namespace chordbench
