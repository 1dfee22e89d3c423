#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mclpsep::wav {

struct Audio {
  std::vector<std::vector<double>> channels;  // [channel][sample], in [-1, 1]
  int sample_rate = 0;

  std::size_t n_channels() const { return channels.size(); }
  std::size_t n_samples() const { return channels.empty() ? 0 : channels[0].size(); }
};

// Reads 16-bit PCM or 32-bit IEEE float RIFF/WAVE files.
Audio read(const std::string& path);

// Writes 16-bit PCM (default) or 32-bit float. PCM samples are clamped.
void write(const std::string& path, const Audio& audio, bool float32 = false);

}  // namespace mclpsep::wav
