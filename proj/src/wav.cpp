// Minimal RIFF/WAVE reader and writer: PCM16 and float32, interleaved.

#include "mclpsep/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mclpsep/common.hpp"

namespace mclpsep::wav {

namespace {

uint32_t rd_u32(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

uint16_t rd_u16(const unsigned char* p) {
  return uint16_t(p[0]) | uint16_t(p[1]) << 8;
}

void wr_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void wr_u16(std::string& out, uint16_t v) {
  for (int i = 0; i < 2; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

}  // namespace

Audio read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open WAV file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ConfigError("not a RIFF/WAVE file: " + path);

  uint16_t format = 0, n_channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    uint32_t chunk_size = rd_u32(hdr + 4);
    std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body + 16 > bytes.size())
        throw ConfigError("malformed fmt chunk: " + path);
      const unsigned char* p = bytes.data() + body;
      format = rd_u16(p);
      n_channels = rd_u16(p + 2);
      sample_rate = rd_u32(p + 4);
      bits = rd_u16(p + 14);
      if (format == 0xfffe && chunk_size >= 40) {
        // WAVE_FORMAT_EXTENSIBLE: sub-format GUID starts with the format tag
        format = rd_u16(p + 24);
      }
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (body + chunk_size > bytes.size())
        throw ConfigError("truncated data chunk: " + path);
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!data || n_channels == 0)
    throw ConfigError("missing fmt/data chunk: " + path);
  bool pcm16 = format == 1 && bits == 16;
  bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw ConfigError("unsupported WAV encoding (need 16-bit PCM or 32-bit float): " + path);

  std::size_t bytes_per = bits / 8;
  std::size_t n_frames = data_size / (bytes_per * n_channels);
  Audio audio;
  audio.sample_rate = int(sample_rate);
  audio.channels.assign(n_channels, std::vector<double>(n_frames));
  for (std::size_t n = 0; n < n_frames; ++n) {
    for (unsigned c = 0; c < n_channels; ++c) {
      const unsigned char* p = data + (n * n_channels + c) * bytes_per;
      if (pcm16) {
        int16_t v = int16_t(rd_u16(p));
        audio.channels[c][n] = double(v) / 32768.0;
      } else {
        uint32_t u = rd_u32(p);
        float v;
        std::memcpy(&v, &u, 4);
        audio.channels[c][n] = double(v);
      }
    }
  }
  return audio;
}

void write(const std::string& path, const Audio& audio, bool float32) {
  if (audio.channels.empty()) throw ConfigError("cannot write WAV with zero channels");
  std::size_t n_frames = audio.channels[0].size();
  for (const auto& ch : audio.channels)
    if (ch.size() != n_frames)
      throw ConfigError("cannot write WAV with ragged channels");

  uint16_t n_channels = uint16_t(audio.channels.size());
  uint16_t bits = float32 ? 32 : 16;
  uint16_t block = uint16_t(n_channels * bits / 8);
  uint32_t data_size = uint32_t(n_frames * block);

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  wr_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  wr_u32(out, 16);
  wr_u16(out, float32 ? 3 : 1);
  wr_u16(out, n_channels);
  wr_u32(out, uint32_t(audio.sample_rate));
  wr_u32(out, uint32_t(audio.sample_rate) * block);
  wr_u16(out, block);
  wr_u16(out, bits);
  out += "data";
  wr_u32(out, data_size);

  for (std::size_t n = 0; n < n_frames; ++n) {
    for (unsigned c = 0; c < n_channels; ++c) {
      double v = audio.channels[c][n];
      if (float32) {
        float fv = float(v);
        uint32_t u;
        std::memcpy(&u, &fv, 4);
        wr_u32(out, u);
      } else {
        // same 1/32768 scale as the reader, clamped at the positive rail
        long s = std::lround(std::clamp(v, -1.0, 1.0) * 32768.0);
        s = std::clamp<long>(s, -32768, 32767);
        wr_u16(out, uint16_t(int16_t(s)));
      }
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot create WAV file: " + path);
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw ConfigError("failed writing WAV file: " + path);
}

}  // namespace mclpsep::wav
