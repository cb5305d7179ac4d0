#include "tfsep/wav_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace tfsep {

namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host assumed");

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("wav: cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("wav: not a RIFF file: " + path);
  read_le<std::uint32_t>(in);
  in.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("wav: not a WAVE file: " + path);

  std::uint16_t fmt_code = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::vector<char> payload;
  bool have_fmt = false, have_data = false;

  while (in && !(have_fmt && have_data)) {
    in.read(tag, 4);
    const std::uint32_t size = read_le<std::uint32_t>(in);
    if (!in) break;
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      fmt_code = read_le<std::uint16_t>(in);
      channels = read_le<std::uint16_t>(in);
      sample_rate = read_le<std::uint32_t>(in);
      read_le<std::uint32_t>(in);  // byte rate
      read_le<std::uint16_t>(in);  // block align
      bits = read_le<std::uint16_t>(in);
      if (size > 16) in.ignore(size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      payload.resize(size);
      in.read(payload.data(), size);
      have_data = true;
    } else {
      in.ignore(size + (size & 1));
    }
  }
  if (!have_fmt || !have_data) throw std::runtime_error("wav: missing fmt/data chunk: " + path);
  if (channels == 0) throw std::runtime_error("wav: zero channels: " + path);

  const bool pcm16 = fmt_code == 1 && bits == 16;
  const bool f32 = fmt_code == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw std::runtime_error("wav: unsupported encoding (need PCM16 or float32): " + path);

  const std::size_t bytes_per = bits / 8;
  const std::int64_t total = static_cast<std::int64_t>(payload.size() / bytes_per);
  const std::int64_t samples = total / channels;

  Waveform w(channels, samples, static_cast<int>(sample_rate));
  for (std::int64_t n = 0; n < samples; ++n) {
    for (int ch = 0; ch < channels; ++ch) {
      const char* p = payload.data() + (n * channels + ch) * bytes_per;
      if (pcm16) {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        w.at(ch, n) = static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        w.at(ch, n) = static_cast<double>(v);
      }
    }
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavFormat fmt) {
  if (w.channels <= 0 || w.samples < 0) throw std::invalid_argument("wav: empty waveform");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("wav: cannot write " + path);

  const bool pcm = fmt == WavFormat::Pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(w.samples * w.channels * (bits / 8));

  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, pcm ? 1 : 3);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(w.channels));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate) * w.channels * (bits / 8));
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(w.channels * (bits / 8)));
  write_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);

  for (std::int64_t n = 0; n < w.samples; ++n) {
    for (int ch = 0; ch < w.channels; ++ch) {
      if (pcm) {
        const double clipped = std::clamp(w.at(ch, n), -1.0, 1.0);
        write_le<std::int16_t>(out, static_cast<std::int16_t>(std::lround(clipped * 32767.0)));
      } else {
        write_le<float>(out, static_cast<float>(w.at(ch, n)));
      }
    }
  }
  if (!out) throw std::runtime_error("wav: write failed: " + path);
}

}  // namespace tfsep
