#pragma once

#include <string>

#include "tfsep/stft.hpp"

namespace tfsep {

enum class WavFormat { Pcm16, Float32 };

Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w, WavFormat fmt = WavFormat::Float32);

}  // namespace tfsep
