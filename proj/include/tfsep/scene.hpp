#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tfsep/stft.hpp"

namespace tfsep::scene {

enum class NoiseKind { None, White };

struct TailSpec {
  int length = 0;        // taps
  double decay = 0.02;   // per-sample amplitude decay rate, envelope exp(-decay * k)
  double gain = 0.5;     // scale of the first tap relative to the direct gain
};

struct SceneSpec {
  int sources = 1;      // C
  int mics = 1;         // P
  int sample_rate = 8000;
  double duration = 1.0;  // seconds
  std::vector<std::vector<int>> direct_delay;     // [c][p], samples
  std::vector<std::vector<double>> direct_gain;   // [c][p]
  std::vector<std::vector<TailSpec>> tail;        // [c][p]
  NoiseKind noise_kind = NoiseKind::None;
  double snr_db = 20.0;  // direct-path sum vs noise at the reference mic
  std::uint64_t seed = 0;
  std::vector<std::string> dry_wavs;  // optional user-supplied dry sources

  std::int64_t num_samples() const;
  void validate() const;

  // Uniformly randomized geometry (delays a few ms apart, mild gain spread,
  // shared tail shape) for quick fixtures.
  static SceneSpec random_geometry(int sources, int mics, int sample_rate, double duration,
                                   int tail_len, NoiseKind noise, double snr_db,
                                   std::uint64_t seed);
};

struct Scene {
  SceneSpec spec;
  std::vector<Waveform> dry;          // C mono
  std::vector<Waveform> direct;       // C, each P channels
  std::vector<Waveform> reverb_tail;  // C, each P channels
  Waveform noise;                     // P channels
  Waveform mixture;                   // P channels
};

// Deterministic scene synthesis: seeded band-limited dry sources (or the
// supplied WAVs), delayed/scaled direct paths, exponentially decaying random
// tails and SNR-scaled white noise, summed sample-exactly.
Scene simulate(const SceneSpec& spec);

// Scales so the mixture has unit sample variance; every target gets the
// same factor.  Returns the factor.
double normalize_variance(Waveform& mixture, std::vector<Waveform>& targets);

// Stand-in for a first-stage estimator: STFT of the direct-path reference
// targets plus seeded complex noise at `corruption_db` per-source SNR.
Spectrogram oracle_estimator(const Scene& scene, double corruption_db, std::uint64_t seed,
                             const StftConfig& cfg, int ref_mic = 0);

}  // namespace tfsep::scene
