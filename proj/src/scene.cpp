#include "tfsep/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tfsep/rng.hpp"
#include "tfsep/wav_io.hpp"

namespace tfsep::scene {

std::int64_t SceneSpec::num_samples() const {
  return static_cast<std::int64_t>(std::llround(duration * sample_rate));
}

void SceneSpec::validate() const {
  if (sources <= 0 || mics <= 0) throw std::invalid_argument("scene: sources/mics must be positive");
  if (sample_rate <= 0) throw std::invalid_argument("scene: bad sample rate");
  if (num_samples() <= 0) throw std::invalid_argument("scene: duration too short");
  auto check_cp = [&](std::size_t c_size, std::size_t p_size) {
    return c_size == static_cast<std::size_t>(sources) && p_size == static_cast<std::size_t>(mics);
  };
  if (direct_delay.size() != static_cast<std::size_t>(sources) ||
      direct_gain.size() != static_cast<std::size_t>(sources) ||
      tail.size() != static_cast<std::size_t>(sources))
    throw std::invalid_argument("scene: per-source tables must have C rows");
  for (int c = 0; c < sources; ++c) {
    if (!check_cp(direct_delay.size(), direct_delay[c].size()) ||
        !check_cp(direct_gain.size(), direct_gain[c].size()) ||
        !check_cp(tail.size(), tail[c].size()))
      throw std::invalid_argument("scene: per-mic tables must have P columns");
    for (int p = 0; p < mics; ++p) {
      if (direct_delay[c][p] < 0) throw std::invalid_argument("scene: negative delay");
      if (!std::isfinite(direct_gain[c][p])) throw std::invalid_argument("scene: bad gain");
      if (tail[c][p].length < 0) throw std::invalid_argument("scene: negative tail length");
      const std::int64_t need = direct_delay[c][p] + tail[c][p].length + 1;
      if (need >= num_samples())
        throw std::invalid_argument("scene: duration too short for delays/filters");
    }
  }
  if (!dry_wavs.empty() && dry_wavs.size() != static_cast<std::size_t>(sources))
    throw std::invalid_argument("scene: need one dry WAV per source");
}

SceneSpec SceneSpec::random_geometry(int sources, int mics, int sample_rate, double duration,
                                     int tail_len, NoiseKind noise, double snr_db,
                                     std::uint64_t seed) {
  SceneSpec spec;
  spec.sources = sources;
  spec.mics = mics;
  spec.sample_rate = sample_rate;
  spec.duration = duration;
  spec.noise_kind = noise;
  spec.snr_db = snr_db;
  spec.seed = seed;
  Rng rng(seed ^ 0xa5c3u);
  spec.direct_delay.assign(sources, std::vector<int>(mics, 0));
  spec.direct_gain.assign(sources, std::vector<double>(mics, 1.0));
  spec.tail.assign(sources, std::vector<TailSpec>(mics));
  for (int c = 0; c < sources; ++c)
    for (int p = 0; p < mics; ++p) {
      spec.direct_delay[c][p] = static_cast<int>(rng.uniform(0.0, 0.004) * sample_rate);
      spec.direct_gain[c][p] = rng.uniform(0.7, 1.0);
      spec.tail[c][p].length = tail_len;
      spec.tail[c][p].decay = rng.uniform(0.01, 0.03);
      spec.tail[c][p].gain = 0.5;
    }
  return spec;
}

namespace {

// Flat 100 Hz .. 0.4*fs band-limited noise via spectral masking.
std::vector<double> bandlimited_noise(std::int64_t n, int sample_rate, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.gaussian();
  // Round up to an even FFT length.
  std::int64_t m = 1;
  while (m < n) m <<= 1;
  std::vector<cd> spec = rfft(x, static_cast<int>(m));
  const double lo = 100.0, hi = 0.4 * sample_rate;
  for (std::size_t f = 0; f < spec.size(); ++f) {
    const double hz = static_cast<double>(f) * sample_rate / static_cast<double>(m);
    if (hz < lo || hz > hi) spec[f] = cd{};
  }
  std::vector<double> y = irfft(spec, static_cast<int>(m));
  y.resize(n);
  // Unit RMS.
  double e = 0.0;
  for (double v : y) e += v * v;
  const double rms = std::sqrt(e / static_cast<double>(n));
  if (rms > 0.0)
    for (double& v : y) v /= rms;
  return y;
}

}  // namespace

Scene simulate(const SceneSpec& spec) {
  spec.validate();
  const std::int64_t n = spec.num_samples();
  const int C = spec.sources, P = spec.mics;
  Rng root(spec.seed);

  Scene sc;
  sc.spec = spec;
  sc.noise = Waveform(P, n, spec.sample_rate);
  sc.mixture = Waveform(P, n, spec.sample_rate);

  for (int c = 0; c < C; ++c) {
    Waveform dry(1, n, spec.sample_rate);
    if (!spec.dry_wavs.empty()) {
      const Waveform loaded = read_wav(spec.dry_wavs[c]);
      if (loaded.sample_rate != spec.sample_rate)
        throw std::invalid_argument("scene: dry WAV sample rate mismatch");
      const std::int64_t m = std::min(loaded.samples, n);
      for (std::int64_t i = 0; i < m; ++i) dry.at(0, i) = loaded.at(0, i);
    } else {
      Rng src = root.fork(1000 + c);
      const std::vector<double> x = bandlimited_noise(n, spec.sample_rate, src);
      std::copy(x.begin(), x.end(), dry.data.begin());
    }
    sc.dry.push_back(std::move(dry));
  }

  for (int c = 0; c < C; ++c) {
    Waveform direct(P, n, spec.sample_rate);
    Waveform tail(P, n, spec.sample_rate);
    for (int p = 0; p < P; ++p) {
      const int delay = spec.direct_delay[c][p];
      const double gain = spec.direct_gain[c][p];
      for (std::int64_t i = delay; i < n; ++i) direct.at(p, i) = gain * sc.dry[c].at(0, i - delay);

      const TailSpec& ts = spec.tail[c][p];
      if (ts.length > 0) {
        Rng trng = root.fork(2000 + c * P + p);
        std::vector<double> taps(ts.length);
        for (int k = 0; k < ts.length; ++k)
          taps[k] = ts.gain * gain * std::exp(-ts.decay * k) * trng.gaussian();
        // Tail starts one sample after the direct path.
        for (std::int64_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int k = 0; k < ts.length; ++k) {
            const std::int64_t j = i - delay - 1 - k;
            if (j < 0) break;
            acc += taps[k] * sc.dry[c].at(0, j);
          }
          tail.at(p, i) = acc;
        }
      }
    }
    sc.direct.push_back(std::move(direct));
    sc.reverb_tail.push_back(std::move(tail));
  }

  if (spec.noise_kind == NoiseKind::White) {
    Rng nrng = root.fork(3000);
    for (int p = 0; p < P; ++p)
      for (std::int64_t i = 0; i < n; ++i) sc.noise.at(p, i) = nrng.gaussian();
    // Scale against the direct-path sum at the reference mic.
    double sig = 0.0, noi = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (int c = 0; c < C; ++c) s += sc.direct[c].at(0, i);
      sig += s * s;
      noi += sc.noise.at(0, i) * sc.noise.at(0, i);
    }
    if (noi > 0.0 && sig > 0.0) {
      const double scale = std::sqrt(sig / (noi * std::pow(10.0, spec.snr_db / 10.0)));
      for (double& v : sc.noise.data) v *= scale;
    }
  }

  for (int p = 0; p < P; ++p)
    for (std::int64_t i = 0; i < n; ++i) {
      double s = sc.noise.at(p, i);
      for (int c = 0; c < C; ++c) s += sc.direct[c].at(p, i) + sc.reverb_tail[c].at(p, i);
      sc.mixture.at(p, i) = s;
    }
  return sc;
}

double normalize_variance(Waveform& mixture, std::vector<Waveform>& targets) {
  if (mixture.samples <= 0) throw std::invalid_argument("normalize: empty mixture");
  double mean = 0.0;
  for (double v : mixture.data) mean += v;
  mean /= static_cast<double>(mixture.data.size());
  double var = 0.0;
  for (double v : mixture.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(mixture.data.size());
  if (var <= 0.0) throw std::invalid_argument("normalize: all-zero mixture");
  const double factor = 1.0 / std::sqrt(var);
  for (double& v : mixture.data) v *= factor;
  for (Waveform& t : targets)
    for (double& v : t.data) v *= factor;
  return factor;
}

Spectrogram oracle_estimator(const Scene& scene, double corruption_db, std::uint64_t seed,
                             const StftConfig& cfg, int ref_mic) {
  if (!std::isfinite(corruption_db)) throw std::invalid_argument("oracle: corruption must be finite");
  const int C = scene.spec.sources;
  const std::int64_t n = scene.mixture.samples;
  Rng rng(seed);

  Spectrogram out;
  for (int c = 0; c < C; ++c) {
    const Spectrogram target = stft(scene.direct[c].mono(ref_mic), cfg);
    if (c == 0) out = Spectrogram(C, target.frames, target.freqs, cfg);

    // The corruption is the spectrogram of a seeded time-domain noise so
    // the estimate stays a consistent spectrogram; re-synthesized SI-SDR
    // then tracks corruption_db instead of being inflated by the
    // overlap-add redundancy.
    Rng crng = rng.fork(400 + c);
    Waveform nw(1, n, cfg.sample_rate);
    for (double& v : nw.data) v = crng.gaussian();
    Spectrogram noise = stft(nw, cfg);

    double sig = 0.0, noi = 0.0;
    for (int t = 0; t < target.frames; ++t)
      for (int f = 0; f < target.freqs; ++f) {
        sig += std::norm(target.at(0, t, f));
        noi += std::norm(noise.at(0, t, f));
      }
    const double scale =
        noi > 0.0 ? std::sqrt(sig / (noi * std::pow(10.0, corruption_db / 10.0))) : 0.0;
    for (int t = 0; t < target.frames; ++t)
      for (int f = 0; f < target.freqs; ++f)
        out.at(c, t, f) = target.at(0, t, f) + scale * noise.at(0, t, f);
  }
  return out;
}

}  // namespace tfsep::scene
