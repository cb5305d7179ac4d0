#include "tfsep/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "tfsep/configio.hpp"
#include "tfsep/filters.hpp"
#include "tfsep/model.hpp"
#include "tfsep/objective.hpp"
#include "tfsep/parallel.hpp"
#include "tfsep/pipeline.hpp"
#include "tfsep/scene.hpp"
#include "tfsep/wav_io.hpp"

namespace tfsep::cli {

namespace fs = std::filesystem;

namespace {

std::string thousands(std::int64_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count && count % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++count;
  }
  return {out.rbegin(), out.rend()};
}

void write_sources(const std::vector<Waveform>& wavs, const fs::path& dir,
                   const std::string& stem) {
  for (std::size_t c = 0; c < wavs.size(); ++c)
    write_wav((dir / (stem + "_c" + std::to_string(c) + ".wav")).string(), wavs[c]);
}

struct CommonStft {
  double win_ms = 32.0;
  double hop_ms = 8.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--win-ms", win_ms, "analysis window in ms");
    cmd->add_option("--hop-ms", hop_ms, "hop in ms");
  }
  StftConfig config(int sample_rate) const {
    return StftConfig::for_sample_rate(sample_rate, win_ms, hop_ms);
  }
};

int cmd_simulate(const std::string& config, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, bool pcm16) {
  scene::SceneSpec spec = config::load_scene_spec(config);
  if (seed) {
    spec.seed = *seed;
  }
  const scene::Scene sc = scene::simulate(spec);
  fs::create_directories(out_dir);
  const WavFormat fmt = pcm16 ? WavFormat::Pcm16 : WavFormat::Float32;
  write_wav((fs::path(out_dir) / "mixture.wav").string(), sc.mixture, fmt);
  if (spec.noise_kind != scene::NoiseKind::None)
    write_wav((fs::path(out_dir) / "noise.wav").string(), sc.noise, fmt);
  for (int c = 0; c < spec.sources; ++c) {
    const std::string idx = std::to_string(c);
    write_wav((fs::path(out_dir) / ("dry_c" + idx + ".wav")).string(), sc.dry[c], fmt);
    write_wav((fs::path(out_dir) / ("direct_c" + idx + ".wav")).string(), sc.direct[c], fmt);
    write_wav((fs::path(out_dir) / ("tail_c" + idx + ".wav")).string(), sc.reverb_tail[c], fmt);
  }
  std::cout << "wrote scene (" << spec.sources << " sources, " << spec.mics << " mics, "
            << sc.mixture.samples << " samples) to " << out_dir << "\n";
  return 0;
}

int cmd_stft(const std::string& in, const std::string& out, const CommonStft& sopt) {
  const Waveform x = read_wav(in);
  const StftConfig cfg = sopt.config(x.sample_rate);
  const Spectrogram spec = stft(x, cfg);
  double energy = 0.0;
  for (const cd& v : spec.data) energy += std::norm(v);
  std::cout << "channels=" << spec.channels << " frames=" << spec.frames
            << " freqs=" << spec.freqs << " energy=" << energy << "\n";
  if (!out.empty()) {
    const Waveform y = istft(spec, x.samples);
    write_wav(out, y);
    std::cout << "wrote round-trip resynthesis to " << out << "\n";
  }
  return 0;
}

int cmd_params(const model::ModelConfig& cfg, double macs_seconds) {
  std::cout << thousands(model::count_params(cfg)) << " parameters\n";
  if (macs_seconds > 0.0) {
    const StftConfig scfg = StftConfig::for_sample_rate(8000);
    const int frames =
        num_frames(static_cast<std::int64_t>(macs_seconds * scfg.sample_rate), scfg);
    const std::int64_t macs = model::estimate_macs(cfg, frames);
    std::cout.setf(std::ios::fixed);
    std::cout.precision(1);
    std::cout << static_cast<double>(macs) / macs_seconds / 1e9 << " GMAC/s (" << frames
              << " frames, " << macs_seconds << " s at 8 kHz, 32/8 ms)\n";
  }
  return 0;
}

int cmd_infer(const std::string& config, const std::string& weights_index,
              const std::string& weights_blob, std::optional<std::uint64_t> synth_seed,
              const std::string& in, const std::string& out_dir, const CommonStft& sopt) {
  pipeline::PipelineConfig cfg;
  cfg.stage1.kind = pipeline::StageConfig::Kind::Model;
  cfg.stage1.model_cfg = config::load_model_config(config);
  if (synth_seed)
    cfg.stage1.weights = std::make_shared<model::WeightStore>(
        model::synth_weights(cfg.stage1.model_cfg, *synth_seed));
  else if (!weights_index.empty())
    cfg.stage1.weights =
        std::make_shared<model::WeightStore>(model::load_weights(weights_index, weights_blob));
  else
    throw std::runtime_error("infer: need --weights-index/--weights-blob or --synth-seed");

  const Waveform mix = read_wav(in);
  cfg.stft = sopt.config(mix.sample_rate);
  if (cfg.stage1.model_cfg.F != cfg.stft.freq_bins())
    throw std::runtime_error("infer: model F=" + std::to_string(cfg.stage1.model_cfg.F) +
                             " but STFT yields F=" + std::to_string(cfg.stft.freq_bins()));
  const pipeline::PipelineResult res = pipeline::run(mix, cfg);
  fs::create_directories(out_dir);
  write_sources(res.outputs, out_dir, "s1");
  std::cout << "wrote " << res.outputs.size() << " source estimates to " << out_dir << "\n";
  return 0;
}

int cmd_beamform(const std::string& kind, const std::string& mix_path,
                 const std::vector<std::string>& est_paths, const std::string& out_dir,
                 int dl, int dr, int dd, double eps, double loading, int ref_mic,
                 const CommonStft& sopt) {
  filters::FilterSpec spec;
  if (kind == "mfwf")
    spec.kind = filters::FilterKind::MFWF;
  else if (kind == "convbf")
    spec.kind = filters::FilterKind::ConvBF;
  else if (kind == "wpe")
    spec.kind = filters::FilterKind::WPE;
  else
    throw std::runtime_error("beamform: --kind must be mfwf, convbf or wpe");
  spec.delta_l = dl;
  spec.delta_r = dr;
  spec.delta_d = dd;
  spec.epsilon = eps;
  spec.loading = loading;
  spec.validate();

  const Waveform mix = read_wav(mix_path);
  if (ref_mic < 0 || ref_mic >= mix.channels) throw std::runtime_error("beamform: bad --ref-mic");
  const StftConfig cfg = sopt.config(mix.sample_rate);
  const Spectrogram y = stft(mix, cfg);

  Spectrogram s1(static_cast<int>(est_paths.size()), y.frames, y.freqs, cfg);
  for (std::size_t c = 0; c < est_paths.size(); ++c) {
    const Waveform w = read_wav(est_paths[c]);
    if (w.samples != mix.samples) throw std::runtime_error("beamform: estimate length mismatch");
    const Spectrogram sp = stft(w.mono(0), cfg);
    for (int t = 0; t < y.frames; ++t)
      for (int f = 0; f < y.freqs; ++f) s1.at(static_cast<int>(c), t, f) = sp.at(0, t, f);
  }

  const filters::FilterResult res = filters::apply_filter(y, s1, spec, ref_mic);
  fs::create_directories(out_dir);
  std::vector<Waveform> outs;
  for (int c = 0; c < res.output.channels; ++c) {
    Spectrogram one = res.output.channel(c);
    for (int t = 0; t < one.frames; ++t)
      for (int f : {0, one.freqs - 1}) one.at(0, t, f) = one.at(0, t, f).real();
    outs.push_back(istft(one, mix.samples));
  }
  write_sources(outs, out_dir, kind);

  std::ofstream report(fs::path(out_dir) / "beamform_report.txt");
  report << "kind: " << kind << "\ndelta_l: " << dl << "\ndelta_r: " << dr << "\ndelta_d: " << dd
         << "\nepsilon: " << eps << "\nsources: " << res.output.channels
         << "\ntaps_per_filter: " << spec.taps(mix.channels) << "\n";
  std::cout << "wrote " << outs.size() << " filtered sources to " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::vector<std::string>& est_paths, const std::vector<std::string>& ref_paths,
             const std::string& mix_path, const std::string& loss, bool use_pit,
             const std::string& json_out, const CommonStft& sopt) {
  if (est_paths.size() != ref_paths.size())
    throw std::runtime_error("eval: need matching --est/--ref counts");
  std::vector<std::vector<double>> est, ref;
  int sample_rate = 0;
  for (const std::string& p : est_paths) {
    const Waveform w = read_wav(p);
    sample_rate = w.sample_rate;
    est.push_back(w.channel(0));
  }
  for (const std::string& p : ref_paths) ref.push_back(read_wav(p).channel(0));
  const Waveform mix = read_wav(mix_path);
  const std::vector<double> mix_ref = mix.channel(0);

  const objective::EvalReport report =
      objective::evaluate(est, ref, mix_ref, objective::loss_kind_from_string(loss),
                          sopt.config(sample_rate), use_pit);
  std::cout << report.to_text();
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << report.to_json() << "\n";
  }
  return 0;
}

int cmd_pipeline(const std::string& config, const std::string& in, const std::string& scene_cfg,
                 const std::string& out_dir, std::optional<std::uint64_t> seed) {
  pipeline::PipelineConfig cfg = config::load_pipeline_config(config);
  if (seed) cfg.stage1.seed = *seed;

  std::optional<scene::Scene> sc;
  Waveform mix;
  if (!scene_cfg.empty()) {
    scene::SceneSpec spec = config::load_scene_spec(scene_cfg);
    if (seed) spec.seed = *seed;
    sc = scene::simulate(spec);
    mix = sc->mixture;
  } else if (!in.empty()) {
    mix = read_wav(in);
  } else {
    throw std::runtime_error("pipeline: need --in mixture or --scene config");
  }

  const pipeline::PipelineResult res = pipeline::run(mix, cfg, sc ? &*sc : nullptr);

  fs::create_directories(out_dir);
  write_wav((fs::path(out_dir) / "mixture.wav").string(), mix);
  write_sources(res.s1_wavs, out_dir, "s1");
  if (cfg.filter) {
    std::string stem = "mfwf";
    if (cfg.filter->kind == filters::FilterKind::ConvBF) stem = "convbf";
    if (cfg.filter->kind == filters::FilterKind::WPE) stem = "wpe";
    write_sources(res.filter_wavs, out_dir, stem);
  }
  write_sources(res.outputs, out_dir, "s2");

  std::ofstream report_txt(fs::path(out_dir) / "report.txt");
  report_txt << "sources: " << res.outputs.size() << "\nnorm_factor: " << res.norm_factor << "\n";
  if (sc) {
    // Score final outputs against the direct-path references at the ref mic.
    std::vector<std::vector<double>> est, ref;
    for (const Waveform& w : res.outputs) est.push_back(w.channel(0));
    for (int c = 0; c < sc->spec.sources; ++c)
      ref.push_back(sc->direct[c].mono(cfg.reference_mic).channel(0));
    const objective::EvalReport er =
        objective::evaluate(est, ref, mix.channel(cfg.reference_mic),
                            objective::LossKind::SISDR_SE, cfg.stft, est.size() > 1);
    report_txt << er.to_text();
    std::ofstream report_json(fs::path(out_dir) / "report.json");
    report_json << er.to_json() << "\n";
    std::cout << er.to_text();
  }
  std::cout << "pipeline outputs written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"time-frequency source separation toolkit"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "synthesize a multi-channel scene");
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  bool sim_pcm16 = false;
  sim->add_option("--config", sim_config, "scene spec (JSON)")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--seed", sim_seed, "override the spec seed");
  sim->add_flag("--pcm16", sim_pcm16, "write 16-bit PCM instead of float32");

  // stft
  auto* sft = app.add_subcommand("stft", "analyze a WAV (optionally resynthesize)");
  std::string sft_in, sft_out;
  CommonStft sft_opt;
  sft->add_option("--in", sft_in, "input WAV")->required();
  sft->add_option("--out", sft_out, "round-trip output WAV");
  sft_opt.attach(sft);

  // params
  auto* par = app.add_subcommand("params", "count model parameters");
  std::string par_config;
  double par_macs = 0.0;
  model::ModelConfig par_cfg;
  par->add_option("--config", par_config, "model config (JSON)");
  par->add_option("--D", par_cfg.D, "embedding dim");
  par->add_option("--B", par_cfg.B, "block count");
  par->add_option("--I", par_cfg.I, "unfold kernel");
  par->add_option("--J", par_cfg.J, "unfold stride");
  par->add_option("--H", par_cfg.H, "BLSTM hidden units");
  par->add_option("--L", par_cfg.L, "attention heads");
  par->add_option("--E", par_cfg.E, "attention key channels");
  par->add_option("--C", par_cfg.C, "sources");
  par->add_option("--P", par_cfg.P, "microphones");
  par->add_option("--F", par_cfg.F, "frequency bins");
  par->add_option("--macs-seconds", par_macs, "also print GMAC/s for a segment of this length");

  // infer
  auto* inf = app.add_subcommand("infer", "run the first-stage model on a mixture");
  std::string inf_config, inf_widx, inf_wblob, inf_in, inf_out;
  std::optional<std::uint64_t> inf_synth;
  CommonStft inf_opt;
  inf->add_option("--config", inf_config, "model config (JSON)")->required();
  inf->add_option("--weights-index", inf_widx, "weight manifest index");
  inf->add_option("--weights-blob", inf_wblob, "weight blob");
  inf->add_option("--synth-seed", inf_synth, "generate deterministic synthetic weights");
  inf->add_option("--in", inf_in, "mixture WAV")->required();
  inf->add_option("--out", inf_out, "output directory")->required();
  inf_opt.attach(inf);

  // beamform
  auto* bf = app.add_subcommand("beamform", "apply a linear filter given stage-1 estimates");
  std::string bf_kind = "mfwf", bf_mix, bf_out;
  std::vector<std::string> bf_est;
  int bf_dl = 0, bf_dr = 0, bf_dd = 3, bf_ref = 0;
  double bf_eps = 1e-5, bf_loading = linalg::kDefaultLoading;
  CommonStft bf_opt;
  bf->add_option("--kind", bf_kind, "mfwf | convbf | wpe");
  bf->add_option("--mix", bf_mix, "mixture WAV")->required();
  bf->add_option("--est", bf_est, "stage-1 estimate WAV (repeat per source)")->required();
  bf->add_option("--out", bf_out, "output directory")->required();
  bf->add_option("--dl", bf_dl, "past taps");
  bf->add_option("--dr", bf_dr, "future taps (MFWF only)");
  bf->add_option("--dd", bf_dd, "prediction delay (ConvBF/WPE)");
  bf->add_option("--eps", bf_eps, "power floor");
  bf->add_option("--loading", bf_loading, "diagonal loading");
  bf->add_option("--ref-mic", bf_ref, "reference microphone");
  bf_opt.attach(bf);

  // eval
  auto* ev = app.add_subcommand("eval", "score estimates against references");
  std::vector<std::string> ev_est, ev_ref;
  std::string ev_mix, ev_loss = "sisdr", ev_json;
  bool ev_pit = false;
  CommonStft ev_opt;
  ev->add_option("--est", ev_est, "estimate WAV (repeat per source)")->required();
  ev->add_option("--ref", ev_ref, "reference WAV (repeat per source)")->required();
  ev->add_option("--mix", ev_mix, "mixture WAV (reference channel first)")->required();
  ev->add_option("--loss", ev_loss, "sisdr | sisdr_mc | wavmag | wavmag_mc | wavmag_geq");
  ev->add_flag("--pit", ev_pit, "search the best permutation");
  ev->add_option("--json", ev_json, "also write a JSON report");
  ev_opt.attach(ev);

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "run the two-stage system");
  std::string pl_config, pl_in, pl_scene, pl_out;
  std::optional<std::uint64_t> pl_seed;
  pl->add_option("--config", pl_config, "pipeline config (JSON)")->required();
  pl->add_option("--in", pl_in, "mixture WAV");
  pl->add_option("--scene", pl_scene, "scene spec (JSON); enables oracle stage and scoring");
  pl->add_option("--out", pl_out, "output directory")->required();
  pl->add_option("--seed", pl_seed, "override scene/oracle seeds");

  std::vector<const char*> argv;
  argv.push_back("tfsep");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  set_num_threads(threads);
  try {
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out, sim_seed, sim_pcm16);
    if (sft->parsed()) return cmd_stft(sft_in, sft_out, sft_opt);
    if (par->parsed()) {
      model::ModelConfig cfg = par_cfg;
      if (!par_config.empty()) {
        cfg = config::load_model_config(par_config);
        // Flags given alongside --config override the file.
        if (par->count("--D")) cfg.D = par_cfg.D;
        if (par->count("--B")) cfg.B = par_cfg.B;
        if (par->count("--I")) cfg.I = par_cfg.I;
        if (par->count("--J")) cfg.J = par_cfg.J;
        if (par->count("--H")) cfg.H = par_cfg.H;
        if (par->count("--L")) cfg.L = par_cfg.L;
        if (par->count("--E")) cfg.E = par_cfg.E;
        if (par->count("--C")) cfg.C = par_cfg.C;
        if (par->count("--P")) cfg.P = par_cfg.P;
        if (par->count("--F")) cfg.F = par_cfg.F;
      }
      cfg.validate();
      return cmd_params(cfg, par_macs);
    }
    if (inf->parsed())
      return cmd_infer(inf_config, inf_widx, inf_wblob, inf_synth, inf_in, inf_out, inf_opt);
    if (bf->parsed())
      return cmd_beamform(bf_kind, bf_mix, bf_est, bf_out, bf_dl, bf_dr, bf_dd, bf_eps, bf_loading,
                          bf_ref, bf_opt);
    if (ev->parsed()) return cmd_eval(ev_est, ev_ref, ev_mix, ev_loss, ev_pit, ev_json, ev_opt);
    if (pl->parsed()) return cmd_pipeline(pl_config, pl_in, pl_scene, pl_out, pl_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}

}  // namespace tfsep::cli
