#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fissura/checkpoint.hpp"
#include "fissura/crack.hpp"
#include "fissura/patches.hpp"
#include "fissura/rng.hpp"
#include "fissura/segmenter.hpp"
#include "fissura/stress.hpp"
#include "fissura/synth.hpp"
#include "fissura/train.hpp"
#include "fissura/volume.hpp"

namespace {

using namespace fissura;

// Fixed default seed for every randomized command, so unseeded runs are
// still reproducible.
constexpr std::uint64_t kDefaultSeed = 1337;

constexpr std::uint64_t kKeyBackground = 7;  // per-kind surrogate seeds
constexpr std::uint64_t kKeyNetInit = 23;    // network weight init

// Serialize the subcommand's effective configuration as `key = value` lines.
// Values are the literal strings CLI11 parsed (or captured defaults), so a
// dump -> reload -> dump cycle is the identity.
void dump_config(const CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cli", "cannot open for writing: " + path);
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames()[0];
    if (name == "help" || name == "config" || name == "dump-config") continue;
    std::string val;
    if (opt->get_expected_min() == 0) {  // flag
      val = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      val = opt->results().back();
    } else {
      val = opt->get_default_str();
      if (val.empty()) continue;
    }
    os << name << " = " << val << "\n";
  }
  require(os.good(), "cli", "write failed: " + path);
}

CLI::App* make_sub(CLI::App& app, const std::string& name, const std::string& desc,
                   std::string& dump) {
  CLI::App* sub = app.add_subcommand(name, desc);
  sub->option_defaults()->always_capture_default(true);
  // Config-file values are injected before the explicit arguments, so with a
  // take-last policy the command line overrides the file.
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sub->add_option("--config")->description("Read options from a key = value file");
  sub->add_option("--dump-config", dump, "Write the effective configuration to a file");
  return sub;
}

// Replace `--config FILE` with the file's `key = value` pairs, injected as
// --key=value tokens right after the subcommand name.
std::vector<std::string> expand_config_args(CLI::App& app, std::vector<std::string> args) {
  std::size_t sub_at = args.size();
  CLI::App* sub = nullptr;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] == '-') continue;
    try {
      sub = app.get_subcommand(args[i]);
    } catch (const CLI::OptionNotFound&) {
    }
    sub_at = i;
    break;
  }
  if (sub == nullptr) return args;

  std::string file;
  for (std::size_t i = sub_at + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      file = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      file = args[i].substr(9);
  }
  if (file.empty()) return args;

  std::ifstream is(file, std::ios::binary);
  if (!is.good()) throw CLI::ConfigError("cannot read config file: " + file);
  std::vector<std::string> inject;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = CLI::detail::trim_copy(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw CLI::ConfigError(file + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = CLI::detail::trim_copy(t.substr(0, eq));
    const std::string value = CLI::detail::trim_copy(t.substr(eq + 1));
    if (key.empty())
      throw CLI::ConfigError(file + ":" + std::to_string(lineno) + ": empty key");
    const CLI::Option* opt = key == "config" || key == "dump-config" || key == "help"
                                 ? nullptr
                                 : sub->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw CLI::ConfigError(file + ": unknown key for '" + sub->get_name() + "': " + key);
    inject.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + long(sub_at) + 1, inject.begin(), inject.end());
  return args;
}

BasePlane parse_plane(const std::string& s) {
  if (s == "xy") return BasePlane::xy;
  if (s == "xz") return BasePlane::xz;
  if (s == "yz") return BasePlane::yz;
  raise("cli", "unknown plane (expected xy, xz or yz): " + s);
}

std::vector<double> parse_scales(const std::string& s) {
  if (s == "base") return base_scales();
  if (s == "finetuned") return finetuned_scales();
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      require(used == tok.size(), "cli", "bad scale value: " + tok);
    } catch (const Error&) {
      throw;
    } catch (...) {
      raise("cli", "bad scale value: " + tok);
    }
  }
  require(!out.empty(), "cli", "empty scale list");
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string upper(std::string s) {
  for (char& c : s) c = char(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// ---- simulate ----------------------------------------------------------

struct SimulateOpts {
  std::string out, dump;
  int size = 256;
  int cracks = 1;
  double width = 3.0;
  bool varying = false;
  double width_min = 1.0, width_max = 5.0;
  bool coplanar = false;
  std::string plane = "xy", plane2 = "xz";
  double tilt = 0.0, tilt2 = 0.0;
  double hurst = 0.5, amplitude = 8.0;
  int fbm_grid = 128;
  std::uint64_t seed = kDefaultSeed;
};

CrackSpec crack_spec_from(const SimulateOpts& o) {
  CrackSpec spec;
  spec.count = o.cracks;
  for (int c = 0; c < 2; ++c) {
    spec.width[c].constant_vox = o.width;
    spec.width[c].varying = o.varying;
    spec.width[c].min_vox = o.width_min;
    spec.width[c].max_vox = o.width_max;
  }
  spec.orient[0] = {parse_plane(o.plane), o.tilt};
  spec.orient[1] = {parse_plane(o.plane2), o.tilt2};
  spec.coplanar = o.coplanar;
  spec.seed = o.seed;
  return spec;
}

void add_crack_options(CLI::App* sub, SimulateOpts& o) {
  sub->add_option("--size", o.size, "Cubic volume edge length in voxels");
  sub->add_option("--cracks", o.cracks, "Number of cracks (1 or 2)");
  sub->add_option("--width", o.width, "Constant crack width in voxels");
  sub->add_flag("--varying", o.varying, "Smoothly varying width instead of constant");
  sub->add_option("--width-min", o.width_min, "Minimum width for --varying");
  sub->add_option("--width-max", o.width_max, "Maximum width for --varying");
  sub->add_flag("--coplanar", o.coplanar, "Place double cracks in the same plane");
  sub->add_option("--plane", o.plane, "Base plane of crack 1 (xy, xz, yz)");
  sub->add_option("--plane2", o.plane2, "Base plane of crack 2");
  sub->add_option("--tilt", o.tilt, "Tilt of crack 1 in radians");
  sub->add_option("--tilt2", o.tilt2, "Tilt of crack 2 in radians");
  sub->add_option("--hurst", o.hurst, "Hurst exponent of the fracture surface");
  sub->add_option("--amplitude", o.amplitude, "Surface roughness amplitude in voxels");
  sub->add_option("--fbm-grid", o.fbm_grid, "Simulation grid resolution of the surface");
  sub->add_option("--seed", o.seed, "Random seed (default 1337)");
}

void run_simulate(const CLI::App& sub, const SimulateOpts& o) {
  dump_config(sub, o.dump);
  const FbmParams fbm{o.fbm_grid, o.hurst, o.amplitude, o.seed};
  const Mask m = compose_scene(crack_spec_from(o), {o.size, o.size, o.size}, fbm);
  save_mask(m, o.out);
  std::printf("crack_voxels = %zu\n", m.count());
}

// ---- synthesize --------------------------------------------------------

struct SynthesizeOpts {
  SimulateOpts sim;  // crack controls reused for --single mode
  std::string out_dir, background_dir, single_kind, dump;
};

Volume background_for(const SynthesizeOpts& o, ConcreteKind kind, int size, std::uint64_t seed) {
  if (!o.background_dir.empty()) {
    Volume bg = load_volume(o.background_dir + "/" + lower(concrete_kind_name(kind)) + ".vvol");
    require(bg.dims.x >= size && bg.dims.y >= size && bg.dims.z >= size, "cli",
            "background smaller than requested size");
    if (bg.dims.x != size || bg.dims.y != size || bg.dims.z != size) {
      BoxRegion r;
      r.hi[0] = r.hi[1] = r.hi[2] = size;
      bg = crop(bg, r);
    }
    return bg;
  }
  return make_surrogate_background(kind, {size, size, size}, seed);
}

void run_synthesize(const CLI::App& sub, const SynthesizeOpts& o) {
  dump_config(sub, o.dump);
  const SimulateOpts& s = o.sim;
  const FbmParams fbm{s.fbm_grid, s.hurst, s.amplitude, s.seed};
  const std::string bg_tag = o.background_dir.empty() ? "surrogate" : "file";
  TrainingSet ts;

  if (!o.single_kind.empty()) {
    const ConcreteKind kind = concrete_kind_from_name(upper(o.single_kind));
    const Volume bg =
        background_for(o, kind, s.size, substream_seed(s.seed, kKeyBackground, std::size_t(kind)));
    const Mask scene = compose_scene(crack_spec_from(s), {s.size, s.size, s.size}, fbm);
    const GrayDistribution dist = estimate_pore_distribution(bg);
    LabeledVolume lv = imprint_crack(bg, scene, dist, substream_seed(s.seed, 12));
    lv.kind = kind;
    char buf[160];
    std::snprintf(buf, sizeof buf, "kind=%s;width=%g;cracks=%d;coplanar=%d;seed=%llu",
                  concrete_kind_name(kind), s.width, s.cracks, s.coplanar ? 1 : 0,
                  static_cast<unsigned long long>(s.seed));
    lv.provenance = buf;
    ts.volumes.push_back(std::move(lv));
  } else {
    Volume bgs[4];
    for (int k = 0; k < 4; ++k)
      bgs[k] = background_for(o, ConcreteKind(k), s.size,
                              substream_seed(s.seed, kKeyBackground, std::uint64_t(k)));
    ts = build_dataset(bgs, fbm, s.seed, s.size);
  }
  for (LabeledVolume& lv : ts.volumes) lv.provenance += ";background=" + bg_tag;
  save_dataset(ts, o.out_dir);
  std::printf("volumes = %zu\n", ts.volumes.size());
}

// ---- patch -------------------------------------------------------------

struct PatchOpts {
  std::string image, truth, out_dir, dump;
  int size = 32, overlap = 14;
  double min_fraction = 0.00005;
  bool filter = false, no_filter = false;
};

PatchSpec patch_spec_from(int size, int overlap, double min_fraction, bool filter,
                          bool no_filter) {
  PatchSpec spec = PatchSpec::for_size(size);
  spec.overlap_vox = overlap;
  spec.min_crack_fraction = min_fraction;
  if (filter) spec.filter_enabled = true;
  if (no_filter) spec.filter_enabled = false;
  return spec;
}

void run_patch(const CLI::App& sub, const PatchOpts& o) {
  dump_config(sub, o.dump);
  LabeledVolume lv;
  lv.gray = load_volume(o.image);
  lv.truth = load_mask(o.truth);
  const PatchSpec spec =
      patch_spec_from(o.size, o.overlap, o.min_fraction, o.filter, o.no_filter);
  const std::vector<PatchSample> all = extract_patches(lv, spec, 0);
  const std::vector<PatchSample> kept = filter_patches(all, spec);
  std::size_t with_crack = 0;
  for (const PatchSample& p : all)
    if (p.crack_count() > 0) ++with_crack;
  std::printf("patch_size = %d\n", o.size);
  std::printf("with_crack = %zu\n", with_crack);
  std::printf("without_crack = %zu\n", all.size() - with_crack);
  std::printf("total = %zu\n", all.size());
  std::printf("kept = %zu\n", kept.size());

  if (!o.out_dir.empty()) {
    std::error_code ignored;
    std::filesystem::create_directories(o.out_dir, ignored);
    char name[64];
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const PatchSample& p = kept[i];
      Volume pv;
      pv.dims = {o.size, o.size, o.size};
      pv.kind = lv.gray.kind;
      pv.voxel_size_um = lv.gray.voxel_size_um;
      pv.data = p.gray;
      Mask pm = Mask::zeros(pv.dims);
      pm.bits = p.truth;
      std::snprintf(name, sizeof name, "/patch%04zu", i);
      save_volume(pv, o.out_dir + name + ".img.vvol");
      save_mask(pm, o.out_dir + name + ".gt.vvol", pv.voxel_size_um);
    }
  }
}

// ---- train / finetune --------------------------------------------------

struct TrainOpts {
  std::string dataset, out, checkpoint, dump;
  int patch_size = 32, overlap = 14;
  double min_fraction = 0.00005;
  bool filter = false, no_filter = false;
  int filters = 16, levels = 3;
  int epochs = 20, batch = 2;
  double lr = 1e-3;
  int halve_every = 5;
  std::uint64_t seed = kDefaultSeed;
};

std::vector<PatchSample> dataset_patches(const std::string& dir, const PatchSpec& spec) {
  const TrainingSet ts = load_dataset(dir);
  std::vector<PatchSample> patches;
  for (std::size_t i = 0; i < ts.volumes.size(); ++i) {
    std::vector<PatchSample> ps = extract_patches(ts.volumes[i], spec, int(i));
    ps = filter_patches(ps, spec);
    patches.insert(patches.end(), std::make_move_iterator(ps.begin()),
                   std::make_move_iterator(ps.end()));
  }
  return patches;
}

void add_train_options(CLI::App* sub, TrainOpts& o, int default_epochs) {
  o.epochs = default_epochs;
  sub->add_option("--dataset", o.dataset, "Dataset directory (manifest.txt)")->required();
  sub->add_option("--out", o.out, "Output checkpoint path")->required();
  sub->add_option("--patch-size", o.patch_size, "Training patch edge length");
  sub->add_option("--overlap", o.overlap, "Patch overlap in voxels");
  sub->add_option("--min-fraction", o.min_fraction, "Crack-voxel fraction for the patch filter");
  sub->add_flag("--filter", o.filter, "Force the low-crack patch filter on");
  sub->add_flag("--no-filter", o.no_filter, "Force the low-crack patch filter off");
  sub->add_option("--epochs", o.epochs, "Training epochs");
  sub->add_option("--batch", o.batch, "Batch size");
  sub->add_option("--lr", o.lr, "Initial learning rate");
  sub->add_option("--halve-every", o.halve_every, "Halve the learning rate every N epochs");
  sub->add_option("--seed", o.seed, "Random seed (default 1337)");
}

void run_training(const CLI::App& sub, const TrainOpts& o, bool finetune) {
  dump_config(sub, o.dump);
  const PatchSpec spec =
      patch_spec_from(o.patch_size, o.overlap, o.min_fraction, o.filter, o.no_filter);
  const std::vector<PatchSample> patches = dataset_patches(o.dataset, spec);
  std::printf("patches = %zu\n", patches.size());

  Unet3Df net;
  TrainState prev;
  if (finetune) {
    LoadedCheckpoint lc = load_checkpoint(o.checkpoint);
    net = std::move(lc.net);
    prev = std::move(lc.state);
  } else {
    net.build({o.filters, o.levels}, substream_seed(o.seed, kKeyNetInit));
  }
  std::printf("params = %zu\n", net.count_params());

  Adam<float> opt;  // finetune restarts both Adam and the schedule
  opt.init(net.theta.size());
  TrainConfig tc;
  tc.batch_size = o.batch;
  tc.epochs = o.epochs;
  tc.schedule = {o.lr, o.halve_every};
  tc.seed = o.seed;
  const std::vector<float> hist =
      train_unet(net, opt, patches, tc, [](int epoch, float loss, double lr) {
        std::printf("epoch %d loss %.6f lr %g\n", epoch, loss, lr);
        std::fflush(stdout);
      });

  TrainState st;
  st.epoch = prev.epoch + o.epochs;
  st.has_adam = true;
  st.opt = std::move(opt);
  st.history = prev.history;
  st.history.insert(st.history.end(), hist.begin(), hist.end());
  save_checkpoint(o.out, net, st);
  std::printf("saved %s\n", o.out.c_str());
}

// ---- predict / postprocess / eval / slice / stress ----------------------

struct PredictOpts {
  std::string checkpoint, image, out, prob_out, scales = "base", dump;
  int patch = 64, overlap = 14;
  double threshold = 0.5;
  int crop = 0, connectivity = 26;
};

void run_predict(const CLI::App& sub, const PredictOpts& o) {
  dump_config(sub, o.dump);
  LoadedCheckpoint lc = load_checkpoint(o.checkpoint);
  const Volume v = load_volume(o.image);
  PatchSpec tile;
  tile.patch_size = o.patch;
  tile.overlap_vox = o.overlap;
  tile.filter_enabled = false;
  const Volume prob = multiscale_predict(lc.net, v, parse_scales(o.scales), tile);
  if (!o.prob_out.empty()) save_volume(prob, o.prob_out);
  const PostprocessConfig pc{o.threshold, o.connectivity, o.crop};
  const Mask m = postprocess(binarize(prob, pc), pc);
  save_mask(m, o.out, v.voxel_size_um);
  std::printf("crack_voxels = %zu\n", m.count());
}

struct PostprocessOpts {
  std::string in, out, dump;
  int crop = 0, connectivity = 26;
};

void run_postprocess(const CLI::App& sub, const PostprocessOpts& o) {
  dump_config(sub, o.dump);
  const Mask m = load_mask(o.in);
  const PostprocessConfig pc{0.5, o.connectivity, o.crop};
  save_mask(postprocess(m, pc), o.out);
}

struct EvalOpts {
  std::string pred, truth, out, dump;
};

void run_eval(const CLI::App& sub, const EvalOpts& o) {
  dump_config(sub, o.dump);
  const MetricsReport r = evaluate(load_mask(o.pred), load_mask(o.truth));
  std::printf("tp = %llu\nfp = %llu\nfn = %llu\ntn = %llu\n",
              (unsigned long long)r.tp, (unsigned long long)r.fp, (unsigned long long)r.fn,
              (unsigned long long)r.tn);
  std::printf("precision = %.17g\nrecall = %.17g\ndice = %.17g\n", r.precision, r.recall,
              r.dice);
  if (!o.out.empty()) save_metrics(o.out, r);
}

struct SliceOpts {
  std::string in, out, axis = "z", dump;
  int index = -1;  // negative selects the middle slice
};

void run_slice(const CLI::App& sub, const SliceOpts& o) {
  dump_config(sub, o.dump);
  const Volume v = load_volume(o.in);
  Axis ax;
  if (o.axis == "x")
    ax = Axis::x;
  else if (o.axis == "y")
    ax = Axis::y;
  else if (o.axis == "z")
    ax = Axis::z;
  else
    raise("cli", "unknown axis (expected x, y or z): " + o.axis);
  const int dim = o.axis == "x" ? v.dims.x : o.axis == "y" ? v.dims.y : v.dims.z;
  export_slice(v, ax, o.index < 0 ? dim / 2 : o.index, o.out);
}

struct StressOpts {
  std::string dump;
  double force = 0.0, span = 0.0, width = 0.0, height = 0.0;
};

void run_stress(const CLI::App& sub, const StressOpts& o) {
  dump_config(sub, o.dump);
  std::printf("stress = %.17g\n", flexural_stress({o.force, o.span, o.width, o.height}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fissura: semi-synthetic crack CT generation, U-Net training and segmentation"};
  app.require_subcommand(1);

  auto sim = std::make_shared<SimulateOpts>();
  {
    CLI::App* sub = make_sub(app, "simulate", "Generate a crack scene mask", sim->dump);
    sub->add_option("--out", sim->out, "Output mask (VVOL1 u8)")->required();
    add_crack_options(sub, *sim);
    sub->callback([sub, sim] { run_simulate(*sub, *sim); });
  }

  auto synth = std::make_shared<SynthesizeOpts>();
  {
    CLI::App* sub = make_sub(app, "synthesize",
                             "Build the 24-volume training dataset or a single labeled pair",
                             synth->dump);
    sub->add_option("--out-dir", synth->out_dir, "Output dataset directory")->required();
    sub->add_option("--background-dir", synth->background_dir,
                    "Directory with nc/hpc/ppfrc/sfrc.vvol backgrounds (default: surrogates)");
    sub->add_option("--single", synth->single_kind,
                    "Produce one labeled pair of this concrete kind (NC, HPC, PPFRC, SFRC)");
    add_crack_options(sub, synth->sim);
    sub->callback([sub, synth] { run_synthesize(*sub, *synth); });
  }

  auto patch = std::make_shared<PatchOpts>();
  {
    CLI::App* sub = make_sub(app, "patch", "Extract and filter training patches", patch->dump);
    sub->add_option("--image", patch->image, "Gray volume (VVOL1)")->required();
    sub->add_option("--truth", patch->truth, "Ground-truth mask (VVOL1 u8)")->required();
    sub->add_option("--size", patch->size, "Patch edge length");
    sub->add_option("--overlap", patch->overlap, "Patch overlap in voxels");
    sub->add_option("--min-fraction", patch->min_fraction,
                    "Crack-voxel fraction for the patch filter");
    sub->add_flag("--filter", patch->filter, "Force the low-crack patch filter on");
    sub->add_flag("--no-filter", patch->no_filter, "Force the low-crack patch filter off");
    sub->add_option("--out-dir", patch->out_dir, "Write kept patches as img/gt pairs here");
    sub->callback([sub, patch] { run_patch(*sub, *patch); });
  }

  auto tr = std::make_shared<TrainOpts>();
  {
    CLI::App* sub = make_sub(app, "train", "Train the segmentation network", tr->dump);
    add_train_options(sub, *tr, 20);
    sub->add_option("--filters", tr->filters, "Base filter count of the network");
    sub->add_option("--levels", tr->levels, "Encoder/decoder depth");
    sub->callback([sub, tr] { run_training(*sub, *tr, false); });
  }

  auto ft = std::make_shared<TrainOpts>();
  {
    CLI::App* sub = make_sub(app, "finetune",
                             "Continue training from a checkpoint with a fresh optimizer",
                             ft->dump);
    sub->add_option("--checkpoint", ft->checkpoint, "Input checkpoint")->required();
    add_train_options(sub, *ft, 10);
    sub->callback([sub, ft] { run_training(*sub, *ft, true); });
  }

  auto pr = std::make_shared<PredictOpts>();
  {
    CLI::App* sub = make_sub(app, "predict",
                             "Multi-scale inference: gray volume in, crack mask out", pr->dump);
    sub->add_option("--checkpoint", pr->checkpoint, "Trained checkpoint")->required();
    sub->add_option("--image", pr->image, "Input gray volume (VVOL1)")->required();
    sub->add_option("--out", pr->out, "Output mask (VVOL1 u8)")->required();
    sub->add_option("--prob-out", pr->prob_out, "Also save the merged probability volume (f32)");
    sub->add_option("--scales", pr->scales,
                    "Scale set: base, finetuned, or comma-separated values");
    sub->add_option("--patch", pr->patch, "Inference tile edge length");
    sub->add_option("--overlap", pr->overlap, "Inference tile overlap");
    sub->add_option("--threshold", pr->threshold, "Binarization threshold");
    sub->add_option("--crop", pr->crop, "Zero this many boundary voxels before the "
                                        "largest-component step");
    sub->add_option("--connectivity", pr->connectivity, "Component connectivity (6 or 26)");
    sub->callback([sub, pr] { run_predict(*sub, *pr); });
  }

  auto pp = std::make_shared<PostprocessOpts>();
  {
    CLI::App* sub = make_sub(app, "postprocess",
                             "Boundary crop + largest connected component on a mask", pp->dump);
    sub->add_option("--in", pp->in, "Input mask")->required();
    sub->add_option("--out", pp->out, "Output mask")->required();
    sub->add_option("--crop", pp->crop, "Zero this many boundary voxels first");
    sub->add_option("--connectivity", pp->connectivity, "Component connectivity (6 or 26)");
    sub->callback([sub, pp] { run_postprocess(*sub, *pp); });
  }

  auto ev = std::make_shared<EvalOpts>();
  {
    CLI::App* sub = make_sub(app, "eval", "Compare a predicted mask against ground truth",
                             ev->dump);
    sub->add_option("--pred", ev->pred, "Predicted mask")->required();
    sub->add_option("--truth", ev->truth, "Ground-truth mask")->required();
    sub->add_option("--out", ev->out, "Also write the metrics report to this file");
    sub->callback([sub, ev] { run_eval(*sub, *ev); });
  }

  auto sl = std::make_shared<SliceOpts>();
  {
    CLI::App* sub = make_sub(app, "slice", "Export one slice of a volume as binary PGM",
                             sl->dump);
    sub->add_option("--in", sl->in, "Input volume (VVOL1)")->required();
    sub->add_option("--out", sl->out, "Output PGM path")->required();
    sub->add_option("--axis", sl->axis, "Slice axis (x, y or z)");
    sub->add_option("--index", sl->index, "Slice index (negative = middle)");
    sub->callback([sub, sl] { run_slice(*sub, *sl); });
  }

  auto st = std::make_shared<StressOpts>();
  {
    CLI::App* sub = make_sub(app, "stress",
                             "Flexural stress of a three-point bending test", st->dump);
    sub->add_option("--force", st->force, "Cylinder force F")->required();
    sub->add_option("--span", st->span, "Support distance l")->required();
    sub->add_option("--width", st->width, "Beam width b")->required();
    sub->add_option("--height", st->height, "Beam height h")->required();
    sub->callback([sub, st] { run_stress(*sub, *st); });
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config_args(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const fissura::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
