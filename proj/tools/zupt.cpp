// zupt: command-line front end for the zero-velocity-aided INS toolkit.
//
// Log verbosity is read from ZUPT_LOG (error, warn, info, debug; default warn).

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "zupt/augment.hpp"
#include "zupt/csv.hpp"
#include "zupt/detectors.hpp"
#include "zupt/error.hpp"
#include "zupt/eskf.hpp"
#include "zupt/eval.hpp"
#include "zupt/lstm.hpp"
#include "zupt/synth.hpp"
#include "zupt/threshold.hpp"

namespace
{

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level()
{
  static const Level level = [] {
      const char * env = std::getenv("ZUPT_LOG");
      const std::string v = env ? env : "";
      if (v == "error") {return Level::error;}
      if (v == "info") {return Level::info;}
      if (v == "debug") {return Level::debug;}
      return Level::warn;
    }();
  return level;
}

void log(Level lvl, const std::string & msg)
{
  static const char * names[] = {"error", "warn", "info", "debug"};
  if (lvl <= log_level()) {std::cerr << "zupt: " << names[static_cast<int>(lvl)] << ": " << msg << '\n';}
}

/// Writes to `path`, or standard output when it is empty or "-".
template<typename F>
void emit(const std::string & path, F && write)
{
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  auto out = zupt::csv::open_out(path);
  write(out);
  if (!out) {throw zupt::Error("failed writing '" + path + "'");}
}

std::vector<double> parse_grid(const std::string & spec)
{
  // "lo:hi:count" (log-spaced) or a comma list
  if (const auto c1 = spec.find(':'); c1 != std::string::npos) {
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) {throw zupt::ContractError("grid must be 'lo:hi:count' or a comma list");}
    const double lo = zupt::csv::parse_double(spec.substr(0, c1), 0);
    const double hi = zupt::csv::parse_double(spec.substr(c1 + 1, c2 - c1 - 1), 0);
    const double n = zupt::csv::parse_double(spec.substr(c2 + 1), 0);
    if (!(n >= 1.0)) {throw zupt::ContractError("grid count must be at least 1");}
    return zupt::detect::log_grid(lo, hi, static_cast<std::size_t>(n));
  }
  std::vector<double> grid;
  for (auto field : zupt::csv::split(spec)) {grid.push_back(zupt::csv::parse_double(field, 0));}
  if (grid.empty()) {throw zupt::ContractError("empty threshold grid");}
  return grid;
}

zupt::eskf::EskfConfig config_from(const std::string & path)
{
  if (path.empty()) {return {};}
  return zupt::eskf::load_config(path);
}

zupt::detect::DetectorParams params_from(std::size_t window)
{
  zupt::detect::DetectorParams p;
  p.window_w = window;
  return p;
}

// --- subcommands ------------------------------------------------------------

struct SynthArgs
{
  std::string motion{"walk"};
  std::string profile;
  std::optional<double> duration;
  std::optional<std::string> path;
  std::optional<std::string> sampling;
  std::optional<double> accel_noise;
  std::optional<double> gyro_noise;
  std::uint64_t seed{1};
  std::string out;
  std::string gt_out;
  std::string markers_out;
  double marker_every{0.0};
};

int cmd_synth(const SynthArgs & a)
{
  using namespace zupt::synth;
  GaitProfile prof = a.profile.empty() ? GaitProfile::preset(parse_motion(a.motion)) : load_profile(a.profile);
  if (a.duration) {prof.duration_s = *a.duration;}
  if (a.path) {prof.path = *a.path == "circuit" ? PathKind::circuit : PathKind::straight;}
  if (a.sampling) {prof.sampling = *a.sampling == "point" ? Sampling::point : Sampling::strapdown_exact;}
  if (a.accel_noise) {prof.accel_noise_std = *a.accel_noise;}
  if (a.gyro_noise) {prof.gyro_noise_std = *a.gyro_noise;}
  const auto res = generate(prof, a.seed);
  log(Level::info, "generated " + std::to_string(res.imu.size()) + " samples of " + to_string(prof.motion_kind));
  emit(a.out, [&](std::ostream & os) {zupt::write_imu_csv(os, res.imu, res.gt.labels);});
  if (!a.gt_out.empty()) {
    emit(a.gt_out, [&](std::ostream & os) {zupt::write_ground_truth_csv(os, res.gt);});
  }
  if (!a.markers_out.empty()) {
    if (!(a.marker_every > 0.0)) {throw zupt::ContractError("--marker-every must be positive");}
    std::vector<zupt::Marker> markers;
    const double step = a.marker_every;
    for (std::size_t k = 0; k < res.gt.size(); ++k) {
      const double t = res.gt.times[k];
      const double next = (static_cast<double>(markers.size()) + 1.0) * step;
      if (t >= next && (*res.gt.labels)[k]) {markers.push_back({t, res.gt.positions[k]});}
    }
    emit(a.markers_out, [&](std::ostream & os) {zupt::write_markers_csv(os, markers);});
  }
  return 0;
}

struct DetectArgs
{
  std::string imu;
  std::string detector{"shoe"};
  double gamma{8.5e7};
  std::size_t window{5};
  std::string out;
};

int cmd_detect(const DetectArgs & a)
{
  const auto log_in = zupt::load_imu_csv(a.imu);
  const auto id = zupt::detect::parse_detector(a.detector);
  const auto d = zupt::detect::run_detector(id, log_in.seq, params_from(a.window), a.gamma);
  std::size_t stationary = 0;
  for (auto f : d.flag) {stationary += f;}
  log(Level::info, std::to_string(stationary) + " of " + std::to_string(d.size()) + " samples stationary");
  emit(a.out, [&](std::ostream & os) {zupt::detect::write_decision_csv(os, zupt::detect::sample_times(log_in.seq), d);});
  return 0;
}

struct NavigateArgs
{
  std::string imu;
  std::string detector;
  std::optional<double> gamma;
  std::string model;
  bool labels{false};
  std::size_t window{5};
  std::string config;
  std::string out;
  std::string summary;
};

int cmd_navigate(const NavigateArgs & a)
{
  const int sources = static_cast<int>(!a.detector.empty()) + static_cast<int>(!a.model.empty()) +
    static_cast<int>(a.labels);
  if (sources != 1) {
    throw CLI::ValidationError("navigate", "choose exactly one of --detector, --model, --labels");
  }
  const auto cfg = config_from(a.config);
  // load the model before touching the IMU log so a bad path fails fast
  std::optional<zupt::lstm::LstmModel> model;
  if (!a.model.empty()) {model = zupt::lstm::load_model(a.model);}
  const auto log_in = zupt::load_imu_csv(a.imu);
  const auto & seq = log_in.seq;

  zupt::Flags zv;
  std::string source;
  if (a.labels) {
    if (!log_in.labels) {throw zupt::ValidationError("--labels given but '" + a.imu + "' has no zv column");}
    zv = *log_in.labels;
    source = "labels";
  } else if (model) {
    const auto probs = zupt::lstm::forward_sequence(*model, seq);
    zv = zupt::lstm::gate_confidence(probs, model->confidence_threshold).flag;
    source = "lstm";
  } else {
    if (!a.gamma) {throw CLI::ValidationError("navigate", "--detector needs --gamma");}
    const auto id = zupt::detect::parse_detector(a.detector);
    zv = zupt::detect::run_detector(id, seq, params_from(a.window), *a.gamma).flag;
    source = a.detector;
  }

  const auto init = zupt::eskf::init_from_rest(seq, cfg);
  const auto traj = zupt::eskf::run_ins(seq, zv, cfg, init);
  std::size_t updates = 0;
  for (auto f : zv) {updates += f;}
  const auto & last = traj.states.back();

  std::ostringstream sum;
  sum << "source = " << source << '\n';
  sum << "samples = " << traj.size() << '\n';
  sum << "zupt_updates = " << updates << '\n';
  sum << "duration_s = " << zupt::csv::format_double(seq.duration()) << '\n';
  sum << "final_px = " << zupt::csv::format_double(last.p.x()) << '\n';
  sum << "final_py = " << zupt::csv::format_double(last.p.y()) << '\n';
  sum << "final_pz = " << zupt::csv::format_double(last.p.z()) << '\n';
  log(Level::info, "navigated " + std::to_string(traj.size()) + " samples, " + std::to_string(updates) + " updates");
  emit(a.out, [&](std::ostream & os) {zupt::eskf::write_trajectory_csv(os, traj);});
  if (!a.summary.empty()) {
    emit(a.summary, [&](std::ostream & os) {os << sum.str();});
  } else {
    log(Level::info, sum.str());
  }
  return 0;
}

struct OptimizeArgs
{
  std::string imu;
  std::string gt;
  std::string detector{"shoe"};
  std::string grid{"1e4:1e9:26"};
  std::size_t window{5};
  std::string config;
  std::string align{"yaw"};
  int dims{2};
  std::string out;
};

int cmd_optimize(const OptimizeArgs & a)
{
  const auto log_in = zupt::load_imu_csv(a.imu);
  const auto gt = zupt::load_ground_truth_csv(a.gt);
  zupt::detect::ScoringOptions opt;
  opt.params = params_from(a.window);
  opt.align = zupt::eval::parse_align(a.align);
  opt.dims = a.dims;
  const auto res = zupt::detect::optimize_threshold(
    log_in.seq, gt, zupt::detect::parse_detector(a.detector), parse_grid(a.grid), config_from(a.config), opt);
  emit(
    a.out, [&](std::ostream & os) {
      os << "gamma,armse\n";
      for (const auto & s : res.scores) {
        zupt::csv::write_double(os, s.gamma);
        os << ',';
        if (std::isinf(s.armse)) {os << "inf";} else {zupt::csv::write_double(os, s.armse);}
        os << '\n';
      }
    });
  std::cerr << "best_gamma = " << zupt::csv::format_double(res.best_gamma) << '\n';
  std::cerr << "best_armse = " << zupt::csv::format_double(res.best_armse) << '\n';
  return 0;
}

struct EvalArgs
{
  std::string traj;
  std::string gt;
  std::string markers;
  std::string align{"yaw"};
  int dims{2};
  bool csv_row{false};
  std::string out;
};

int cmd_eval(const EvalArgs & a)
{
  auto tin = zupt::csv::open_in(a.traj);
  const auto traj = zupt::eskf::read_trajectory_csv(tin);
  const auto gt = zupt::load_ground_truth_csv(a.gt);
  auto rep = zupt::eval::armse(traj, gt, a.dims, zupt::eval::parse_align(a.align));
  if (!a.markers.empty()) {
    const auto markers = zupt::load_markers_csv(a.markers);
    const auto res = zupt::eval::marker_errors(traj, markers);
    for (auto i : res.skipped) {log(Level::warn, "marker " + std::to_string(i) + " outside trajectory span, skipped");}
    rep.per_marker = res.errors;
  }
  emit(
    a.out, [&](std::ostream & os) {
      if (a.csv_row) {
        os << zupt::eval::kReportCsvHeader << '\n';
        zupt::eval::write_report_row(os, rep);
      } else {
        zupt::eval::write_report(os, rep);
      }
    });
  return 0;
}

struct InferArgs
{
  std::string imu;
  std::string model;
  std::optional<double> threshold;
  std::string out;
  std::string decisions;
};

int cmd_infer(const InferArgs & a)
{
  const auto model = zupt::lstm::load_model(a.model);
  const auto log_in = zupt::load_imu_csv(a.imu);
  const auto probs = zupt::lstm::forward_sequence(model, log_in.seq);
  const auto times = zupt::detect::sample_times(log_in.seq);
  emit(a.out, [&](std::ostream & os) {zupt::lstm::write_probability_csv(os, times, probs);});
  if (!a.decisions.empty()) {
    const auto d = zupt::lstm::gate_confidence(probs, a.threshold.value_or(model.confidence_threshold));
    emit(a.decisions, [&](std::ostream & os) {zupt::detect::write_decision_csv(os, times, d);});
  }
  return 0;
}

struct SweepArgs
{
  std::vector<std::string> imu;
  std::vector<std::string> gt;
  std::string detector{"shoe"};
  std::string grid{"1e4:1e9:26"};
  std::size_t window{5};
  std::string config;
  std::string align{"yaw"};
  int dims{2};
  std::string out;
};

int cmd_sweep(const SweepArgs & a)
{
  if (a.imu.size() != a.gt.size()) {
    throw CLI::ValidationError("sweep", "--imu and --gt must be given the same number of times");
  }
  std::vector<zupt::detect::Trial> trials;
  for (std::size_t i = 0; i < a.imu.size(); ++i) {
    auto log_in = zupt::load_imu_csv(a.imu[i]);
    std::string name = a.imu[i];
    if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {name.erase(0, slash + 1);}
    if (const auto dot = name.rfind('.'); dot != std::string::npos && dot > 0) {name.erase(dot);}
    trials.push_back({name, std::move(log_in.seq), zupt::load_ground_truth_csv(a.gt[i])});
  }
  zupt::detect::ScoringOptions opt;
  opt.params = params_from(a.window);
  opt.align = zupt::eval::parse_align(a.align);
  opt.dims = a.dims;
  const auto table = zupt::detect::sweep(
    trials, zupt::detect::parse_detector(a.detector), parse_grid(a.grid), config_from(a.config), opt);
  emit(a.out, [&](std::ostream & os) {zupt::detect::write_sweep_csv(os, table);});
  const auto pooled = table.pooled_best();
  std::cerr << "pooled_gamma = " << zupt::csv::format_double(table.grid[pooled]) << '\n';
  std::cerr << "pooled_armse = " << zupt::csv::format_double(table.aggregate(pooled)) << '\n';
  std::cerr << "mean_of_optima = " << zupt::csv::format_double(table.mean_of_optima()) << '\n';
  return 0;
}

struct WindowsArgs
{
  std::string imu;
  std::size_t len{100};
  std::size_t count{1000};
  std::uint64_t seed{1};
  bool augment{false};
  std::string out;
};

int cmd_windows(const WindowsArgs & a)
{
  const auto log_in = zupt::load_imu_csv(a.imu);
  if (!log_in.labels) {throw zupt::ValidationError("'" + a.imu + "' has no zv column to label windows");}
  auto windows = zupt::augment::extract_windows(log_in.seq, *log_in.labels, a.len, a.count, a.seed);
  if (a.augment) {
    zupt::augment::AugmentConfig cfg;
    for (std::size_t n = 0; n < windows.size(); ++n) {
      cfg.rng_seed = zupt::augment::derive_seed(a.seed, n);
      windows[n].data = zupt::augment::augment_window(windows[n].data, cfg);
    }
  }
  emit(a.out, [&](std::ostream & os) {zupt::augment::write_windows_csv(os, windows);});
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Zero-velocity-aided inertial navigation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "zupt 0.1.0");

  const std::vector<std::string> detectors{"shoe", "ared", "amvd", "mbgtd"};
  const std::vector<std::string> aligns{"none", "trans", "yaw", "rigid"};

  SynthArgs sa;
  auto * synth = app.add_subcommand("synth", "Generate a synthetic foot-mounted IMU trial");
  synth->add_option("--motion", sa.motion, "Preset gait")
  ->check(CLI::IsMember({"walk", "run", "shuffle", "stair", "crawl"}));
  synth->add_option("--profile", sa.profile, "Gait profile file (key = value)")->check(CLI::ExistingFile);
  synth->add_option("--duration", sa.duration, "Trial length [s]");
  synth->add_option("--path", sa.path, "Walking path")->check(CLI::IsMember({"straight", "circuit"}));
  synth->add_option("--sampling", sa.sampling, "IMU sampling model")->check(CLI::IsMember({"strapdown_exact", "point"}));
  synth->add_option("--accel-noise", sa.accel_noise, "Accelerometer white noise std [m/s^2]");
  synth->add_option("--gyro-noise", sa.gyro_noise, "Gyro white noise std [rad/s]");
  synth->add_option("--seed", sa.seed, "Noise seed");
  synth->add_option("--out", sa.out, "IMU CSV output (with zv column)")->required();
  synth->add_option("--gt", sa.gt_out, "Ground-truth CSV output");
  synth->add_option("--markers", sa.markers_out, "Marker CSV output");
  synth->add_option("--marker-every", sa.marker_every, "Seconds between markers")->default_val(5.0);

  DetectArgs da;
  auto * detect = app.add_subcommand("detect", "Run a classical zero-velocity detector");
  detect->add_option("--imu", da.imu, "IMU CSV")->required();
  detect->add_option("--detector", da.detector)->check(CLI::IsMember(detectors));
  detect->add_option("--gamma", da.gamma, "Detector threshold")->required();
  detect->add_option("--window", da.window, "Window length W");
  detect->add_option("--out", da.out, "Decision CSV output (default stdout)");

  NavigateArgs na;
  auto * navigate = app.add_subcommand("navigate", "Run the ZUPT-aided INS");
  navigate->add_option("--imu", na.imu, "IMU CSV")->required();
  navigate->add_option("--detector", na.detector, "Classical detector")->check(CLI::IsMember(detectors));
  navigate->add_option("--gamma", na.gamma, "Detector threshold");
  navigate->add_option("--model", na.model, "LSTM weight file");
  navigate->add_flag("--labels", na.labels, "Use the zv column of the IMU CSV");
  navigate->add_option("--window", na.window, "Window length W");
  navigate->add_option("--config", na.config, "Filter config file")->check(CLI::ExistingFile);
  navigate->add_option("--out", na.out, "Trajectory CSV output (default stdout)");
  navigate->add_option("--summary", na.summary, "Run summary output");

  OptimizeArgs oa;
  auto * optimize = app.add_subcommand("optimize-threshold", "Grid-search the detector threshold against ground truth");
  optimize->add_option("--imu", oa.imu, "IMU CSV")->required();
  optimize->add_option("--gt", oa.gt, "Ground-truth CSV")->required();
  optimize->add_option("--detector", oa.detector)->check(CLI::IsMember(detectors));
  optimize->add_option("--grid", oa.grid, "lo:hi:count (log-spaced) or comma list");
  optimize->add_option("--window", oa.window, "Window length W");
  optimize->add_option("--config", oa.config, "Filter config file")->check(CLI::ExistingFile);
  optimize->add_option("--align", oa.align)->check(CLI::IsMember(aligns));
  optimize->add_option("--dims", oa.dims)->check(CLI::IsMember({2, 3}));
  optimize->add_option("--out", oa.out, "Score CSV output (default stdout)");

  EvalArgs ea;
  auto * evaluate = app.add_subcommand("eval", "Score a trajectory against ground truth");
  evaluate->add_option("--traj", ea.traj, "Trajectory CSV")->required();
  evaluate->add_option("--gt", ea.gt, "Ground-truth CSV")->required();
  evaluate->add_option("--markers", ea.markers, "Marker CSV");
  evaluate->add_option("--align", ea.align)->check(CLI::IsMember(aligns));
  evaluate->add_option("--dims", ea.dims)->check(CLI::IsMember({2, 3}));
  evaluate->add_flag("--csv", ea.csv_row, "Emit a CSV row instead of key = value");
  evaluate->add_option("--out", ea.out, "Report output (default stdout)");

  InferArgs ia;
  auto * infer = app.add_subcommand("infer", "Run the LSTM detector");
  infer->add_option("--imu", ia.imu, "IMU CSV")->required();
  infer->add_option("--model", ia.model, "LSTM weight file")->required();
  infer->add_option("--threshold", ia.threshold, "Confidence gate (default from the model)");
  infer->add_option("--out", ia.out, "Probability CSV output (default stdout)");
  infer->add_option("--decisions", ia.decisions, "Gated decision CSV output");

  SweepArgs wa;
  auto * sweep = app.add_subcommand("sweep", "Error-vs-threshold table over several trials");
  sweep->add_option("--imu", wa.imu, "IMU CSV (repeat per trial)")->required();
  sweep->add_option("--gt", wa.gt, "Ground-truth CSV (repeat per trial)")->required();
  sweep->add_option("--detector", wa.detector)->check(CLI::IsMember(detectors));
  sweep->add_option("--grid", wa.grid, "lo:hi:count (log-spaced) or comma list");
  sweep->add_option("--window", wa.window, "Window length W");
  sweep->add_option("--config", wa.config, "Filter config file")->check(CLI::ExistingFile);
  sweep->add_option("--align", wa.align)->check(CLI::IsMember(aligns));
  sweep->add_option("--dims", wa.dims)->check(CLI::IsMember({2, 3}));
  sweep->add_option("--out", wa.out, "Table CSV output (default stdout)");

  WindowsArgs xa;
  auto * windows = app.add_subcommand("windows", "Dump labeled training windows");
  windows->add_option("--imu", xa.imu, "IMU CSV with zv column")->required();
  windows->add_option("--len", xa.len, "Window length");
  windows->add_option("--count", xa.count, "Windows to draw");
  windows->add_option("--seed", xa.seed, "Sampling seed");
  windows->add_flag("--augment", xa.augment, "Apply rotation, scaling and jitter");
  windows->add_option("--out", xa.out, "Window CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*synth) {return cmd_synth(sa);}
    if (*detect) {return cmd_detect(da);}
    if (*navigate) {return cmd_navigate(na);}
    if (*optimize) {return cmd_optimize(oa);}
    if (*evaluate) {return cmd_eval(ea);}
    if (*infer) {return cmd_infer(ia);}
    if (*sweep) {return cmd_sweep(wa);}
    if (*windows) {return cmd_windows(xa);}
  } catch (const CLI::ValidationError & e) {
    log(Level::error, e.what());
    return 1;
  } catch (const zupt::DivergenceError & e) {
    log(Level::error, e.what());
    return 3;
  } catch (const zupt::NumericalError & e) {
    log(Level::error, e.what());
    return 3;
  } catch (const zupt::Error & e) {
    log(Level::error, e.what());
    return 2;
  }
  return 1;
}
