#include "qc/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "qc/errors.hpp"
#include "qc/eval.hpp"
#include "qc/gadgets.hpp"
#include "qc/neurons.hpp"
#include "qc/rng.hpp"

namespace fs = std::filesystem;

namespace qc {

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kManifestFormat = 1;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

long long to_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw InvalidInputError("config: bad integer for " + key + ": " + value);
  return v;
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw InvalidInputError("config: bad number for " + key + ": " + value);
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw InvalidInputError("config: bad flag for " + key + ": " + value);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string current;
  for (char ch : value) {
    if (ch == ',') {
      items.push_back(trim(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  items.push_back(trim(current));
  return items;
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
  std::vector<int> items;
  for (const std::string& item : split_list(value))
    items.push_back(static_cast<int>(to_int(key, item)));
  return items;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i)
    out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

std::string join_strings(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
  return out;
}

void assign(RunConfig& config, const std::string& key,
            const std::string& value) {
  if (key == "seed")
    config.seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "extent_x")
    config.extent_x = to_double(key, value);
  else if (key == "extent_y")
    config.extent_y = to_double(key, value);
  else if (key == "extent_z")
    config.extent_z = to_double(key, value);
  else if (key == "objects_min")
    config.objects_min = static_cast<int>(to_int(key, value));
  else if (key == "objects_max")
    config.objects_max = static_cast<int>(to_int(key, value));
  else if (key == "symmetry")
    config.symmetry = value;
  else if (key == "rooms_train")
    config.rooms_train = static_cast<int>(to_int(key, value));
  else if (key == "rooms_test")
    config.rooms_test = static_cast<int>(to_int(key, value));
  else if (key == "raw_points")
    config.raw_points = static_cast<int>(to_int(key, value));
  else if (key == "points")
    config.points = static_cast<int>(to_int(key, value));
  else if (key == "encoder_widths")
    config.encoder_widths = to_int_list(key, value);
  else if (key == "head_widths")
    config.head_widths = to_int_list(key, value);
  else if (key == "num_classes")
    config.num_classes = static_cast<int>(to_int(key, value));
  else if (key == "kinds")
    config.kinds = split_list(value);
  else if (key == "canonicalize")
    config.canonicalize = to_bool(key, value);
  else if (key == "epochs")
    config.epochs = static_cast<int>(to_int(key, value));
  else if (key == "batch")
    config.batch = static_cast<int>(to_int(key, value));
  else if (key == "lr")
    config.lr = to_double(key, value);
  else if (key == "optimizer")
    config.optimizer = value;
  else if (key == "aug_scale")
    config.aug_scale = to_bool(key, value);
  else if (key == "aug_jitter")
    config.aug_jitter = to_bool(key, value);
  else if (key == "aug_reflect")
    config.aug_reflect = to_bool(key, value);
  else if (key == "scale_min")
    config.scale_min = to_double(key, value);
  else if (key == "scale_max")
    config.scale_max = to_double(key, value);
  else if (key == "jitter_sigma")
    config.jitter_sigma = to_double(key, value);
  else if (key == "jitter_clip")
    config.jitter_clip = to_double(key, value);
  else if (key == "trials")
    config.trials = static_cast<int>(to_int(key, value));
  else if (key == "grad_trials")
    config.grad_trials = static_cast<int>(to_int(key, value));
  else if (key == "out_dir")
    config.out_dir = value;
  else
    throw InvalidInputError("config: unknown key " + key);
}

}  // namespace

RunConfig parse_config_text(std::istream& in) {
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw InvalidInputError("config: missing '=' at line " +
                              std::to_string(line_no));
    assign(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("config: cannot open " + path);
  return parse_config_text(in);
}

std::string resolved_config_text(const RunConfig& c) {
  std::ostringstream out;
  out << "aug_jitter=" << (c.aug_jitter ? 1 : 0) << '\n';
  out << "aug_reflect=" << (c.aug_reflect ? 1 : 0) << '\n';
  out << "aug_scale=" << (c.aug_scale ? 1 : 0) << '\n';
  out << "batch=" << c.batch << '\n';
  out << "canonicalize=" << (c.canonicalize ? 1 : 0) << '\n';
  out << "encoder_widths=" << join_ints(c.encoder_widths) << '\n';
  out << "epochs=" << c.epochs << '\n';
  out << "extent_x=" << fmt_double(c.extent_x) << '\n';
  out << "extent_y=" << fmt_double(c.extent_y) << '\n';
  out << "extent_z=" << fmt_double(c.extent_z) << '\n';
  out << "grad_trials=" << c.grad_trials << '\n';
  out << "head_widths=" << join_ints(c.head_widths) << '\n';
  out << "jitter_clip=" << fmt_double(c.jitter_clip) << '\n';
  out << "jitter_sigma=" << fmt_double(c.jitter_sigma) << '\n';
  out << "kinds=" << join_strings(c.kinds) << '\n';
  out << "lr=" << fmt_double(c.lr) << '\n';
  out << "num_classes=" << c.num_classes << '\n';
  out << "objects_max=" << c.objects_max << '\n';
  out << "objects_min=" << c.objects_min << '\n';
  out << "optimizer=" << c.optimizer << '\n';
  out << "out_dir=" << c.out_dir << '\n';
  out << "points=" << c.points << '\n';
  out << "raw_points=" << c.raw_points << '\n';
  out << "rooms_test=" << c.rooms_test << '\n';
  out << "rooms_train=" << c.rooms_train << '\n';
  out << "scale_max=" << fmt_double(c.scale_max) << '\n';
  out << "scale_min=" << fmt_double(c.scale_min) << '\n';
  out << "seed=" << c.seed << '\n';
  out << "symmetry=" << c.symmetry << '\n';
  out << "trials=" << c.trials << '\n';
  return out.str();
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

SceneSpec scene_spec(const RunConfig& config, std::uint64_t room_seed) {
  SceneSpec spec;
  spec.seed = room_seed;
  spec.extents = Eigen::Vector3d(config.extent_x, config.extent_y,
                                 config.extent_z);
  spec.min_objects = config.objects_min;
  spec.max_objects = config.objects_max;
  if (config.symmetry == "none")
    spec.symmetry = SymmetryMode::kNone;
  else if (config.symmetry == "mirror")
    spec.symmetry = SymmetryMode::kMirrorPaired;
  else
    throw InvalidInputError("config: unknown symmetry " + config.symmetry);
  spec.point_budget = config.raw_points;
  return spec;
}

SegModelConfig model_config(const RunConfig& config) {
  SegModelConfig mc;
  mc.input_width = 3;
  mc.encoder_widths = config.encoder_widths;
  mc.head_widths = config.head_widths;
  mc.num_classes = config.num_classes;
  for (const std::string& kind : config.kinds)
    mc.kinds.push_back(neuron_kind_from_string(kind));
  mc.canonicalize_input = config.canonicalize;
  mc.seed = mix_seed(config.seed, 7);
  return mc;
}

TrainConfig train_config(const RunConfig& config) {
  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch;
  tc.learning_rate = config.lr;
  if (config.optimizer == "adam")
    tc.optimizer = TrainConfig::Optimizer::kAdam;
  else if (config.optimizer == "sgd")
    tc.optimizer = TrainConfig::Optimizer::kSGD;
  else
    throw InvalidInputError("config: unknown optimizer " + config.optimizer);
  tc.seed = mix_seed(config.seed, 8);
  tc.augment_scale = config.aug_scale;
  tc.augment_jitter = config.aug_jitter;
  tc.augment_reflect = config.aug_reflect;
  tc.augment_params.scale_min = config.scale_min;
  tc.augment_params.scale_max = config.scale_max;
  tc.augment_params.jitter_sigma = config.jitter_sigma;
  tc.augment_params.jitter_clip = config.jitter_clip;
  tc.points_per_sample = config.points;
  return tc;
}

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot open " + path.string());
  out << text;
  if (!out) throw InvalidInputError("write failed for " + path.string());
}

// One manifest per run: tool version, command, config hash, inputs, outputs.
// Nothing time-dependent goes in, so reruns are byte-identical.
void write_run_records(const fs::path& out_dir, const std::string& command,
                       const RunConfig& config,
                       const std::vector<std::string>& inputs,
                       const std::vector<std::string>& outputs) {
  const std::string resolved = resolved_config_text(config);
  write_text_file(out_dir / "config_resolved.txt", resolved);

  std::ostringstream m;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(resolved)));
  m << "tool quadcloud " << kToolVersion << '\n';
  m << "manifest_format " << kManifestFormat << '\n';
  m << "command " << command << '\n';
  m << "config_hash " << hash << '\n';
  for (const std::string& input : inputs) m << "input " << input << '\n';
  m << "output config_resolved.txt\n";
  for (const std::string& output : outputs) m << "output " << output << '\n';
  m << "output manifest.txt\n";
  write_text_file(out_dir / "manifest.txt", m.str());
}

std::vector<std::string> list_csvs(const std::string& dir,
                                   const std::string& prefix) {
  if (!fs::is_directory(dir))
    throw InvalidInputError("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv")
      names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  if (names.empty())
    throw InvalidInputError("no " + prefix + "*.csv files in " + dir);
  return names;
}

std::vector<PointCloud> load_split(const std::string& dir,
                                   const std::string& prefix,
                                   std::vector<std::string>* inputs) {
  std::vector<PointCloud> clouds;
  for (const std::string& name : list_csvs(dir, prefix)) {
    clouds.push_back(load_cloud(dir + "/" + name));
    if (inputs) inputs->push_back(dir + "/" + name);
  }
  return clouds;
}

std::vector<PointCloud> resample(std::vector<PointCloud> clouds, int points) {
  for (PointCloud& cloud : clouds)
    if (cloud.size() != points) cloud = grid_sample(cloud, points);
  return clouds;
}

int cmd_gen(const RunConfig& config) {
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);
  std::vector<std::string> outputs;
  char name[32];
  for (int i = 0; i < config.rooms_train; ++i) {
    const PointCloud cloud =
        generate_room(scene_spec(config, mix_seed(config.seed, 100 + i)));
    std::snprintf(name, sizeof(name), "train_%03d.csv", i);
    save_cloud(cloud, (out_dir / name).string());
    outputs.push_back(name);
  }
  for (int i = 0; i < config.rooms_test; ++i) {
    const PointCloud cloud =
        generate_room(scene_spec(config, mix_seed(config.seed, 200 + i)));
    std::snprintf(name, sizeof(name), "test_%03d.csv", i);
    save_cloud(cloud, (out_dir / name).string());
    outputs.push_back(name);
  }
  write_run_records(out_dir, "gen", config, {}, outputs);
  std::cout << "gen: wrote " << config.rooms_train << " train and "
            << config.rooms_test << " test rooms to " << out_dir.string()
            << '\n';
  return 0;
}

int cmd_train(const RunConfig& config, const std::string& data_dir) {
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);
  std::vector<std::string> inputs;
  const std::vector<PointCloud> clouds =
      load_split(data_dir, "train_", &inputs);

  SegModel model = make_model(model_config(config));
  const std::vector<EpochStats> history =
      train(model, clouds, train_config(config));

  save_model(model, (out_dir / "model.txt").string());
  std::ostringstream h;
  h << "epoch,loss,macc,miou\n";
  for (const EpochStats& e : history)
    h << e.epoch << ',' << fmt_double(e.loss) << ',' << fmt_double(e.macc)
      << ',' << fmt_double(e.miou) << '\n';
  write_text_file(out_dir / "history.csv", h.str());
  write_run_records(out_dir, "train", config, inputs,
                    {"model.txt", "history.csv"});

  const EpochStats& last = history.back();
  std::cout << "train: epochs=" << history.size() << " loss="
            << fmt_double(last.loss) << " macc=" << fmt_double(last.macc)
            << " miou=" << fmt_double(last.miou) << '\n';
  return 0;
}

int cmd_eval(const RunConfig& config, const std::string& checkpoint,
             const std::string& data_dir) {
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);
  std::vector<std::string> inputs{checkpoint};
  const SegModel model = load_model(checkpoint);
  const std::vector<PointCloud> clouds =
      resample(load_split(data_dir, "test_", &inputs), config.points);

  ConfusionMatrix cm = ConfusionMatrix::zero(model.num_classes);
  for (const PointCloud& cloud : clouds)
    cm.add(confusion(predict_labels(model, cloud), cloud.labels,
                     model.num_classes));
  const double a = macc(cm);
  const double i = miou(cm);

  std::ostringstream text;
  text << "macc,miou\n" << fmt_double(a) << ',' << fmt_double(i) << '\n';
  write_text_file(out_dir / "metrics.csv", text.str());
  write_run_records(out_dir, "eval", config, inputs, {"metrics.csv"});
  std::cout << "eval: macc=" << fmt_double(a) << " miou=" << fmt_double(i)
            << '\n';
  return 0;
}

int cmd_reflect_eval(const RunConfig& config, const std::string& checkpoint,
                     const std::string& data_dir) {
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);
  std::vector<std::string> inputs{checkpoint};
  const SegModel model = load_model(checkpoint);
  const std::vector<PointCloud> clouds =
      resample(load_split(data_dir, "test_", &inputs), config.points);

  const std::vector<TransformKind> transforms{
      TransformKind::kFlipX, TransformKind::kFlipY, TransformKind::kFlipZ,
      TransformKind::kFlipXYZ, TransformKind::kPlane};
  const InvarianceReport report = invariance_report(
      model, clouds, transforms, config.trials, mix_seed(config.seed, 9));

  std::ostringstream csv;
  write_report_csv(report, csv);
  write_text_file(out_dir / "report.csv", csv.str());
  write_run_records(out_dir, "reflect-eval", config, inputs, {"report.csv"});

  std::cout << "reflect-eval: macc_base=" << fmt_double(report.macc_base)
            << " miou_base=" << fmt_double(report.miou_base)
            << " excluded_degenerate=" << report.excluded_degenerate << '\n';
  for (const TransformSummary& s : report.summaries)
    std::cout << "  " << to_string(s.transform) << ": dmacc_abs="
              << fmt_double(s.mean_dmacc_abs) << "+-"
              << fmt_double(s.std_dmacc_abs) << " dmiou_abs="
              << fmt_double(s.mean_dmiou_abs) << "+-"
              << fmt_double(s.std_dmiou_abs) << " max_logit_diff="
              << fmt_double(s.max_logit_diff) << '\n';
  return 0;
}

// The fixed monomial basis used by the bench: N=2 points, d=3 coordinates,
// L=4 terms, all exponents even.
std::vector<SymmetricMonomial> bench_basis() {
  auto term = [](std::initializer_list<std::initializer_list<int>> rows,
                 double coeff) {
    SymmetricMonomial m;
    m.exponents.resize(2, 3);
    int i = 0;
    for (const auto& row : rows) {
      int j = 0;
      for (int e : row) m.exponents(i, j++) = e;
      ++i;
    }
    m.coefficient = coeff;
    return m;
  };
  return {
      term({{2, 2, 0}, {0, 0, 0}}, 1.5),
      term({{0, 0, 0}, {0, 0, 2}}, -0.75),
      term({{2, 0, 0}, {0, 2, 0}}, 0.5),
      term({{0, 0, 4}, {0, 0, 0}}, 0.25),
  };
}

double oracle_sum(const std::vector<SymmetricMonomial>& terms,
                  const Eigen::MatrixXd& x) {
  double sum = 0.0;
  for (const SymmetricMonomial& term : terms)
    sum += term.coefficient * eval_monomial(x, term);
  return sum;
}

int cmd_gadget_bench(const RunConfig& config) {
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);
  Rng rng(mix_seed(config.seed, 10));

  std::ostringstream csv;
  csv << "eps_or_delta,backend,units,params,sup_error\n";
  auto row = [&](double eps_or_delta, const std::string& backend,
                 Eigen::Index units, Eigen::Index params, double sup) {
    csv << fmt_double(eps_or_delta) << ',' << backend << ',' << units << ','
        << params << ',' << fmt_double(sup) << '\n';
  };

  {
    const GadgetNetwork net = quadratic_multiplier();
    double sup = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double x = rng.uniform(-10.0, 10.0);
      const double y = rng.uniform(-10.0, 10.0);
      sup = std::max(sup, std::abs(eval_gadget(net, Eigen::Vector2d(x, y)) -
                                   x * y));
    }
    row(0.0, "quadratic-multiplier", unit_count(net), net.param_count, sup);
  }

  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const GadgetNetwork net = relu_multiplier(1.0, eps);
    double sup = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double x = rng.uniform(-1.0, 1.0);
      const double y = rng.uniform(-1.0, 1.0);
      sup = std::max(sup, std::abs(eval_gadget(net, Eigen::Vector2d(x, y)) -
                                   x * y));
    }
    row(eps, "relu-multiplier", unit_count(net), net.param_count, sup);
  }

  const std::vector<SymmetricMonomial> basis = bench_basis();
  auto approx_sup = [&](const SymmetricApproximator& approx) {
    double sup = 0.0;
    for (int i = 0; i < 200; ++i) {
      Eigen::MatrixXd x(2, 3);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
      sup = std::max(sup, std::abs(evaluate(approx, x) -
                                   oracle_sum(basis, x)));
    }
    return sup;
  };
  {
    const SymmetricApproximator approx =
        compile_approximator(basis, Backend::kQuadratic, 1.0, 0.0);
    row(0.0, "approximator-quadratic", unit_count(approx), param_count(approx),
        approx_sup(approx));
  }
  for (double delta : {1e-1, 1e-2, 1e-3}) {
    const SymmetricApproximator approx =
        compile_approximator(basis, Backend::kConventional, 1.0, delta);
    row(delta, "approximator-conventional", unit_count(approx),
        param_count(approx), approx_sup(approx));
  }

  write_text_file(out_dir / "gadgets.csv", csv.str());
  write_run_records(out_dir, "gadget-bench", config, {}, {"gadgets.csv"});
  std::cout << "gadget-bench: wrote " << (out_dir / "gadgets.csv").string()
            << '\n';
  return 0;
}

int cmd_grad_check(const RunConfig& config) {
  const fs::path out_dir = config.out_dir;
  fs::create_directories(out_dir);
  const GradCheckReport q = grad_check_quadratic(
      config.grad_trials, 1e-5, 1e-6, mix_seed(config.seed, 11));
  const GradCheckReport c = grad_check_conventional(
      config.grad_trials, 1e-5, 1e-6, mix_seed(config.seed, 12));

  std::ostringstream text;
  text << "quadratic max_rel_error=" << fmt_double(q.max_rel_error)
       << " trials=" << q.trials << " passed=" << (q.passed ? 1 : 0)
       << " worst=" << q.worst << '\n';
  text << "conventional max_rel_error=" << fmt_double(c.max_rel_error)
       << " trials=" << c.trials << " passed=" << (c.passed ? 1 : 0)
       << " worst=" << c.worst << '\n';
  write_text_file(out_dir / "gradcheck.txt", text.str());
  write_run_records(out_dir, "grad-check", config, {}, {"gradcheck.txt"});
  std::cout << text.str();
  return q.passed && c.passed ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"quadcloud: reflection-invariant point-cloud segmentation "
               "experiments"};
  app.require_subcommand(1);

  std::string config_path, out_flag, data_dir, checkpoint;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--seed", seed_flag, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--out", out_flag, "output directory");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(gen);
  CLI::App* tr = app.add_subcommand("train", "train a segmentation model");
  add_common(tr);
  tr->add_option("--data", data_dir, "dataset directory")->required();
  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev);
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  CLI::App* rev = app.add_subcommand("reflect-eval",
                                     "invariance report under reflections");
  add_common(rev);
  rev->add_option("--data", data_dir, "dataset directory")->required();
  rev->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  CLI::App* gb = app.add_subcommand("gadget-bench",
                                    "multiplication gadget sweeps");
  add_common(gb);
  CLI::App* gc = app.add_subcommand("grad-check",
                                    "finite-difference gradient check");
  add_common(gc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    if (seed_set) config.seed = seed_flag;
    if (!out_flag.empty()) {
      config.out_dir = out_flag;
    } else if (const char* env = std::getenv("QC_OUT_DIR")) {
      config.out_dir = env;
    }

    if (gen->parsed()) return cmd_gen(config);
    if (tr->parsed()) return cmd_train(config, data_dir);
    if (ev->parsed()) return cmd_eval(config, checkpoint, data_dir);
    if (rev->parsed()) return cmd_reflect_eval(config, checkpoint, data_dir);
    if (gb->parsed()) return cmd_gadget_bench(config);
    if (gc->parsed()) return cmd_grad_check(config);
    throw UsageError("no subcommand dispatched");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "training error at epoch " << e.epoch << ": " << e.what()
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace qc
