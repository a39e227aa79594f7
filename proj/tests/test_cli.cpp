#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qc/cli.hpp"

using namespace qc;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::stringstream stream(text);
  return parse_config_text(stream);
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"quadcloud"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("qc_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const {
    return (sub.empty() ? path : path / sub).string();
  }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config text parses on top of defaults") {
    const RunConfig defaults = parse("");
    CHECK(defaults.seed == 1);
    CHECK(defaults.points == 512);
    CHECK(defaults.kinds == std::vector<std::string>{"conventional"});

    const RunConfig cfg = parse(
        "# comment\n"
        "seed = 9\n"
        "\n"
        "kinds = quadratic-strict, conventional\n"
        "encoder_widths = 8,16\n"
        "canonicalize = true\n"
        "lr = 0.01\n"
        "symmetry = mirror\n");
    CHECK(cfg.seed == 9);
    CHECK(cfg.kinds ==
          std::vector<std::string>{"quadratic-strict", "conventional"});
    CHECK(cfg.encoder_widths == std::vector<int>{8, 16});
    CHECK(cfg.canonicalize);
    CHECK(cfg.lr == 0.01);
    CHECK(cfg.points == 512);  // untouched keys keep defaults
  }

  TEST_CASE("bad config lines fail loudly") {
    CHECK_THROWS_AS(parse("not_a_key = 3\n"), InvalidInputError);
    CHECK_THROWS_AS(parse("seed\n"), InvalidInputError);
    CHECK_THROWS_AS(parse("seed = banana\n"), InvalidInputError);
    CHECK_THROWS_AS(parse("epochs = 1.5\n"), InvalidInputError);
    CHECK_THROWS_AS(parse("canonicalize = maybe\n"), InvalidInputError);
    CHECK_THROWS_AS(parse("encoder_widths = \n"), InvalidInputError);
  }

  TEST_CASE("resolved text round trips") {
    RunConfig cfg;
    cfg.seed = 17;
    cfg.kinds = {"quadratic-strict", "conventional", "conventional",
                 "conventional", "conventional"};
    cfg.canonicalize = true;
    cfg.lr = 2.5e-4;
    cfg.extent_z = 2.75;
    cfg.out_dir = "elsewhere";
    const std::string text = resolved_config_text(cfg);
    const RunConfig back = parse(text);
    CHECK(resolved_config_text(back) == text);
    CHECK(back.seed == 17);
    CHECK(back.lr == 2.5e-4);
    CHECK(back.out_dir == "elsewhere");

    // fixed key order means equal configs hash equal
    CHECK(fnv1a_hash(text) == fnv1a_hash(resolved_config_text(back)));
  }

  TEST_CASE("fnv1a reference vectors") {
    CHECK(fnv1a_hash("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a_hash("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a_hash("foobar") == 0x85944171f73967e8ULL);
  }

  TEST_CASE("derived configs follow the run config") {
    RunConfig cfg;
    cfg.kinds = {"quadratic-strict"};
    cfg.canonicalize = true;
    cfg.optimizer = "sgd";
    cfg.aug_reflect = true;
    const SegModelConfig mc = model_config(cfg);
    CHECK(mc.kinds == std::vector<NeuronKind>{NeuronKind::kQuadraticStrict});
    CHECK(mc.canonicalize_input);
    const TrainConfig tc = train_config(cfg);
    CHECK(tc.optimizer == TrainConfig::Optimizer::kSGD);
    CHECK(tc.augment_reflect);
    const SceneSpec spec = scene_spec(cfg, 42);
    CHECK(spec.seed == 42);
    CHECK(spec.symmetry == SymmetryMode::kNone);

    cfg.symmetry = "sideways";
    CHECK_THROWS_AS(scene_spec(cfg, 1), InvalidInputError);
    cfg.symmetry = "mirror";
    CHECK(scene_spec(cfg, 1).symmetry == SymmetryMode::kMirrorPaired);
    cfg.optimizer = "momentum";
    CHECK_THROWS_AS(train_config(cfg), InvalidInputError);
    cfg.optimizer = "adam";
    cfg.kinds = {"cubic"};
    CHECK_THROWS_AS(model_config(cfg), InvalidInputError);
  }

  TEST_CASE("pipeline runs end to end and repeats byte for byte") {
    TempDir dir("pipeline");
    std::ofstream config(dir.path / "run.cfg");
    config << "seed = 3\n"
           << "rooms_train = 2\n"
           << "rooms_test = 2\n"
           << "raw_points = 600\n"
           << "points = 64\n"
           << "encoder_widths = 8,12\n"
           << "head_widths = 8\n"
           << "kinds = quadratic-strict, conventional, conventional, conventional\n"
           << "epochs = 2\n"
           << "batch = 2\n"
           << "trials = 2\n";
    config.close();
    const std::string cfg_arg = "--config=" + dir.str("run.cfg");

    CHECK(run({"gen", cfg_arg, "--out", dir.str("data")}) == 0);
    CHECK(fs::exists(dir.path / "data" / "train_000.csv"));
    CHECK(fs::exists(dir.path / "data" / "train_001.csv"));
    CHECK(fs::exists(dir.path / "data" / "test_001.csv"));
    CHECK(fs::exists(dir.path / "data" / "manifest.txt"));
    CHECK(fs::exists(dir.path / "data" / "config_resolved.txt"));
    CHECK(!fs::exists(dir.path / "data" / "train_002.csv"));

    CHECK(run({"train", cfg_arg, "--data", dir.str("data"),
               "--out", dir.str("model")}) == 0);
    CHECK(fs::exists(dir.path / "model" / "model.txt"));
    const std::string history = slurp(dir.path / "model" / "history.csv");
    CHECK(history.rfind("epoch,loss,macc,miou\n", 0) == 0);

    CHECK(run({"eval", cfg_arg, "--data", dir.str("data"),
               "--checkpoint", dir.str("model") + "/model.txt",
               "--out", dir.str("eval")}) == 0);
    const std::string metrics = slurp(dir.path / "eval" / "metrics.csv");
    CHECK(metrics.rfind("macc,miou\n", 0) == 0);

    CHECK(run({"reflect-eval", cfg_arg, "--data", dir.str("data"),
               "--checkpoint", dir.str("model") + "/model.txt",
               "--out", dir.str("reflect")}) == 0);
    const std::string report = slurp(dir.path / "reflect" / "report.csv");
    CHECK(report.rfind("transform,trial,", 0) == 0);

    // the whole pipeline again, elsewhere: every artifact byte-identical
    CHECK(run({"gen", cfg_arg, "--out", dir.str("data2")}) == 0);
    CHECK(slurp(dir.path / "data2" / "train_000.csv") ==
          slurp(dir.path / "data" / "train_000.csv"));
    CHECK(slurp(dir.path / "data2" / "test_001.csv") ==
          slurp(dir.path / "data" / "test_001.csv"));

    CHECK(run({"train", cfg_arg, "--data", dir.str("data2"),
               "--out", dir.str("model2")}) == 0);
    CHECK(slurp(dir.path / "model2" / "model.txt") ==
          slurp(dir.path / "model" / "model.txt"));
    CHECK(slurp(dir.path / "model2" / "history.csv") == history);

    CHECK(run({"reflect-eval", cfg_arg, "--data", dir.str("data2"),
               "--checkpoint", dir.str("model2") + "/model.txt",
               "--out", dir.str("reflect2")}) == 0);
    CHECK(slurp(dir.path / "reflect2" / "report.csv") == report);
  }

  TEST_CASE("usage errors exit with 2, bad input with 1") {
    TempDir dir("errors");
    CHECK(run({"train"}) == 2);           // --data is required
    CHECK(run({"no-such-command"}) == 2);
    CHECK(run({}) == 2);

    std::ofstream bad(dir.path / "bad.cfg");
    bad << "volume = 11\n";
    bad.close();
    CHECK(run({"gen", "--config", dir.str("bad.cfg"),
               "--out", dir.str("x")}) == 1);
    CHECK(run({"eval", "--data", dir.str("missing"),
               "--checkpoint", dir.str("nope.txt"),
               "--out", dir.str("y")}) == 1);
  }

  TEST_CASE("environment fallback fills in the output directory") {
    TempDir dir("envout");
    std::ofstream config(dir.path / "run.cfg");
    config << "rooms_train = 1\nrooms_test = 1\nraw_points = 400\n";
    config.close();

    setenv("QC_OUT_DIR", dir.str("from_env").c_str(), 1);
    CHECK(run({"gen", "--config", dir.str("run.cfg")}) == 0);
    unsetenv("QC_OUT_DIR");
    CHECK(fs::exists(dir.path / "from_env" / "train_000.csv"));

    // an explicit flag wins over the environment
    setenv("QC_OUT_DIR", dir.str("ignored").c_str(), 1);
    CHECK(run({"gen", "--config", dir.str("run.cfg"),
               "--out", dir.str("flagged")}) == 0);
    unsetenv("QC_OUT_DIR");
    CHECK(fs::exists(dir.path / "flagged" / "train_000.csv"));
    CHECK(!fs::exists(dir.path / "ignored"));
  }

  TEST_CASE("grad-check and gadget-bench succeed") {
    TempDir dir("checks");
    CHECK(run({"grad-check", "--seed", "5", "--out", dir.str("gc")}) == 0);
    const std::string text = slurp(dir.path / "gc" / "gradcheck.txt");
    CHECK(text.find("pass") != std::string::npos);

    std::ofstream config(dir.path / "bench.cfg");
    config << "trials = 1\n";  // keep the sweep small
    config.close();
    CHECK(run({"gadget-bench", "--config", dir.str("bench.cfg"),
               "--out", dir.str("gb")}) == 0);
    const std::string csv = slurp(dir.path / "gb" / "gadgets.csv");
    CHECK(csv.rfind("eps_or_delta,backend,units,params,sup_error\n", 0) == 0);
    CHECK(csv.find("quadratic-multiplier") != std::string::npos);
    CHECK(csv.find("relu-multiplier") != std::string::npos);
    CHECK(csv.find("approximator-quadratic") != std::string::npos);
    CHECK(csv.find("approximator-conventional") != std::string::npos);
  }
}
