#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qc/data.hpp"
#include "qc/model.hpp"

namespace qc {

// Flat key=value run configuration. Unknown keys are rejected so typos fail
// loudly instead of silently running defaults.
struct RunConfig {
  std::uint64_t seed = 1;

  // dataset
  double extent_x = 8.0, extent_y = 6.0, extent_z = 3.0;
  int objects_min = 2, objects_max = 5;
  std::string symmetry = "none";  // none | mirror
  int rooms_train = 24, rooms_test = 12;
  int raw_points = 4096;  // generator budget per room
  int points = 512;       // per training/eval sample

  // model
  std::vector<int> encoder_widths{32, 64, 128};
  std::vector<int> head_widths{64};
  int num_classes = 5;
  std::vector<std::string> kinds{"conventional"};
  bool canonicalize = false;

  // training
  int epochs = 30;
  int batch = 4;
  double lr = 1e-3;
  std::string optimizer = "adam";  // adam | sgd
  bool aug_scale = true, aug_jitter = true, aug_reflect = false;
  double scale_min = 0.9, scale_max = 1.1;
  double jitter_sigma = 0.01, jitter_clip = 0.05;

  // evaluation / checks
  int trials = 5;
  int grad_trials = 100;

  std::string out_dir = "out";
};

// Parses `key=value` lines ('#' comments and blank lines allowed) on top of
// the defaults above. Unknown keys or malformed values throw
// InvalidInputError.
RunConfig parse_config_text(std::istream& in);
RunConfig load_config(const std::string& path);

// Canonical text form, fixed key order; what gets written next to outputs
// and hashed into the manifest.
std::string resolved_config_text(const RunConfig& config);

std::uint64_t fnv1a_hash(const std::string& text);

SceneSpec scene_spec(const RunConfig& config, std::uint64_t room_seed);
SegModelConfig model_config(const RunConfig& config);
TrainConfig train_config(const RunConfig& config);

// Full command-line entry point; returns the process exit code (0 ok,
// 1 validation/runtime failure, 2 usage error).
int run_cli(int argc, const char* const* argv);

}  // namespace qc
