#pragma once

#include <cstdint>
#include <string>

#include "dikd/losses.hpp"
#include "dikd/networks.hpp"

namespace dikd {

// Run hyperparameters. File format: `key = value` lines with `#` comments;
// unknown keys are rejected.
struct TrainConfig {
  std::string dataset_dir;
  std::string eval_dir;
  std::string teacher_checkpoint;

  int image_size = 32;
  int batch_size = 4;
  int teacher_batch_size = 16;  // pretraining tolerates (and profits from) larger batches
  double lr = 1e-4;
  double teacher_lr = 2.5e-3;  // pretraining converges well before the student lr would
  int iterations = 3000;
  int teacher_iterations = 2000;
  uint64_t seed = 1;
  int levels = 3;
  int base_channels = 16;
  int kernel_size = 3;
  int checkpoint_every = 1000;
  int gen_count = 200;       // gen-data image count

  LossWeights weights;
  bool cross_enabled = true;
  bool self_enabled = true;
  bool filler_enabled = true;

  NetworkConfig network() const {
    NetworkConfig n;
    n.levels = levels;
    n.base_channels = base_channels;
    n.input_size = image_size;
    n.kernel_size = kernel_size;
    n.filler_enabled = filler_enabled;
    return n;
  }

  void validate() const;
};

TrainConfig parse_config(const std::string& path);

}  // namespace dikd
