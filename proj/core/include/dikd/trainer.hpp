#pragma once

#include <string>
#include <vector>

#include "dikd/adam.hpp"
#include "dikd/config.hpp"
#include "dikd/data.hpp"
#include "dikd/image.hpp"
#include "dikd/losses.hpp"
#include "dikd/mask.hpp"
#include "dikd/metrics.hpp"
#include "dikd/networks.hpp"

namespace dikd {

// Masked image (fill 0) with the mask appended as a 4th input channel.
TensorT<float> student_input(const Image& img, const Mask& m);

// Teacher pretraining on whole-image L1 reconstruction.
class TeacherTrainer {
 public:
  TeacherTrainer(const TrainConfig& cfg, const std::vector<Image>& data);

  // One Adam step over a sampled batch; returns the batch L1 loss.
  double step();
  void run_all();  // cfg.teacher_iterations steps

  const Params<float>& params() const { return params_; }
  const TeacherAE<float>& net() const { return net_; }
  int64_t iteration() const { return iter_; }
  double whole_image_l1() const;  // mean over the dataset, inference mode

 private:
  TrainConfig cfg_;
  const std::vector<Image>& data_;
  TeacherAE<float> net_;
  Params<float> params_;
  Adam<float> opt_;
  Rng rng_;
  int64_t iter_ = 0;
};

// Student training: sample batch + masks, forward through the filler
// encoder, cross/self distillation plus reconstruction, Adam.
class StudentTrainer {
 public:
  StudentTrainer(const TrainConfig& cfg, const Params<float>& teacher_params,
                 const std::vector<Image>& data);

  LossReport step();
  int64_t iteration() const { return iter_; }

  const StudentNet<float>& net() const { return student_; }
  const Params<float>& params() const { return params_; }

  // Full training state (parameters, Adam moments, RNG cursor), so a
  // resumed run reproduces the original loss sequence exactly.
  void save_state(const std::string& path) const;
  void load_state(const std::string& path);

 private:
  TrainConfig cfg_;
  const std::vector<Image>& data_;
  TeacherAE<float> teacher_;
  Params<float> teacher_params_;
  StudentNet<float> student_;
  Params<float> params_;
  Adam<float> opt_;
  Rng rng_;
  int64_t iter_ = 0;
};

struct BucketStats {
  double lo = 0, hi = 0;
  double mean_psnr = 0, mean_ssim = 0, mean_hole_psnr = 0;
  int count = 0;
};

struct EvalReport {
  std::vector<BucketStats> buckets;
  std::string csv() const;
};

// Composite result: prediction inside holes, input pixels elsewhere.
Image inpaint_image(const StudentNet<float>& net, const Image& img,
                    const Mask& m);

// Seeded per-image masks in each bucket; PSNR/SSIM on composites against GT.
EvalReport evaluate(const StudentNet<float>& net,
                    const std::vector<Image>& eval_set,
                    const std::vector<std::pair<double, double>>& buckets,
                    uint64_t seed);

// Convenience builders used by the CLI and tests.
StudentNet<float> build_student(const TrainConfig& cfg,
                                const std::string& checkpoint_path);

}  // namespace dikd
