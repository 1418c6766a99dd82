#include "dikd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "dikd/checkpoint.hpp"

namespace dikd {

namespace {

TensorT<float> all_ones_mask(int h, int w) {
  return TensorT<float>::filled({1, h, w}, 1.0f);
}

// Training masks cover the full 0-60% protocol range; each sample draws a
// 10%-wide bucket uniformly from [0, 0.5].
Mask sample_training_mask(Rng& rng, int h, int w) {
  const double lo = rng.uniform(0.0, 0.5);
  return generate_irregular_mask(rng.next_u64(), h, w, lo, lo + 0.1);
}

void encode_u64(Params<float>& out, const std::string& name, uint64_t v) {
  std::vector<float> data(2);
  std::memcpy(data.data(), &v, sizeof(v));
  out.emplace_back(name, TensorT<float>::from({2}, std::move(data)));
}

uint64_t decode_u64(const Params<float>& in, const std::string& name) {
  for (const auto& [n, t] : in)
    if (n == name) {
      uint64_t v;
      std::memcpy(&v, t.data().data(), sizeof(v));
      return v;
    }
  throw std::runtime_error("state checkpoint missing field '" + name + "'");
}

}  // namespace

TensorT<float> student_input(const Image& img, const Mask& m) {
  if (img.h != m.h || img.w != m.w)
    throw ShapeError("student_input: image and mask sizes differ");
  const size_t hw = size_t(img.h) * img.w;
  std::vector<float> in(4 * hw);
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < hw; ++i)
      in[size_t(c) * hw + i] = m.grid[i] ? 0.0f : img.pix[size_t(c) * hw + i];
  for (size_t i = 0; i < hw; ++i) in[3 * hw + i] = float(m.grid[i]);
  return TensorT<float>::from({4, img.h, img.w}, std::move(in));
}

// ---------------------------------------------------------------------------
// Teacher pretraining

TeacherTrainer::TeacherTrainer(const TrainConfig& cfg,
                               const std::vector<Image>& data)
    : cfg_(cfg), data_(data), net_(TeacherAE<float>::make(cfg.network(), cfg.seed)),
      rng_(cfg.seed ^ 0x7465616368ull) {
  cfg_.validate();
  if (data_.empty()) throw std::runtime_error("TeacherTrainer: empty dataset");
  net_.collect(params_);
}

double TeacherTrainer::step() {
  Adam<float>::zero_grad(params_);
  const TensorT<float> ones = all_ones_mask(cfg_.image_size, cfg_.image_size);
  TensorT<float> total = TensorT<float>::scalar(0.0f);
  for (int b = 0; b < cfg_.teacher_batch_size; ++b) {
    const Image& img = data_[size_t(rng_.uniform_int(int(data_.size())))];
    TensorT<float> gt = img.to_tensor();
    auto [feats, recon] = net_.forward(gt, /*frozen=*/false);
    total = add(total, masked_l1_mean(sub(recon, gt), ones));
  }
  total = scalar_mul(total, 1.0f / float(cfg_.teacher_batch_size));
  const double loss = double(total.item());
  total.backward();
  // Short linear warmup, then cosine decay to 5% of the base rate: L1 +
  // Adam bounces at a floor proportional to the step size, so a fixed rate
  // leaves reconstruction error on the table, and the warmup keeps a higher
  // peak rate stable on the fresh network.
  const int warm = std::max(1, cfg_.teacher_iterations / 20);
  double lr;
  if (iter_ < warm) {
    lr = cfg_.teacher_lr * double(iter_ + 1) / double(warm);
  } else {
    const double p = std::min(
        1.0, double(iter_ - warm) / double(cfg_.teacher_iterations - warm));
    const double lr_end = cfg_.teacher_lr * 0.05;
    lr = lr_end + 0.5 * (cfg_.teacher_lr - lr_end) *
                      (1.0 + std::cos(3.141592653589793 * p));
  }
  opt_.step(params_, float(lr));
  ++iter_;
  return loss;
}

void TeacherTrainer::run_all() {
  for (int i = 0; i < cfg_.teacher_iterations; ++i) step();
}

double TeacherTrainer::whole_image_l1() const {
  NoGradGuard guard;
  double acc = 0.0;
  for (const Image& img : data_) {
    TensorT<float> gt = img.to_tensor();
    auto [feats, recon] = net_.forward(gt, /*frozen=*/true);
    double l1 = 0.0;
    for (size_t i = 0; i < gt.data().size(); ++i)
      l1 += std::abs(double(recon.data()[i]) - double(gt.data()[i]));
    acc += l1 / double(gt.data().size());
  }
  return acc / double(data_.size());
}

// ---------------------------------------------------------------------------
// Student training

StudentTrainer::StudentTrainer(const TrainConfig& cfg,
                               const Params<float>& teacher_params,
                               const std::vector<Image>& data)
    : cfg_(cfg), data_(data),
      teacher_(TeacherAE<float>::make(cfg.network(), cfg.seed)),
      student_(StudentNet<float>::make(cfg.network(), cfg.seed)),
      rng_(cfg.seed ^ 0x73747564ull) {
  cfg_.validate();
  if (data_.empty()) throw std::runtime_error("StudentTrainer: empty dataset");
  teacher_.collect(teacher_params_);
  // Rejects a teacher whose channel configuration does not match, before
  // any training step runs.
  apply_checkpoint(teacher_params_, teacher_params);
  set_requires_grad(teacher_params_, false);
  student_.collect(params_);
}

LossReport StudentTrainer::step() {
  const int L = cfg_.levels;
  const bool use_cross = cfg_.cross_enabled && cfg_.weights.cross > 0;
  const bool use_self = cfg_.self_enabled && cfg_.weights.self > 0;

  Adam<float>::zero_grad(params_);
  LossParts<float> parts;
  parts.rec_hole = TensorT<float>::scalar(0.0f);
  parts.rec_valid = TensorT<float>::scalar(0.0f);
  if (use_cross)
    parts.cross.assign(size_t(L), TensorT<float>::scalar(0.0f));
  if (use_self)
    parts.self.assign(size_t(L - 1), TensorT<float>::scalar(0.0f));

  for (int b = 0; b < cfg_.batch_size; ++b) {
    const Image& img = data_[size_t(rng_.uniform_int(int(data_.size())))];
    const Mask m = sample_training_mask(rng_, cfg_.image_size, cfg_.image_size);
    const MaskPyramid pyr = build_mask_pyramid(m, L);
    std::vector<TensorT<float>> level_masks;
    for (const Mask& lm : pyr.levels) level_masks.push_back(lm.to_tensor<float>());

    TensorT<float> gt = img.to_tensor();
    std::vector<TensorT<float>> teacher_feats;
    if (use_cross) {
      auto [tf, teacher_recon] = teacher_.forward(gt, /*frozen=*/true);
      teacher_feats = std::move(tf);
    }

    std::vector<TensorT<float>> feats = student_.encode(student_input(img, m),
                                                        level_masks);
    TensorT<float> pred = student_.decode(feats.back());

    auto [hole, valid] = reconstruction_loss(pred, gt, m.to_tensor<float>());
    parts.rec_hole = add(parts.rec_hole, hole);
    parts.rec_valid = add(parts.rec_valid, valid);

    // Each level's distillation term is a squared-norm *sum* over that
    // level's hole pixels, so raw magnitudes scale with hole area and
    // resolution. Normalizing by the hole-pixel count when composing the
    // objective keeps the per-level pressure uniform; the loss terms
    // themselves (and their reported values) are unchanged in form.
    auto hole_count = [](const TensorT<float>& m) {
      float c = 0.0f;
      for (float v : m.data()) c += v;
      return std::max(1.0f, c);
    };
    if (use_cross)
      for (int l = 0; l < L; ++l) {
        const TensorT<float> rho = student_.rho[size_t(l)](teacher_feats[size_t(l)]);
        parts.cross[size_t(l)] =
            add(parts.cross[size_t(l)],
                scalar_mul(cross_distill_loss(feats[size_t(l)],
                                              teacher_feats[size_t(l)],
                                              level_masks[size_t(l)], rho),
                           1.0f / hole_count(level_masks[size_t(l)])));
      }
    if (use_self)
      for (int l = 0; l < L - 1; ++l) {
        const TensorT<float> deeper = feats[size_t(l) + 1].detach();
        const TensorT<float> phi = student_.phi[size_t(l)](deeper);
        parts.self[size_t(l)] =
            add(parts.self[size_t(l)],
                scalar_mul(self_distill_loss(feats[size_t(l)], deeper,
                                             level_masks[size_t(l) + 1], phi,
                                             student_.align_conv[size_t(l)]),
                           1.0f / hole_count(level_masks[size_t(l) + 1])));
      }
  }

  const float inv_b = 1.0f / float(cfg_.batch_size);
  parts.rec_hole = scalar_mul(parts.rec_hole, inv_b);
  parts.rec_valid = scalar_mul(parts.rec_valid, inv_b);
  for (auto& t : parts.cross) t = scalar_mul(t, inv_b);
  for (auto& t : parts.self) t = scalar_mul(t, inv_b);

  auto [total, report] = total_loss(parts, cfg_.weights);
  // Disabled terms still occupy their CSV columns as zeros.
  if (!use_cross) report.cross.assign(size_t(L), 0.0);
  if (!use_self) report.self.assign(size_t(L - 1), 0.0);
  total.backward();
  opt_.step(params_, float(cfg_.lr));
  ++iter_;
  return report;
}

void StudentTrainer::save_state(const std::string& path) const {
  Params<float> state = params_;
  for (const auto& [name, p] : params_) {
    const auto it = opt_.state().find(name);
    std::vector<float> m(p.data().size(), 0.0f), v(p.data().size(), 0.0f);
    if (it != opt_.state().end()) {
      m = it->second.first;
      v = it->second.second;
    }
    state.emplace_back("opt.m." + name,
                       TensorT<float>::from(p.shape(), std::move(m)));
    state.emplace_back("opt.v." + name,
                       TensorT<float>::from(p.shape(), std::move(v)));
  }
  encode_u64(state, "train.step", uint64_t(opt_.step_count()));
  encode_u64(state, "train.iter", uint64_t(iter_));
  encode_u64(state, "train.rng", rng_.state());
  save_checkpoint(path, state);
}

void StudentTrainer::load_state(const std::string& path) {
  const Params<float> state = load_checkpoint(path);
  apply_checkpoint(params_, state);
  for (const auto& [name, t] : state) {
    if (name.rfind("opt.m.", 0) == 0)
      opt_.state()[name.substr(6)].first = t.data();
    else if (name.rfind("opt.v.", 0) == 0)
      opt_.state()[name.substr(6)].second = t.data();
  }
  opt_.set_step_count(int64_t(decode_u64(state, "train.step")));
  iter_ = int64_t(decode_u64(state, "train.iter"));
  rng_.set_state(decode_u64(state, "train.rng"));
}

// ---------------------------------------------------------------------------
// Evaluation / inference

Image inpaint_image(const StudentNet<float>& net, const Image& img,
                    const Mask& m) {
  NoGradGuard guard;
  const int L = net.cfg.levels;
  const MaskPyramid pyr = build_mask_pyramid(m, L);
  std::vector<TensorT<float>> level_masks;
  for (const Mask& lm : pyr.levels) level_masks.push_back(lm.to_tensor<float>());
  std::vector<TensorT<float>> feats = net.encode(student_input(img, m),
                                                 level_masks);
  TensorT<float> pred = net.decode(feats.back());

  Image out = img;
  const size_t hw = size_t(img.h) * img.w;
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < hw; ++i)
      if (m.grid[i])
        out.pix[size_t(c) * hw + i] =
            std::clamp(pred.data()[size_t(c) * hw + i], 0.0f, 1.0f);
  return out;
}

EvalReport evaluate(const StudentNet<float>& net,
                    const std::vector<Image>& eval_set,
                    const std::vector<std::pair<double, double>>& buckets,
                    uint64_t seed) {
  if (eval_set.empty()) throw std::runtime_error("evaluate: empty eval set");
  EvalReport rep;
  for (size_t bi = 0; bi < buckets.size(); ++bi) {
    BucketStats st;
    st.lo = buckets[bi].first;
    st.hi = buckets[bi].second;
    for (size_t i = 0; i < eval_set.size(); ++i) {
      const Image& gt = eval_set[i];
      const uint64_t mseed =
          seed * 0x9e3779b97f4a7c15ull + i * 0x100000001ull + bi;
      const Mask m = generate_irregular_mask(mseed, gt.h, gt.w, st.lo, st.hi);
      const Image comp = inpaint_image(net, gt, m);
      st.mean_psnr += psnr(comp, gt);
      st.mean_ssim += ssim(comp, gt);
      st.mean_hole_psnr += hole_psnr(comp, gt, m);
      ++st.count;
    }
    st.mean_psnr /= st.count;
    st.mean_ssim /= st.count;
    st.mean_hole_psnr /= st.count;
    rep.buckets.push_back(st);
  }
  return rep;
}

std::string EvalReport::csv() const {
  std::ostringstream os;
  os << "bucket_lo,bucket_hi,count,psnr,ssim,hole_psnr\n";
  for (const auto& b : buckets)
    os << b.lo << "," << b.hi << "," << b.count << "," << b.mean_psnr << ","
       << b.mean_ssim << "," << b.mean_hole_psnr << "\n";
  return os.str();
}

StudentNet<float> build_student(const TrainConfig& cfg,
                                const std::string& checkpoint_path) {
  StudentNet<float> net = StudentNet<float>::make(cfg.network(), cfg.seed);
  Params<float> params;
  net.collect(params);
  apply_checkpoint(params, load_checkpoint(checkpoint_path));
  return net;
}

}  // namespace dikd
