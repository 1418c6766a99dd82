#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dikd/checkpoint.hpp"
#include "dikd/config.hpp"
#include "dikd/data.hpp"
#include "dikd/gradcheck_suite.hpp"
#include "dikd/trainer.hpp"

namespace {

dikd::TrainConfig load_cfg(const std::string& config_path, uint64_t seed,
                           bool seed_set) {
  dikd::TrainConfig cfg;
  if (!config_path.empty()) cfg = dikd::parse_config(config_path);
  if (seed_set) cfg.seed = seed;
  cfg.validate();
  return cfg;
}

int cmd_gen_data(const dikd::TrainConfig& cfg, const std::string& out) {
  dikd::gen_data(cfg.seed, cfg.gen_count, cfg.image_size, cfg.image_size, out);
  std::cout << "wrote " << cfg.gen_count << " images (" << cfg.image_size
            << "x" << cfg.image_size << ") to " << out << "\n";
  return 0;
}

int cmd_pretrain_teacher(const dikd::TrainConfig& cfg, const std::string& out) {
  const auto data = dikd::load_dataset(cfg.dataset_dir);
  dikd::TeacherTrainer trainer(cfg, data);
  for (int i = 0; i < cfg.teacher_iterations; ++i) {
    const double loss = trainer.step();
    if ((i + 1) % 100 == 0)
      std::cout << "teacher iter " << (i + 1) << " l1 " << loss << "\n";
  }
  dikd::save_checkpoint(out, trainer.params());
  std::cout << "teacher whole-image L1: " << trainer.whole_image_l1() << "\n";
  std::cout << "saved teacher checkpoint to " << out << "\n";
  return 0;
}

int cmd_train(const dikd::TrainConfig& cfg, const std::string& teacher_path,
              const std::string& out, const std::string& log_path,
              const std::string& state_out, const std::string& resume) {
  const auto data = dikd::load_dataset(cfg.dataset_dir);
  const auto teacher = dikd::load_checkpoint(
      teacher_path.empty() ? cfg.teacher_checkpoint : teacher_path);
  dikd::StudentTrainer trainer(cfg, teacher, data);
  if (!resume.empty()) trainer.load_state(resume);

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw std::runtime_error("cannot open loss log: " + log_path);
    log << dikd::LossReport::csv_header(cfg.levels) << "\n";
  }
  while (trainer.iteration() < cfg.iterations) {
    const dikd::LossReport rep = trainer.step();
    if (log) log << rep.csv_row(trainer.iteration()) << "\n";
    if (trainer.iteration() % cfg.checkpoint_every == 0 ||
        trainer.iteration() == cfg.iterations) {
      dikd::save_checkpoint(out, trainer.params());
      if (!state_out.empty()) trainer.save_state(state_out);
    }
    if (trainer.iteration() % 100 == 0)
      std::cout << "iter " << trainer.iteration() << " total " << rep.total
                << "\n";
  }
  dikd::save_checkpoint(out, trainer.params());
  if (!state_out.empty()) trainer.save_state(state_out);
  std::cout << "saved student checkpoint to " << out << "\n";
  return 0;
}

int cmd_eval(const dikd::TrainConfig& cfg, const std::string& model,
             const std::string& out) {
  const auto eval_set = dikd::load_dataset(cfg.eval_dir);
  const auto net = dikd::build_student(cfg, model);
  const dikd::EvalReport rep = dikd::evaluate(
      net, eval_set, {{0.10, 0.20}, {0.30, 0.40}}, cfg.seed);
  const std::string csv = rep.csv();
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write report: " + out);
    f << csv;
    std::cout << "wrote eval report to " << out << "\n" << csv;
  }
  return 0;
}

int cmd_inpaint(const dikd::TrainConfig& cfg, const std::string& model,
                const std::string& image_path, const std::string& mask_path,
                const std::string& out) {
  const dikd::Image img = dikd::read_ppm(image_path);
  const dikd::Mask m = dikd::read_pgm_mask(mask_path);
  if (img.h != m.h || img.w != m.w)
    throw std::runtime_error("image and mask sizes differ");
  dikd::TrainConfig c = cfg;
  c.image_size = img.h;
  const auto net = dikd::build_student(c, model);
  dikd::write_ppm(out, dikd::inpaint_image(net, img, m));
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_gradcheck(uint64_t seed, const std::string& out) {
  const auto entries = dikd::run_gradcheck_suite(20, seed);
  std::ostringstream os;
  bool all_ok = true;
  for (const auto& e : entries) {
    const bool ok = e.ok(1e-3);
    all_ok = all_ok && ok;
    os << (ok ? "PASS" : "FAIL") << "  " << e.op << "  instances="
       << e.instances << "  max_rel_err=" << e.max_rel_err << "\n";
  }
  std::cout << os.str();
  if (!out.empty()) {
    std::ofstream f(out);
    f << os.str();
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distillation-guided image inpainting"};
  app.require_subcommand(1);

  std::string config_path, out, teacher_path, log_path, model, image_path,
      mask_path, state_out, resume;
  uint64_t seed = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (key = value)");
    sub->add_option("--seed", seed, "RNG seed (overrides config)");
    return sub;
  };

  auto* gen = add_common(app.add_subcommand("gen-data", "generate a synthetic corpus"));
  gen->add_option("--out", out, "output directory")->required();

  auto* pre = add_common(app.add_subcommand("pretrain-teacher",
                                            "train the GT autoencoder"));
  pre->add_option("--out", out, "teacher checkpoint path")->required();

  auto* tr = add_common(app.add_subcommand("train", "train the inpainting student"));
  tr->add_option("--out", out, "student checkpoint path")->required();
  tr->add_option("--teacher", teacher_path, "teacher checkpoint (overrides config)");
  tr->add_option("--log", log_path, "per-iteration CSV loss log");
  tr->add_option("--state-out", state_out, "full training-state checkpoint");
  tr->add_option("--resume", resume, "resume from a training-state checkpoint");

  auto* ev = add_common(app.add_subcommand("eval", "PSNR/SSIM per mask bucket"));
  ev->add_option("--out", out, "report CSV path (stdout if omitted)");
  ev->add_option("--model", model, "student checkpoint")->required();

  auto* in = add_common(app.add_subcommand("inpaint", "inpaint one image"));
  in->add_option("--out", out, "output PPM path")->required();
  in->add_option("--model", model, "student checkpoint")->required();
  in->add_option("--image", image_path, "input PPM image")->required();
  in->add_option("--mask", mask_path, "input PGM mask")->required();

  auto* gc = add_common(app.add_subcommand("gradcheck",
                                           "finite-difference gradient report"));
  gc->add_option("--out", out, "report path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    const bool seed_set = gen->count("--seed") || pre->count("--seed") ||
                          tr->count("--seed") || ev->count("--seed") ||
                          in->count("--seed") || gc->count("--seed");
    const dikd::TrainConfig cfg = load_cfg(config_path, seed, seed_set);
    if (gen->parsed()) return cmd_gen_data(cfg, out);
    if (pre->parsed()) return cmd_pretrain_teacher(cfg, out);
    if (tr->parsed())
      return cmd_train(cfg, teacher_path, out, log_path, state_out, resume);
    if (ev->parsed()) return cmd_eval(cfg, model, out);
    if (in->parsed())
      return cmd_inpaint(cfg, model, image_path, mask_path, out);
    if (gc->parsed()) return cmd_gradcheck(cfg.seed, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
