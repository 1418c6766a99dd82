#include "dikd/config.hpp"

#include <fstream>
#include <sstream>

namespace dikd {

void TrainConfig::validate() const {
  if (image_size < 16 || batch_size < 1 || teacher_batch_size < 1 ||
      lr <= 0 || teacher_lr <= 0 ||
      iterations < 1 ||
      teacher_iterations < 1 || levels < 1 || base_channels < 1 ||
      kernel_size < 1 || checkpoint_every < 1 || gen_count < 1)
    throw std::invalid_argument("TrainConfig: all numeric fields must be positive");
  network().validate();
  weights.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + v);
}

}  // namespace

TrainConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "dataset_dir") cfg.dataset_dir = val;
      else if (key == "eval_dir") cfg.eval_dir = val;
      else if (key == "teacher_checkpoint") cfg.teacher_checkpoint = val;
      else if (key == "image_size") cfg.image_size = std::stoi(val);
      else if (key == "batch_size") cfg.batch_size = std::stoi(val);
      else if (key == "teacher_batch_size") cfg.teacher_batch_size = std::stoi(val);
      else if (key == "lr") cfg.lr = std::stod(val);
      else if (key == "teacher_lr") cfg.teacher_lr = std::stod(val);
      else if (key == "iterations") cfg.iterations = std::stoi(val);
      else if (key == "teacher_iterations") cfg.teacher_iterations = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "levels") cfg.levels = std::stoi(val);
      else if (key == "base_channels") cfg.base_channels = std::stoi(val);
      else if (key == "kernel_size") cfg.kernel_size = std::stoi(val);
      else if (key == "checkpoint_every") cfg.checkpoint_every = std::stoi(val);
      else if (key == "gen_count") cfg.gen_count = std::stoi(val);
      else if (key == "lambda_rec_hole") cfg.weights.rec_hole = std::stod(val);
      else if (key == "lambda_rec_valid") cfg.weights.rec_valid = std::stod(val);
      else if (key == "lambda_cross") cfg.weights.cross = std::stod(val);
      else if (key == "lambda_self") cfg.weights.self = std::stod(val);
      else if (key == "cross_enabled") cfg.cross_enabled = parse_bool(val, key);
      else if (key == "self_enabled") cfg.self_enabled = parse_bool(val, key);
      else if (key == "filler_enabled") cfg.filler_enabled = parse_bool(val, key);
      else
        throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                    std::to_string(lineno));
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad value for '" + key + "' at line " +
                                  std::to_string(lineno) + ": " + val);
    }
  }
  return cfg;
}

}  // namespace dikd
