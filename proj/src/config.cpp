#include "unveil/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace unveil {

namespace {

struct KeyDefault {
  const char* key;
  const char* value;
};

// Every tunable constant of the pipeline with its default.
const std::vector<KeyDefault>& registry() {
  static const std::vector<KeyDefault> reg = {
      {"scene.sh_degree", "3"},
      {"scene.env_height", "64"},
      {"scene.env_width", "128"},

      {"render.tile_size", "16"},
      {"render.near_clip", "0.01"},

      {"loss.lambda_ssim", "0.2"},
      {"loss.lambda_d", "100"},
      {"loss.lambda_n", "0.05"},
      {"loss.lambda_ds", "100"},
      {"loss.lambda_s", "0.1"},
      {"loss.lambda_alpha", "0.001"},

      {"train.stage1_steps", "2000"},
      {"train.stage2_steps", "1000"},
      {"train.retrain_steps", "800"},
      {"train.densify_interval", "100"},
      {"train.densify_grad_threshold", "2e-4"},
      {"train.densify_scale_frac", "0.01"},
      {"train.split_scale_divisor", "1.6"},
      {"train.prune_floor", "0.005"},
      {"train.prune_epsilon", "0.3"},
      {"train.prune_interval", "100"},
      {"train.max_splats", "60000"},
      {"train.init_opacity", "0.1"},
      {"train.lr_center", "1.6e-4"},
      {"train.lr_center_final_frac", "0.01"},
      {"train.lr_rotation", "1e-3"},
      {"train.lr_scale", "5e-3"},
      {"train.lr_opacity", "5e-2"},
      {"train.lr_sh", "2.5e-3"},
      {"train.lr_env", "1e-2"},
      {"train.adam_beta1", "0.9"},
      {"train.adam_beta2", "0.999"},
      {"train.adam_eps", "1e-15"},
      {"train.seed", "1"},

      {"unveil.proximity_radius_frac", "0.02"},
      {"unveil.proximity_radius", "0"},
      {"unveil.reopt_radius", "0"},
      {"unveil.alpha_threshold", "0.99"},
      {"unveil.mask_dilation", "1"},
      {"unveil.keyframe_stride", "10"},
      {"unveil.visibility_delta_frac", "0.01"},
      {"unveil.min_reference_pixels", "16"},

      {"inpaint.endpoint", "http://127.0.0.1:9310"},
      {"inpaint.timeout_ms", "10000"},
      {"inpaint.attempts", "3"},
      {"inpaint.backoff_ms", "100"},

      {"synth.frames", "30"},
      {"synth.width", "80"},
      {"synth.height", "60"},
      {"synth.boxes", "2"},
      {"synth.seed", "7"},
      {"synth.ground_spacing", "0.16"},

      {"run.threads", "2"},
      {"run.depth_scale", "1000"},
  };
  return reg;
}

bool known_key(const std::string& key) {
  for (const KeyDefault& kd : registry())
    if (key == kd.key) return true;
  return false;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

Config Config::defaults() {
  Config c;
  for (const KeyDefault& kd : registry()) c.values_[kd.key] = kd.value;
  return c;
}

Config Config::load(const std::string& path) {
  Config c = defaults();
  c.parse_file(path);
  return c;
}

void Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: bad line " + std::to_string(lineno) +
                               " in " + path);
    std::string key = trim(t.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    set(key, trim(t.substr(eq + 1)));
  }
}

void Config::save(const std::string& path) const {
  std::ostringstream out;
  std::string section;
  for (const KeyDefault& kd : registry()) {
    std::string key = kd.key;
    std::string sec = key.substr(0, key.find('.'));
    std::string name = key.substr(key.find('.') + 1);
    if (sec != section) {
      if (!section.empty()) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << name << " = " << values_.at(key) << "\n";
  }
  std::string tmp = path + ".tmp";
  std::ofstream f(tmp);
  if (!f) throw std::runtime_error("config: cannot write " + path);
  f << out.str();
  f.close();
  std::filesystem::rename(tmp, path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known_key(key))
    throw std::invalid_argument("config: unknown key '" + key + "'");
  values_[key] = value;
}

void Config::set_kv(const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("config: expected key=value, got '" +
                                assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("config: unknown key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string s = get_str(key);
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size())
    throw std::invalid_argument("config: key '" + key + "' is not a number");
  return v;
}

int Config::get_int(const std::string& key) const {
  return int(get_int64(key));
}

long long Config::get_int64(const std::string& key) const {
  const std::string s = get_str(key);
  size_t pos = 0;
  long long v = std::stoll(s, &pos);
  if (pos != s.size())
    throw std::invalid_argument("config: key '" + key + "' is not an integer");
  return v;
}

bool Config::get_bool(const std::string& key) const {
  std::string s = get_str(key);
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw std::invalid_argument("config: key '" + key + "' is not a boolean");
}

}  // namespace unveil
