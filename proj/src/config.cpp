// Copyright 2026 The CCL-Derain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ccl_derain/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "ccl_derain/errors.hpp"

namespace ccl_derain {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError("invalid value '" + value + "' for " + key + " (expected " + expected + ")");
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad_value(key, raw, std::is_floating_point_v<T> ? "a number" : "an integer");
  }
  return out;
}

template <typename T>
std::string format_number(T v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool parse_bool(const std::string& key, const std::string& raw) {
  std::string v = trim(raw);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, raw, "true|false");
}

std::vector<int64_t> parse_int_list(const std::string& key, const std::string& raw) {
  std::string v = trim(raw);
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<int64_t>(key, item));
  }
  if (out.empty()) bad_value(key, raw, "a comma-separated list of integers");
  return out;
}

std::string format_int_list(const std::vector<int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct KeyEntry {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T, typename Access>
KeyEntry number(const char* key, Access access) {
  return {key,
          [access](const TrainConfig& c) {
            return format_number(access(const_cast<TrainConfig&>(c)));
          },
          [access, key](TrainConfig& c, const std::string& v) {
            access(c) = parse_number<T>(key, v);
          }};
}

template <typename Access>
KeyEntry boolean(const char* key, Access access) {
  return {key,
          [access](const TrainConfig& c) {
            return std::string(access(const_cast<TrainConfig&>(c)) ? "true" : "false");
          },
          [access, key](TrainConfig& c, const std::string& v) { access(c) = parse_bool(key, v); }};
}

template <typename Access>
KeyEntry text(const char* key, Access access) {
  return {key, [access](const TrainConfig& c) { return access(const_cast<TrainConfig&>(c)); },
          [access](TrainConfig& c, const std::string& v) { access(c) = trim(v); }};
}

template <typename Access>
KeyEntry choice(const char* key, Access access, std::initializer_list<const char*> choices) {
  std::vector<const char*> opts(choices);
  return {key, [access](const TrainConfig& c) { return access(const_cast<TrainConfig&>(c)); },
          [access, key, opts](TrainConfig& c, const std::string& v) {
            std::string joined;
            for (const char* o : opts) {
              if (trim(v) == o) {
                access(c) = o;
                return;
              }
              joined += (joined.empty() ? "" : "|") + std::string(o);
            }
            bad_value(key, v, joined);
          }};
}

#define CCL_FIELD(expr) [](TrainConfig& c) -> auto& { return c.expr; }

const std::vector<KeyEntry>& registry() {
  static const std::vector<KeyEntry> entries = {
      text("data.train_root", CCL_FIELD(data.train_root)),
      text("data.rainy_subdir", CCL_FIELD(data.rainy_subdir)),
      text("data.clean_subdir", CCL_FIELD(data.clean_subdir)),
      text("data.eval_pairs_manifest", CCL_FIELD(data.eval_pairs_manifest)),
      number<int>("data.load_size", CCL_FIELD(data.load_size)),
      number<int>("data.crop_size", CCL_FIELD(data.crop_size)),
      boolean("data.flip", CCL_FIELD(data.flip)),
      number<int>("data.pad_multiple", CCL_FIELD(data.pad_multiple)),
      boolean("data.preload", CCL_FIELD(data.preload)),

      number<int>("model.gen_residual_blocks", CCL_FIELD(model.gen_residual_blocks)),
      number<int>("model.gen_base_channels", CCL_FIELD(model.gen_base_channels)),
      number<int>("model.gen_downsample_stages", CCL_FIELD(model.gen_downsample_stages)),
      number<int>("model.disc_layers", CCL_FIELD(model.disc_layers)),
      number<int>("model.disc_base_channels", CCL_FIELD(model.disc_base_channels)),
      {"model.lcl_layers",
       [](const TrainConfig& c) { return format_int_list(c.model.lcl_layers); },
       [](TrainConfig& c, const std::string& v) {
         c.model.lcl_layers = parse_int_list("model.lcl_layers", v);
       }},
      number<int64_t>("model.proj_dim", CCL_FIELD(model.proj_dim)),

      choice("semantic.backend", CCL_FIELD(semantic.backend), {"standin", "pretrained"}),
      choice("semantic.tap", CCL_FIELD(semantic.tap), {"pooled", "penultimate"}),
      text("semantic.weights", CCL_FIELD(semantic.weights)),
      number<int>("semantic.input_size", CCL_FIELD(semantic.input_size)),
      number<int>("semantic.standin_dim", CCL_FIELD(semantic.standin_dim)),

      boolean("losses.adv", CCL_FIELD(losses.adv)),
      boolean("losses.lcl", CCL_FIELD(losses.lcl)),
      boolean("losses.intra", CCL_FIELD(losses.intra)),
      boolean("losses.inter", CCL_FIELD(losses.inter)),
      number<double>("losses.lambda1", CCL_FIELD(losses.lambda1)),
      number<double>("losses.lambda2", CCL_FIELD(losses.lambda2)),
      number<double>("losses.lambda3", CCL_FIELD(losses.lambda3)),
      choice("losses.adv_mode", CCL_FIELD(losses.adv_mode), {"lsgan", "vanilla"}),
      number<double>("losses.tau", CCL_FIELD(losses.tau)),
      number<int64_t>("losses.num_negatives", CCL_FIELD(losses.num_negatives)),
      number<double>("losses.cos_eps", CCL_FIELD(losses.cos_eps)),
      number<double>("losses.epsilon", CCL_FIELD(losses.epsilon)),
      boolean("losses.intra_fake_neg", CCL_FIELD(losses.intra_fake_neg)),
      boolean("losses.intra_real_neg", CCL_FIELD(losses.intra_real_neg)),
      boolean("losses.inter_fake_pos", CCL_FIELD(losses.inter_fake_pos)),
      boolean("losses.inter_real_pos", CCL_FIELD(losses.inter_real_pos)),
      boolean("losses.detach_negatives", CCL_FIELD(losses.detach_negatives)),
      boolean("losses.inter_stop_grad_disc", CCL_FIELD(losses.inter_stop_grad_disc)),

      number<int>("trainer.epochs", CCL_FIELD(trainer.epochs)),
      number<int>("trainer.decay_start_epoch", CCL_FIELD(trainer.decay_start_epoch)),
      number<double>("trainer.lr", CCL_FIELD(trainer.lr)),
      number<double>("trainer.beta1", CCL_FIELD(trainer.beta1)),
      number<double>("trainer.beta2", CCL_FIELD(trainer.beta2)),
      number<int>("trainer.batch_size", CCL_FIELD(trainer.batch_size)),
      number<std::uint64_t>("trainer.seed", CCL_FIELD(trainer.seed)),
      number<int>("trainer.checkpoint_every", CCL_FIELD(trainer.checkpoint_every)),
      number<int>("trainer.pool_size", CCL_FIELD(trainer.pool_size)),
      number<int>("trainer.max_steps_per_epoch", CCL_FIELD(trainer.max_steps_per_epoch)),
      choice("trainer.device", CCL_FIELD(trainer.device), {"auto", "cpu", "gpu"}),

      choice("eval.channel_mode", CCL_FIELD(eval.channel_mode), {"y", "rgb"}),
  };
  return entries;
}

#undef CCL_FIELD

const KeyEntry& find_entry(const std::string& key) {
  for (const auto& e : registry()) {
    if (e.key == key) return e;
  }
  std::string msg = "unknown config key '" + key + "'";
  const auto near = nearest_keys(key);
  if (!near.empty()) {
    msg += "; did you mean:";
    for (const auto& k : near) msg += " " + k;
  }
  throw ConfigError(msg);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

void flatten(const YAML::Node& node, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string k = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? k : prefix + "." + k, out);
    }
  } else if (node.IsSequence()) {
    std::string joined;
    for (const auto& item : node) joined += (joined.empty() ? "" : ",") + item.as<std::string>();
    out.emplace_back(prefix, joined);
  } else if (node.IsScalar()) {
    out.emplace_back(prefix, node.Scalar());
  } else if (node.IsNull()) {
    out.emplace_back(prefix, "");
  }
}

}  // namespace

TrainConfig TrainConfig::full() { return TrainConfig{}; }

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.data.load_size = 64;
  c.data.crop_size = 64;
  c.model.gen_residual_blocks = 4;
  c.model.gen_base_channels = 32;
  c.model.disc_base_channels = 32;
  c.semantic.input_size = 64;
  c.trainer.epochs = 30;
  c.trainer.decay_start_epoch = 15;
  c.trainer.checkpoint_every = 10;
  return c;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(trainer.epochs >= 1, "trainer.epochs must be >= 1");
  require(trainer.decay_start_epoch >= 0 && trainer.decay_start_epoch < trainer.epochs,
          "trainer.decay_start_epoch must lie in [0, trainer.epochs)");
  require(trainer.batch_size >= 1, "trainer.batch_size must be >= 1");
  require(trainer.lr > 0.0, "trainer.lr must be > 0");
  require(trainer.beta1 >= 0.0 && trainer.beta1 < 1.0, "trainer.beta1 must lie in [0,1)");
  require(trainer.beta2 >= 0.0 && trainer.beta2 < 1.0, "trainer.beta2 must lie in [0,1)");
  require(trainer.checkpoint_every >= 1, "trainer.checkpoint_every must be >= 1");
  require(trainer.pool_size >= 0, "trainer.pool_size must be >= 0");
  require(trainer.max_steps_per_epoch >= 0, "trainer.max_steps_per_epoch must be >= 0");
  require(data.crop_size >= 1 && data.load_size >= data.crop_size,
          "data.crop_size must lie in [1, data.load_size]");
  const int mult = 1 << model.gen_downsample_stages;
  require(data.crop_size % mult == 0,
          "data.crop_size must be divisible by 2^model.gen_downsample_stages");
  require(data.pad_multiple >= 1 && data.pad_multiple % mult == 0,
          "data.pad_multiple must be a positive multiple of 2^model.gen_downsample_stages");
  require(model.gen_residual_blocks >= 1, "model.gen_residual_blocks must be >= 1");
  require(model.gen_base_channels >= 1 && model.disc_base_channels >= 1,
          "model base channels must be >= 1");
  require(model.disc_layers >= 1, "model.disc_layers must be >= 1");
  require(model.proj_dim >= 1, "model.proj_dim must be >= 1");
  require(!model.lcl_layers.empty(), "model.lcl_layers must not be empty");
  const int64_t max_tap = 1 + model.gen_downsample_stages + model.gen_residual_blocks;
  for (auto t : model.lcl_layers) {
    require(t >= 0 && t <= max_tap,
            "model.lcl_layers entry " + std::to_string(t) + " outside [0, " +
                std::to_string(max_tap) + "]");
  }
  losses.weights().validate();
  losses.lcl_config().validate();
  require(losses.epsilon > 0.0, "losses.epsilon must be > 0");
  require(losses.intra_fake_neg || losses.intra_real_neg,
          "losses.intra_fake_neg and losses.intra_real_neg cannot both be false");
  require(losses.inter_fake_pos || losses.inter_real_pos,
          "losses.inter_fake_pos and losses.inter_real_pos cannot both be false");
  require(semantic.input_size >= 16, "semantic.input_size must be >= 16");
  require(semantic.standin_dim >= 1, "semantic.standin_dim must be >= 1");
}

PreprocessOptions TrainConfig::preprocess_options() const {
  return {data.load_size, data.crop_size, data.flip, data.pad_multiple};
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : registry()) keys.push_back(e.key);
  return keys;
}

std::vector<std::string> nearest_keys(const std::string& key, std::size_t n) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const auto& e : registry()) scored.emplace_back(edit_distance(key, e.key), e.key);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  find_entry(trim(key)).set(cfg, value);
}

std::string get_config_value(const TrainConfig& cfg, const std::string& key) {
  return find_entry(key).get(cfg);
}

void apply_override(TrainConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  set_config_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (root.IsNull()) return base;
  if (!root.IsMap()) throw ConfigError("config must be a mapping of keys to values");
  std::vector<std::pair<std::string, std::string>> flat;
  flatten(root, "", flat);
  for (const auto& [k, v] : flat) set_config_value(base, k, v);
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_yaml(const TrainConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  std::string section;
  for (const auto& e : registry()) {
    const auto dot = e.key.find('.');
    const std::string sec = e.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << YAML::EndMap;
      out << YAML::Key << sec << YAML::Value << YAML::BeginMap;
      section = sec;
    }
    out << YAML::Key << e.key.substr(dot + 1) << YAML::Value << e.get(cfg);
  }
  if (!section.empty()) out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void save_config(const TrainConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << to_yaml(cfg);
  if (!out) throw std::runtime_error("failed to write config to " + path.string());
}

}  // namespace ccl_derain
