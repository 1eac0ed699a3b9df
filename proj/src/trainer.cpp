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

#include "ccl_derain/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ccl_derain/errors.hpp"
#include "ccl_derain/evaluation.hpp"

namespace ccl_derain {

namespace fs = std::filesystem;

double schedule_lr(int epoch, const TrainerConfig& cfg) {
  if (epoch < 0 || epoch > cfg.epochs) {
    throw ConfigError("schedule_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                      std::to_string(cfg.epochs) + "]");
  }
  if (epoch < cfg.decay_start_epoch) return cfg.lr;
  return cfg.lr * (static_cast<double>(cfg.epochs - epoch) /
                   static_cast<double>(cfg.epochs - cfg.decay_start_epoch));
}

std::unique_ptr<SemanticEncoder> make_semantic_encoder(const SemanticConfig& cfg,
                                                       std::uint64_t seed) {
  SemanticTap tap;
  if (cfg.tap == "pooled") {
    tap = SemanticTap::kPooled;
  } else if (cfg.tap == "penultimate") {
    tap = SemanticTap::kPenultimate;
  } else {
    throw ConfigError("semantic.tap must be pooled|penultimate, got '" + cfg.tap + "'");
  }
  if (cfg.backend == "standin") {
    return std::make_unique<StandInSemanticEncoder>(seed, cfg.input_size, cfg.standin_dim, tap);
  }
  if (cfg.backend == "pretrained") {
    return std::make_unique<ScriptedSemanticEncoder>(resolve_pretrained_weights(cfg.weights),
                                                     cfg.input_size, tap);
  }
  throw ConfigError("semantic.backend must be standin|pretrained, got '" + cfg.backend + "'");
}

torch::Device resolve_device(const std::string& device) {
  if (device == "cpu") return torch::kCPU;
  if (device == "gpu") {
    if (!torch::cuda::is_available()) {
      throw BackendUnavailableError("trainer.device=gpu but no CUDA device is available");
    }
    return torch::kCUDA;
  }
  if (device == "auto") return torch::cuda::is_available() ? torch::kCUDA : torch::kCPU;
  throw ConfigError("trainer.device must be auto|cpu|gpu, got '" + device + "'");
}

// --- networks --------------------------------------------------------------

Networks Networks::build(const TrainConfig& cfg, const SeedTree& seeds) {
  Networks n;
  n.g_n = build_generator(cfg.model.generator(), seeds.child("init.G_n"));
  n.g_r = build_generator(cfg.model.generator(), seeds.child("init.G_r"));
  n.d_n = build_discriminator(cfg.model.discriminator(), seeds.child("init.D_n"));
  n.d_r = build_discriminator(cfg.model.discriminator(), seeds.child("init.D_r"));
  n.lcl_rainy = build_content_heads(*n.g_n, cfg.model.lcl_layers, cfg.model.proj_dim,
                                    seeds.child("init.lcl_rainy"));
  n.lcl_clean = build_content_heads(*n.g_r, cfg.model.lcl_layers, cfg.model.proj_dim,
                                    seeds.child("init.lcl_clean"));
  n.inter_n = build_discriminant_heads(*n.d_n, cfg.model.proj_dim, seeds.child("init.inter_n"));
  n.inter_r = build_discriminant_heads(*n.d_r, cfg.model.proj_dim, seeds.child("init.inter_r"));
  return n;
}

std::vector<torch::Tensor> Networks::generator_side_parameters() const {
  std::vector<torch::Tensor> ps;
  for (const torch::nn::Module* m :
       {static_cast<const torch::nn::Module*>(g_n.get()), static_cast<const torch::nn::Module*>(g_r.get()),
        static_cast<const torch::nn::Module*>(lcl_rainy.get()),
        static_cast<const torch::nn::Module*>(lcl_clean.get()),
        static_cast<const torch::nn::Module*>(inter_n.get()),
        static_cast<const torch::nn::Module*>(inter_r.get())}) {
    auto p = m->parameters();
    ps.insert(ps.end(), p.begin(), p.end());
  }
  return ps;
}

std::vector<torch::Tensor> Networks::discriminator_parameters() const {
  auto ps = d_n->parameters();
  auto pr = d_r->parameters();
  ps.insert(ps.end(), pr.begin(), pr.end());
  return ps;
}

void Networks::to(torch::Device device) {
  g_n->to(device);
  g_r->to(device);
  d_n->to(device);
  d_r->to(device);
  lcl_rainy->to(device);
  lcl_clean->to(device);
  inter_n->to(device);
  inter_r->to(device);
}

// --- image pool ------------------------------------------------------------

torch::Tensor ImagePool::query(const torch::Tensor& images, std::mt19937_64& rng) {
  if (capacity_ <= 0) return images;
  std::vector<torch::Tensor> out;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int64_t i = 0; i < images.size(0); ++i) {
    auto img = images.slice(0, i, i + 1).detach().clone();
    if (static_cast<int>(images_.size()) < capacity_) {
      images_.push_back(img);
      out.push_back(img);
    } else if (coin(rng) < 0.5) {
      std::uniform_int_distribution<std::size_t> pick(0, images_.size() - 1);
      const std::size_t j = pick(rng);
      out.push_back(images_[j]);
      images_[j] = img;
    } else {
      out.push_back(img);
    }
  }
  return torch::cat(out, 0);
}

// --- trainer ---------------------------------------------------------------

namespace {

void set_lr(torch::optim::Adam& opt, double lr) {
  for (auto& group : opt.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

void set_requires_grad(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.set_requires_grad(on);
}

torch::Tensor zero_scalar(torch::Device device) {
  return torch::zeros({}, torch::TensorOptions().device(device));
}

double scalar(const torch::Tensor& t) { return t.defined() ? t.item<double>() : 0.0; }

template <typename M>
void save_module(const M& module, const fs::path& path) {
  torch::save(module, path.string());
}

template <typename M>
void load_module(M& module, const fs::path& path) {
  if (!fs::is_regular_file(path)) throw InputError("checkpoint file missing: " + path.string());
  try {
    torch::load(module, path.string());
  } catch (const c10::Error& e) {
    throw InputError("cannot load " + path.string() + ": " + e.what_without_backtrace());
  }
}

struct NamedModule {
  const char* file;
  torch::nn::Module* module;
};

std::vector<NamedModule> named_modules(Networks& n) {
  return {{"G_n.pt", n.g_n.get()},          {"G_r.pt", n.g_r.get()},
          {"D_n.pt", n.d_n.get()},          {"D_r.pt", n.d_r.get()},
          {"heads_lcl_rainy.pt", n.lcl_rainy.get()}, {"heads_lcl_clean.pt", n.lcl_clean.get()},
          {"heads_inter_n.pt", n.inter_n.get()},     {"heads_inter_r.pt", n.inter_r.get()}};
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, std::unique_ptr<SemanticEncoder> encoder)
    : cfg_(std::move(cfg)),
      seeds_(cfg_.trainer.seed),
      device_(resolve_device(cfg_.trainer.device)),
      pool_n_(cfg_.trainer.pool_size),
      pool_r_(cfg_.trainer.pool_size) {
  cfg_.validate();
  encoder_ = encoder ? std::move(encoder)
                     : make_semantic_encoder(cfg_.semantic, seeds_.child("init.semantic"));
  encoder_->to(device_);
  nets_ = Networks::build(cfg_, seeds_);
  nets_.to(device_);
  const auto adam = [&](double lr) {
    return torch::optim::AdamOptions(lr).betas({cfg_.trainer.beta1, cfg_.trainer.beta2});
  };
  lr_ = schedule_lr(0, cfg_.trainer);
  opt_g_ = std::make_unique<torch::optim::Adam>(nets_.generator_side_parameters(), adam(lr_));
  opt_d_ = std::make_unique<torch::optim::Adam>(nets_.discriminator_parameters(), adam(lr_));
}

double Trainer::begin_epoch(int epoch) {
  lr_ = schedule_lr(epoch, cfg_.trainer);
  set_lr(*opt_g_, lr_);
  set_lr(*opt_d_, lr_);
  return lr_;
}

LossReport Trainer::train_step(const ImageTensor& rainy, const ImageTensor& clean) {
  check_image_tensor(rainy, "rainy batch");
  check_image_tensor(clean, "clean batch");
  const auto& L = cfg_.losses;
  const AdvMode mode = adv_mode_from_string(L.adv_mode);
  const auto& taps = cfg_.model.lcl_layers;
  const torch::Tensor r = rainy.to(device_);
  const torch::Tensor n = clean.to(device_);
  auto& g_n = *nets_.g_n;
  auto& g_r = *nets_.g_r;
  auto& d_n = *nets_.d_n;
  auto& d_r = *nets_.d_r;

  nets_.g_n->train();
  nets_.g_r->train();
  opt_g_->zero_grad();
  opt_d_->zero_grad();

  // Branch i: r -> n~ -> r*; branch ii: n -> r~ -> n*.
  std::vector<torch::Tensor> feats_r, feats_n;
  torch::Tensor n_tilde, r_tilde;
  if (L.lcl) {
    std::tie(n_tilde, feats_r) = g_n.forward_with_taps(r, taps);
    std::tie(r_tilde, feats_n) = g_r.forward_with_taps(n, taps);
  } else {
    n_tilde = g_n.forward(r);
    r_tilde = g_r.forward(n);
  }
  const torch::Tensor r_star = g_r.forward(n_tilde);
  const torch::Tensor n_star = g_n.forward(r_tilde);

  LossReport rep;
  torch::Tensor adv = zero_scalar(device_), lcl_t = zero_scalar(device_);
  torch::Tensor intra_t = zero_scalar(device_), inter_t = zero_scalar(device_);

  if (L.adv) {
    set_requires_grad(d_n, false);
    set_requires_grad(d_r, false);
    const auto gn = adversarial_g_term(d_n.forward(n_tilde), mode);
    const auto gr = adversarial_g_term(d_r.forward(r_tilde), mode);
    set_requires_grad(d_n, true);
    set_requires_grad(d_r, true);
    adv = gn + gr;
    rep.adv_g_n = scalar(gn);
    rep.adv_g_r = scalar(gr);
  }

  if (L.lcl) {
    const LCLConfig lc = L.lcl_config();
    const int64_t locations = lc.num_negatives + 1;
    PatchFeatureSet keys_i, keys_ii;
    {
      torch::NoGradGuard guard;
      std::vector<torch::Tensor> dr, dn;
      for (auto& f : feats_r) dr.push_back(f.detach());
      for (auto& f : feats_n) dn.push_back(f.detach());
      keys_i = project_patches(dr, *nets_.lcl_rainy, locations,
                               seeds_.child("lcl-locations", {step_, 0}));
      keys_ii = project_patches(dn, *nets_.lcl_clean, locations,
                                seeds_.child("lcl-locations", {step_, 1}));
    }
    const auto q_i = encode_content_replay(g_n, *nets_.lcl_rainy, n_tilde, keys_i);
    const auto q_ii = encode_content_replay(g_r, *nets_.lcl_clean, r_tilde, keys_ii);
    const auto li = lcl(q_i, keys_i, lc);
    const auto lii = lcl(q_ii, keys_ii, lc);
    lcl_t = li + lii;
    rep.lcl_i = scalar(li);
    rep.lcl_ii = scalar(lii);
  }

  if (L.intra) {
    const IntraOptions io{L.intra_fake_neg, L.intra_real_neg, L.epsilon};
    const auto t = intra_ccl(*encoder_, r_star, n_star, r, n, r_tilde, n_tilde, io,
                             L.detach_negatives);
    intra_t = t.total;
    rep.intra_i = scalar(t.branch_i);
    rep.intra_ii = scalar(t.branch_ii);
  }

  if (L.inter) {
    const InterOptions io{L.inter_fake_pos, L.inter_real_pos, L.epsilon};
    const InterNetworks in{&d_n, nets_.inter_n.get(), &d_r, nets_.inter_r.get()};
    const auto t = inter_ccl(in, n_star, n_tilde, n, r_star, r_tilde, r, io, L.detach_negatives,
                             L.inter_stop_grad_disc);
    inter_t = t.total;
    rep.inter_n = scalar(t.loss_n);
    rep.inter_r = scalar(t.loss_r);
  }

  const LossWeights w = L.weights();
  const auto total = total_loss(LossTensors{adv, lcl_t, intra_t, inter_t}, w);
  if (total.requires_grad()) total.backward();
  opt_g_->step();

  // Discriminators on detached fakes; gradients left on D by inter-CCL are
  // applied in the same step.
  auto pool_rng = seeds_.engine("image-pool", {step_});
  const auto fake_n = pool_n_.query(n_tilde.detach(), pool_rng);
  const auto fake_r = pool_r_.query(r_tilde.detach(), pool_rng);
  const auto dn = adversarial_d_term(d_n.forward(n), d_n.forward(fake_n), mode);
  const auto dr = adversarial_d_term(d_r.forward(r), d_r.forward(fake_r), mode);
  const auto d_loss = dn + dr;
  require_finite(d_loss, "adv_d");
  d_loss.backward();
  opt_d_->step();

  rep.adv_g = L.adv ? scalar(adv) : 0.0;
  rep.adv_d = scalar(d_loss);
  rep.lcl = L.lcl ? scalar(lcl_t) : 0.0;
  rep.intra = L.intra ? scalar(intra_t) : 0.0;
  rep.inter = L.inter ? scalar(inter_t) : 0.0;
  rep.total = total_loss(LossParts{rep.adv_g, rep.lcl, rep.intra, rep.inter}, w);
  ++step_;
  return rep;
}

void Trainer::save_checkpoint(const fs::path& dir) const {
  const fs::path tmp = dir.string() + ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);
  auto& nets = const_cast<Networks&>(nets_);
  for (const auto& nm : named_modules(nets)) {
    torch::serialize::OutputArchive archive;
    nm.module->save(archive);
    archive.save_to((tmp / nm.file).string());
  }
  torch::save(*opt_g_, (tmp / "opt_G.pt").string());
  torch::save(*opt_d_, (tmp / "opt_D.pt").string());
  if (!pool_n_.images().empty()) torch::save(pool_n_.images(), (tmp / "pool_n.pt").string());
  if (!pool_r_.images().empty()) torch::save(pool_r_.images(), (tmp / "pool_r.pt").string());

  const auto& g = cfg_.model;
  nlohmann::json m{
      {"epoch", epoch_},
      {"step", step_},
      {"seed", cfg_.trainer.seed},
      {"lr", lr_},
      {"generator",
       {{"residual_blocks", g.gen_residual_blocks},
        {"base_channels", g.gen_base_channels},
        {"downsample_stages", g.gen_downsample_stages}}},
      {"discriminator", {{"layers", g.disc_layers}, {"base_channels", g.disc_base_channels}}},
      {"lcl_layers", g.lcl_layers},
      {"semantic_encoder", {{"name", encoder_->name()}, {"checksum", encoder_->checksum()}}},
      {"checksums",
       {{"G_n", parameter_checksum(*nets_.g_n)},
        {"G_r", parameter_checksum(*nets_.g_r)},
        {"D_n", parameter_checksum(*nets_.d_n)},
        {"D_r", parameter_checksum(*nets_.d_r)}}}};
  {
    std::ofstream out(tmp / "manifest.json");
    out << m.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + (tmp / "manifest.json").string());
  }
  save_config(cfg_, tmp / "config.yaml");
  fs::remove_all(dir, ec);
  fs::rename(tmp, dir);
}

Trainer Trainer::from_checkpoint(const fs::path& dir, std::optional<TrainConfig> cfg) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::is_regular_file(manifest_path)) {
    throw InputError("not a checkpoint directory: " + dir.string());
  }
  TrainConfig resolved = cfg ? *cfg : load_config(dir / "config.yaml");
  Trainer t(resolved);
  for (const auto& nm : named_modules(t.nets_)) {
    const auto path = dir / nm.file;
    if (!fs::is_regular_file(path)) throw InputError("checkpoint file missing: " + path.string());
    torch::serialize::InputArchive archive;
    try {
      archive.load_from(path.string(), t.device_);
      nm.module->load(archive);
    } catch (const c10::Error& e) {
      throw InputError("cannot load " + path.string() + ": " + e.what_without_backtrace());
    }
  }
  load_module(*t.opt_g_, dir / "opt_G.pt");
  load_module(*t.opt_d_, dir / "opt_D.pt");
  for (auto [file, pool] : {std::pair{"pool_n.pt", &t.pool_n_}, std::pair{"pool_r.pt", &t.pool_r_}}) {
    if (fs::is_regular_file(dir / file)) {
      std::vector<torch::Tensor> images;
      torch::load(images, (dir / file).string());
      pool->restore(std::move(images));
    }
  }
  nlohmann::json m;
  {
    std::ifstream in(manifest_path);
    m = nlohmann::json::parse(in);
  }
  t.epoch_ = m.at("epoch").get<int>();
  t.step_ = m.at("step").get<std::int64_t>();
  t.lr_ = m.at("lr").get<double>();
  const auto enc_sum = m.at("semantic_encoder").at("checksum").get<std::uint64_t>();
  if (enc_sum != t.encoder_->checksum()) {
    log_warning("semantic encoder differs from the one used to write " + dir.string());
  }
  return t;
}

// --- fit -------------------------------------------------------------------

namespace {

ImageTensor load_batch(const UnpairedDataset& ds, const std::vector<std::size_t>& idx, bool rainy,
                       const SeedTree& seeds, std::int64_t epoch, std::int64_t step,
                       const PreprocessOptions& popts) {
  std::vector<torch::Tensor> items;
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Image8 img = rainy ? ds.rainy(idx[b]) : ds.clean(idx[b]);
    const auto seed = seeds.child(rainy ? "augment-rainy" : "augment-clean",
                                  {epoch, step, static_cast<std::int64_t>(b)});
    items.push_back(preprocess(img, PreprocessMode::kTrain, seed, popts));
  }
  return torch::cat(items, 0);
}

}  // namespace

FitResult fit(const TrainConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  fs::create_directories(opts.out_dir);
  save_config(cfg, opts.out_dir / "config.yaml");

  const UnpairedDataset ds = load_unpaired(cfg.data.train_root, cfg.layout(), cfg.data.preload);
  Trainer trainer = opts.resume_from ? Trainer::from_checkpoint(*opts.resume_from, cfg)
                                     : Trainer(cfg);
  const SeedTree seeds(cfg.trainer.seed);
  const SeedTree data_seeds = seeds.subtree("data");
  const auto popts = cfg.preprocess_options();

  std::ofstream log(opts.out_dir / "loss_log.jsonl",
                    opts.resume_from ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (opts.out_dir / "loss_log.jsonl").string());

  FitResult result;
  const fs::path ckpt_root = opts.out_dir / "checkpoints";
  for (int epoch = trainer.epoch(); epoch < cfg.trainer.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = trainer.begin_epoch(epoch);
    auto plan = plan_epoch(ds, data_seeds, epoch, cfg.trainer.batch_size);
    if (cfg.trainer.max_steps_per_epoch > 0 &&
        plan.size() > static_cast<std::size_t>(cfg.trainer.max_steps_per_epoch)) {
      plan.resize(cfg.trainer.max_steps_per_epoch);
    }
    double sum_total = 0.0;
    for (std::size_t s = 0; s < plan.size(); ++s) {
      const auto si = static_cast<std::int64_t>(s);
      const auto rainy = load_batch(ds, plan[s].rainy, true, data_seeds, epoch, si, popts);
      const auto clean = load_batch(ds, plan[s].clean, false, data_seeds, epoch, si, popts);
      const LossReport rep = trainer.train_step(rainy, clean);
      nlohmann::json rec{{"epoch", epoch},      {"step", trainer.global_step()},
                         {"lr", lr},            {"adv_g", rep.adv_g},
                         {"adv_d", rep.adv_d},  {"lcl", rep.lcl},
                         {"intra", rep.intra},  {"inter", rep.inter},
                         {"total", rep.total}};
      log << rec.dump() << "\n";
      sum_total += rep.total;
      ++result.steps;
    }
    log.flush();
    if (!log) throw std::runtime_error("write to loss log failed");
    trainer.set_epoch(epoch + 1);
    if (!opts.quiet) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char line[160];
      std::snprintf(line, sizeof(line), "epoch %d/%d  lr %.3g  mean total %.4f  (%.1fs)",
                    epoch + 1, cfg.trainer.epochs, lr,
                    plan.empty() ? 0.0 : sum_total / static_cast<double>(plan.size()), secs);
      std::cerr << line << std::endl;
    }
    if (cfg.trainer.checkpoint_every > 0 && (epoch + 1) % cfg.trainer.checkpoint_every == 0 &&
        epoch + 1 < cfg.trainer.epochs) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d", epoch + 1);
      trainer.save_checkpoint(ckpt_root / name);
      result.checkpoints.push_back(ckpt_root / name);
    }
  }
  result.final_checkpoint = ckpt_root / "final";
  trainer.save_checkpoint(result.final_checkpoint);
  result.checkpoints.push_back(result.final_checkpoint);
  return result;
}

// --- ablations -------------------------------------------------------------

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

Overrides loss_toggles(bool adv, bool lcl, bool intra, bool inter) {
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {{"losses.adv", b(adv)}, {"losses.lcl", b(lcl)}, {"losses.intra", b(intra)},
          {"losses.inter", b(inter)}};
}

Overrides concat(Overrides a, const Overrides& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct Column {
  const char* title;
  const char* key;
};

std::vector<Column> suite_columns(const std::string& suite) {
  if (suite == "table2") {
    return {{"adv", "losses.adv"}, {"LCL", "losses.lcl"}, {"intra", "losses.intra"},
            {"inter", "losses.inter"}};
  }
  if (suite == "table3") {
    return {{"fake-neg", "losses.intra_fake_neg"}, {"real-neg", "losses.intra_real_neg"}};
  }
  return {{"fake-pos", "losses.inter_fake_pos"}, {"real-pos", "losses.inter_real_pos"}};
}

}  // namespace

std::vector<AblationConfig> ablation_suite(const std::string& name) {
  if (name == "table2") {
    return {{"A", loss_toggles(false, true, true, true), "26.61 / 0.8789"},
            {"B", loss_toggles(true, false, true, true), "26.45 / 0.8771"},
            {"C", loss_toggles(true, true, false, true), "27.67 / 0.8860"},
            {"D", loss_toggles(true, true, true, false), "27.43 / 0.9117"},
            {"E", loss_toggles(false, true, false, false), "26.37 / 0.8498"},
            {"F", loss_toggles(false, false, true, true), "26.21 / 0.8544"},
            {"G", loss_toggles(true, true, true, true), "29.17 / 0.9234"}};
  }
  if (name == "table3") {
    const auto base = loss_toggles(true, true, true, false);
    return {{"real-only",
             concat(base, {{"losses.intra_fake_neg", "false"}, {"losses.intra_real_neg", "true"}}),
             "27.12 / 0.8891"},
            {"fake-only",
             concat(base, {{"losses.intra_fake_neg", "true"}, {"losses.intra_real_neg", "false"}}),
             "27.33 / 0.8988"},
            {"both",
             concat(base, {{"losses.intra_fake_neg", "true"}, {"losses.intra_real_neg", "true"}}),
             "27.43 / 0.9117"}};
  }
  if (name == "table4") {
    const auto base = loss_toggles(true, true, false, true);
    return {{"real-only",
             concat(base, {{"losses.inter_fake_pos", "false"}, {"losses.inter_real_pos", "true"}}),
             "27.55 / 0.8832"},
            {"fake-only",
             concat(base, {{"losses.inter_fake_pos", "true"}, {"losses.inter_real_pos", "false"}}),
             "26.69 / 0.8799"},
            {"both",
             concat(base, {{"losses.inter_fake_pos", "true"}, {"losses.inter_real_pos", "true"}}),
             "27.67 / 0.8860"}};
  }
  throw ConfigError("unknown ablation suite '" + name + "' (expected table2|table3|table4)");
}

AblationTable run_ablation_suite(const TrainConfig& base, const std::string& suite_name,
                                 const std::vector<AblationConfig>& suite, const fs::path& out_dir,
                                 bool quiet) {
  AblationTable table;
  table.suite = suite_name;
  if (base.data.eval_pairs_manifest.empty()) {
    throw ConfigError("data.eval_pairs_manifest is required for ablations");
  }
  const PairedEvalSet eval_set = load_paired_manifest(base.data.eval_pairs_manifest);
  const ChannelMode mode = channel_mode_from_string(base.eval.channel_mode);
  for (const auto& ac : suite) {
    AblationRow row;
    row.config = ac;
    row.resolved = base;
    try {
      for (const auto& [k, v] : ac.overrides) set_config_value(row.resolved, k, v);
      if (!quiet) std::cerr << "[" << suite_name << "] config " << ac.label << std::endl;
      const FitResult fr = fit(row.resolved, {out_dir / ac.label, std::nullopt, quiet});
      const DerainModel model =
          DerainModel::from_checkpoint(fr.final_checkpoint, resolve_device(base.trainer.device));
      row.report = evaluate(model, eval_set, mode);
      if (row.report.count == 0) throw InputError("no evaluation pair could be scored");
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      log_warning("ablation " + ac.label + " failed: " + row.error);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string AblationTable::to_text() const {
  const auto cols = suite_columns(suite);
  std::ostringstream os;
  char cell[64];
  std::snprintf(cell, sizeof(cell), "%-10s", "config");
  os << cell;
  for (const auto& c : cols) {
    std::snprintf(cell, sizeof(cell), " %-9s", c.title);
    os << cell;
  }
  os << "  PSNR(dB)    SSIM    reference (full scale)\n";
  for (const auto& r : rows) {
    std::snprintf(cell, sizeof(cell), "%-10s", r.config.label.c_str());
    os << cell;
    for (const auto& c : cols) {
      std::snprintf(cell, sizeof(cell), " %-9s",
                    get_config_value(r.resolved, c.key) == "true" ? "yes" : "no");
      os << cell;
    }
    if (r.failed) {
      os << "  FAILED: " << r.error << "\n";
      continue;
    }
    std::snprintf(cell, sizeof(cell), "  %8.2f  %6.4f", r.report.mean_psnr, r.report.mean_ssim);
    os << cell << "    " << r.config.reference << "\n";
  }
  return os.str();
}

nlohmann::json AblationTable::to_json() const {
  nlohmann::json out{{"suite", suite}, {"rows", nlohmann::json::array()}};
  for (const auto& r : rows) {
    nlohmann::json toggles;
    for (const auto& c : suite_columns(suite)) {
      toggles[c.title] = get_config_value(r.resolved, c.key) == "true";
    }
    nlohmann::json row{{"label", r.config.label},
                       {"toggles", toggles},
                       {"reference", r.config.reference},
                       {"failed", r.failed}};
    if (r.failed) {
      row["error"] = r.error;
    } else {
      row["mean_psnr"] = r.report.mean_psnr;
      row["mean_ssim"] = r.report.mean_ssim;
      row["count"] = r.report.count;
    }
    out["rows"].push_back(std::move(row));
  }
  return out;
}

}  // namespace ccl_derain
