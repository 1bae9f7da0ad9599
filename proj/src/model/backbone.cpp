/*
 * Copyright 2026 The leadxfer Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "leadxfer/model/backbone.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "leadxfer/autodiff/ops.hpp"
#include "leadxfer/util/errors.hpp"
#include "leadxfer/util/hash.hpp"
#include "leadxfer/util/rng.hpp"

namespace leadxfer::model {

using ad::Shape;
using ad::Tensor;
using ad::Var;

std::size_t BackboneConfig::rep_dim() const {
  std::size_t ch = stem_channels;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    if (downsamples(b)) ch *= 2;
  }
  return ch;
}

void BackboneConfig::validate() const {
  if (in_leads != 1 && in_leads != 12) throw ConfigError("in_leads", "must be 1 or 12");
  if (stem_channels == 0) throw ConfigError("stem_channels", "must be positive");
  if (kernel_size == 0 || kernel_size % 2 == 0) throw ConfigError("kernel_size", "must be odd");
  if (stem_kernel == 0 || stem_kernel % 2 == 0) throw ConfigError("stem_kernel", "must be odd");
  if (n_classes == 0) throw ConfigError("n_classes", "must be positive");
  if (proj_dim == 0) throw ConfigError("proj_dim", "must be positive");
}

nlohmann::json BackboneConfig::to_json() const {
  return {{"in_leads", in_leads},       {"stem_channels", stem_channels}, {"n_blocks", n_blocks},
          {"kernel_size", kernel_size}, {"stem_kernel", stem_kernel},     {"n_classes", n_classes},
          {"proj_dim", proj_dim},       {"rep_dim", rep_dim()}};
}

BackboneConfig BackboneConfig::from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.in_leads = j.at("in_leads").get<std::size_t>();
  c.stem_channels = j.at("stem_channels").get<std::size_t>();
  c.n_blocks = j.at("n_blocks").get<std::size_t>();
  c.kernel_size = j.at("kernel_size").get<std::size_t>();
  c.stem_kernel = j.at("stem_kernel").get<std::size_t>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.proj_dim = j.at("proj_dim").get<std::size_t>();
  c.validate();
  if (j.contains("rep_dim") && j.at("rep_dim").get<std::size_t>() != c.rep_dim()) {
    throw ConfigError("rep_dim", "does not match the final block width " + std::to_string(c.rep_dim()));
  }
  return c;
}

Tensor& ModelParams::param(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::out_of_range("no parameter '" + name + "'");
  return it->second;
}

Tensor& ModelParams::buffer(const std::string& name) {
  auto it = buffers.find(name);
  if (it == buffers.end()) throw std::out_of_range("no buffer '" + name + "'");
  return it->second;
}

std::size_t ModelParams::trainable_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params) n += t.size();
  return n;
}

std::uint64_t ModelParams::fingerprint() const {
  Fnv1a h;
  for (const auto* group : {&params, &buffers}) {
    for (const auto& [name, t] : *group) {
      h.update(name);
      h.update(ad::shape_str(t.shape));
      h.update(std::as_bytes(std::span(t.data)));
    }
  }
  return h.digest();
}

void ModelParams::zero_grad() {
  for (auto& [_, t] : params) t.zero_grad();
}

void ModelParams::set_trainable(bool trainable) {
  for (auto& [_, t] : params) t.requires_grad = trainable;
}

namespace {

class Initializer {
 public:
  Initializer(ModelParams& out, std::uint64_t seed) : out_(out), rng_(seed) {}

  void uniform(const std::string& name, Shape shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<float>(rng_.uniform(-bound, bound));
    t.requires_grad = true;
    out_.params.emplace(name, std::move(t));
  }
  void filled(const std::string& name, Shape shape, float value) {
    Tensor t(std::move(shape), value);
    t.requires_grad = true;
    out_.params.emplace(name, std::move(t));
  }
  void batch_norm(const std::string& prefix, std::size_t ch) {
    filled(prefix + ".gamma", {ch}, 1.0f);
    filled(prefix + ".beta", {ch}, 0.0f);
    out_.buffers.emplace(prefix + ".running_mean", Tensor({ch}, 0.0f));
    out_.buffers.emplace(prefix + ".running_var", Tensor({ch}, 1.0f));
  }
  void conv(const std::string& name, std::size_t cout, std::size_t cin, std::size_t k) {
    uniform(name, {cout, cin, k}, cin * k);
  }

 private:
  ModelParams& out_;
  Rng rng_;
};

std::string block_name(std::size_t b) { return "block" + std::to_string(b); }

// Binds parameters to a tape on first use.
class Binder {
 public:
  Binder(ad::Tape& tape, ModelParams& params) : tape_(tape), params_(params) {}
  Var operator()(const std::string& name) { return tape_.bind(params_.param(name)); }

  Var batch_norm(Var x, const std::string& prefix, Mode mode) {
    ad::BatchNormOptions opt;
    opt.training = mode == Mode::kTrain;
    return ad::batch_norm(x, (*this)(prefix + ".gamma"), (*this)(prefix + ".beta"),
                          params_.buffer(prefix + ".running_mean"), params_.buffer(prefix + ".running_var"), opt);
  }

 private:
  ad::Tape& tape_;
  ModelParams& params_;
};

}  // namespace

ModelParams build_backbone(const BackboneConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams out;
  out.config = config;
  Initializer init(out, seed);
  init.conv("stem.conv.weight", config.stem_channels, config.in_leads, config.stem_kernel);
  init.batch_norm("stem.bn", config.stem_channels);
  std::size_t ch = config.stem_channels;
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    const auto name = block_name(b);
    const std::size_t out_ch = BackboneConfig::downsamples(b) ? ch * 2 : ch;
    init.conv(name + ".conv1.weight", out_ch, ch, config.kernel_size);
    init.batch_norm(name + ".bn1", out_ch);
    init.conv(name + ".conv2.weight", out_ch, out_ch, config.kernel_size);
    init.batch_norm(name + ".bn2", out_ch);
    if (out_ch != ch) {
      init.conv(name + ".skip.weight", out_ch, ch, 1);
      init.batch_norm(name + ".skipbn", out_ch);
    }
    ch = out_ch;
  }
  init.uniform("head.weight", {config.n_classes, ch}, ch);
  init.filled("head.bias", {config.n_classes}, 0.0f);
  init.uniform("proj.weight", {config.proj_dim, ch}, ch);
  init.filled("proj.bias", {config.proj_dim}, 0.0f);
  return out;
}

ForwardResult forward(ad::Tape& tape, ModelParams& params, Var batch, Mode mode) {
  const auto& cfg = params.config;
  const Shape& bs = batch.shape();
  if (bs.size() != 3 || bs[1] != cfg.in_leads) {
    throw ShapeError("forward: expected [B, " + std::to_string(cfg.in_leads) + ", L], got " + ad::shape_str(bs));
  }
  Binder p(tape, params);
  Var h = ad::conv1d(batch, p("stem.conv.weight"), 2, cfg.stem_kernel / 2);
  h = ad::relu(p.batch_norm(h, "stem.bn", mode));
  h = ad::max_pool1d(h, 2, 2);

  const std::size_t pad = cfg.kernel_size / 2;
  for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
    const auto name = block_name(b);
    const bool down = BackboneConfig::downsamples(b);
    const std::size_t stride = down ? 2 : 1;
    Var y = ad::conv1d(h, p(name + ".conv1.weight"), stride, pad);
    y = ad::relu(p.batch_norm(y, name + ".bn1", mode));
    y = ad::conv1d(y, p(name + ".conv2.weight"), 1, pad);
    y = p.batch_norm(y, name + ".bn2", mode);
    Var skip = h;
    if (down) {
      skip = ad::conv1d(h, p(name + ".skip.weight"), stride, 0);
      skip = p.batch_norm(skip, name + ".skipbn", mode);
    }
    h = ad::relu(ad::add(y, skip));
  }
  Var rep = ad::global_avg_pool(h);
  Var probs = ad::sigmoid(ad::affine(rep, p("head.weight"), p("head.bias")));
  return {rep, probs};
}

Var project(ad::Tape& tape, ModelParams& params, Var rep) {
  const Shape& rs = rep.shape();
  if (rs.size() != 2 || rs[1] != params.config.rep_dim()) {
    throw ShapeError("project: expected [B, " + std::to_string(params.config.rep_dim()) + "], got " +
                     ad::shape_str(rs));
  }
  Binder p(tape, params);
  return ad::l2_normalize(ad::affine(rep, p("proj.weight"), p("proj.bias")));
}

}  // namespace leadxfer::model
