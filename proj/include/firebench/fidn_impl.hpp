#pragma once

// Template implementation detail of fidn.hpp; do not include directly.

#include <cmath>
#include <limits>
#include <numeric>

namespace firebench::fidn {

namespace detail {

template <class T>
nn::Var<T> make_param(nn::Tensor<T> value) {
  auto node = std::make_shared<nn::Node<T>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

// Fan-in-scaled uniform init, bound sqrt(6 / fan_in).
template <class T>
nn::Var<T> make_conv_weight(int oc, int ic, int kh, int kw,
                            SplitMix64& rng) {
  nn::Tensor<T> w({oc, ic, kh, kw});
  double bound = std::sqrt(6.0 / (static_cast<double>(ic) * kh * kw));
  for (auto& v : w.data) v = static_cast<T>(rng.uniform(-bound, bound));
  return make_param(std::move(w));
}

template <class T>
nn::BatchNormParams<T> make_bn(int c) {
  nn::BatchNormParams<T> bn;
  bn.gamma = make_param(nn::Tensor<T>({1, c, 1, 1}, T(1)));
  bn.beta = make_param(nn::Tensor<T>({1, c, 1, 1}, T(0)));
  bn.running_mean = nn::Tensor<T>({1, c, 1, 1}, T(0));
  bn.running_var = nn::Tensor<T>({1, c, 1, 1}, T(1));
  return bn;
}

template <class T>
EncoderP<T> make_encoder(int in_ch, const std::vector<int>& block_sizes,
                         const ModelConfig& cfg, SplitMix64& rng,
                         int* out_channels) {
  EncoderP<T> e;
  e.stem_w = make_conv_weight<T>(cfg.stem_channels(), in_ch, 7, 7, rng);
  int c = cfg.stem_channels();
  for (int len : block_sizes) {
    DenseBlockP<T> db;
    for (int i = 0; i < len; ++i) {
      BottleneckP<T> b;
      b.conv1.bn = make_bn<T>(c);
      b.conv1.w = make_conv_weight<T>(cfg.bottleneck_width(), c, 1, 1, rng);
      b.conv3.bn = make_bn<T>(cfg.bottleneck_width());
      b.conv3.w =
          make_conv_weight<T>(cfg.growth_rate, cfg.bottleneck_width(), 3, 3,
                              rng);
      db.layers.push_back(std::move(b));
      c += cfg.growth_rate;
    }
    e.blocks.push_back(std::move(db));
    TransitionP<T> t;
    t.conv.bn = make_bn<T>(c);
    int oc = static_cast<int>(std::floor(c * cfg.compression));
    t.conv.w = make_conv_weight<T>(oc, c, 1, 1, rng);
    e.trans.push_back(std::move(t));
    c = oc;
  }
  *out_channels = c;
  return e;
}

template <class T>
void collect_conv_block(const std::string& prefix, ConvBlockP<T>& p,
                        std::vector<std::pair<std::string, nn::Var<T>>>& out) {
  out.emplace_back(prefix + ".bn.gamma", p.bn.gamma);
  out.emplace_back(prefix + ".bn.beta", p.bn.beta);
  out.emplace_back(prefix + ".w", p.w);
}

template <class T>
void collect_encoder(const std::string& prefix, EncoderP<T>& e,
                     std::vector<std::pair<std::string, nn::Var<T>>>& out) {
  out.emplace_back(prefix + ".stem.w", e.stem_w);
  for (size_t bi = 0; bi < e.blocks.size(); ++bi) {
    for (size_t li = 0; li < e.blocks[bi].layers.size(); ++li) {
      auto& l = e.blocks[bi].layers[li];
      std::string base =
          prefix + ".b" + std::to_string(bi) + ".l" + std::to_string(li);
      collect_conv_block(base + ".c1", l.conv1, out);
      collect_conv_block(base + ".c3", l.conv3, out);
    }
    collect_conv_block(prefix + ".t" + std::to_string(bi),
                       e.trans[bi].conv, out);
  }
}

template <class T>
void collect_encoder_buffers(
    const std::string& prefix, EncoderP<T>& e,
    std::vector<std::pair<std::string, nn::Tensor<T>*>>& out) {
  for (size_t bi = 0; bi < e.blocks.size(); ++bi) {
    for (size_t li = 0; li < e.blocks[bi].layers.size(); ++li) {
      auto& l = e.blocks[bi].layers[li];
      std::string base =
          prefix + ".b" + std::to_string(bi) + ".l" + std::to_string(li);
      out.emplace_back(base + ".c1.bn.rm", &l.conv1.bn.running_mean);
      out.emplace_back(base + ".c1.bn.rv", &l.conv1.bn.running_var);
      out.emplace_back(base + ".c3.bn.rm", &l.conv3.bn.running_mean);
      out.emplace_back(base + ".c3.bn.rv", &l.conv3.bn.running_var);
    }
    std::string t = prefix + ".t" + std::to_string(bi);
    out.emplace_back(t + ".bn.rm", &e.trans[bi].conv.bn.running_mean);
    out.emplace_back(t + ".bn.rv", &e.trans[bi].conv.bn.running_var);
  }
}

}  // namespace detail

template <class T>
FidnModel<T>::FidnModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  SplitMix64 rng(cfg_.seed);

  int c512 = 0;
  enc512_ = detail::make_encoder<T>(
      3, {cfg_.enc512_blocks.begin(), cfg_.enc512_blocks.end()}, cfg_, rng,
      &c512);

  const auto& groups = channel_groups();
  int c128 = 0;
  for (int g = 0; g < 6; ++g)
    enc128_[g] = detail::make_encoder<T>(
        static_cast<int>(groups[g].channels.size()),
        {cfg_.enc128_blocks.begin(), cfg_.enc128_blocks.end()}, cfg_, rng,
        &c128);

  int c = c512 + 6 * c128;
  for (int w : cfg_.decoder_widths()) {
    DecoderStageP<T> s;
    s.up_w = detail::make_conv_weight<T>(w, c, 2, 2, rng);
    s.conv_w = detail::make_conv_weight<T>(w, w, 3, 3, rng);
    s.conv_b = detail::make_param(nn::Tensor<T>({w, 1, 1, 1}, T(0)));
    decoder_.push_back(std::move(s));
    c = w;
  }
  head_w_ = detail::make_conv_weight<T>(1, c, 1, 1, rng);
  head_b_ = detail::make_param(
      nn::Tensor<T>({1, 1, 1, 1}, static_cast<T>(cfg_.head_bias_init)));
}

template <class T>
nn::Var<T> FidnModel<T>::conv_block(nn::Tape<T>& tape, nn::Var<T> x,
                                    ConvBlockP<T>& p, nn::BnMode mode) const {
  auto y = tape.batch_norm(x, p.bn, mode);
  y = tape.relu(y);
  return tape.conv2d(y, p.w, nullptr, 1, nn::Padding::Same);
}

template <class T>
nn::Var<T> FidnModel<T>::encode(nn::Tape<T>& tape, nn::Var<T> x,
                                EncoderP<T>& enc, nn::BnMode mode) const {
  x = tape.conv2d(x, enc.stem_w, nullptr, 2, nn::Padding::Same);
  x = tape.avg_pool2(x);
  for (size_t bi = 0; bi < enc.blocks.size(); ++bi) {
    for (auto& bottleneck : enc.blocks[bi].layers) {
      auto h = conv_block(tape, x, bottleneck.conv1, mode);
      h = conv_block(tape, h, bottleneck.conv3, mode);
      x = tape.concat_channels({x, h});
    }
    x = conv_block(tape, x, enc.trans[bi].conv, mode);
    x = tape.avg_pool2(x);
  }
  return x;
}

template <class T>
nn::Var<T> FidnModel<T>::forward_logits(nn::Tape<T>& tape, nn::Var<T> masks,
                                        const std::array<nn::Var<T>, 6>& env,
                                        nn::BnMode mode) {
  std::vector<nn::Var<T>> features;
  features.push_back(encode(tape, masks, enc512_, mode));
  for (int g = 0; g < 6; ++g)
    features.push_back(encode(tape, env[g], enc128_[g], mode));
  auto x = tape.concat_channels(features);
  for (auto& stage : decoder_) {
    x = tape.transposed_conv2d(x, stage.up_w);
    x = tape.conv2d(x, stage.conv_w, stage.conv_b, 1, nn::Padding::Same);
    x = tape.relu(x);
  }
  return tape.conv2d(x, head_w_, head_b_, 1, nn::Padding::Same);
}

template <class T>
EventTensors<T> event_to_tensors(const FireEvent& event,
                                 const ModelConfig& cfg) {
  const int fine = cfg.fine_res, coarse = cfg.coarse_res();
  for (const auto& m : event.day_masks)
    if (m.spec.height != fine || m.spec.width != fine)
      throw Error("event '" + event.name +
                  "': mask resolution mismatch with ModelConfig");
  if (event.env.spec.height != coarse || event.env.spec.width != coarse)
    throw Error("event '" + event.name +
                "': env resolution mismatch with ModelConfig");

  EventTensors<T> t;
  t.masks = nn::Tensor<T>({1, 3, fine, fine});
  for (int d = 0; d < 3; ++d)
    for (int i = 0; i < fine * fine; ++i)
      t.masks.data[static_cast<size_t>(d) * fine * fine + i] =
          static_cast<T>(event.day_masks[d].cells[i]);

  const auto& groups = channel_groups();
  for (int g = 0; g < 6; ++g) {
    int nc = static_cast<int>(groups[g].channels.size());
    t.env[g] = nn::Tensor<T>({1, nc, coarse, coarse});
    for (int c = 0; c < nc; ++c) {
      const EnvChannel& ch = event.env.channel(groups[g].channels[c]);
      T* dst = t.env[g].plane(0, c);
      for (int i = 0; i < coarse * coarse; ++i)
        dst[i] = static_cast<T>(ch.values[i] / groups[g].scale);
    }
  }

  t.target = nn::Tensor<T>({1, 1, fine, fine});
  for (int i = 0; i < fine * fine; ++i)
    t.target.data[i] = static_cast<T>(event.final_mask.cells[i]);
  return t;
}

template <class T>
Prediction<T> FidnModel<T>::predict(const FireEvent& event) const {
  auto* self = const_cast<FidnModel<T>*>(this);  // eval mode mutates nothing
  EventTensors<T> in = event_to_tensors<T>(event, cfg_);
  nn::Tape<T> tape;
  tape.set_recording(false);
  auto masks = tape.leaf(std::move(in.masks), false);
  std::array<nn::Var<T>, 6> env;
  for (int g = 0; g < 6; ++g) env[g] = tape.leaf(std::move(in.env[g]), false);
  auto logits = self->forward_logits(tape, masks, env, nn::BnMode::Eval);

  Prediction<T> out;
  const int n = cfg_.fine_res * cfg_.fine_res;
  out.probability.resize(n);
  for (int i = 0; i < n; ++i)
    out.probability[i] =
        static_cast<double>(nn::stable_sigmoid(logits->value.data[i]));
  out.mask = binarize(out.probability, event.final_mask.spec, 0.5);
  // A fire cannot unburn its own history: union with the day-2 mask.
  for (int i = 0; i < n; ++i)
    if (event.day_masks[2].cells[i]) out.mask.cells[i] = 1;
  return out;
}

template <class T>
std::vector<std::pair<std::string, nn::Var<T>>> FidnModel<T>::parameters() {
  std::vector<std::pair<std::string, nn::Var<T>>> out;
  detail::collect_encoder("enc512", enc512_, out);
  for (int g = 0; g < 6; ++g)
    detail::collect_encoder("enc128_" + std::to_string(g), enc128_[g], out);
  for (size_t i = 0; i < decoder_.size(); ++i) {
    std::string base = "dec" + std::to_string(i);
    out.emplace_back(base + ".up.w", decoder_[i].up_w);
    out.emplace_back(base + ".conv.w", decoder_[i].conv_w);
    out.emplace_back(base + ".conv.b", decoder_[i].conv_b);
  }
  out.emplace_back("head.w", head_w_);
  out.emplace_back("head.b", head_b_);
  return out;
}

template <class T>
std::vector<std::pair<std::string, nn::Tensor<T>*>> FidnModel<T>::buffers() {
  std::vector<std::pair<std::string, nn::Tensor<T>*>> out;
  detail::collect_encoder_buffers("enc512", enc512_, out);
  for (int g = 0; g < 6; ++g)
    detail::collect_encoder_buffers("enc128_" + std::to_string(g), enc128_[g],
                                    out);
  return out;
}

template <class T>
void FidnModel<T>::save(const std::string& path) {
  std::vector<ckpt::TensorRecord> records;
  auto add = [&](const std::string& name, const nn::Tensor<T>& t) {
    ckpt::TensorRecord r;
    r.name = name;
    r.dtype = sizeof(T) == 4 ? ckpt::kF32 : ckpt::kF64;
    r.dims = {static_cast<std::uint64_t>(t.shape.n),
              static_cast<std::uint64_t>(t.shape.c),
              static_cast<std::uint64_t>(t.shape.h),
              static_cast<std::uint64_t>(t.shape.w)};
    r.data.assign(t.data.begin(), t.data.end());
    records.push_back(std::move(r));
  };
  for (auto& [name, p] : parameters()) add(name, p->value);
  for (auto& [name, b] : buffers()) add(name, *b);
  ckpt::write_checkpoint(path, records);
}

template <class T>
void FidnModel<T>::load(const std::string& path) {
  auto records = ckpt::read_checkpoint(path);
  auto apply = [&](const std::string& name, nn::Tensor<T>& t) {
    for (const auto& r : records)
      if (r.name == name) {
        if (r.count() != t.data.size())
          throw Error(path + ": tensor '" + name + "' has wrong size");
        for (size_t i = 0; i < t.data.size(); ++i)
          t.data[i] = static_cast<T>(r.data[i]);
        return;
      }
    throw Error(path + ": missing tensor '" + name + "'");
  };
  for (auto& [name, p] : parameters()) apply(name, p->value);
  for (auto& [name, b] : buffers()) apply(name, *b);
}

// ---------------------------------------------------------------------------
// Training.

namespace detail {

template <class T>
struct BatchBuffers {
  nn::Tensor<T> masks;
  std::array<nn::Tensor<T>, 6> env;
  nn::Tensor<T> target;
};

template <class T>
BatchBuffers<T> assemble_batch(const std::vector<EventTensors<T>>& samples,
                               const std::vector<int>& idx, int lo, int hi) {
  BatchBuffers<T> b;
  const int n = hi - lo;
  const auto& first = samples[idx[lo]];
  auto batched = [n](const nn::Tensor<T>& t) {
    nn::Shape s = t.shape;
    s.n = n;
    return nn::Tensor<T>(s);
  };
  b.masks = batched(first.masks);
  for (int g = 0; g < 6; ++g) b.env[g] = batched(first.env[g]);
  b.target = batched(first.target);
  for (int k = 0; k < n; ++k) {
    const auto& s = samples[idx[lo + k]];
    std::copy(s.masks.data.begin(), s.masks.data.end(),
              b.masks.plane(k, 0));
    for (int g = 0; g < 6; ++g)
      std::copy(s.env[g].data.begin(), s.env[g].data.end(),
                b.env[g].plane(k, 0));
    std::copy(s.target.data.begin(), s.target.data.end(),
              b.target.plane(k, 0));
  }
  return b;
}

// Five-metric accumulation helper.
struct MetricSums {
  double bce = 0, mse = 0, rrmse = 0, ssim = 0, psnr = 0;
  int n = 0;

  void add(const metrics::MetricReport& r) {
    bce += r.bce;
    mse += r.mse;
    rrmse += r.rrmse;
    ssim += r.ssim;
    psnr += r.psnr;
    ++n;
  }
  EpochRow row(int epoch, const std::string& split) const {
    EpochRow r;
    r.epoch = epoch;
    r.split = split;
    if (n) {
      r.bce = bce / n;
      r.mse = mse / n;
      r.rrmse = rrmse / n;
      r.ssim = ssim / n;
      r.psnr = psnr / n;
    }
    return r;
  }
};

template <class T>
void per_sample_metrics(const nn::Tensor<T>& logits,
                        const std::vector<const BurntMask*>& masks,
                        const std::vector<int>& idx, int lo, int hi,
                        MetricSums& sums) {
  const int plane = logits.shape.h * logits.shape.w;
  std::vector<double> prob(plane);
  for (int k = 0; k < hi - lo; ++k) {
    const T* z = logits.plane(k, 0);
    for (int i = 0; i < plane; ++i)
      prob[i] = static_cast<double>(nn::stable_sigmoid(z[i]));
    sums.add(metrics::evaluate(*masks[idx[lo + k]], prob));
  }
}

}  // namespace detail

template <class T>
TrainResult train(FidnModel<T>& model, const std::vector<FireEvent>& train_set,
                  const std::vector<FireEvent>& val_set,
                  const TrainSettings& settings) {
  if (train_set.empty()) throw Error("train: empty training set");
  const ModelConfig& cfg = model.config();

  std::vector<EventTensors<T>> train_t, val_t;
  std::vector<const BurntMask*> train_masks, val_masks;
  for (const auto& e : train_set) {
    train_t.push_back(event_to_tensors<T>(e, cfg));
    train_masks.push_back(&e.final_mask);
  }
  for (const auto& e : val_set) {
    val_t.push_back(event_to_tensors<T>(e, cfg));
    val_masks.push_back(&e.final_mask);
  }

  auto named_params = model.parameters();
  std::vector<nn::Var<T>> params;
  for (auto& [name, p] : named_params) params.push_back(p);
  auto buffers = model.buffers();
  nn::Adam<T> adam(params, settings.adam);

  SplitMix64 shuffle_rng(settings.shuffle_seed);
  std::vector<int> order(train_t.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> val_order(val_t.size());
  std::iota(val_order.begin(), val_order.end(), 0);

  TrainResult result;
  result.best_val_bce = std::numeric_limits<double>::infinity();
  std::vector<std::vector<T>> best_params, best_buffers;

  const int n = static_cast<int>(train_t.size());
  const int batch = std::max(1, settings.batch);

  for (int epoch = 1; epoch <= settings.epochs; ++epoch) {
    if (settings.lr_step_decay) {
      double scale = 1.0;
      if (epoch > settings.epochs * 0.85)
        scale = 0.25;
      else if (epoch > settings.epochs * 0.6)
        scale = 0.5;
      adam.set_lr(settings.adam.lr * scale);
    }
    // Fisher-Yates with the seeded generator.
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(shuffle_rng.below(i + 1));
      std::swap(order[i], order[j]);
    }

    detail::MetricSums train_sums;
    for (int lo = 0; lo < n; lo += batch) {
      int hi = std::min(lo + batch, n);
      auto b = detail::assemble_batch(train_t, order, lo, hi);
      nn::Tape<T> tape;
      auto masks = tape.leaf(std::move(b.masks), false);
      std::array<nn::Var<T>, 6> env;
      for (int g = 0; g < 6; ++g)
        env[g] = tape.leaf(std::move(b.env[g]), false);
      auto logits = model.forward_logits(tape, masks, env, nn::BnMode::Train);
      auto loss = tape.bce_with_logits(logits, b.target);
      if (!std::isfinite(static_cast<double>(loss->value.data[0])))
        throw Error("train: loss diverged (non-finite) at epoch " +
                    std::to_string(epoch));
      adam.zero_grad();
      tape.backward(loss);
      adam.step();
      detail::per_sample_metrics(logits->value, train_masks, order, lo, hi,
                                 train_sums);
    }
    result.curves.push_back(train_sums.row(epoch, "train"));

    if (!val_t.empty()) {
      detail::MetricSums val_sums;
      const int vb = 8;
      for (int lo = 0; lo < static_cast<int>(val_t.size()); lo += vb) {
        int hi = std::min(lo + vb, static_cast<int>(val_t.size()));
        auto b = detail::assemble_batch(val_t, val_order, lo, hi);
        nn::Tape<T> tape;
        tape.set_recording(false);
        auto masks = tape.leaf(std::move(b.masks), false);
        std::array<nn::Var<T>, 6> env;
        for (int g = 0; g < 6; ++g)
          env[g] = tape.leaf(std::move(b.env[g]), false);
        auto logits = model.forward_logits(tape, masks, env, nn::BnMode::Eval);
        detail::per_sample_metrics(logits->value, val_masks, val_order, lo, hi,
                                   val_sums);
      }
      EpochRow vrow = val_sums.row(epoch, "val");
      result.curves.push_back(vrow);
      if (vrow.bce < result.best_val_bce) {
        result.best_val_bce = vrow.bce;
        result.best_epoch = epoch;
        best_params.clear();
        best_buffers.clear();
        for (auto& p : params) best_params.push_back(p->value.data);
        for (auto& [name, b] : buffers) best_buffers.push_back(b->data);
      }
    }
  }

  if (!best_params.empty()) {
    for (size_t i = 0; i < params.size(); ++i)
      params[i]->value.data = best_params[i];
    for (size_t i = 0; i < buffers.size(); ++i)
      buffers[i].second->data = best_buffers[i];
  }
  return result;
}

}  // namespace firebench::fidn
