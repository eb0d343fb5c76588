#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "firebench/checkpoint.hpp"
#include "firebench/metrics.hpp"
#include "firebench/nn.hpp"
#include "firebench/raster.hpp"

// The burnt-area prediction network: one dense-connected encoder over the
// stacked day-0/1/2 masks at the fine resolution, six dense-connected
// encoders over the coarse driver groups, channel-wise concatenation at the
// shared bottleneck size, and a transposed-convolution decoder back up to
// the fine resolution with a sigmoid head.
namespace firebench::fidn {

struct ModelConfig {
  int fine_res = 64;    // mask resolution; 512 at full scale
  int growth_rate = 8;  // channels added per bottleneck; 32 at full scale
  std::array<int, 4> enc512_blocks{6, 12, 24, 6};
  std::array<int, 2> enc128_blocks{6, 12};
  double compression = 0.5;  // transition channel factor
  int decoder_stages = 6;    // fine_res == bottleneck_size() << decoder_stages
  double head_bias_init = -2.0;  // prior logit for sparse positives
  std::uint64_t seed = 1;

  int coarse_res() const { return fine_res / 4; }
  int bottleneck_size() const { return fine_res / 64; }
  int stem_channels() const { return 2 * growth_rate; }
  int bottleneck_width() const { return 4 * growth_rate; }
  std::vector<int> decoder_widths() const;
  void validate() const;
};

ModelConfig model_config_from_json(const std::string& text);
std::string model_config_to_json(const ModelConfig& cfg);

struct TrainSettings {
  nn::AdamConfig adam;  // step 1e-3, decay 0.9/0.999 defaults
  int batch = 4;
  int epochs = 30;
  // Step schedule: the learning rate is halved at 60% and again at 85% of
  // the epoch budget.
  bool lr_step_decay = true;
  std::uint64_t shuffle_seed = 7;
};

TrainSettings train_settings_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Symbolic shape propagation: channel/spatial bookkeeping for every stage,
// computed without allocating tensors.

struct StageShape {
  std::string stage;
  int channels = 0;
  int spatial = 0;
};

struct ShapePlan {
  std::vector<StageShape> enc512;
  std::vector<StageShape> enc128;  // one instance; all six share it
  int enc512_out_channels = 0;
  int enc128_out_channels = 0;
  int concat_channels = 0;
  std::vector<StageShape> decoder;
  int output_res = 0;
};

ShapePlan shape_plan(const ModelConfig& cfg);

// The six coarse input groups, in model order.
struct ChannelGroup {
  std::string name;
  std::vector<std::string> channels;
  double scale;  // values are divided by this before entering the network
};
const std::vector<ChannelGroup>& channel_groups();

// ---------------------------------------------------------------------------
// Parameter bundles.

template <class T>
struct ConvBlockP {  // BN -> ReLU -> conv
  nn::BatchNormParams<T> bn;
  nn::Var<T> w;
};

template <class T>
struct BottleneckP {
  ConvBlockP<T> conv1;  // 1x1, 4k channels
  ConvBlockP<T> conv3;  // 3x3, k channels
};

template <class T>
struct DenseBlockP {
  std::vector<BottleneckP<T>> layers;
};

template <class T>
struct TransitionP {  // 1x1 conv block + avg pool
  ConvBlockP<T> conv;
};

template <class T>
struct EncoderP {
  nn::Var<T> stem_w;  // 7x7 stride 2
  std::vector<DenseBlockP<T>> blocks;
  std::vector<TransitionP<T>> trans;
};

template <class T>
struct DecoderStageP {  // tconv(2,2) -> conv3x3 -> relu
  nn::Var<T> up_w;
  nn::Var<T> conv_w;
  nn::Var<T> conv_b;
};

// Per-event network inputs. Masks are stacked into 3 channels at fine_res;
// driver groups are stacked per group at coarse_res and divided by the
// group's fixed scale.
template <class T>
struct EventTensors {
  nn::Tensor<T> masks;
  std::array<nn::Tensor<T>, 6> env;
  nn::Tensor<T> target;  // final mask, (1,1,fine,fine)
};

template <class T>
struct Prediction {
  std::vector<double> probability;  // row-major fine_res^2
  BurntMask mask;                   // binarized at 0.5, unioned with day 2
};

template <class T>
class FidnModel {
 public:
  explicit FidnModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  // Logits at (batch, 1, fine, fine). Mode selects batch-norm behavior.
  nn::Var<T> forward_logits(nn::Tape<T>& tape, nn::Var<T> masks,
                            const std::array<nn::Var<T>, 6>& env,
                            nn::BnMode mode);

  // Individual encoder forwards (the mask encoder and the six driver-group
  // encoders); exposed for shape and feature tests.
  nn::Var<T> encode_masks(nn::Tape<T>& tape, nn::Var<T> x, nn::BnMode mode) {
    return encode(tape, x, enc512_, mode);
  }
  nn::Var<T> encode_env_group(nn::Tape<T>& tape, int group, nn::Var<T> x,
                              nn::BnMode mode) {
    return encode(tape, x, enc128_[group], mode);
  }

  Prediction<T> predict(const FireEvent& event) const;

  std::vector<std::pair<std::string, nn::Var<T>>> parameters();
  std::vector<std::pair<std::string, nn::Tensor<T>*>> buffers();

  void save(const std::string& path);
  void load(const std::string& path);

 private:
  ModelConfig cfg_;
  EncoderP<T> enc512_;
  std::array<EncoderP<T>, 6> enc128_;
  std::vector<DecoderStageP<T>> decoder_;
  nn::Var<T> head_w_, head_b_;

  nn::Var<T> conv_block(nn::Tape<T>& tape, nn::Var<T> x, ConvBlockP<T>& p,
                        nn::BnMode mode) const;
  nn::Var<T> encode(nn::Tape<T>& tape, nn::Var<T> x, EncoderP<T>& enc,
                    nn::BnMode mode) const;
};

template <class T>
EventTensors<T> event_to_tensors(const FireEvent& event,
                                 const ModelConfig& cfg);

// ---------------------------------------------------------------------------
// Training.

struct EpochRow {
  int epoch = 0;
  std::string split;  // "train" or "val"
  double bce = 0, mse = 0, rrmse = 0, ssim = 0, psnr = 0;
};

struct TrainResult {
  std::vector<EpochRow> curves;
  int best_epoch = -1;
  double best_val_bce = 0;
};

// Minimizes the BCE between predicted probability maps and final masks with
// the adaptive-moment method. Training metrics are aggregated over the
// training batches; validation metrics are full-set evaluations with frozen
// batch-norm statistics. The parameters of the best-validation epoch are
// restored into the model before returning. Throws if the loss becomes
// non-finite.
template <class T>
TrainResult train(FidnModel<T>& model, const std::vector<FireEvent>& train_set,
                  const std::vector<FireEvent>& val_set,
                  const TrainSettings& settings);

void write_curves_csv(const std::vector<EpochRow>& curves,
                      const std::string& path);

}  // namespace firebench::fidn

#include "firebench/fidn_impl.hpp"
