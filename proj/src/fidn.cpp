#include "firebench/fidn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

using nlohmann::json;

namespace firebench::fidn {

std::vector<int> ModelConfig::decoder_widths() const {
  std::vector<int> widths;
  for (int i = 0; i < decoder_stages; ++i)
    widths.push_back(std::max(growth_rate, (16 * growth_rate) >> i));
  return widths;
}

void ModelConfig::validate() const {
  if (fine_res < 64 || fine_res % 64 != 0)
    throw Error("ModelConfig: fine_res must be a positive multiple of 64");
  if (growth_rate < 1) throw Error("ModelConfig: growth_rate must be >= 1");
  if (compression <= 0.0 || compression > 1.0)
    throw Error("ModelConfig: compression must be in (0,1]");
  if ((bottleneck_size() << decoder_stages) != fine_res)
    throw Error(
        "ModelConfig: decoder_stages inconsistent with the resolution ratio");
}

ModelConfig model_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("ModelConfig: ") + e.what());
  }
  if (j.contains("model")) j = j["model"];
  ModelConfig cfg;
  cfg.fine_res = j.value("fine_res", cfg.fine_res);
  cfg.growth_rate = j.value("growth_rate", cfg.growth_rate);
  if (j.contains("enc512_blocks")) {
    auto v = j["enc512_blocks"].get<std::vector<int>>();
    if (v.size() != 4) throw Error("ModelConfig: enc512_blocks needs 4 sizes");
    std::copy(v.begin(), v.end(), cfg.enc512_blocks.begin());
  }
  if (j.contains("enc128_blocks")) {
    auto v = j["enc128_blocks"].get<std::vector<int>>();
    if (v.size() != 2) throw Error("ModelConfig: enc128_blocks needs 2 sizes");
    std::copy(v.begin(), v.end(), cfg.enc128_blocks.begin());
  }
  cfg.compression = j.value("compression", cfg.compression);
  cfg.decoder_stages = j.value("decoder_stages", cfg.decoder_stages);
  cfg.head_bias_init = j.value("head_bias_init", cfg.head_bias_init);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json j{{"fine_res", cfg.fine_res},
         {"growth_rate", cfg.growth_rate},
         {"enc512_blocks", cfg.enc512_blocks},
         {"enc128_blocks", cfg.enc128_blocks},
         {"compression", cfg.compression},
         {"decoder_stages", cfg.decoder_stages},
         {"head_bias_init", cfg.head_bias_init},
         {"seed", cfg.seed}};
  return json{{"model", j}}.dump(2);
}

TrainSettings train_settings_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("TrainSettings: ") + e.what());
  }
  TrainSettings s;
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    s.adam.lr = o.value("lr", s.adam.lr);
    s.adam.beta1 = o.value("beta1", s.adam.beta1);
    s.adam.beta2 = o.value("beta2", s.adam.beta2);
    s.adam.eps = o.value("eps", s.adam.eps);
    s.batch = o.value("batch", s.batch);
    s.epochs = o.value("epochs", s.epochs);
    s.lr_step_decay = o.value("lr_step_decay", s.lr_step_decay);
    s.shuffle_seed = o.value("shuffle_seed", s.shuffle_seed);
  }
  return s;
}

const std::vector<ChannelGroup>& channel_groups() {
  // Input scales keep raw physical units out of the first convolution;
  // everything downstream is batch-normalized anyway.
  static const std::vector<ChannelGroup> groups{
      {"biomass_above", {channels::kBiomassAbove}, 100.0},
      {"biomass_below", {channels::kBiomassBelow}, 100.0},
      {"slope", {channels::kSlope}, 45.0},
      {"landcover",
       {channels::kTree, channels::kGrass, channels::kBare, channels::kSnow,
        channels::kWater},
       1.0},
      {"wind", {channels::kWindU, channels::kWindV}, 10.0},
      {"precip", {channels::kPrecip}, 100.0},
  };
  return groups;
}

namespace {

void plan_encoder(const ModelConfig& cfg, int in_res,
                  const std::vector<int>& block_sizes,
                  std::vector<StageShape>* stages, int* out_channels) {
  int res = nn::conv_out_size(in_res, 7, 2, nn::Padding::Same);
  int c = cfg.stem_channels();
  stages->push_back({"stem", c, res});
  res /= 2;
  stages->push_back({"pool", c, res});
  for (size_t i = 0; i < block_sizes.size(); ++i) {
    c += block_sizes[i] * cfg.growth_rate;
    stages->push_back({"dense" + std::to_string(i), c, res});
    c = static_cast<int>(std::floor(c * cfg.compression));
    res /= 2;
    stages->push_back({"trans" + std::to_string(i), c, res});
  }
  *out_channels = c;
}

}  // namespace

ShapePlan shape_plan(const ModelConfig& cfg) {
  cfg.validate();
  ShapePlan plan;
  plan_encoder(cfg, cfg.fine_res,
               {cfg.enc512_blocks.begin(), cfg.enc512_blocks.end()},
               &plan.enc512, &plan.enc512_out_channels);
  plan_encoder(cfg, cfg.coarse_res(),
               {cfg.enc128_blocks.begin(), cfg.enc128_blocks.end()},
               &plan.enc128, &plan.enc128_out_channels);
  plan.concat_channels = plan.enc512_out_channels + 6 * plan.enc128_out_channels;

  int res = plan.enc512.back().spatial;
  if (res != plan.enc128.back().spatial)
    throw Error("shape_plan: encoder families disagree on bottleneck size");
  for (int i = 0; i < cfg.decoder_stages; ++i) {
    res *= 2;
    plan.decoder.push_back({"up" + std::to_string(i),
                            cfg.decoder_widths()[i], res});
  }
  plan.output_res = res;
  return plan;
}

void write_curves_csv(const std::vector<EpochRow>& curves,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << "epoch,split,bce,mse,rrmse,ssim,psnr\n";
  char buf[256];
  for (const auto& r : curves) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.epoch, r.split.c_str(), r.bce, r.mse, r.rrmse, r.ssim,
                  r.psnr);
    f << buf;
  }
}

}  // namespace firebench::fidn
