// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failed criteria. Criteria 6-8 share one trained model and one
// benchmark report.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "firebench/bench.hpp"
#include "firebench/fidn.hpp"
#include "firebench/metrics.hpp"
#include "firebench/raster_io.hpp"
#include "firebench/synth.hpp"

using namespace firebench;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Independent oracles (duplicated from the unit suites on purpose; the
// acceptance binary must not trust implementation-adjacent helpers).

double oracle_bce(const BurntMask& t, const std::vector<double>& p) {
  double total = 0;
  for (int i = 0; i < t.spec.cells(); ++i) {
    double pv = std::min(std::max(p[i], 1e-7), 1.0 - 1e-7);
    double tv = t.cells[i];
    total -= tv * std::log(pv) + (1.0 - tv) * std::log(1.0 - pv);
  }
  return total / t.spec.cells();
}

double oracle_mse(const BurntMask& t, const std::vector<double>& p) {
  double total = 0;
  for (int i = 0; i < t.spec.cells(); ++i)
    total += std::pow(t.cells[i] - p[i], 2);
  return total / t.spec.cells();
}

double oracle_rrmse(const BurntMask& t, const std::vector<double>& p) {
  double denom = 0;
  for (double v : p) denom += std::pow(v, 2);
  return std::sqrt(oracle_mse(t, p) / denom);
}

double oracle_ssim(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  double mx = sx / n, my = sy / n;
  double vx = sxx / n - mx * mx, vy = syy / n - my * my;
  double cov = sxy / n - mx * my;
  return ((2 * mx * my + 1e-4) * (2 * cov + 9e-4)) /
         ((mx * mx + my * my + 1e-4) * (vx + vy + 9e-4));
}

// ---------------------------------------------------------------------------
// Criterion 1: metrics against loop oracles, 100 random 16x16 instances.

void criterion_metrics(Check& c) {
  SplitMix64 rng(1001);
  GridSpec spec{16, 16, 0.026};
  for (int trial = 0; trial < 100; ++trial) {
    BurntMask t(spec);
    for (auto& v : t.cells) v = rng.uniform() < 0.5 ? 1 : 0;
    if (t.count() == 0) t.cells[0] = 1;
    std::vector<double> p(spec.cells());
    for (auto& v : p) v = rng.uniform(1e-4, 1.0);

    c.require(std::abs(metrics::bce(t, p) - oracle_bce(t, p)) < 1e-9, "bce");
    c.require(std::abs(metrics::mse(t, p) - oracle_mse(t, p)) < 1e-9, "mse");
    c.require(std::abs(metrics::rrmse(t, p) - oracle_rrmse(t, p)) < 1e-9,
              "rrmse");
    c.require(std::abs(metrics::ssim(t, p) -
                       oracle_ssim(metrics::to_field(t), p)) < 1e-9,
              "ssim");
    double mse = metrics::mse(t, p);
    c.require(std::abs(metrics::psnr(t, p) - 10.0 * std::log10(1.0 / mse)) <
                  1e-9,
              "psnr/mse identity");

    std::vector<double> x(spec.cells());
    for (auto& v : x) v = rng.uniform();
    c.require(std::abs(metrics::ssim(x, x, 16, 16) - 1.0) < 1e-12,
              "ssim(x,x) = 1");
  }
}

// ---------------------------------------------------------------------------
// Criterion 2: finite-difference integrity of every op and the full model.

template <class Build>
double fd_worst_rel(const Build& build, nn::Var<double> leaf, double h) {
  nn::Tape<double> tape;
  auto loss = build(tape);
  leaf->ensure_grad();
  leaf->zero_grad();
  tape.backward(loss);
  double worst = 0;
  for (size_t i = 0; i < leaf->value.data.size(); ++i) {
    double keep = leaf->value.data[i];
    leaf->value.data[i] = keep + h;
    nn::Tape<double> tp;
    tp.set_recording(false);
    double up = build(tp)->value.data[0];
    leaf->value.data[i] = keep - h;
    nn::Tape<double> tm;
    tm.set_recording(false);
    double down = build(tm)->value.data[0];
    leaf->value.data[i] = keep;
    double fd = (up - down) / (2 * h);
    double an = leaf->grad.data[i];
    worst = std::max(worst, std::abs(fd - an) /
                                std::max({std::abs(fd), std::abs(an), 1e-6}));
  }
  return worst;
}

nn::Var<double> rand_node(nn::Shape s, SplitMix64& rng, bool off_kink = false) {
  auto n = std::make_shared<nn::Node<double>>();
  n->value = nn::Tensor<double>(s);
  for (auto& v : n->value.data) {
    do {
      v = rng.uniform(-1, 1);
    } while (off_kink && std::abs(v) < 0.05);
  }
  n->requires_grad = true;
  return n;
}

void criterion_gradients(Check& c) {
  const double tol = 1e-4;
  for (int seed = 0; seed < 5; ++seed) {
    SplitMix64 rng(2000 + seed);
    {
      auto x = rand_node({2, 2, 6, 6}, rng);
      auto w = rand_node({3, 2, 3, 3}, rng);
      auto b = rand_node({3, 1, 1, 1}, rng);
      auto build = [&](nn::Tape<double>& t) {
        return t.sum(t.square(t.conv2d(x, w, b, 2, nn::Padding::Same)));
      };
      c.require(fd_worst_rel(build, x, 1e-5) < tol, "conv2d dX");
      c.require(fd_worst_rel(build, w, 1e-5) < tol, "conv2d dW");
      c.require(fd_worst_rel(build, b, 1e-5) < tol, "conv2d dB");
    }
    {
      auto x = rand_node({1, 2, 3, 3}, rng);
      auto w = rand_node({2, 2, 2, 2}, rng);
      auto build = [&](nn::Tape<double>& t) {
        return t.sum(t.square(t.transposed_conv2d(x, w)));
      };
      c.require(fd_worst_rel(build, x, 1e-5) < tol, "tconv dX");
      c.require(fd_worst_rel(build, w, 1e-5) < tol, "tconv dW");
    }
    {
      auto x = rand_node({2, 3, 4, 4}, rng);
      nn::BatchNormParams<double> bn;
      nn::Tape<double> init;
      bn.gamma = rand_node({1, 3, 1, 1}, rng);
      for (auto& v : bn.gamma->value.data) v = std::abs(v) + 0.5;
      bn.beta = rand_node({1, 3, 1, 1}, rng);
      bn.running_mean = nn::Tensor<double>({1, 3, 1, 1});
      bn.running_var = nn::Tensor<double>({1, 3, 1, 1}, 1.0);
      for (auto mode : {nn::BnMode::Train, nn::BnMode::Eval}) {
        auto build = [&](nn::Tape<double>& t) {
          return t.sum(t.square(t.sigmoid(t.batch_norm(x, bn, mode))));
        };
        c.require(fd_worst_rel(build, x, 1e-5) < tol, "batch_norm dX");
        c.require(fd_worst_rel(build, bn.gamma, 1e-5) < tol, "batch_norm dG");
        c.require(fd_worst_rel(build, bn.beta, 1e-5) < tol, "batch_norm dB");
      }
    }
    {
      auto x = rand_node({1, 2, 4, 4}, rng, true);
      auto y = rand_node({1, 3, 4, 4}, rng);
      auto build = [&](nn::Tape<double>& t) {
        auto cat = t.concat_channels({t.relu(x), t.sigmoid(y)});
        return t.sum(t.square(t.avg_pool2(cat)));
      };
      c.require(fd_worst_rel(build, x, 1e-5) < tol, "relu/pool/concat dX");
      c.require(fd_worst_rel(build, y, 1e-5) < tol, "sigmoid dX");
    }
    {
      auto z = rand_node({2, 1, 3, 3}, rng);
      nn::Tensor<double> target({2, 1, 3, 3});
      for (auto& v : target.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
      auto build = [&](nn::Tape<double>& t) {
        return t.bce_with_logits(z, target);
      };
      c.require(fd_worst_rel(build, z, 1e-5) < tol, "bce_with_logits dZ");
    }
  }

  // Full desk-scale model, frozen batch norm, 50 random parameters.
  wb::ScenarioConfig scfg;
  scfg.seed = 77;
  auto events = wb::gen_dataset(scfg, 1);
  fidn::ModelConfig mcfg;  // 64x64, k = 8
  fidn::FidnModel<double> model(mcfg);
  auto in = fidn::event_to_tensors<double>(events[0], mcfg);
  auto forward_loss = [&](nn::Tape<double>& tape) {
    auto masks = tape.leaf(in.masks, false);
    std::array<nn::Var<double>, 6> env;
    for (int g = 0; g < 6; ++g) env[g] = tape.leaf(in.env[g], false);
    auto logits = model.forward_logits(tape, masks, env, nn::BnMode::Eval);
    return tape.bce_with_logits(logits, in.target);
  };
  auto params = model.parameters();
  {
    nn::Tape<double> tape;
    auto loss = forward_loss(tape);
    for (auto& [name, p] : params) {
      p->ensure_grad();
      p->zero_grad();
    }
    tape.backward(loss);
  }
  SplitMix64 rng(4242);
  double worst = 0;
  const double h = 1e-6;  // keeps central differences off the relu kinks
  for (int trial = 0; trial < 50; ++trial) {
    auto& [name, p] = params[rng.below(params.size())];
    size_t i = rng.below(p->value.data.size());
    double keep = p->value.data[i];
    p->value.data[i] = keep + h;
    nn::Tape<double> tp;
    tp.set_recording(false);
    double up = forward_loss(tp)->value.data[0];
    p->value.data[i] = keep - h;
    nn::Tape<double> tm;
    tm.set_recording(false);
    double down = forward_loss(tm)->value.data[0];
    p->value.data[i] = keep;
    double fd = (up - down) / (2 * h);
    double an = p->grad.data[i];
    // Sub-floor gradients sit at the finite-difference resolution limit
    // and are compared absolutely against it.
    worst = std::max(worst, std::abs(fd - an) /
                                std::max({std::abs(fd), std::abs(an), 1e-4}));
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "full-model worst rel err %.3g", worst);
  c.require(worst < tol, buf);
  if (c.ok) c.detail = buf;
}

// ---------------------------------------------------------------------------
// Criterion 3: paper-scale shape conformance by symbolic propagation.

void criterion_shapes(Check& c) {
  fidn::ModelConfig cfg;
  cfg.fine_res = 512;
  cfg.growth_rate = 32;
  fidn::ShapePlan plan = fidn::shape_plan(cfg);
  c.require(plan.enc512.back().spatial == 8, "encoder-512 output 8x8");
  c.require(plan.enc128.back().spatial == 8, "encoder-128 output 8x8");
  c.require(plan.output_res == 512, "decoder output 512x512");
  c.require(plan.decoder.back().spatial == 512, "decoder final stage 512");
  c.require(plan.concat_channels ==
                plan.enc512_out_channels + 6 * plan.enc128_out_channels,
            "concat channel arithmetic");
  c.detail = "enc512 " + std::to_string(plan.enc512_out_channels) + "ch@8, " +
             "enc128 " + std::to_string(plan.enc128_out_channels) +
             "ch@8, concat " + std::to_string(plan.concat_channels);
}

// ---------------------------------------------------------------------------
// Criterion 4: certain-spread CA equals a BFS oracle, 50 scenarios.

void criterion_ca(Check& c) {
  SplitMix64 rng(3001);
  int tested = 0;
  while (tested < 50) {
    int h = 6 + int(rng.below(11)), w = 6 + int(rng.below(11));
    GridSpec spec{h, w, 0.026};
    EnvStack env;
    env.spec = spec;
    auto channel = [&](const char* name, float v) {
      env.channels.push_back(EnvChannel{
          name, channels::units_of(name),
          std::vector<float>(static_cast<size_t>(spec.cells()), v)});
    };
    channel(channels::kTree, 0.5f);
    channel(channels::kGrass, 0.3f);
    channel(channels::kWater, 0.0f);
    channel(channels::kSnow, 0.0f);
    channel(channels::kBare, 0.0f);
    channel(channels::kSlope, 0.0f);
    channel(channels::kWindU, 0.0f);
    channel(channels::kWindV, 0.0f);
    auto& water = env.channels[2].values;
    for (auto& v : water) v = rng.uniform() < 0.2 ? 1.0f : 0.0f;

    ca::CAConfig cfg;
    cfg.p_h = 1.0;
    cfg.veg_factor = ca::FactorMap{{}, {0.0}};
    cfg.den_factor = ca::FactorMap{{}, {0.0}};
    cfg.neighborhood = ca::Neighborhood::VonNeumann4;
    cfg.seed = rng.next();

    ca::Simulation sim(spec, env, cfg);
    int sr = int(rng.below(h)), sc = int(rng.below(w));
    if (sim.cells()[sr * w + sc] != ca::CellState::Combustible) continue;
    BurntMask seed(spec);
    seed.set(sr, sc, 1);
    sim.seed_burning(seed);
    int steps = 1 + int(rng.below(8));
    for (int s = 0; s < steps; ++s) sim.step();

    // BFS distance oracle over combustible cells.
    std::vector<int> dist(spec.cells(), -1);
    std::deque<int> queue;
    dist[sr * w + sc] = 0;
    queue.push_back(sr * w + sc);
    ca::Simulation fresh(spec, env, cfg);
    const auto& offs = ca::neighbor_offsets(ca::Neighborhood::VonNeumann4);
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      int r = cur / w, col = cur % w;
      for (const auto& [dr, dc] : offs) {
        int nr = r + dr, nc = col + dc;
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
        int n = nr * w + nc;
        if (dist[n] >= 0 ||
            fresh.cells()[n] != ca::CellState::Combustible)
          continue;
        dist[n] = dist[cur] + 1;
        queue.push_back(n);
      }
    }
    BurntMask got = sim.burnt_mask();
    for (int i = 0; i < spec.cells(); ++i) {
      std::uint8_t expected = (dist[i] >= 0 && dist[i] <= steps) ? 1 : 0;
      c.require(got.cells[i] == expected, "CA/BFS mismatch");
    }
    ++tested;
  }
}

// ---------------------------------------------------------------------------
// Criterion 5: MTT equals Bellman-Ford; scaling homogeneity is exact.

void criterion_mtt(Check& c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  SplitMix64 rng(4001);
  for (int trial = 0; trial < 50; ++trial) {
    int h = 4 + int(rng.below(9)), w = 4 + int(rng.below(9));
    GridSpec spec{h, w, 0.026};
    mtt::RosField ros{spec, std::vector<double>(spec.cells())};
    for (auto& v : ros.ros)
      v = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.2, 8.0);
    BurntMask ignition(spec);
    ignition.set(int(rng.below(h)), int(rng.below(w)), 1);
    auto nb = trial % 3 == 0   ? mtt::Neighborhood::N4
              : trial % 3 == 1 ? mtt::Neighborhood::N8
                               : mtt::Neighborhood::N16Knight;

    mtt::ArrivalField got = mtt::mtt_arrival(ros, ignition, nb);

    // Bellman-Ford to fixpoint.
    std::vector<std::pair<int, int>> offs;
    if (nb != mtt::Neighborhood::N4) {
      offs = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
              {0, 1},   {1, -1}, {1, 0},  {1, 1}};
      if (nb == mtt::Neighborhood::N16Knight)
        for (auto [a, b] : std::vector<std::pair<int, int>>{{-2, -1}, {-2, 1},
                                                            {-1, -2}, {-1, 2},
                                                            {1, -2},  {1, 2},
                                                            {2, -1},  {2, 1}})
          offs.emplace_back(a, b);
    } else {
      offs = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
    }
    std::vector<double> bf(spec.cells(), inf);
    for (int i = 0; i < spec.cells(); ++i)
      if (ignition.cells[i]) bf[i] = 0.0;
    const double cell_m = spec.cell_size_m();
    bool changed = true;
    while (changed) {
      changed = false;
      for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col) {
          int m = r * w + col;
          if (bf[m] == inf || ros.ros[m] <= 0) continue;
          for (auto [dr, dc] : offs) {
            int nr = r + dr, nc = col + dc;
            if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
            int n = nr * w + nc;
            if (ros.ros[n] <= 0) continue;
            double dist = cell_m * std::sqrt(double(dr * dr + dc * dc));
            double hm =
                2.0 * ros.ros[m] * ros.ros[n] / (ros.ros[m] + ros.ros[n]);
            double cand = bf[m] + dist / hm;
            if (cand < bf[n]) {
              bf[n] = cand;
              changed = true;
            }
          }
        }
    }
    for (int i = 0; i < spec.cells(); ++i) {
      if (bf[i] == inf)
        c.require(got.t_arrive[i] == inf, "MTT reachability mismatch");
      else
        c.require(std::abs(got.t_arrive[i] - bf[i]) < 1e-9,
                  "MTT/Bellman-Ford mismatch");
    }

    // Homogeneity: doubling ros exactly halves arrival times.
    mtt::RosField scaled = ros;
    for (auto& v : scaled.ros) v *= 2.0;
    mtt::ArrivalField half = mtt::mtt_arrival(scaled, ignition, nb);
    for (int i = 0; i < spec.cells(); ++i) {
      if (got.t_arrive[i] == inf)
        c.require(half.t_arrive[i] == inf, "homogeneity reachability");
      else
        c.require(half.t_arrive[i] == got.t_arrive[i] / 2.0,
                  "homogeneity not exact");
    }
  }
}

// ---------------------------------------------------------------------------
// Criteria 6-8 share the trained model and the benchmark report.

struct SurrogateArtifacts {
  std::vector<FireEvent> test_events;
  fidn::FidnModel<float>* model = nullptr;
  wb::BenchReport report;
  wb::ScenarioConfig scenario;
};

void criterion_surrogate(Check& c, SurrogateArtifacts& art) {
  wb::ScenarioConfig scfg;
  scfg.seed = 20260809;
  art.scenario = scfg;
  const int n_train = 200, n_val = 15, n_test = 30;
  auto events = wb::gen_dataset(scfg, n_train + n_val + n_test);
  auto split = wb::chronological_split(events, n_train, n_val, n_test);
  std::vector<FireEvent> train_ev, val_ev;
  for (int i : split.train) train_ev.push_back(events[i]);
  for (int i : split.val) val_ev.push_back(events[i]);
  for (int i : split.test) art.test_events.push_back(events[i]);

  auto aug = wb::augment(train_ev);
  c.require(aug.size() == 4 * train_ev.size(), "augmentation x4");

  fidn::ModelConfig mcfg;  // desk defaults
  static fidn::FidnModel<float> model(mcfg);
  art.model = &model;
  fidn::TrainSettings ts;
  ts.epochs = 16;
  auto result = fidn::train(model, aug, val_ev, ts);

  double mse_f = 0, mse_p = 0, ssim_f = 0, ssim_p = 0;
  int wins = 0;
  for (const auto& ev : art.test_events) {
    auto pred = model.predict(ev);
    auto rf = metrics::evaluate(ev.final_mask, pred.mask);
    auto rp = metrics::evaluate(ev.final_mask, ev.day_masks[2]);
    mse_f += rf.mse;
    mse_p += rp.mse;
    ssim_f += rf.ssim;
    ssim_p += rp.ssim;
    if (rf.mse < rp.mse) ++wins;
  }
  const int n = static_cast<int>(art.test_events.size());
  mse_f /= n;
  mse_p /= n;
  ssim_f /= n;
  ssim_p /= n;

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%d train events (x4 = %zu samples), %d epochs, best val bce "
                "%.3f @%d | test MSE %.4f vs persistence %.4f, SSIM %.3f vs "
                "%.3f, wins %d/%d",
                n_train, aug.size(), ts.epochs, result.best_val_bce,
                result.best_epoch, mse_f, mse_p, ssim_f, ssim_p, wins, n);
  c.require(mse_f < mse_p, "mean MSE not below persistence");
  c.require(wins * 5 >= n * 4, "fewer than 80% per-event wins");
  c.require(ssim_f > ssim_p, "mean SSIM not above persistence");
  if (c.ok) c.detail = buf;
  else c.detail += std::string(" [") + buf + "]";
}

void criterion_speed(Check& c, SurrogateArtifacts& art) {
  if (!art.model) {
    c.require(false, "no trained model from criterion 6");
    return;
  }
  wb::BenchConfig bcfg;  // harness defaults: ensemble 100
  bcfg.ca_cfg = art.scenario.physics;
  bcfg.ca_cfg.seed = 555;
  bcfg.mtt_cfg = art.scenario.mtt_physics;
  auto* model = art.model;
  art.report = wb::bench(art.test_events, bcfg, [model](const FireEvent& ev) {
    return model->predict(ev).mask;
  });

  double sum_fidn = 0, sum_ca = 0;
  int n_fidn = 0, n_ca = 0;
  for (const auto& row : art.report.rows) {
    c.require(row.ok, "bench row failed: " + row.error);
    if (row.model == "fidn") {
      sum_fidn += row.runtime_s;
      ++n_fidn;
    }
    if (row.model == "ca") {
      sum_ca += row.runtime_s;
      ++n_ca;
    }
  }
  c.require(n_fidn > 0 && n_ca > 0, "missing model rows");
  double mean_fidn = sum_fidn / std::max(n_fidn, 1);
  double mean_ca = sum_ca / std::max(n_ca, 1);
  double ratio = mean_ca / mean_fidn;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "mean inference %.1f ms vs CA ensemble run %.1f ms -> %.1fx "
                "(threshold 10x)",
                mean_fidn * 1e3, mean_ca * 1e3, ratio);
  c.require(ratio >= 10.0, buf);
  if (c.ok) c.detail = buf;
}

void criterion_protocol(Check& c, SurrogateArtifacts& art) {
  if (art.report.rows.empty()) {
    c.require(false, "no benchmark report from criterion 7");
    return;
  }
  std::map<std::string, std::string> hash_by_event;
  for (const auto& row : art.report.rows) {
    auto it = hash_by_event.find(row.event);
    if (it == hash_by_event.end())
      hash_by_event[row.event] = row.input_hash;
    else
      c.require(it->second == row.input_hash,
                "models consumed different inputs for " + row.event);
    if (row.model == "ca" || row.model == "mtt")
      c.require(row.duration_given,
                row.model + " did not receive the true duration");
    else
      c.require(!row.duration_given, row.model + " received the duration");
  }
  c.detail = std::to_string(hash_by_event.size()) +
             " events, identical input hashes across models; durations to "
             "ca/mtt only";
}

// ---------------------------------------------------------------------------
// Criterion 9: augmentation arithmetic through on-disk manifests.

void criterion_augmentation(Check& c) {
  wb::ScenarioConfig scfg;
  scfg.fine_spec = GridSpec{32, 32, 0.026};
  scfg.min_final_area_px = 40;
  scfg.seed = 9001;
  auto events = wb::gen_dataset(scfg, 303);
  auto split = wb::chronological_split(events, 243, 30, 30);

  auto dir = std::filesystem::temp_directory_path() / "firebench_acceptance9";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> manifests;
  for (int i : split.train) {
    const auto& ev = events[i];
    write_event(ev, (dir / ev.name).string());
    manifests.push_back(ev.name + "/event.json");
  }
  write_dataset_manifest(manifests, (dir / "train.json").string());

  auto train_events = load_dataset((dir / "train.json").string());
  c.require(train_events.size() == 243, "training manifest size");
  auto aug = wb::augment(train_events);
  c.require(aug.size() == 972, "augmented size must be exactly 972");
  for (const auto& ev : aug) {
    try {
      ev.validate();
    } catch (const std::exception& e) {
      c.require(false, std::string("augmented event invalid: ") + e.what());
      break;
    }
  }
  c.detail = "243 manifest events -> " + std::to_string(aug.size()) +
             " augmented, all invariants hold";
  std::filesystem::remove_all(dir);
}

// Soft equivariance report (spec property, informational): quarter-turn
// consistency of burnt-area counts for the trained model.
void report_equivariance(const SurrogateArtifacts& art) {
  if (!art.model) return;
  int consistent = 0, total = 0;
  for (const auto& ev : art.test_events) {
    int base = art.model->predict(ev).mask.count();
    FireEvent rot = rotate_event(ev, 1);
    int turned = art.model->predict(rot).mask.count();
    if (base > 0 &&
        std::abs(turned - base) <= 0.15 * std::max(base, turned))
      ++consistent;
    ++total;
  }
  std::printf("INFO rotation-consistency: %d/%d events within 15%% "
              "burnt-area agreement under a quarter turn\n",
              consistent, total);
}

}  // namespace

int main() {
  SurrogateArtifacts art;
  struct Criterion {
    const char* name;
    double time_limit_s;
    std::function<void(Check&)> run;
  };
  std::vector<Criterion> criteria{
      {"1 metrics-oracles", 5.0, criterion_metrics},
      {"2 gradient-integrity", 120.0, criterion_gradients},
      {"3 shape-conformance", 1.0, criterion_shapes},
      {"4 ca-bfs-equivalence", 10.0, criterion_ca},
      {"5 mtt-bellman-ford", 10.0, criterion_mtt},
      {"6 surrogate-value", 3600.0,
       [&](Check& c) { criterion_surrogate(c, art); }},
      {"7 relative-speed", 600.0, [&](Check& c) { criterion_speed(c, art); }},
      {"8 protocol-fidelity", 60.0,
       [&](Check& c) { criterion_protocol(c, art); }},
      {"9 augmentation-arithmetic", 600.0, criterion_augmentation},
  };

  int failures = 0;
  for (auto& criterion : criteria) {
    Check check;
    auto t0 = Clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    double secs = elapsed_s(t0);
    if (secs > criterion.time_limit_s)
      check.require(false, "runtime " + std::to_string(secs) +
                               "s exceeds limit");
    std::printf("%s criterion %-26s (%.1fs)%s%s\n",
                check.ok ? "PASS" : "FAIL", criterion.name, secs,
                check.detail.empty() ? "" : " | ", check.detail.c_str());
    std::fflush(stdout);
    if (!check.ok) ++failures;
  }

  report_equivariance(art);
  return failures;
}
