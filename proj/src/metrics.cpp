#include "firebench/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace firebench::metrics {

namespace {

void check_dims(const BurntMask& truth, const std::vector<double>& pred) {
  if (pred.size() != truth.cells.size())
    throw Error("metrics: truth and prediction dimensions differ");
}

}  // namespace

std::vector<double> to_field(const BurntMask& mask) {
  std::vector<double> f(mask.cells.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = mask.cells[i];
  return f;
}

double bce(const BurntMask& truth, const std::vector<double>& pred) {
  check_dims(truth, pred);
  double acc = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double p = std::clamp(pred[i], kBceEps, 1.0 - kBceEps);
    double t = truth.cells[i];
    acc += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return -acc / static_cast<double>(pred.size());
}

double mse(const BurntMask& truth, const std::vector<double>& pred) {
  check_dims(truth, pred);
  double acc = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double d = truth.cells[i] - pred[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

double rrmse(const BurntMask& truth, const std::vector<double>& pred) {
  check_dims(truth, pred);
  double sum_sq = 0;
  for (double p : pred) sum_sq += p * p;
  if (sum_sq <= 0.0)
    throw Error("rrmse: all-zero prediction has an undefined denominator");
  return std::sqrt(mse(truth, pred) / sum_sq);
}

double ssim(const std::vector<double>& x, const std::vector<double>& y,
            int height, int width) {
  size_t n = static_cast<size_t>(height) * width;
  if (x.size() != n || y.size() != n)
    throw Error("ssim: field dimensions differ");
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double vx = 0, vy = 0, cov = 0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= static_cast<double>(n);
  vy /= static_cast<double>(n);
  cov /= static_cast<double>(n);
  return ((2 * mx * my + kSsimC1) * (2 * cov + kSsimC2)) /
         ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
}

double ssim(const BurntMask& truth, const std::vector<double>& pred) {
  check_dims(truth, pred);
  return ssim(to_field(truth), pred, truth.spec.height, truth.spec.width);
}

double psnr(const BurntMask& truth, const std::vector<double>& pred) {
  check_dims(truth, pred);
  if (truth.count() == 0)
    throw Error("psnr: empty truth mask has no defined peak");
  double m = mse(truth, pred);
  if (m == 0.0) return psnr_infinity();
  // Max over a non-empty binary mask is 1.
  return 10.0 * std::log10(1.0 / m);
}

MetricReport evaluate(const BurntMask& truth, const std::vector<double>& pred) {
  MetricReport r;
  r.bce = bce(truth, pred);
  r.mse = mse(truth, pred);
  r.mse_km2 = r.mse * truth.spec.pixel_area;
  r.rrmse = rrmse(truth, pred);
  r.ssim = ssim(truth, pred);
  r.psnr = psnr(truth, pred);
  return r;
}

MetricReport evaluate(const BurntMask& truth, const BurntMask& pred) {
  return evaluate(truth, to_field(pred));
}

}  // namespace firebench::metrics
