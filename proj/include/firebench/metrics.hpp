#pragma once

#include <limits>
#include <vector>

#include "firebench/raster.hpp"

// The five evaluation measures used throughout the workbench, computed over
// a (true binary mask, predicted real field) pair. All five are pure
// functions over immutable inputs and accumulate in row-major order.
namespace firebench::metrics {

// Clamp applied to predictions before the BCE logarithms; keeps the loss
// finite at saturated probabilities.
inline constexpr double kBceEps = 1e-7;

// SSIM stability constants, (0.01 L)^2 and (0.03 L)^2 with L = 1 for
// binary/probability fields.
inline constexpr double kSsimC1 = 1e-4;
inline constexpr double kSsimC2 = 9e-4;

inline double psnr_infinity() { return std::numeric_limits<double>::infinity(); }

struct MetricReport {
  double bce = 0;
  double mse = 0;      // per-pixel mean, dimensionless; the canonical value
  double mse_km2 = 0;  // area-scaled variant: mse * pixel_area
  double rrmse = 0;
  double ssim = 0;
  double psnr = 0;  // +infinity when mse == 0
};

double bce(const BurntMask& truth, const std::vector<double>& pred);
double mse(const BurntMask& truth, const std::vector<double>& pred);

// sqrt(MSE / sum of squared predictions); the denominator is the plain
// unnormalized sum over the predicted field. Throws on an all-zero
// prediction.
double rrmse(const BurntMask& truth, const std::vector<double>& pred);

// Global single-window SSIM with population (biased) variance and
// covariance. Note: the usual printed form of the index sometimes appears
// with a "2*mu_x + mu_y" numerator; that is a typo for the product
// 2*mu_x*mu_y, which is what is implemented here (the canonical index).
double ssim(const std::vector<double>& x, const std::vector<double>& y,
            int height, int width);
double ssim(const BurntMask& truth, const std::vector<double>& pred);

// 10*log10(Max(truth)^2 / MSE). Max is taken over the true field, so an
// empty truth mask has no defined peak and is rejected; mse == 0 returns
// the +infinity sentinel.
double psnr(const BurntMask& truth, const std::vector<double>& pred);

MetricReport evaluate(const BurntMask& truth, const std::vector<double>& pred);
MetricReport evaluate(const BurntMask& truth, const BurntMask& pred);

std::vector<double> to_field(const BurntMask& mask);

}  // namespace firebench::metrics
