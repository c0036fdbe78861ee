#pragma once

#include <string>
#include <vector>

#include "meshfeat/image.hpp"

namespace meshfeat {

/// 10 log10(1 / MSE) over masked pixels and all channels; +inf for identical images.
double psnr(const Image& a, const Image& b, const Mask* mask = nullptr);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over window centres whose full Gaussian window lies inside the image
/// (and whose centre pixel is masked in, if a mask is given), averaged over channels.
double ssim(const Image& a, const Image& b, const Mask* mask = nullptr, const SsimOptions& opts = {});

/// (1 - SSIM) / 2.
double dssim(const Image& a, const Image& b, const Mask* mask = nullptr, const SsimOptions& opts = {});

struct MetricReport {
  std::string name;
  double psnr = 0.0;
  double dssim = 0.0;  // unscaled
  size_t pixels = 0;
  bool masked = false;
};

MetricReport measure(const std::string& name, const Image& prediction, const Image& target, const Mask* mask);

/// Mean PSNR (over finite entries; inf only if every entry is) and mean DSSIM.
MetricReport aggregate(const std::vector<MetricReport>& reports);

/// "inf" for infinite values, fixed 4 decimals otherwise.
std::string format_metric(double v);

/// Aligned table with DSSIM scaled by 100.
std::string format_report_table(const std::vector<MetricReport>& per_view, const MetricReport& total);

}  // namespace meshfeat
