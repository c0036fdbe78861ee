#include "meshfeat/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "meshfeat/errors.hpp"

namespace meshfeat {

namespace {

void check_shapes(const Image& a, const Image& b, const Mask* mask) {
  if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size()) {
    throw DataError("image shapes differ");
  }
  if (mask && mask->size() != a.pixel_count()) throw DataError("mask size does not match image");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-double((i - r) * (i - r)) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& x : k) x /= sum;
  return k;
}

// Separable filter evaluated only at valid centres: output is (h - w + 1) x (w_img - w + 1).
std::vector<double> filter_valid(const std::vector<double>& src, int width, int height,
                                 const std::vector<double>& k) {
  const int win = static_cast<int>(k.size());
  const int ow = width - win + 1, oh = height - win + 1;
  std::vector<double> tmp(size_t(height) * ow);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < win; ++i) s += k[i] * src[size_t(y) * width + x + i];
      tmp[size_t(y) * ow + x] = s;
    }
  }
  std::vector<double> out(size_t(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < win; ++i) s += k[i] * tmp[size_t(y + i) * ow + x];
      out[size_t(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, const Mask* mask) {
  check_shapes(a, b, mask);
  double sum = 0.0;
  size_t n = 0;
  for (size_t p = 0; p < a.pixel_count(); ++p) {
    if (mask && !(*mask)[p]) continue;
    for (int c = 0; c < 3; ++c) {
      const double d = double(a.data[p * 3 + c]) - double(b.data[p * 3 + c]);
      sum += d * d;
    }
    n += 3;
  }
  if (n == 0) throw DataError("PSNR over an empty mask");
  const double mse = sum / double(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b, const Mask* mask, const SsimOptions& opts) {
  check_shapes(a, b, mask);
  const int win = opts.window;
  if (a.width < win || a.height < win) throw DataError("image smaller than the SSIM window");
  const std::vector<double> k = gaussian_kernel(win, opts.sigma);
  const double c1 = std::pow(opts.k1 * opts.dynamic_range, 2);
  const double c2 = std::pow(opts.k2 * opts.dynamic_range, 2);
  const int w = a.width, h = a.height, r = win / 2;
  const int ow = w - win + 1, oh = h - win + 1;

  std::vector<double> x(size_t(w) * h), y(x.size()), xx(x.size()), yy(x.size()), xy(x.size());
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (size_t p = 0; p < x.size(); ++p) {
      x[p] = a.data[p * 3 + c];
      y[p] = b.data[p * 3 + c];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = filter_valid(x, w, h, k), my = filter_valid(y, w, h, k);
    const auto sxx = filter_valid(xx, w, h, k), syy = filter_valid(yy, w, h, k), sxy = filter_valid(xy, w, h, k);
    double channel_sum = 0.0;
    size_t channel_count = 0;
    for (int j = 0; j < oh; ++j) {
      for (int i = 0; i < ow; ++i) {
        if (mask && !(*mask)[size_t(j + r) * w + i + r]) continue;
        const size_t q = size_t(j) * ow + i;
        const double vx = sxx[q] - mx[q] * mx[q];
        const double vy = syy[q] - my[q] * my[q];
        const double cov = sxy[q] - mx[q] * my[q];
        const double num = (2 * mx[q] * my[q] + c1) * (2 * cov + c2);
        const double den = (mx[q] * mx[q] + my[q] * my[q] + c1) * (vx + vy + c2);
        channel_sum += num / den;
        ++channel_count;
      }
    }
    if (channel_count == 0) throw DataError("SSIM over an empty mask");
    total += channel_sum / double(channel_count);
  }
  return total / 3.0;
}

double dssim(const Image& a, const Image& b, const Mask* mask, const SsimOptions& opts) {
  return (1.0 - ssim(a, b, mask, opts)) / 2.0;
}

MetricReport measure(const std::string& name, const Image& prediction, const Image& target, const Mask* mask) {
  MetricReport r;
  r.name = name;
  r.psnr = psnr(prediction, target, mask);
  r.dssim = dssim(prediction, target, mask);
  r.masked = mask != nullptr;
  if (mask) {
    for (uint8_t m : *mask) r.pixels += m ? 1 : 0;
  } else {
    r.pixels = prediction.pixel_count();
  }
  return r;
}

MetricReport aggregate(const std::vector<MetricReport>& reports) {
  MetricReport total;
  total.name = "mean";
  if (reports.empty()) return total;
  double psnr_sum = 0.0, dssim_sum = 0.0;
  size_t finite = 0;
  for (const auto& r : reports) {
    if (!std::isinf(r.psnr)) {
      psnr_sum += r.psnr;
      ++finite;
    }
    dssim_sum += r.dssim;
    total.pixels += r.pixels;
    total.masked = total.masked || r.masked;
  }
  total.psnr = finite == 0 ? std::numeric_limits<double>::infinity() : psnr_sum / double(finite);
  total.dssim = dssim_sum / double(reports.size());
  return total;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string format_report_table(const std::vector<MetricReport>& per_view, const MetricReport& total) {
  size_t name_width = 4;
  for (const auto& r : per_view) name_width = std::max(name_width, r.name.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %10s  %12s  %10s\n", int(name_width), "view", "PSNR[dB]", "DSSIMx100",
                "pixels");
  out << buf;
  auto row = [&](const MetricReport& r) {
    std::snprintf(buf, sizeof buf, "%-*s  %10s  %12s  %10zu\n", int(name_width), r.name.c_str(),
                  format_metric(r.psnr).c_str(), format_metric(100.0 * r.dssim).c_str(), r.pixels);
    out << buf;
  };
  for (const auto& r : per_view) row(r);
  row(total);
  return out.str();
}

}  // namespace meshfeat
