#include "ridi/smoothing.hpp"

#include <algorithm>
#include <cmath>

namespace ridi {

std::vector<double> kernel_weights(double sigma) {
  int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> w(static_cast<std::size_t>(radius) + 1);
  for (int j = 0; j <= radius; ++j) w[static_cast<std::size_t>(j)] = std::exp(-0.5 * j * j / (sigma * sigma));
  return w;  // w[|j|], symmetric half
}

namespace {

// One output sample: fixed-order sum over the in-range support, weights
// renormalized so constants are preserved at boundaries.
double smooth_at(const std::vector<double>& x, const std::vector<double>& w, int i, int lo_off,
                 int hi_off) {
  const int n = static_cast<int>(x.size());
  double acc = 0.0;
  double mass = 0.0;
  for (int j = lo_off; j <= hi_off; ++j) {
    int k = i + j;
    if (k < 0 || k >= n) continue;
    double g = w[static_cast<std::size_t>(std::abs(j))];
    acc += g * x[static_cast<std::size_t>(k)];
    mass += g;
  }
  return acc / mass;
}

}  // namespace

double smooth_causal_at(const std::vector<double>& x, const std::vector<double>& w, int i) {
  return smooth_at(x, w, i, -(static_cast<int>(w.size()) - 1), 0);
}

std::vector<double> gaussian_smooth_serial(const std::vector<double>& x, double sigma) {
  if (x.empty()) return {};
  const int n = static_cast<int>(x.size());
  const auto w = kernel_weights(sigma);
  const int r = static_cast<int>(w.size()) - 1;
  std::vector<double> out(x.size());
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = smooth_at(x, w, i, -r, r);
  return out;
}

std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma) {
  if (x.empty()) return {};
  const int n = static_cast<int>(x.size());
  const auto w = kernel_weights(sigma);
  const int r = static_cast<int>(w.size()) - 1;
  std::vector<double> out(x.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = smooth_at(x, w, i, -r, r);
  return out;
}

std::vector<double> gaussian_smooth_causal(const std::vector<double>& x, double sigma) {
  if (x.empty()) return {};
  const int n = static_cast<int>(x.size());
  const auto w = kernel_weights(sigma);
  const int r = static_cast<int>(w.size()) - 1;
  std::vector<double> out(x.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = smooth_at(x, w, i, -r, 0);
  return out;
}

Signal smooth_channels(const Signal& channels, double sigma) {
  Signal out;
  out.reserve(channels.size());
  for (const auto& c : channels) out.push_back(gaussian_smooth(c, sigma));
  return out;
}

Signal smooth_channels_causal(const Signal& channels, double sigma) {
  Signal out;
  out.reserve(channels.size());
  for (const auto& c : channels) out.push_back(gaussian_smooth_causal(c, sigma));
  return out;
}

}  // namespace ridi
