#pragma once

#include <vector>

namespace ridi {

/// Gaussian smoothing parameters shared by the feature pipeline. Sigmas are in
/// frames at 200 Hz. The kernel is truncated at ceil(4*sigma) and renormalized
/// over the in-range support, so boundaries keep unit kernel mass.
struct SmoothingConfig {
  double sigma_imu = 2.0;        ///< gyro + linear acceleration channels
  double sigma_velocity = 30.0;  ///< ground-truth velocity channels
};

/// Multi-channel signal, one vector<double> per channel, equal lengths.
using Signal = std::vector<std::vector<double>>;

/// Truncated half-kernel: w[j] = exp(-j^2 / (2 sigma^2)) for j = 0..ceil(4 sigma).
std::vector<double> kernel_weights(double sigma);

/// One causally smoothed sample (trailing kernel ending at index i), with the
/// exact same arithmetic as gaussian_smooth_causal; the streaming path uses
/// this so that offline and online smoothing agree bitwise.
double smooth_causal_at(const std::vector<double>& x, const std::vector<double>& w, int i);

/// Reference implementation, plain serial loop.
std::vector<double> gaussian_smooth_serial(const std::vector<double>& x, double sigma);

/// OpenMP twin of gaussian_smooth_serial; bit-identical output (each element is
/// an independent fixed-order sum).
std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma);

/// Causal variant: trailing half-kernel, renormalized. Equals the symmetric
/// smoother applied to the signal truncated at each index, which is exactly the
/// right-edge behaviour of the offline smoother.
std::vector<double> gaussian_smooth_causal(const std::vector<double>& x, double sigma);

Signal smooth_channels(const Signal& channels, double sigma);
Signal smooth_channels_causal(const Signal& channels, double sigma);

}  // namespace ridi
