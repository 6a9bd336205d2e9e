#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace edgeprivsim {

/// DP-SGD training parameters. `clip` is carried for completeness; it does
/// not enter the accounting of normalized DP-SGD.
struct DpSgdConfig {
  double sigma = 1.0;
  double clip = 1.0;
  std::uint64_t dataset_size = 1;
  std::uint64_t batch = 1;
  std::uint64_t epochs = 1;
  double delta = 1e-5;

  double sampling_rate() const { return static_cast<double>(batch) / static_cast<double>(dataset_size); }
  /// ceil(epochs * N / B)
  std::uint64_t steps() const;
  /// Throws std::invalid_argument on any out-of-domain field.
  void validate() const;
};

struct RdpCurve {
  std::vector<double> orders;  // ascending, all > 1
  std::vector<double> eps;
};

struct EpsilonResult {
  double epsilon = 0.0;
  double order = 0.0;
};

/// {1.25, 1.5, 1.75, 2, 2.5, 3, 4, ..., 256}
std::vector<double> default_orders();

/// alpha / (2 sigma^2)
double rdp_gaussian(double sigma, double alpha);

/// RDP of the Poisson-subsampled Gaussian at one integer order, via the
/// binomial expansion evaluated in log space.
double rdp_subsampled_gaussian_int(double q, double sigma, std::uint64_t alpha);

/// Per-order RDP of one subsampled Gaussian step. For q < 1 a fractional
/// order takes the larger of its floor and ceiling integer bounds (orders
/// below 2 use order 2).
RdpCurve rdp_subsampled_gaussian(double q, double sigma, std::span<const double> orders);

/// RDP composition over T identical steps.
RdpCurve compose(const RdpCurve& curve, std::uint64_t steps);

/// Best (epsilon, delta) conversion over the curve's orders.
EpsilonResult to_epsilon(const RdpCurve& curve, double delta);

EpsilonResult epsilon_for_training(const DpSgdConfig& config, std::span<const double> orders);
inline EpsilonResult epsilon_for_training(const DpSgdConfig& config) {
  const auto orders = default_orders();
  return epsilon_for_training(config, orders);
}

}  // namespace edgeprivsim
