#include "edgeprivsim/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/core.h>

namespace edgeprivsim {

std::uint64_t DpSgdConfig::steps() const {
  const std::uint64_t num = epochs * dataset_size;
  return (num + batch - 1) / batch;
}

void DpSgdConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument(fmt::format("sigma must be > 0, got {}", sigma));
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be > 0");
  if (dataset_size < 1) throw std::invalid_argument("dataset size must be >= 1");
  if (batch < 1 || batch > dataset_size) throw std::invalid_argument("batch must lie in [1, N]");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
}

std::vector<double> default_orders() {
  std::vector<double> orders{1.25, 1.5, 1.75, 2.0, 2.5};
  for (int a = 3; a <= 256; ++a) orders.push_back(a);
  return orders;
}

double rdp_gaussian(double sigma, double alpha) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(alpha > 1.0)) throw std::invalid_argument("order must be > 1");
  return alpha / (2.0 * sigma * sigma);
}

double rdp_subsampled_gaussian_int(double q, double sigma, std::uint64_t alpha) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("sampling rate must lie in (0, 1]");
  if (alpha < 2) throw std::invalid_argument("integer order must be >= 2");
  const double a = static_cast<double>(alpha);
  if (q == 1.0) return rdp_gaussian(sigma, a);

  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> terms;
  terms.reserve(alpha + 1);
  for (std::uint64_t k = 0; k <= alpha; ++k) {
    const double kd = static_cast<double>(k);
    const double log_binom = std::lgamma(a + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(a - kd + 1.0);
    terms.push_back(log_binom + (a - kd) * log_1mq + kd * log_q + (kd * kd - kd) * inv_2s2);
  }
  const double m = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return std::max(0.0, (m + std::log(s)) / (a - 1.0));
}

RdpCurve rdp_subsampled_gaussian(double q, double sigma, std::span<const double> orders) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("sampling rate must lie in (0, 1]");
  RdpCurve c;
  for (double alpha : orders) {
    if (!(alpha > 1.0)) throw std::invalid_argument("order must be > 1");
    c.orders.push_back(alpha);
    if (q == 1.0) {
      c.eps.push_back(rdp_gaussian(sigma, alpha));
      continue;
    }
    const auto lo = static_cast<std::uint64_t>(std::max(2.0, std::floor(alpha)));
    const auto hi = static_cast<std::uint64_t>(std::max(2.0, std::ceil(alpha)));
    double e = rdp_subsampled_gaussian_int(q, sigma, lo);
    if (hi != lo) e = std::max(e, rdp_subsampled_gaussian_int(q, sigma, hi));
    c.eps.push_back(e);
  }
  return c;
}

RdpCurve compose(const RdpCurve& curve, std::uint64_t steps) {
  if (steps < 1) throw std::invalid_argument("composition needs at least one step");
  RdpCurve out = curve;
  for (double& e : out.eps) e *= static_cast<double>(steps);
  return out;
}

EpsilonResult to_epsilon(const RdpCurve& curve, double delta) {
  if (curve.orders.empty() || curve.orders.size() != curve.eps.size()) {
    throw std::invalid_argument("empty or malformed RDP curve");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const double log_inv_delta = std::log(1.0 / delta);
  EpsilonResult best{std::numeric_limits<double>::infinity(), curve.orders.front()};
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    const double e = curve.eps[i] + log_inv_delta / (curve.orders[i] - 1.0);
    if (e < best.epsilon) best = {e, curve.orders[i]};
  }
  return best;
}

EpsilonResult epsilon_for_training(const DpSgdConfig& config, std::span<const double> orders) {
  config.validate();
  const auto step = rdp_subsampled_gaussian(config.sampling_rate(), config.sigma, orders);
  return to_epsilon(compose(step, config.steps()), config.delta);
}

}  // namespace edgeprivsim
