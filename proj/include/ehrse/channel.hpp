#pragma once

#include <optional>

#include "ehrse/rng.hpp"

namespace ehrse {

/// Time-invariant AWGN/QAM link. A packet sent with power w is dropped with
/// probability (1 - lambda)^w.
class ChannelModel {
 public:
  /// Requires 0 < lambda < 1.
  static ChannelModel from_lambda(double lambda);

  /// lambda = 1 - exp(-beta / (n0 * w)).
  static ChannelModel from_physical(double beta, double n0, double bandwidth);

  double lambda() const noexcept { return lambda_; }
  const std::optional<double>& beta() const noexcept { return beta_; }
  const std::optional<double>& n0() const noexcept { return n0_; }
  const std::optional<double>& bandwidth() const noexcept { return w_; }

 private:
  explicit ChannelModel(double lambda) : lambda_(lambda) {}

  double lambda_;
  std::optional<double> beta_, n0_, w_;
};

/// 1 - exp(-beta / (n0 * w)); throws ModelError on a non-positive input.
double lambda_from_params(double beta, double n0, double bandwidth);

/// (1 - lambda)^power; exactly 1 for power 0.
double drop_probability(const ChannelModel& channel, int power);

/// Draws the arrival indicator with one uniform from `rng`.
bool sample_arrival(const ChannelModel& channel, int power, RandomStream& rng);

}  // namespace ehrse
