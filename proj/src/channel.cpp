#include "ehrse/channel.hpp"

#include <cmath>
#include <string>

#include "ehrse/errors.hpp"

namespace ehrse {

double lambda_from_params(double beta, double n0, double bandwidth) {
  if (!(beta > 0.0) || !(n0 > 0.0) || !(bandwidth > 0.0)) {
    throw ModelError("beta, n0 and bandwidth must all be positive");
  }
  return -std::expm1(-beta / (n0 * bandwidth));
}

ChannelModel ChannelModel::from_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ModelError("lambda must lie in (0, 1), got " + std::to_string(lambda));
  }
  return ChannelModel(lambda);
}

ChannelModel ChannelModel::from_physical(double beta, double n0, double bandwidth) {
  ChannelModel out = from_lambda(lambda_from_params(beta, n0, bandwidth));
  out.beta_ = beta;
  out.n0_ = n0;
  out.w_ = bandwidth;
  return out;
}

double drop_probability(const ChannelModel& channel, int power) {
  if (power < 0) throw ConstraintViolation("transmission power must be non-negative");
  if (power == 0) return 1.0;
  return std::pow(1.0 - channel.lambda(), power);
}

bool sample_arrival(const ChannelModel& channel, int power, RandomStream& rng) {
  const double u = rng.uniform();
  return u < 1.0 - drop_probability(channel, power);
}

}  // namespace ehrse
