#include "ehrse/sim.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ehrse/errors.hpp"

namespace ehrse {
namespace {

constexpr long kBlockSize = 16;
constexpr double kTraceCeiling = 1e250;

std::vector<long> recorded_steps(long horizon, long stride) {
  std::vector<long> steps;
  for (long k = 1; k <= horizon; k += stride) steps.push_back(k);
  if (steps.back() != horizon) steps.push_back(horizon);
  return steps;
}

// Welford accumulator over replications for every recorded step.
struct BlockStats {
  long count = 0;
  std::vector<double> mean;
  std::vector<double> m2;
  std::vector<std::int64_t> histogram;
  std::int64_t arrivals = 0;
  std::int64_t total_steps = 0;
  std::int64_t top_rung_visits = 0;

  BlockStats(std::size_t slots, std::size_t powers)
      : mean(slots, 0.0), m2(slots, 0.0), histogram(powers, 0) {}

  void add(const std::vector<double>& sample) {
    ++count;
    const double n = static_cast<double>(count);
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const double delta = sample[i] - mean[i];
      mean[i] += delta / n;
      m2[i] += delta * (sample[i] - mean[i]);
    }
  }

  // Chan et al. pairwise combination.
  void merge(const BlockStats& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double n = na + nb;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = other.mean[i] - mean[i];
      mean[i] += delta * nb / n;
      m2[i] += other.m2[i] + delta * delta * na * nb / n;
    }
    for (std::size_t i = 0; i < histogram.size(); ++i) histogram[i] += other.histogram[i];
    arrivals += other.arrivals;
    total_steps += other.total_steps;
    top_rung_visits += other.top_rung_visits;
    count += other.count;
  }
};

double sample_stderr(double m2, long count) {
  if (count < 2) return 0.0;
  return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
}

std::pair<double, double> mean_and_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(xs.size());
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

Matrix psd_sqrt(const Matrix& X) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(X);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector gaussian(const Matrix& factor, std::normal_distribution<double>& normal,
                std::mt19937_64& engine) {
  Vector z(factor.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(engine);
  return factor * z;
}

}  // namespace

double SimResult::mean_final() const { return mean_and_stderr(final_cost).first; }
double SimResult::stderr_final() const { return mean_and_stderr(final_cost).second; }

Simulator::Simulator(SystemModel system, ChannelModel channel, EnergyModel energy,
                     SimConfig config, int truncation_rung, std::optional<Matrix> steady)
    : system_(std::move(system)),
      channel_(channel),
      energy_(std::move(energy)),
      config_(config),
      truncation_rung_(truncation_rung) {
  if (config_.horizon < 1) throw ModelError("horizon must be at least 1");
  if (config_.replications < 1) throw ModelError("replications must be at least 1");
  if (config_.record_stride < 1) throw ModelError("record_stride must be at least 1");
  if (config_.b0 < 0 || config_.b0 > energy_.capacity()) {
    throw ModelError("initial battery b0 must lie in [0, b_max]");
  }
  steady_ = steady ? sanitize_psd(*steady) : steady_state_covariance(system_);

  traces_.reserve(static_cast<std::size_t>(config_.horizon) + 1);
  Matrix rung = steady_;
  traces_.push_back(rung.trace());
  for (long t = 1; t <= config_.horizon; ++t) {
    rung = lyapunov_step(rung, system_);
    const double tr = rung.trace();
    if (!std::isfinite(tr) || tr > kTraceCeiling) break;
    traces_.push_back(tr);
  }
}

double Simulator::trace_at(long rung) const noexcept {
  if (rung < 0) return traces_.front();
  if (static_cast<std::size_t>(rung) < traces_.size()) return traces_[rung];
  return std::numeric_limits<double>::infinity();
}

template <class Visitor>
void Simulator::run_replication(const Policy& policy, std::uint64_t replication,
                                Visitor&& visit) const {
  const std::uint64_t seed = config_.master_seed;
  RandomStream env_rng = RandomStream::derive(seed, replication, Substream::kEnvironment);
  RandomStream harvest_rng = RandomStream::derive(seed, replication, Substream::kHarvest);
  RandomStream channel_rng = RandomStream::derive(seed, replication, Substream::kChannel);

  const int capacity = energy_.capacity();
  Condition e = config_.e0;
  int battery = config_.b0;
  long rung = 0;
  double total = 0.0;
  StepRecord rec;
  for (long k = 1; k <= config_.horizon; ++k) {
    const int harvest = harvest_sample(e, energy_.harvest, harvest_rng);
    const int available = battery_after_harvest(battery, harvest, capacity);
    const int l = static_cast<int>(std::min<long>(rung, INT_MAX));
    const int power = policy.action(available, index_of(e), l, harvest);
    if (power < 0 || power > available) {
      std::ostringstream os;
      os << policy.describe() << " chose power " << power << " at step " << k
         << " of replication " << replication << " in state (b'=" << available
         << ", e=" << to_string(e) << ", rung=" << rung << ")";
      throw ConstraintViolation(os.str());
    }
    const bool on_top = rung >= truncation_rung_;
    const bool arrival = sample_arrival(channel_, power, channel_rng);
    rung = arrival ? 0 : rung + 1;
    const double tr = trace_at(rung);
    total += tr;

    rec.k = k;
    rec.condition = e;
    rec.harvest = harvest;
    rec.battery = available;
    rec.power = power;
    rec.arrival = arrival;
    rec.rung = rung;
    rec.trace = tr;
    rec.running_cost = total / static_cast<double>(k);
    visit(rec, on_top);

    battery = available - power;
    e = env_step(e, energy_.chain, env_rng);
  }
}

SimResult Simulator::run(const Policy& policy) const {
  const std::vector<long> steps = recorded_steps(config_.horizon, config_.record_stride);
  const std::size_t powers = static_cast<std::size_t>(energy_.capacity()) + 1;
  const long reps = config_.replications;
  const long num_blocks = (reps + kBlockSize - 1) / kBlockSize;

  SimResult result;
  result.steps = steps;
  result.final_cost.assign(reps, 0.0);
  std::vector<BlockStats> blocks(num_blocks, BlockStats(steps.size(), powers));

  // Exceptions cannot leave an OpenMP region; keep the first one by block.
  std::vector<std::exception_ptr> errors(num_blocks);

#pragma omp parallel for schedule(dynamic, 1)
  for (long block = 0; block < num_blocks; ++block) {
    try {
      BlockStats& stats = blocks[block];
      std::vector<double> sample(steps.size());
      const long first = block * kBlockSize;
      const long last = std::min(reps, first + kBlockSize);
      for (long r = first; r < last; ++r) {
        std::size_t slot = 0;
        run_replication(policy, static_cast<std::uint64_t>(r),
                        [&](const StepRecord& rec, bool on_top) {
                          ++stats.histogram[rec.power];
                          stats.arrivals += rec.arrival;
                          stats.top_rung_visits += on_top;
                          if (slot < steps.size() && steps[slot] == rec.k) {
                            sample[slot++] = rec.running_cost;
                          }
                          if (rec.k == config_.horizon) result.final_cost[r] = rec.running_cost;
                        });
        stats.total_steps += config_.horizon;
        stats.add(sample);
      }
    } catch (...) {
      errors[block] = std::current_exception();
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  // Pairwise reduction in block order.
  for (std::size_t width = 1; width < blocks.size(); width *= 2) {
    for (std::size_t i = 0; i + width < blocks.size(); i += 2 * width) {
      blocks[i].merge(blocks[i + width]);
    }
  }
  const BlockStats& total = blocks.front();
  result.mean_cost = total.mean;
  result.stderr_cost.resize(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    result.stderr_cost[i] = sample_stderr(total.m2[i], total.count);
  }
  result.power_histogram = total.histogram;
  result.arrivals = total.arrivals;
  result.total_steps = total.total_steps;
  result.top_rung_visits = total.top_rung_visits;
  return result;
}

SimResult Simulator::run_serial(const Policy& policy) const {
  const std::vector<long> steps = recorded_steps(config_.horizon, config_.record_stride);
  const long reps = config_.replications;

  SimResult result;
  result.steps = steps;
  result.final_cost.assign(reps, 0.0);
  result.power_histogram.assign(static_cast<std::size_t>(energy_.capacity()) + 1, 0);
  std::vector<double> sum(steps.size(), 0.0), sum_sq(steps.size(), 0.0);

  for (long r = 0; r < reps; ++r) {
    std::size_t slot = 0;
    run_replication(policy, static_cast<std::uint64_t>(r),
                    [&](const StepRecord& rec, bool on_top) {
                      ++result.power_histogram[rec.power];
                      result.arrivals += rec.arrival;
                      result.top_rung_visits += on_top;
                      if (slot < steps.size() && steps[slot] == rec.k) {
                        sum[slot] += rec.running_cost;
                        sum_sq[slot] += rec.running_cost * rec.running_cost;
                        ++slot;
                      }
                      if (rec.k == config_.horizon) result.final_cost[r] = rec.running_cost;
                    });
    result.total_steps += config_.horizon;
  }

  const double n = static_cast<double>(reps);
  result.mean_cost.resize(steps.size());
  result.stderr_cost.resize(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double mean = sum[i] / n;
    result.mean_cost[i] = mean;
    const double var = reps > 1 ? std::max(0.0, (sum_sq[i] - n * mean * mean) / (n - 1.0)) : 0.0;
    result.stderr_cost[i] = std::sqrt(var / n);
  }
  return result;
}

std::vector<StepRecord> Simulator::trajectory(const Policy& policy,
                                              std::uint64_t replication) const {
  std::vector<StepRecord> out;
  out.reserve(static_cast<std::size_t>(config_.horizon));
  run_replication(policy, replication,
                  [&](const StepRecord& rec, bool) { out.push_back(rec); });
  return out;
}

std::vector<EstimateRecord> Simulator::estimates(const Policy& policy,
                                                 std::uint64_t replication) const {
  const std::vector<StepRecord> steps = trajectory(policy, replication);

  RandomStream plant_rng = RandomStream::derive(config_.master_seed, replication, Substream::kPlant);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Matrix process_factor = psd_sqrt(system_.Q());
  const Matrix measurement_factor = system_.R().llt().matrixL();
  const Matrix& A = system_.A();
  const Matrix& C = system_.C();

  Vector x = gaussian(psd_sqrt(system_.Pi0()), normal, plant_rng.engine());
  Vector local = Vector::Zero(system_.state_dim());
  Matrix local_cov = system_.Pi0();
  Vector remote = Vector::Zero(system_.state_dim());

  std::vector<EstimateRecord> out;
  out.reserve(steps.size());
  for (const StepRecord& step : steps) {
    x = A * x + gaussian(process_factor, normal, plant_rng.engine());
    const Vector y = C * x + gaussian(measurement_factor, normal, plant_rng.engine());
    FilterState filtered = local_filter_step(local, local_cov, y, system_);
    local = std::move(filtered.estimate);
    local_cov = std::move(filtered.covariance);
    remote = step.arrival ? local : Vector(A * remote);

    EstimateRecord rec;
    rec.k = step.k;
    rec.state = x;
    rec.local_estimate = local;
    rec.remote_estimate = remote;
    rec.arrival = step.arrival;
    rec.trace = step.trace;
    rec.squared_error = (x - remote).squaredNorm();
    out.push_back(std::move(rec));
  }
  return out;
}

Comparison Simulator::compare(std::span<const NamedPolicy> policies) const {
  Comparison out;
  for (const NamedPolicy& p : policies) {
    out.names.push_back(p.name);
    out.results.push_back(run(p.policy));
  }
  for (std::size_t i = 0; i < out.results.size(); ++i) {
    for (std::size_t j = i + 1; j < out.results.size(); ++j) {
      const auto& base = out.results[i].final_cost;
      const auto& other = out.results[j].final_cost;
      std::vector<double> diff(base.size());
      for (std::size_t r = 0; r < base.size(); ++r) diff[r] = other[r] - base[r];
      const auto [mean, err] = mean_and_stderr(diff);
      out.rows.push_back({i, j, mean, err});
    }
  }
  return out;
}

Policy greedy_policy() { return Policy::greedy(); }

SimResult simulate(const Policy& policy, const SystemModel& system,
                   const ChannelModel& channel, const EnergyModel& energy,
                   const SimConfig& config) {
  return Simulator(system, channel, energy, config).run(policy);
}

}  // namespace ehrse
