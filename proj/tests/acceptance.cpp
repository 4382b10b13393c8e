// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ehrse/app.hpp"
#include "ehrse/errors.hpp"
#include "ehrse/kalman.hpp"
#include "ehrse/mdp.hpp"
#include "ehrse/sim.hpp"
#include "ehrse/threshold.hpp"
#include "fixtures.hpp"
#include "power_law_oracle.hpp"

namespace {

using namespace ehrse;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Transition matrix of the pair process written out entry by entry for
// b_max = 3, R_G = 2, R_B = 1, in terms of the environment and harvest laws.
Matrix golden_psi(const EnergyModel& e) {
  auto p = [&](int i, int j) { return e.chain.prob(i, j); };
  auto pi = [&](int n, int r) { return e.harvest.prob(n, r); };
  Matrix M = Matrix::Zero(8, 8);
  auto full_row = [&](int row, int from) {
    for (int b = 0; b < 4; ++b) {
      M(row, 2 * b) = p(from, 0) * pi(0, b);
      M(row, 2 * b + 1) = p(from, 1) * pi(1, b);
    }
  };
  for (int row = 0; row < 5; ++row) full_row(row, row % 2);
  M(5, 2) = p(1, 0) * pi(0, 0);
  M(5, 3) = p(1, 1) * pi(1, 0);
  M(5, 4) = p(1, 0) * pi(0, 1);
  M(5, 5) = p(1, 1) * pi(1, 1);
  M(5, 6) = p(1, 0) * (pi(0, 2) + pi(0, 3));
  M(5, 7) = p(1, 1) * (pi(1, 2) + pi(1, 3));
  M(6, 2) = p(0, 0) * pi(0, 0);
  M(6, 3) = p(0, 1) * pi(1, 0);
  M(6, 4) = p(0, 0) * pi(0, 1);
  M(6, 5) = p(0, 1) * pi(1, 1);
  M(6, 6) = p(0, 0) * (pi(0, 2) + pi(0, 3));
  M(6, 7) = p(0, 1) * (pi(1, 2) + pi(1, 3));
  M(7, 4) = p(1, 0) * pi(0, 0);
  M(7, 5) = p(1, 1) * pi(1, 0);
  M(7, 6) = p(1, 0) * (pi(0, 1) + pi(0, 2) + pi(0, 3));
  M(7, 7) = p(1, 1) * (pi(1, 1) + pi(1, 2) + pi(1, 3));
  return M;
}

Outcome psi_golden() {
  const EnergyModel e = test::example_energy();
  const Matrix golden = golden_psi(e);
  const double err = (build_psi({2, 1}, e) - golden).cwiseAbs().maxCoeff();
  // The stated R_0 = 1 (good), R_1 = 2 (bad) does not reproduce that matrix.
  const double literal = (build_psi({1, 2}, e) - golden).cwiseAbs().maxCoeff();
  return {err <= 1e-12, fmt("max |diff| = %.3g over 64 entries with (R_G=2, R_B=1); literal "
                            "(R_G=1, R_B=2) reading differs by %.3g",
                            err, literal)};
}

SystemModel random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 4);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> radius(0.85, 1.15);
  for (;;) {
    const int nx = dim(rng);
    const int ny = std::uniform_int_distribution<int>(1, nx)(rng);
    Matrix A = Matrix::NullaryExpr(nx, nx, [&] { return n01(rng); });
    const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
    if (rho < 1e-6) continue;
    A *= radius(rng) / rho;
    const Matrix C = Matrix::NullaryExpr(ny, nx, [&] { return n01(rng); });
    const Matrix L = Matrix::NullaryExpr(nx, nx, [&] { return n01(rng); });
    const Matrix M = Matrix::NullaryExpr(ny, ny, [&] { return n01(rng); });
    const Matrix Q = L * L.transpose() + 0.05 * Matrix::Identity(nx, nx);
    const Matrix R = M * M.transpose() + 0.1 * Matrix::Identity(ny, ny);
    try {
      return SystemModel::validated(A, C, Q, R, Q);
    } catch (const ModelError&) {
    }
  }
}

Outcome ladder_property() {
  std::mt19937_64 rng(20140001);
  int checked_pairs = 0;
  for (int model = 0; model < 20; ++model) {
    const SystemModel m = random_model(rng);
    const CovarianceLadder ladder = build_ladder(m, 50);
    for (std::size_t t = 1; t < ladder.traces.size(); ++t) {
      if (!(ladder.traces[t] > ladder.traces[t - 1])) {
        return {false, fmt("model %d: trace not increasing at t=%zu", model, t)};
      }
    }
    std::uniform_int_distribution<int> idx(0, 50);
    for (int k = 0; k < 10; ++k) {
      int s = idx(rng), t = idx(rng);
      while (s == t) t = idx(rng);
      if (s > t) std::swap(s, t);
      const Matrix diff = ladder.rungs[t] - ladder.rungs[s];
      if (!is_psd(diff)) return {false, fmt("model %d: h^%d - h^%d not PSD", model, t, s)};
      ++checked_pairs;
    }
  }
  return {true, fmt("20 models, 50 rungs each, %d PSD pairs", checked_pairs)};
}

Outcome steady_oracle() {
  const double root = test::steady_quadratic_root();
  const double iterated = steady_state_covariance(test::scalar_system())(0, 0);
  const bool ok = std::abs(iterated - 0.757654) <= 1e-6 && std::abs(iterated - root) <= 1e-6;
  return {ok, fmt("fixed point %.12f, quadratic root %.12f", iterated, root)};
}

Outcome rvi_vs_brute_force() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int cap = trial % 2;
    const int n_trunc = 1 + trial % 3;
    const double a = 0.5 + u(rng), c = 0.3 + u(rng), q = 0.2 + u(rng), r = 0.2 + u(rng);
    const SystemModel sys(test::scalar(a), test::scalar(c), test::scalar(q), test::scalar(r),
                          test::scalar(q));
    const ChannelModel ch = ChannelModel::from_lambda(0.1 + 0.85 * u(rng));
    const MdpProblem p(sys, ch, test::random_energy(rng, cap), n_trunc);
    const double rvi = relative_value_iteration(p).avg_cost;
    const double brute = brute_force_average_cost(p).first;
    worst = std::max(worst, std::abs(rvi - brute));
  }
  return {worst <= 1e-8, fmt("10 instances, max |J*_rvi - J*_brute| = %.3g", worst)};
}

SimConfig example_sim_config() {
  SimConfig c;
  c.horizon = 10000;
  c.replications = 1000;
  c.master_seed = 20140001;
  c.record_stride = 1000;
  return c;
}

Outcome sim_vs_exact() {
  const MdpProblem p = test::example_problem(30);
  const Policy lifted = Policy::threshold({2, 1}).lift(p.space());
  const double exact = policy_evaluate_exact(p, lifted);
  const Simulator sim(test::scalar_system(), test::example_channel(), test::example_energy(),
                      example_sim_config());
  const SimResult r = sim.run(lifted);
  const double rel = std::abs(r.mean_final() - exact) / exact;
  return {rel <= 0.02, fmt("MC %.6f +- %.2g, exact %.6f, relative gap %.3g%%, top-rung "
                           "frequency %.3g",
                           r.mean_final(), r.stderr_final(), exact, 100 * rel,
                           r.top_rung_frequency())};
}

Outcome threshold_beats_greedy() {
  const MdpProblem p = test::example_problem(30);
  const Simulator sim(test::scalar_system(), test::example_channel(), test::example_energy(),
                      example_sim_config());
  const std::vector<NamedPolicy> policies{{"greedy", greedy_policy()},
                                          {"threshold", Policy::threshold({2, 1})}};
  const Comparison cmp = sim.compare(policies);
  const double greedy = cmp.results[0].mean_final();
  const double thresh = cmp.results[1].mean_final();
  const double margin = greedy - thresh;
  const double paired_se = cmp.rows[0].stderr_diff;
  const double unpaired_se = std::hypot(cmp.results[0].stderr_final(),
                                        cmp.results[1].stderr_final());
  const double j_star = relative_value_iteration(p).avg_cost;
  const double j_thresh = policy_evaluate_exact(p, Policy::threshold({2, 1}));
  const bool ok = margin > 3 * paired_se && j_star <= j_thresh;
  return {ok, fmt("J(greedy) %.6f, J(threshold) %.6f, margin %.4g = %.1f paired SE (%.1f "
                  "unpaired); J* %.6f <= exact J(threshold) %.6f",
                  greedy, thresh, margin, margin / paired_se, margin / unpaired_se, j_star,
                  j_thresh)};
}

Outcome power_law() {
  const EnergyModel e = test::example_energy();
  double worst = 0.0, worst_sum = 0.0;
  int cases = 0;
  for (int r0 = 0; r0 <= 3; ++r0) {
    for (int r1 = r0 + 1; r1 <= 3; ++r1) {
      const ThresholdPolicy t{r0, r1};
      const Vector q = stationary_distribution(build_psi(t, e));
      const Vector omega = omega_distribution(q, t, 3);
      worst = std::max(worst, (omega - test::power_law_oracle(q, r0, r1, 3)).cwiseAbs().maxCoeff());
      worst_sum = std::max(worst_sum, std::abs(omega.sum() - 1.0));
      ++cases;
    }
  }
  return {worst <= 1e-12 && worst_sum <= 1e-12,
          fmt("%d threshold pairs, max entry diff %.3g, max |sum - 1| %.3g", cases, worst,
              worst_sum)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome compare_determinism() {
  const std::string config = R"({
    "system": {"A": [[0.9]], "C": [[0.7]], "Q": [[0.8]], "R": [[0.8]]},
    "channel": {"lambda": 0.7},
    "energy": {"p_gg": 0.7, "p_gb": 0.3, "p_bg": 0.2, "p_bb": 0.8,
               "good": [0.1, 0.2, 0.3, 0.4], "bad": [0.4, 0.3, 0.2, 0.1], "b_max": 3},
    "mdp": {"n_trunc": 30},
    "thresholds": {"r_good": 2, "r_bad": 1},
    "sim": {"horizon": 10000, "replications": 1000, "master_seed": 20140001,
            "record_stride": 100}
  })";
  const app::ExperimentConfig c = app::parse_config(config);
  const fs::path root = fs::temp_directory_path() / "ehrse_acceptance";
  fs::remove_all(root);
  const app::Artifacts a = app::cmd_compare(c, root / "a");
  const app::Artifacts b = app::cmd_compare(c, root / "b");
  if (a.files != b.files) return {false, "different artifact lists"};
  for (const auto& f : a.files) {
    if (slurp(root / "a" / f) != slurp(root / "b" / f)) {
      return {false, "differs: " + f.generic_string()};
    }
  }
  fs::remove_all(root);
  return {true, fmt("%zu CSV files byte-identical", a.files.size())};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"psi matches the reference matrix", psi_golden},
      {"ladder traces increase and rungs are PSD-ordered", ladder_property},
      {"steady-state covariance matches the quadratic root", steady_oracle},
      {"RVI equals brute-force policy enumeration", rvi_vs_brute_force},
      {"simulated threshold cost within 2% of exact", sim_vs_exact},
      {"threshold beats greedy by > 3 SE; J* below threshold cost", threshold_beats_greedy},
      {"push-forward power law equals the piecewise formula", power_law},
      {"compare output is byte-identical across runs", compare_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %zu. %s (%.2fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
