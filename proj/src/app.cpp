#include "ehrse/app.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "ehrse/csv.hpp"
#include "ehrse/errors.hpp"
#include "ehrse/threshold.hpp"
#include "json.hpp"

#ifndef EHRSE_VERSION
#define EHRSE_VERSION "0.0.0"
#endif

namespace ehrse::app {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kLambdaAgreement = 1e-9;

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(path + "." + key, "missing required field");
  return *v;
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!keys.count(key)) throw ConfigError(path + "." + key, "unknown field");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

long integer(const json& v, const std::string& path, long min_value) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const long x = v.get<long>();
  if (x < min_value) {
    throw ConfigError(path, "must be at least " + std::to_string(min_value));
  }
  return x;
}

// A matrix is a nested array of rows, or a bare number for 1x1.
Matrix matrix(const json& v, const std::string& path) {
  if (v.is_number()) return Matrix::Constant(1, 1, number(v, path));
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty nested array");
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::Index cols = -1;
  Matrix M;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = v[i];
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.empty()) throw ConfigError(row_path, "expected a non-empty array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      M.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(row_path, "row length differs from the first row");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      M(i, j) = number(row[j], row_path + "[" + std::to_string(j) + "]");
    }
  }
  return M;
}

std::vector<double> probability_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array");
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double p = number(v[i], path + "[" + std::to_string(i) + "]");
    if (p < 0.0) throw ConfigError(path + "[" + std::to_string(i) + "]", "must be >= 0");
    sum += p;
    out.push_back(p);
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ConfigError(path, "probabilities sum to " + csv::format(sum) + ", not 1");
  }
  return out;
}

double probability(const json& v, const std::string& path) {
  const double p = number(v, path);
  if (p < 0.0 || p > 1.0) throw ConfigError(path, "must lie in [0, 1]");
  return p;
}

SystemModel parse_system(const json& j) {
  reject_unknown(j, "system", {"A", "C", "Q", "R", "Pi0"});
  Matrix A = matrix(require(j, "system", "A"), "system.A");
  Matrix C = matrix(require(j, "system", "C"), "system.C");
  Matrix Q = matrix(require(j, "system", "Q"), "system.Q");
  Matrix R = matrix(require(j, "system", "R"), "system.R");
  Matrix Pi0 = find(j, "Pi0") ? matrix(j["Pi0"], "system.Pi0") : Q;
  try {
    return SystemModel::validated(std::move(A), std::move(C), std::move(Q), std::move(R),
                                  std::move(Pi0));
  } catch (const ModelError& e) {
    throw ConfigError("system", e.what());
  }
}

ChannelModel parse_channel(const json& j) {
  reject_unknown(j, "channel", {"lambda", "beta", "n0", "w"});
  const bool has_lambda = find(j, "lambda") != nullptr;
  const bool has_any_physical = find(j, "beta") || find(j, "n0") || find(j, "w");
  std::optional<ChannelModel> physical;
  if (has_any_physical) {
    const double beta = number(require(j, "channel", "beta"), "channel.beta");
    const double n0 = number(require(j, "channel", "n0"), "channel.n0");
    const double w = number(require(j, "channel", "w"), "channel.w");
    try {
      physical = ChannelModel::from_physical(beta, n0, w);
    } catch (const ModelError& e) {
      throw ConfigError("channel", e.what());
    }
  }
  if (!has_lambda) {
    if (!physical) throw ConfigError("channel", "give either lambda or beta/n0/w");
    return *physical;
  }
  const double lambda = number(j["lambda"], "channel.lambda");
  ChannelModel direct = [&] {
    try {
      return ChannelModel::from_lambda(lambda);
    } catch (const ModelError& e) {
      throw ConfigError("channel.lambda", e.what());
    }
  }();
  if (physical && std::abs(physical->lambda() - lambda) > kLambdaAgreement) {
    throw ConfigError("channel.lambda", "disagrees with beta/(n0*w), which gives " +
                                            csv::format(physical->lambda()));
  }
  return physical ? *physical : direct;
}

struct EnergySection {
  EnergyModel model;
  InitialCondition initial;
};

EnergySection parse_energy(const json& j) {
  reject_unknown(j, "energy",
                 {"p_gg", "p_gb", "p_bg", "p_bb", "good", "bad", "b_max", "b0", "e0"});
  const double p_gg = probability(require(j, "energy", "p_gg"), "energy.p_gg");
  const double p_bg = probability(require(j, "energy", "p_bg"), "energy.p_bg");
  const double p_gb = find(j, "p_gb") ? probability(j["p_gb"], "energy.p_gb") : 1.0 - p_gg;
  const double p_bb = find(j, "p_bb") ? probability(j["p_bb"], "energy.p_bb") : 1.0 - p_bg;
  if (std::abs(p_gg + p_gb - 1.0) > 1e-12) {
    throw ConfigError("energy.p_gb", "p_gg + p_gb must equal 1");
  }
  if (std::abs(p_bg + p_bb - 1.0) > 1e-12) {
    throw ConfigError("energy.p_bb", "p_bg + p_bb must equal 1");
  }
  std::vector<double> good = probability_vector(require(j, "energy", "good"), "energy.good");
  std::vector<double> bad = probability_vector(require(j, "energy", "bad"), "energy.bad");
  const long capacity = static_cast<long>(good.size()) - 1;
  if (find(j, "b_max")) {
    const long b_max = integer(j["b_max"], "energy.b_max", 0);
    if (b_max != capacity) {
      throw ConfigError("energy.good", "length must be b_max + 1 = " +
                                           std::to_string(b_max + 1) +
                                           " (fold any larger harvest into the last entry)");
    }
  }
  if (static_cast<long>(bad.size()) - 1 != capacity) {
    throw ConfigError("energy.bad", "length must equal that of energy.good");
  }

  InitialCondition initial;
  if (find(j, "b0")) {
    initial.b0 = static_cast<int>(integer(j["b0"], "energy.b0", 0));
    if (initial.b0 > capacity) throw ConfigError("energy.b0", "must not exceed b_max");
  }
  if (find(j, "e0")) {
    const json& e0 = j["e0"];
    if (!e0.is_string() || (e0 != "G" && e0 != "B")) {
      throw ConfigError("energy.e0", "must be \"G\" or \"B\"");
    }
    initial.e0 = e0 == "G" ? Condition::kGood : Condition::kBad;
  }

  try {
    return {EnergyModel{EnvironmentChain(p_gg, p_gb, p_bg, p_bb),
                        HarvestDistribution(std::move(good), std::move(bad))},
            initial};
  } catch (const ModelError& e) {
    throw ConfigError("energy", e.what());
  }
}

void write_matrix_row(csv::Writer& w, std::string label, const Matrix& M, Eigen::Index row) {
  std::vector<std::string> fields{std::move(label)};
  for (Eigen::Index c = 0; c < M.cols(); ++c) fields.push_back(csv::format(M(row, c)));
  w.row(fields);
}

std::string pair_label(int battery, int n) {
  return "b" + std::to_string(battery) + "_" + std::string(to_string(condition_at(n)));
}

fs::path make_dir(const fs::path& out, const char* sub) {
  fs::path dir = out / sub;
  fs::create_directories(dir);
  return dir;
}

Policy resolve_policy(const ExperimentConfig& config, const MdpProblem& problem,
                      std::string_view name, std::optional<SolveResult>& solved) {
  if (name == "greedy") return greedy_policy();
  if (name == "threshold") {
    if (!config.thresholds) throw ConfigError("thresholds", "missing; required by this command");
    return Policy::threshold(*config.thresholds);
  }
  if (name == "optimal") {
    if (!solved) solved = relative_value_iteration(problem, config.rvi);
    return solved->policy;
  }
  throw ConfigError("policy", "unknown policy '" + std::string(name) + "'");
}

MdpProblem make_problem(const ExperimentConfig& config) {
  return MdpProblem(config.system, config.channel, config.energy, config.n_trunc,
                    config.initial);
}

Simulator make_simulator(const ExperimentConfig& config, const MdpProblem& problem) {
  return Simulator(config.system, config.channel, config.energy, config.sim, config.n_trunc,
                   problem.ladder().steady());
}

void write_curve(const fs::path& path, const SimResult& result) {
  csv::Writer w(path);
  w.header({"k", "mean_Jk", "stderr_Jk"});
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    w.values(result.steps[i], result.mean_cost[i], result.stderr_cost[i]);
  }
  w.close();
}

}  // namespace

std::string_view tool_version() noexcept { return EHRSE_VERSION; }

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  reject_unknown(j, "<root>",
                 {"system", "channel", "energy", "mdp", "thresholds", "sim", "compare"});

  SystemModel system = parse_system(require(j, "<root>", "system"));
  ChannelModel channel = parse_channel(require(j, "<root>", "channel"));
  EnergySection energy = parse_energy(require(j, "<root>", "energy"));

  ExperimentConfig config{.system = std::move(system), .channel = channel,
                          .energy = std::move(energy.model), .initial = energy.initial};
  const int capacity = config.energy.capacity();

  if (const json* mdp = find(j, "mdp")) {
    reject_unknown(*mdp, "mdp", {"n_trunc", "tol", "max_iter"});
    if (find(*mdp, "n_trunc")) {
      config.n_trunc = static_cast<int>(integer((*mdp)["n_trunc"], "mdp.n_trunc", 1));
    }
    if (find(*mdp, "tol")) {
      config.rvi.tol = number((*mdp)["tol"], "mdp.tol");
      if (config.rvi.tol <= 0.0) throw ConfigError("mdp.tol", "must be positive");
    }
    if (find(*mdp, "max_iter")) {
      config.rvi.max_iter = integer((*mdp)["max_iter"], "mdp.max_iter", 1);
    }
  }

  if (const json* th = find(j, "thresholds")) {
    reject_unknown(*th, "thresholds", {"r_good", "r_bad"});
    ThresholdPolicy t;
    t.r_good = static_cast<int>(integer(require(*th, "thresholds", "r_good"), "thresholds.r_good", 0));
    t.r_bad = static_cast<int>(integer(require(*th, "thresholds", "r_bad"), "thresholds.r_bad", 0));
    if (t.r_good > capacity) throw ConfigError("thresholds.r_good", "must not exceed b_max");
    if (t.r_bad > capacity) throw ConfigError("thresholds.r_bad", "must not exceed b_max");
    config.thresholds = t;
  }

  config.sim.b0 = config.initial.b0;
  config.sim.e0 = config.initial.e0;
  if (const json* sim = find(j, "sim")) {
    reject_unknown(*sim, "sim", {"horizon", "replications", "master_seed", "record_stride"});
    if (find(*sim, "horizon")) config.sim.horizon = integer((*sim)["horizon"], "sim.horizon", 1);
    if (find(*sim, "replications")) {
      config.sim.replications = integer((*sim)["replications"], "sim.replications", 1);
    }
    if (find(*sim, "master_seed")) {
      const json& seed = (*sim)["master_seed"];
      if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long>() >= 0)) {
        throw ConfigError("sim.master_seed", "expected a non-negative integer");
      }
      config.sim.master_seed = seed.get<std::uint64_t>();
    }
    if (find(*sim, "record_stride")) {
      config.sim.record_stride = integer((*sim)["record_stride"], "sim.record_stride", 1);
    }
  }

  if (const json* cmp = find(j, "compare")) {
    reject_unknown(*cmp, "compare", {"policies"});
    const json& list = require(*cmp, "compare", "policies");
    if (!list.is_array() || list.empty()) {
      throw ConfigError("compare.policies", "expected a non-empty array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "compare.policies[" + std::to_string(i) + "]";
      if (!list[i].is_string()) throw ConfigError(path, "expected a string");
      const std::string name = list[i].get<std::string>();
      if (name != "optimal" && name != "threshold" && name != "greedy") {
        throw ConfigError(path, "unknown policy '" + name + "'");
      }
      if (name == "threshold" && !config.thresholds) {
        throw ConfigError(path, "threshold policy requested but no thresholds given");
      }
      config.compare_policies.push_back(name);
    }
  } else {
    config.compare_policies = {"optimal"};
    if (config.thresholds) config.compare_policies.push_back("threshold");
    config.compare_policies.push_back("greedy");
  }

  config.source_hash = sha256_hex(text);
  return config;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Artifacts cmd_solve(const ExperimentConfig& config, const fs::path& out) {
  const MdpProblem problem = make_problem(config);
  const SolveResult result = relative_value_iteration(problem, config.rvi);
  const fs::path dir = make_dir(out, "solve");
  Artifacts artifacts;

  {
    csv::Writer w(dir / "policy.csv");
    w.header({"flat_index", "m", "n", "l", "action", "H"});
    for (int s = 0; s < problem.num_states(); ++s) {
      const MdpState st = problem.space().state(s);
      w.values(s, st.m, st.n, st.l, result.policy.table()[s], result.relative_values(s));
    }
    w.close();
    artifacts.files.push_back("solve/policy.csv");
  }
  {
    csv::Writer w(dir / "summary.csv");
    w.header({"metric", "value"});
    w.values("avg_cost", result.avg_cost);
    w.values("steady_trace", problem.ladder().traces.front());
    w.values("residual", result.residual);
    w.values("iterations", result.iterations);
    w.values("damped", static_cast<int>(result.damped));
    w.values("n_trunc", problem.n_trunc());
    w.values("top_rung_mass", result.top_rung_mass);
    w.values("truncation_bound", result.truncation_bound);
    w.values("recurrent_classes", result.recurrent_classes);
    w.close();
    artifacts.files.push_back("solve/summary.csv");
  }
  return artifacts;
}

Artifacts cmd_psi(const ExperimentConfig& config, const fs::path& out) {
  if (!config.thresholds) throw ConfigError("thresholds", "missing; required by psi");
  const ThresholdPolicy& t = *config.thresholds;
  const Matrix psi = build_psi(t, config.energy);
  const Vector q = stationary_distribution(psi);
  const int capacity = config.energy.capacity();
  const Vector omega = omega_distribution(q, t, capacity);
  const fs::path dir = make_dir(out, "psi");
  Artifacts artifacts;

  {
    // Row/column i is the pair (battery = i / 2, condition = i % 2), G before B.
    csv::Writer w(dir / "psi.csv");
    std::vector<std::string> header{"from\\to"};
    for (int i = 0; i < psi.cols(); ++i) header.push_back(pair_label(i / 2, i % 2));
    w.row(header);
    for (int i = 0; i < psi.rows(); ++i) write_matrix_row(w, pair_label(i / 2, i % 2), psi, i);
    w.close();
    artifacts.files.push_back("psi/psi.csv");
  }
  {
    csv::Writer w(dir / "q_star.csv");
    w.header({"index", "battery", "condition", "probability"});
    for (int i = 0; i < q.size(); ++i) {
      w.values(i, i / 2, std::string(to_string(condition_at(i % 2))), q(i));
    }
    w.close();
    artifacts.files.push_back("psi/q_star.csv");
  }
  {
    csv::Writer w(dir / "omega.csv");
    w.header({"power", "probability"});
    for (int i = 0; i <= capacity; ++i) w.values(i, omega(i));
    w.close();
    artifacts.files.push_back("psi/omega.csv");
  }
  return artifacts;
}

Artifacts cmd_simulate(const ExperimentConfig& config, const fs::path& out,
                       std::string_view policy_name, bool estimates) {
  const MdpProblem problem = make_problem(config);
  std::optional<SolveResult> solved;
  const Policy policy = resolve_policy(config, problem, policy_name, solved);
  const Simulator sim = make_simulator(config, problem);
  const SimResult result = sim.run(policy);
  const fs::path dir = make_dir(out, "sim");
  const std::string name(policy_name);
  Artifacts artifacts;

  write_curve(dir / (name + ".csv"), result);
  artifacts.files.push_back("sim/" + name + ".csv");

  {
    csv::Writer w(dir / ("trace_" + name + ".csv"));
    w.header({"k", "e", "r", "b_after", "omega", "gamma", "rung", "trace", "Jk"});
    for (const StepRecord& s : sim.trajectory(policy, 0)) {
      w.values(s.k, std::string(to_string(s.condition)), s.harvest, s.battery, s.power,
               static_cast<int>(s.arrival), s.rung, s.trace, s.running_cost);
    }
    w.close();
    artifacts.files.push_back("sim/trace_" + name + ".csv");
  }

  if (estimates) {
    csv::Writer w(dir / ("estimates_" + name + ".csv"));
    const auto n = config.system.state_dim();
    std::vector<std::string> header{"k", "gamma", "trace", "squared_error"};
    for (const char* prefix : {"x", "xs", "xr"}) {
      for (Eigen::Index i = 0; i < n; ++i) header.push_back(prefix + std::to_string(i));
    }
    w.row(header);
    for (const EstimateRecord& e : sim.estimates(policy, 0)) {
      std::vector<std::string> row{std::to_string(e.k), std::to_string(int(e.arrival)),
                                   csv::format(e.trace), csv::format(e.squared_error)};
      for (const Vector* v : {&e.state, &e.local_estimate, &e.remote_estimate}) {
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(csv::format((*v)(i)));
      }
      w.row(row);
    }
    w.close();
    artifacts.files.push_back("sim/estimates_" + name + ".csv");
  }

  {
    csv::Writer w(dir / "summary.csv");
    w.header({"policy", "mean_J", "stderr_J", "exact_J", "top_rung_frequency", "arrival_rate"});
    w.values(name, result.mean_final(), result.stderr_final(),
             policy_evaluate_exact(problem, policy), result.top_rung_frequency(),
             static_cast<double>(result.arrivals) / static_cast<double>(result.total_steps));
    w.close();
    artifacts.files.push_back("sim/summary.csv");
  }
  return artifacts;
}

Artifacts cmd_compare(const ExperimentConfig& config, const fs::path& out) {
  const MdpProblem problem = make_problem(config);
  std::optional<SolveResult> solved;
  std::vector<NamedPolicy> policies;
  for (const std::string& name : config.compare_policies) {
    policies.push_back({name, resolve_policy(config, problem, name, solved)});
  }
  const Simulator sim = make_simulator(config, problem);
  const Comparison cmp = sim.compare(policies);
  const fs::path dir = make_dir(out, "sim");
  Artifacts artifacts;

  for (std::size_t i = 0; i < cmp.names.size(); ++i) {
    write_curve(dir / (cmp.names[i] + ".csv"), cmp.results[i]);
    artifacts.files.push_back("sim/" + cmp.names[i] + ".csv");
  }
  {
    csv::Writer w(dir / "summary.csv");
    w.header({"policy", "mean_J", "stderr_J", "exact_J", "top_rung_frequency", "arrival_rate"});
    for (std::size_t i = 0; i < cmp.names.size(); ++i) {
      const SimResult& r = cmp.results[i];
      w.values(cmp.names[i], r.mean_final(), r.stderr_final(),
               policy_evaluate_exact(problem, policies[i].policy), r.top_rung_frequency(),
               static_cast<double>(r.arrivals) / static_cast<double>(r.total_steps));
    }
    w.close();
    artifacts.files.push_back("sim/summary.csv");
  }
  if (!cmp.rows.empty()) {
    csv::Writer w(dir / "comparison.csv");
    w.header({"baseline", "challenger", "mean_diff", "stderr_diff"});
    for (const ComparisonRow& row : cmp.rows) {
      w.values(cmp.names[row.baseline], cmp.names[row.challenger], row.mean_diff,
               row.stderr_diff);
    }
    w.close();
    artifacts.files.push_back("sim/comparison.csv");
  }
  return artifacts;
}

Artifacts cmd_sweep(const ExperimentConfig& config, const fs::path& out) {
  const MdpProblem problem = make_problem(config);
  const GridSearchResult grid = threshold_grid_search(problem);
  const fs::path dir = make_dir(out, "sweep");
  Artifacts artifacts;
  {
    csv::Writer w(dir / "thresholds.csv");
    w.header({"r_good", "r_bad", "exact_J"});
    for (const ThresholdCost& c : grid.table) {
      w.values(c.thresholds.r_good, c.thresholds.r_bad, c.cost);
    }
    w.close();
    artifacts.files.push_back("sweep/thresholds.csv");
  }
  {
    csv::Writer w(dir / "best.csv");
    w.header({"r_good", "r_bad", "exact_J"});
    w.values(grid.best.thresholds.r_good, grid.best.thresholds.r_bad, grid.best.cost);
    w.close();
    artifacts.files.push_back("sweep/best.csv");
  }
  return artifacts;
}

void write_manifest(const ExperimentConfig& config, const fs::path& out,
                    std::string_view command, const Artifacts& artifacts) {
  fs::create_directories(out);
  std::ofstream m(out / "manifest.txt");
  m << "tool = ehrse\n";
  m << "version = " << tool_version() << "\n";
  m << "command = " << command << "\n";
  m << "config_sha256 = " << config.source_hash << "\n";
  m << "master_seed = " << config.sim.master_seed << "\n";
  for (const fs::path& f : artifacts.files) m << "artifact = " << f.generic_string() << "\n";
  m.flush();
  if (!m) throw std::runtime_error("failed writing manifest");
}

}  // namespace ehrse::app
