#include "lrb/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lrb/errors.hpp"
#include "lrb/features.hpp"
#include "lrb/io.hpp"
#include "lrb/oful.hpp"
#include "lrb/policies.hpp"
#include "lrb/toml.hpp"

#ifndef LRB_GIT_DESCRIBE
#define LRB_GIT_DESCRIBE "unknown"
#endif

namespace lrb {

using nlohmann::json;

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("LBL_LOG");
    if (env == nullptr) return 1;
    try {
      return std::stoi(env);
    } catch (...) {
      return 1;
    }
  }();
  return level;
}

namespace {

std::mutex log_mutex;

}  // namespace

void log_info(const std::string& message) {
  if (log_level() >= 1) {
    std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << "[lrb] " << message << "\n";
  }
}

void log_debug(const std::string& message) {
  if (log_level() >= 2) {
    std::lock_guard<std::mutex> lock(log_mutex);
    std::cerr << "[lrb:debug] " << message << "\n";
  }
}

LatentModel resolve_model(const ModelSource& source) {
  if (!source.file.empty()) return model_from_json(read_file(source.file));
  LatentModel model =
      generate_instance(source.actions, source.users, source.classes, source.gen, source.seed);
  model.r_noise = source.noise;
  model.ell = source.ell;
  return model;
}

std::vector<CellOutput> run_experiment(const LatentModel& model, const ExperimentConfig& cfg) {
  struct Cell {
    int policy_index;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (int p = 0; p < static_cast<int>(cfg.policies.size()); ++p)
    for (const std::uint64_t seed : cfg.seeds) cells.push_back({p, seed});

  std::vector<CellOutput> outputs(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      const PolicyCell& pc = cfg.policies[cell.policy_index];
      CellOutput& out = outputs[i];
      out.label = pc.label;
      out.seed = cell.seed;
      try {
        PolicySpec spec = pc.spec;
        spec.num_classes = spec.num_classes > 0 ? spec.num_classes : model.num_classes();
        const RunResult run = run_policy(model, cfg.sessions, spec, cell.seed);
        out.cumulative = run.ledger.cumulative;
        out.ok = true;
        log_info("cell done: " + out.label + " seed " + std::to_string(out.seed) +
                 " final regret " + format_double(out.cumulative.back()));
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
        log_info("cell FAILED: " + out.label + " seed " + std::to_string(out.seed) + ": " +
                 out.error);
      }
    }
  };

  unsigned parallelism = cfg.parallelism > 0 ? static_cast<unsigned>(cfg.parallelism)
                                             : std::thread::hardware_concurrency();
  if (parallelism == 0) parallelism = 1;
  parallelism = std::min<unsigned>(parallelism, cells.size());
  std::vector<std::thread> threads;
  for (unsigned i = 0; i + 1 < parallelism; ++i) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  return outputs;
}

std::string summary_csv(const ExperimentConfig& cfg, const std::vector<CellOutput>& cells) {
  std::string out = "policy,t,mean_regret,std_regret\n";
  for (const PolicyCell& pc : cfg.policies) {
    std::vector<const std::vector<double>*> curves;
    for (const CellOutput& cell : cells)
      if (cell.ok && cell.label == pc.label) curves.push_back(&cell.cumulative);
    if (curves.empty()) continue;
    const std::size_t horizon = curves.front()->size();
    for (std::size_t t = 0; t < horizon; ++t) {
      double mean = 0.0;
      for (const auto* c : curves) mean += (*c)[t];
      mean /= static_cast<double>(curves.size());
      double var = 0.0;
      if (curves.size() > 1) {
        for (const auto* c : curves) var += ((*c)[t] - mean) * ((*c)[t] - mean);
        var /= static_cast<double>(curves.size() - 1);
      }
      out += pc.label;
      out += ',';
      out += std::to_string(t + 1);
      out += ',';
      out += format_double(mean);
      out += ',';
      out += format_double(std::sqrt(var));
      out += '\n';
    }
  }
  return out;
}

namespace {

std::string cell_basename(const std::string& label, std::uint64_t seed) {
  return label + "_seed" + std::to_string(seed);
}

json policy_sidecar(const PolicyCell& pc, std::uint64_t seed, const ExperimentConfig& cfg,
                    const LatentModel& model, std::uint64_t model_hash) {
  json j;
  j["label"] = pc.label;
  j["seed"] = seed;
  j["sessions"] = cfg.sessions;
  j["ell"] = model.ell;
  j["policy"] = json::parse(policy_spec_to_json(pc.spec));
  j["gate_polarity"] = pc.spec.literal_gate ? "literal" : "analysis";
  char hash_hex[20];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(model_hash));
  j["model_hash"] = hash_hex;
  j["build"] = LRB_GIT_DESCRIBE;
  return j;
}

}  // namespace

int cmd_simulate(const SimulateOptions& options) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(options.config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const TomlError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!options.out_dir.empty()) cfg.output_dir = options.out_dir;
  if (!options.seeds.empty()) cfg.seeds = options.seeds;
  if (options.parallelism >= 0) cfg.parallelism = options.parallelism;
  for (PolicyCell& pc : cfg.policies) {
    if (options.literal_gate) pc.spec.literal_gate = true;
    if (options.rebuild_on_refresh) pc.spec.rebuild_on_refresh = true;
  }

  LatentModel model;
  try {
    model = resolve_model(cfg.model);
  } catch (const std::exception& e) {
    std::cerr << "config error: model: " << e.what() << "\n";
    return 2;
  }
  for (PolicyCell& pc : cfg.policies) {
    if (pc.spec.num_classes <= 0) pc.spec.num_classes = model.num_classes();
    if (pc.spec.kind != PolicyKind::kUcbPerUser &&
        pc.spec.oful.mode == OfulMode::kRegularized) {
      const double partial_floor =
          std::max(1.0, 1.0 / (4.0 * pc.spec.oful.r_theta * pc.spec.oful.r_theta));
      if (pc.spec.oful.lambda < partial_floor)
        log_info("warning: " + pc.label + ": lambda below the robustness floor " +
                 format_double(partial_floor));
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) {
    std::cerr << "config error: cannot create output dir '" << cfg.output_dir << "'\n";
    return 2;
  }

  const std::string model_json = model_to_json(model);
  write_file(cfg.output_dir + "/model.json", model_json);
  const std::uint64_t model_hash = fnv1a64(model_json);

  const std::vector<CellOutput> cells = run_experiment(model, cfg);

  bool any_failed = false;
  std::size_t idx = 0;
  for (int p = 0; p < static_cast<int>(cfg.policies.size()); ++p) {
    for (const std::uint64_t seed : cfg.seeds) {
      const CellOutput& cell = cells[idx++];
      if (!cell.ok) {
        any_failed = true;
        continue;
      }
      const std::string base = cfg.output_dir + "/" + cell_basename(cell.label, seed);
      write_file(base + ".csv", regret_to_csv(cell.cumulative));
      write_file(base + ".meta.json",
                 policy_sidecar(cfg.policies[p], seed, cfg, model, model_hash).dump(2) + "\n");
    }
  }
  write_file(cfg.output_dir + "/summary.csv", summary_csv(cfg, cells));
  return any_failed ? 3 : 0;
}

namespace {

struct DecomposeInput {
  SymMatrix m2;
  SymTensor3 m3;
  long sessions = 0;
  bool has_model = false;
  LatentModel model;
};

DecomposeInput load_decompose_input(const std::string& path) {
  DecomposeInput in;
  const std::string text = read_file(path);
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
    const std::vector<InteractionRecord> records = records_from_csv(text);
    if (records.empty()) throw std::invalid_argument("no records in " + path);
    int num_actions = 0;
    for (const InteractionRecord& r : records) num_actions = std::max(num_actions, r.action + 1);
    MomentEstimates est(num_actions);
    std::size_t start = 0;
    while (start < records.size()) {
      std::size_t end = start;
      while (end < records.size() && records[end].session == records[start].session) ++end;
      est.ingest_session(std::span<const InteractionRecord>(records).subspan(start, end - start));
      start = end;
    }
    in.m2 = est.m2();
    in.m3 = est.m3();
    in.sessions = est.sessions();
    return in;
  }
  const json j = json::parse(text);
  if (j.contains("m2")) {
    MomentsFile mf = moments_from_json(text);
    in.m2 = std::move(mf.m2);
    in.m3 = std::move(mf.m3);
    in.sessions = mf.sessions;
    return in;
  }
  in.model = model_from_json(text);
  in.has_model = true;
  std::vector<double> v_beta(in.model.num_classes(), 0.0);
  for (int b = 0; b < in.model.num_users(); ++b)
    for (int c = 0; c < in.model.num_classes(); ++c)
      v_beta[c] += in.model.beta[b] * in.model.v(b, c);
  in.m2 = population_m2(in.model.u, v_beta);
  in.m3 = population_m3(in.model.u, v_beta);
  in.sessions = 1;  // population moments are exact
  return in;
}

}  // namespace

int cmd_decompose(const DecomposeOptions& options) {
  DecomposeInput in;
  try {
    in = load_decompose_input(options.input_path);
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }

  if (options.report_bounds && !in.has_model) {
    std::cerr << "input error: --report-bounds needs a model file (true constants)\n";
    return 2;
  }
  int num_classes = options.num_classes;
  if (num_classes <= 0) {
    if (!in.has_model) {
      std::cerr << "input error: --classes is required for moment inputs\n";
      return 2;
    }
    num_classes = in.model.num_classes();
  }

  FeatureEstimate fe;
  try {
    fe = estimate_features_from_moments(in.m2, in.m3, in.sessions, num_classes, options.rtp);
  } catch (const RankDeficientMoments& e) {
    std::cerr << "decompose error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }

  const std::string fe_json = feature_estimate_to_json(fe);
  if (options.out_path.empty()) {
    std::cout << fe_json;
  } else {
    write_file(options.out_path, fe_json);
  }

  if (in.has_model) {
    const ColumnAlignment align = num_classes <= 8 ? align_columns(in.model.u, fe.u_bar)
                                                   : align_columns_greedy(in.model.u, fe.u_bar);
    std::cout << "max column error: " << format_double(align.max_err) << "\n";
  }

  if (options.report_bounds) {
    const ModelConstants mc = derive_constants(in.model.u, in.model.v, in.model.beta);
    const long n = options.bound_sessions > 0 ? options.bound_sessions
                                              : std::max<long>(in.sessions, 1);
    const std::vector<double> gammas(n, 1.0);
    const int a = in.model.num_actions();
    std::cout << "aleph: "
              << format_double(1.0 + 10.0 * (1.0 / mc.sigma_gap + 1.0 / mc.sigma_min) *
                                         (1.0 + std::pow(mc.u_max, 3.0)))
              << "\n";
    std::cout << "recovery constant: " << format_double(recovery_constant(mc, a, num_classes))
              << "\n";
    std::cout << "recovery bound (n=" << n
              << ", gamma=1): " << format_double(recovery_bound(mc, a, num_classes, n, gammas,
                                                                options.delta))
              << "\n";
    const double alpha_star = num_classes <= 4
                                  ? perturbation_gain(in.model.u)
                                  : perturbation_gain_sampled(in.model.u, 20000, 1);
    std::vector<double> v_b(num_classes);
    for (int b = 0; b < in.model.num_users(); ++b) {
      for (int c = 0; c < num_classes; ++c) v_b[c] = in.model.v(b, c);
      double best = -1.0, second = -1.0;
      for (int act = 0; act < a; ++act) {
        const double s = in.model.mean_reward(act, b);
        if (s > best) {
          second = best;
          best = s;
        } else if (s > second) {
          second = s;
        }
      }
      const double gap = best - second;
      if (!(gap > 0.0)) {
        std::cout << "user " << b << ": tied optimum, threshold undefined\n";
        continue;
      }
      const ExplorationThreshold th =
          exploration_threshold(mc, a, num_classes, options.delta, v_b, gap, alpha_star);
      std::cout << "user " << b << ": threshold branches moment="
                << format_double(th.moment_branch) << " oful=" << format_double(th.oful_branch)
                << " value=" << format_double(th.value) << "\n";
    }
  }
  return 0;
}

int cmd_diagnose(const DiagnoseOptions& options) {
  LatentModel model;
  try {
    model = model_from_json(read_file(options.model_path));
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
  const int a = model.num_actions();
  const int c = model.num_classes();
  const ModelConstants mc = derive_constants(model.u, model.v, model.beta);

  std::cout << "sigma_min: " << format_double(mc.sigma_min) << "\n";
  std::cout << "sigma_max: " << format_double(mc.sigma_max) << "\n";
  std::cout << "sigma_gap: " << format_double(mc.sigma_gap) << "\n";
  std::cout << "v_min: " << format_double(mc.v_min) << "\n";
  std::cout << "u_max: " << format_double(mc.u_max) << "\n";

  bool degenerate = false;
  const double sigma_tol = 1e-6 * std::max(1.0, mc.sigma_max);
  if (!(mc.sigma_min > sigma_tol)) {
    std::cout << "degenerate: sigma_min is zero (second moment rank below C)\n";
    degenerate = true;
  }
  if (c > 1 && !(mc.sigma_gap > sigma_tol)) {
    std::cout << "degenerate: sigma_gap is zero (repeated spectrum, e.g. duplicated classes)\n";
    degenerate = true;
  }
  if (!(mc.v_min > 0.0)) {
    std::cout << "degenerate: v_min is zero (some user puts no mass on a class)\n";
    degenerate = true;
  }
  if (degenerate) return 5;

  const double aleph = 1.0 + 10.0 * (1.0 / mc.sigma_gap + 1.0 / mc.sigma_min) *
                                 (1.0 + std::pow(mc.u_max, 3.0));
  std::cout << "aleph: " << format_double(aleph) << "\n";
  std::cout << "recovery constant: " << format_double(recovery_constant(mc, a, c)) << "\n";
  std::cout << "recovery constant (leading order): "
            << format_double(recovery_constant_asymptotic(mc, a, c)) << "\n";

  const bool exact_alpha = c <= 4;
  const double alpha_star =
      exact_alpha ? perturbation_gain(model.u) : perturbation_gain_sampled(model.u, 20000, 1);
  std::cout << "alpha_star" << (exact_alpha ? "" : " (sampled lower bound)") << ": "
            << format_double(alpha_star) << "\n";

  std::vector<int> users;
  if (options.user >= 0) {
    if (options.user >= model.num_users()) {
      std::cerr << "input error: user index out of range\n";
      return 2;
    }
    users.push_back(options.user);
  } else {
    for (int b = 0; b < model.num_users(); ++b) users.push_back(b);
  }

  std::vector<double> v_b(c);
  for (const int b : users) {
    for (int k = 0; k < c; ++k) v_b[k] = model.v(b, k);
    double best = -std::numeric_limits<double>::infinity(), second = best;
    for (int act = 0; act < a; ++act) {
      const double s = model.mean_reward(act, b);
      if (s > best) {
        second = best;
        best = s;
      } else if (s > second) {
        second = s;
      }
    }
    const double gap = best - second;
    std::cout << "user " << b << ": gap " << format_double(gap);
    if (!(gap > 0.0)) {
      std::cout << " — degenerate: no unique optimal action\n";
      degenerate = true;
      continue;
    }
    const ExplorationThreshold th =
        exploration_threshold(mc, a, c, options.delta, v_b, gap, alpha_star);
    double radius = std::numeric_limits<double>::quiet_NaN();
    try {
      radius = critical_radius(model.u, v_b);
    } catch (const std::exception&) {
      // tied means no radius; already flagged by the gap
    }
    std::cout << ", threshold moment-branch " << format_double(th.moment_branch)
              << ", oful-branch " << format_double(th.oful_branch) << ", value "
              << format_double(th.value) << ", critical radius " << format_double(radius) << "\n";
  }
  return degenerate ? 5 : 0;
}

}  // namespace lrb
