#include "lrb/config.hpp"

#include <set>

#include <json.hpp>

#include "lrb/toml.hpp"

namespace lrb {

using nlohmann::json;

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRtpOful: return "rtp_oful";
    case PolicyKind::kUcbPerUser: return "ucb";
    case PolicyKind::kOracleOful: return "oracle_oful";
    case PolicyKind::kAlsOful: return "als_oful";
  }
  return "?";
}

std::string to_string(GammaSchedule schedule) {
  switch (schedule) {
    case GammaSchedule::kSqrt: return "sqrt";
    case GammaSchedule::kCubeRoot: return "cuberoot";
    case GammaSchedule::kHexagonAware: return "hexagon";
    case GammaSchedule::kConstant: return "constant";
  }
  return "?";
}

std::string to_string(OfulMode mode) {
  return mode == OfulMode::kRegularized ? "regularized" : "unregularized";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "rtp_oful") return PolicyKind::kRtpOful;
  if (s == "ucb") return PolicyKind::kUcbPerUser;
  if (s == "oracle_oful") return PolicyKind::kOracleOful;
  if (s == "als_oful") return PolicyKind::kAlsOful;
  throw ConfigError("kind", "unknown policy kind '" + s + "'");
}

GammaSchedule schedule_from_string(const std::string& s) {
  if (s == "sqrt") return GammaSchedule::kSqrt;
  if (s == "cuberoot") return GammaSchedule::kCubeRoot;
  if (s == "hexagon") return GammaSchedule::kHexagonAware;
  if (s == "constant") return GammaSchedule::kConstant;
  throw ConfigError("schedule", "unknown schedule '" + s + "'");
}

OfulMode oful_mode_from_string(const std::string& s) {
  if (s == "regularized") return OfulMode::kRegularized;
  if (s == "unregularized") return OfulMode::kUnregularized;
  throw ConfigError("mode", "unknown mode '" + s + "'");
}

std::string default_label(const PolicySpec& spec) {
  std::string label = to_string(spec.kind);
  if (spec.kind == PolicyKind::kRtpOful || spec.kind == PolicyKind::kAlsOful) {
    label += "_" + to_string(spec.schedule);
  }
  return label;
}

namespace {

// Pulls a field of the expected JSON type, with path-qualified diagnostics.
class Reader {
public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  bool has(const std::string& key) const { return node_.contains(key); }

  template <typename T>
  T get(const std::string& key) const {
    if (!node_.contains(key)) throw ConfigError(path_ + key, "missing required field");
    return convert<T>(key);
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) const {
    if (!node_.contains(key)) return fallback;
    return convert<T>(key);
  }

  Reader child(const std::string& key) const {
    if (!node_.at(key).is_object()) throw ConfigError(path_ + key, "expected a table");
    return Reader(node_.at(key), path_ + key + ".");
  }

  void check_known(const std::set<std::string>& known) const {
    for (const auto& [key, value] : node_.items())
      if (!known.contains(key)) throw ConfigError(path_ + key, "unknown field");
  }

  const json& raw() const { return node_; }
  const std::string& path() const { return path_; }

private:
  template <typename T>
  T convert(const std::string& key) const {
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + key, "wrong type");
    }
  }

  const json& node_;
  std::string path_;
};

OfulParams parse_oful(const Reader& r) {
  r.check_known({"lambda", "r_theta", "r_noise", "delta", "mode", "general_radius", "r_x",
                 "lambda0"});
  OfulParams p;
  p.lambda = r.get_or("lambda", p.lambda);
  p.r_theta = r.get_or("r_theta", p.r_theta);
  p.r_noise = r.get_or("r_noise", p.r_noise);
  p.delta = r.get_or("delta", p.delta);
  p.mode = oful_mode_from_string(r.get_or<std::string>("mode", "regularized"));
  p.general_radius = r.get_or("general_radius", p.general_radius);
  p.r_x = r.get_or("r_x", p.r_x);
  p.lambda0 = r.get_or("lambda0", p.lambda0);
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw ConfigError(r.path() + "delta", "must lie in (0,1)");
  if (!(p.r_theta > 0.0)) throw ConfigError(r.path() + "r_theta", "must be positive");
  if (!(p.r_noise > 0.0)) throw ConfigError(r.path() + "r_noise", "must be positive");
  if (p.mode == OfulMode::kRegularized && !(p.lambda > 0.0))
    throw ConfigError(r.path() + "lambda", "must be positive in regularized mode");
  return p;
}

RtpConfig parse_rtp(const Reader& r) {
  r.check_known({"restarts", "power_iters", "seed", "tol"});
  RtpConfig cfg;
  cfg.restarts = r.get_or("restarts", cfg.restarts);
  cfg.power_iters = r.get_or("power_iters", cfg.power_iters);
  cfg.seed = r.get_or<std::uint64_t>("seed", cfg.seed);
  cfg.convergence_tol = r.get_or("tol", cfg.convergence_tol);
  if (cfg.restarts < 1) throw ConfigError(r.path() + "restarts", "must be >= 1");
  if (cfg.power_iters < 1) throw ConfigError(r.path() + "power_iters", "must be >= 1");
  if (!(cfg.convergence_tol > 0.0)) throw ConfigError(r.path() + "tol", "must be positive");
  return cfg;
}

AlsConfig parse_als(const Reader& r) {
  r.check_known({"iterations", "ridge", "init_scale"});
  AlsConfig cfg;
  cfg.iterations = r.get_or("iterations", cfg.iterations);
  cfg.ridge = r.get_or("ridge", cfg.ridge);
  cfg.init_scale = r.get_or("init_scale", cfg.init_scale);
  if (cfg.iterations < 0) throw ConfigError(r.path() + "iterations", "must be >= 0");
  return cfg;
}

PolicySpec parse_policy(const Reader& r, int num_classes) {
  r.check_known({"kind", "schedule", "constant_gamma", "hexagon", "oful", "rtp", "als", "label",
                 "literal_gate", "rebuild_on_refresh", "refresh_warmup", "ucb_scale",
                 "num_classes"});
  PolicySpec spec;
  spec.kind = policy_kind_from_string(r.get<std::string>("kind"));
  spec.schedule = schedule_from_string(r.get_or<std::string>("schedule", "sqrt"));
  spec.constant_gamma = r.get_or("constant_gamma", spec.constant_gamma);
  spec.hexagon = r.get_or("hexagon", spec.hexagon);
  spec.num_classes = num_classes;
  if (r.has("oful")) spec.oful = parse_oful(r.child("oful"));
  if (r.has("rtp")) spec.rtp = parse_rtp(r.child("rtp"));
  if (r.has("als")) spec.als = parse_als(r.child("als"));
  spec.literal_gate = r.get_or("literal_gate", spec.literal_gate);
  spec.rebuild_on_refresh = r.get_or("rebuild_on_refresh", spec.rebuild_on_refresh);
  spec.refresh_warmup = r.get_or("refresh_warmup", spec.refresh_warmup);
  spec.ucb_scale = r.get_or("ucb_scale", spec.ucb_scale);
  if (spec.schedule == GammaSchedule::kConstant &&
      !(spec.constant_gamma >= 0.0 && spec.constant_gamma <= 1.0))
    throw ConfigError(r.path() + "constant_gamma", "must lie in [0,1]");
  if (spec.schedule == GammaSchedule::kHexagonAware && !(spec.hexagon > 0.0))
    throw ConfigError(r.path() + "hexagon", "must be positive for the hexagon schedule");
  if (spec.refresh_warmup < 1) throw ConfigError(r.path() + "refresh_warmup", "must be >= 1");
  return spec;
}

ModelSource parse_model(const Reader& r) {
  r.check_known({"file", "actions", "users", "classes", "noise", "ell", "seed", "generator"});
  ModelSource m;
  if (r.has("file")) {
    m.file = r.get<std::string>("file");
    return m;
  }
  m.actions = r.get<int>("actions");
  m.users = r.get<int>("users");
  m.classes = r.get<int>("classes");
  m.noise = r.get_or("noise", 0.0);
  m.ell = r.get_or("ell", 3);
  m.seed = r.get_or<std::uint64_t>("seed", 0);
  if (r.has("generator")) {
    const Reader g = r.child("generator");
    g.check_known({"u_min", "u_max", "dirichlet_alpha", "v_floor", "beta"});
    m.gen.u_min = g.get_or("u_min", m.gen.u_min);
    m.gen.u_max = g.get_or("u_max", m.gen.u_max);
    m.gen.dirichlet_alpha = g.get_or("dirichlet_alpha", m.gen.dirichlet_alpha);
    m.gen.v_floor = g.get_or("v_floor", m.gen.v_floor);
    m.gen.beta = g.get_or<std::vector<double>>("beta", {});
  }
  if (m.actions < 1 || m.users < 1 || m.classes < 1)
    throw ConfigError(r.path() + "actions", "inline model needs positive actions/users/classes");
  if (m.ell < 3) throw ConfigError(r.path() + "ell", "must be >= 3");
  if (m.noise < 0.0) throw ConfigError(r.path() + "noise", "must be >= 0");
  return m;
}

}  // namespace

ExperimentConfig config_from_text(const std::string& text, bool is_toml) {
  json j;
  try {
    j = json::parse(is_toml ? toml_to_json(text) : text);
  } catch (const json::exception& e) {
    throw ConfigError("(root)", std::string("cannot parse config: ") + e.what());
  }
  const Reader root(j, "");
  root.check_known({"model", "policies", "sessions", "seeds", "output_dir", "parallelism"});

  ExperimentConfig cfg;
  cfg.model = parse_model(root.child("model"));
  cfg.sessions = root.get<long>("sessions");
  if (cfg.sessions < 1) throw ConfigError("sessions", "must be >= 1");
  cfg.seeds = root.get<std::vector<std::uint64_t>>("seeds");
  if (cfg.seeds.empty()) throw ConfigError("seeds", "must be nonempty");
  cfg.output_dir = root.get_or<std::string>("output_dir", cfg.output_dir);
  cfg.parallelism = root.get_or("parallelism", cfg.parallelism);
  if (cfg.parallelism < 0) throw ConfigError("parallelism", "must be >= 0");

  if (!root.raw().contains("policies") || !root.raw().at("policies").is_array() ||
      root.raw().at("policies").empty())
    throw ConfigError("policies", "need at least one policy table");
  // The policy learns C classes; for file-backed models the count is filled
  // in when the model is resolved.
  const int num_classes = cfg.model.classes;
  std::set<std::string> labels;
  int index = 0;
  for (const json& p : root.raw().at("policies")) {
    const Reader r(p, "policies[" + std::to_string(index) + "].");
    PolicyCell cell;
    cell.spec = parse_policy(r, num_classes);
    cell.label = r.get_or<std::string>("label", default_label(cell.spec));
    if (!labels.insert(cell.label).second)
      throw ConfigError(r.path() + "label", "duplicate policy label '" + cell.label + "'");
    cfg.policies.push_back(std::move(cell));
    ++index;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  {
    // local read to avoid a dependency on io.hpp
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw ConfigError("(file)", "cannot open config '" + path + "'");
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, got);
    std::fclose(f);
  }
  const bool is_toml = path.size() < 5 || path.substr(path.size() - 5) != ".json";
  return config_from_text(text, is_toml);
}

std::string policy_spec_to_json(const PolicySpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind);
  j["schedule"] = to_string(spec.schedule);
  j["constant_gamma"] = spec.constant_gamma;
  j["hexagon"] = spec.hexagon;
  j["num_classes"] = spec.num_classes;
  j["oful"] = {{"lambda", spec.oful.lambda},       {"r_theta", spec.oful.r_theta},
               {"r_noise", spec.oful.r_noise},     {"delta", spec.oful.delta},
               {"mode", to_string(spec.oful.mode)}, {"general_radius", spec.oful.general_radius},
               {"r_x", spec.oful.r_x},             {"lambda0", spec.oful.lambda0}};
  j["rtp"] = {{"restarts", spec.rtp.restarts},
              {"power_iters", spec.rtp.power_iters},
              {"seed", spec.rtp.seed},
              {"tol", spec.rtp.convergence_tol}};
  j["als"] = {{"iterations", spec.als.iterations},
              {"ridge", spec.als.ridge},
              {"init_scale", spec.als.init_scale}};
  j["literal_gate"] = spec.literal_gate;
  j["rebuild_on_refresh"] = spec.rebuild_on_refresh;
  j["refresh_warmup"] = spec.refresh_warmup;
  j["ucb_scale"] = spec.ucb_scale;
  return j.dump(2);
}

PolicySpec policy_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("(root)", std::string("cannot parse policy spec: ") + e.what());
  }
  const Reader r(j, "");
  PolicySpec spec = parse_policy(Reader(j, ""), r.get_or("num_classes", 1));
  return spec;
}

bool operator==(const PolicySpec& a, const PolicySpec& b) {
  return a.kind == b.kind && a.schedule == b.schedule && a.constant_gamma == b.constant_gamma &&
         a.hexagon == b.hexagon && a.oful.lambda == b.oful.lambda &&
         a.oful.r_theta == b.oful.r_theta && a.oful.r_noise == b.oful.r_noise &&
         a.oful.delta == b.oful.delta && a.oful.mode == b.oful.mode &&
         a.oful.general_radius == b.oful.general_radius && a.oful.r_x == b.oful.r_x &&
         a.oful.lambda0 == b.oful.lambda0 && a.rtp.restarts == b.rtp.restarts &&
         a.rtp.power_iters == b.rtp.power_iters && a.rtp.seed == b.rtp.seed &&
         a.rtp.convergence_tol == b.rtp.convergence_tol && a.als.iterations == b.als.iterations &&
         a.als.ridge == b.als.ridge && a.als.init_scale == b.als.init_scale &&
         a.num_classes == b.num_classes && a.literal_gate == b.literal_gate &&
         a.rebuild_on_refresh == b.rebuild_on_refresh && a.refresh_warmup == b.refresh_warmup &&
         a.ucb_scale == b.ucb_scale;
}

}  // namespace lrb
