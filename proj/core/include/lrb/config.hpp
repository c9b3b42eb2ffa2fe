#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrb/env.hpp"
#include "lrb/policies.hpp"

namespace lrb {

class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

// Where the experiment's model comes from: a file, or an inline generator
// spec.
struct ModelSource {
  std::string file;  // non-empty wins
  int actions = 0;
  int users = 0;
  int classes = 0;
  double noise = 0.0;
  int ell = 3;
  std::uint64_t seed = 0;
  GeneratorSpec gen;
};

struct PolicyCell {
  std::string label;
  PolicySpec spec;
};

struct ExperimentConfig {
  ModelSource model;
  std::vector<PolicyCell> policies;
  long sessions = 1;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  int parallelism = 0;  // 0 = hardware concurrency
};

// Loads TOML (default) or JSON by file extension; validates the schema.
// Throws ConfigError (field diagnostics) or TomlError (line diagnostics).
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_text(const std::string& text, bool is_toml);

std::string to_string(PolicyKind kind);
std::string to_string(GammaSchedule schedule);
std::string to_string(OfulMode mode);
PolicyKind policy_kind_from_string(const std::string& s);
GammaSchedule schedule_from_string(const std::string& s);
OfulMode oful_mode_from_string(const std::string& s);

// JSON snapshot of one policy spec; parsing its own output yields an equal
// spec (the sidecar round-trip contract).
std::string policy_spec_to_json(const PolicySpec& spec);
PolicySpec policy_spec_from_json(const std::string& text);

bool operator==(const PolicySpec& a, const PolicySpec& b);

// Default cell label, e.g. "rtp_oful_sqrt".
std::string default_label(const PolicySpec& spec);

}  // namespace lrb
