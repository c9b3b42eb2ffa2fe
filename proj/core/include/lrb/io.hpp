#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrb/env.hpp"
#include "lrb/features.hpp"
#include "lrb/moments.hpp"

namespace lrb {

// 17 significant digits; round-trips every double bit-exactly.
std::string format_double(double x);

// Interaction log, one row per step: n,l,b,a,x,kind,gamma
std::string records_to_csv(std::span<const InteractionRecord> records);
std::vector<InteractionRecord> records_from_csv(const std::string& text);

// Regret curve: t,cumulative_regret
std::string regret_to_csv(std::span<const double> cumulative);

std::string model_to_json(const LatentModel& model);
LatentModel model_from_json(const std::string& text);

// {"n":..., "lambda":[...], "u_bar":[row-major], "v_bar":[...]}
std::string feature_estimate_to_json(const FeatureEstimate& fe);
FeatureEstimate feature_estimate_from_json(const std::string& text);

struct MomentsFile {
  SymMatrix m2;
  SymTensor3 m3;
  long sessions = 0;
};
std::string moments_to_json(const SymMatrix& m2, const SymTensor3& m3, long sessions);
MomentsFile moments_from_json(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view s);

}  // namespace lrb
