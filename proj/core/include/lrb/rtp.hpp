#pragma once

#include <cstdint>
#include <vector>

#include "lrb/linalg.hpp"

namespace lrb {

struct RtpConfig {
  int restarts = 100;     // candidate starts per extraction round
  int power_iters = 100;  // power-iteration steps per candidate, and again for refinement
  int factors = 1;        // number of eigenpairs to extract
  std::uint64_t seed = 0;
  double convergence_tol = 1e-12;  // early stop on ‖θ_{t+1} - θ_t‖
};

struct RobustEigPair {
  double lambda;
  std::vector<double> phi;  // unit vector
};

// Robust tensor power method: per extraction round, draw `restarts` uniform
// unit starts, run power iteration on each, keep the candidate maximizing
// T(θ,θ,θ), refine it, record λ̂ = T(θ,θ,θ) and deflate T -= λ̂·θ^⊗3.
// Output sorted by λ̂ descending. Deterministic in (t, cfg).
std::vector<RobustEigPair> rtp_decompose(const SymTensor3& t, const RtpConfig& cfg);

}  // namespace lrb
