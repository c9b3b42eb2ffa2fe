#include "lrb/rtp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lrb/rng.hpp"

namespace lrb {

namespace {

constexpr double kDegenerateNorm = 1e-14;
constexpr int kMaxRedraws = 20;

std::vector<double> random_unit(RngStream& stream, int dim) {
  std::vector<double> theta(dim);
  double nrm = 0.0;
  do {
    for (double& x : theta) x = stream.next_gaussian();
    nrm = norm2(theta);
  } while (nrm < 1e-12);
  for (double& x : theta) x /= nrm;
  return theta;
}

// Power steps in place; returns false if the iterate mapped to (numerically)
// zero, leaving theta at its last well-defined value.
bool power_iterate(const SymTensor3& t, int iters, double tol, std::vector<double>& theta) {
  for (int it = 0; it < iters; ++it) {
    const TensorContraction c = tensor_contract(t, theta);
    const double vn = norm2(c.vec);
    if (vn < kDegenerateNorm) return false;
    double delta = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double nthi = c.vec[i] / vn;
      delta += (nthi - theta[i]) * (nthi - theta[i]);
      theta[i] = nthi;
    }
    if (std::sqrt(delta) < tol) break;
  }
  return true;
}

}  // namespace

std::vector<RobustEigPair> rtp_decompose(const SymTensor3& t, const RtpConfig& cfg) {
  if (cfg.restarts < 1 || cfg.power_iters < 1)
    throw std::invalid_argument("rtp_decompose: restarts and power_iters must be >= 1");
  if (!(cfg.convergence_tol > 0.0))
    throw std::invalid_argument("rtp_decompose: convergence_tol must be positive");
  if (cfg.factors < 1 || cfg.factors > t.dim())
    throw std::invalid_argument("rtp_decompose: factors out of range");

  SymTensor3 work = t;
  const RngStream root = RngStream(cfg.seed).split("rtp");

  std::vector<RobustEigPair> pairs;
  pairs.reserve(cfg.factors);
  for (int round = 0; round < cfg.factors; ++round) {
    const RngStream round_stream = root.split(static_cast<std::uint64_t>(round));

    std::vector<double> best_theta;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
      RngStream stream = round_stream.split(static_cast<std::uint64_t>(r));
      // A candidate that power-iterates to the zero vector restarts from a
      // fresh draw, up to the redraw cap.
      bool ok = false;
      std::vector<double> theta;
      for (int attempt = 0; attempt < kMaxRedraws && !ok; ++attempt) {
        theta = random_unit(stream, t.dim());
        ok = power_iterate(work, cfg.power_iters, cfg.convergence_tol, theta);
      }
      if (!ok) continue;
      const double value = tensor_contract(work, theta).scalar;
      if (value > best_value) {
        best_value = value;
        best_theta = std::move(theta);
      }
    }
    if (best_theta.empty())
      throw std::runtime_error("rtp_decompose: tensor numerically zero");

    // Refinement keeps the candidate even if it degenerates mid-way.
    power_iterate(work, cfg.power_iters, cfg.convergence_tol, best_theta);
    const double lambda = tensor_contract(work, best_theta).scalar;

    work.add_rank1(best_theta, -lambda);
    pairs.push_back(RobustEigPair{lambda, std::move(best_theta)});
  }

  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const RobustEigPair& x, const RobustEigPair& y) { return x.lambda > y.lambda; });
  return pairs;
}

}  // namespace lrb
