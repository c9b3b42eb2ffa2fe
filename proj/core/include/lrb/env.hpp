#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "lrb/linalg.hpp"
#include "lrb/moments.hpp"
#include "lrb/rng.hpp"

namespace lrb {

// Knobs for random instance generation. Mean rewards are uniform on
// [u_min, u_max]; mixture rows are Dirichlet(alpha0·1) optionally floored to
// v_floor by mixing with the uniform point; beta defaults to uniform when
// empty.
struct GeneratorSpec {
  double u_min = 0.0;
  double u_max = 1.0;
  double dirichlet_alpha = 1.0;
  double v_floor = 0.0;
  std::vector<double> beta;
};

// Ground truth of the environment: per-class mean rewards, per-user mixture
// rows, arrival law, noise scale and mini-session length.
struct LatentModel {
  Matrix u;                   // A×C
  Matrix v;                   // B×C, rows on the simplex
  std::vector<double> beta;   // arrival distribution over users
  double r_noise = 0.0;
  int ell = 3;                // mini-session length, >= 3
  std::uint64_t seed = 0;
  GeneratorSpec gen;

  int num_actions() const { return u.rows(); }
  int num_users() const { return v.rows(); }
  int num_classes() const { return u.cols(); }

  // Expected reward u_aᵀv_b of action a for user b.
  double mean_reward(int action, int user) const;
  // Best mixture-expected reward for user b; the regret benchmark.
  double best_mean_reward(int user) const;
};

LatentModel generate_instance(int num_actions, int num_users, int num_classes,
                              const GeneratorSpec& gen, std::uint64_t seed);

// Cumulative regret trace plus a per-user breakdown.
struct RegretLedger {
  std::vector<double> cumulative;    // indexed by global step
  std::map<int, double> per_user;

  void add(int user, double increment);
  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

// Callback giving the learner's action for (user, step); it sees the user and
// its own history but never the sampled class.
using ActionCallback = std::function<int(int user, int step)>;
// Invoked right after each reward is drawn, so online learners can update
// between steps of one session.
using RewardCallback = std::function<void(int user, int step, int action, double reward)>;

struct MiniSessionResult {
  int user;
  std::vector<InteractionRecord> records;
  std::vector<double> regret_increments;
};

// One mini-session: draw the user from β and its class from the user's
// mixture row, then play ell steps through the callback. Rewards are
// u[a, class] + Gaussian(0, r_noise²); regret increments are measured against
// the user's mixture expectation, so they are deterministic given (user,
// action).
MiniSessionResult run_mini_session(const LatentModel& model, long session, SessionKind kind,
                                   double gamma, const ActionCallback& actions,
                                   RngStream& arrival, RngStream& noise,
                                   const RewardCallback& on_reward = {});

}  // namespace lrb
