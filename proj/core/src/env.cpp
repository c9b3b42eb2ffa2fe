#include "lrb/env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrb {

double LatentModel::mean_reward(int action, int user) const {
  double acc = 0.0;
  for (int c = 0; c < u.cols(); ++c) acc += u(action, c) * v(user, c);
  return acc;
}

double LatentModel::best_mean_reward(int user) const {
  double best = mean_reward(0, user);
  for (int a = 1; a < u.rows(); ++a) best = std::max(best, mean_reward(a, user));
  return best;
}

namespace {

// Marsaglia-Tsang for shape >= 1; the alpha < 1 case boosts and rescales.
double sample_gamma(RngStream& stream, double alpha) {
  if (alpha < 1.0) {
    const double u = stream.next_unit();
    return sample_gamma(stream, alpha + 1.0) * std::pow(std::max(u, 1e-300), 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = stream.next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.next_unit();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(std::max(u, 1e-300)) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> sample_simplex(RngStream& stream, int dim, double alpha, double floor) {
  std::vector<double> w(dim);
  if (dim == 1) {
    w[0] = 1.0;
    return w;
  }
  double sum = 0.0;
  for (double& x : w) {
    x = sample_gamma(stream, alpha);
    sum += x;
  }
  if (sum <= 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / dim);
    return w;
  }
  for (double& x : w) x /= sum;
  if (floor > 0.0) {
    // Mix toward the uniform point just enough that every entry >= floor.
    const double mix = floor * dim;
    for (double& x : w) x = (1.0 - mix) * x + floor;
  }
  return w;
}

}  // namespace

LatentModel generate_instance(int num_actions, int num_users, int num_classes,
                              const GeneratorSpec& gen, std::uint64_t seed) {
  if (num_classes < 1 || num_actions < num_classes || num_users < 1)
    throw std::invalid_argument("generate_instance: need A >= C >= 1 and B >= 1");
  if (gen.v_floor > 0.0 && gen.v_floor >= 1.0 / num_classes)
    throw std::invalid_argument("generate_instance: infeasible mixture floor (v_floor >= 1/C)");
  if (!gen.beta.empty() && static_cast<int>(gen.beta.size()) != num_users)
    throw std::invalid_argument("generate_instance: beta length must equal user count");

  RngStream model_stream = RngStream(seed).split("model");

  LatentModel m;
  m.seed = seed;
  m.gen = gen;
  m.u = Matrix(num_actions, num_classes);
  for (int a = 0; a < num_actions; ++a)
    for (int c = 0; c < num_classes; ++c)
      m.u(a, c) = gen.u_min + (gen.u_max - gen.u_min) * model_stream.next_unit();

  m.v = Matrix(num_users, num_classes);
  for (int b = 0; b < num_users; ++b) {
    const std::vector<double> row =
        sample_simplex(model_stream, num_classes, gen.dirichlet_alpha, gen.v_floor);
    for (int c = 0; c < num_classes; ++c) m.v(b, c) = row[c];
  }

  if (gen.beta.empty()) {
    m.beta.assign(num_users, 1.0 / num_users);
  } else {
    m.beta = gen.beta;
  }
  return m;
}

void RegretLedger::add(int user, double increment) {
  const double prev = cumulative.empty() ? 0.0 : cumulative.back();
  cumulative.push_back(prev + increment);
  per_user[user] += increment;
}

MiniSessionResult run_mini_session(const LatentModel& model, long session, SessionKind kind,
                                   double gamma, const ActionCallback& actions,
                                   RngStream& arrival, RngStream& noise,
                                   const RewardCallback& on_reward) {
  const int user = arrival.categorical(model.beta);
  std::vector<double> mix(model.num_classes());
  for (int c = 0; c < model.num_classes(); ++c) mix[c] = model.v(user, c);
  const int cls = arrival.categorical(mix);

  MiniSessionResult out;
  out.user = user;
  out.records.reserve(model.ell);
  out.regret_increments.reserve(model.ell);
  const double best = model.best_mean_reward(user);
  for (int l = 1; l <= model.ell; ++l) {
    const int a = actions(user, l);
    if (a < 0 || a >= model.num_actions())
      throw std::out_of_range("run_mini_session: callback returned action " + std::to_string(a) +
                              " out of range at session " + std::to_string(session) + " step " +
                              std::to_string(l));
    const double eta = noise.next_gaussian();
    const double reward = model.u(a, cls) + model.r_noise * eta;
    out.records.push_back(InteractionRecord{session, l, user, a, reward, kind, gamma});
    out.regret_increments.push_back(best - model.mean_reward(a, user));
    if (on_reward) on_reward(user, l, a, reward);
  }
  return out;
}

}  // namespace lrb
