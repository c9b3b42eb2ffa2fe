#include "lrb/moments.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrb {

ConcentrationBounds concentration_bounds(long n, std::span<const double> gammas, double delta,
                                         int num_actions) {
  if (n < 1) throw std::invalid_argument("concentration_bounds: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("concentration_bounds: delta must lie in (0,1)");
  if (gammas.size() < static_cast<std::size_t>(n))
    throw std::invalid_argument("concentration_bounds: gamma history shorter than n");

  double inv_sq_sum = 0.0;
  for (long i = 0; i < n; ++i) {
    const double g = gammas[i];
    if (!(g > 0.0 && g <= 1.0))
      throw std::invalid_argument("concentration_bounds: gamma entries must lie in (0,1]");
    inv_sq_sum += 1.0 / (g * g);
  }

  const double a = static_cast<double>(num_actions);
  const double nn = static_cast<double>(n);
  const double base2 = std::sqrt(inv_sq_sum * std::log(4.0 * a * a / delta) / (2.0 * nn * nn));
  const double base3 = std::sqrt(inv_sq_sum * std::log(4.0 * a * a * a / delta) / (2.0 * nn * nn));

  ConcentrationBounds out;
  out.m2_entry = a * a * base2;
  out.m3_entry = a * a * a * base3;
  out.m2_norm = a * a * a * base2;
  out.m3_norm = std::pow(a, 4.5) * base3;
  return out;
}

MomentEstimates::MomentEstimates(int num_actions)
    : num_actions_(num_actions),
      sum2_raw_(static_cast<std::size_t>(num_actions) * num_actions, 0.0),
      sum3_raw_(static_cast<std::size_t>(num_actions) * num_actions * num_actions, 0.0) {
  if (num_actions < 1) throw std::invalid_argument("MomentEstimates: num_actions must be >= 1");
}

void MomentEstimates::ingest_session(std::span<const InteractionRecord> session) {
  if (session.empty()) throw std::invalid_argument("ingest_session: empty session");
  const long n = session[0].session;
  const int user = session[0].user;
  const SessionKind kind = session[0].kind;
  const double gamma = session[0].gamma;
  for (const InteractionRecord& r : session) {
    if (r.session != n || r.user != user || r.kind != kind || r.gamma != gamma)
      throw std::invalid_argument("ingest_session: records must share one (session, user, kind, gamma)");
    if (r.action < 0 || r.action >= num_actions_)
      throw std::invalid_argument("ingest_session: action index out of range");
  }

  if (kind == SessionKind::kExplore) {
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw std::invalid_argument("ingest_session: gamma must lie in (0,1] for exploration");
    if (session.size() < 3)
      throw std::invalid_argument("ingest_session: exploration session needs at least 3 steps");

    const double a = static_cast<double>(num_actions_);
    const double w2 = a * a / gamma;       // 1 / p(a, a')
    const double w3 = a * a * a / gamma;   // 1 / p(a, a', a'')
    const std::size_t triples = session.size() / 3;
    for (std::size_t t = 0; t < triples; ++t) {
      const InteractionRecord& r1 = session[3 * t];
      const InteractionRecord& r2 = session[3 * t + 1];
      const InteractionRecord& r3 = session[3 * t + 2];
      sum2_raw_[static_cast<std::size_t>(r1.action) * num_actions_ + r2.action] +=
          r1.reward * r2.reward * w2;
      sum3_raw_[(static_cast<std::size_t>(r1.action) * num_actions_ + r2.action) * num_actions_ +
                r3.action] += r1.reward * r2.reward * r3.reward * w3;
    }
  }

  ++sessions_;
  gamma_history_.push_back(gamma);
}

SymMatrix MomentEstimates::m2() const {
  if (sessions_ == 0) return SymMatrix(num_actions_);
  std::vector<double> scaled(sum2_raw_);
  const double inv_n = 1.0 / static_cast<double>(sessions_);
  for (double& x : scaled) x *= inv_n;
  return SymMatrix::from_dense_symmetrized(num_actions_, scaled);
}

SymTensor3 MomentEstimates::m3() const {
  if (sessions_ == 0) return SymTensor3(num_actions_);
  std::vector<double> scaled(sum3_raw_);
  const double inv_n = 1.0 / static_cast<double>(sessions_);
  for (double& x : scaled) x *= inv_n;
  return SymTensor3::from_dense_symmetrized(num_actions_, scaled);
}

SymTensor3 MomentEstimates::contracted_m3(const Matrix& w) const {
  const int a = num_actions_;
  const int b = w.cols();
  if (w.rows() != a) throw std::invalid_argument("contracted_m3: row count of W must equal A");
  if (sessions_ == 0) return SymTensor3(b);
  const double inv_n = 1.0 / static_cast<double>(sessions_);

  // Multilinear contraction commutes with the permutation average, so the
  // raw (asymmetric) sums can be contracted first and symmetrized at b³ size.
  std::vector<double> s1(static_cast<std::size_t>(a) * a * b, 0.0);
  for (int j1 = 0; j1 < a; ++j1)
    for (int j2 = 0; j2 < a; ++j2) {
      const std::size_t base_in = (static_cast<std::size_t>(j1) * a + j2) * a;
      const std::size_t base_out = (static_cast<std::size_t>(j1) * a + j2) * b;
      for (int j3 = 0; j3 < a; ++j3) {
        const double tv = sum3_raw_[base_in + j3];
        if (tv == 0.0) continue;
        for (int i3 = 0; i3 < b; ++i3) s1[base_out + i3] += tv * w(j3, i3);
      }
    }
  std::vector<double> s2(static_cast<std::size_t>(a) * b * b, 0.0);
  for (int j1 = 0; j1 < a; ++j1)
    for (int j2 = 0; j2 < a; ++j2) {
      const std::size_t base_in = (static_cast<std::size_t>(j1) * a + j2) * b;
      for (int i2 = 0; i2 < b; ++i2) {
        const double wj = w(j2, i2);
        if (wj == 0.0) continue;
        const std::size_t base_out = (static_cast<std::size_t>(j1) * b + i2) * b;
        for (int i3 = 0; i3 < b; ++i3) s2[base_out + i3] += wj * s1[base_in + i3];
      }
    }
  std::vector<double> dense(static_cast<std::size_t>(b) * b * b, 0.0);
  for (int j1 = 0; j1 < a; ++j1)
    for (int i1 = 0; i1 < b; ++i1) {
      const double wj = w(j1, i1);
      if (wj == 0.0) continue;
      for (int i2 = 0; i2 < b; ++i2) {
        const std::size_t base_in = (static_cast<std::size_t>(j1) * b + i2) * b;
        const std::size_t base_out = (static_cast<std::size_t>(i1) * b + i2) * b;
        for (int i3 = 0; i3 < b; ++i3) dense[base_out + i3] += wj * s2[base_in + i3];
      }
    }
  for (double& x : dense) x *= inv_n;
  return SymTensor3::from_dense_symmetrized(b, dense);
}

}  // namespace lrb
