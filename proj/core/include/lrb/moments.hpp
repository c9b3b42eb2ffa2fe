#pragma once

#include <span>
#include <vector>

#include "lrb/linalg.hpp"

namespace lrb {

enum class SessionKind { kExplore, kExploit };

// One interaction step; the unit of logging and replay.
struct InteractionRecord {
  long session;   // mini-session index n, 1-based
  int step;       // step l within the session, 1-based
  int user;       // 0-based
  int action;     // 0-based
  double reward;
  SessionKind kind;
  double gamma;   // exploration rate in force at that session
};

struct ConcentrationBounds {
  double m2_entry;  // per-entry deviation bound on the second moment
  double m3_entry;
  double m2_norm;   // norm-level bounds (entry bounds scaled by A resp. A^{3/2})
  double m3_norm;
};

// Deviation bounds for the importance-weighted moment estimates after n
// sessions with exploration rates `gammas` (one per session), at confidence
// 1 - delta covering both moments and all entries simultaneously.
ConcentrationBounds concentration_bounds(long n, std::span<const double> gammas, double delta,
                                         int num_actions);

// Running importance-weighted second/third moment estimate over mini-sessions.
// Exploration sessions deposit X₁X₂·A²/γ and X₁X₂X₃·A³/γ at the played index
// triple; exploit sessions contribute zero but still advance the session
// counter, which is the averaging denominator. Raw sums are kept
// unnormalized; m2()/m3() materialize the symmetrized averages on demand.
class MomentEstimates {
public:
  explicit MomentEstimates(int num_actions);

  // All records must share one (session, user, kind, gamma). Explore sessions
  // need at least 3 steps; disjoint groups of 3 each contribute at full
  // weight and leftover steps are discarded.
  void ingest_session(std::span<const InteractionRecord> session);

  SymMatrix m2() const;
  SymTensor3 m3() const;

  // Equivalent to multilinear_map(m3(), w) but contracts the raw sums
  // directly, skipping the A³ materialization.
  SymTensor3 contracted_m3(const Matrix& w) const;

  long sessions() const { return sessions_; }
  int num_actions() const { return num_actions_; }
  std::span<const double> gamma_history() const { return gamma_history_; }

private:
  int num_actions_ = 0;
  long sessions_ = 0;
  std::vector<double> sum2_raw_;  // A×A, row-major, order as played
  std::vector<double> sum3_raw_;  // A×A×A
  std::vector<double> gamma_history_;
};

}  // namespace lrb
