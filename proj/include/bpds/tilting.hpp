#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "bpds/errors.hpp"
#include "bpds/io.hpp"
#include "bpds/mixture.hpp"
#include "bpds/types.hpp"

namespace bpds {

// ---------------------------------------------------------------------------
// Score carrier: one N x k matrix per model, s_j(y_i) for each outcome draw.
// ---------------------------------------------------------------------------

class ScoreSet {
 public:
  explicit ScoreSet(std::vector<Matrix> scores);

  int models() const { return static_cast<int>(scores_.size()); }
  int draws() const { return static_cast<int>(scores_.front().rows()); }
  int dim() const { return static_cast<int>(scores_.front().cols()); }
  const Matrix& scores(int j) const { return scores_.at(static_cast<std::size_t>(j)); }

 private:
  std::vector<Matrix> scores_;
};

// ---------------------------------------------------------------------------
// Targets and solutions
// ---------------------------------------------------------------------------

struct TiltTarget {
  enum class Mode { Absolute, RelativeMultiplier };
  Mode mode = Mode::Absolute;
  Vector value;  // the target m itself, or multipliers applied to m0

  static TiltTarget absolute(Vector m) { return {Mode::Absolute, std::move(m)}; }
  static TiltTarget relative(Vector multipliers) {
    return {Mode::RelativeMultiplier, std::move(multipliers)};
  }
  Vector resolve(const Vector& m0) const;
};

struct TiltSolution {
  Vector tau;
  Vector a;      // per-model normalizers a_j = E_{p_j}[exp(tau's_j)]
  Vector log_a;  // overflow-safe form of the same
  Vector pi_tilde;
  std::vector<Vector> sample_weights;  // per model, normalized within model
  Vector achieved_score;
  Vector target_score;
  double kl = 0.0;
  double log_normalizer = 0.0;  // log sum_j pi_j a_j
  int iterations = 0;
  bool converged = false;
  std::vector<bool> active_constraints;  // empty when unconstrained
};

/// Thrown when the Newton solve exhausts its budget; carries the best iterate.
struct InfeasibleTargetError : SolverError {
  InfeasibleTargetError(const std::string& message, TiltSolution best_iterate)
      : SolverError(message), best(std::move(best_iterate)) {}
  TiltSolution best;
};

/// Linear inequality constraints A tau <= ub.
struct LinearConstraints {
  Matrix A;
  Vector ub;
  int count() const { return static_cast<int>(ub.size()); }
};

struct SolveOptions {
  double tol = 1e-8;  // relative, per coordinate
  int max_iter = 100;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Expected score and score covariance under the initial (untilted) mixture.
std::pair<Vector, Matrix> initial_score_moments(const ScoreSet& scores,
                                                const MixtureWeights& weights);

/// Everything implied by a fixed tilting vector: normalizers, tilted model
/// probabilities, per-sample weights, and the tilted score mean/covariance
/// (the covariance is the Jacobian of the achieved-score map, which is what
/// Newton iterates on).
struct TiltEvaluation {
  Vector log_a;
  Vector a;
  Vector pi_tilde;
  std::vector<Vector> sample_weights;
  Vector score_mean;
  Matrix score_cov;
  double log_normalizer;
};

TiltEvaluation tilt_weights(const ScoreSet& scores, const MixtureWeights& weights,
                            const Vector& tau);

/// Newton-Raphson solve of the ET fixed point: find tau so the tilted mixture
/// expected score equals the target. Initialization tau = 0; backtracking
/// halves the step until the residual norm decreases. Throws
/// InfeasibleTargetError (with the best iterate) when the budget runs out and
/// DegenerateScoreError when the score covariance is singular.
TiltSolution solve_tilt(const ScoreSet& scores, const MixtureWeights& weights,
                        const TiltTarget& target, const SolveOptions& options = {});

/// Constrained variant. If the unconstrained solution is feasible it is
/// returned unchanged; otherwise returns the feasible tau minimizing the
/// squared deviation of the achieved score from the target, with coordinates
/// standardized by sqrt(diag(V0)) and active constraints flagged.
TiltSolution solve_tilt_constrained(const ScoreSet& scores, const MixtureWeights& weights,
                                    const TiltTarget& target, const LinearConstraints& constraints,
                                    const SolveOptions& options = {});

/// First-order (local perturbation) approximation tau = V0^{-1} eps and the
/// implied KL value eps'V0^{-1}eps / 2.
struct LocalTilt {
  Vector tau;
  double predicted_kl;
  bool used_pseudo_inverse;
};

LocalTilt local_tilt_approx(const Vector& m0, const Matrix& V0, const Vector& eps);

/// KL(f || p) = tau' m_achieved - log sum_j pi_j a_j, re-evaluated from the
/// scores at the solution's tau. Exact for exponential tilts; >= 0 up to
/// Monte Carlo noise.
double kl_estimate(const TiltSolution& solution, const ScoreSet& scores,
                   const MixtureWeights& weights);

/// Euclidean projection onto {tau : A tau <= ub} by active-set enumeration.
/// Throws ConstraintError when no feasible point is found.
Vector project_onto_constraints(const Vector& z, const LinearConstraints& constraints);

io::Json tilt_solution_to_json(const TiltSolution& s);

}  // namespace bpds
