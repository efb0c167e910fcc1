#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bpds/errors.hpp"
#include "bpds/types.hpp"

namespace bpds {

// ---------------------------------------------------------------------------
// Analytic predictive forms
// ---------------------------------------------------------------------------

struct NormalSpec {
  Vector mean;
  Matrix cov;
};

/// Multivariate Student-T. `scale` is the T scale matrix; the variance is
/// scale * dof / (dof - 2) when dof > 2.
struct StudentTSpec {
  Vector location;
  Matrix scale;
  double dof = 9.0;
};

using AnalyticPredictive = std::variant<std::monostate, NormalSpec, StudentTSpec>;

double normal_log_density(const Vector& y, const NormalSpec& spec);
double student_t_log_density(const Vector& y, const StudentTSpec& spec);
double analytic_log_density(const Vector& y, const AnalyticPredictive& p);

/// Mean and covariance of an analytic predictive (T requires dof > 2).
std::pair<Vector, Matrix> analytic_moments(const AnalyticPredictive& p);

Matrix sample_normal(const NormalSpec& spec, int n, std::mt19937_64& rng);
Matrix sample_student_t(const StudentTSpec& spec, int n, std::mt19937_64& rng);
Matrix sample_analytic(const AnalyticPredictive& p, int n, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// ModelEnsemble: the carrier of the model set. Holds per-model Monte Carlo
// outcome samples (N draws x q dims, identical shapes across models) and,
// optionally, the analytic predictive each sample matrix was drawn from.
// Immutable after construction; safe to share across threads.
// ---------------------------------------------------------------------------

class ModelEnsemble {
 public:
  ModelEnsemble(std::vector<Matrix> samples, std::uint64_t seed,
                std::vector<AnalyticPredictive> analytic = {},
                std::vector<std::string> labels = {});

  /// Draw a fresh ensemble from analytic predictives. Model j's stream is
  /// derived from (seed, j) so per-model draws are order-independent.
  static ModelEnsemble from_analytic(std::vector<AnalyticPredictive> models, int n_draws,
                                     std::uint64_t seed, std::vector<std::string> labels = {});

  int models() const { return static_cast<int>(samples_.size()); }
  int draws() const { return static_cast<int>(samples_.front().rows()); }
  int dim() const { return static_cast<int>(samples_.front().cols()); }

  const Matrix& samples(int j) const { return samples_.at(static_cast<std::size_t>(j)); }
  const AnalyticPredictive& analytic(int j) const { return analytic_.at(static_cast<std::size_t>(j)); }
  bool has_analytic(int j) const;
  bool all_analytic() const;
  std::uint64_t seed() const { return seed_; }
  const std::string& label(int j) const { return labels_.at(static_cast<std::size_t>(j)); }

 private:
  std::vector<Matrix> samples_;
  std::vector<AnalyticPredictive> analytic_;
  std::vector<std::string> labels_;
  std::uint64_t seed_ = 0;
};

// ---------------------------------------------------------------------------
// MixtureWeights: validated probability vector over the model set.
// ---------------------------------------------------------------------------

class MixtureWeights {
 public:
  explicit MixtureWeights(Vector w);
  static MixtureWeights uniform(int n);

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int j) const { return w_(j); }
  const Vector& vec() const { return w_; }

 private:
  Vector w_;
};

// ---------------------------------------------------------------------------
// Baseline construction (the "safe haven" model).
// ---------------------------------------------------------------------------

enum class BaselineForm { Normal, StudentT };

struct BaselineSpec {
  BaselineForm form = BaselineForm::Normal;
  /// Baseline variance = mixture variance / inflation_discount. In (0, 1];
  /// 1 reproduces the mixture's own spread.
  double inflation_discount = 0.135;
  /// Degrees of freedom for the StudentT form; must exceed 2 so the inflated
  /// variance is defined.
  double dof = 9.0;
  /// When set, overrides the mixture-matched construction entirely.
  std::optional<AnalyticPredictive> user;

  void validate() const;
};

struct Baseline {
  AnalyticPredictive analytic;
  Matrix samples;  // n_draws x q
};

enum class MomentSource { Auto, Samples, Analytic };

/// Mixture mean and covariance by the law of total variance over per-model
/// moments. Auto prefers analytic moments when every weighted model has them.
std::pair<Vector, Matrix> mixture_moments(const ModelEnsemble& ensemble,
                                          const MixtureWeights& weights,
                                          MomentSource source = MomentSource::Auto);

/// Build the baseline predictive: mixture-matched location, mixture variance
/// inflated by 1 / inflation_discount, fresh samples from the analytic form.
/// `weights` ranges over the candidate models in `ensemble` (no baseline yet).
Baseline build_baseline(const ModelEnsemble& ensemble, const MixtureWeights& weights,
                        const BaselineSpec& spec, int n_draws, std::uint64_t stream_tag = 0);

/// BMA as the no-tilt special case: the plain mixture density over analytic
/// predictives. Requires weight 0 on the baseline slot (index 0).
class MixtureDensity {
 public:
  MixtureDensity(std::vector<AnalyticPredictive> components, Vector weights);
  double operator()(const Vector& y) const;
  double log(const Vector& y) const;

 private:
  std::vector<AnalyticPredictive> components_;
  Vector weights_;
};

MixtureDensity bma_special_case(const ModelEnsemble& ensemble, const MixtureWeights& weights);

// ---------------------------------------------------------------------------
// Snapshot serialization: one CSV per model plus a JSON manifest.
// ---------------------------------------------------------------------------

void save_ensemble(const ModelEnsemble& ensemble, const MixtureWeights& weights,
                   const std::string& dir);
std::pair<ModelEnsemble, MixtureWeights> load_ensemble(const std::string& dir);

}  // namespace bpds
