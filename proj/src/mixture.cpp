#include "bpds/mixture.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bpds/io.hpp"

namespace bpds {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Matrix chol_lower(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw DegenerateMixtureError(std::string(what) + ": matrix is not positive definite");
  return llt.matrixL();
}

}  // namespace

double normal_log_density(const Vector& y, const NormalSpec& spec) {
  const auto q = static_cast<double>(y.size());
  Eigen::LLT<Matrix> llt(spec.cov);
  if (llt.info() != Eigen::Success)
    throw DegenerateMixtureError("normal_log_density: covariance not positive definite");
  const Vector z = llt.matrixL().solve(y - spec.mean);
  const double log_det = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * (q * kLog2Pi + log_det + z.squaredNorm());
}

double student_t_log_density(const Vector& y, const StudentTSpec& spec) {
  const auto q = static_cast<double>(y.size());
  const double nu = spec.dof;
  Eigen::LLT<Matrix> llt(spec.scale);
  if (llt.info() != Eigen::Success)
    throw DegenerateMixtureError("student_t_log_density: scale not positive definite");
  const Vector z = llt.matrixL().solve(y - spec.location);
  const double log_det = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  return std::lgamma(0.5 * (nu + q)) - std::lgamma(0.5 * nu) - 0.5 * q * std::log(nu * M_PI) -
         0.5 * log_det - 0.5 * (nu + q) * std::log1p(z.squaredNorm() / nu);
}

double analytic_log_density(const Vector& y, const AnalyticPredictive& p) {
  if (std::holds_alternative<NormalSpec>(p)) return normal_log_density(y, std::get<NormalSpec>(p));
  if (std::holds_alternative<StudentTSpec>(p))
    return student_t_log_density(y, std::get<StudentTSpec>(p));
  throw ValidationError("analytic_log_density: model has no analytic predictive");
}

std::pair<Vector, Matrix> analytic_moments(const AnalyticPredictive& p) {
  if (std::holds_alternative<NormalSpec>(p)) {
    const auto& n = std::get<NormalSpec>(p);
    return {n.mean, n.cov};
  }
  if (std::holds_alternative<StudentTSpec>(p)) {
    const auto& t = std::get<StudentTSpec>(p);
    if (t.dof <= 2.0)
      throw ValidationError("analytic_moments: StudentT variance requires dof > 2");
    return {t.location, Matrix(t.scale * (t.dof / (t.dof - 2.0)))};
  }
  throw ValidationError("analytic_moments: model has no analytic predictive");
}

Matrix sample_normal(const NormalSpec& spec, int n, std::mt19937_64& rng) {
  const Matrix l = chol_lower(spec.cov, "sample_normal");
  const Matrix z = draw_normal_matrix(n, static_cast<int>(spec.mean.size()), rng);
  return (z * l.transpose()).rowwise() + spec.mean.transpose();
}

Matrix sample_student_t(const StudentTSpec& spec, int n, std::mt19937_64& rng) {
  const Matrix l = chol_lower(spec.scale, "sample_student_t");
  const int q = static_cast<int>(spec.location.size());
  std::chi_squared_distribution<double> chi2(spec.dof);
  Matrix out(n, q);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Vector z(q);
    for (int j = 0; j < q; ++j) z(j) = normal(rng);
    const double g = chi2(rng);
    out.row(i) = (spec.location + l * z * std::sqrt(spec.dof / g)).transpose();
  }
  return out;
}

Matrix sample_analytic(const AnalyticPredictive& p, int n, std::mt19937_64& rng) {
  if (std::holds_alternative<NormalSpec>(p)) return sample_normal(std::get<NormalSpec>(p), n, rng);
  if (std::holds_alternative<StudentTSpec>(p))
    return sample_student_t(std::get<StudentTSpec>(p), n, rng);
  throw ValidationError("sample_analytic: model has no analytic predictive");
}

// ---------------------------------------------------------------------------
// ModelEnsemble
// ---------------------------------------------------------------------------

ModelEnsemble::ModelEnsemble(std::vector<Matrix> samples, std::uint64_t seed,
                             std::vector<AnalyticPredictive> analytic,
                             std::vector<std::string> labels)
    : samples_(std::move(samples)),
      analytic_(std::move(analytic)),
      labels_(std::move(labels)),
      seed_(seed) {
  if (samples_.empty()) throw ValidationError("ModelEnsemble: no models");
  const auto n = samples_.front().rows();
  const auto q = samples_.front().cols();
  if (n < 1 || q < 1) throw ValidationError("ModelEnsemble: need N >= 1 and q >= 1");
  for (const auto& s : samples_) {
    if (s.rows() != n || s.cols() != q)
      throw ValidationError("ModelEnsemble: all models must share N and q");
  }
  if (analytic_.empty()) analytic_.resize(samples_.size());
  if (analytic_.size() != samples_.size())
    throw ValidationError("ModelEnsemble: analytic list size mismatch");
  for (const auto& a : analytic_) {
    // Scale matrices must be symmetric positive definite when present.
    if (std::holds_alternative<NormalSpec>(a)) {
      const auto& spec = std::get<NormalSpec>(a);
      if ((spec.cov - spec.cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
          Eigen::LLT<Matrix>(spec.cov).info() != Eigen::Success)
        throw ValidationError("ModelEnsemble: normal covariance must be symmetric PD");
    } else if (std::holds_alternative<StudentTSpec>(a)) {
      const auto& spec = std::get<StudentTSpec>(a);
      if ((spec.scale - spec.scale.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
          Eigen::LLT<Matrix>(spec.scale).info() != Eigen::Success)
        throw ValidationError("ModelEnsemble: StudentT scale must be symmetric PD");
    }
  }
  if (labels_.empty()) {
    labels_.reserve(samples_.size());
    for (std::size_t j = 0; j < samples_.size(); ++j) labels_.push_back("model_" + std::to_string(j));
  }
  if (labels_.size() != samples_.size())
    throw ValidationError("ModelEnsemble: label list size mismatch");
}

ModelEnsemble ModelEnsemble::from_analytic(std::vector<AnalyticPredictive> models, int n_draws,
                                           std::uint64_t seed, std::vector<std::string> labels) {
  if (n_draws < 1) throw ValidationError("ModelEnsemble: n_draws must be >= 1");
  std::vector<Matrix> samples;
  samples.reserve(models.size());
  for (std::size_t j = 0; j < models.size(); ++j) {
    auto rng = make_stream(seed, j);
    samples.push_back(sample_analytic(models[j], n_draws, rng));
  }
  return ModelEnsemble(std::move(samples), seed, std::move(models), std::move(labels));
}

bool ModelEnsemble::has_analytic(int j) const {
  return !std::holds_alternative<std::monostate>(analytic_.at(static_cast<std::size_t>(j)));
}

bool ModelEnsemble::all_analytic() const {
  for (int j = 0; j < models(); ++j)
    if (!has_analytic(j)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// MixtureWeights
// ---------------------------------------------------------------------------

MixtureWeights::MixtureWeights(Vector w) : w_(std::move(w)) {
  if (w_.size() < 1) throw ValidationError("MixtureWeights: empty");
  if ((w_.array() < 0).any()) throw ValidationError("MixtureWeights: negative entry");
  if (std::abs(w_.sum() - 1.0) > 1e-12)
    throw ValidationError("MixtureWeights: entries must sum to 1 within 1e-12");
}

MixtureWeights MixtureWeights::uniform(int n) {
  return MixtureWeights(Vector::Constant(n, 1.0 / n));
}

// ---------------------------------------------------------------------------
// Moments and baseline
// ---------------------------------------------------------------------------

void BaselineSpec::validate() const {
  if (!(inflation_discount > 0.0 && inflation_discount <= 1.0))
    throw ValidationError("BaselineSpec: inflation_discount must lie in (0, 1]");
  if (form == BaselineForm::StudentT && dof <= 2.0)
    throw ValidationError("BaselineSpec: StudentT baseline requires dof > 2");
}

std::pair<Vector, Matrix> mixture_moments(const ModelEnsemble& ensemble,
                                          const MixtureWeights& weights, MomentSource source) {
  if (weights.size() != ensemble.models())
    throw ValidationError("mixture_moments: weights/models size mismatch");
  bool analytic = source == MomentSource::Analytic;
  if (source == MomentSource::Auto) {
    analytic = true;
    for (int j = 0; j < ensemble.models(); ++j)
      if (weights[j] > 0.0 && !ensemble.has_analytic(j)) analytic = false;
  }

  const int q = ensemble.dim();
  Vector mean = Vector::Zero(q);
  Matrix second = Matrix::Zero(q, q);
  for (int j = 0; j < ensemble.models(); ++j) {
    if (weights[j] == 0.0) continue;
    Vector mu;
    Matrix cov;
    if (analytic) {
      std::tie(mu, cov) = analytic_moments(ensemble.analytic(j));
    } else {
      const Matrix& s = ensemble.samples(j);
      mu = s.colwise().mean();
      const Matrix centered = s.rowwise() - mu.transpose();
      cov = centered.transpose() * centered / static_cast<double>(s.rows());
    }
    mean += weights[j] * mu;
    second += weights[j] * (cov + mu * mu.transpose());
  }
  Matrix cov = symmetrized(second - mean * mean.transpose());
  return {mean, cov};
}

Baseline build_baseline(const ModelEnsemble& ensemble, const MixtureWeights& weights,
                        const BaselineSpec& spec, int n_draws, std::uint64_t stream_tag) {
  spec.validate();
  AnalyticPredictive analytic;
  if (spec.user) {
    analytic = *spec.user;
  } else {
    auto [mean, cov] = mixture_moments(ensemble, weights);
    if (Eigen::LLT<Matrix>(cov).info() != Eigen::Success)
      throw DegenerateMixtureError("build_baseline: mixture covariance not positive definite");
    const Matrix inflated = cov / spec.inflation_discount;
    if (spec.form == BaselineForm::Normal) {
      analytic = NormalSpec{mean, inflated};
    } else {
      // T scale chosen so the T variance equals the inflated mixture variance.
      analytic = StudentTSpec{mean, inflated * ((spec.dof - 2.0) / spec.dof), spec.dof};
    }
  }
  auto rng = make_stream(ensemble.seed(), 0xBA5EULL, stream_tag);
  return Baseline{analytic, sample_analytic(analytic, n_draws, rng)};
}

// ---------------------------------------------------------------------------
// BMA special case
// ---------------------------------------------------------------------------

MixtureDensity::MixtureDensity(std::vector<AnalyticPredictive> components, Vector weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.size() != static_cast<std::size_t>(weights_.size()))
    throw ValidationError("MixtureDensity: size mismatch");
}

double MixtureDensity::log(const Vector& y) const {
  Vector terms(weights_.size());
  for (int j = 0; j < weights_.size(); ++j) {
    terms(j) = weights_(j) > 0.0
                   ? std::log(weights_(j)) + analytic_log_density(y, components_[static_cast<std::size_t>(j)])
                   : -std::numeric_limits<double>::infinity();
  }
  return log_sum_exp(terms);
}

double MixtureDensity::operator()(const Vector& y) const { return std::exp(log(y)); }

MixtureDensity bma_special_case(const ModelEnsemble& ensemble, const MixtureWeights& weights) {
  if (weights.size() != ensemble.models())
    throw ValidationError("bma_special_case: weights/models size mismatch");
  if (weights[0] != 0.0)
    throw ValidationError("bma_special_case: baseline weight (index 0) must be zero");
  std::vector<AnalyticPredictive> comps;
  comps.reserve(static_cast<std::size_t>(ensemble.models()));
  for (int j = 0; j < ensemble.models(); ++j) {
    if (weights[j] > 0.0 && !ensemble.has_analytic(j))
      throw ValidationError("bma_special_case: weighted model lacks an analytic predictive");
    comps.push_back(ensemble.analytic(j));
  }
  return MixtureDensity(std::move(comps), weights.vec());
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

void save_ensemble(const ModelEnsemble& ensemble, const MixtureWeights& weights,
                   const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  io::Json manifest;
  manifest["seed"] = ensemble.seed();
  manifest["models"] = ensemble.models();
  manifest["draws"] = ensemble.draws();
  manifest["dim"] = ensemble.dim();
  manifest["weights"] = std::vector<double>(weights.vec().data(),
                                            weights.vec().data() + weights.vec().size());
  std::vector<std::string> files, labels;
  for (int j = 0; j < ensemble.models(); ++j) {
    const std::string file = "model_" + std::to_string(j) + ".csv";
    std::vector<std::string> header;
    for (int c = 0; c < ensemble.dim(); ++c) header.push_back("y" + std::to_string(c));
    io::write_matrix_csv((fs::path(dir) / file).string(), header, ensemble.samples(j));
    files.push_back(file);
    labels.push_back(ensemble.label(j));
  }
  manifest["files"] = files;
  manifest["labels"] = labels;
  io::write_json((fs::path(dir) / "manifest.json").string(), manifest);
}

std::pair<ModelEnsemble, MixtureWeights> load_ensemble(const std::string& dir) {
  namespace fs = std::filesystem;
  const io::Json manifest = io::read_json((fs::path(dir) / "manifest.json").string());
  const auto files = manifest.at("files").get<std::vector<std::string>>();
  const auto labels = manifest.at("labels").get<std::vector<std::string>>();
  const auto w = manifest.at("weights").get<std::vector<double>>();
  std::vector<Matrix> samples;
  samples.reserve(files.size());
  for (const auto& f : files)
    samples.push_back(io::read_numeric_csv((fs::path(dir) / f).string()));
  ModelEnsemble ens(std::move(samples), manifest.at("seed").get<std::uint64_t>(), {}, labels);
  return {std::move(ens), MixtureWeights(Eigen::Map<const Vector>(w.data(), static_cast<long>(w.size())))};
}

}  // namespace bpds
