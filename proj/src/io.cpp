#include "bpds/io.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace bpds::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  return out;
}

void write_header(std::ofstream& out, const std::vector<std::string>& header) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
}

bool looks_numeric(const std::string& field) {
  if (field.empty()) return false;
  char* end = nullptr;
  std::strtod(field.c_str(), &end);
  return end == field.c_str() + field.size();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  return fields;
}

}  // namespace

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& values) {
  if (!header.empty() && static_cast<long>(header.size()) != values.cols())
    throw ValidationError("write_matrix_csv: header/column mismatch for " + path);
  auto out = open_out(path);
  if (!header.empty()) write_header(out, header);
  for (long r = 0; r < values.rows(); ++r) {
    for (long c = 0; c < values.cols(); ++c) {
      if (c) out << ',';
      out << format_double(values(r, c));
    }
    out << '\n';
  }
}

void write_labeled_csv(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::string>& row_labels, const Matrix& values) {
  if (static_cast<long>(row_labels.size()) != values.rows())
    throw ValidationError("write_labeled_csv: label/row mismatch for " + path);
  if (!header.empty() && static_cast<long>(header.size()) != values.cols() + 1)
    throw ValidationError("write_labeled_csv: header/column mismatch for " + path);
  auto out = open_out(path);
  if (!header.empty()) write_header(out, header);
  for (long r = 0; r < values.rows(); ++r) {
    out << row_labels[static_cast<std::size_t>(r)];
    for (long c = 0; c < values.cols(); ++c) out << ',' << format_double(values(r, c));
    out << '\n';
  }
}

Matrix read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (first && !fields.empty() && !looks_numeric(fields[0])) {
      first = false;
      continue;  // header
    }
    first = false;
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      if (!looks_numeric(f)) throw ValidationError(path + ": non-numeric field '" + f + "'");
      row.push_back(std::strtod(f.c_str(), nullptr));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path + ": no data rows");
  Matrix m(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

PriceTable read_price_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open price file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path + ": empty file");
  auto header = split_line(line);
  if (header.size() < 2) throw IngestionError(path + ": need a date column plus assets");
  PriceTable table;
  table.assets.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size()) throw IngestionError(path + ": ragged row");
    table.dates.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (!looks_numeric(fields[i]))
        throw IngestionError(path + ": non-numeric price '" + fields[i] + "'");
      const double v = std::strtod(fields[i].c_str(), nullptr);
      if (!(v > 0.0)) throw IngestionError(path + ": non-positive price on " + fields[0]);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw IngestionError(path + ": need at least two price rows");
  table.prices.resize(static_cast<long>(rows.size()), static_cast<long>(table.assets.size()));
  for (long r = 0; r < table.prices.rows(); ++r)
    for (long c = 0; c < table.prices.cols(); ++c)
      table.prices(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return table;
}

void write_price_csv(const std::string& path, const PriceTable& table) {
  std::vector<std::string> header = {"date"};
  header.insert(header.end(), table.assets.begin(), table.assets.end());
  write_labeled_csv(path, header, table.dates, table.prices);
}

// ---------------------------------------------------------------------------
// JSON plumbing
// ---------------------------------------------------------------------------

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError(path + ": JSON parse error: " + e.what());
  }
  return j;
}

void write_json(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<long>(v.size()));
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (long r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
  for (long r = 0; r < m.rows(); ++r) {
    if (rows[static_cast<std::size_t>(r)].size() != static_cast<std::size_t>(m.cols()))
      throw ValidationError("matrix_from_json: ragged rows");
    for (long c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

std::uint64_t config_hash(const Json& config) {
  const std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// RunConfig validation
// ---------------------------------------------------------------------------

namespace {

class Validator {
 public:
  void check_keys(const Json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) errors_.push_back(where + ": unknown key '" + it.key() + "'");
    }
  }
  void require(bool ok, const std::string& message) {
    if (!ok) errors_.push_back(message);
  }
  void finish() const {
    if (errors_.empty()) return;
    std::string all = "config validation failed:";
    for (const auto& e : errors_) all += "\n  - " + e;
    throw ValidationError(all);
  }

 private:
  std::vector<std::string> errors_;
};

double get_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}
int get_or(const Json& j, const char* key, int fallback) {
  return j.contains(key) ? j.at(key).get<int>() : fallback;
}

}  // namespace

RunConfig parse_config(const Json& j) {
  Validator v;
  v.check_keys(j, "top level",
               {"study", "seed", "out", "mc_samples", "threads", "tolerances", "design",
                "portfolio", "et_solve"});
  RunConfig cfg;
  v.require(j.contains("study"), "top level: 'study' is required");
  v.require(j.contains("seed"), "top level: 'seed' is required (no entropy-source defaults)");
  if (j.contains("study")) cfg.study = j.at("study").get<std::string>();
  v.require(cfg.study == "design" || cfg.study == "portfolio" || cfg.study == "et-solve",
            "study: must be one of design|portfolio|et-solve");
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  cfg.mc_samples = get_or(j, "mc_samples", 10000);
  v.require(cfg.mc_samples >= 1, "mc_samples: must be >= 1");
  cfg.threads = get_or(j, "threads", 1);
  v.require(cfg.threads >= 1, "threads: must be >= 1");
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    v.check_keys(t, "tolerances", {"tol", "max_iter"});
    cfg.tol = get_or(t, "tol", 1e-8);
    cfg.max_iter = get_or(t, "max_iter", 100);
    v.require(cfg.tol > 0, "tolerances.tol: must be > 0");
    v.require(cfg.max_iter >= 1, "tolerances.max_iter: must be >= 1");
  }

  // Exactly one study block may be present, and it must match the selector.
  int blocks = 0;
  for (const char* k : {"design", "portfolio", "et_solve"}) blocks += j.contains(k) ? 1 : 0;
  v.require(blocks <= 1, "top level: at most one study block may be present");
  const std::string block_key = cfg.study == "et-solve" ? "et_solve" : cfg.study;
  if (blocks == 1)
    v.require(j.contains(block_key), "top level: study block does not match 'study' selector");
  cfg.study_config = j.contains(block_key) ? j.at(block_key) : Json::object();

  if (cfg.study == "design") {
    const std::set<std::string> keys = {
        "n_train", "noise_variance", "utility_c", "prior_c", "baseline_discount",
        "z1", "z2", "x0", "y0", "grid_lo", "grid_hi", "grid_step"};
    v.check_keys(cfg.study_config, "design", keys);
    Json d = cfg.study_config;
    d["n_train"] = get_or(d, "n_train", 10);
    d["noise_variance"] = get_or(d, "noise_variance", 0.09);
    d["utility_c"] = get_or(d, "utility_c", 1.0);
    d["prior_c"] = get_or(d, "prior_c", 9.0);
    d["baseline_discount"] = get_or(d, "baseline_discount", 0.135);
    d["z1"] = get_or(d, "z1", 1.1);
    d["z2"] = get_or(d, "z2", 0.1);
    d["x0"] = get_or(d, "x0", 1.0);
    d["y0"] = get_or(d, "y0", 1.0);
    d["grid_lo"] = get_or(d, "grid_lo", 0.5);
    d["grid_hi"] = get_or(d, "grid_hi", 1.5);
    d["grid_step"] = get_or(d, "grid_step", 0.005);
    v.require(d["n_train"].get<int>() >= 4, "design.n_train: must be >= 4 (full-rank designs)");
    v.require(d["noise_variance"].get<double>() > 0, "design.noise_variance: must be > 0");
    v.require(d["utility_c"].get<double>() > 0, "design.utility_c: must be > 0");
    v.require(d["prior_c"].get<double>() > 0, "design.prior_c: must be > 0");
    const double delta = d["baseline_discount"].get<double>();
    v.require(delta > 0 && delta <= 1, "design.baseline_discount: must lie in (0, 1]");
    v.require(d["grid_lo"].get<double>() < d["grid_hi"].get<double>(),
              "design.grid_lo must be < design.grid_hi");
    v.require(d["grid_step"].get<double>() > 0, "design.grid_step: must be > 0");
    const double lo = d["grid_lo"].get<double>(), hi = d["grid_hi"].get<double>(),
                 x0 = d["x0"].get<double>();
    v.require(lo <= x0 && x0 <= hi, "design grid must contain x0");
    cfg.study_config = d;
  } else if (cfg.study == "portfolio") {
    const std::set<std::string> keys = {
        "beta_grid", "return_targets", "delta_state", "var_order", "score_anchor",
        "avs_gamma", "bma_gamma", "baseline_dof", "baseline_discount", "baseline_target",
        "target_multipliers", "cone_ratio", "cone_margin", "clip_lo", "clip_hi",
        "train_days", "test_days", "return_scale", "tau_init", "avs_uses_shared_tau"};
    v.check_keys(cfg.study_config, "portfolio", keys);
    Json p = cfg.study_config;
    if (!p.contains("beta_grid")) p["beta_grid"] = std::vector<double>{0.94, 0.98, 0.995};
    if (!p.contains("return_targets")) p["return_targets"] = std::vector<double>{0.05, 0.15};
    p["delta_state"] = get_or(p, "delta_state", 0.9995);
    p["var_order"] = get_or(p, "var_order", 3);
    p["score_anchor"] = get_or(p, "score_anchor", 0.1);
    p["avs_gamma"] = get_or(p, "avs_gamma", 0.95);
    p["bma_gamma"] = get_or(p, "bma_gamma", 0.95);
    p["baseline_dof"] = get_or(p, "baseline_dof", 9.0);
    p["baseline_discount"] = get_or(p, "baseline_discount", 0.135);
    p["baseline_target"] = get_or(p, "baseline_target", 0.1);
    if (!p.contains("target_multipliers")) p["target_multipliers"] = std::vector<double>{1.05, 0.9};
    p["cone_ratio"] = get_or(p, "cone_ratio", 0.1);
    p["cone_margin"] = get_or(p, "cone_margin", 1e-6);
    p["clip_lo"] = get_or(p, "clip_lo", 0.1);
    p["clip_hi"] = get_or(p, "clip_hi", 0.2);
    p["train_days"] = get_or(p, "train_days", 300);
    p["test_days"] = get_or(p, "test_days", 300);
    p["return_scale"] = get_or(p, "return_scale", 100.0);
    if (!p.contains("tau_init")) p["tau_init"] = std::vector<double>{0.005, 0.1};
    if (!p.contains("avs_uses_shared_tau")) p["avs_uses_shared_tau"] = true;
    for (const char* k : {"delta_state", "avs_gamma", "bma_gamma", "baseline_discount"}) {
      const double x = p[k].get<double>();
      v.require(x > 0 && x <= 1, std::string("portfolio.") + k + ": must lie in (0, 1]");
    }
    for (double b : p["beta_grid"].get<std::vector<double>>())
      v.require(b > 0 && b <= 1, "portfolio.beta_grid: entries must lie in (0, 1]");
    v.require(p["baseline_dof"].get<double>() > 2, "portfolio.baseline_dof: must be > 2");
    v.require(p["var_order"].get<int>() >= 0, "portfolio.var_order: must be >= 0");
    v.require(p["cone_ratio"].get<double>() > 0, "portfolio.cone_ratio: must be > 0");
    v.require(p["cone_margin"].get<double>() > 0, "portfolio.cone_margin: must be > 0");
    v.require(p["clip_lo"].get<double>() < p["clip_hi"].get<double>(),
              "portfolio.clip_lo must be < portfolio.clip_hi");
    v.require(p["train_days"].get<int>() >= 10, "portfolio.train_days: must be >= 10");
    v.require(p["test_days"].get<int>() >= 1, "portfolio.test_days: must be >= 1");
    v.require(p["return_scale"].get<double>() > 0, "portfolio.return_scale: must be > 0");
    const auto tau0 = p["tau_init"].get<std::vector<double>>();
    v.require(tau0.size() == 2, "portfolio.tau_init: must have length 2");
    if (tau0.size() == 2) {
      v.require(tau0[0] > 0 && tau0[0] < p["cone_ratio"].get<double>() * tau0[1],
                "portfolio.tau_init: must satisfy 0 < tau1 < cone_ratio * tau2");
    }
    cfg.study_config = p;
  } else if (cfg.study == "et-solve") {
    const std::set<std::string> keys = {"score_files", "weights", "target", "constraints"};
    v.check_keys(cfg.study_config, "et_solve", keys);
    v.require(cfg.study_config.contains("score_files"), "et_solve.score_files: required");
    v.require(cfg.study_config.contains("weights"), "et_solve.weights: required");
    v.require(cfg.study_config.contains("target"), "et_solve.target: required");
    if (cfg.study_config.contains("target")) {
      const Json& t = cfg.study_config.at("target");
      v.check_keys(t, "et_solve.target", {"mode", "value"});
      v.require(t.contains("mode") && t.contains("value"),
                "et_solve.target: needs 'mode' and 'value'");
      if (t.contains("mode")) {
        const auto mode = t.at("mode").get<std::string>();
        v.require(mode == "absolute" || mode == "relative",
                  "et_solve.target.mode: must be absolute|relative");
      }
    }
    if (cfg.study_config.contains("constraints")) {
      const Json& c = cfg.study_config.at("constraints");
      v.check_keys(c, "et_solve.constraints", {"A", "ub"});
      v.require(c.contains("A") && c.contains("ub"), "et_solve.constraints: needs 'A' and 'ub'");
    }
  }

  v.finish();

  // Echo: fully materialized defaults, canonical key order.
  Json echo;
  echo["study"] = cfg.study;
  echo["seed"] = cfg.seed;
  if (!cfg.out_dir.empty()) echo["out"] = cfg.out_dir;
  echo["mc_samples"] = cfg.mc_samples;
  echo["threads"] = cfg.threads;
  echo["tolerances"] = Json{{"tol", cfg.tol}, {"max_iter", cfg.max_iter}};
  echo[block_key] = cfg.study_config;
  cfg.echo = echo;
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_json(path)); }

void emit_run_summary(const RunConfig& config, const std::vector<std::string>& outputs,
                      const std::string& dir) {
  fs::create_directories(dir);
  write_json((fs::path(dir) / "config_echo.json").string(), config.echo);
  Json summary;
  summary["config_hash"] = config_hash(config.echo);
  summary["version"] = kVersion;
  summary["study"] = config.study;
  summary["outputs"] = outputs;
  write_json((fs::path(dir) / "summary.json").string(), summary);
}

}  // namespace bpds::io
