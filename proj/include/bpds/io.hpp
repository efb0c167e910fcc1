#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "bpds/errors.hpp"
#include "bpds/types.hpp"

namespace bpds::io {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Write a matrix with a header row. Values use max-precision %.17g so reruns
/// are byte-identical.
void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& values);

/// Write rows with a leading string column (dates, method names, ...).
void write_labeled_csv(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::string>& row_labels, const Matrix& values);

/// Read a numeric CSV; a non-numeric first line is treated as a header and
/// skipped.
Matrix read_numeric_csv(const std::string& path);

struct PriceTable {
  std::vector<std::string> dates;   // first column
  std::vector<std::string> assets;  // header names
  Matrix prices;                    // days x assets, strictly positive
};

/// Price CSV: header "date,NAME1,NAME2,...", ISO dates, positive floats.
PriceTable read_price_csv(const std::string& path);
void write_price_csv(const std::string& path, const PriceTable& table);

std::string format_double(double v);

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

std::vector<double> to_std(const Vector& v);
Vector to_vector(const std::vector<double>& v);
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

/// FNV-1a over the canonical (alphabetically keyed) JSON dump; embedded in
/// outputs for provenance.
std::uint64_t config_hash(const Json& config);

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string study;  // design | portfolio | et-solve
  std::uint64_t seed = 0;
  std::string out_dir;
  int mc_samples = 10000;
  int threads = 1;
  double tol = 1e-8;
  int max_iter = 100;
  Json study_config;  // study-specific block, defaults materialized
  Json echo;          // full validated config for re-emission
};

/// Load and strictly validate a config file: unknown keys are rejected and
/// range violations are reported all at once. load(echo(load(x))) == load(x).
RunConfig load_config(const std::string& path);
RunConfig parse_config(const Json& j);

/// Write summary.json (config hash, version, emitted files) and the echoed
/// config into `dir`.
void emit_run_summary(const RunConfig& config, const std::vector<std::string>& outputs,
                      const std::string& dir);

}  // namespace bpds::io
