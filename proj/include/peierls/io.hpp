#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "peierls/barrier.hpp"
#include "peierls/configuration.hpp"
#include "peierls/experiments.hpp"
#include "peierls/generating.hpp"

namespace peierls {

/// Run configuration. The text form is one `key = value` per line, `#`
/// starts a comment, lists are comma separated and strings may be quoted:
///
///     subcommand = barrier
///     n = 8, 16, 32
///     symbol = "0+"
struct RunConfig {
  std::string subcommand;
  /// Empty selects the per-command default.
  std::vector<int> n;
  double a = 1.9;
  int k = 2;
  std::optional<double> s;
  double delta = 0.05;
  std::optional<double> omega;
  std::string symbol = "0+";
  std::string function = "hn";
  int grid = 64;
  int width = 0;
  int convergents = 12;
  std::optional<double> xi;
  double r = 3.0;
  std::vector<int> q;
  int window = 17;
  std::string output;
  std::string init;
  std::uint64_t seed = 0x5eedULL;
  unsigned threads = 0;

  /// Keys set by the text or by flags; not part of equality.
  std::set<std::string> present;

  bool operator==(const RunConfig& other) const;
  bool has(const std::string& key) const { return present.count(key) != 0; }
};

/// Keys accepted by parse_config, in serialization order.
const std::vector<std::string>& config_keys();

/// Parses and validates. `subcommand`, when given, is used unless the text
/// sets one. Throws ConfigError with the line and column of the offending
/// token.
RunConfig parse_config(std::string_view text, std::string_view subcommand = {});

/// Applies the lines of `overrides` on top of `base`; keys may repeat keys
/// of the base but not each other. Positions refer to `overrides`.
RunConfig merge_config(RunConfig base, std::string_view overrides);

/// Range checks for a config assembled in code or from flags; throws
/// Error(Config).
void validate_config(const RunConfig& config);

/// Every key, so that parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Parameters for one n (the first of config.n, or `n` when given).
PerturbationParams config_params(const RunConfig& config, std::optional<int> n = std::nullopt);

/// default_spec(config.subcommand) with the keys present in the config
/// applied on top.
ExperimentSpec config_spec(const RunConfig& config);

using Fields = std::vector<std::pair<std::string, Cell>>;

struct ResultRecord {
  int schema_version = 1;
  /// ISO 8601 UTC; taken from SOURCE_DATE_EPOCH when that is set.
  std::string timestamp;
  std::string command;
  Fields inputs;
  Table table;
  Fields outputs;
  std::vector<Check> checks;
  Fields solver;
};

/// Equality with NaN equal to NaN.
bool same_record(const ResultRecord& a, const ResultRecord& b);
bool same_cell(const Cell& a, const Cell& b);

std::string current_timestamp();

/// RFC 4180 style: header row, fields quoted when they contain a comma,
/// quote or line break, or when they would otherwise read back as another
/// type. Doubles keep 17 significant digits and always show a decimal point
/// or exponent.
std::string to_csv(const Table& table);
Table parse_csv(std::string_view text);

std::string to_json(const ResultRecord& record);
ResultRecord parse_json(std::string_view text);

/// `path` with its extension replaced by .json.
std::string sidecar_path(const std::string& path);

/// Writes the table to `path` as CSV and everything else to the JSON
/// sidecar, overwriting both. A row with a NaN needs a status column other
/// than "ok" or a false converged column. Throws Error(Io) on I/O failure.
void write_results(const ResultRecord& record, const std::string& path);
ResultRecord read_results(const std::string& path);

Table profile_table(const BarrierProfile& profile);
Table configuration_table(const Configuration& config);
Configuration read_configuration_csv(const std::string& path);

ResultRecord study_record(const StudyResult& study, const RunConfig& config);

/// Whitespace separated columns with a `#` header, for gnuplot.
void emit_plot_data(const BarrierProfile& profile, const std::string& path);
/// Study-specific columns: (log n, log gap) for spacing, (n, sup barrier,
/// threshold) for theorem-mr, (log q, log norm) for mcor, and so on.
void emit_plot_data(const StudyResult& study, const std::string& path);

}  // namespace peierls
