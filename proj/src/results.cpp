#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "peierls/error.hpp"
#include "peierls/io.hpp"

namespace peierls {
namespace {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

// Unquoted field -> typed cell.
Cell read_bare(const std::string& s) {
  if (s == "true") return Cell{true};
  if (s == "false") return Cell{false};
  if (!s.empty()) {
    char* end = nullptr;
    const bool integral = s.find_first_not_of("+-0123456789") == std::string::npos;
    if (integral) {
      errno = 0;
      const long long v = std::strtoll(s.c_str(), &end, 10);
      if (*end == '\0' && errno == 0) return Cell{v};
    }
    const double d = std::strtod(s.c_str(), &end);
    if (*end == '\0') return Cell{d};
  }
  return Cell{s};
}

std::string csv_field(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) {
    const bool special = s->find_first_of(",\"\r\n") != std::string::npos || s->empty() ||
                         s->front() == ' ' || s->back() == ' ' || !std::holds_alternative<std::string>(read_bare(*s));
    if (!special) return *s;
    std::string out = "\"";
    for (char ch : *s) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + "\"";
  }
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<bool>(c) ? "true" : "false";
}

json cell_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d)) return *d;
    return json{{"nonfinite", format_double(*d)}};
  }
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<bool>(c);
}

Cell json_cell(const json& j) {
  if (j.is_string()) return Cell{j.get<std::string>()};
  if (j.is_boolean()) return Cell{j.get<bool>()};
  if (j.is_number_integer()) return Cell{j.get<long long>()};
  if (j.is_number_float()) return Cell{j.get<double>()};
  if (j.is_object() && j.contains("nonfinite")) return Cell{std::strtod(j["nonfinite"].get<std::string>().c_str(), nullptr)};
  throw Error(ErrorKind::Io, "unexpected JSON value " + j.dump());
}

double json_double(const json& j) {
  const Cell c = json_cell(j);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
  throw Error(ErrorKind::Io, "expected a number, got " + j.dump());
}

json fields_json(const Fields& f) {
  json out = json::object();
  for (const auto& [k, v] : f) out[k] = cell_json(v);
  return out;
}

Fields json_fields(const json& j) {
  Fields out;
  for (auto it = j.begin(); it != j.end(); ++it) out.emplace_back(it.key(), json_cell(it.value()));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << content;
  out.close();
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

bool row_flagged(const Table& t, const std::vector<Cell>& row) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (t.columns[c] == "status") {
      if (const auto* s = std::get_if<std::string>(&row[c]); s && *s != "ok") return true;
    }
    if (t.columns[c] == "converged") {
      if (const auto* b = std::get_if<bool>(&row[c]); b && !*b) return true;
      if (const auto* i = std::get_if<long long>(&row[c]); i && *i == 0) return true;
    }
  }
  return false;
}

int column(const Table& t, const std::string& name) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (t.columns[c] == name) return static_cast<int>(c);
  }
  throw Error(ErrorKind::InvalidArgument, "table has no column '" + name + "'");
}

double number(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? 1.0 : 0.0;
  return std::numeric_limits<double>::quiet_NaN();
}

std::string text_of(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return {};
}

}  // namespace

bool same_cell(const Cell& a, const Cell& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    return (std::isnan(*x) && std::isnan(y)) || *x == y;
  }
  return a == b;
}

bool same_record(const ResultRecord& a, const ResultRecord& b) {
  auto same_fields = [](const Fields& x, const Fields& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].first != y[i].first || !same_cell(x[i].second, y[i].second)) return false;
    }
    return true;
  };
  if (a.schema_version != b.schema_version || a.timestamp != b.timestamp || a.command != b.command) return false;
  if (!same_fields(a.inputs, b.inputs) || !same_fields(a.outputs, b.outputs) || !same_fields(a.solver, b.solver))
    return false;
  if (a.table.columns != b.table.columns || a.table.rows.size() != b.table.rows.size()) return false;
  for (std::size_t r = 0; r < a.table.rows.size(); ++r) {
    if (a.table.rows[r].size() != b.table.rows[r].size()) return false;
    for (std::size_t c = 0; c < a.table.rows[r].size(); ++c) {
      if (!same_cell(a.table.rows[r][c], b.table.rows[r][c])) return false;
    }
  }
  if (a.checks.size() != b.checks.size()) return false;
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    const Check& x = a.checks[i];
    const Check& y = b.checks[i];
    if (x.name != y.name || x.passed != y.passed || !same_cell(x.value, y.value) || !same_cell(x.bound, y.bound))
      return false;
  }
  return true;
}

std::string current_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (*end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out += (c ? "," : "") + csv_field(Cell{table.columns[c]});
  }
  out += "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw Error(ErrorKind::InvalidArgument, "row width differs from header");
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_field(row[c]);
    out += "\n";
  }
  return out;
}

Table parse_csv(std::string_view text) {
  std::vector<std::vector<Cell>> records;
  std::vector<Cell> row;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  bool any = false;
  auto end_field = [&] {
    row.push_back(was_quoted ? Cell{field} : read_bare(field));
    field.clear();
    was_quoted = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
      continue;
    }
    any = true;
    if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      end_field();
      records.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted) throw Error(ErrorKind::Io, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    end_field();
    records.push_back(std::move(row));
  }
  if (records.empty()) throw Error(ErrorKind::Io, "CSV has no header row");
  Table t;
  for (const Cell& c : records.front()) {
    const auto* s = std::get_if<std::string>(&c);
    t.columns.push_back(s ? *s : csv_field(c));
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.columns.size()) {
      throw Error(ErrorKind::Io, "CSV row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                     " fields, header has " + std::to_string(t.columns.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

std::string to_json(const ResultRecord& record) {
  json j;
  j["schemaVersion"] = record.schema_version;
  j["timestamp"] = record.timestamp;
  j["command"] = record.command;
  j["inputs"] = fields_json(record.inputs);
  j["outputs"] = fields_json(record.outputs);
  json checks = json::array();
  for (const Check& c : record.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", cell_json(c.value)}, {"bound", cell_json(c.bound)}});
  }
  j["checks"] = std::move(checks);
  j["solver"] = fields_json(record.solver);
  j["table"] = {{"columns", record.table.columns}, {"rows", record.table.rows.size()}};
  return j.dump(2) + "\n";
}

ResultRecord parse_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("invalid JSON: ") + e.what());
  }
  try {
    ResultRecord r;
    r.schema_version = j.at("schemaVersion").get<int>();
    if (r.schema_version != 1) throw Error(ErrorKind::Io, "unsupported schemaVersion " + std::to_string(r.schema_version));
    r.timestamp = j.at("timestamp").get<std::string>();
    r.command = j.at("command").get<std::string>();
    r.inputs = json_fields(j.at("inputs"));
    r.outputs = json_fields(j.at("outputs"));
    for (const auto& c : j.at("checks")) {
      r.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), json_double(c.at("value")),
                          json_double(c.at("bound"))});
    }
    r.solver = json_fields(j.at("solver"));
    r.table.columns = j.at("table").at("columns").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed result sidecar: ") + e.what());
  }
}

std::string sidecar_path(const std::string& path) {
  std::filesystem::path p(path);
  p.replace_extension(".json");
  return p.string();
}

void write_results(const ResultRecord& record, const std::string& path) {
  for (std::size_t r = 0; r < record.table.rows.size(); ++r) {
    const auto& row = record.table.rows[r];
    const bool has_nan = std::any_of(row.begin(), row.end(), [](const Cell& c) {
      const auto* d = std::get_if<double>(&c);
      return d && std::isnan(*d);
    });
    if (has_nan && !row_flagged(record.table, row)) {
      throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(r) + " holds NaN but is not flagged");
    }
  }
  if (sidecar_path(path) == path) throw Error(ErrorKind::Io, "result path '" + path + "' collides with its sidecar");
  write_file(path, to_csv(record.table));
  write_file(sidecar_path(path), to_json(record));
}

ResultRecord read_results(const std::string& path) {
  ResultRecord r = parse_json(read_file(sidecar_path(path)));
  Table t = parse_csv(read_file(path));
  if (t.columns != r.table.columns) throw Error(ErrorKind::Io, "CSV header does not match the sidecar");
  r.table = std::move(t);
  return r;
}

Table profile_table(const BarrierProfile& profile) {
  Table t;
  t.columns = {"xi", "value", "converged", "status"};
  for (std::size_t j = 0; j < profile.grid.size(); ++j) {
    const bool ok = profile.converged[j] != 0;
    t.rows.push_back({Cell{profile.grid[j]}, Cell{profile.values[j]}, Cell{ok}, Cell{std::string(ok ? "ok" : "failed")}});
  }
  return t;
}

Table configuration_table(const Configuration& config) {
  Table t;
  t.columns = {"index", "value"};
  for (std::size_t i = 0; i < config.size(); ++i) {
    t.rows.push_back({Cell{static_cast<long long>(config.index_offset + static_cast<long>(i))}, Cell{config.values[i]}});
  }
  return t;
}

Configuration read_configuration_csv(const std::string& path) {
  const Table t = parse_csv(read_file(path));
  const int ic = column(t, "index");
  const int vc = column(t, "value");
  Configuration c;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double idx = number(t.rows[r][static_cast<std::size_t>(ic)]);
    const double v = number(t.rows[r][static_cast<std::size_t>(vc)]);
    if (!std::isfinite(v) || !std::isfinite(idx)) throw Error(ErrorKind::Io, "non-numeric entry in '" + path + "'");
    if (r == 0) c.index_offset = static_cast<long>(idx);
    else if (static_cast<long>(idx) != c.index_offset + static_cast<long>(r))
      throw Error(ErrorKind::Io, "indices in '" + path + "' are not consecutive");
    c.values.push_back(v);
  }
  if (c.values.empty()) throw Error(ErrorKind::Io, "'" + path + "' holds no configuration");
  c.boundary = PinnedEnds{c.values.front(), c.values.back()};
  return c;
}

ResultRecord study_record(const StudyResult& study, const RunConfig& config) {
  ResultRecord r;
  r.timestamp = current_timestamp();
  r.command = study.name;
  const ExperimentSpec spec = config_spec(config);
  std::string ns;
  for (int n : spec.n_range) ns += (ns.empty() ? "" : ",") + std::to_string(n);
  std::string qs;
  for (int q : spec.q_range) qs += (qs.empty() ? "" : ",") + std::to_string(q);
  r.inputs = {{"n", Cell{ns}},
              {"a", Cell{spec.params.a}},
              {"k", Cell{static_cast<long long>(spec.params.k)}},
              {"s", Cell{spec.params.resolved_s()}},
              {"delta", Cell{spec.params.delta}},
              {"omega_coefficient", Cell{spec.omega_rule.negative ? -spec.omega_rule.coefficient : spec.omega_rule.coefficient}},
              {"grid", Cell{static_cast<long long>(spec.grid_size)}},
              {"window", Cell{static_cast<long long>(spec.window_points)}},
              {"convergents", Cell{static_cast<long long>(spec.convergents)}},
              {"r", Cell{spec.r}},
              {"q", Cell{qs}},
              {"seed", Cell{std::to_string(spec.seed)}}};
  for (const NamedFit& f : study.fits) {
    r.outputs.emplace_back(f.name + ".slope", Cell{f.fit.slope});
    r.outputs.emplace_back(f.name + ".intercept", Cell{f.fit.intercept});
    r.outputs.emplace_back(f.name + ".r2", Cell{f.fit.r2});
    r.outputs.emplace_back(f.name + ".points", Cell{static_cast<long long>(f.fit.point_count)});
    r.outputs.emplace_back(f.name + ".low_confidence", Cell{f.low_confidence});
  }
  r.outputs.emplace_back("passed", Cell{study.passed()});
  r.checks = study.checks;
  r.solver = {{"tolerance", Cell{spec.barrier.minimizer.tolerance}},
              {"tail_tolerance", Cell{spec.barrier.minimizer.tail_tolerance}},
              {"max_sweeps", Cell{static_cast<long long>(spec.barrier.minimizer.max_sweeps)}},
              {"stabilization_tolerance", Cell{spec.barrier.stabilization_tolerance}},
              {"width", Cell{static_cast<long long>(spec.barrier.width)}}};
  r.table = study.table;
  return r;
}

void emit_plot_data(const BarrierProfile& profile, const std::string& path) {
  std::string out = "# xi value converged\n";
  char buf[96];
  for (std::size_t j = 0; j < profile.grid.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", profile.grid[j], profile.values[j], profile.converged[j] ? 1 : 0);
    out += buf;
  }
  write_file(path, out);
}

void emit_plot_data(const StudyResult& study, const std::string& path) {
  struct Layout {
    std::string row_kind;
    std::string kind_column;
    std::vector<std::string> columns;
    bool log = false;
  };
  Layout l;
  const std::string& n = study.name;
  if (n == "spacing") l = {"hbar_n", "function", {"n", "median_gap"}, true};
  else if (n == "counting") l = {"hbar_n", "kind", {"n_or_k", "count"}, true};
  else if (n == "mcor") l = {"htilde_n - h0", "function", {"q", "norm_estimate"}, true};
  else if (n == "theorem-mr") l = {"hn", "function", {"n", "sup_barrier", "threshold"}, false};
  else if (n == "lowerbound") l = {"hn", "function", {"n", "barrier", "bound"}, false};
  else if (n == "approx") l = {"hn", "function", {"n", "sup_discrepancy", "bound"}, false};
  else if (n == "herm") l = {"hn", "function", {"q", "barrier_q", "barrier_p"}, false};
  else throw Error(ErrorKind::InvalidArgument, "no plot layout for study '" + n + "'");

  std::string out = "#";
  for (const auto& c : l.columns) out += " " + (l.log ? "log_" + c : c);
  out += "\n";
  for (const NamedFit& f : study.fits) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "# fit %s: slope %.17g intercept %.17g r2 %.17g\n", f.name.c_str(), f.fit.slope,
                  f.fit.intercept, f.fit.r2);
    out += buf;
  }
  const int kind = column(study.table, l.kind_column);
  std::vector<int> cols;
  for (const auto& c : l.columns) cols.push_back(column(study.table, c));
  for (const auto& row : study.table.rows) {
    if (text_of(row[static_cast<std::size_t>(kind)]) != l.row_kind) continue;
    std::string line;
    bool skip = false;
    for (int c : cols) {
      double v = number(row[static_cast<std::size_t>(c)]);
      if (l.log) {
        if (!(v > 0.0)) skip = true;
        v = std::log(v);
      }
      line += (line.empty() ? "" : " ") + format_double(v);
    }
    out += skip ? "# skipped nonpositive row\n" : line + "\n";
  }
  write_file(path, out);
}

}  // namespace peierls
