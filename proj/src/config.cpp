#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "peierls/error.hpp"
#include "peierls/io.hpp"

namespace peierls {
namespace {

const std::vector<std::string> kSubcommands = {"minimize", "barrier", "orbit",      "spacing", "lowerbound",
                                               "approx",   "counting", "theorem-mr", "mcor",    "herm"};
const std::vector<std::string> kFunctions = {"h0", "hn", "hbar_n", "htilde_n"};

struct Position {
  int line = 1;
  int column = 1;
};

std::string_view trim(std::string_view s, int* offset = nullptr) {
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  std::size_t e = s.size();
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  if (offset) *offset += static_cast<int>(b);
  return s.substr(b, e - b);
}

bool is_study(const std::string& name) {
  return name != "minimize" && name != "barrier" && name != "orbit" && !name.empty();
}

template <class T>
bool parse_integer(std::string_view s, T& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto r = std::from_chars(first, s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  const std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size() && std::isfinite(out);
}

// Value token with the column where it starts.
struct Token {
  std::string_view text;
  int column;
};

std::vector<Token> split_list(Token value) {
  std::vector<Token> items;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= value.text.size(); ++i) {
    if (i == value.text.size() || value.text[i] == ',') {
      int col = value.column + static_cast<int>(start);
      const std::string_view item = trim(value.text.substr(start, i - start), &col);
      items.push_back({item, col});
      start = i + 1;
    }
  }
  return items;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out;
}

// Range check for one key; empty when fine.
std::string check_key(const RunConfig& c, const std::string& key) {
  auto increasing = [](const std::vector<int>& v, int lo, int hi) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] < lo || v[i] > hi) return false;
      if (i && v[i] <= v[i - 1]) return false;
    }
    return true;
  };
  if (key == "subcommand") {
    if (!c.subcommand.empty() && std::find(kSubcommands.begin(), kSubcommands.end(), c.subcommand) == kSubcommands.end())
      return "unknown subcommand '" + c.subcommand + "'";
  } else if (key == "n") {
    if (c.n.empty() || !increasing(c.n, 1, 100000)) return "n must be increasing integers in [1, 100000]";
  } else if (key == "a") {
    if (!(c.a > 0.0 && c.a <= 4.0)) return "a must lie in (0, 4]";
  } else if (key == "k") {
    if (c.k < 0 || c.k > kMaxDerivative) return "k must lie in [0, " + std::to_string(kMaxDerivative) + "]";
  } else if (key == "s") {
    if (c.s && !(*c.s > 0.0)) return "s must be positive";
  } else if (key == "delta") {
    if (!(c.delta > 0.0 && c.delta <= 0.5)) return "delta must lie in (0, 0.5]";
  } else if (key == "omega") {
    if (c.omega && *c.omega == 0.0) return "omega must be nonzero";
  } else if (key == "symbol") {
    try {
      RotationSymbol::parse(c.symbol);
    } catch (const Error& e) {
      return e.what();
    }
  } else if (key == "function") {
    if (std::find(kFunctions.begin(), kFunctions.end(), c.function) == kFunctions.end())
      return "function must be one of h0, hn, hbar_n, htilde_n";
  } else if (key == "grid") {
    if (c.grid < 8 || c.grid > 1000000) return "grid must lie in [8, 1000000]";
  } else if (key == "width") {
    if (c.width < 0 || c.width > 1000000) return "width must lie in [0, 1000000]";
  } else if (key == "convergents") {
    if (c.convergents < 3 || c.convergents > 60) return "convergents must lie in [3, 60]";
  } else if (key == "r") {
    if (!(c.r >= 0.0 && c.r <= 4.0)) return "r must lie in [0, 4]";
  } else if (key == "q") {
    if (c.q.empty() || !increasing(c.q, 1, 1000000)) return "q must be increasing integers in [1, 1000000]";
  } else if (key == "window") {
    if (c.window < 3 || c.window > 100000) return "window must lie in [3, 100000]";
  } else if (key == "threads") {
    if (c.threads > 4096) return "threads must lie in [0, 4096]";
  }
  return {};
}

// Checks spanning several keys: (blamed key, message).
std::pair<std::string, std::string> check_cross(const RunConfig& c) {
  if (c.subcommand == "mcor" && c.a > 2.0 - 2.0 * c.delta + 1e-12) {
    return {c.has("a") || !c.has("delta") ? "a" : "delta", "a must satisfy a ≤ 2 − 2·delta"};
  }
  PerturbationParams p;
  p.a = c.a;
  p.k = c.k;
  p.s = c.s;
  p.delta = c.delta;
  try {
    p.validate();
  } catch (const Error& e) {
    return {c.has("s") ? "s" : "a", e.what()};
  }
  return {};
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "subcommand", "n", "a",      "k", "s", "delta",  "omega",  "symbol",  "function", "grid",
      "width",      "convergents", "xi", "r", "q", "window", "output", "init", "seed",     "threads"};
  return keys;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return subcommand == o.subcommand && n == o.n && a == o.a && k == o.k && s == o.s && delta == o.delta &&
         omega == o.omega && symbol == o.symbol && function == o.function && grid == o.grid && width == o.width &&
         convergents == o.convergents && xi == o.xi && r == o.r && q == o.q && window == o.window &&
         output == o.output && init == o.init && seed == o.seed && threads == o.threads;
}

namespace {

// Reads `text` into c. Keys already in c.present may be set again when
// `override` is true; a key may still appear only once in the text.
void parse_into(RunConfig& c, std::string_view text, bool override) {
  std::map<std::string, Position> where;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    // Cut the comment, respecting quotes.
    std::size_t cut = raw.size();
    bool in_quote = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '\\' && in_quote) {
        ++i;
      } else if (raw[i] == '"') {
        in_quote = !in_quote;
      } else if (raw[i] == '#' && !in_quote) {
        cut = i;
        break;
      }
    }
    int col = 1;
    const std::string_view body = trim(raw.substr(0, cut), &col);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, col, "expected 'key = value'");
    int key_col = col;
    const std::string key(trim(body.substr(0, eq), &key_col));
    int value_col = col + static_cast<int>(eq) + 1;
    const std::string_view value = trim(body.substr(eq + 1), &value_col);
    if (key.empty()) throw ConfigError(line_no, col, "missing key before '='");
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(line_no, key_col, "unknown key '" + key + "'");
    }
    if (seen.count(key) || (!override && c.present.count(key)))
      throw ConfigError(line_no, key_col, "duplicate key '" + key + "'");
    seen.insert(key);
    if (value.empty()) throw ConfigError(line_no, value_col, "missing value for '" + key + "'");
    const Token tok{value, value_col};

    auto fail = [&](int column, const std::string& msg) { throw ConfigError(line_no, column, msg); };
    auto as_int = [&](const Token& t) {
      int v = 0;
      if (!parse_integer(t.text, v)) fail(t.column, "expected an integer for '" + key + "'");
      return v;
    };
    auto as_real = [&](const Token& t) {
      double v = 0.0;
      if (!parse_real(t.text, v)) fail(t.column, "expected a number for '" + key + "'");
      return v;
    };
    auto as_list = [&](const Token& t) {
      std::vector<int> out;
      for (const Token& item : split_list(t)) out.push_back(as_int(item));
      return out;
    };
    auto as_string = [&](const Token& t) {
      if (t.text.front() != '"') return std::string(t.text);
      std::string out;
      std::size_t i = 1;
      for (; i < t.text.size(); ++i) {
        const char ch = t.text[i];
        if (ch == '\\' && i + 1 < t.text.size()) {
          out += t.text[++i];
        } else if (ch == '"') {
          break;
        } else {
          out += ch;
        }
      }
      if (i != t.text.size() - 1) fail(t.column + static_cast<int>(std::min(i, t.text.size() - 1)), "malformed quoted string");
      return out;
    };

    if (key == "subcommand") c.subcommand = as_string(tok);
    else if (key == "n") c.n = as_list(tok);
    else if (key == "a") c.a = as_real(tok);
    else if (key == "k") c.k = as_int(tok);
    else if (key == "s") c.s = as_real(tok);
    else if (key == "delta") c.delta = as_real(tok);
    else if (key == "omega") c.omega = as_real(tok);
    else if (key == "symbol") c.symbol = as_string(tok);
    else if (key == "function") c.function = as_string(tok);
    else if (key == "grid") c.grid = as_int(tok);
    else if (key == "width") c.width = as_int(tok);
    else if (key == "convergents") c.convergents = as_int(tok);
    else if (key == "xi") c.xi = as_real(tok);
    else if (key == "r") c.r = as_real(tok);
    else if (key == "q") c.q = as_list(tok);
    else if (key == "window") c.window = as_int(tok);
    else if (key == "output") c.output = as_string(tok);
    else if (key == "init") c.init = as_string(tok);
    else if (key == "threads") {
      unsigned v = 0;
      if (!parse_integer(tok.text, v)) fail(tok.column, "expected a nonnegative integer for 'threads'");
      c.threads = v;
    } else if (key == "seed") {
      std::uint64_t v = 0;
      if (!parse_integer(tok.text, v)) fail(tok.column, "expected a nonnegative integer for 'seed'");
      c.seed = v;
    }
    c.present.insert(key);
    where[key] = {line_no, value_col};
    const std::string problem = check_key(c, key);
    if (!problem.empty()) fail(value_col, problem);
  }
  if (const std::string problem = check_key(c, "subcommand"); !problem.empty()) {
    const Position p = where.count("subcommand") ? where["subcommand"] : Position{};
    throw ConfigError(p.line, p.column, problem);
  }
  const auto [blame, message] = check_cross(c);
  if (!message.empty()) {
    const Position p = where.count(blame) ? where[blame] : Position{};
    throw ConfigError(p.line, p.column, message);
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view subcommand) {
  RunConfig c;
  c.subcommand = std::string(subcommand);
  parse_into(c, text, false);
  return c;
}

RunConfig merge_config(RunConfig base, std::string_view overrides) {
  parse_into(base, overrides, true);
  return base;
}

void validate_config(const RunConfig& config) {
  for (const auto& key : config_keys()) {
    if ((key == "n" && config.n.empty()) || (key == "q" && config.q.empty())) continue;
    const std::string problem = check_key(config, key);
    if (!problem.empty()) throw Error(ErrorKind::Config, problem);
  }
  const auto [blame, message] = check_cross(config);
  if (!message.empty()) throw Error(ErrorKind::Config, message);
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  if (!c.subcommand.empty()) os << "subcommand = " << quote(c.subcommand) << "\n";
  if (!c.n.empty()) os << "n = " << join(c.n) << "\n";
  os << "a = " << format_real(c.a) << "\n";
  os << "k = " << c.k << "\n";
  if (c.s) os << "s = " << format_real(*c.s) << "\n";
  os << "delta = " << format_real(c.delta) << "\n";
  if (c.omega) os << "omega = " << format_real(*c.omega) << "\n";
  os << "symbol = " << quote(c.symbol) << "\n";
  os << "function = " << quote(c.function) << "\n";
  os << "grid = " << c.grid << "\n";
  os << "width = " << c.width << "\n";
  os << "convergents = " << c.convergents << "\n";
  if (c.xi) os << "xi = " << format_real(*c.xi) << "\n";
  os << "r = " << format_real(c.r) << "\n";
  if (!c.q.empty()) os << "q = " << join(c.q) << "\n";
  os << "window = " << c.window << "\n";
  if (!c.output.empty()) os << "output = " << quote(c.output) << "\n";
  if (!c.init.empty()) os << "init = " << quote(c.init) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "threads = " << c.threads << "\n";
  return os.str();
}

PerturbationParams config_params(const RunConfig& config, std::optional<int> n) {
  PerturbationParams p;
  p.n = n ? *n : (config.n.empty() ? 16 : config.n.front());
  p.a = config.a;
  p.k = config.k;
  p.s = config.s;
  p.delta = config.delta;
  p.validate();
  return p;
}

ExperimentSpec config_spec(const RunConfig& config) {
  if (!is_study(config.subcommand)) {
    throw Error(ErrorKind::Config, "'" + config.subcommand + "' is not a study");
  }
  ExperimentSpec spec = default_spec(config.subcommand);
  if (config.has("n")) spec.n_range = config.n;
  if (config.has("a")) spec.params.a = config.a;
  if (config.has("k")) spec.params.k = config.k;
  // Changing a or k without s returns s to its (k + 2) a default.
  if (config.has("s")) {
    spec.params.s = config.s;
  } else if (config.has("a") || config.has("k")) {
    spec.params.s.reset();
  }
  if (config.has("delta")) spec.params.delta = config.delta;
  if (config.has("omega")) {
    spec.omega_rule.coefficient = std::abs(*config.omega);
    spec.omega_rule.negative = *config.omega < 0.0;
  }
  if (config.has("grid")) spec.grid_size = config.grid;
  if (config.has("width")) spec.barrier.width = config.width;
  if (config.has("convergents")) spec.convergents = config.convergents;
  if (config.has("r")) spec.r = config.r;
  if (config.has("q")) spec.q_range = config.q;
  if (config.has("window")) spec.window_points = config.window;
  if (config.has("output")) spec.output_path = config.output;
  spec.seed = config.seed;
  spec.barrier.minimizer.seed = config.seed;
  spec.threads = config.threads;
  spec.barrier.threads = config.threads;
  spec.params.n = spec.n_range.front();
  spec.validate();
  return spec;
}

}  // namespace peierls
