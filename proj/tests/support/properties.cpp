#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "peierls/barrier.hpp"
#include "peierls/error.hpp"
#include "peierls/io.hpp"
#include "peierls/minimizer.hpp"

namespace props {
namespace {

using namespace peierls;
using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

PerturbationParams params(int n, double a = 1.0, std::optional<double> s = 3.0) {
  PerturbationParams p;
  p.n = n;
  p.a = a;
  p.k = 2;
  p.s = s;
  return p;
}

void record(Outcome& out, bool ok, double measure, const std::string& what) {
  ++out.cases;
  out.worst = std::max(out.worst, measure);
  if (!ok) {
    ++out.failures;
    if (out.first_failure.empty()) out.first_failure = what;
  }
}

std::string describe(const std::string& label, double value) {
  std::ostringstream os;
  os.precision(17);
  os << label << " " << value;
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::uint64_t base_seed() {
  if (const char* s = std::getenv("PEIERLS_TEST_SEED"); s && *s) return std::strtoull(s, nullptr, 0);
  return 0x5eedULL;
}

Outcome gradient_consistency(std::uint64_t seed, int cases) {
  Outcome out{"gradient matches central differences at O(step^2)", 0, 0, 0.0, 0.3, {}};
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    const PerturbationParams p = params(pick(rng, 4, 32), uniform(rng, 1.0, 2.0), std::nullopt);
    const GeneratingFunction h = make_hn(p);
    Configuration cfg;
    if (pick(rng, 0, 1) == 0) {
      const long q = pick(rng, 1, 5);
      const long pp = pick(rng, 0, static_cast<int>(q));
      const double x0 = uniform(rng, 0.0, 1.0);
      for (long i = 0; i < q; ++i) {
        cfg.values.push_back(x0 + static_cast<double>(i * pp) / q + uniform(rng, -0.1, 0.1) / q);
      }
      cfg.boundary = Periodic{pp, q};
    } else {
      const int len = pick(rng, 4, 12);
      for (int i = 0; i < len; ++i) cfg.values.push_back(uniform(rng, -0.2, 1.2));
      std::sort(cfg.values.begin(), cfg.values.end());
      cfg.boundary = PinnedEnds{cfg.values.front(), cfg.values.back()};
    }
    const std::vector<double> grad = stationarity_residual(h, cfg);
    const std::size_t first = cfg.is_periodic() ? 0 : 1;
    auto fd_error = [&](double e) {
      double worst = 0.0;
      for (std::size_t j = 0; j < grad.size(); ++j) {
        Configuration plus = cfg, minus = cfg;
        plus.values[first + j] += e;
        minus.values[first + j] -= e;
        const double fd = (action(h, plus) - action(h, minus)) / (2.0 * e);
        worst = std::max(worst, std::abs(fd - grad[j]));
      }
      return worst;
    };
    const double e = 0.02 * std::min(1.0, std::pow(static_cast<double>(p.n), -p.a));
    const double e1 = fd_error(e);
    const double e2 = fd_error(e / 2.0);
    const bool floor = e1 <= 1e-9;
    const double ratio = floor ? 0.0 : e2 / e1;
    record(out, floor || e2 <= 0.3 * e1 + 1e-10, ratio, describe("error ratio", ratio));
  }
  return out;
}

Outcome aubry_crossings(std::uint64_t seed, int cases) {
  Outcome out{"minimal configurations cross at most once; same symbol never", 0, 0, 0.0, 1.0, {}};
  Rng rng(seed);
  const std::vector<std::pair<long, long>> symbols = {{0, 1}, {1, 5}, {1, 4}, {1, 3}, {2, 5},
                                                      {1, 2}, {3, 5}, {2, 3}, {3, 4}, {1, 1}};
  std::map<std::pair<int, std::size_t>, Configuration> cache;
  auto minimizer = [&](int n, std::size_t s) {
    const auto key = std::make_pair(n, s);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const MinimizeResult r = minimize_periodic(make_hn(params(n)), symbols[s].first, symbols[s].second);
      it = cache.emplace(key, r.config).first;
    }
    return it->second;
  };
  for (int c = 0; c < cases; ++c) {
    const int n = std::vector<int>{4, 8, 16}[static_cast<std::size_t>(pick(rng, 0, 2))];
    const std::size_t s1 = static_cast<std::size_t>(pick(rng, 0, static_cast<int>(symbols.size()) - 1));
    std::size_t s2 = static_cast<std::size_t>(pick(rng, 0, static_cast<int>(symbols.size()) - 1));
    if (c % 4 == 0) s2 = s1;
    const Configuration a = minimizer(n, s1);
    Configuration b = minimizer(n, s2);
    // A translate of b by (index shift, integer shift).
    b.index_offset += pick(rng, -3, 3);
    const double k = pick(rng, -1, 1);
    for (double& v : b.values) v += k;
    const bool same = s1 == s2;
    const int crossings = crossing_count(a, b);
    const bool ok = same ? crossings == 0 : crossings <= 1;
    record(out, ok, crossings,
           "n=" + std::to_string(n) + " " + std::to_string(symbols[s1].first) + "/" + std::to_string(symbols[s1].second) +
               " vs " + std::to_string(symbols[s2].first) + "/" + std::to_string(symbols[s2].second) + ": " +
               std::to_string(crossings) + " crossings");
  }
  return out;
}

Outcome barrier_nonnegative_periodic(std::uint64_t seed, int cases) {
  const double tol = 2e-11;
  Outcome out{"barrier is nonnegative and 1-periodic", 0, 0, 0.0, tol, {}};
  Rng rng(seed);
  const GeneratingFunction h8 = make_hn(params(8));
  const GeneratingFunction h16 = make_hn(params(16));
  std::vector<std::pair<std::string, std::function<double(double)>>> barriers;
  auto zp8 = std::make_shared<ZeroPlusBarrier>(h8);
  auto zp16 = std::make_shared<ZeroPlusBarrier>(h16);
  auto half_plus = std::make_shared<RationalBarrier>(h8, 1, 2, SymbolVariant::Plus);
  auto third_minus = std::make_shared<RationalBarrier>(h8, 1, 3, SymbolVariant::Minus);
  auto half_exact = std::make_shared<RationalBarrier>(h16, 1, 2, SymbolVariant::Exact);
  barriers.emplace_back("0+ n=8", [zp8](double x) { return (*zp8)(x); });
  barriers.emplace_back("0+ n=16", [zp16](double x) { return (*zp16)(x); });
  barriers.emplace_back("1/2+ n=8", [half_plus](double x) { return (*half_plus)(x); });
  barriers.emplace_back("1/3- n=8", [third_minus](double x) { return (*third_minus)(x); });
  barriers.emplace_back("1/2 n=16", [half_exact](double x) { return (*half_exact)(x); });
  for (int c = 0; c < cases; ++c) {
    const auto& [name, P] = barriers[static_cast<std::size_t>(c) % barriers.size()];
    const double xi = uniform(rng, 0.0, 1.0);
    const double shift = pick(rng, 0, 1) ? 1.0 : -1.0;
    const double v = P(xi);
    const double w = P(xi + shift);
    const double gap = std::abs(v - w);
    record(out, v >= 0.0 && w >= 0.0 && gap <= tol, gap,
           name + describe(" xi", xi) + describe(" P", v) + describe(" shifted", w));
  }
  return out;
}

Outcome truncation_doubling(std::uint64_t seed, int cases) {
  const double tol = 1e-10;
  Outcome out{"doubling the truncation width moves K, K(xi) and P by < 1e-10", 0, 0, 0.0, tol, {}};
  Rng rng(seed);
  std::vector<std::pair<std::unique_ptr<ZeroPlusBarrier>, std::unique_ptr<ZeroPlusBarrier>>> pairs;
  for (int n : {8, 16, 32}) {
    const GeneratingFunction h = make_hn(params(n));
    auto base = std::make_unique<ZeroPlusBarrier>(h);
    BarrierOptions wide;
    wide.width = 2 * base->heteroclinic().width;
    pairs.emplace_back(std::move(base), std::make_unique<ZeroPlusBarrier>(h, wide));
  }
  for (int c = 0; c < cases; ++c) {
    const auto& [narrow, wide] = pairs[static_cast<std::size_t>(c) % pairs.size()];
    const double xi = uniform(rng, 0.0, 1.0);
    const HeteroclinicActions a = narrow->actions(xi);
    const HeteroclinicActions b = wide->actions(xi);
    const double dk = std::abs(a.K - b.K);
    const double dkxi = std::abs(a.Kxi - b.Kxi);
    const double dp = std::abs((a.Kxi - a.K) - (b.Kxi - b.K));
    const double worst = std::max({dk, dkxi, dp});
    record(out, worst < tol, worst, describe("xi", xi) + describe(" dK", dk) + describe(" dKxi", dkxi));
  }
  return out;
}

Outcome config_round_trip(std::uint64_t seed, int cases) {
  Outcome out{"parse(serialize(config)) == config", 0, 0, 0.0, 0.0, {}};
  Rng rng(seed);
  const std::vector<std::string> subcommands = {"",        "minimize", "barrier",    "orbit", "spacing", "lowerbound",
                                                "approx",  "counting", "theorem-mr", "mcor",  "herm"};
  const std::vector<std::string> symbols = {"0+", "0-", "1/2", "1/3+", "2/5-", "0.6180339887", "1"};
  const std::vector<std::string> functions = {"h0", "hn", "hbar_n", "htilde_n"};
  auto random_text = [&] {
    const std::string alphabet = "ab/_.-# ,\"\\=xyz019";
    std::string s;
    const int len = pick(rng, 1, 12);
    for (int i = 0; i < len; ++i) s += alphabet[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(alphabet.size()) - 1))];
    return s;
  };
  auto increasing = [&](int hi) {
    std::vector<int> v;
    int x = 0;
    const int len = pick(rng, 1, 4);
    for (int i = 0; i < len; ++i) {
      x += pick(rng, 1, 40);
      if (x > hi) break;
      v.push_back(x);
    }
    return v;
  };
  while (out.cases < cases) {
    RunConfig c;
    c.subcommand = subcommands[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(subcommands.size()) - 1))];
    if (pick(rng, 0, 1)) c.n = increasing(100000);
    c.delta = uniform(rng, 0.01, 0.5);
    c.a = c.subcommand == "mcor" ? uniform(rng, 0.1, 2.0 - 2.0 * c.delta) : uniform(rng, 0.1, 4.0);
    c.k = pick(rng, 0, 6);
    if (pick(rng, 0, 1)) c.s = uniform(rng, 0.5, 10.0);
    if (pick(rng, 0, 1)) c.omega = uniform(rng, -1.0, 1.0);
    c.symbol = symbols[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(symbols.size()) - 1))];
    c.function = functions[static_cast<std::size_t>(pick(rng, 0, 3))];
    c.grid = pick(rng, 8, 4096);
    c.width = pick(rng, 0, 500);
    c.convergents = pick(rng, 3, 60);
    if (pick(rng, 0, 1)) c.xi = uniform(rng, -2.0, 2.0);
    c.r = uniform(rng, 0.0, 4.0);
    if (pick(rng, 0, 1)) c.q = increasing(1000000);
    c.window = pick(rng, 3, 1000);
    if (pick(rng, 0, 1)) c.output = random_text();
    if (pick(rng, 0, 1)) c.init = random_text();
    c.seed = rng();
    c.threads = static_cast<unsigned>(pick(rng, 0, 64));
    try {
      validate_config(c);
    } catch (const Error&) {
      continue;
    }
    const std::string text = serialize_config(c);
    bool ok = false;
    std::string what;
    try {
      ok = parse_config(text) == c;
      if (!ok) what = "mismatch after round trip:\n" + text;
    } catch (const Error& e) {
      what = std::string(e.what()) + "\n" + text;
    }
    record(out, ok, ok ? 0.0 : 1.0, what);
  }
  return out;
}

Outcome deterministic_reruns(std::uint64_t seed, int cases) {
  Outcome out{"re-runs give byte-identical CSV and JSON", 0, 0, 0.0, 0.0, {}};
  Rng rng(seed);
  const auto dir = std::filesystem::temp_directory_path() / ("peierls-determinism-" + std::to_string(seed));
  std::filesystem::create_directories(dir);
  const std::vector<std::string> symbols = {"0+", "1/2+", "1/2", "1/3-"};
  for (int c = 0; c < cases; ++c) {
    const int n = pick(rng, 0, 1) ? 8 : 16;
    const std::string symbol = symbols[static_cast<std::size_t>(pick(rng, 0, 3))];
    const int grid = pick(rng, 8, 16);
    const GeneratingFunction h = make_hn(params(n));
    auto run = [&](unsigned threads, const std::string& name) {
      BarrierOptions opts;
      opts.threads = threads;
      const BarrierProfile prof = barrier_profile(h, RotationSymbol::parse(symbol), grid, opts);
      ResultRecord r;
      r.timestamp = "1970-01-01T00:00:00Z";
      r.command = "barrier";
      r.inputs = {{"n", Cell{static_cast<long long>(n)}}, {"symbol", Cell{symbol}}};
      r.outputs = {{"sup_value", Cell{prof.sup_value}}};
      r.table = profile_table(prof);
      const std::string path = (dir / name).string();
      write_results(r, path);
      return slurp(path) + slurp(sidecar_path(path));
    };
    const std::string first = run(1, "a.csv");
    const std::string second = run(static_cast<unsigned>(pick(rng, 2, 4)), "b.csv");
    record(out, first == second && !first.empty(), first == second ? 0.0 : 1.0,
           "n=" + std::to_string(n) + " symbol " + symbol + " grid " + std::to_string(grid));
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  return out;
}

}  // namespace props
