#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "gof/distributions.hpp"
#include "gof/el.hpp"
#include "gof/error.hpp"
#include "gof/kmt.hpp"
#include "gof/simulation.hpp"
#include "json.hpp"

namespace gof::cli {

namespace {

using nlohmann::ordered_json;

struct TestArgs {
  std::string null_name = "normal";
  std::string method = "kmt";
  double alpha = 0.05;
  std::optional<double> critical_value;
  std::optional<std::size_t> m;
  std::optional<int> df;
  bool json = false;
  std::string path;
};

struct SimulateArgs {
  std::string config;
  bool paper_defaults = false;
  bool desk = false;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned threads = 0;
  bool quiet = false;
};

struct CriticalArgs {
  std::vector<double> alphas{0.05, 0.01};
  std::vector<std::size_t> ns{50, 100, 200, 500};
  bool json = false;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// KMT has no analytic null CDF here, so report where the statistic falls
// relative to the tabulated levels.
std::string kmt_p_bound(double statistic) {
  if (statistic > kKmtCritical01) return "< 0.01";
  if (statistic > kKmtCritical05) return "< 0.05";
  return "> 0.05";
}

int cmd_test(const TestArgs& a, std::ostream& out) {
  const NullFamily null_family = parse_null_family(a.null_name);
  const Sample x(read_data_file(a.path));
  const std::size_t n = x.size();

  ordered_json report;
  report["method"] = a.method;
  report["null"] = std::string(to_string(null_family));
  report["n"] = n;
  report["alpha"] = a.alpha;

  bool reject = false;
  std::ostringstream text;
  if (a.method == "kmt") {
    if (a.m || a.df) throw DomainError("--m and --df apply only to the EL methods");
    const KmtStatistic stat = kmt_statistic(null_family, x);
    const KmtOutcome outcome = kmt_test(stat.statistic, a.alpha, a.critical_value);
    reject = outcome.reject;
    report["mu_hat"] = stat.estimate.mu_hat;
    report["sigma_hat"] = stat.estimate.sigma_hat;
    report["statistic"] = stat.statistic;
    report["critical_value"] = outcome.critical_value;
    report["p_value_bound"] = kmt_p_bound(stat.statistic);
    text << "statistic    " << fixed(stat.statistic, 4) << "  (sup |U_n|)\n"
         << "critical     " << fixed(outcome.critical_value, 4) << '\n'
         << "p-value      " << kmt_p_bound(stat.statistic) << '\n';
    report["decision"] = reject ? "reject" : "accept";
    if (!a.json) {
      out << "KMT test, H0: " << to_string(null_family) << " location-scale family\n"
          << "n            " << n << '\n'
          << "mu_hat       " << fixed(stat.estimate.mu_hat, 6) << '\n'
          << "sigma_hat    " << fixed(stat.estimate.sigma_hat, 6) << '\n'
          << text.str() << "alpha        " << a.alpha << '\n'
          << "decision     " << (reject ? "reject H0" : "accept H0") << '\n';
    }
  } else if (a.method == "el1" || a.method == "el2") {
    if (a.critical_value) throw DomainError("--critical-value applies only to kmt");
    const ElVariant variant = a.method == "el1" ? ElVariant::EL1 : ElVariant::EL2;
    ElOptions opts;
    opts.m = a.m;
    opts.df = a.df;
    const ElStatistic stat = el_statistic(null_family, x, variant, opts);
    const ElOutcome outcome = el_test(stat, variant, a.alpha);
    reject = outcome.reject;
    report["mu_hat"] = stat.estimate.mu_hat;
    report["sigma_hat"] = stat.estimate.sigma_hat;
    report["m"] = stat.m;
    report["df"] = stat.df;
    report["feasible"] = stat.feasible;
    // JSON has no infinity; an infeasible statistic is reported as null.
    report["statistic"] = stat.feasible ? ordered_json(stat.statistic) : ordered_json(nullptr);
    report["critical_value"] = outcome.critical_value;
    report["p_value"] = outcome.p_value;
    report["decision"] = reject ? "reject" : "accept";
    if (!a.json) {
      out << to_string(variant) << " test, H0: " << to_string(null_family)
          << " location-scale family\n"
          << "n            " << n << '\n'
          << "mu_hat       " << fixed(stat.estimate.mu_hat, 6) << '\n'
          << "sigma_hat    " << fixed(stat.estimate.sigma_hat, 6) << '\n'
          << "m            " << stat.m << "  (df " << stat.df << ")\n"
          << "statistic    "
          << (stat.feasible ? fixed(stat.statistic, 4) : std::string("inf (infeasible)")) << '\n'
          << "critical     " << fixed(outcome.critical_value, 4) << '\n'
          << "p-value      " << fixed(outcome.p_value, 4) << '\n'
          << "alpha        " << a.alpha << '\n'
          << "decision     " << (reject ? "reject H0" : "accept H0") << '\n';
    }
  } else {
    throw DomainError("unknown method '" + a.method + "' (expected kmt, el1 or el2)");
  }

  if (a.json) out << report.dump(2) << '\n';
  return reject ? kExitReject : kExitAccept;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const int sources = (a.config.empty() ? 0 : 1) + (a.paper_defaults ? 1 : 0) + (a.desk ? 1 : 0);
  if (sources != 1) {
    err << "simulate: give exactly one of --config, --paper-defaults, --desk\n";
    return kExitError;
  }

  StudyConfig config;
  if (a.paper_defaults) {
    config = StudyConfig::paper_defaults();
  } else if (a.desk) {
    config = StudyConfig::desk();
  } else {
    std::ifstream in(a.config);
    if (!in) throw Error("cannot open config file '" + a.config + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    config = StudyConfig::from_json(buf.str());
  }
  if (a.seed) config.seed = *a.seed;

  const auto start = std::chrono::steady_clock::now();
  PowerTable table = run_study(config, a.threads);
  table.timestamp = utc_timestamp();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  namespace fs = std::filesystem;
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const std::string text = table.to_text();
  {
    std::ofstream csv(dir / "power_table.csv");
    csv << table.to_csv();
    std::ofstream txt(dir / "power_table.txt");
    txt << text;
    if (!csv || !txt) throw Error("failed writing results to '" + a.out_dir + "'");
  }

  ordered_json meta;
  meta["seed"] = table.seed;
  meta["replications"] = table.replications;
  meta["timestamp"] = table.timestamp;
  meta["elapsed_seconds"] = seconds;
  meta["nulls"] = ordered_json::array();
  for (NullFamily nf : config.nulls) meta["nulls"].push_back(std::string(to_string(nf)));
  meta["truths"] = ordered_json::array();
  for (const auto& t : config.truths) {
    ordered_json j;
    j["family"] = std::string(to_string(t.family()));
    j["location"] = t.location();
    j["scale"] = t.scale();
    if (t.family() == Family::NormalMixture) {
      j["weight"] = t.weight();
      j["second_scale"] = t.second_scale();
    }
    meta["truths"].push_back(j);
  }
  meta["n"] = config.ns;
  meta["alphas"] = config.alphas;
  meta["rows"] = table.rows.size() * kAllMethods.size();
  std::ofstream(dir / "metadata.json") << meta.dump(2) << '\n';

  if (!a.quiet) out << text;
  out << "wrote " << (dir / "power_table.csv").string() << ", power_table.txt, metadata.json ("
      << fixed(seconds, 1) << " s)\n";
  return kExitAccept;
}

int cmd_critical_values(const CriticalArgs& a, std::ostream& out) {
  ordered_json doc = ordered_json::array();
  std::ostringstream text;
  text << "Critical values; reject H0 when the statistic exceeds the value.\n"
       << "KMT: sup-|Brownian motion| quantiles. EL: chi-square quantiles with df = m - 2,\n"
       << "m = floor(n^(1/3)) + 1 for EL1 and + 2 for EL2.\n\n";
  text << "alpha   method ";
  for (std::size_t n : a.ns) text << std::setw(12) << ("n=" + std::to_string(n));
  text << '\n';

  for (double alpha : a.alphas) {
    const double kmt = kmt_critical_value(alpha);
    text << std::left << std::setw(8) << alpha << std::setw(7) << "KMT" << std::right;
    for (std::size_t n : a.ns) {
      text << std::setw(12) << fixed(kmt, 2);
      doc.push_back({{"alpha", alpha}, {"method", "KMT"}, {"n", n}, {"critical_value", kmt}});
    }
    text << '\n';
    for (ElVariant v : {ElVariant::EL1, ElVariant::EL2}) {
      text << std::left << std::setw(8) << alpha << std::setw(7) << to_string(v) << std::right;
      for (std::size_t n : a.ns) {
        const auto m = el_constraint_count(n, v);
        const int df = static_cast<int>(m) - 2;
        const double cv = chi2_quantile(df, 1.0 - alpha);
        text << std::setw(12) << (fixed(cv, 2) + " (" + std::to_string(df) + ")");
        doc.push_back({{"alpha", alpha},
                       {"method", std::string(to_string(v))},
                       {"n", n},
                       {"m", m},
                       {"df", df},
                       {"critical_value", cv}});
      }
      text << '\n';
    }
  }
  text << "\nEL entries show the value with its df in parentheses.\n";

  if (a.json) {
    out << doc.dump(2) << '\n';
  } else {
    out << text.str();
  }
  return kExitAccept;
}

}  // namespace

std::vector<double> read_data_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open data file '" + path + "'");
  std::vector<double> values;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw Error(path + ":" + std::to_string(lineno) + ": not a finite number: '" +
                  std::string(trim(line)) + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw Error("data file '" + path + "' contains no observations");
  return values;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Goodness-of-fit tests for normal and logistic location-scale families"};
  app.name("gof");
  app.require_subcommand(1);

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Test a data file against a location-scale null");
  test->add_option("--null", test_args.null_name, "Null family: normal or logistic")
      ->capture_default_str();
  test->add_option("--method", test_args.method, "kmt, el1 or el2")
      ->check(CLI::IsMember({"kmt", "el1", "el2"}))
      ->capture_default_str();
  test->add_option("--alpha", test_args.alpha, "Significance level")->capture_default_str();
  test->add_option("--critical-value", test_args.critical_value,
                   "KMT critical value for levels other than 0.05 and 0.01");
  test->add_option("--m", test_args.m, "EL constraint count override")->check(CLI::PositiveNumber);
  test->add_option("--df", test_args.df, "EL degrees of freedom override")
      ->check(CLI::PositiveNumber);
  test->add_flag("--json", test_args.json, "Print the report as JSON");
  test->add_option("data", test_args.path, "File with one observation per line")->required();

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo level and power study");
  simulate->add_option("--config", sim_args.config, "Study configuration (JSON)");
  simulate->add_flag("--paper-defaults", sim_args.paper_defaults,
                     "Full grid: 2 nulls x 6 truths x 4 n x 2 alpha, R = 1000");
  simulate->add_flag("--desk", sim_args.desk, "Full grid at R = 200");
  simulate->add_option("--seed", sim_args.seed, "Master seed (overrides the config)");
  simulate->add_option("--out", sim_args.out_dir, "Output directory")->capture_default_str();
  simulate->add_option("--threads", sim_args.threads, "Worker threads; 0 = all cores")
      ->capture_default_str();
  simulate->add_flag("--quiet", sim_args.quiet, "Do not echo the text table");

  CriticalArgs crit_args;
  auto* critical =
      app.add_subcommand("critical-values", "Print KMT and EL critical values by n and alpha");
  critical->add_option("--alpha", crit_args.alphas, "Levels (0.05 and/or 0.01)")
      ->capture_default_str();
  critical->add_option("--n", crit_args.ns, "Sample sizes")->capture_default_str();
  critical->add_flag("--json", crit_args.json, "Print as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitAccept : kExitError;
  }

  try {
    if (*test) return cmd_test(test_args, out);
    if (*simulate) return cmd_simulate(sim_args, out, err);
    if (*critical) return cmd_critical_values(crit_args, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace gof::cli
