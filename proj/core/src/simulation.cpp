#include "gof/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "gof/numerics.hpp"
#include "json.hpp"

namespace gof {

namespace {

using nlohmann::json;

unsigned resolve_threads(unsigned threads, std::size_t work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(work, 1)));
}

// Runs body(i) for i in [0, count) on a small worker pool. Results must be
// written to slots owned by i so the outcome is independent of scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = resolve_threads(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string truth_label(const Distribution& d) {
  switch (d.family()) {
    case Family::Normal: return "normal";
    case Family::Logistic: return "logistic";
    case Family::StudentT5: return "STT";
    case Family::NormalMixture: return "MTN";
    case Family::Cauchy: return "Cauchy";
    case Family::Laplace: return "Laplace";
  }
  return "?";
}

[[noreturn]] void config_error(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why, key);
}

const json& require_key(const json& doc, const std::string& key) {
  if (!doc.contains(key)) config_error(key, "missing required key");
  return doc.at(key);
}

Distribution parse_truth(const json& item) {
  try {
    if (item.is_string()) return study_truth(parse_family(item.get<std::string>()));
    if (!item.is_object()) config_error("truths", "entries must be names or objects");
    if (!item.contains("family")) config_error("truths", "object entry lacks 'family'");
    const Family fam = parse_family(item.at("family").get<std::string>());
    const Distribution base = study_truth(fam);
    const double loc = item.value("location", base.location());
    const double scale = item.value("scale", base.scale());
    if (fam == Family::NormalMixture) {
      return Distribution::normal_mixture(loc, scale, item.value("weight", base.weight()),
                                          item.value("second_scale", base.second_scale()));
    }
    return Distribution::of(fam, loc, scale);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    config_error("truths", e.what());
  }
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::KMT: return "KMT";
    case Method::EL1: return "EL1";
    case Method::EL2: return "EL2";
  }
  return "?";
}

Distribution study_truth(Family family) {
  if (family == Family::NormalMixture) return Distribution::normal_mixture();
  return Distribution::of(family, 2.0, 5.0);
}

std::uint64_t cell_key(NullFamily null_family, const Distribution& truth, std::size_t n) {
  using numerics::mix64;
  std::uint64_t h = mix64(static_cast<std::uint64_t>(null_family));
  h = mix64(h ^ static_cast<std::uint64_t>(truth.family()));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(truth.location()));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(truth.scale()));
  if (truth.family() == Family::NormalMixture) {
    h = mix64(h ^ std::bit_cast<std::uint64_t>(truth.weight()));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(truth.second_scale()));
  }
  return mix64(h ^ static_cast<std::uint64_t>(n));
}

ReplicationStatistics replicate(NullFamily null_family, const Distribution& truth, std::size_t n,
                                std::uint64_t master_seed, std::size_t replication) {
  ReplicationStatistics out;
  const std::uint64_t seed =
      numerics::derive_seed(master_seed, cell_key(null_family, truth, n), replication);
  const Sample x = sample(truth, n, seed);

  LocationScaleEstimate est;
  try {
    est = mle(null_family, x);
  } catch (const Error&) {
    return out;  // every method fails with the estimator
  }

  try {
    out.kmt = transformed_process(null_family, standardize(x, est)).statistic;
  } catch (const Error&) {
  }

  auto el = [&](ElVariant v, std::optional<double>& stat, int& df) {
    if (n < kElMinSampleSize) return;
    try {
      const std::size_t m = el_constraint_count(n, v);
      df = static_cast<int>(m) - 2;
      const ConstraintMatrix g = constraint_matrix(null_family, x, est, m);
      try {
        stat = solve_dual(g).statistic;
      } catch (const InfeasibleConstraintsError&) {
        stat = std::numeric_limits<double>::infinity();
      }
    } catch (const Error&) {
    }
  };
  el(ElVariant::EL1, out.el1, out.el1_df);
  el(ElVariant::EL2, out.el2, out.el2_df);
  return out;
}

ReplicationFlags decide(const ReplicationStatistics& stats, double alpha) {
  ReplicationFlags flags;
  if (stats.kmt) flags[0] = kmt_test(*stats.kmt, alpha).reject;
  if (stats.el1) flags[1] = el_test(*stats.el1, stats.el1_df, alpha).reject;
  if (stats.el2) flags[2] = el_test(*stats.el2, stats.el2_df, alpha).reject;
  return flags;
}

ReplicationFlags run_replication(const SimulationCell& cell, std::size_t r) {
  return decide(replicate(cell.null_family, cell.truth, cell.n, cell.master_seed, r), cell.alpha);
}

CellResult aggregate(const std::vector<ReplicationFlags>& flags) {
  CellResult out;
  for (std::size_t k = 0; k < 3; ++k) {
    MethodRate& m = out.methods[k];
    for (const auto& f : flags) {
      if (!f[k]) {
        ++m.failures;
        continue;
      }
      ++m.effective;
      if (*f[k]) ++m.rejections;
    }
    if (m.effective > 0) {
      const double r = static_cast<double>(m.effective);
      m.rate = static_cast<double>(m.rejections) / r;
      m.std_error = std::sqrt(m.rate * (1.0 - m.rate) / r);
    }
  }
  return out;
}

CellResult run_cell(const SimulationCell& cell, unsigned threads) {
  if (cell.replications == 0) throw DomainError("run_cell: replications must be >= 1");
  // Validate alpha once, before spawning work.
  (void)kmt_critical_value(cell.alpha);
  std::vector<ReplicationFlags> flags(cell.replications);
  parallel_for(cell.replications, threads,
               [&](std::size_t r) { flags[r] = run_replication(cell, r); });
  return aggregate(flags);
}

// ---------------------------------------------------------------------------
// Study configuration

StudyConfig StudyConfig::paper_defaults(std::uint64_t seed) {
  StudyConfig c;
  c.nulls = {NullFamily::Normal, NullFamily::Logistic};
  for (Family f : {Family::Normal, Family::Logistic, Family::StudentT5, Family::NormalMixture,
                   Family::Cauchy, Family::Laplace}) {
    c.truths.push_back(study_truth(f));
  }
  c.ns = {50, 100, 200, 500};
  c.alphas = {0.05, 0.01};
  c.replications = 1000;
  c.seed = seed;
  return c;
}

StudyConfig StudyConfig::desk(std::uint64_t seed) {
  StudyConfig c = paper_defaults(seed);
  c.replications = 200;
  return c;
}

StudyConfig StudyConfig::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "");
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object", "");

  StudyConfig c;
  try {
    const json& nulls = require_key(doc, "nulls");
    if (nulls.is_string()) {
      c.nulls.push_back(parse_null_family(nulls.get<std::string>()));
    } else if (nulls.is_array() && !nulls.empty()) {
      for (const auto& v : nulls) c.nulls.push_back(parse_null_family(v.get<std::string>()));
    } else {
      config_error("nulls", "expected a family name or a non-empty array");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    config_error("nulls", e.what());
  }

  const json& truths = require_key(doc, "truths");
  if (!truths.is_array() || truths.empty()) config_error("truths", "expected a non-empty array");
  for (const auto& t : truths) c.truths.push_back(parse_truth(t));

  const json& ns = require_key(doc, "n");
  if (!ns.is_array() || ns.empty()) config_error("n", "expected a non-empty array");
  for (const auto& v : ns) {
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(kElMinSampleSize)) {
      config_error("n", "sample sizes must be integers >= " + std::to_string(kElMinSampleSize));
    }
    c.ns.push_back(v.get<std::size_t>());
  }

  const json& alphas = require_key(doc, "alphas");
  if (!alphas.is_array() || alphas.empty()) config_error("alphas", "expected a non-empty array");
  for (const auto& v : alphas) {
    if (!v.is_number()) config_error("alphas", "levels must be numbers");
    const double a = v.get<double>();
    try {
      (void)kmt_critical_value(a);
    } catch (const DomainError&) {
      config_error("alphas", "supported levels are 0.05 and 0.01");
    }
    c.alphas.push_back(a);
  }

  const json& reps = require_key(doc, "replications");
  if (!reps.is_number_integer() || reps.get<long long>() < 1) {
    config_error("replications", "expected a positive integer");
  }
  c.replications = reps.get<std::size_t>();

  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_integer()) config_error("seed", "expected an integer");
    c.seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                    : static_cast<std::uint64_t>(s.get<std::int64_t>());
  } else {
    c.seed = 42;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Study execution and output

PowerTable run_study(const StudyConfig& config, unsigned threads) {
  if (config.replications == 0) throw DomainError("run_study: replications must be >= 1");
  for (double a : config.alphas) (void)kmt_critical_value(a);

  struct Unit {
    NullFamily null_family;
    Distribution truth;
    std::size_t n;
  };
  std::vector<Unit> units;
  for (NullFamily nf : config.nulls) {
    // Level row first, then the alternatives in configured order.
    std::vector<Distribution> ordered;
    for (const auto& t : config.truths) {
      if (t.family() == to_family(nf)) ordered.push_back(t);
    }
    for (const auto& t : config.truths) {
      if (t.family() != to_family(nf)) ordered.push_back(t);
    }
    for (const auto& t : ordered) {
      for (std::size_t n : config.ns) units.push_back({nf, t, n});
    }
  }

  const std::size_t reps = config.replications;
  std::vector<ReplicationStatistics> stats(units.size() * reps);
  parallel_for(stats.size(), threads, [&](std::size_t i) {
    const Unit& u = units[i / reps];
    stats[i] = replicate(u.null_family, u.truth, u.n, config.seed, i % reps);
  });

  PowerTable table;
  table.seed = config.seed;
  table.replications = reps;
  for (std::size_t k = 0; k < units.size(); ++k) {
    const Unit& u = units[k];
    for (double alpha : config.alphas) {
      std::vector<ReplicationFlags> flags(reps);
      for (std::size_t r = 0; r < reps; ++r) flags[r] = decide(stats[k * reps + r], alpha);
      table.rows.push_back({u.null_family, u.truth, u.n, alpha,
                            u.truth.family() == to_family(u.null_family), aggregate(flags)});
    }
  }
  return table;
}

std::string PowerTable::to_csv() const {
  std::ostringstream os;
  os << "null,truth,n,alpha,method,kind,rate,stderr,rejections,effective,failures,replications,"
        "seed\n";
  for (const auto& row : rows) {
    for (Method m : kAllMethods) {
      const MethodRate& r = row.result[m];
      os << to_string(row.null_family) << ',' << to_string(row.truth.family()) << ',' << row.n
         << ',' << format_double("%.4g", row.alpha) << ',' << to_string(m) << ','
         << (row.is_level ? "level" : "power") << ',' << format_double("%.6f", r.rate) << ','
         << format_double("%.6f", r.std_error) << ',' << r.rejections << ',' << r.effective
         << ',' << r.failures << ',' << replications << ',' << seed << '\n';
    }
  }
  return os.str();
}

std::string PowerTable::to_text() const {
  std::ostringstream os;
  std::vector<NullFamily> nulls;
  std::vector<double> alphas;
  for (const auto& row : rows) {
    if (std::find(nulls.begin(), nulls.end(), row.null_family) == nulls.end()) {
      nulls.push_back(row.null_family);
    }
    if (std::find(alphas.begin(), alphas.end(), row.alpha) == alphas.end()) {
      alphas.push_back(row.alpha);
    }
  }

  auto cell_text = [](const MethodRate& r) {
    if (r.effective == 0) return std::string("   fail");
    std::string s = format_double("%7.3f", r.rate);
    if (r.failures > 0) s += "!";
    return s;
  };

  for (NullFamily nf : nulls) {
    os << "Empirical level and power, H0: F = " << to_string(nf) << "  (R = " << replications
       << ", seed = " << seed << ")\n";
    os << "                ";
    for (double a : alphas) os << "| alpha = " << format_double("%-14.4g", a);
    os << '\n';
    os << "F          n    ";
    for (std::size_t k = 0; k < alphas.size(); ++k) os << "|    KMT    EL1    EL2 ";
    os << '\n';

    // Collect (truth, n) keys in row order, then emit one line per key.
    std::vector<std::pair<const PowerTableRow*, std::size_t>> keys;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      if (row.null_family != nf) continue;
      const bool seen = std::any_of(keys.begin(), keys.end(), [&](const auto& k) {
        return k.first->truth == row.truth && k.first->n == row.n;
      });
      if (!seen) keys.push_back({&row, i});
    }
    const Distribution* last_truth = nullptr;
    for (const auto& [key, idx] : keys) {
      const bool first = !last_truth || !(*last_truth == key->truth);
      last_truth = &key->truth;
      char head[32];
      std::snprintf(head, sizeof head, "%-9s %4zu  ", first ? truth_label(key->truth).c_str() : "",
                    key->n);
      os << head;
      for (double a : alphas) {
        os << "|";
        const PowerTableRow* match = nullptr;
        for (const auto& row : rows) {
          if (row.null_family == nf && row.truth == key->truth && row.n == key->n &&
              row.alpha == a) {
            match = &row;
            break;
          }
        }
        for (Method m : kAllMethods) os << (match ? cell_text(match->result[m]) : "      -");
        os << ' ';
      }
      os << '\n';
    }
    os << '\n';
  }
  os << "'!' marks cells with failed replications (excluded from the denominator).\n";
  return os.str();
}

}  // namespace gof
