#pragma once

// Monte Carlo harness for empirical levels and powers of the KMT, EL1 and
// EL2 tests. Every replication draws one sample that feeds all three methods.
// Streams are keyed by derive_seed(master, cell_key, replication), so results
// do not depend on execution order or thread count.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gof/distributions.hpp"
#include "gof/el.hpp"
#include "gof/kmt.hpp"

namespace gof {

enum class Method { KMT = 0, EL1 = 1, EL2 = 2 };
inline constexpr std::array<Method, 3> kAllMethods{Method::KMT, Method::EL1, Method::EL2};

std::string_view to_string(Method m) noexcept;

struct SimulationCell {
  NullFamily null_family = NullFamily::Normal;
  Distribution truth = Distribution::normal(2.0, 5.0);
  std::size_t n = 500;
  double alpha = 0.05;
  std::size_t replications = 1000;
  std::uint64_t master_seed = 0;
};

/// Stable stream key for (null, truth, n). The key does not involve alpha,
/// so every level of a study sees the same samples.
std::uint64_t cell_key(NullFamily null_family, const Distribution& truth, std::size_t n);

/// Statistics of one replication; a disengaged optional marks a failed method.
struct ReplicationStatistics {
  std::optional<double> kmt;
  std::optional<double> el1;
  std::optional<double> el2;
  int el1_df = 0;
  int el2_df = 0;
};

ReplicationStatistics replicate(NullFamily null_family, const Distribution& truth, std::size_t n,
                                std::uint64_t master_seed, std::size_t replication);

/// Per-method reject flags; disengaged when the method failed on this sample.
using ReplicationFlags = std::array<std::optional<bool>, 3>;

ReplicationFlags decide(const ReplicationStatistics& stats, double alpha);

ReplicationFlags run_replication(const SimulationCell& cell, std::size_t r);

struct MethodRate {
  double rate = 0.0;
  double std_error = 0.0;
  std::size_t rejections = 0;
  /// Replications that produced a statistic (the denominator).
  std::size_t effective = 0;
  std::size_t failures = 0;
};

struct CellResult {
  std::array<MethodRate, 3> methods{};
  const MethodRate& operator[](Method m) const noexcept {
    return methods[static_cast<std::size_t>(m)];
  }
};

CellResult aggregate(const std::vector<ReplicationFlags>& flags);

/// Runs all replications of a cell; threads = 0 uses hardware concurrency.
CellResult run_cell(const SimulationCell& cell, unsigned threads = 0);

struct StudyConfig {
  std::vector<NullFamily> nulls;
  std::vector<Distribution> truths;
  std::vector<std::size_t> ns;
  std::vector<double> alphas;
  std::size_t replications = 0;
  std::uint64_t seed = 0;

  /// 2 nulls x 6 truths x n in {50,100,200,500} x alpha in {0.05,0.01}, R = 1000.
  static StudyConfig paper_defaults(std::uint64_t seed = 42);
  /// Same grid at R = 200.
  static StudyConfig desk(std::uint64_t seed = 42);

  /// Parses the JSON document {nulls, truths, n, alphas, replications, seed}.
  /// Truths are names ("normal", "logistic", "stt", "mtn", "cauchy",
  /// "laplace"; location 2 and scale 5) or objects {family, location, scale,
  /// weight, second_scale}. Throws ConfigError naming the offending key.
  static StudyConfig from_json(std::string_view text);
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key) : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The default alternative for a family: location 2, scale 5 (the mixture
/// uses 0.9 N(2, 5^2) + 0.1 N(2, 15^2)).
Distribution study_truth(Family family);

struct PowerTableRow {
  NullFamily null_family;
  Distribution truth;
  std::size_t n;
  double alpha;
  bool is_level;  // truth belongs to the null family
  CellResult result;
};

struct PowerTable {
  std::vector<PowerTableRow> rows;
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  /// Wall-clock stamp filled in by callers; not part of the CSV or text output.
  std::string timestamp;

  /// One line per (row, method):
  /// null,truth,n,alpha,method,kind,rate,stderr,rejections,effective,failures,replications,seed
  std::string to_csv() const;

  /// Aligned text blocks per null family, laid out as truth x n rows with
  /// KMT/EL1/EL2 columns per alpha.
  std::string to_text() const;
};

PowerTable run_study(const StudyConfig& config, unsigned threads = 0);

}  // namespace gof
