#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "forgetting/decay.hpp"
#include "forgetting/retention.hpp"

namespace forgetting {

/// Per-run (sample_id, lambda) pairs for ranking comparisons.
class RankedLambdaSet {
 public:
  RankedLambdaSet(std::string run_id, std::vector<std::pair<std::string, double>> pairs);
  static RankedLambdaSet from_fits(std::string run_id, std::span<const DecayFit> fits);

  const std::string& run_id() const noexcept { return run_id_; }
  /// Sorted by sample_id.
  const std::vector<std::pair<std::string, double>>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }

  /// The ceil(k N / 100) ids with the highest lambda; ties at the cut go to
  /// the smaller sample_id. Returned sorted by sample_id.
  std::vector<std::string> top_k_ids(double k_percent) const;

  /// Same run restricted to the given ids (which must be sorted).
  RankedLambdaSet restricted_to(const std::vector<std::string>& ids) const;

 private:
  std::string run_id_;
  std::vector<std::pair<std::string, double>> pairs_;
};

std::size_t top_k_count(std::size_t n, double k_percent);

/// Sorted ids present in both sets.
std::vector<std::string> shared_ids(const RankedLambdaSet& a, const RankedLambdaSet& b);

/// Jaccard index of the two top-k% sets, computed on the shared universe.
/// Throws DisjointUniverses if the runs share no sample.
double jaccard_top_k(const RankedLambdaSet& a, const RankedLambdaSet& b, double k_percent);

struct JaccardPoint {
  double k_percent;
  double jaccard;
  std::size_t top_k_size;
};

/// {10, 20, 30, 40, 50}
std::span<const double> default_k_list();

std::vector<JaccardPoint> jaccard_sweep(const RankedLambdaSet& a, const RankedLambdaSet& b,
                                        std::span<const double> k_list = default_k_list());

enum class PValueMethod { ExactPermutation, TApproximation };

std::string to_string(PValueMethod method);

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  PValueMethod method = PValueMethod::TApproximation;
};

/// Average ranks (1-based); tied values share the mean of their positions.
Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Spearman rank correlation with a two-sided p-value. n <= 10 uses the
/// exact permutation distribution, larger n a Student-t approximation with
/// n - 2 degrees of freedom. Throws ZeroVariance if either input is constant.
CorrelationResult spearman(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

inline constexpr std::size_t kExactPermutationMaxN = 10;

struct BootstrapInterval {
  double low;
  double high;
  std::size_t resamples;
  /// Resamples rejected for zero variance and drawn again.
  std::size_t redraws;
  bool redraws_excessive() const noexcept { return redraws * 100 > resamples; }
};

struct BootstrapOptions {
  std::size_t resamples = 10000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Percentile bootstrap CI for Spearman rho over paired resamples.
BootstrapInterval bootstrap_ci_rho(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Ref<const Eigen::VectorXd>& y, const BootstrapOptions& options);

struct SeedPairResult {
  std::string run_a;
  std::string run_b;
  std::size_t shared_samples;
  CorrelationResult correlation;
  std::optional<BootstrapInterval> interval;
};

/// Spearman of lambda for every unordered pair of runs (i < j, input order),
/// on the intersection of their sample ids. Bootstrap CIs are added when
/// options are given.
std::vector<SeedPairResult> cross_seed_stability(std::span<const RankedLambdaSet> runs,
                                                 const std::optional<BootstrapOptions>& bootstrap = std::nullopt);

struct ClassForgettingRow {
  std::string class_label;
  std::size_t train_size;
  double mean_lambda;
  double pct_never_forgotten;
};

/// Per-class mean raw lambda and share of never-forgotten samples, sorted by
/// mean_lambda descending (ties by label). Throws UnknownClassLabel when a
/// fit has no metadata.
std::vector<ClassForgettingRow> class_table(std::span<const DecayFit> fits, std::span<const SampleMeta> meta);

/// Spearman between Phase-1 loss and fitted lambda, aligned by sample id.
CorrelationResult early_loss_correlation(std::span<const DecayFit> fits, std::span<const SampleMeta> meta);

struct AggregateStat {
  double mean;
  double std;  // population, divisor n
  std::size_t n_seeds;
};

AggregateStat aggregate_over_seeds(std::span<const double> values);

/// Mean R^2 per fit list, skipping fits without R^2 (imputed samples).
std::pair<double, double> mean_r2_split(std::span<const DecayFit> fits_a, std::span<const DecayFit> fits_b);
double mean_r2(std::span<const DecayFit> fits);

}  // namespace forgetting
