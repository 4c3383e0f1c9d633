#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "forgetting/error.hpp"
#include "forgetting/retention.hpp"

namespace forgetting {

struct FitConfig {
  double lambda_min = 0.0;
  double lambda_max = 10.0;
  /// Floor applied only when handing constants to the scheduler.
  double epsilon_floor = 0.01;
  /// Percentile of the valid fits assigned to never-learned samples.
  double imputation_percentile = 99.0;
  int grid_points = 2001;
  double refine_tolerance = 1e-8;
  /// Worker threads for fit_all; 0 = hardware concurrency.
  unsigned threads = 1;

  void validate() const;
};

enum class FitStatus { Fitted, NeverForgotten, NeverLearnedImputed };

std::string to_string(FitStatus status);
FitStatus parse_fit_status(const std::string& text);

struct DecayFit {
  std::string sample_id;
  double lambda = 0.0;
  FitStatus status = FitStatus::Fitted;
  std::optional<double> r_squared;
  std::optional<double> sse;
};

// Integer-valued (binary) inputs are evaluated in double.
template <typename Derived>
using decay_scalar_t = std::conditional_t<std::is_floating_point_v<typename Derived::RealScalar>,
                                          typename Derived::RealScalar, double>;

struct LambdaFit {
  double lambda;
  double sse;
};

/// Sum of squared residuals between observed values and exp(-lambda * t),
/// t = 0, 1, ..., n-1.
template <typename Derived>
decay_scalar_t<Derived> decay_sse(const Eigen::MatrixBase<Derived>& observed, decay_scalar_t<Derived> lambda) {
  using Scalar = decay_scalar_t<Derived>;
  Scalar sum(0);
  for (Eigen::Index t = 0; t < observed.size(); ++t) {
    const Scalar r = Scalar(observed(t)) - std::exp(-lambda * Scalar(t));
    sum += r * r;
  }
  return sum;
}

/// Coefficient of determination of exp(-lambda t) against observed values.
///
/// SS_tot is taken about the observed mean. A constant observed vector has
/// SS_tot = 0; then the result is 1 for an exact match and 0 otherwise.
/// Values below zero (worse than the mean) are returned as is.
template <typename Derived>
decay_scalar_t<Derived> r_squared(const Eigen::MatrixBase<Derived>& observed, decay_scalar_t<Derived> lambda) {
  using Scalar = decay_scalar_t<Derived>;
  if (observed.size() == 0) throw Error(ErrorCode::EmptySequence, "r_squared of an empty sequence");
  const auto values = observed.template cast<Scalar>().eval();
  const Scalar mean = values.mean();
  const Scalar ss_tot = (values.array() - mean).square().sum();
  const Scalar ss_res = decay_sse(values, lambda);
  if (ss_tot == Scalar(0)) return ss_res == Scalar(0) ? Scalar(1) : Scalar(0);
  return Scalar(1) - ss_res / ss_tot;
}

/// Bounded least-squares fit of lambda in exp(-lambda t) to a post-learning
/// retention vector: uniform grid over [lambda_min, lambda_max], then
/// golden-section refinement on the cell pair around the grid minimizer.
/// The grid minimizer is kept unless refinement strictly lowers the SSE.
LambdaFit fit_lambda(const Eigen::Ref<const Eigen::VectorXd>& retention, const FitConfig& config = {});

/// Fits every row of the matrix (one DecayFit per sample, row order).
///
/// Never-forgotten rows get lambda 0; never-learned rows get the configured
/// percentile of the lambdas of all other rows. Throws
/// AllSamplesNeverLearned if no row was ever learned.
std::vector<DecayFit> fit_all(const RetentionMatrix& matrix, const FitConfig& config = {});

/// Inclusive linear-interpolation percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);

/// max(lambda, epsilon) per fit, in input order. Scheduler use only.
Eigen::VectorXd apply_epsilon_floor(std::span<const DecayFit> fits, const FitConfig& config = {});

}  // namespace forgetting
