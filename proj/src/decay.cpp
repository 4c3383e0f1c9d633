#include "forgetting/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forgetting/golden_section.hpp"
#include "forgetting/parallel.hpp"

namespace forgetting {

void FitConfig::validate() const {
  if (!(lambda_min < lambda_max)) throw Error(ErrorCode::InvalidArgument, "lambda_min must be below lambda_max");
  if (!(epsilon_floor > 0.0 && epsilon_floor < lambda_max)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon_floor must lie in (0, lambda_max)");
  }
  if (!(imputation_percentile > 0.0 && imputation_percentile <= 100.0)) {
    throw Error(ErrorCode::InvalidArgument, "imputation_percentile must lie in (0, 100]");
  }
  if (grid_points < 2) throw Error(ErrorCode::InvalidArgument, "grid_points must be at least 2");
  if (!(refine_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "refine_tolerance must be positive");
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Fitted: return "fitted";
    case FitStatus::NeverForgotten: return "never_forgotten";
    case FitStatus::NeverLearnedImputed: return "never_learned_imputed";
  }
  return "fitted";
}

FitStatus parse_fit_status(const std::string& text) {
  if (text == "fitted") return FitStatus::Fitted;
  if (text == "never_forgotten") return FitStatus::NeverForgotten;
  if (text == "never_learned_imputed") return FitStatus::NeverLearnedImputed;
  throw Error(ErrorCode::SchemaViolation, "unknown fit_status '" + text + "'");
}

namespace {

// SSE of exp(-lambda t) against a 0/1 vector, evaluated with running powers
// of exp(-lambda). Once the prediction drops below 1e-18 every remaining
// residual is just the observed value, so the tail collapses to a count.
class DecayObjective {
 public:
  explicit DecayObjective(const Eigen::Ref<const Eigen::VectorXd>& observed)
      : observed_(observed), tail_sum_(observed.size() + 1) {
    tail_sum_(observed.size()) = 0.0;
    for (Eigen::Index t = observed.size() - 1; t >= 0; --t) {
      tail_sum_(t) = tail_sum_(t + 1) + observed(t) * observed(t);
    }
  }

  double operator()(double lambda) const {
    const double q = std::exp(-lambda);
    double power = 1.0;
    double sum = 0.0;
    for (Eigen::Index t = 0; t < observed_.size(); ++t) {
      if (power < 1e-18) return sum + tail_sum_(t);
      const double r = observed_(t) - power;
      sum += r * r;
      power *= q;
    }
    return sum;
  }

 private:
  Eigen::Ref<const Eigen::VectorXd> observed_;
  Eigen::VectorXd tail_sum_;
};

}  // namespace

LambdaFit fit_lambda(const Eigen::Ref<const Eigen::VectorXd>& retention, const FitConfig& config) {
  if (retention.size() == 0) throw Error(ErrorCode::EmptySequence, "cannot fit an empty retention vector");
  if (retention(0) != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "post-learning retention vector must start with 1");
  }
  config.validate();

  const DecayObjective sse(retention);
  const int n = config.grid_points;
  const double span = config.lambda_max - config.lambda_min;
  const auto grid_at = [&](int k) { return config.lambda_min + span * static_cast<double>(k) / (n - 1); };

  int best_k = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double value = sse(grid_at(k));
    if (value < best_sse) {
      best_sse = value;
      best_k = k;
    }
  }

  LambdaFit result{grid_at(best_k), best_sse};
  const double lo = grid_at(std::max(best_k - 1, 0));
  const double hi = grid_at(std::min(best_k + 1, n - 1));
  const auto refined = golden_section_minimize(sse, lo, hi, config.refine_tolerance);
  if (refined.fx < result.sse) result = {refined.x, refined.fx};
  return result;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptySequence, "percentile of an empty set");
  if (!(p >= 0.0 && p <= 100.0)) throw Error(ErrorCode::InvalidArgument, "percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(pos));
  const std::size_t upper = std::min(lower + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lower);
  return values[lower] + frac * (values[upper] - values[lower]);
}

std::vector<DecayFit> fit_all(const RetentionMatrix& matrix, const FitConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(matrix.num_samples());
  std::vector<DecayFit> fits(n);

  parallel_for(n, config.threads, [&](std::size_t i) {
    auto& fit = fits[i];
    const auto row = static_cast<Eigen::Index>(i);
    fit.sample_id = matrix.sample_ids()[i];
    const auto first = first_learned_epoch(matrix, row);
    if (!first) {
      fit.status = FitStatus::NeverLearnedImputed;
      return;
    }
    const Eigen::VectorXd post = retention_vector_post_learning(matrix, row).cast<double>();
    if ((post.array() == 1.0).all()) {
      fit.status = FitStatus::NeverForgotten;
      fit.lambda = 0.0;
      fit.sse = 0.0;
      fit.r_squared = r_squared(post, 0.0);
      return;
    }
    const auto solved = fit_lambda(post, config);
    fit.status = FitStatus::Fitted;
    fit.lambda = solved.lambda;
    fit.sse = solved.sse;
    fit.r_squared = r_squared(post, solved.lambda);
  });

  std::vector<double> pool;
  for (const auto& fit : fits) {
    if (fit.status != FitStatus::NeverLearnedImputed) pool.push_back(fit.lambda);
  }
  if (pool.empty()) {
    throw Error(ErrorCode::AllSamplesNeverLearned,
                "every sample is never learned; no fitted values to impute from");
  }
  if (pool.size() < n) {
    const double imputed = percentile(std::move(pool), config.imputation_percentile);
    for (auto& fit : fits) {
      if (fit.status == FitStatus::NeverLearnedImputed) fit.lambda = imputed;
    }
  }
  return fits;
}

Eigen::VectorXd apply_epsilon_floor(std::span<const DecayFit> fits, const FitConfig& config) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(fits.size()));
  for (std::size_t i = 0; i < fits.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = std::max(fits[i].lambda, config.epsilon_floor);
  }
  return out;
}

}  // namespace forgetting
