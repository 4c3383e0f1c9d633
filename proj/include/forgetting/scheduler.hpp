#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forgetting/error.hpp"

namespace forgetting {

enum class Strategy { Random, Curriculum, AntiCurriculum, SpacedRepetition };

/// CLI spelling: random | curriculum | anti | sr
std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& text);

enum class CurriculumDirection { EasyFirst, HardFirst };

struct StrategyWeights {
  Strategy strategy;
  int epoch;
  Eigen::VectorXd weights;
};

/// Probability that a sample with decay constant lambda has been forgotten
/// `gap` epochs after it was last seen: 1 - exp(-lambda * gap).
template <typename Scalar>
Scalar urgency(Scalar lambda, Scalar epoch, Scalar last_seen) {
  if (epoch < last_seen) throw Error(ErrorCode::NegativeGap, "epoch precedes last_seen");
  return -std::expm1(-lambda * (epoch - last_seen));
}

/// Temperature softmax, stabilised by subtracting the maximum.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& scores,
                                                                   typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) throw Error(ErrorCode::InvalidArgument, "softmax temperature must be positive");
  if (scores.size() == 0) throw Error(ErrorCode::InvalidArgument, "softmax of an empty vector");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> shifted = (scores.array() - scores.maxCoeff()) / tau;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = shifted.array().exp();
  return e / e.sum();
}

StrategyWeights softmax_weights(const Eigen::Ref<const Eigen::VectorXd>& urgencies, double tau, int epoch = 0);

/// Spaced-repetition weights for one epoch.
StrategyWeights spaced_repetition_weights(const Eigen::Ref<const Eigen::VectorXd>& lambda_sched,
                                          const Eigen::Ref<const Eigen::VectorXi>& last_seen, int epoch, double tau);

/// Linear-in-rank weights by Phase-1 loss, blended toward uniform with
/// alpha = epoch / (total_epochs - 1). Rank 1 (lowest loss for EasyFirst)
/// gets base weight N; ties in loss keep input order.
StrategyWeights curriculum_weights(const Eigen::Ref<const Eigen::VectorXd>& phase1_losses, int epoch,
                                   int total_epochs, CurriculumDirection direction);

/// Uniform weights, or inverse class frequency when labels are given.
StrategyWeights random_weights(Eigen::Index num_samples, const std::vector<std::string>* class_labels = nullptr);

/// n_draws independent draws with replacement by inverse CDF over the
/// cumulative weights; draw k uses the k-th uniform of RandomStream(seed, stream).
std::vector<Eigen::Index> draw_epoch(const Eigen::Ref<const Eigen::VectorXd>& weights, std::size_t n_draws,
                                     std::uint64_t seed, std::uint64_t stream = 0);

/// Index of the first cumulative weight strictly above u * total.
Eigen::Index inverse_cdf_pick(const Eigen::Ref<const Eigen::VectorXd>& cumulative, double u);

struct ScheduleConfig {
  Strategy strategy = Strategy::SpacedRepetition;
  int epochs = 1;
  std::size_t draws_per_epoch = 1;
  double tau = 1.0;
  std::uint64_t seed = 0;
};

struct ScheduleInputs {
  /// Scheduler lambdas (already floored) for SpacedRepetition.
  std::optional<Eigen::VectorXd> lambda_sched;
  /// Phase-1 losses for the curriculum strategies.
  std::optional<Eigen::VectorXd> phase1_losses;
  /// Optional class labels for inverse-frequency Random weights.
  std::optional<std::vector<std::string>> class_labels;
};

struct ScheduleTrace {
  Eigen::VectorXi selection_counts;
  std::vector<StrategyWeights> snapshots;
  /// last_seen after each epoch's update (SpacedRepetition only).
  std::vector<Eigen::VectorXi> last_seen_history;
  std::vector<std::vector<Eigen::Index>> draws;
};

/// Runs the epoch loop: weights for the epoch, draws from stream `epoch`,
/// and for SpacedRepetition sets last_seen = epoch for every drawn sample
/// once the epoch's draws are done. last_seen starts at -1.
ScheduleTrace simulate_schedule(Eigen::Index num_samples, const ScheduleInputs& inputs, const ScheduleConfig& config);

}  // namespace forgetting
