#include "forgetting/scheduler.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "forgetting/random.hpp"

namespace forgetting {

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Random: return "random";
    case Strategy::Curriculum: return "curriculum";
    case Strategy::AntiCurriculum: return "anti";
    case Strategy::SpacedRepetition: return "sr";
  }
  return "random";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "random") return Strategy::Random;
  if (text == "curriculum") return Strategy::Curriculum;
  if (text == "anti") return Strategy::AntiCurriculum;
  if (text == "sr") return Strategy::SpacedRepetition;
  throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + text + "'");
}

StrategyWeights softmax_weights(const Eigen::Ref<const Eigen::VectorXd>& urgencies, double tau, int epoch) {
  return {Strategy::SpacedRepetition, epoch, softmax(urgencies, tau)};
}

StrategyWeights spaced_repetition_weights(const Eigen::Ref<const Eigen::VectorXd>& lambda_sched,
                                          const Eigen::Ref<const Eigen::VectorXi>& last_seen, int epoch, double tau) {
  if (lambda_sched.size() != last_seen.size()) {
    throw Error(ErrorCode::InvalidArgument, "lambda and last_seen lengths differ");
  }
  if ((lambda_sched.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "scheduler lambdas must be positive; apply the epsilon floor first");
  }
  Eigen::VectorXd u(lambda_sched.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u(i) = urgency<double>(lambda_sched(i), epoch, last_seen(i));
  }
  return softmax_weights(u, tau, epoch);
}

StrategyWeights curriculum_weights(const Eigen::Ref<const Eigen::VectorXd>& phase1_losses, int epoch,
                                   int total_epochs, CurriculumDirection direction) {
  const Eigen::Index n = phase1_losses.size();
  if (n == 0) throw Error(ErrorCode::MissingLoss, "curriculum needs Phase-1 losses");
  if (!phase1_losses.allFinite()) throw Error(ErrorCode::MissingLoss, "Phase-1 losses must be finite");
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs) {
    throw Error(ErrorCode::InvalidArgument, "curriculum epoch out of range");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return direction == CurriculumDirection::EasyFirst ? phase1_losses(a) < phase1_losses(b)
                                                       : phase1_losses(a) > phase1_losses(b);
  });
  Eigen::VectorXd base(n);
  for (Eigen::Index rank = 1; rank <= n; ++rank) {
    base(order[static_cast<std::size_t>(rank - 1)]) = static_cast<double>(n - rank + 1);
  }
  base /= base.sum();

  const Strategy strategy =
      direction == CurriculumDirection::EasyFirst ? Strategy::Curriculum : Strategy::AntiCurriculum;
  const double alpha = total_epochs == 1 ? 1.0 : static_cast<double>(epoch) / (total_epochs - 1);
  if (alpha == 1.0) return {strategy, epoch, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
  Eigen::VectorXd w = (1.0 - alpha) * base.array() + alpha / static_cast<double>(n);
  w /= w.sum();
  return {strategy, epoch, std::move(w)};
}

StrategyWeights random_weights(Eigen::Index num_samples, const std::vector<std::string>* class_labels) {
  if (num_samples < 1) throw Error(ErrorCode::InvalidArgument, "no samples to weight");
  if (!class_labels) return {Strategy::Random, 0, Eigen::VectorXd::Constant(num_samples, 1.0 / num_samples)};
  if (static_cast<Eigen::Index>(class_labels->size()) != num_samples) {
    throw Error(ErrorCode::InvalidArgument, "class label count differs from sample count");
  }
  std::map<std::string, int> frequency;
  for (const auto& label : *class_labels) ++frequency[label];
  Eigen::VectorXd w(num_samples);
  for (Eigen::Index i = 0; i < num_samples; ++i) {
    w(i) = 1.0 / frequency[(*class_labels)[static_cast<std::size_t>(i)]];
  }
  return {Strategy::Random, 0, w / w.sum()};
}

Eigen::Index inverse_cdf_pick(const Eigen::Ref<const Eigen::VectorXd>& cumulative, double u) {
  const double total = cumulative(cumulative.size() - 1);
  const double target = u * total;
  const double* begin = cumulative.data();
  const double* end = begin + cumulative.size();
  const double* hit = std::upper_bound(begin, end, target);
  if (hit == end) {
    // u * total rounded up to the total; take the last index with mass.
    Eigen::Index i = cumulative.size() - 1;
    while (i > 0 && cumulative(i - 1) == cumulative(i)) --i;
    return i;
  }
  return hit - begin;
}

std::vector<Eigen::Index> draw_epoch(const Eigen::Ref<const Eigen::VectorXd>& weights, std::size_t n_draws,
                                     std::uint64_t seed, std::uint64_t stream) {
  if (n_draws < 1) throw Error(ErrorCode::InvalidArgument, "n_draws must be at least 1");
  if (weights.size() == 0 || (weights.array() < 0.0).any() || !(weights.sum() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "weights must be non-negative with positive mass");
  }
  Eigen::VectorXd cumulative(weights.size());
  std::partial_sum(weights.data(), weights.data() + weights.size(), cumulative.data());

  RandomStream rng(seed, stream);
  std::vector<Eigen::Index> out(n_draws);
  for (auto& pick : out) pick = inverse_cdf_pick(cumulative, rng.uniform());
  return out;
}

ScheduleTrace simulate_schedule(Eigen::Index num_samples, const ScheduleInputs& inputs, const ScheduleConfig& config) {
  if (num_samples < 1) throw Error(ErrorCode::InvalidArgument, "no samples to schedule");
  if (config.epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be at least 1");
  if (config.draws_per_epoch < 1) throw Error(ErrorCode::InvalidArgument, "draws per epoch must be at least 1");

  const auto require_size = [&](Eigen::Index size, const char* what) {
    if (size != num_samples) throw Error(ErrorCode::InvalidArgument, std::string(what) + " length differs from sample count");
  };
  switch (config.strategy) {
    case Strategy::SpacedRepetition:
      if (!inputs.lambda_sched) throw Error(ErrorCode::InvalidArgument, "spaced repetition needs lambdas");
      require_size(inputs.lambda_sched->size(), "lambda");
      break;
    case Strategy::Curriculum:
    case Strategy::AntiCurriculum:
      if (!inputs.phase1_losses) throw Error(ErrorCode::MissingLoss, "curriculum needs Phase-1 losses");
      require_size(inputs.phase1_losses->size(), "loss");
      break;
    case Strategy::Random:
      break;
  }

  ScheduleTrace trace;
  trace.selection_counts = Eigen::VectorXi::Zero(num_samples);
  Eigen::VectorXi last_seen = Eigen::VectorXi::Constant(num_samples, -1);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    StrategyWeights weights{config.strategy, epoch, {}};
    switch (config.strategy) {
      case Strategy::SpacedRepetition:
        weights = spaced_repetition_weights(*inputs.lambda_sched, last_seen, epoch, config.tau);
        break;
      case Strategy::Curriculum:
        weights = curriculum_weights(*inputs.phase1_losses, epoch, config.epochs, CurriculumDirection::EasyFirst);
        break;
      case Strategy::AntiCurriculum:
        weights = curriculum_weights(*inputs.phase1_losses, epoch, config.epochs, CurriculumDirection::HardFirst);
        break;
      case Strategy::Random:
        weights = random_weights(num_samples, inputs.class_labels ? &*inputs.class_labels : nullptr);
        break;
    }
    weights.strategy = config.strategy;
    weights.epoch = epoch;

    auto drawn = draw_epoch(weights.weights, config.draws_per_epoch, config.seed, static_cast<std::uint64_t>(epoch));
    for (auto i : drawn) ++trace.selection_counts(i);
    if (config.strategy == Strategy::SpacedRepetition) {
      for (auto i : drawn) last_seen(i) = epoch;
      trace.last_seen_history.push_back(last_seen);
    }
    trace.snapshots.push_back(std::move(weights));
    trace.draws.push_back(std::move(drawn));
  }
  return trace;
}

}  // namespace forgetting
