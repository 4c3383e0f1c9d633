#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forgetting/retention.hpp"

namespace forgetting {

enum class NoiseModel { Bernoulli, Threshold };

std::string to_string(NoiseModel model);
NoiseModel parse_noise_model(const std::string& text);

struct SynthSpec {
  int num_epochs = 2;
  Eigen::VectorXd lambda_truth;
  Eigen::VectorXi first_learned_truth;
  NoiseModel noise_model = NoiseModel::Bernoulli;
  std::uint64_t seed = 0;
  /// Optional explicit ids; default "syn-000000", "syn-000001", ...
  std::vector<std::string> sample_ids;

  void validate() const;
};

struct SynthTruth {
  std::string sample_id;
  double lambda_truth;
  int first_learned_truth;
};

struct SynthResult {
  RetentionMatrix retention;
  /// Same order as the matrix rows.
  std::vector<SynthTruth> truth;
};

std::string synth_sample_id(std::size_t index);

/// Zeros before e*; from e* on, value at t = e - e* is Bernoulli(exp(-lambda t))
/// (row i draws from RandomStream(seed, i)) or, in Threshold mode,
/// 1 iff exp(-lambda t) >= 0.5.
SynthResult generate(const SynthSpec& spec);

}  // namespace forgetting
