#include "forgetting/synth.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>

#include "forgetting/error.hpp"
#include "forgetting/random.hpp"

namespace forgetting {

std::string to_string(NoiseModel model) { return model == NoiseModel::Bernoulli ? "bernoulli" : "threshold"; }

NoiseModel parse_noise_model(const std::string& text) {
  if (text == "bernoulli") return NoiseModel::Bernoulli;
  if (text == "threshold") return NoiseModel::Threshold;
  throw Error(ErrorCode::InvalidArgument, "unknown noise model '" + text + "'");
}

void SynthSpec::validate() const {
  if (num_epochs < 2) throw Error(ErrorCode::InvalidArgument, "synthetic runs need at least two epochs");
  if (lambda_truth.size() < 1) throw Error(ErrorCode::InvalidArgument, "synthetic runs need at least one sample");
  if (first_learned_truth.size() != lambda_truth.size()) {
    throw Error(ErrorCode::InvalidArgument, "lambda_truth and first_learned_truth differ in length");
  }
  if (!sample_ids.empty() && static_cast<Eigen::Index>(sample_ids.size()) != lambda_truth.size()) {
    throw Error(ErrorCode::InvalidArgument, "sample id count differs from lambda_truth");
  }
  if (!lambda_truth.allFinite() || (lambda_truth.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "lambda_truth must be finite and non-negative");
  }
  if ((first_learned_truth.array() < 0).any() || (first_learned_truth.array() >= num_epochs).any()) {
    throw Error(ErrorCode::InvalidArgument, "first_learned_truth must lie in [0, num_epochs)");
  }
}

namespace {
const double kLn2 = std::log(2.0);
}  // namespace

std::string synth_sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn-%06zu", index);
  return buf;
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.lambda_truth.size();
  RetentionBits bits = RetentionBits::Zero(n, spec.num_epochs);
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));

  for (Eigen::Index i = 0; i < n; ++i) {
    ids.push_back(spec.sample_ids.empty() ? synth_sample_id(static_cast<std::size_t>(i))
                                          : spec.sample_ids[static_cast<std::size_t>(i)]);
    const double lambda = spec.lambda_truth(i);
    const int first = spec.first_learned_truth(i);
    RandomStream rng(spec.seed, static_cast<std::uint64_t>(i));
    for (int e = first; e < spec.num_epochs; ++e) {
      const double t = e - first;
      // exp(-lambda t) >= 1/2  <=>  lambda t <= ln 2, compared in the log domain
      // so lambda = ln 2 crosses exactly at t = 1.
      const bool retained = spec.noise_model == NoiseModel::Bernoulli ? rng.uniform() < std::exp(-lambda * t)
                                                                       : lambda * t <= kLn2;
      bits(i, e) = retained ? 1 : 0;
    }
  }

  std::vector<SynthTruth> truth;
  truth.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    truth.push_back({ids[static_cast<std::size_t>(i)], spec.lambda_truth(i), spec.first_learned_truth(i)});
  }
  RetentionMatrix retention(std::move(ids), std::move(bits));
  std::sort(truth.begin(), truth.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  return {std::move(retention), std::move(truth)};
}

}  // namespace forgetting
