#include "forgetting/retention.hpp"

#include <algorithm>
#include <numeric>

#include "forgetting/error.hpp"

namespace forgetting {

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw Error(ErrorCode::SchemaViolation, "split must be train|val|test, got '" + text + "'");
}

RetentionMatrix::RetentionMatrix(std::vector<std::string> sample_ids, RetentionBits bits) {
  if (bits.rows() < 1) throw Error(ErrorCode::InvalidArgument, "retention matrix needs at least one sample");
  if (bits.cols() < 2) throw Error(ErrorCode::InvalidArgument, "retention matrix needs at least two epochs");
  if (static_cast<Eigen::Index>(sample_ids.size()) != bits.rows()) {
    throw Error(ErrorCode::InconsistentIds, "sample id count " + std::to_string(sample_ids.size()) +
                                                " does not match row count " + std::to_string(bits.rows()));
  }
  for (Eigen::Index i = 0; i < bits.rows(); ++i) {
    for (Eigen::Index e = 0; e < bits.cols(); ++e) {
      if (bits(i, e) > 1) {
        throw Error(ErrorCode::NonBinaryValue, "non-binary value at row " + std::to_string(i) + ", epoch " +
                                                   std::to_string(e));
      }
    }
  }

  std::vector<Eigen::Index> order(sample_ids.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return sample_ids[a] < sample_ids[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (sample_ids[order[k]] == sample_ids[order[k - 1]]) {
      throw Error(ErrorCode::InconsistentIds, "duplicate sample id '" + sample_ids[order[k]] + "'");
    }
  }

  ids_.reserve(order.size());
  bits_.resize(bits.rows(), bits.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    ids_.push_back(std::move(sample_ids[order[k]]));
    bits_.row(static_cast<Eigen::Index>(k)) = bits.row(order[k]);
  }
}

std::optional<int> first_learned_epoch(const RetentionMatrix& matrix, Eigen::Index sample) {
  for (Eigen::Index e = 0; e < matrix.num_epochs(); ++e) {
    if (matrix(sample, e) == 1) return static_cast<int>(e);
  }
  return std::nullopt;
}

std::vector<RetentionStats> compute_retention_stats(const RetentionMatrix& matrix) {
  const Eigen::Index epochs = matrix.num_epochs();
  std::vector<RetentionStats> out(static_cast<std::size_t>(matrix.num_samples()));
  for (Eigen::Index i = 0; i < matrix.num_samples(); ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.sample_id = matrix.sample_ids()[static_cast<std::size_t>(i)];
    s.first_learned_epoch = first_learned_epoch(matrix, i);
    for (Eigen::Index e = 1; e < epochs; ++e) {
      if (matrix(i, e - 1) == 1 && matrix(i, e) == 0) s.forgetting_event_epochs.push_back(static_cast<int>(e));
    }
    s.forgetting_event_count = static_cast<int>(s.forgetting_event_epochs.size());

    if (!s.first_learned_epoch) {
      s.never_learned = true;
      continue;
    }
    const int first = *s.first_learned_epoch;
    const Eigen::Index post = epochs - 1 - first;
    if (post == 0) {
      s.retention_rate = 1.0;
    } else {
      const auto correct = matrix.bits().row(i).tail(post).cast<int>().sum();
      s.retention_rate = static_cast<double>(correct) / static_cast<double>(post);
    }
    s.never_forgotten = s.forgetting_event_count == 0;
  }
  return out;
}

BinaryRow retention_vector_post_learning(const RetentionMatrix& matrix, Eigen::Index sample) {
  const auto first = first_learned_epoch(matrix, sample);
  if (!first) {
    throw Error(ErrorCode::NeverLearned,
                "sample '" + matrix.sample_ids()[static_cast<std::size_t>(sample)] + "' is never learned");
  }
  return matrix.bits().row(sample).tail(matrix.num_epochs() - *first).transpose();
}

}  // namespace forgetting
