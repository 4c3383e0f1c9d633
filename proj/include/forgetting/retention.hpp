#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace forgetting {

using RetentionBits = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BinaryRow = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

enum class Split { Train, Val, Test };

std::string to_string(Split split);
Split parse_split(const std::string& text);

struct SampleMeta {
  std::string sample_id;
  std::string class_label;
  double phase1_loss = 0.0;
  Split split = Split::Train;

  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

/// Binary correctness matrix over Phase-2 epochs.
///
/// Row i holds sample_ids()[i]; rows are always kept in ascending sample_id
/// order. Construction validates: N >= 1, E >= 2, unique ids, every cell 0/1.
class RetentionMatrix {
 public:
  /// Rows may arrive in any order; they are re-sorted by id.
  RetentionMatrix(std::vector<std::string> sample_ids, RetentionBits bits);

  Eigen::Index num_samples() const noexcept { return bits_.rows(); }
  Eigen::Index num_epochs() const noexcept { return bits_.cols(); }
  const RetentionBits& bits() const noexcept { return bits_; }
  const std::vector<std::string>& sample_ids() const noexcept { return ids_; }
  std::uint8_t operator()(Eigen::Index sample, Eigen::Index epoch) const { return bits_(sample, epoch); }

  friend bool operator==(const RetentionMatrix& a, const RetentionMatrix& b) {
    return a.ids_ == b.ids_ && a.bits_ == b.bits_;
  }

 private:
  std::vector<std::string> ids_;
  RetentionBits bits_;
};

struct RetentionStats {
  std::string sample_id;
  std::optional<int> first_learned_epoch;
  int forgetting_event_count = 0;
  std::vector<int> forgetting_event_epochs;
  std::optional<double> retention_rate;
  bool never_learned = false;
  bool never_forgotten = false;
};

std::optional<int> first_learned_epoch(const RetentionMatrix& matrix, Eigen::Index sample);

std::vector<RetentionStats> compute_retention_stats(const RetentionMatrix& matrix);

/// Post-learning slice R[i][e*..E-1]; element t is the value t epochs after
/// first learning. Throws NeverLearned if the row has no 1.
BinaryRow retention_vector_post_learning(const RetentionMatrix& matrix, Eigen::Index sample);

}  // namespace forgetting
