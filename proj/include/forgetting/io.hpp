#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forgetting/decay.hpp"
#include "forgetting/retention.hpp"
#include "forgetting/scheduler.hpp"
#include "forgetting/stats.hpp"
#include "forgetting/synth.hpp"

namespace forgetting {

/// One training run's logs.
struct RunBundle {
  std::string run_id;
  std::string dataset;
  std::string backbone;
  std::int64_t seed = 0;
  int phase1_epochs = 5;
  int phase2_epochs = 0;
  /// Sorted by sample_id, aligned with retention rows.
  std::vector<SampleMeta> meta;
  RetentionMatrix retention;

  /// Throws InconsistentIds / SchemaViolation.
  void validate() const;

  friend bool operator==(const RunBundle&, const RunBundle&) = default;
};

/// Reads <dir>/run.json and <dir>/retention.csv. Every violation names the
/// file, the line (or JSON path) and the rule that failed.
RunBundle load_bundle(const std::filesystem::path& directory);

/// Canonical form: LF endings, no BOM, rows sorted by id, 9 significant
/// digits for reals.
void save_bundle(const RunBundle& bundle, const std::filesystem::path& directory);

std::string format_real(double value);
double parse_real(std::string_view text, const std::string& where);

std::vector<std::string> split_csv_line(std::string_view line);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

// Report tables. Column order is fixed and always preceded by a header row.

/// sample_id,lambda,fit_status,r_squared,sse
std::string fits_csv(std::span<const DecayFit> fits);
std::vector<DecayFit> parse_fits_csv(std::string_view text, const std::string& source);
std::vector<DecayFit> load_fits(const std::filesystem::path& path);

/// sample_id,first_learned_epoch,forgetting_event_count,forgetting_event_epochs,
/// retention_rate,never_learned,never_forgotten
std::string retention_stats_csv(std::span<const RetentionStats> stats);

/// k_percent,top_k_size,jaccard
std::string jaccard_csv(std::span<const JaccardPoint> points);

/// class_label,train_size,mean_lambda,pct_never_forgotten
std::string class_table_csv(std::span<const ClassForgettingRow> rows);

/// sample_id,weight
std::string weights_csv(const std::vector<std::string>& sample_ids, const Eigen::Ref<const Eigen::VectorXd>& weights);

/// sample_id,count
std::string selection_counts_csv(const std::vector<std::string>& sample_ids,
                                 const Eigen::Ref<const Eigen::VectorXi>& counts);

/// sample_id,lambda_truth,first_learned_truth
std::string truth_csv(std::span<const SynthTruth> truth);

}  // namespace forgetting
