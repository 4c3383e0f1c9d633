// Command-line front end: one subcommand per analysis stage.

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forgetting/decay.hpp"
#include "forgetting/error.hpp"
#include "forgetting/io.hpp"
#include "forgetting/retention.hpp"
#include "forgetting/scheduler.hpp"
#include "forgetting/stats.hpp"
#include "forgetting/synth.hpp"

namespace fs = std::filesystem;
using namespace forgetting;
using ojson = nlohmann::ordered_json;

namespace {

double finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string("non-finite value for ") + what);
  return v;
}

void write_json(const fs::path& path, const ojson& doc) { write_text_file(path, doc.dump(2) + "\n"); }

ojson correlation_json(const CorrelationResult& c) {
  ojson j;
  j["rho"] = finite(c.rho, "rho");
  j["p_value"] = finite(c.p_value, "p_value");
  j["n"] = c.n;
  j["method"] = to_string(c.method);
  return j;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& field : split_csv_line(text)) out.push_back(parse_real(field, std::string("--") + what));
  return out;
}

// fits are aligned to bundle metadata by id; missing ids are an error.
std::vector<const SampleMeta*> align_meta(const std::vector<DecayFit>& fits, const RunBundle& bundle) {
  std::vector<const SampleMeta*> out;
  for (const auto& f : fits) {
    const auto it = std::lower_bound(bundle.meta.begin(), bundle.meta.end(), f.sample_id,
                                     [](const SampleMeta& m, const std::string& id) { return m.sample_id < id; });
    if (it == bundle.meta.end() || it->sample_id != f.sample_id) {
      throw Error(ErrorCode::MissingLoss, "sample '" + f.sample_id + "' is not in bundle " + bundle.run_id);
    }
    out.push_back(&*it);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forgetting-dynamics toolkit: decay fits, stability statistics and sampling schedules"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Report errors as JSON on stderr");

  std::string output;

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit per-sample exponential decay constants");
  std::string fit_bundle;
  FitConfig fit_config;
  fit_cmd->add_option("bundle", fit_bundle, "Run bundle directory")->required();
  fit_cmd->add_option("--grid", fit_config.grid_points, "Coarse grid size")->capture_default_str();
  fit_cmd->add_option("--tol", fit_config.refine_tolerance, "Golden-section bracket tolerance")->capture_default_str();
  fit_cmd->add_option("--percentile", fit_config.imputation_percentile, "Imputation percentile")->capture_default_str();
  fit_cmd->add_option("--threads", fit_config.threads, "Worker threads (0 = all cores)")->capture_default_str();
  fit_cmd->add_option("-o,--output", output, "fits.csv")->required();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Per-sample forgetting events and retention rates");
  std::string stats_bundle;
  stats_cmd->add_option("bundle", stats_bundle, "Run bundle directory")->required();
  stats_cmd->add_option("-o,--output", output, "stats.csv")->required();

  // compare-arch
  auto* arch_cmd = app.add_subcommand("compare-arch", "Top-k Jaccard sweep and lambda rank correlation of two runs");
  std::string arch_a, arch_b, arch_k = "10,20,30,40,50", arch_summary;
  arch_cmd->add_option("fits_a", arch_a)->required();
  arch_cmd->add_option("fits_b", arch_b)->required();
  arch_cmd->add_option("--k", arch_k, "Comma-separated k percentages")->capture_default_str();
  arch_cmd->add_option("--summary", arch_summary, "Summary JSON (default: <output stem>.summary.json)");
  arch_cmd->add_option("-o,--output", output, "jaccard.csv")->required();

  // compare-seeds
  auto* seeds_cmd = app.add_subcommand("compare-seeds", "Cross-seed Spearman stability with bootstrap CIs");
  std::vector<std::string> seed_fits;
  std::size_t seed_bootstrap = 10000;
  std::uint64_t seeds_seed = 0;
  double seeds_confidence = 0.95;
  unsigned seeds_threads = 1;
  seeds_cmd->add_option("fits", seed_fits, "Two or more fits.csv files")->required()->expected(2, -1);
  seeds_cmd->add_option("--bootstrap", seed_bootstrap, "Bootstrap resamples (0 disables)")->capture_default_str();
  seeds_cmd->add_option("--seed", seeds_seed, "Bootstrap seed")->capture_default_str();
  seeds_cmd->add_option("--confidence", seeds_confidence)->capture_default_str();
  seeds_cmd->add_option("--threads", seeds_threads)->capture_default_str();
  seeds_cmd->add_option("-o,--output", output, "seeds.json")->required();

  // class-table
  auto* class_cmd = app.add_subcommand("class-table", "Per-class mean lambda and never-forgotten share");
  std::string class_fits, class_bundle;
  class_cmd->add_option("fits", class_fits)->required();
  class_cmd->add_option("bundle", class_bundle)->required();
  class_cmd->add_option("-o,--output", output, "classes.csv")->required();

  // early-loss
  auto* loss_cmd = app.add_subcommand("early-loss", "Spearman between Phase-1 loss and lambda");
  std::string loss_fits, loss_bundle;
  loss_cmd->add_option("fits", loss_fits)->required();
  loss_cmd->add_option("bundle", loss_bundle)->required();
  loss_cmd->add_option("-o,--output", output, "earlyloss.json")->required();

  // schedule
  auto* sched_cmd = app.add_subcommand("schedule", "Simulate a sampling schedule and export weights");
  std::string sched_fits, sched_strategy, sched_bundle;
  ScheduleConfig sched;
  double sched_eps = 0.01;
  bool class_weighted = false;
  sched_cmd->add_option("fits", sched_fits)->required();
  sched_cmd->add_option("--strategy", sched_strategy)
      ->required()
      ->check(CLI::IsMember({"random", "curriculum", "anti", "sr"}));
  sched_cmd->add_option("--epochs", sched.epochs)->required()->check(CLI::PositiveNumber);
  sched_cmd->add_option("--draws", sched.draws_per_epoch)->required()->check(CLI::PositiveNumber);
  sched_cmd->add_option("--tau", sched.tau)->capture_default_str();
  sched_cmd->add_option("--eps", sched_eps)->capture_default_str();
  sched_cmd->add_option("--seed", sched.seed)->required();
  sched_cmd->add_option("--bundle", sched_bundle, "Bundle with Phase-1 losses / class labels");
  sched_cmd->add_flag("--class-weighted", class_weighted, "Inverse class frequency for random");
  sched_cmd->add_option("-o,--output", output, "Output directory")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic bundle with known decay constants");
  std::string synth_lambdas, synth_mode = "bernoulli", synth_run_id = "synthetic";
  int synth_samples = 0, synth_epochs = 0, synth_first = 0;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--lambdas", synth_lambdas, "Comma-separated true lambdas, one group each")->required();
  synth_cmd->add_option("--samples", synth_samples, "Samples per lambda group")->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--epochs", synth_epochs)->required()->check(CLI::Range(2, 1 << 20));
  synth_cmd->add_option("--mode", synth_mode)->check(CLI::IsMember({"bernoulli", "threshold"}))->capture_default_str();
  synth_cmd->add_option("--first-learned", synth_first, "First-learned epoch of every sample")->capture_default_str();
  synth_cmd->add_option("--run-id", synth_run_id)->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed)->required();
  synth_cmd->add_option("-o,--output", output, "Output directory")->required();

  // aggregate
  auto* agg_cmd = app.add_subcommand("aggregate", "Mean and population std (ddof=0) per column");
  std::string agg_input;
  agg_cmd->add_option("values", agg_input, "CSV with a header row, one row per seed")->required();
  agg_cmd->add_option("-o,--output", output, "agg.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (e.get_exit_code() == 0) return code;
    return 2;
  }

  try {
    const fs::path out(output);
    if (*fit_cmd) {
      const auto bundle = load_bundle(fit_bundle);
      const auto fits = fit_all(bundle.retention, fit_config);
      ensure_parent(out);
      write_text_file(out, fits_csv(fits));
    } else if (*stats_cmd) {
      const auto bundle = load_bundle(stats_bundle);
      ensure_parent(out);
      write_text_file(out, retention_stats_csv(compute_retention_stats(bundle.retention)));
    } else if (*arch_cmd) {
      const auto fa = load_fits(arch_a);
      const auto fb = load_fits(arch_b);
      const auto ra = RankedLambdaSet::from_fits(arch_a, fa);
      const auto rb = RankedLambdaSet::from_fits(arch_b, fb);
      const auto ks = parse_list(arch_k, "k");
      const auto sweep = jaccard_sweep(ra, rb, ks);
      ensure_parent(out);
      write_text_file(out, jaccard_csv(sweep));

      const auto pairs = cross_seed_stability(std::vector<RankedLambdaSet>{ra, rb});
      const auto [r2a, r2b] = mean_r2_split(fa, fb);
      ojson summary;
      summary["run_a"] = arch_a;
      summary["run_b"] = arch_b;
      summary["shared_samples"] = pairs.front().shared_samples;
      summary["lambda_spearman"] = correlation_json(pairs.front().correlation);
      summary["mean_r2_a"] = finite(r2a, "mean_r2_a");
      summary["mean_r2_b"] = finite(r2b, "mean_r2_b");
      const fs::path summary_path =
          arch_summary.empty() ? out.parent_path() / (out.stem().string() + ".summary.json") : fs::path(arch_summary);
      ensure_parent(summary_path);
      write_json(summary_path, summary);
    } else if (*seeds_cmd) {
      std::vector<RankedLambdaSet> runs;
      for (const auto& path : seed_fits) runs.push_back(RankedLambdaSet::from_fits(path, load_fits(path)));
      std::optional<BootstrapOptions> boot;
      if (seed_bootstrap > 0) boot = BootstrapOptions{seed_bootstrap, seeds_confidence, seeds_seed, seeds_threads};
      const auto pairs = cross_seed_stability(runs, boot);
      ojson doc;
      doc["bootstrap_resamples"] = seed_bootstrap;
      doc["confidence"] = seeds_confidence;
      doc["seed"] = seeds_seed;
      ojson arr = ojson::array();
      for (const auto& p : pairs) {
        ojson j;
        j["run_a"] = p.run_a;
        j["run_b"] = p.run_b;
        j["shared_samples"] = p.shared_samples;
        j["spearman"] = correlation_json(p.correlation);
        if (p.interval) {
          j["ci_low"] = finite(p.interval->low, "ci_low");
          j["ci_high"] = finite(p.interval->high, "ci_high");
          j["bootstrap_redraws"] = p.interval->redraws;
          j["redraws_excessive"] = p.interval->redraws_excessive();
        }
        arr.push_back(std::move(j));
      }
      doc["pairs"] = std::move(arr);
      ensure_parent(out);
      write_json(out, doc);
    } else if (*class_cmd) {
      const auto fits = load_fits(class_fits);
      const auto bundle = load_bundle(class_bundle);
      ensure_parent(out);
      write_text_file(out, class_table_csv(class_table(fits, bundle.meta)));
    } else if (*loss_cmd) {
      const auto fits = load_fits(loss_fits);
      const auto bundle = load_bundle(loss_bundle);
      ensure_parent(out);
      write_json(out, correlation_json(early_loss_correlation(fits, bundle.meta)));
    } else if (*sched_cmd) {
      const auto fits = load_fits(sched_fits);
      sched.strategy = parse_strategy(sched_strategy);
      std::vector<std::string> ids;
      for (const auto& f : fits) ids.push_back(f.sample_id);

      ScheduleInputs inputs;
      if (sched.strategy == Strategy::SpacedRepetition) {
        FitConfig floor_config;
        floor_config.epsilon_floor = sched_eps;
        floor_config.validate();
        inputs.lambda_sched = apply_epsilon_floor(fits, floor_config);
      }
      const bool needs_bundle = sched.strategy == Strategy::Curriculum || sched.strategy == Strategy::AntiCurriculum ||
                                (sched.strategy == Strategy::Random && class_weighted);
      if (needs_bundle) {
        if (sched_bundle.empty()) throw Error(ErrorCode::InvalidArgument, "--bundle is required for this strategy");
        const auto bundle = load_bundle(sched_bundle);
        const auto meta = align_meta(fits, bundle);
        if (sched.strategy == Strategy::Random) {
          std::vector<std::string> labels;
          for (const auto* m : meta) labels.push_back(m->class_label);
          inputs.class_labels = std::move(labels);
        } else {
          Eigen::VectorXd losses(static_cast<Eigen::Index>(meta.size()));
          for (std::size_t i = 0; i < meta.size(); ++i) losses(static_cast<Eigen::Index>(i)) = meta[i]->phase1_loss;
          inputs.phase1_losses = std::move(losses);
        }
      }
      const auto trace = simulate_schedule(static_cast<Eigen::Index>(fits.size()), inputs, sched);
      fs::create_directories(out);
      for (const auto& snap : trace.snapshots) {
        write_text_file(out / ("weights-" + sched_strategy + "-epoch" + std::to_string(snap.epoch) + ".csv"),
                        weights_csv(ids, snap.weights));
      }
      write_text_file(out / "selection_counts.csv", selection_counts_csv(ids, trace.selection_counts));
    } else if (*synth_cmd) {
      const auto lambdas = parse_list(synth_lambdas, "lambdas");
      const auto per_group = static_cast<std::size_t>(synth_samples);
      SynthSpec spec;
      spec.num_epochs = synth_epochs;
      spec.noise_model = parse_noise_model(synth_mode);
      spec.seed = synth_seed;
      spec.lambda_truth.resize(static_cast<Eigen::Index>(lambdas.size() * per_group));
      spec.first_learned_truth = Eigen::VectorXi::Constant(spec.lambda_truth.size(), synth_first);
      for (std::size_t g = 0; g < lambdas.size(); ++g) {
        spec.lambda_truth.segment(static_cast<Eigen::Index>(g * per_group), static_cast<Eigen::Index>(per_group))
            .setConstant(lambdas[g]);
      }
      auto result = generate(spec);

      std::vector<SampleMeta> meta;
      for (const auto& t : result.truth) {
        const auto index = static_cast<std::size_t>(std::stoul(t.sample_id.substr(4)));
        // Class = lambda group; the true lambda stands in for a Phase-1 loss.
        meta.push_back({t.sample_id, "g" + std::to_string(index / per_group), t.lambda_truth, Split::Train});
      }
      RunBundle bundle{synth_run_id, "synthetic", "none", static_cast<std::int64_t>(synth_seed), 0, synth_epochs,
                       std::move(meta), std::move(result.retention)};
      save_bundle(bundle, out);
      write_text_file(out / "truth.csv", truth_csv(result.truth));
    } else if (*agg_cmd) {
      const auto text = read_text_file(agg_input);
      std::vector<std::string> lines;
      {
        std::string line;
        std::istringstream in(text);
        while (std::getline(in, line)) {
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (!line.empty()) lines.push_back(line);
        }
      }
      if (lines.size() < 2) throw Error(ErrorCode::SchemaViolation, agg_input + ": needs a header and at least one row");
      const auto header = split_csv_line(lines[0]);
      std::vector<std::vector<double>> columns(header.size());
      for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const auto fields = split_csv_line(lines[ln]);
        const std::string where = agg_input + ":" + std::to_string(ln + 1);
        if (fields.size() != header.size()) throw Error(ErrorCode::SchemaViolation, where + ": field count mismatch");
        for (std::size_t c = 0; c < fields.size(); ++c) columns[c].push_back(parse_real(fields[c], where));
      }
      ojson arr = ojson::array();
      for (std::size_t c = 0; c < header.size(); ++c) {
        const auto agg = aggregate_over_seeds(columns[c]);
        ojson j;
        j["name"] = header[c];
        j["mean"] = finite(agg.mean, "mean");
        j["std"] = finite(agg.std, "std");
        j["n_seeds"] = agg.n_seeds;
        arr.push_back(std::move(j));
      }
      ojson doc;
      doc["ddof"] = 0;
      doc["columns"] = std::move(arr);
      ensure_parent(out);
      write_json(out, doc);
    }
  } catch (const Error& e) {
    if (json_errors) {
      std::cerr << ojson{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
    } else {
      std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    }
    return 1;
  } catch (const std::exception& e) {
    if (json_errors) {
      std::cerr << ojson{{"error", "IoFailure"}, {"message", e.what()}}.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  }
  return 0;
}
