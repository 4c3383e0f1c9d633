#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cli_helpers.hpp"
#include "forgetting/io.hpp"
#include "oracles.hpp"

using namespace forgetting;
namespace fs = std::filesystem;

TEST_CASE("usage errors exit with 2") {
  CHECK(cli::run("") == 2);
  CHECK(cli::run("fit") == 2);
  CHECK(cli::run("schedule f.csv --strategy nope --epochs 1 --draws 1 --seed 1 -o x") == 2);
  CHECK(cli::run("--help") == 0);
}

TEST_CASE("validation errors exit with 1 and can be machine readable") {
  const auto dir = cli::work_dir("errors");
  const auto err = (dir / "err.json").string();
  CHECK(cli::run("--json-errors fit " + (dir / "missing").string() + " -o " + (dir / "f.csv").string(), err) == 1);
  const auto text = cli::slurp(err);
  CHECK(text.find("\"error\":\"MissingFile\"") != std::string::npos);

  CHECK(cli::run("synth --lambdas 0.5 --samples 2 --epochs 4 --seed 1 -o " + (dir / "b").string()) == 0);
  write_text_file(dir / "b" / "retention.csv", "sample_id,e0,e1,e2,e3\nsyn-000000,1,0,7,1\nsyn-000001,1,1,1,1\n");
  CHECK(cli::run("--json-errors stats " + (dir / "b").string() + " -o " + (dir / "s.csv").string(), err) == 1);
  CHECK(cli::slurp(err).find("NonBinaryValue") != std::string::npos);
}

TEST_CASE("fit on threshold bundle with lambda 0 rows") {
  const auto dir = cli::work_dir("zero");
  REQUIRE(cli::run("synth --lambdas 0 --samples 5 --epochs 6 --mode threshold --seed 3 -o " + (dir / "b").string()) == 0);
  REQUIRE(cli::run("fit " + (dir / "b").string() + " -o " + (dir / "fits.csv").string()) == 0);
  for (const auto& f : load_fits(dir / "fits.csv")) {
    CHECK(f.lambda == 0.0);
    CHECK(f.status == FitStatus::NeverForgotten);
  }
}

TEST_CASE("compare-arch self comparison") {
  const auto dir = cli::work_dir("self");
  REQUIRE(cli::run("synth --lambdas 0.1,1,3 --samples 10 --epochs 15 --seed 4 -o " + (dir / "b").string()) == 0);
  const auto fits = (dir / "fits.csv").string();
  REQUIRE(cli::run("fit " + (dir / "b").string() + " -o " + fits) == 0);
  REQUIRE(cli::run("compare-arch " + fits + " " + fits + " -o " + (dir / "jaccard.csv").string()) == 0);
  const auto csv = cli::slurp(dir / "jaccard.csv");
  CHECK(csv ==
        "k_percent,top_k_size,jaccard\n10,3,1\n20,6,1\n30,9,1\n40,12,1\n50,15,1\n");
  const auto summary = cli::slurp(dir / "jaccard.summary.json");
  CHECK(summary.find("\"rho\": 1.0") != std::string::npos);
}

TEST_CASE("seeded Bernoulli pipeline matches the golden fits") {
  const auto dir = cli::work_dir("golden");
  const auto bundle = (dir / "b").string();
  REQUIRE(cli::run("synth --lambdas 0.05,0.3,1.5 --samples 4 --epochs 30 --mode bernoulli --seed 20261019 -o " +
                   bundle) == 0);
  REQUIRE(cli::run("fit " + bundle + " -o " + (dir / "fits.csv").string()) == 0);
  const auto golden = fs::path(GOLDEN_DIR) / "bernoulli_fits.csv";
  CHECK(cli::slurp(dir / "fits.csv") == cli::slurp(golden));

  // The golden values themselves agree with the brute-force SSE scan.
  const auto run = load_bundle(bundle);
  const auto fits = load_fits(golden);
  for (Eigen::Index i = 0; i < run.retention.num_samples(); ++i) {
    const auto& f = fits[static_cast<std::size_t>(i)];
    if (f.status != FitStatus::Fitted) continue;
    const auto post = retention_vector_post_learning(run.retention, i);
    std::vector<double> r(post.data(), post.data() + post.size());
    const auto scan = oracle::brute_force_lambda(r);
    CHECK(std::abs(f.lambda - scan.lambda) <= 1e-4);
  }
}

TEST_CASE("schedule exports per-epoch weights and counts") {
  const auto dir = cli::work_dir("schedule");
  const auto bundle = (dir / "b").string();
  REQUIRE(cli::run("synth --lambdas 0,0.5,4 --samples 3 --epochs 10 --seed 8 -o " + bundle) == 0);
  const auto fits = (dir / "fits.csv").string();
  REQUIRE(cli::run("fit " + bundle + " -o " + fits) == 0);
  REQUIRE(cli::run("schedule " + fits + " --strategy sr --epochs 3 --draws 5 --seed 1 -o " + (dir / "sr").string()) == 0);
  for (int e = 0; e < 3; ++e) CHECK(fs::exists(dir / "sr" / ("weights-sr-epoch" + std::to_string(e) + ".csv")));
  const auto counts = cli::slurp(dir / "sr" / "selection_counts.csv");
  CHECK(counts.rfind("sample_id,count\n", 0) == 0);

  CHECK(cli::run("schedule " + fits + " --strategy curriculum --epochs 3 --draws 5 --seed 1 -o " +
                 (dir / "cur").string()) == 1);
  REQUIRE(cli::run("schedule " + fits + " --strategy curriculum --epochs 3 --draws 5 --seed 1 --bundle " + bundle +
                   " -o " + (dir / "cur").string()) == 0);
  const auto last = cli::slurp(dir / "cur" / "weights-curriculum-epoch2.csv");
  CHECK(last.find("0.111111111") != std::string::npos);
  REQUIRE(cli::run("schedule " + fits + " --strategy random --class-weighted --epochs 1 --draws 5 --seed 1 --bundle " +
                   bundle + " -o " + (dir / "rnd").string()) == 0);
}

TEST_CASE("aggregate, class-table and early-loss reports") {
  const auto dir = cli::work_dir("reports");
  write_text_file(dir / "values.csv", "jaccard,r2\n0.344,0.62\n0.331,0.6\n0.357,0.64\n");
  REQUIRE(cli::run("aggregate " + (dir / "values.csv").string() + " -o " + (dir / "agg.json").string()) == 0);
  const auto agg = cli::slurp(dir / "agg.json");
  CHECK(agg.find("\"name\": \"jaccard\"") != std::string::npos);
  CHECK(agg.find("\"n_seeds\": 3") != std::string::npos);

  const auto bundle = (dir / "b").string();
  REQUIRE(cli::run("synth --lambdas 0,2 --samples 6 --epochs 12 --seed 2 -o " + bundle) == 0);
  const auto fits = (dir / "fits.csv").string();
  REQUIRE(cli::run("fit " + bundle + " -o " + fits) == 0);
  REQUIRE(cli::run("class-table " + fits + " " + bundle + " -o " + (dir / "classes.csv").string()) == 0);
  const auto classes = cli::slurp(dir / "classes.csv");
  CHECK(classes.rfind("class_label,train_size,mean_lambda,pct_never_forgotten\ng1,6,", 0) == 0);
  CHECK(classes.find("\ng0,6,0,100\n") != std::string::npos);
  REQUIRE(cli::run("early-loss " + fits + " " + bundle + " -o " + (dir / "el.json").string()) == 0);
  CHECK(cli::slurp(dir / "el.json").find("\"method\": \"t_approximation\"") != std::string::npos);
}
