#include "forgetting/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "forgetting/parallel.hpp"
#include "forgetting/random.hpp"

namespace forgetting {

namespace {

using Int128 = __int128;

// Doubled average ranks are always integers, so rank sums and products can
// be accumulated exactly.
std::vector<std::int64_t> doubled_ranks(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const auto n = static_cast<std::size_t>(values.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(a)) < values(static_cast<Eigen::Index>(b));
  });
  std::vector<std::int64_t> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values(static_cast<Eigen::Index>(order[j + 1])) == values(static_cast<Eigen::Index>(order[i]))) {
      ++j;
    }
    // positions i..j (0-based) share rank ((i+1)+(j+1))/2; doubled: i+j+2
    const auto doubled = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = doubled;
    i = j + 1;
  }
  return ranks;
}

struct RankMoments {
  Int128 sum = 0;
  Int128 sum_sq = 0;
};

RankMoments moments(const std::vector<std::int64_t>& r) {
  RankMoments m;
  for (auto v : r) {
    m.sum += v;
    m.sum_sq += static_cast<Int128>(v) * v;
  }
  return m;
}

Int128 centered_scale(const RankMoments& m, std::size_t n) {
  return static_cast<Int128>(n) * m.sum_sq - m.sum * m.sum;
}

Int128 cross_sum(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  Int128 s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<Int128>(a[i]) * b[i];
  return s;
}

double rho_from_ranks(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  const std::size_t n = a.size();
  const auto ma = moments(a);
  const auto mb = moments(b);
  const Int128 numerator = static_cast<Int128>(n) * cross_sum(a, b) - ma.sum * mb.sum;
  const Int128 da = centered_scale(ma, n);
  const Int128 db = centered_scale(mb, n);
  if (da == 0 || db == 0) throw Error(ErrorCode::ZeroVariance, "Spearman correlation undefined for constant input");
  const long double rho = static_cast<long double>(numerator) /
                          std::sqrt(static_cast<long double>(da) * static_cast<long double>(db));
  return static_cast<double>(std::clamp(rho, -1.0L, 1.0L));
}

double exact_permutation_p(const std::vector<std::int64_t>& a, std::vector<std::int64_t> b) {
  const std::size_t n = a.size();
  const Int128 centre = moments(a).sum * moments(b).sum;
  const auto deviation = [&](const std::vector<std::int64_t>& bb) {
    const Int128 d = static_cast<Int128>(n) * cross_sum(a, bb) - centre;
    return d < 0 ? -d : d;
  };
  const Int128 observed = deviation(b);
  // Distinct arrangements of the multiset of y-ranks; each stands for the
  // same number of index permutations, so the fraction is unchanged.
  std::sort(b.begin(), b.end());
  std::uint64_t total = 0;
  std::uint64_t extreme = 0;
  do {
    ++total;
    if (deviation(b) >= observed) ++extreme;
  } while (std::next_permutation(b.begin(), b.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

double t_approximation_p(double rho, std::size_t n) {
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  const boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, 0.0, 1.0);
}

void check_pair(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "Spearman inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "Spearman needs at least two pairs");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorCode::InvalidArgument, "Spearman inputs must be finite");
}

bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& v) { return (v.array() == v(0)).all(); }

}  // namespace

// ---------------------------------------------------------------------------
// Ranked sets and Jaccard overlap

RankedLambdaSet::RankedLambdaSet(std::string run_id, std::vector<std::pair<std::string, double>> pairs)
    : run_id_(std::move(run_id)), pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < pairs_.size(); ++i) {
    if (pairs_[i].first == pairs_[i - 1].first) {
      throw Error(ErrorCode::InconsistentIds, "duplicate sample id '" + pairs_[i].first + "' in run " + run_id_);
    }
  }
}

RankedLambdaSet RankedLambdaSet::from_fits(std::string run_id, std::span<const DecayFit> fits) {
  std::vector<std::pair<std::string, double>> pairs;
  pairs.reserve(fits.size());
  for (const auto& f : fits) pairs.emplace_back(f.sample_id, f.lambda);
  return RankedLambdaSet(std::move(run_id), std::move(pairs));
}

std::size_t top_k_count(std::size_t n, double k_percent) {
  if (!(k_percent >= 0.0 && k_percent <= 100.0)) throw Error(ErrorCode::InvalidArgument, "k_percent must lie in [0, 100]");
  const auto count = static_cast<std::size_t>(std::ceil(k_percent * static_cast<double>(n) / 100.0));
  return std::min(count, n);
}

std::vector<std::string> RankedLambdaSet::top_k_ids(double k_percent) const {
  const std::size_t count = top_k_count(pairs_.size(), k_percent);
  std::vector<std::size_t> order(pairs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // pairs_ is id-sorted, so a stable sort on lambda breaks ties by id.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pairs_[a].second > pairs_[b].second; });
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ids.push_back(pairs_[order[i]].first);
  std::sort(ids.begin(), ids.end());
  return ids;
}

RankedLambdaSet RankedLambdaSet::restricted_to(const std::vector<std::string>& ids) const {
  std::vector<std::pair<std::string, double>> kept;
  kept.reserve(ids.size());
  auto it = pairs_.begin();
  for (const auto& id : ids) {
    it = std::lower_bound(it, pairs_.end(), id, [](const auto& p, const std::string& key) { return p.first < key; });
    if (it != pairs_.end() && it->first == id) kept.push_back(*it);
  }
  return RankedLambdaSet(run_id_, std::move(kept));
}

std::vector<std::string> shared_ids(const RankedLambdaSet& a, const RankedLambdaSet& b) {
  std::vector<std::string> out;
  auto ia = a.pairs().begin();
  auto ib = b.pairs().begin();
  while (ia != a.pairs().end() && ib != b.pairs().end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      out.push_back(ia->first);
      ++ia;
      ++ib;
    }
  }
  return out;
}

namespace {

std::pair<RankedLambdaSet, RankedLambdaSet> on_shared_universe(const RankedLambdaSet& a, const RankedLambdaSet& b) {
  const auto ids = shared_ids(a, b);
  if (ids.empty()) {
    throw Error(ErrorCode::DisjointUniverses, "runs " + a.run_id() + " and " + b.run_id() + " share no sample ids");
  }
  return {a.restricted_to(ids), b.restricted_to(ids)};
}

JaccardPoint jaccard_on_shared(const RankedLambdaSet& a, const RankedLambdaSet& b, double k_percent) {
  const auto top_a = a.top_k_ids(k_percent);
  const auto top_b = b.top_k_ids(k_percent);
  if (top_a.empty() && top_b.empty()) return {k_percent, 1.0, 0};
  std::vector<std::string> common;
  std::set_intersection(top_a.begin(), top_a.end(), top_b.begin(), top_b.end(), std::back_inserter(common));
  const std::size_t union_size = top_a.size() + top_b.size() - common.size();
  return {k_percent, static_cast<double>(common.size()) / static_cast<double>(union_size), top_a.size()};
}

}  // namespace

double jaccard_top_k(const RankedLambdaSet& a, const RankedLambdaSet& b, double k_percent) {
  const auto [sa, sb] = on_shared_universe(a, b);
  return jaccard_on_shared(sa, sb, k_percent).jaccard;
}

std::span<const double> default_k_list() {
  static constexpr std::array<double, 5> kList{10.0, 20.0, 30.0, 40.0, 50.0};
  return kList;
}

std::vector<JaccardPoint> jaccard_sweep(const RankedLambdaSet& a, const RankedLambdaSet& b,
                                        std::span<const double> k_list) {
  const auto [sa, sb] = on_shared_universe(a, b);
  std::vector<double> ks(k_list.begin(), k_list.end());
  std::sort(ks.begin(), ks.end());
  std::vector<JaccardPoint> out;
  out.reserve(ks.size());
  for (double k : ks) out.push_back(jaccard_on_shared(sa, sb, k));
  return out;
}

// ---------------------------------------------------------------------------
// Rank correlation

std::string to_string(PValueMethod method) {
  return method == PValueMethod::ExactPermutation ? "exact_permutation" : "t_approximation";
}

Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const auto doubled = doubled_ranks(values);
  Eigen::VectorXd out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) out(i) = 0.5 * static_cast<double>(doubled[static_cast<std::size_t>(i)]);
  return out;
}

CorrelationResult spearman(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_pair(x, y);
  const auto rx = doubled_ranks(x);
  const auto ry = doubled_ranks(y);
  CorrelationResult result;
  result.n = static_cast<std::size_t>(x.size());
  result.rho = rho_from_ranks(rx, ry);
  if (result.n <= kExactPermutationMaxN) {
    result.method = PValueMethod::ExactPermutation;
    result.p_value = exact_permutation_p(rx, ry);
  } else {
    result.method = PValueMethod::TApproximation;
    result.p_value = t_approximation_p(result.rho, result.n);
  }
  return result;
}

BootstrapInterval bootstrap_ci_rho(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Ref<const Eigen::VectorXd>& y, const BootstrapOptions& options) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) {
    throw Error(ErrorCode::ZeroVariance, "Spearman correlation undefined for constant input");
  }
  if (options.resamples < 100) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least 100 resamples");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "confidence must lie in (0, 1)");
  }

  constexpr std::size_t kMaxAttempts = 10000;
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<double> rhos(options.resamples);
  std::vector<std::size_t> redraws(options.resamples, 0);

  parallel_for(options.resamples, options.threads, [&](std::size_t b) {
    RandomStream rng(options.seed, b);
    Eigen::VectorXd xs(x.size());
    Eigen::VectorXd ys(y.size());
    for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<Eigen::Index>(rng.below(n));
        xs(static_cast<Eigen::Index>(i)) = x(j);
        ys(static_cast<Eigen::Index>(i)) = y(j);
      }
      if (is_constant(xs) || is_constant(ys)) {
        ++redraws[b];
        continue;
      }
      rhos[b] = rho_from_ranks(doubled_ranks(xs), doubled_ranks(ys));
      return;
    }
    throw Error(ErrorCode::ZeroVariance, "bootstrap could not draw a resample with non-zero variance");
  });

  const double tail = (1.0 - options.confidence) / 2.0 * 100.0;
  BootstrapInterval out{};
  out.low = percentile(rhos, tail);
  out.high = percentile(rhos, 100.0 - tail);
  out.resamples = options.resamples;
  out.redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
  return out;
}

std::vector<SeedPairResult> cross_seed_stability(std::span<const RankedLambdaSet> runs,
                                                 const std::optional<BootstrapOptions>& bootstrap) {
  if (runs.size() < 2) throw Error(ErrorCode::InvalidArgument, "cross-seed stability needs at least two runs");
  std::vector<SeedPairResult> out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      const auto [a, b] = on_shared_universe(runs[i], runs[j]);
      Eigen::VectorXd la(static_cast<Eigen::Index>(a.size()));
      Eigen::VectorXd lb(static_cast<Eigen::Index>(b.size()));
      for (std::size_t k = 0; k < a.size(); ++k) {
        la(static_cast<Eigen::Index>(k)) = a.pairs()[k].second;
        lb(static_cast<Eigen::Index>(k)) = b.pairs()[k].second;
      }
      SeedPairResult pair{runs[i].run_id(), runs[j].run_id(), a.size(), spearman(la, lb), std::nullopt};
      if (bootstrap) pair.interval = bootstrap_ci_rho(la, lb, *bootstrap);
      out.push_back(std::move(pair));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Class-level and loss-based analyses

std::vector<ClassForgettingRow> class_table(std::span<const DecayFit> fits, std::span<const SampleMeta> meta) {
  std::unordered_map<std::string, const SampleMeta*> by_id;
  for (const auto& m : meta) by_id.emplace(m.sample_id, &m);

  struct Accumulator {
    std::size_t count = 0;
    double lambda_sum = 0.0;
    std::size_t never_forgotten = 0;
  };
  std::map<std::string, Accumulator> classes;
  for (const auto& fit : fits) {
    const auto it = by_id.find(fit.sample_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::UnknownClassLabel, "no class label for sample '" + fit.sample_id + "'");
    }
    auto& acc = classes[it->second->class_label];
    ++acc.count;
    acc.lambda_sum += fit.lambda;
    if (fit.status == FitStatus::NeverForgotten) ++acc.never_forgotten;
  }

  std::vector<ClassForgettingRow> rows;
  rows.reserve(classes.size());
  for (const auto& [label, acc] : classes) {
    const auto size = static_cast<double>(acc.count);
    rows.push_back({label, acc.count, acc.lambda_sum / size, 100.0 * static_cast<double>(acc.never_forgotten) / size});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.mean_lambda > b.mean_lambda; });
  return rows;
}

CorrelationResult early_loss_correlation(std::span<const DecayFit> fits, std::span<const SampleMeta> meta) {
  std::unordered_map<std::string, double> loss;
  for (const auto& m : meta) loss.emplace(m.sample_id, m.phase1_loss);
  std::vector<const DecayFit*> ordered;
  for (const auto& f : fits) ordered.push_back(&f);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });

  Eigen::VectorXd x(static_cast<Eigen::Index>(ordered.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(ordered.size()));
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto it = loss.find(ordered[i]->sample_id);
    if (it == loss.end()) throw Error(ErrorCode::MissingLoss, "no Phase-1 loss for sample '" + ordered[i]->sample_id + "'");
    x(static_cast<Eigen::Index>(i)) = it->second;
    y(static_cast<Eigen::Index>(i)) = ordered[i]->lambda;
  }
  return spearman(x, y);
}

AggregateStat aggregate_over_seeds(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptySequence, "aggregate over zero seeds");
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / static_cast<double>(values.size());
  return {mean, std::sqrt(var), values.size()};
}

double mean_r2(std::span<const DecayFit> fits) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& f : fits) {
    if (f.r_squared) {
      sum += *f.r_squared;
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::NoFittedSamples, "no samples with an R^2 value");
  return sum / static_cast<double>(count);
}

std::pair<double, double> mean_r2_split(std::span<const DecayFit> fits_a, std::span<const DecayFit> fits_b) {
  return {mean_r2(fits_a), mean_r2(fits_b)};
}

}  // namespace forgetting
