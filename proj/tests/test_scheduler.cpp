#include <doctest.h>

#include "check_near.hpp"

#include <cmath>
#include <random>

#include "forgetting/scheduler.hpp"
#include "sr_reference.hpp"

using namespace forgetting;

namespace {
Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}
}  // namespace

TEST_CASE("urgency closed forms") {
  for (double lambda : {0.01, 0.5, 10.0}) CHECK(urgency(lambda, 3.0, 3.0) == 0.0);
  const double expected = static_cast<double>(1.0L - std::exp(-0.1L));
  CHECK_NEAR(expected, 0.0951626, 1e-7);
  CHECK_NEAR(urgency(0.01, 10.0, 0.0), expected, 1e-15);
  CHECK_NEAR(urgency(10.0, 5.0, 0.0), 1.0, 1e-15);
  try {
    urgency(1.0, 2.0, 3.0);
    FAIL("expected NegativeGap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeGap);
  }
}

TEST_CASE("property: urgency is strictly increasing in gap and lambda") {
  for (double lambda : {0.01, 0.3, 2.0}) {
    for (int gap = 1; gap < 6; ++gap) CHECK(urgency(lambda, gap + 1.0, 0.0) > urgency(lambda, double(gap), 0.0));
  }
  for (int gap = 1; gap < 4; ++gap) {
    CHECK(urgency(0.2, double(gap), 0.0) > urgency(0.1, double(gap), 0.0));
    CHECK(urgency(1.0, double(gap), 0.0) > urgency(0.2, double(gap), 0.0));
  }
}

TEST_CASE("softmax closed forms") {
  const auto equal = softmax_weights(vec({0.3, 0.3, 0.3, 0.3}), 1.0).weights;
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(equal(i) == 0.25);
  const auto two = softmax_weights(vec({1.0, 0.0}), 1.0).weights;
  const double e = std::exp(1.0);
  CHECK_NEAR(two(0), e / (e + 1), 1e-12);
  CHECK_NEAR(two(1), 1 / (e + 1), 1e-12);
  CHECK_NEAR(two(0), 0.731059, 1e-6);
  const auto hot = softmax_weights(vec({0.0, 1.0, 0.5, 0.99}), 1e6).weights;
  for (Eigen::Index i = 0; i < 4; ++i) CHECK_NEAR(hot(i), 0.25, 1e-6);
  CHECK_THROWS_AS(softmax_weights(vec({1.0}), 0.0), Error);
}

TEST_CASE("property: softmax shift invariance, argmax, normalisation") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(10);
    for (auto& v : x) v = u(rng);
    const double tau = 0.1 + u(rng);
    const auto w = softmax(x, tau);
    const auto shifted = softmax(Eigen::VectorXd(x.array() + 3.7), tau);
    CHECK((w - shifted).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(w.sum() - 1.0) < 1e-9);
    CHECK((w.array() >= 0).all());
    Eigen::Index ix, iw;
    x.maxCoeff(&ix);
    w.maxCoeff(&iw);
    CHECK(ix == iw);
  }
}

TEST_CASE("curriculum weights") {
  const auto losses = vec({0.1, 0.5, 0.9});
  const auto easy = curriculum_weights(losses, 0, 5, CurriculumDirection::EasyFirst).weights;
  CHECK(easy(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(easy(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(easy(2) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  const auto hard = curriculum_weights(losses, 0, 5, CurriculumDirection::HardFirst).weights;
  CHECK_NEAR(hard(0), easy(2), 1e-15);
  CHECK_NEAR(hard(1), easy(1), 1e-15);
  CHECK_NEAR(hard(2), easy(0), 1e-15);

  for (auto dir : {CurriculumDirection::EasyFirst, CurriculumDirection::HardFirst}) {
    const auto last = curriculum_weights(losses, 4, 5, dir).weights;
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(last(i) == 1.0 / 3.0);
    const auto single = curriculum_weights(losses, 0, 1, dir).weights;
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(single(i) == 1.0 / 3.0);
  }
  // Halfway: (1 - 0.5) * base + 0.5 / 3
  const auto mid = curriculum_weights(losses, 2, 5, CurriculumDirection::EasyFirst).weights;
  CHECK(mid(0) == doctest::Approx(0.25 + 0.5 / 3).epsilon(1e-14));
  CHECK_THROWS_AS(curriculum_weights(losses, 5, 5, CurriculumDirection::EasyFirst), Error);
  try {
    curriculum_weights(Eigen::VectorXd(0), 0, 5, CurriculumDirection::EasyFirst);
    FAIL("expected MissingLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingLoss);
  }
}

TEST_CASE("random weights") {
  const auto uniform = random_weights(4).weights;
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(uniform(i) == 0.25);
  const std::vector<std::string> labels{"a", "a", "a", "b"};
  const auto inv = random_weights(4, &labels).weights;
  // 1/3 for each "a", 1 for "b", normalised by 2.
  CHECK(inv(0) == doctest::Approx(1.0 / 6.0));
  CHECK(inv(3) == doctest::Approx(0.5));
}

TEST_CASE("draw_epoch") {
  const auto point = draw_epoch(vec({1, 0, 0}), 1000, 5);
  CHECK(std::all_of(point.begin(), point.end(), [](Eigen::Index i) { return i == 0; }));
  const auto tail = draw_epoch(vec({0, 0, 1}), 1000, 5);
  CHECK(std::all_of(tail.begin(), tail.end(), [](Eigen::Index i) { return i == 2; }));

  const auto count = [](const std::vector<Eigen::Index>& draws, Eigen::Index n) {
    std::vector<double> f(static_cast<std::size_t>(n), 0.0);
    for (auto i : draws) f[static_cast<std::size_t>(i)] += 1.0 / static_cast<double>(draws.size());
    return f;
  };
  const auto uniform = count(draw_epoch(vec({0.25, 0.25, 0.25, 0.25}), 1000000, 42), 4);
  for (double f : uniform) CHECK(f == doctest::Approx(0.25).epsilon(0.005));
  const auto skewed = count(draw_epoch(vec({0.75, 0.25}), 1000000, 43), 2);
  CHECK(skewed[0] == doctest::Approx(0.75).epsilon(0.005));
  CHECK(skewed[1] == doctest::Approx(0.25).epsilon(0.005));

  CHECK(draw_epoch(vec({0.2, 0.3, 0.5}), 100, 7, 3) == draw_epoch(vec({0.2, 0.3, 0.5}), 100, 7, 3));
  CHECK(draw_epoch(vec({0.2, 0.3, 0.5}), 100, 7, 3) != draw_epoch(vec({0.2, 0.3, 0.5}), 100, 7, 4));
  CHECK_THROWS_AS(draw_epoch(vec({0.2, 0.8}), 0, 1), Error);
}

TEST_CASE("spaced repetition with equal lambdas starts uniform") {
  ScheduleInputs in;
  in.lambda_sched = Eigen::VectorXd::Constant(6, 0.4);
  const auto trace = simulate_schedule(6, in, {Strategy::SpacedRepetition, 3, 2, 1.0, 9});
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(trace.snapshots[0].weights(i) == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(trace.selection_counts.sum() == 6);
}

TEST_CASE("spaced repetition matches the reference trajectory") {
  const std::vector<double> lambdas{0.01, 1.0, 10.0};
  const auto ref = reference::spaced_repetition(lambdas, 5, 3, 1.0, 2026);
  ScheduleInputs in;
  in.lambda_sched = vec({0.01, 1.0, 10.0});
  const auto trace = simulate_schedule(3, in, {Strategy::SpacedRepetition, 5, 3, 1.0, 2026});
  REQUIRE(trace.snapshots.size() == 5);
  for (int e = 0; e < 5; ++e) {
    const auto& r = ref[static_cast<std::size_t>(e)];
    for (Eigen::Index i = 0; i < 3; ++i) {
      CHECK_NEAR(trace.snapshots[static_cast<std::size_t>(e)].weights(i), r.weights[static_cast<std::size_t>(i)], 1e-12);
      CHECK(trace.last_seen_history[static_cast<std::size_t>(e)](i) == r.last_seen_after[static_cast<std::size_t>(i)]);
    }
    for (std::size_t d = 0; d < 3; ++d) CHECK(trace.draws[static_cast<std::size_t>(e)][d] == r.draws[d]);
  }
}

TEST_CASE("drawn samples have gap 1 at the next epoch") {
  ScheduleInputs in;
  in.lambda_sched = vec({0.3, 0.7, 2.0, 0.01});
  const auto trace = simulate_schedule(4, in, {Strategy::SpacedRepetition, 2, 2, 1.0, 3});
  const auto& drawn = trace.draws[0];
  Eigen::VectorXd u(4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const int last = trace.last_seen_history[0](i);
    u(i) = urgency((*in.lambda_sched)(i), 1.0, double(last));
  }
  for (auto i : drawn) CHECK_NEAR(u(i), 1 - std::exp(-(*in.lambda_sched)(i)), 1e-15);
  const auto expected = softmax(u, 1.0);
  CHECK((expected - trace.snapshots[1].weights).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("curriculum and anti-curriculum favour opposite ends at epoch 0") {
  ScheduleInputs in;
  in.phase1_losses = vec({0.2, 1.4, 0.7});
  const auto cur = simulate_schedule(3, in, {Strategy::Curriculum, 4, 30000, 1.0, 5});
  const auto anti = simulate_schedule(3, in, {Strategy::AntiCurriculum, 4, 30000, 1.0, 5});
  const auto& wc = cur.snapshots[0].weights;
  const auto& wa = anti.snapshots[0].weights;
  CHECK(wc(0) == wa(1));
  CHECK(wc(2) == wa(2));
  CHECK(wc(1) == wa(0));
  std::array<int, 3> cc{}, ca{};
  for (auto i : cur.draws[0]) ++cc[static_cast<std::size_t>(i)];
  for (auto i : anti.draws[0]) ++ca[static_cast<std::size_t>(i)];
  CHECK((cc[0] > cc[2] && cc[2] > cc[1]));
  CHECK((ca[1] > ca[2] && ca[2] > ca[0]));
  for (const auto& s : cur.snapshots) CHECK(std::abs(s.weights.sum() - 1.0) < 1e-9);
}

TEST_CASE("schedule precondition failures") {
  ScheduleInputs none;
  CHECK_THROWS_AS(simulate_schedule(3, none, {Strategy::SpacedRepetition, 2, 1, 1.0, 0}), Error);
  CHECK_THROWS_AS(simulate_schedule(3, none, {Strategy::Curriculum, 2, 1, 1.0, 0}), Error);
  ScheduleInputs zero;
  zero.lambda_sched = vec({0.0, 1.0, 1.0});
  CHECK_THROWS_AS(simulate_schedule(3, zero, {Strategy::SpacedRepetition, 2, 1, 1.0, 0}), Error);
  const auto random = simulate_schedule(3, none, {Strategy::Random, 2, 10, 1.0, 0});
  CHECK(random.selection_counts.sum() == 20);
  CHECK(parse_strategy("anti") == Strategy::AntiCurriculum);
  CHECK(to_string(Strategy::SpacedRepetition) == "sr");
}
