#include <cmath>
#include <memory>

#include "doctest.h"
#include "seqrep/analysis.hpp"
#include "seqrep/tasks.hpp"

using namespace seqrep;

namespace {

double fd_component(const Task& task, ParamVector phi, const MiniBatch& batch, std::size_t i, double h) {
  ParamVector plus = phi, minus = phi;
  plus[i] += h;
  minus[i] -= h;
  return (task.evaluate(plus, batch).loss - task.evaluate(minus, batch).loss) / (2 * h);
}

}  // namespace

TEST_CASE("radial loss values") {
  const RadialTask x1(ParamVector{0.0, 10.0});
  CHECK(x1.loss(ParamVector{0.0, 10.0}) == -200.0);
  const RadialTask x2(ParamVector{0.0, 0.0});
  CHECK(x2.loss(ParamVector{0.0, 0.0}) == -200.0);
  CHECK(x2.loss(ParamVector{1.0, 0.0}) == doctest::Approx(-200.0 * std::exp(-0.2)));
  CHECK(x2.loss(ParamVector{1.0, 0.0}) == doctest::Approx(-163.746).epsilon(1e-6));
}

TEST_CASE("radial gradient values") {
  const RadialTask x2(ParamVector{0.0, 0.0});
  CHECK(x2.gradient(ParamVector{0.0, 0.0}) == ParamVector{0.0, 0.0});
  const MiniBatch full = x2.full_batch();
  const ParamVector g = x2.gradient(ParamVector{1.0, 0.0});
  CHECK(g[0] == doctest::Approx(fd_component(x2, ParamVector{1.0, 0.0}, full, 0, 1e-6)).epsilon(1e-8));
  CHECK(g[0] == doctest::Approx(32.7492).epsilon(1e-5));
  CHECK(g[1] == 0.0);
  const ParamVector gy = x2.gradient(ParamVector{0.0, 1.0});
  CHECK(gy[0] == 0.0);
  CHECK(gy[1] == doctest::Approx(fd_component(x2, ParamVector{0.0, 1.0}, full, 1, 1e-6)).epsilon(1e-8));
  // Within the cusp radius the gradient is clamped to zero.
  CHECK(x2.gradient(ParamVector{1e-13, 0.0}) == ParamVector{0.0, 0.0});
}

TEST_CASE("radial loss is radially symmetric and descends toward its center") {
  const RadialTask task(ParamVector{10.0, 0.0});
  RandomSource rng(21);
  for (int i = 0; i < 200; ++i) {
    const double angle = 2.0 * M_PI * rng.uniform();
    const double radius = 0.01 + 20.0 * rng.uniform();
    const ParamVector phi{10.0 + radius * std::cos(angle), radius * std::sin(angle)};
    CHECK(task.loss(phi) == doctest::Approx(-200.0 * std::exp(-0.2 * radius)).epsilon(1e-12));
    CHECK(dot(task.gradient(phi), phi - task.center()) > 0.0);
  }
}

TEST_CASE("three radial tasks have exactly three strict local minima at the centers") {
  const TaskSet tasks = synthetic_radial_tasks();
  const LossGrid grid = loss_grid(tasks, {-5.0, 25.0, -5.0, 25.0}, 301, 301);
  std::vector<ParamVector> minima;
  for (std::size_t iy = 1; iy + 1 < grid.ny; ++iy) {
    for (std::size_t ix = 1; ix + 1 < grid.nx; ++ix) {
      const double v = grid.at(ix, iy);
      bool strict = true;
      for (int dy = -1; dy <= 1 && strict; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx || dy) && !(v < grid.at(ix + dx, iy + dy))) strict = false;
        }
      }
      if (strict) minima.push_back(ParamVector{grid.x(ix), grid.y(iy)});
    }
  }
  REQUIRE(minima.size() == 3);

  // Compass search from each grid minimum, shrinking the step down to 1e-9.
  for (const auto& start : minima) {
    ParamVector p = start;
    double best = mtl_loss(tasks, p);
    for (double step = 0.1; step > 1e-9;) {
      bool moved = false;
      for (const ParamVector& d : {ParamVector{1, 0}, ParamVector{-1, 0}, ParamVector{0, 1}, ParamVector{0, -1}}) {
        const ParamVector q = p + step * d;
        const double v = mtl_loss(tasks, q);
        if (v < best) {
          best = v;
          p = q;
          moved = true;
        }
      }
      if (!moved) step /= 2;
    }
    double nearest = 1e9;
    for (const auto& t : tasks) nearest = std::min(nearest, l2_distance(p, static_cast<const RadialTask&>(*t).center()));
    CHECK(nearest <= 1e-6);
  }
}

TEST_CASE("quadratic task") {
  const QuadraticTask q(ParamVector{0.0, 0.0});
  const Evaluation e = q.evaluate_full(ParamVector{3.0, 4.0});
  CHECK(e.loss == 12.5);
  CHECK(e.gradient == ParamVector{3.0, 4.0});
  const QuadraticTask at(ParamVector{1.5, -2.0});
  const Evaluation m = at.evaluate_full(ParamVector{1.5, -2.0});
  CHECK(m.loss == 0.0);
  CHECK(m.gradient == ParamVector{0.0, 0.0});
  CHECK(at.identity_hessian());
}

TEST_CASE("regression task matches a hand-computed batch") {
  // Rows x = 1 and x = 2, targets 1 and 1, weight 2: residuals 1 and 3.
  const RegressionTask task(1, {1.0, 2.0}, {1.0, 1.0});
  const Evaluation e = task.evaluate(ParamVector{2.0}, MiniBatch{{0, 1}});
  CHECK(e.loss == doctest::Approx(0.5 * (1.0 + 9.0) / 2.0));
  CHECK(e.gradient[0] == doctest::Approx((1.0 * 1.0 + 3.0 * 2.0) / 2.0));
  const Evaluation dup = task.evaluate(ParamVector{2.0}, MiniBatch{{1, 1}});
  CHECK(dup.loss == doctest::Approx(4.5));
  CHECK_FALSE(task.deterministic());
}

TEST_CASE("regression gradient matches finite differences at random points") {
  RandomSource data(4);
  const auto task = make_regression_task(RegressionSpec{200, ParamVector{0.5, -1.0, 2.0}, 0.3}, data);
  RandomSource rng(5);
  for (int i = 0; i < 100; ++i) {
    const ParamVector phi{3 * rng.normal(), 3 * rng.normal(), 3 * rng.normal()};
    const MiniBatch batch = sample_batch(*task, 16, rng);
    CHECK(relative_gradient_error(*task, phi, batch) <= 1e-6);
  }
}

TEST_CASE("batch validation") {
  const QuadraticTask q(ParamVector{0.0});
  CHECK_THROWS_AS(q.evaluate(ParamVector{1.0}, MiniBatch{{}}), UsageError);
  CHECK_THROWS_AS(q.evaluate(ParamVector{1.0}, MiniBatch{{0, 0}}), UsageError);
  CHECK_THROWS_AS(q.evaluate(ParamVector{1.0, 2.0}, q.full_batch()), UsageError);
  const RegressionTask r(1, {1.0, 2.0}, {1.0, 1.0});
  CHECK_THROWS_AS(r.evaluate(ParamVector{1.0}, MiniBatch{{2}}), UsageError);
  CHECK_THROWS_AS(r.evaluate(ParamVector{1.0}, MiniBatch{{}}), UsageError);
}

TEST_CASE("sample_batch") {
  RandomSource rng(1);
  const QuadraticTask q(ParamVector{0.0});
  CHECK(sample_batch(q, 1, rng) == MiniBatch{{0}});
  CHECK(sample_batch(q, 16, rng) == q.full_batch());
  CHECK_THROWS_AS(sample_batch(q, 0, rng), UsageError);

  RandomSource data(2);
  const auto task = make_regression_task(RegressionSpec{100, ParamVector{1.0, 1.0}, 0.1}, data);
  RandomSource a(77), b(77);
  const MiniBatch first = sample_batch(*task, 16, a);
  CHECK(first.size() == 16);
  CHECK(first == sample_batch(*task, 16, b));
  for (auto i : first.indices) CHECK(i < 100);
}

TEST_CASE("evaluate is pure") {
  RandomSource data(6);
  const auto task = make_regression_task(RegressionSpec{50, ParamVector{1.0, -1.0}, 0.2}, data);
  const MiniBatch batch{{3, 7, 7, 49}};
  const ParamVector phi{0.123, -4.56};
  const Evaluation a = task->evaluate(phi, batch);
  const Evaluation b = task->evaluate(phi, batch);
  CHECK(a.loss == b.loss);
  CHECK(a.gradient == b.gradient);
}

TEST_CASE("regression generation is seeded") {
  RandomSource a(10), b(10), c(11);
  const RegressionSpec spec{20, ParamVector{1.0, 2.0}, 0.1};
  const auto ta = make_regression_task(spec, a);
  const auto tb = make_regression_task(spec, b);
  const auto tc = make_regression_task(spec, c);
  CHECK(ta->target(5) == tb->target(5));
  CHECK(ta->target(5) != tc->target(5));
  RandomSource d(0);
  CHECK_THROWS_AS(make_regression_task(RegressionSpec{0, ParamVector{1.0}, 0.1}, d), UsageError);
}

TEST_CASE("synthetic tasks and MTL loss") {
  const TaskSet tasks = synthetic_radial_tasks();
  REQUIRE(tasks.size() == 3);
  CHECK(mtl_loss(tasks, ParamVector{0.0, 0.0}) == doctest::Approx(-200.0 - 2.0 * 200.0 * std::exp(-2.0)));
  CHECK(mtl_loss(tasks, ParamVector{0.0, 0.0}) == doctest::Approx(-254.134).epsilon(1e-5));
  CHECK(require_task_set(tasks) == 2);
  CHECK_THROWS_AS(require_task_set({}), UsageError);
  CHECK_THROWS_AS(require_task_set({nullptr}), UsageError);
  TaskSet mixed{std::make_shared<QuadraticTask>(ParamVector{0.0}), std::make_shared<QuadraticTask>(ParamVector{0.0, 1.0})};
  CHECK_THROWS_AS(require_task_set(mixed), UsageError);
}
