#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sobonet/arch.hpp"
#include "sobonet/errors.hpp"
#include "sobonet/metrics.hpp"
#include "sobonet/parallel.hpp"
#include "sobonet/rng.hpp"
#include "sobonet/train.hpp"

using namespace sobonet;

namespace {

std::size_t below(CounterRng& rng, std::size_t k) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(k)); }

bool same_patterns(const Network& a, const Network& b, std::span<const std::vector<double>> xs) {
  for (const auto& x : xs)
    if (activation_pattern(a, x) != activation_pattern(b, x)) return false;
  return true;
}

struct FdOutcome {
  double worst = 0.0;
  std::size_t skipped = 0;
};

// Central differences over every parameter; a parameter is skipped when both step sizes
// move some sample across a kink.
FdOutcome fd_gradient(const ArchSpec& arch, std::span<const double> theta, const TargetFunction& f,
                      std::span<const std::vector<double>> xs) {
  const Network net = arch_network(arch, theta);
  const LossGrad lg = h1_loss_grad(net, f, xs);
  FdOutcome out;
  std::vector<double> tp(theta.begin(), theta.end()), tm = tp;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    bool done = false;
    for (double h : {1e-5, 1e-7}) {
      tp[k] = theta[k] + h;
      tm[k] = theta[k] - h;
      const Network np = arch_network(arch, tp), nm = arch_network(arch, tm);
      if (arch.activation == Activation::relu && (!same_patterns(np, net, xs) || !same_patterns(nm, net, xs)))
        continue;
      const double fd = (empirical_loss(np, f, xs) - empirical_loss(nm, f, xs)) / (2 * h);
      out.worst = std::max(out.worst, std::abs(lg.grad[k] - fd) / std::max(1.0, std::abs(fd)));
      done = true;
      break;
    }
    if (!done) ++out.skipped;
    tp[k] = tm[k] = theta[k];
  }
  return out;
}

}  // namespace

TEST_CASE("exact square net has zero loss and gradient") {
  const ArchSpec arch = ArchSpec::parse("1,2,1", Activation::requ);
  const std::vector<double> theta = {1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 0.0};
  const Network sq = arch_network(arch, theta);
  const TargetFunction f = make_target("x2", 2);
  const std::vector<std::vector<double>> xs = {{0.1}, {0.35}, {0.8}};
  const LossGrad lg = h1_loss_grad(sq, f, xs);
  CHECK(lg.loss < 1e-24);
  for (double g : lg.grad) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("linear model loss by hand") {
  Layer out = Layer::zeros(1, 1, Activation::linear);
  out.w(0, 0) = 1.0;
  const Network phi(1, {out});
  TargetFunction zero = make_target("x", 1);
  zero.name = "zero";
  zero.expr = [](std::span<const Jet> x) { return x[0] * 0.0; };
  const std::vector<std::vector<double>> xs = {{0.0}, {1.0}};
  const LossGrad lg = h1_loss_grad(phi, zero, xs);
  CHECK(lg.loss == doctest::Approx(1.5));
  // d/dw of ((w*0)^2 + w^2 + w^2 + w^2)/2 = 3w; d/db of (b^2 + (w+b)^2)/2 = w at b = 0.
  CHECK(lg.grad[0] == doctest::Approx(3.0));
  CHECK(lg.grad[1] == doctest::Approx(1.0));
  CHECK(empirical_loss(phi, zero, xs, LossKind::l2) == doctest::Approx(0.5));
}

TEST_CASE("parameter gradient matches finite differences") {
  CounterRng rng(21);
  const TargetFunction targets[2] = {make_target("sin1d", 2), make_target("sinprod", 2)};
  for (Activation act : {Activation::relu, Activation::requ}) {
    double worst = 0.0;
    std::size_t skipped = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const bool two_d = trial % 2 == 1;
      const std::size_t d = two_d ? 2 : 1;
      const std::size_t w1 = 2 + below(rng, 4), w2 = 1 + below(rng, 3);
      const ArchSpec arch = trial % 3 == 0 ? ArchSpec{{d, w1, 1}, act} : ArchSpec{{d, w1, w2, 1}, act};
      std::vector<double> theta(arch.parameter_count());
      for (double& t : theta) t = rng.uniform(-1.0, 1.0);
      std::vector<std::vector<double>> xs(3 + below(rng, 5), std::vector<double>(d));
      for (auto& x : xs)
        for (double& v : x) v = rng.uniform(0.01, 0.99);
      const FdOutcome o = fd_gradient(arch, theta, targets[two_d ? 1 : 0], xs);
      worst = std::max(worst, o.worst);
      skipped += o.skipped;
      total += theta.size();
    }
    CAPTURE(to_string(act));
    CHECK(worst <= 1e-4);
    CHECK(skipped * 100 <= total);
  }
}

TEST_CASE("h1 loss dominates l2 loss") {
  CounterRng rng(5);
  const TargetFunction f = make_target("cos1d", 2);
  for (int trial = 0; trial < 30; ++trial) {
    const ArchSpec arch{{1, 4, 3, 1}, trial % 2 ? Activation::requ : Activation::relu};
    std::vector<double> theta(arch.parameter_count());
    for (double& t : theta) t = rng.uniform(-1.0, 1.0);
    const Network net = arch_network(arch, theta);
    const auto xs = draw_samples(1, 16, trial);
    CHECK(empirical_loss(net, f, xs, LossKind::h1) >= empirical_loss(net, f, xs, LossKind::l2));
  }
}

TEST_CASE("training is deterministic and starts from the initialization") {
  TrainConfig cfg;
  cfg.arch = ArchSpec::parse("1,4,1");
  cfg.target = make_target("sin1d", 1);
  cfg.samples = 32;
  cfg.steps = 40;
  const TrainResult a = train(cfg), b = train(cfg);
  CHECK(a.trajectory == b.trajectory);
  CHECK(to_json(a.net) == to_json(b.net));
  CHECK(a.risk_population == b.risk_population);
  CHECK(a.trajectory.size() == 41);
  for (double v : a.trajectory) CHECK(std::isfinite(v));
  CHECK(a.trajectory.back() <= a.trajectory.front());

  cfg.steps = 0;
  const TrainResult z = train(cfg);
  CHECK(z.trajectory.size() == 1);
  CHECK(arch_parameters(z.net) == initial_parameters(cfg.arch, cfg.seed));
}

TEST_CASE("one hidden unit learns a linear target") {
  TrainConfig cfg;
  cfg.arch = ArchSpec::parse("1,1,1");
  cfg.target = make_target("x", 1);
  cfg.samples = 32;
  cfg.steps = 500;
  const TrainResult r = train(cfg);
  CHECK(r.risk_sample <= 0.1 * r.trajectory.front());
}

TEST_CASE("population risk estimate is stable under grid doubling") {
  TrainConfig cfg;
  cfg.arch = ArchSpec::parse("1,8,1");
  cfg.target = make_target("sin1d", 1);
  cfg.samples = 64;
  cfg.steps = 100;
  const TrainResult r = train(cfg);
  CHECK(r.grid_points >= 16 * 64);
  const double coarse = population_risk(r.net, cfg.target, r.grid_points);
  const double fine = population_risk(r.net, cfg.target, 2 * r.grid_points);
  CHECK(std::abs(fine - coarse) <= 0.01 * coarse);
  CHECK(coarse == r.risk_population);
}

TEST_CASE("gap experiment bookkeeping") {
  TrainConfig cfg;
  cfg.arch = ArchSpec::parse("1,4,1");
  cfg.target = make_target("sin1d", 1);
  cfg.steps = 20;
  const std::vector<std::size_t> Ms = {16, 32, 64};
  const GapTable one = gap_experiment(cfg, Ms, 1);
  for (const GapSummary& s : one.summary) CHECK(s.iqr == 0.0);

  set_thread_count(1);
  const GapTable serial = gap_experiment(cfg, Ms, 5);
  set_thread_count(4);
  const GapTable threaded = gap_experiment(cfg, Ms, 5);
  REQUIRE(serial.rows.size() == 15);
  for (std::size_t k = 0; k < serial.rows.size(); ++k) CHECK(serial.rows[k].gap == threaded.rows[k].gap);
  CHECK(gap_csv(serial).header == std::vector<std::string>{"M", "replica", "R_S", "R_D", "gap"});

  const std::vector<std::size_t> bad = {64, 32};
  CHECK_THROWS_AS(gap_experiment(cfg, bad, 5), InvalidInput);
}

TEST_CASE("invalid training configs are rejected") {
  TrainConfig cfg;
  cfg.arch = ArchSpec::parse("2,4,1");
  cfg.target = make_target("sin1d", 1);
  CHECK_THROWS_AS(train(cfg), InvalidInput);
  cfg.arch = ArchSpec::parse("1,4,1");
  cfg.samples = 0;
  CHECK_THROWS_AS(train(cfg), InvalidInput);
}

TEST_CASE("divergence carries the trajectory") {
  TrainConfig cfg;
  cfg.arch = ArchSpec::parse("1,8,8,1", Activation::requ);
  cfg.target = make_target("sin1d", 1);
  cfg.rate = 50.0;
  cfg.steps = 200;
  try {
    train(cfg);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK_FALSE(e.trajectory().empty());
  }
}
