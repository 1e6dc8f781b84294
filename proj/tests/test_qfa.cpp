#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qot/errors.hpp"
#include "qot/qfa.hpp"
#include "support.hpp"

using namespace qot;
using namespace qot::qfa;
using qot::testkit::Engine;

namespace {

// Every state moves right and mixes through u: delta(q, a, q', +1) = u(q', q).
Automaton mixing_automaton(const CMatrix& u, std::vector<std::size_t> accept, std::vector<std::size_t> reject) {
  std::vector<std::string> names;
  for (Eigen::Index q = 0; q < u.rows(); ++q) names.push_back("q" + std::to_string(q));
  std::vector<Transition> tr;
  for (Eigen::Index q = 0; q < u.cols(); ++q) {
    for (Eigen::Index p = 0; p < u.rows(); ++p) {
      if (u(p, q) != Complex(0.0)) tr.push_back({std::size_t(q), 0, std::size_t(p), 1, u(p, q)});
    }
  }
  return Automaton(names, {"a"}, tr, 0, std::move(accept), std::move(reject));
}

CMatrix rotation(double theta) {
  CMatrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

const Word kA{0};

}  // namespace

TEST(Automaton, Contracts) {
  EXPECT_THROW(Automaton({"q"}, {"a"}, {}, 1, {}, {}), ContractError);
  EXPECT_THROW(Automaton({"q", "h"}, {"a"}, {}, 0, {1}, {1}), ContractError);
  EXPECT_THROW(Automaton({"q"}, {"a"}, {{0, 0, 0, 2, 1.0}}, 0, {}, {}), ContractError);
  EXPECT_THROW(Automaton({"q"}, {"a"}, {{0, 0, 0, 1, 1.0}, {0, 0, 0, 1, 1.0}}, 0, {}, {}), ContractError);
}

TEST(StepOperator, PermutationAutomaton) {
  // q0 -> q1 -> q2 -> q0 on letter a, q0 <-> q1 on b; the head always moves right.
  const Automaton aut({"q0", "q1", "q2"}, {"a", "b"},
                      {{0, 0, 1, 1, 1.0}, {1, 0, 2, 1, 1.0}, {2, 0, 0, 1, 1.0},
                       {0, 1, 1, 1, 1.0}, {1, 1, 0, 1, 1.0}, {2, 1, 2, 1, 1.0}},
                      0, {}, {});
  const std::size_t n = 3;
  const auto op = build_step_operator(aut, {0, 1}, n);
  const CMatrix& u = op.matrix();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    int ones = 0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (u(i, j) == Complex(1.0)) ++ones;
      else EXPECT_EQ(u(i, j), Complex(0.0));
    }
    EXPECT_EQ(ones, 1);
  }
  // Cell 1 holds b: |q2,1> -> |q2,2>.
  EXPECT_EQ(u(config_index(2, 2, n), config_index(2, 1, n)), Complex(1.0));
  // Cell 2 holds a again (the word repeats) and the head wraps: |q2,2> -> |q0,0>.
  EXPECT_EQ(u(config_index(0, 0, n), config_index(2, 2, n)), Complex(1.0));
}

TEST(StepOperator, BlockUnitaryWithShift) {
  Engine rng(1);
  const CMatrix block = qot::testkit::haar_unitary(2, rng);
  const auto aut = mixing_automaton(block, {}, {});
  const std::size_t n = 4;
  const auto op = build_step_operator(aut, kA, n);
  const CMatrix& u = op.matrix();
  EXPECT_LT((u.adjoint() * u - CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t q = 0; q < 2; ++q) {
      for (std::size_t p = 0; p < 2; ++p) {
        EXPECT_EQ(u(config_index(p, (x + 1) % n, n), config_index(q, x, n)), block(p, q));
      }
    }
  }
}

TEST(StepOperator, NonUnitaryNamesColumns) {
  const Automaton aut({"q0", "q1"}, {"a"}, {{0, 0, 0, 0, 1.0}, {1, 0, 0, 0, 1.0}}, 0, {}, {});
  try {
    build_step_operator(aut, kA, 1);
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(q0,0)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(q1,0)"), std::string::npos) << msg;
  }
}

TEST(Measurement, GeometricHalving) {
  // (q0, acc) rotated by pi/4: half of the surviving mass halts every step.
  const auto aut = mixing_automaton(rotation(std::numbers::pi / 4), {1}, {});
  const auto rec = run_with_measurement(aut, kA, 1, 30, MeasureMode::branch_tracking);
  ASSERT_EQ(rec.per_step.size(), 30u);
  double cumulative = 0.0;
  for (std::size_t t = 1; t <= 30; ++t) {
    cumulative += rec.per_step[t - 1].accept;
    EXPECT_NEAR(cumulative, 1.0 - std::pow(2.0, -double(t)), 1e-12);
    EXPECT_NEAR(rec.per_step[t - 1].running, std::pow(2.0, -double(t)), 1e-12);
  }
  EXPECT_EQ(rec.outcome, Outcome::running);
}

TEST(Measurement, ImmediateAccept) {
  const auto aut = mixing_automaton(rotation(std::numbers::pi / 2), {1}, {});
  const auto rec = run_with_measurement(aut, kA, 3, 10, MeasureMode::branch_tracking);
  EXPECT_EQ(rec.outcome, Outcome::accepted);
  EXPECT_EQ(rec.steps, 1u);
  EXPECT_NEAR(rec.accept_probability, 1.0, 1e-15);
  const auto sampled = run_with_measurement(aut, kA, 3, 10, MeasureMode::trajectory_sampling, 9);
  EXPECT_EQ(sampled.outcome, Outcome::accepted);
  EXPECT_EQ(sampled.steps, 1u);
}

TEST(Measurement, NeverHalting) {
  const auto aut = mixing_automaton(CMatrix::Identity(3, 3), {2}, {});
  const auto rec = run_with_measurement(aut, kA, 4, 25, MeasureMode::branch_tracking);
  EXPECT_EQ(rec.outcome, Outcome::running);
  EXPECT_EQ(rec.steps, 25u);
  EXPECT_EQ(rec.accept_probability + rec.reject_probability, 0.0);
  EXPECT_NEAR(rec.running_probability, 1.0, 1e-15);
}

TEST(Measurement, BornBookkeepingRandomAutomata) {
  Engine rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto aut = mixing_automaton(qot::testkit::haar_unitary(4, rng), {2}, {3});
    const auto rec = run_with_measurement(aut, kA, 3, 100, MeasureMode::branch_tracking);
    double halted = 0.0;
    for (const auto& b : rec.per_step) {
      halted += b.accept + b.reject;
      EXPECT_NEAR(halted + b.running, 1.0, 1e-9);
    }
    EXPECT_NEAR(rec.accept_probability + rec.reject_probability + rec.running_probability, 1.0, 1e-9);
  }
}

TEST(Measurement, SamplingMatchesTracking) {
  Engine rng(18);
  const auto aut = mixing_automaton(qot::testkit::haar_unitary(4, rng), {2}, {3});
  const MeasuredMachine machine(aut, kA, 3);
  const std::size_t steps = 20;
  const auto tracked = machine.track(steps);
  Rng sampler(derive_seed(5, "test.qfa"));
  const int runs = 100000;
  int accepted = 0;
  for (int i = 0; i < runs; ++i) accepted += machine.sample(steps, sampler).outcome == Outcome::accepted;
  const double p = tracked.accept_probability;
  const double sigma = std::sqrt(p * (1.0 - p) / runs);
  EXPECT_NEAR(double(accepted) / runs, p, 3.0 * sigma);
}

TEST(Measurement, SamplingIsSeeded) {
  Engine rng(19);
  const auto aut = mixing_automaton(qot::testkit::haar_unitary(3, rng), {1}, {2});
  const auto a = run_with_measurement(aut, kA, 2, 50, MeasureMode::trajectory_sampling, 123);
  const auto b = run_with_measurement(aut, kA, 2, 50, MeasureMode::trajectory_sampling, 123);
  EXPECT_EQ(a.outcome, b.outcome);
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_THROW(run_with_measurement(aut, kA, 2, 0, MeasureMode::branch_tracking), ContractError);
}

TEST(HaltingCost, NeverHaltingCountsEveryTerm) {
  // Accept states {2, 3} on a tape of 4: n = 8 halting basis vectors, never touched.
  const auto aut = mixing_automaton(CMatrix::Identity(4, 4), {2}, {3});
  const std::size_t T = 12;
  for (auto mode : {HaltingCostMode::expected, HaltingCostMode::certain_halt}) {
    const auto c = halting_cost(aut, kA, 4, T, mode);
    EXPECT_EQ(c.basis_size, 8u);
    EXPECT_EQ(c.value, double((T + 1) * 8));
    EXPECT_FALSE(c.halted);
  }
}

TEST(HaltingCost, ImmediateHaltAtStart) {
  // The initial state is itself accepting: only t = 0 is measured.
  const std::size_t n_tape = 3;
  const auto aut = mixing_automaton(CMatrix::Identity(2, 2), {0}, {});
  const auto c = halting_cost(aut, kA, n_tape, 10);
  EXPECT_TRUE(c.halted);
  EXPECT_EQ(c.steps, 0u);
  EXPECT_EQ(c.value, double(c.basis_size - 1));
}

TEST(HaltingCost, HaltAfterOneStep) {
  // t = 0 sees no halting overlap (n zeros); t = 1 lands on one basis vector.
  const auto aut = mixing_automaton(rotation(std::numbers::pi / 2), {1}, {});
  const auto c = halting_cost(aut, kA, 3, 10);
  EXPECT_TRUE(c.halted);
  EXPECT_EQ(c.steps, 1u);
  EXPECT_EQ(c.value, double(3 + 2));
}

TEST(HaltingCost, SingleVectorAlwaysOverlapping) {
  const auto aut = mixing_automaton(CMatrix::Identity(1, 1), {0}, {});
  const auto c = halting_cost(aut, kA, 1, 10);
  EXPECT_EQ(c.basis_size, 1u);
  EXPECT_EQ(c.value, 0.0);
}

TEST(HaltingCost, ExpectedModeWeightsBySurvival) {
  // Rotation family on two cells: tau(theta) = 2 + 1/sin^2(theta) in the limit.
  const auto fam = rotation_family();
  for (double theta : {0.4, 0.9, 1.3}) {
    const auto c = halting_cost(fam.make({theta}), kA, 2, 2000);
    const double s2 = std::pow(std::sin(theta), 2);
    EXPECT_NEAR(c.value, 2.0 + 1.0 / s2, 1e-9) << theta;
  }
}

TEST(HaltingCost, StepOperatorListCycles) {
  const auto aut = mixing_automaton(CMatrix::Identity(2, 2), {1}, {});
  const auto grid = configuration_grid(aut, 1);
  const LinearOp idle = LinearOp::identity(grid);
  const LinearOp flip(grid, rotation(std::numbers::pi / 2), OpContract::unitary);
  // Two idle steps, then the flip: t = 0, 1, 2 each miss the one halting vector.
  const auto c = halting_cost(aut, 1, {idle, idle, flip}, 10);
  EXPECT_TRUE(c.halted);
  EXPECT_EQ(c.steps, 3u);
  EXPECT_EQ(c.value, 3.0);
  EXPECT_THROW(halting_cost(aut, 1, {}, 10), DegenerateInputError);
}

TEST(Minimize, ListPicksHaltingAutomaton) {
  const auto slow = mixing_automaton(CMatrix::Identity(2, 2), {1}, {});
  const auto fast = mixing_automaton(rotation(std::numbers::pi / 2), {1}, {});
  MinimizeOptions o;
  o.tape_length = 2;
  const auto r = minimize_halting_cost(std::vector<Automaton>{slow, fast}, kA, o);
  EXPECT_EQ(r.index, 1u);
  EXPECT_TRUE(r.exhaustive);
  EXPECT_EQ(r.evaluations, 2u);
  EXPECT_THROW(minimize_halting_cost(std::vector<Automaton>{}, kA, o), DegenerateInputError);
}

TEST(Minimize, TiesGoToFirst) {
  const auto a = mixing_automaton(CMatrix::Identity(2, 2), {1}, {});
  MinimizeOptions o;
  const auto r = minimize_halting_cost(std::vector<Automaton>{a, a, a}, kA, o);
  EXPECT_EQ(r.index, 0u);
}

TEST(Minimize, RotationFamilyFindsScanOptimum) {
  MinimizeOptions o;
  o.tape_length = 2;
  o.seed = 3;
  const auto fam = rotation_family();
  const auto r = minimize_halting_cost(fam, kA, o);

  double best_theta = 0.0;
  double best_tau = std::numeric_limits<double>::infinity();
  const double hi = std::numbers::pi / 2;
  for (double theta = 0.0; theta <= hi + 1e-12; theta += 1e-4) {
    const double tau = halting_cost(fam.make({theta}), kA, 2, o.max_steps).value;
    if (tau < best_tau) {
      best_tau = tau;
      best_theta = theta;
    }
  }
  ASSERT_EQ(r.parameters.size(), 1u);
  EXPECT_NEAR(r.parameters[0], best_theta, 1e-3);
  EXPECT_NEAR(r.parameters[0], hi, 1e-3);
  EXPECT_LE(r.tau, best_tau + 1e-9);
  const auto again = minimize_halting_cost(fam, kA, o);
  EXPECT_EQ(again.parameters, r.parameters);
}
