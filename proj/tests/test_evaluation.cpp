#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "curves.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"
#include "trainer.hpp"

namespace rpt {
namespace {

// Always plays the same move.
class FixedMove : public Policy {
 public:
  FixedMove(int move, int obs_dim) : move_(move), obs_dim_(obs_dim) {}
  int act(const Vector& obs) const override {
    EXPECT_EQ(obs.size(), obs_dim_);
    return move_;
  }
  int observation_dim() const override { return obs_dim_; }

 private:
  int move_;
  int obs_dim_;
};

PolicyPtr fixed(int move, int dim = Arena::observation_dim(2)) {
  return std::make_shared<FixedMove>(move, dim);
}

std::string learner_bytes(const Learner& l, const std::string& path) {
  Archive ar;
  l.save(ar, "x");
  ar.write(path);
  return testing::read_file(path);
}

TEST(EvaluateMixedTeam, EpisodeCount) {
  const ArenaConfig arena;
  const auto configs = default_spawn_configs(arena);
  ASSERT_EQ(configs.size(), 4u);
  HeldoutPool pool{{Role::kObserver, fixed(kStay)}, {Role::kDrone, fixed(kLeft)}};
  const auto report =
      evaluate_mixed_team("stub", {fixed(kUp), fixed(kRight)}, pool, arena, configs, 5, 1);
  EXPECT_EQ(report.episodes.size(), 2u * 4u * 5u);
  ASSERT_EQ(report.per_slot.size(), 2u);
  for (const auto& s : report.per_slot) EXPECT_EQ(s.episodes, 20);
  // Slot-major, then config, then repeat.
  for (std::size_t i = 0; i < report.episodes.size(); ++i) {
    const auto& e = report.episodes[i];
    EXPECT_EQ(e.slot, static_cast<int>(i / 20));
    EXPECT_EQ(e.spawn_config, configs[(i / 5) % 4].id);
    EXPECT_EQ(e.repeat, static_cast<int>(i % 5));
    EXPECT_EQ(e.role, arena.team[e.slot]);
  }
}

TEST(EvaluateMixedTeam, HandTracedCaptureEpisodes) {
  // Drone one cell left of the target moves right and captures on the first
  // step before the target moves. Only the second config puts the observer
  // in range.
  ArenaConfig arena;
  const std::vector<SpawnConfig> configs = {
      {"far", {{0, 0}, {6, 7}}, {7, 7}},
      {"near", {{7, 9}, {6, 7}}, {7, 7}},
  };
  HeldoutPool pool{{Role::kObserver, fixed(kStay)}, {Role::kDrone, fixed(kRight)}};
  const auto report = evaluate_mixed_team(
      "scripted", {fixed(kStay), fixed(kRight)}, pool, arena, configs, 3, 99);
  const double far = -arena.step_penalty + arena.capture_reward;
  const double near = far + arena.observation_bonus;
  EXPECT_DOUBLE_EQ(far, 99.95);
  EXPECT_DOUBLE_EQ(near, 100.45);
  for (const auto& e : report.episodes) {
    EXPECT_EQ(e.length, 1);
    EXPECT_TRUE(e.captured);
    EXPECT_EQ(e.episode_return, e.spawn_config == "far" ? far : near);
  }
  EXPECT_DOUBLE_EQ(report.episode_return.mean, (far + near) / 2.0);
  EXPECT_EQ(report.capture_rate, 1.0);
}

TEST(EvaluateMixedTeam, HandTracedDrainedDrone) {
  // A drone without energy never moves and the observer stays far away, so
  // as long as the target never lands on the drone every step costs the
  // penalty and the episode truncates.
  ArenaConfig arena;
  arena.drone_energy = 0;
  arena.observer_radius = 0;
  arena.drone_radius = 0;
  arena.episode_limit = 30;
  const std::vector<SpawnConfig> configs = {{"c", {{0, 0}, {14, 14}}, {2, 12}}};
  HeldoutPool pool{{Role::kObserver, fixed(kStay)}, {Role::kDrone, fixed(kUp)}};
  const auto report =
      evaluate_mixed_team("drained", {fixed(kStay), fixed(kUp)}, pool, arena, configs, 4, 5);
  for (const auto& e : report.episodes) {
    // The target moves one cell per step, so 30 steps cannot cover the
    // distance of 12 to the drone and back to the observer more than once.
    if (e.captured) continue;
    EXPECT_EQ(e.length, 30);
    EXPECT_NEAR(e.episode_return, -0.05 * 30, 1e-12);
  }
}

TEST(EvaluateMixedTeam, IdentityWithPoolPolicy) {
  RunConfig cfg = testing::small_config(Mode::kDdqnSelfplay, 3, 3000);
  Trainer t(cfg);
  t.run();
  const HeldoutPool pool = heldout_pool_from(t);
  const auto configs = default_spawn_configs(cfg.arena);
  const std::vector<PolicyPtr> self = {pool.at(Role::kObserver), pool.at(Role::kDrone)};
  const auto report = evaluate_mixed_team("self", self, pool, cfg.arena, configs, 3, 17);
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < configs.size(); ++c) index[configs[c].id] = c;
  for (const auto& e : report.episodes) {
    const std::size_t c = index.at(e.spawn_config);
    const EvalEpisode pure =
        play_episode(self, cfg.arena, configs[c], derive_seed(17, e.slot, c, e.repeat));
    EXPECT_EQ(pure.episode_return, e.episode_return);
    EXPECT_EQ(pure.length, e.length);
  }
  // Both slots see the same composition, so per-slot results coincide.
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(report.episodes[i].spawn_config, report.episodes[i + 12].spawn_config);
  }
}

TEST(EvaluateMixedTeam, DeterministicAndReadOnly) {
  const std::string dir = testing::scratch_dir("eval_readonly");
  Trainer t(testing::small_config(Mode::kRpt, 4, 3000));
  t.run();
  const auto targets = frozen_policies(t, Algo::kPpo);
  Trainer d(testing::small_config(Mode::kDdqnSelfplay, 5, 1500));
  d.run();
  const HeldoutPool pool = heldout_pool_from(d);
  const auto& learner = static_cast<const FrozenPolicy&>(*targets[0]).learner();
  const std::string before = learner_bytes(learner, dir + "/before.ckpt");
  const auto configs = default_spawn_configs(ArenaConfig{});
  const auto a = evaluate_mixed_team("t", targets, pool, ArenaConfig{}, configs, 2, 8);
  const auto b = evaluate_mixed_team("t", targets, pool, ArenaConfig{}, configs, 2, 8);
  EXPECT_EQ(learner_bytes(learner, dir + "/after.ckpt"), before);
  ASSERT_EQ(a.episodes.size(), b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    EXPECT_EQ(a.episodes[i].episode_return, b.episodes[i].episode_return);
  }
  EXPECT_EQ(a.episode_return.low, b.episode_return.low);
  EXPECT_EQ(a.episode_return.high, b.episode_return.high);
}

TEST(EvaluateMixedTeam, DimensionMismatch) {
  const ArenaConfig arena;
  const auto configs = default_spawn_configs(arena);
  HeldoutPool pool{{Role::kObserver, fixed(kStay)}, {Role::kDrone, fixed(kStay)}};
  EXPECT_THROW(evaluate_mixed_team("bad", {fixed(kStay, 3), fixed(kStay)}, pool, arena,
                                   configs, 1, 0),
               ShapeError);
  HeldoutPool bad_pool{{Role::kObserver, fixed(kStay, 7)}, {Role::kDrone, fixed(kStay)}};
  EXPECT_THROW(evaluate_mixed_team("bad", {fixed(kStay), fixed(kStay)}, bad_pool, arena,
                                   configs, 1, 0),
               ShapeError);
  HeldoutPool partial{{Role::kObserver, fixed(kStay)}};
  EXPECT_THROW(evaluate_mixed_team("bad", {fixed(kStay), fixed(kStay)}, partial, arena,
                                   configs, 1, 0),
               UsageError);
  EXPECT_THROW(evaluate_mixed_team("bad", {fixed(kStay), fixed(kStay)}, pool, arena, configs,
                                   0, 0),
               UsageError);
}

TEST(BootstrapMeanCi, ConstantSample) {
  const auto ci = bootstrap_mean_ci(std::vector<double>(30, 4.25), 1);
  EXPECT_EQ(ci.mean, 4.25);
  EXPECT_EQ(ci.low, 4.25);
  EXPECT_EQ(ci.high, 4.25);
}

TEST(BootstrapMeanCi, MatchesNormalTheory) {
  Rng rng(2);
  std::vector<double> xs(400);
  for (double& x : xs) x = rng.uniform() * 10.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double half = 1.96 * std::sqrt(ss / (xs.size() - 1)) / std::sqrt(xs.size());
  const auto ci = bootstrap_mean_ci(xs, 3);
  EXPECT_DOUBLE_EQ(ci.mean, mean);
  EXPECT_LT(ci.low, mean);
  EXPECT_GT(ci.high, mean);
  EXPECT_NEAR(ci.high - ci.low, 2.0 * half, 0.15 * 2.0 * half);
  const auto again = bootstrap_mean_ci(xs, 3);
  EXPECT_EQ(again.low, ci.low);
  EXPECT_EQ(again.high, ci.high);
  EXPECT_THROW(bootstrap_mean_ci({}, 1), UsageError);
}

TEST(EvalCsv, Headers) {
  const std::string dir = testing::scratch_dir("eval_csv");
  const ArenaConfig arena;
  HeldoutPool pool{{Role::kObserver, fixed(kStay)}, {Role::kDrone, fixed(kStay)}};
  const auto report = evaluate_mixed_team("stub", {fixed(kStay), fixed(kStay)}, pool, arena,
                                          default_spawn_configs(arena), 2, 0);
  write_eval_csv(report, dir + "/e.csv");
  write_eval_summary_csv(report, dir + "/s.csv");
  std::stringstream e(testing::read_file(dir + "/e.csv"));
  std::string line;
  std::getline(e, line);
  EXPECT_EQ(line, "target,slot,role,spawn_config,repeat,return,length,captured");
  int rows = 0;
  while (std::getline(e, line)) ++rows;
  EXPECT_EQ(rows, 16);
  std::stringstream s(testing::read_file(dir + "/s.csv"));
  std::getline(s, line);
  EXPECT_EQ(line, "target,slot,role,episodes,mean_return,ci_low,ci_high,capture_rate");
  rows = 0;
  while (std::getline(s, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(HeldoutDdqn, TrainsRequestedRole) {
  RunConfig cfg = testing::small_config(Mode::kRpt, 6, 1500);
  HeldoutResult r = train_heldout_ddqn(Role::kDrone, cfg);
  EXPECT_EQ(r.trainer->config().mode, Mode::kDdqnSelfplay);
  const auto& frozen = static_cast<const FrozenPolicy&>(*r.policy);
  EXPECT_EQ(frozen.learner().kind(), Algo::kDdqn);
  const Learner* live = r.trainer->slots()[1].find(Algo::kDdqn);
  ASSERT_NE(live, nullptr);
  EXPECT_EQ(frozen.learner().own_step(), live->own_step());
  EXPECT_GE(r.trainer->agent_timesteps(), 1500);
}

TEST(HeldoutDdqn, EpsilonFollowsSchedule) {
  RunConfig cfg = testing::small_config(Mode::kDdqnSelfplay, 7, 1500);
  HeldoutResult r = train_heldout_ddqn(Role::kObserver, cfg);
  const auto* q = dynamic_cast<const QLearner*>(r.trainer->slots()[0].find(Algo::kDdqn));
  ASSERT_NE(q, nullptr);
  const EpsilonSchedule schedule{cfg.learner.epsilon_initial, cfg.learner.epsilon_final,
                                 cfg.learner.epsilon_timesteps};
  EXPECT_EQ(q->epsilon(), epsilon_at(schedule, q->own_step()));
  const double frac = static_cast<double>(q->own_step()) / cfg.learner.epsilon_timesteps;
  ASSERT_LT(frac, 1.0);
  EXPECT_NEAR(q->epsilon(),
              cfg.learner.epsilon_initial +
                  frac * (cfg.learner.epsilon_final - cfg.learner.epsilon_initial),
              1e-12);
}

// ---------------------------------------------------------------------------

std::vector<LoggedEpisode> synthetic_log(const std::vector<std::pair<std::int64_t, double>>& e) {
  std::vector<LoggedEpisode> out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    LoggedEpisode l;
    l.episode = static_cast<std::int64_t>(i);
    l.agent_timesteps = e[i].first;
    l.episode_return = e[i].second;
    out.push_back(l);
  }
  return out;
}

TEST(AggregateCurves, HandComputedBins) {
  // Bin width 100: (0,100] (100,200] (200,300].
  const auto a = synthetic_log({{40, 1.0}, {100, 3.0}, {150, 10.0}, {290, -2.0}});
  const auto b = synthetic_log({{90, 5.0}, {180, 20.0}, {260, 4.0}});
  const auto pts = aggregate_curves({a, b}, 100, 1, "x");
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].episodes, 3);
  EXPECT_DOUBLE_EQ(pts[0].mean_return, 3.0);
  EXPECT_DOUBLE_EQ(pts[0].agent_timesteps, 100.0);
  // Sample sd of {1, 3, 5} is 2.
  EXPECT_NEAR(pts[0].ci_high - pts[0].mean_return, 1.96 * 2.0 / std::sqrt(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(pts[1].mean_return, 15.0);
  EXPECT_DOUBLE_EQ(pts[2].mean_return, 1.0);
  EXPECT_DOUBLE_EQ(pts[2].agent_timesteps, 300.0);
  for (const auto& p : pts) EXPECT_EQ(p.label, "x");
}

TEST(AggregateCurves, DownsampleMergesBins) {
  std::vector<std::pair<std::int64_t, double>> eps;
  for (int bin = 0; bin < 9; ++bin) eps.push_back({bin * 100 + 50, static_cast<double>(bin)});
  const auto log = synthetic_log(eps);
  ASSERT_EQ(aggregate_curves({log}, 100, 1, "r").size(), 9u);
  const auto pts = aggregate_curves({log}, 100, 3, "r");
  ASSERT_EQ(pts.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(pts[k].episodes, 3);
    EXPECT_DOUBLE_EQ(pts[k].mean_return, 3.0 * k + 1.0);
    // 300 agent timesteps of the agent are 100 of one pooled learner.
    EXPECT_DOUBLE_EQ(pts[k].agent_timesteps, 100.0 * (k + 1));
  }
}

TEST(AggregateCurves, ConstantReturnsZeroWidth) {
  std::vector<std::pair<std::int64_t, double>> eps;
  for (int i = 1; i <= 50; ++i) eps.push_back({i * 37, 7.5});
  for (const auto& p : aggregate_curves({synthetic_log(eps)}, 200, 1, "c")) {
    EXPECT_EQ(p.mean_return, 7.5);
    EXPECT_EQ(p.ci_low, 7.5);
    EXPECT_EQ(p.ci_high, 7.5);
  }
}

TEST(AggregateCurves, TimestepsIncreaseAndCiOrdered) {
  Rng rng(4);
  std::vector<std::pair<std::int64_t, double>> eps;
  std::int64_t t = 0;
  for (int i = 0; i < 300; ++i) {
    t += 1 + static_cast<std::int64_t>(rng.uniform_int(500));
    eps.push_back({t, rng.uniform() * 100.0 - 50.0});
  }
  for (int k : {1, 3}) {
    const auto pts = aggregate_curves({synthetic_log(eps)}, 1000, k, "p");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_LE(pts[i].ci_low, pts[i].mean_return);
      EXPECT_LE(pts[i].mean_return, pts[i].ci_high);
      if (i > 0) EXPECT_GT(pts[i].agent_timesteps, pts[i - 1].agent_timesteps);
    }
  }
  EXPECT_THROW(aggregate_curves({}, 0, 1, "p"), UsageError);
  EXPECT_THROW(aggregate_curves({}, 10, 0, "p"), UsageError);
}

TEST(ParseMetricsCsv, CollapsesAgentRows) {
  const std::string text = std::string(kMetricsHeader) +
                           "\n0,4,a,0,observer,PPO,1.5,2,0\n0,4,a,1,drone,PPO,1.5,2,0\n"
                           "1,10,b,0,observer,A2C,99.95,3,1\n1,10,b,1,drone,DQN,99.95,3,1\n";
  const auto eps = parse_metrics_csv(text);
  ASSERT_EQ(eps.size(), 2u);
  EXPECT_EQ(eps[1].agent_timesteps, 10);
  EXPECT_EQ(eps[1].spawn_config, "b");
  EXPECT_TRUE(eps[1].captured);
  EXPECT_DOUBLE_EQ(eps[1].episode_return, 99.95);
}

TEST(ParseMetricsCsv, ErrorsNameLine) {
  const std::string header = std::string(kMetricsHeader) + "\n";
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"", "log.csv:1:"},
      {"bogus\n", "log.csv:1:"},
      {header + "0,4,a,0,observer,PPO,1.5,2,0\n0,4,a\n", "log.csv:3:"},
      {header + "0,x,a,0,observer,PPO,1.5,2,0\n", "log.csv:2:"},
      {header + "0,4,a,0,observer,PPO,1.5,2,7\n", "log.csv:2:"},
      {header + "0,4,a,0,observer,PPO,1.5,2,0\n0,4,a,1,drone,PPO,2.5,2,0\n", "log.csv:3:"},
      {header + "1,4,a,0,observer,PPO,1.5,2,0\n0,8,a,0,observer,PPO,1.5,2,0\n", "log.csv:3:"},
  };
  for (const auto& [text, where] : cases) {
    try {
      parse_metrics_csv(text, "log.csv");
      ADD_FAILURE() << "accepted: " << text;
    } catch (const FormatError& e) {
      EXPECT_EQ(std::string(e.what()).rfind(where, 0), 0u) << e.what();
    }
  }
}

TEST(CurvesCsv, RoundTripFromTrainer) {
  const std::string dir = testing::scratch_dir("curves_csv");
  RunConfig cfg = testing::small_config(Mode::kRpt, 9, 3000);
  cfg.output_dir = dir;
  Trainer(cfg).run();
  const auto eps = read_metrics_csv(dir + "/metrics.csv");
  const auto pts = aggregate_curves({eps}, 500, 3, "RPT");
  write_curves_csv(pts, dir + "/c.csv");
  std::stringstream ss(testing::read_file(dir + "/c.csv"));
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, kCurveHeader);
  int rows = 0;
  int total = 0;
  while (std::getline(ss, line)) {
    ++rows;
    EXPECT_EQ(line.rfind("RPT,", 0), 0u);
    total += std::stoi(line.substr(line.rfind(',') + 1));
  }
  EXPECT_EQ(rows, static_cast<int>(pts.size()));
  EXPECT_EQ(total, static_cast<int>(eps.size()));
  EXPECT_THROW(read_metrics_csv(dir + "/missing.csv"), IoError);
}

}  // namespace
}  // namespace rpt
