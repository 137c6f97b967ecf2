#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "error.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"
#include "trainer.hpp"

namespace rpt {
namespace {

namespace fs = std::filesystem;
using testing::small_config;

AgentSlot rpt_slot() {
  AgentSlot slot;
  LearnerConfig cfg;
  cfg.hidden = {4};
  for (Algo k : pool_for(Mode::kRpt)) slot.pool.push_back(make_learner(k, 3, 5, cfg, 1));
  return slot;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::stringstream ss(testing::read_file(path));
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, kMetricsHeader);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(ss, line)) rows.push_back(split(line));
  return rows;
}

std::string learner_bytes(const Learner& l, const std::string& dir, const std::string& tag) {
  Archive ar;
  l.save(ar, "x");
  const std::string path = dir + "/" + tag + ".ckpt";
  ar.write(path);
  return testing::read_file(path);
}

TEST(MarkEpisodeEnd, Flags) {
  AgentSlot slot = rpt_slot();
  mark_episode_end(slot, true, false);
  EXPECT_TRUE(slot.switch_pending);
  slot.switch_pending = false;
  mark_episode_end(slot, false, true);
  EXPECT_TRUE(slot.switch_pending);
  slot.switch_pending = false;
  mark_episode_end(slot, false, false);
  EXPECT_FALSE(slot.switch_pending);
}

TEST(RotateIfPending, NotPendingUnchanged) {
  AgentSlot slot = rpt_slot();
  slot.active = 2;
  Rng rng(3);
  for (int i = 0; i < 100; ++i) rotate_if_pending(slot, rng);
  EXPECT_EQ(slot.active, 2);
}

TEST(RotateIfPending, ClearsFlag) {
  AgentSlot slot = rpt_slot();
  slot.switch_pending = true;
  Rng rng(4);
  rotate_if_pending(slot, rng);
  EXPECT_FALSE(slot.switch_pending);
  EXPECT_GE(slot.active, 0);
  EXPECT_LT(slot.active, 3);
}

TEST(RotateIfPending, SinglePoolNoop) {
  AgentSlot slot;
  slot.pool.push_back(make_learner(Algo::kPpo, 3, 5, LearnerConfig{}, 1));
  Rng rng(5);
  Rng untouched(5);
  for (int i = 0; i < 50; ++i) {
    slot.switch_pending = true;
    rotate_if_pending(slot, rng);
    EXPECT_EQ(slot.active, 0);
    EXPECT_FALSE(slot.switch_pending);
  }
  EXPECT_EQ(rng.save(), untouched.save());
}

TEST(RotateIfPending, UniformOverPool) {
  AgentSlot slot = rpt_slot();
  Rng rng(6);
  std::vector<std::int64_t> counts(3, 0);
  int repeats = 0;
  int prev = slot.active;
  for (int i = 0; i < 30000; ++i) {
    slot.switch_pending = true;
    rotate_if_pending(slot, rng);
    ++counts[slot.active];
    if (slot.active == prev) ++repeats;
    prev = slot.active;
  }
  for (auto c : counts) {
    EXPECT_GE(c / 30000.0, 0.315);
    EXPECT_LE(c / 30000.0, 0.352);
  }
  EXPECT_GT(testing::chi_square_uniform_p(counts), 0.001);
  // Redrawing the current learner is allowed, about a third of the time.
  EXPECT_NEAR(repeats / 30000.0, 1.0 / 3.0, 0.02);
}

TEST(AccountTimesteps, Examples) {
  const auto a = account_timesteps(Mode::kRpt, 1000, 2);
  EXPECT_EQ(a.agent_timesteps, 2000);
  EXPECT_DOUBLE_EQ(a.per_learner_share, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(account_timesteps(Mode::kIppo, 1000, 2).per_learner_share, 1.0);
  EXPECT_EQ(account_timesteps(Mode::kIppo, 0, 5).agent_timesteps, 0);
  EXPECT_EQ(account_timesteps(Mode::kDdqnSelfplay, 7, 3).agent_timesteps, 21);
}

TEST(PoolFor, Modes) {
  EXPECT_EQ(pool_for(Mode::kRpt), (std::vector<Algo>{Algo::kPpo, Algo::kA2c, Algo::kDqn}));
  EXPECT_EQ(pool_for(Mode::kIppo), std::vector<Algo>{Algo::kPpo});
  EXPECT_EQ(pool_for(Mode::kDdqnSelfplay), std::vector<Algo>{Algo::kDdqn});
}

TEST(Trainer, IppoRunsOnPpoOnly) {
  const std::string dir = testing::scratch_dir("ippo_2000");
  RunConfig cfg = small_config(Mode::kIppo, 7);
  cfg.output_dir = dir;
  Trainer t(cfg);
  t.run();
  EXPECT_GE(t.agent_timesteps(), 2000);
  const auto rows = read_rows(dir + "/metrics.csv");
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) EXPECT_EQ(r[5], "PPO");
  EXPECT_TRUE(fs::exists(dir + "/checkpoint.ckpt"));
  EXPECT_TRUE(fs::exists(dir + "/resolved_config.json"));
}

TEST(Trainer, IppoNeverBuildsOtherLearners) {
  Trainer t(small_config(Mode::kIppo, 8));
  for (const auto& slot : t.slots()) {
    ASSERT_EQ(slot.pool.size(), 1u);
    EXPECT_EQ(slot.pool[0]->kind(), Algo::kPpo);
    EXPECT_EQ(slot.find(Algo::kA2c), nullptr);
    EXPECT_EQ(slot.find(Algo::kDqn), nullptr);
  }
  const std::string dir = testing::scratch_dir("ippo_keys");
  t.write_checkpoint(dir + "/c.ckpt");
  const std::string text = testing::read_file(dir + "/c.ckpt");
  EXPECT_EQ(text.find("/A2C/"), std::string::npos);
  EXPECT_EQ(text.find("/DQN/"), std::string::npos);
}

TEST(Trainer, IppoAgentsHaveIndependentParameters) {
  Trainer t(small_config(Mode::kIppo, 9));
  const std::string dir = testing::scratch_dir("ippo_independent");
  EXPECT_NE(learner_bytes(*t.slots()[0].pool[0], dir, "a"),
            learner_bytes(*t.slots()[1].pool[0], dir, "b"));
}

TEST(Trainer, RptFirstEpisodeOnPpo) {
  for (std::uint64_t seed : {1, 2, 3}) {
    Trainer t(small_config(Mode::kRpt, seed));
    const EpisodeResult r = t.run_episode();
    for (Algo a : r.active) EXPECT_EQ(a, Algo::kPpo);
  }
}

TEST(Trainer, RotationOnlyAtEpisodeBoundaries) {
  RunConfig cfg = small_config(Mode::kRpt, 11, 6000);
  cfg.arena.episode_limit = 24;
  Trainer t(cfg);
  std::map<std::int64_t, std::vector<Algo>> first;
  int violations = 0;
  t.on_step = [&](const StepTrace& s) {
    auto [it, inserted] = first.emplace(s.episode, s.active);
    if (!inserted && it->second != s.active) ++violations;
  };
  std::vector<EpisodeResult> results;
  t.on_episode = [&](const EpisodeResult& r) { results.push_back(r); };
  t.run();
  EXPECT_EQ(violations, 0);
  ASSERT_EQ(results.size(), first.size());
  int changes = 0;
  for (std::size_t e = 0; e < results.size(); ++e) {
    EXPECT_EQ(results[e].active, first[e]);
    if (e > 0 && results[e].active != results[e - 1].active) ++changes;
  }
  EXPECT_GT(changes, 0);
  // Every episode ends in done or trunc, so every boundary draws.
  for (const auto& counts : t.selection_counts()) {
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    EXPECT_EQ(total, t.episodes() - 1);
  }
}

TEST(Trainer, InactiveLearnersUntouchedDuringEpisode) {
  RunConfig cfg = small_config(Mode::kRpt, 12);
  cfg.arena.episode_limit = 40;
  Trainer t(cfg);
  const std::string dir = testing::scratch_dir("inactive");
  for (int e = 0; e < 30; ++e) {
    std::vector<std::vector<std::string>> before(t.slots().size());
    for (std::size_t i = 0; i < t.slots().size(); ++i) {
      for (std::size_t k = 0; k < t.slots()[i].pool.size(); ++k) {
        before[i].push_back(learner_bytes(*t.slots()[i].pool[k], dir, "b"));
      }
    }
    const EpisodeResult r = t.run_episode();
    for (std::size_t i = 0; i < t.slots().size(); ++i) {
      const auto& slot = t.slots()[i];
      for (std::size_t k = 0; k < slot.pool.size(); ++k) {
        if (slot.pool[k]->kind() == r.active[i]) continue;
        EXPECT_EQ(learner_bytes(*slot.pool[k], dir, "a"), before[i][k])
            << "episode " << e << " slot " << i << " learner " << k;
      }
    }
  }
}

TEST(Trainer, MetricsTimestepInvariant) {
  const std::string dir = testing::scratch_dir("metrics_invariant");
  RunConfig cfg = small_config(Mode::kRpt, 13, 5000);
  cfg.output_dir = dir;
  Trainer t(cfg);
  t.run();
  const auto rows = read_rows(dir + "/metrics.csv");
  const int team = static_cast<int>(cfg.arena.team.size());
  ASSERT_EQ(rows.size() % team, 0u);
  std::int64_t cumulative = 0;
  for (std::size_t r = 0; r < rows.size(); r += team) {
    cumulative += std::stoll(rows[r][7]) * team;
    for (int i = 0; i < team; ++i) {
      const auto& row = rows[r + i];
      EXPECT_EQ(std::stoll(row[0]), static_cast<std::int64_t>(r / team));
      EXPECT_EQ(std::stoll(row[1]), cumulative);
      EXPECT_EQ(row[3], std::to_string(i));
      EXPECT_EQ(row[4], role_name(cfg.arena.team[i]));
      EXPECT_EQ(row[6], rows[r][6]);  // team return is shared
    }
  }
  EXPECT_EQ(cumulative, t.agent_timesteps());
  EXPECT_EQ(t.agent_timesteps(), t.env_steps() * team);
  // The budget stops the run at the first episode boundary past it.
  EXPECT_GE(cumulative, cfg.total_agent_timesteps);
  EXPECT_LT(cumulative - std::stoll(rows[rows.size() - 1][7]) * team,
            cfg.total_agent_timesteps);
}

TEST(Trainer, SameSeedByteIdentical) {
  for (Mode mode : {Mode::kIppo, Mode::kRpt, Mode::kDdqnSelfplay}) {
    // Same directory both times: the checkpoint embeds the output path.
    const std::string dir = testing::scratch_dir("det");
    RunConfig cfg = small_config(mode, 21, 3000);
    cfg.output_dir = dir;
    Trainer(cfg).run();
    const std::string metrics = testing::read_file(dir + "/metrics.csv");
    const std::string ckpt = testing::read_file(dir + "/checkpoint.ckpt");
    fs::remove_all(dir);
    Trainer(cfg).run();
    EXPECT_EQ(metrics, testing::read_file(dir + "/metrics.csv")) << mode_name(mode);
    EXPECT_TRUE(ckpt == testing::read_file(dir + "/checkpoint.ckpt")) << mode_name(mode);
  }
}

TEST(Trainer, DifferentSeedsDiffer) {
  const std::string a = testing::scratch_dir("seed_a");
  const std::string b = testing::scratch_dir("seed_b");
  RunConfig cfg = small_config(Mode::kRpt, 1);
  cfg.output_dir = a;
  Trainer(cfg).run();
  cfg.seed = 2;
  cfg.output_dir = b;
  Trainer(cfg).run();
  EXPECT_NE(testing::read_file(a + "/metrics.csv"), testing::read_file(b + "/metrics.csv"));
}

TEST(Trainer, PeriodicCheckpoints) {
  const std::string dir = testing::scratch_dir("periodic");
  RunConfig cfg = small_config(Mode::kIppo, 3, 3000);
  cfg.checkpoint_every = 2;
  cfg.output_dir = dir;
  Trainer t(cfg);
  std::int64_t last_even = -1;
  t.on_episode = [&](const EpisodeResult& r) {
    if ((r.episode + 1) % 2 == 0) last_even = r.episode + 1;
  };
  t.run();
  auto restored = Trainer::from_checkpoint(dir + "/checkpoint.ckpt");
  EXPECT_EQ(restored->episodes(), t.episodes());
  EXPECT_GE(last_even, 2);
}

TEST(Trainer, ResumeReproducesStraightRun) {
  for (Mode mode : {Mode::kRpt, Mode::kIppo, Mode::kDdqnSelfplay}) {
    const std::string straight = testing::scratch_dir("straight");
    const std::string split_dir = testing::scratch_dir("split");
    RunConfig cfg = small_config(mode, 31, 4000);
    cfg.checkpoint_every = 100000;
    cfg.output_dir = straight;
    Trainer(cfg).run();

    cfg.total_agent_timesteps = 2000;
    cfg.output_dir = split_dir;
    Trainer(cfg).run();
    auto resumed = Trainer::from_checkpoint(split_dir + "/checkpoint.ckpt");
    resumed->set_total_agent_timesteps(4000);
    resumed->run();
    EXPECT_EQ(testing::read_file(straight + "/metrics.csv"),
              testing::read_file(split_dir + "/metrics.csv"))
        << mode_name(mode);
  }
}

TEST(Trainer, ResumeFromOlderCheckpointTrimsLog) {
  const std::string straight = testing::scratch_dir("trim_straight");
  const std::string dir = testing::scratch_dir("trim");
  RunConfig cfg = small_config(Mode::kRpt, 41, 4000);
  cfg.checkpoint_every = 100000;
  cfg.output_dir = straight;
  Trainer(cfg).run();

  cfg.total_agent_timesteps = 2000;
  cfg.output_dir = dir;
  Trainer(cfg).run();
  fs::copy_file(dir + "/checkpoint.ckpt", dir + "/old.ckpt");
  auto ahead = Trainer::from_checkpoint(dir + "/checkpoint.ckpt");
  ahead->set_total_agent_timesteps(3000);
  ahead->run();

  auto resumed = Trainer::from_checkpoint(dir + "/old.ckpt");
  resumed->set_total_agent_timesteps(4000);
  resumed->set_output_dir(dir);
  resumed->run();
  EXPECT_EQ(testing::read_file(straight + "/metrics.csv"),
            testing::read_file(dir + "/metrics.csv"));
}

TEST(Trainer, CheckpointRoundTripIsExact) {
  const std::string dir = testing::scratch_dir("roundtrip");
  Trainer t(small_config(Mode::kRpt, 51, 3000));
  t.run();
  t.write_checkpoint(dir + "/a.ckpt");
  auto back = Trainer::from_checkpoint(dir + "/a.ckpt");
  back->write_checkpoint(dir + "/b.ckpt");
  EXPECT_EQ(testing::read_file(dir + "/a.ckpt"), testing::read_file(dir + "/b.ckpt"));

  const Archive a = Archive::read(dir + "/a.ckpt");
  const Archive b = Archive::read(dir + "/b.ckpt");
  ASSERT_EQ(a.array_count(), b.array_count());
  for (const auto& slot : back->slots()) {
    for (const auto& l : slot.pool) {
      const std::string p = "slot" + std::to_string(slot.id) + "/" +
                            std::string(algo_name(l->kind()));
      EXPECT_EQ(a.counter(p + "/own_step"), l->own_step());
      EXPECT_EQ(a.vector(p + "/scaler/mean"), l->scaler().mean());
    }
  }

  // Continuing both gives the same next episodes.
  for (int e = 0; e < 5; ++e) {
    const EpisodeResult x = t.run_episode();
    const EpisodeResult y = back->run_episode();
    EXPECT_EQ(x.team_return, y.team_return);
    EXPECT_EQ(x.length, y.length);
    EXPECT_EQ(x.active, y.active);
  }
}

TEST(Trainer, TruncatedCheckpointRejected) {
  const std::string dir = testing::scratch_dir("truncated");
  Trainer t(small_config(Mode::kRpt, 61, 1500));
  t.run();
  t.write_checkpoint(dir + "/full.ckpt");
  const std::string bytes = testing::read_file(dir + "/full.ckpt");
  for (std::size_t len : {std::size_t{0}, std::size_t{5}, bytes.size() / 3, bytes.size() / 2,
                          bytes.size() - 8, bytes.size() - 1}) {
    const std::string path = dir + "/cut.ckpt";
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(len));
    }
    try {
      Trainer::from_checkpoint(path);
      ADD_FAILURE() << "accepted a checkpoint cut to " << len << " bytes";
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
    }
  }
}

TEST(Trainer, ModeFixedByCheckpoint) {
  const std::string dir = testing::scratch_dir("mode_fixed");
  Trainer t(small_config(Mode::kIppo, 71, 500));
  t.run();
  t.write_checkpoint(dir + "/c.ckpt");
  EXPECT_EQ(Trainer::from_checkpoint(dir + "/c.ckpt")->config().mode, Mode::kIppo);
  EXPECT_THROW(Trainer::from_checkpoint(dir + "/missing.ckpt"), IoError);
}

TEST(Trainer, RejectsBadBudget) {
  RunConfig cfg = small_config(Mode::kIppo, 1);
  cfg.total_agent_timesteps = 0;
  EXPECT_THROW(Trainer{cfg}, ConfigError);
  Trainer t(small_config(Mode::kIppo, 1));
  EXPECT_THROW(t.set_total_agent_timesteps(-5), ConfigError);
}

TEST(Trainer, RptLearnerShareNearThird) {
  RunConfig cfg = small_config(Mode::kRpt, 81, 30000);
  cfg.arena.episode_limit = 32;
  Trainer t(cfg);
  t.run();
  for (const auto& slot : t.slots()) {
    std::int64_t total = 0;
    for (const auto& l : slot.pool) total += l->own_step();
    EXPECT_EQ(total, t.env_steps());
    for (const auto& l : slot.pool) {
      const double share = static_cast<double>(l->own_step()) / total;
      EXPECT_GT(share, 0.25) << algo_name(l->kind());
      EXPECT_LT(share, 0.42) << algo_name(l->kind());
    }
  }
}

}  // namespace
}  // namespace rpt
