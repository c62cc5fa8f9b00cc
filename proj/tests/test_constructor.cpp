#include "principles/constructor.hpp"
#include "principles/error.hpp"

#include "oracles.hpp"
#include "synthetic_env.hpp"

#include <gtest/gtest.h>

using namespace principles;

namespace {

struct Env {
  explicit Env(ScriptedProviderConfig cfg) : scripted(std::move(cfg)), gateway(scripted) {}
  ScriptedGateway scripted;
  synthetic::CountingGateway gateway;
  PromptLibrary prompts = synthetic::prompts();
  CriticScales scales;
  Environment env() { return {gateway, prompts, scales}; }
};

ConstructionConfig one_turn() {
  ConstructionConfig cfg;
  cfg.critic.max_turns = 1;
  cfg.critic.sample_count = 2;
  cfg.episode_budget = 1;
  return cfg;
}

}  // namespace

TEST(Constructor, ProposeReturnsScriptedStrategy) {
  Env e(synthetic::revision_provider(0));
  SimulationContext ctx{e.gateway, e.prompts.for_domain(Domain::emotional_support())};
  DialogueState s(synthetic::plain_seeds(1)[0]);
  EXPECT_EQ(propose_strategy(ctx, s), "try approach alpha");
  EXPECT_NE(e.gateway.prompts_for("strategy")[0].find(serialize_state(s)), std::string::npos);
}

TEST(Constructor, RevisionPromptListsEveryFailedTrial) {
  Env e(synthetic::revision_provider(0));
  SimulationContext ctx{e.gateway, e.prompts.for_domain(Domain::emotional_support())};
  DialogueState s(synthetic::plain_seeds(1)[0]);
  EXPECT_THROW(revise_strategy(ctx, s, {}), Error);
  std::vector<Trial> failed;
  for (int i = 0; i < 3; ++i)
    failed.push_back({"strategy number " + std::to_string(i), Utterance(Role::agent, "a" + std::to_string(i), 1),
                      Utterance(Role::user, "u" + std::to_string(i), 1), -0.5});
  revise_strategy(ctx, s, failed);
  auto prompt = e.gateway.prompts_for("revision").back();
  for (const auto& t : failed) {
    EXPECT_NE(prompt.find(t.strategy), std::string::npos);
    EXPECT_NE(prompt.find(t.agent_utt.text), std::string::npos);
    EXPECT_NE(prompt.find(t.user_utt.text), std::string::npos);
  }
}

TEST(Constructor, SuccessDerivationNormalizesFourClauses) {
  ScriptedProviderConfig cfg;
  cfg.rules.push_back({"success_principle", ".*", {"When X, you should Y, rather than W, because Z."}, {}, {}});
  Env e(cfg);
  SimulationContext ctx{e.gateway, e.prompts.for_domain(Domain::emotional_support())};
  DialogueState s(synthetic::plain_seeds(1)[0]);
  Trial t{"Y", Utterance(Role::agent, "a", 1), Utterance(Role::user, "u", 1), 0.5};
  auto d = derive_success_principle(ctx, s, t);
  EXPECT_EQ(d.principle.provenance, Provenance::success);
  EXPECT_FALSE(d.principle.clauses.rather_than);
  EXPECT_EQ(d.warnings.size(), 1u);
  EXPECT_EQ(d.principle.when_embedding.size(), e.gateway.embedding_dimension());
}

TEST(Constructor, FailureDerivationRequiresRatherThan) {
  ScriptedProviderConfig cfg;
  cfg.rules.push_back({"failure_principle", ".*", {"When X, you should Y, because Z."}, {}, {}});
  Env e(cfg);
  SimulationContext ctx{e.gateway, e.prompts.for_domain(Domain::emotional_support())};
  DialogueState s(synthetic::plain_seeds(1)[0]);
  Trial ok{"Y", Utterance(Role::agent, "a", 1), Utterance(Role::user, "u", 1), 0.5};
  Trial bad{"W", Utterance(Role::agent, "b", 1), Utterance(Role::user, "v", 1), -0.5};
  try {
    derive_failure_principle(ctx, s, ok, {bad}, -0.5);
    FAIL();
  } catch (const Error& e2) {
    EXPECT_EQ(e2.code(), ErrorCode::parse);
  }
  EXPECT_EQ(e.gateway.calls("failure_principle"), 2);  // one re-ask
  EXPECT_THROW(derive_failure_principle(ctx, s, ok, {}, -0.5), Error);
}

TEST(Constructor, FailureDerivationSeesSuccessAndFailures) {
  Env e(synthetic::revision_provider(0));
  SimulationContext ctx{e.gateway, e.prompts.for_domain(Domain::emotional_support())};
  DialogueState s(synthetic::plain_seeds(1)[0]);
  Trial ok{"use the GOOD approach", Utterance(Role::agent, "good", 1), Utterance(Role::user, "yes", 1), 0.5};
  std::vector<Trial> failed{{"first", Utterance(Role::agent, "f1", 1), Utterance(Role::user, "n1", 1), -0.5},
                            {"second", Utterance(Role::agent, "f2", 1), Utterance(Role::user, "n2", 1), -0.5}};
  auto d = derive_failure_principle(ctx, s, ok, failed, -0.5);
  EXPECT_EQ(d.principle.provenance, Provenance::revision);
  EXPECT_EQ(*d.principle.clauses.rather_than, "first");
  EXPECT_EQ(d.principle.source.seed_id, "seed-0");
  EXPECT_EQ(d.principle.source.turn_index, 1);
  auto prompt = e.gateway.prompts_for("failure_principle")[0];
  for (const char* s2 : {"use the GOOD approach", "first", "second", "f2"}) EXPECT_NE(prompt.find(s2), std::string::npos);
}

TEST(Constructor, RevisionSucceedsAndBacktracks) {
  Env e(synthetic::revision_provider(3));
  auto seeds = synthetic::plain_seeds(1);
  auto result = construct(e.env(), seeds, one_turn());
  ASSERT_EQ(result.logs.size(), 1u);
  const auto& turn = result.logs[0].turns.at(0);
  EXPECT_TRUE(turn.status);
  EXPECT_EQ(turn.failed_trials.size(), 2u);
  ASSERT_TRUE(turn.initial);
  EXPECT_EQ(turn.accepted.strategy, "use the GOOD approach");
  ASSERT_EQ(result.store.size(), 1u);
  EXPECT_EQ(result.store.at(0).provenance, Provenance::revision);
  EXPECT_EQ(turn.derived_principle_id, result.store.at(0).id);
  EXPECT_EQ(e.gateway.calls("revision"), 3);
}

TEST(Constructor, AlwaysFailKeepsOriginalTurn) {
  Env e(synthetic::revision_provider(0));
  auto result = construct(e.env(), synthetic::plain_seeds(1), one_turn());
  const auto& turn = result.logs[0].turns.at(0);
  EXPECT_FALSE(turn.status);
  EXPECT_EQ(turn.failed_trials.size(), 3u);
  EXPECT_EQ(turn.accepted.strategy, "try approach alpha");
  EXPECT_FALSE(turn.derived_principle_id);
  EXPECT_EQ(result.store.size(), 0u);
  EXPECT_EQ(e.gateway.calls("revision"), 3);
}

TEST(Constructor, ZeroRevisionsSkipsRevision) {
  Env e(synthetic::revision_provider(0));
  auto cfg = one_turn();
  cfg.max_revisions = 0;
  auto result = construct(e.env(), synthetic::plain_seeds(1), cfg);
  EXPECT_EQ(e.gateway.calls("revision"), 0);
  EXPECT_TRUE(result.logs[0].turns[0].failed_trials.empty());
}

TEST(Constructor, EveryRevisionStartsFromThePreFailureState) {
  Env e(synthetic::revision_provider(3));
  auto seeds = synthetic::plain_seeds(1);
  construct(e.env(), seeds, one_turn());
  auto prompts = e.gateway.prompts_for("agent");
  ASSERT_EQ(prompts.size(), 4u);
  auto transcript = serialize_state(DialogueState(seeds[0]));
  for (const auto& p : prompts) EXPECT_NE(p.find("Conversation so far:\n" + transcript), std::string::npos);
}

TEST(Constructor, PrincipleCountEqualsSuccessTurns) {
  Env e(synthetic::efficacy_provider(5));
  ConstructionConfig cfg;
  cfg.critic.sample_count = 1;
  cfg.episode_budget = 10;
  auto result = construct(e.env(), synthetic::family_seeds(2, 0), cfg);
  std::size_t successes = 0;
  for (const auto& log : result.logs) {
    EXPECT_EQ(log.total_turns(), static_cast<int>(log.turns.size()));
    for (const auto& t : log.turns) {
      successes += t.status;
      EXPECT_LE(t.failed_trials.size(), 3u);
      EXPECT_EQ(t.status, t.derived_principle_id.has_value());
      if (t.status) EXPECT_GT(t.accepted.reward, t.previous_reward);
    }
  }
  EXPECT_EQ(result.store.size(), successes);
  EXPECT_GT(successes, 0u);
}

TEST(Constructor, WorkersDoNotChangeOutput) {
  auto run = [](int workers) {
    Env e(synthetic::efficacy_provider(9));
    ConstructionConfig cfg;
    cfg.critic.sample_count = 1;
    cfg.episode_budget = 10;
    cfg.workers = workers;
    auto r = construct(e.env(), synthetic::family_seeds(2, 0), cfg);
    std::string out;
    for (const auto& p : r.store.snapshot()) out += p.id + render_principle(p) + p.created_at + "\n";
    return out;
  };
  EXPECT_EQ(run(1), run(3));
}

TEST(Constructor, SampleEpisodesIsSeededPermutation) {
  auto a = sample_episodes(10, 10, 42, false);
  auto b = sample_episodes(10, 10, 42, false);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(sample_episodes(10, 10, 43, false), a);
  EXPECT_THROW(sample_episodes(3, 5, 0, false), Error);
  EXPECT_EQ(sample_episodes(3, 5, 0, true).size(), 5u);
}

TEST(Constructor, GatewayFailureAbortsOnlyThatEpisode) {
  ScriptedProviderConfig cfg;  // no rules: every call is rejected
  Env e(cfg);
  ConstructionConfig c;
  c.episode_budget = 2;
  auto result = construct(e.env(), synthetic::plain_seeds(2), c);
  ASSERT_EQ(result.logs.size(), 2u);
  for (const auto& log : result.logs) {
    EXPECT_EQ(log.outcome, EpisodeOutcome::aborted);
    ASSERT_TRUE(log.error);
    EXPECT_NE(log.error->find("rejected"), std::string::npos);
  }
  EXPECT_EQ(result.summary.aborted, 2);
}

TEST(Constructor, LogicalClockIsSequential) {
  auto clock = logical_clock();
  EXPECT_EQ(clock(), "1970-01-01T00:00:01Z");
  EXPECT_EQ(clock(), "1970-01-01T00:00:02Z");
}
