#include <doctest.h>

#include <string>
#include <vector>

#include "notekit/config.hpp"
#include "notekit/manifest.hpp"
#include "oracles.hpp"

using namespace notekit;
using namespace testkit;

TEST_SUITE_BEGIN("config");

TEST_CASE("values override defaults and comments are skipped") {
  auto config = Config::from_string(
      "# scoring study setup\n"
      "\n"
      "sim.n_raters = 50\n"
      "sim.seed=123\n"
      "scorer.lambda_intercept = 0.5\n"
      "  embedder.factor_dim = 16  \n"
      "run.rescore_interval_minutes = 15\n");

  auto sim = config.sim();
  CHECK(sim.n_raters == 50);
  CHECK(sim.seed == 123);
  CHECK(sim.n_notes == 150);       // untouched default
  CHECK(sim.display_jump == 1.4);  // untouched default

  auto scorer = config.scorer();
  CHECK(scorer.lambda_intercept == 0.5);
  CHECK(scorer.lambda_factor == 0.03);
  CHECK(scorer.thresholds.helpful_min_intercept == 0.40);
  CHECK(scorer.thresholds.not_helpful_max_intercept == -0.05);
  CHECK(scorer.thresholds.min_raters == 5);

  CHECK(config.embedder().factor_dim == 16);
  CHECK(config.rescore_interval() == 15LL * 60 * 1000);
  CHECK(config.bootstrap_samples() == 1000);
  CHECK(config.bootstrap_seed() == 99);

  auto empty = Config::from_string("");
  CHECK(empty.rescore_interval() == 60LL * 60 * 1000);
}

TEST_CASE("cluster mix parses as a comma list") {
  auto config = Config::from_string("sim.cluster_mix = 0.3, 0.3, 0.4\n");
  CHECK(config.sim().cluster_mix == std::vector<double>{0.3, 0.3, 0.4});
  auto bad = Config::from_string("sim.cluster_mix = 0.5, half\n");
  CHECK_THROWS_WITH_AS(bad.sim(), "sim.cluster_mix: not a number: half", ConfigError);
}

TEST_CASE("malformed input is rejected with the offending detail") {
  CHECK_THROWS_WITH_AS(Config::from_string("sim.n_raters\n"),
                       "config line 1: expected key=value", ConfigError);
  CHECK_THROWS_WITH_AS(Config::from_string("\n = 5\n"),
                       "config line 2: empty key", ConfigError);
  CHECK_THROWS_WITH_AS(Config::from_string("sim.bogus = 1\n"),
                       "unknown config key: sim.bogus", ConfigError);

  auto bad_number = Config::from_string("sim.base_rate = fast\n");
  CHECK_THROWS_WITH_AS(bad_number.sim(),
                       "config key sim.base_rate: not a number: fast", ConfigError);
  auto bad_integer = Config::from_string("sim.n_raters = 5.5\n");
  CHECK_THROWS_WITH_AS(bad_integer.sim(),
                       "config key sim.n_raters: not an integer: 5.5", ConfigError);
  auto bad_flag = Config::from_string("embedder.recompute_thresholds = maybe\n");
  CHECK_THROWS_WITH_AS(bad_flag.embedder(),
                       "config key embedder.recompute_thresholds: expected true/false: maybe",
                       ConfigError);
}

TEST_CASE("cross-field validation fires on the typed getters") {
  CHECK_THROWS_WITH_AS(
      Config::from_string("scorer.helpful_min_intercept = -0.2\n").scorer(),
      "helpful threshold must exceed the not-helpful threshold", ConfigError);
  CHECK_THROWS_WITH_AS(Config::from_string("scorer.min_raters = 0\n").scorer(),
                       "scorer.min_raters must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(
      Config::from_string("embedder.dissimilar_threshold = 0.2\n").embedder(),
      "dissimilar threshold must be below the similar threshold", ConfigError);
  CHECK_THROWS_WITH_AS(
      Config::from_string("embedder.min_corated_notes = 0\n").embedder(),
      "embedder minimums must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(
      Config::from_string("run.rescore_interval_minutes = 0\n").rescore_interval(),
      "run.rescore_interval_minutes must be positive", ConfigError);
  CHECK_THROWS_WITH_AS(
      Config::from_string("run.bootstrap_samples = 0\n").bootstrap_samples(),
      "run.bootstrap_samples must be >= 1", ConfigError);
  // Simulation limits come from the simulator's own validation.
  CHECK_THROWS_AS(Config::from_string("sim.horizon = 10\n").sim(),
                  std::invalid_argument);
}

TEST_CASE("hash is canonical over settings, not formatting") {
  auto a = Config::from_string("sim.seed = 5\nscorer.factor_dim = 1\n");
  auto b = Config::from_string(
      "# reordered and reformatted\n"
      "scorer.factor_dim=1\n"
      "\n"
      "sim.seed =   5\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);

  auto changed = Config::from_string("sim.seed = 6\nscorer.factor_dim = 1\n");
  CHECK(changed.hash() != a.hash());
  auto extra =
      Config::from_string("sim.seed = 5\nscorer.factor_dim = 1\nsim.horizon = 40\n");
  CHECK(extra.hash() != a.hash());
}

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("counterfactual policy parsing") {
  auto defaults = Config::from_string("").counterfactual_policy();
  CHECK(defaults.groups ==
        std::set<RaterClass>{RaterClass::Similar, RaterClass::Dissimilar});
  CHECK_FALSE(defaults.all_ratings);

  auto general =
      Config::from_string("counterfactual.groups = General\n").counterfactual_policy();
  CHECK(general.groups == std::set<RaterClass>{RaterClass::General});

  auto scoped = Config::from_string(
                    "counterfactual.groups = DISSIMILAR, similar\n"
                    "counterfactual.scope = all\n")
                    .counterfactual_policy();
  CHECK(scoped.groups ==
        std::set<RaterClass>{RaterClass::Similar, RaterClass::Dissimilar});
  CHECK(scoped.all_ratings);

  CHECK_THROWS_WITH_AS(
      Config::from_string("counterfactual.groups = everyone\n").counterfactual_policy(),
      "counterfactual.groups: unknown group: everyone", ConfigError);
  CHECK_THROWS_WITH_AS(
      Config::from_string("counterfactual.scope = sometimes\n").counterfactual_policy(),
      "counterfactual.scope must be post_display or all", ConfigError);
}

TEST_CASE("override_seed rewrites only the simulation seed") {
  auto config = Config::from_string("sim.seed = 1\nscorer.seed = 5\n");
  auto before = config.hash();
  config.override_seed(77);
  CHECK(config.sim().seed == 77);
  CHECK(config.scorer().seed == 5);
  CHECK(config.hash() != before);
}

TEST_CASE("load reads the same settings as from_string") {
  auto dir = fresh_dir("config_load");
  const std::string body = "sim.seed = 9\nsim.n_notes = 20\n";
  write_file(dir / "run.conf", body);
  auto loaded = Config::load(dir / "run.conf");
  CHECK(loaded.hash() == Config::from_string(body).hash());
  CHECK(loaded.sim().n_notes == 20);
  CHECK_THROWS_WITH(Config::load(dir / "absent.conf"),
                    doctest::Contains("cannot open config"));
}

TEST_CASE("manifest records replace stages in place") {
  RunManifest m;
  m.record({"simulate", {}, 10.0});
  m.record({"score", {}, 20.0});
  m.record({"simulate", {{"ratings.tsv", "abcd", 5}}, 30.0});
  REQUIRE(m.stages.size() == 2);
  CHECK(m.stages[0].name == "simulate");
  CHECK(m.stages[0].wall_ms == 30.0);
  CHECK(m.stages[0].outputs.size() == 1);
  CHECK(m.stages[1].name == "score");
  REQUIRE(m.stage("simulate") != nullptr);
  CHECK(m.stage("simulate")->wall_ms == 30.0);
  CHECK(m.stage("embed") == nullptr);
}

TEST_CASE("manifest survives a json round trip") {
  RunManifest m;
  m.run_id = "run-0042";
  m.config_hash = "cbf29ce484222325";
  m.input_digests["ratings.tsv"] = "1111aaaa2222bbbb";
  m.seeds["sim"] = 7;
  m.seeds["embedder"] = 11;
  StageRecord stage;
  stage.name = "score";
  stage.wall_ms = 123.5;
  stage.outputs.push_back({"scores.tsv", "deadbeefdeadbeef", 42});
  stage.outputs.push_back({"model.bin", "feedfacefeedface", -1});
  m.record(stage);

  auto dir = fresh_dir("manifest_roundtrip");
  m.save(dir / "manifest.json");
  auto loaded = RunManifest::load(dir / "manifest.json");
  CHECK(loaded.run_id == m.run_id);
  CHECK(loaded.config_hash == m.config_hash);
  CHECK(loaded.input_digests == m.input_digests);
  CHECK(loaded.seeds == m.seeds);
  REQUIRE(loaded.stages.size() == 1);
  CHECK(loaded.stages[0].name == "score");
  CHECK(loaded.stages[0].wall_ms == 123.5);
  REQUIRE(loaded.stages[0].outputs.size() == 2);
  CHECK(loaded.stages[0].outputs[0].path == "scores.tsv");
  CHECK(loaded.stages[0].outputs[0].digest == "deadbeefdeadbeef");
  CHECK(loaded.stages[0].outputs[0].rows == 42);
  CHECK(loaded.stages[0].outputs[1].rows == -1);
}

TEST_CASE("file digest tracks content, not location") {
  auto dir = fresh_dir("digest");
  write_file(dir / "a.txt", "abc");
  write_file(dir / "b.txt", "abc");
  write_file(dir / "c.txt", "abd");
  CHECK(file_digest(dir / "a.txt") == fnv1a_hex("abc"));
  CHECK(file_digest(dir / "a.txt") == file_digest(dir / "b.txt"));
  CHECK(file_digest(dir / "a.txt") != file_digest(dir / "c.txt"));
  CHECK_THROWS_WITH(file_digest(dir / "missing.txt"),
                    doctest::Contains("cannot digest missing file"));
}

TEST_SUITE_END();
