#include <gtest/gtest.h>

#include "atsc/config.hpp"

using namespace atsc;
using nlohmann::json;

namespace {

EnvLookup no_env() {
  return [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
}

json mini() {
  return json::parse(R"({
    "data": {"atsc": {"laptops": {"train": "laptops_train.xml", "test": "laptops_test.xml"}}},
    "grid": {"heads": ["nli"], "sizes": ["0", 16], "domains": ["laptops"]}
  })");
}

}  // namespace

TEST(Config, DefaultsAndGrid) {
  auto c = project_config_from_json(mini(), ATSC_TEST_DATA, no_env());
  EXPECT_EQ(c.seeds, default_seeds());
  EXPECT_EQ(c.seeds.size(), 5u);
  ASSERT_EQ(c.grids.size(), 1u);
  EXPECT_EQ(c.grids[0].templates.size(), 3u);
  EXPECT_EQ(c.grids[0].schedule.epochs, 20u);
  EXPECT_TRUE(c.problems(true).empty());
  auto data = c.load_data();
  EXPECT_TRUE(data.has_test(Task::atsc, Domain::laptops));
}

TEST(Config, ListsEveryProblem) {
  auto j = mini();
  j["data"]["atsc"]["laptops"]["test"] = "nope.xml";
  j["grid"]["templates"] = {"missing"};
  j["grid"]["domains"] = {"restaurants"};
  j["seeds"] = json::array();
  auto c = project_config_from_json(j, ATSC_TEST_DATA, no_env());
  auto p = c.problems(true);
  EXPECT_GE(p.size(), 4u);
}

TEST(Config, DataRootFromEnvironment) {
  auto c = project_config_from_json(mini(), "/elsewhere", [](const std::string& k) {
    return k == kDataRootEnv ? std::optional<std::string>(ATSC_TEST_DATA) : std::nullopt;
  });
  EXPECT_EQ(c.data_root, std::filesystem::path(ATSC_TEST_DATA));
  EXPECT_TRUE(c.problems(true).empty());
}

TEST(Config, FingerprintIgnoresPathsAndWorkers) {
  auto a = mini(), b = mini();
  b["data"]["root"] = "/other";
  b["workers"] = 4;
  b["output_dir"] = "x";
  auto fa = project_config_from_json(a, ".", no_env()).fingerprint();
  EXPECT_EQ(fa, project_config_from_json(b, ".", no_env()).fingerprint());
  b["seeds"] = {1, 2};
  EXPECT_NE(fa, project_config_from_json(b, ".", no_env()).fingerprint());
  EXPECT_EQ(fa.size(), 16u);
}

TEST(Config, BadInputs) {
  EXPECT_THROW(project_config_from_json(json::array(), ".", no_env()), ConfigError);
  auto j = mini();
  j["grid"]["heads"] = {"gpt"};
  EXPECT_THROW(project_config_from_json(j, ".", no_env()), ConfigError);
  EXPECT_THROW(load_project_config("/no/such/config.json", no_env()), ConfigError);
}

TEST(Registry, EnvironmentBeatsConfig) {
  BackendRegistry r;
  BackendDescriptor nli{BackendFamily::nli, Provenance::generic, {}, {}};
  r.load(json::parse(R"([{"family": "nli", "provenance": "generic", "kind": "http", "url": "http://a:1"}])"));
  r.set_env_lookup([](const std::string&) { return std::nullopt; });
  EXPECT_EQ(r.resolve(nli)->url, "http://a:1");
  EXPECT_FALSE(r.independent(nli));
  r.set_env_lookup([](const std::string& k) {
    return k == "ATSC_BACKEND_NLI_GENERIC" ? std::optional<std::string>("http://b:2") : std::nullopt;
  });
  EXPECT_EQ(r.resolve(nli)->url, "http://b:2");
}

TEST(Registry, EnvNamesMostSpecificFirst) {
  BackendDescriptor d{BackendFamily::masked_lm, Provenance::domain_adapted, Domain::laptops, {}};
  auto names = BackendRegistry::env_names(d);
  ASSERT_FALSE(names.empty());
  EXPECT_EQ(names.front(), "ATSC_BACKEND_MASKED_LM_DOMAIN_ADAPTED_LAPTOPS");
  auto spec = BackendRegistry::parse_location("tiny:/x.ckpt", d);
  EXPECT_EQ(spec.kind, BackendSpec::Kind::tiny);
  EXPECT_EQ(spec.checkpoint, "/x.ckpt");
}

TEST(Registry, FallbackCanBeDisabled) {
  BackendRegistry r;
  r.set_env_lookup([](const std::string&) { return std::nullopt; });
  BackendDescriptor d{BackendFamily::nli, Provenance::generic, {}, {}};
  ProvisionContext pc{{"some text"}, {"good", "bad", "ok"}};
  EXPECT_NE(r.make(d, pc), nullptr);
  EXPECT_TRUE(r.independent(d));
  r.fresh_tiny_fallback = false;
  EXPECT_THROW(r.make(d, pc), ConfigError);
}
