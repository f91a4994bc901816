#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  std::string cmd = std::string(ATSC_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const char* name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kData = ATSC_TEST_DATA;

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("--no-such-flag"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("ingest --task xyz --domain laptops --in x"), 2);
  EXPECT_EQ(run("pretrain --domain laptops --corpus c --steps 0"), 2);
  EXPECT_EQ(run("report --bogus"), 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
  auto dir = scratch("atsc_cli_err");
  EXPECT_EQ(run("--out " + (dir / "x.jsonl").string() +
                " ingest --task atsc --domain laptops --in /no/such.xml"),
            1);
  EXPECT_EQ(run("run"), 1);  // no config
  EXPECT_EQ(run("--out " + dir.string() + " report"), 1);  // nothing to report
}

TEST(Cli, IngestWritesMetaFirst) {
  auto dir = scratch("atsc_cli_ingest");
  auto out = dir / "l.jsonl";
  ASSERT_EQ(run("--out " + out.string() + " ingest --task atsc --domain laptops --in " + kData +
                "/laptops_test.xml"),
            0);
  auto text = slurp(out);
  EXPECT_EQ(text.rfind("{\"_meta\":", 0), 0u);
  auto first = slurp(out);
  ASSERT_EQ(run("--out " + out.string() + " ingest --task atsc --domain laptops --in " + kData +
                "/laptops_test.xml"),
            0);
  EXPECT_EQ(slurp(out), first);
}

TEST(Cli, CorpusPretrainRunReport) {
  auto dir = scratch("atsc_cli_flow");
  {
    std::ofstream raw(dir / "reviews.jsonl");
    for (int i = 0; i < 30; ++i)
      raw << "{\"category\": \"Electronics\", \"text\": \"The battery life is great. The screen "
             "is dim.\"}\n{\"category\": \"Books\", \"text\": \"Nice plot.\"}\n";
  }
  auto corpus = dir / "laptops.txt";
  ASSERT_EQ(run("--out " + corpus.string() + " corpus --source " + (dir / "reviews.jsonl").string() +
                " --domain laptops --limit 10"),
            0);
  EXPECT_TRUE(fs::exists(corpus.string() + ".meta.json"));
  auto lines = slurp(corpus);
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 20);

  ASSERT_EQ(run("--out " + dir.string() + " pretrain --domain laptops --corpus " + corpus.string() +
                " --steps 5"),
            0);
  EXPECT_TRUE(fs::exists(dir / "pretrained" / "masked_lm-laptops.ckpt"));

  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"data": {"root": ")" << kData << R"(",
      "atsc": {"laptops": {"train": "laptops_train.xml", "test": "laptops_test.xml"}}},
      "tiny": {"embedding_dim": 8, "hidden_dim": 8},
      "schedule": {"epochs": 2},
      "grid": {"heads": ["nli", "baseline_nsp"], "templates": ["is"], "sizes": ["0", "16"],
               "domains": ["laptops"]}})";
  }
  auto out = dir / "out";
  ASSERT_EQ(run("--config " + (dir / "cfg.json").string() + " --out " + out.string() +
                " --seed-list 1,2 --workers 2 run"),
            0);
  EXPECT_TRUE(fs::exists(out / "index.json"));
  EXPECT_TRUE(fs::exists(out / "runs" / "nli.is.laptops-laptops.atsc.16.s2.json"));
  EXPECT_FALSE(fs::exists(out / "runs" / "nli.is.laptops-laptops.atsc.16.s13.json"));

  ASSERT_EQ(run("--out " + out.string() + " report"), 0);
  auto main_table = slurp(out / "tables" / "main.txt");
  EXPECT_NE(main_table.find("nli"), std::string::npos);
  ASSERT_EQ(run("--out " + out.string() + " report"), 0);
  EXPECT_EQ(slurp(out / "tables" / "main.txt"), main_table);
  EXPECT_EQ(run("--config " + (dir / "cfg.json").string() + " --seed-list 1,x run"), 1);
}
