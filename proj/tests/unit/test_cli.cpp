#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "../support.hpp"
#include "unpaired_sr/cli.hpp"
#include "unpaired_sr/param_store.hpp"

using namespace unpaired_sr;
using namespace unpaired_sr::testing;

namespace {

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "unpaired-sr");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::string tiny_config(const fs::path& root) {
    return "[data]\nlr_dir = \"" + (root / "corpus" / "lr").string() + "\"\nhr_dir = \"" +
           (root / "corpus" / "hr").string() + "\"\n" + R"(
[stage1]
batch = 2
patch_lr = 16
total_steps = 3
halve_every = 10
log_every = 1

[stage2]
batch = 2
patch_lr = 8
total_steps = 3
halve_every = 10
log_every = 1

[networks]
g_blocks = 1
g_channels = 8
d_lr_channels = 8
d_lr_layers = 2
sr_groups = 1
sr_blocks = 1
sr_channels = 8
sr_reduction = 2
d_hr_channels = 8
d_hr_layers = 2
d_ada_channels = 8
d_ada_layers = 1

[run]
seed = 3
)";
}

}  // namespace

TEST(Cli, SuperResolve64To256) {
    TempDir dir("cli_sr");
    auto t = Stage2Trainer(PairBank{{random_image(16, 16, 1)}, {random_image(64, 64, 1)}, ScaleFactor(4)},
                           ImageBank{{random_image(16, 16, 2)}}, tiny_stage2());
    write_checkpoint(t.state(), dir / "sr.ckpt");
    save_image(random_grid_image(64, 64, 3), dir / "in.png");
    EXPECT_EQ(cli({"super-resolve", (dir / "in.png").string(), (dir / "out.png").string(), "--checkpoint",
                   (dir / "sr.ckpt").string()}),
              0);
    const auto out = load_image(dir / "out.png");
    EXPECT_EQ(out.height(), 256);
    EXPECT_EQ(out.width(), 256);
    write_images(dir / "many", 2, 20, 24, 5);
    EXPECT_EQ(cli({"super-resolve", (dir / "many").string(), (dir / "many_out").string(), "--checkpoint",
                   (dir / "sr.ckpt").string(), "--tile", "16", "--overlap", "4"}),
              0);
    EXPECT_EQ(load_image(dir / "many_out" / "img_1.png").width(), 96);
    EXPECT_EQ(cli({"super-resolve", (dir / "in.png").string(), (dir / "o.png").string(), "--checkpoint",
                   (dir / "sr.ckpt").string(), "--tile", "4"}),
              1);
}

TEST(Cli, EvaluateDirectoryAgainstItself) {
    TempDir dir("cli_eval");
    write_images(dir / "a", 2, 32, 32, 4);
    ASSERT_EQ(cli({"evaluate", (dir / "a").string(), (dir / "a").string(), "--json", (dir / "r.json").string(),
                   "--csv", (dir / "r.csv").string()}),
              0);
    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    EXPECT_EQ(j["mean_ssim"].get<double>(), 1.0);
    EXPECT_EQ(j["infinite_psnr_count"].get<int64_t>(), 2);
    EXPECT_NE(slurp(dir / "r.csv").find("img_0.png"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    TempDir dir("cli_exit");
    std::ofstream(dir / "bad.cfg") << "[stage1]\nbatch = \"x\"\n";
    EXPECT_EQ(cli({"train-degrade", "-c", (dir / "bad.cfg").string()}), 1);
    EXPECT_EQ(cli({"train-degrade", "--set", "stage1.bogus=1"}), 1);
    EXPECT_EQ(cli({"no-such-command"}), 1);
    EXPECT_EQ(cli({"evaluate", (dir / "none").string(), (dir / "none").string()}), 2);
    EXPECT_EQ(cli({"super-resolve", "a.png", "b.png", "--checkpoint", (dir / "missing.ckpt").string()}), 2);
    EXPECT_EQ(cli({"--help"}), 0);
}

TEST(Cli, SmokeCorpusIsByteIdenticalForFixedSeed) {
    TempDir dir("cli_smoke");
    const std::vector<std::string> common{"--n", "6", "--hr-size", "32", "--seed", "9"};
    auto a = std::vector<std::string>{"make-smoke-corpus", "-o", (dir / "a").string()};
    auto b = std::vector<std::string>{"make-smoke-corpus", "-o", (dir / "b").string()};
    a.insert(a.end(), common.begin(), common.end());
    b.insert(b.end(), common.begin(), common.end());
    ASSERT_EQ(cli(a), 0);
    ASSERT_EQ(cli(b), 0);
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir / "a");
        EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / rel)) << rel;
        ++files;
    }
    EXPECT_GT(files, 12);
}

TEST(Cli, SplitCopiesDisjointSubsets) {
    TempDir dir("cli_split");
    write_images(dir / "src" / "hr", 6, 32, 32, 1);
    write_images(dir / "src" / "lr", 6, 8, 8, 100);
    ASSERT_EQ(cli({"split", "--in", (dir / "src").string(), "-o", (dir / "out").string(), "--non-overlapping",
                   "--n-prime", "4", "--seed", "2"}),
              0);
    const auto hr = list_images(dir / "out" / "hr");
    const auto lr = list_images(dir / "out" / "lr");
    EXPECT_EQ(hr.size(), 4u);
    EXPECT_EQ(lr.size(), 2u);
    for (const auto& h : hr) {
        for (const auto& l : lr) EXPECT_NE(h.filename(), l.filename());
    }
    EXPECT_EQ(cli({"split", "--in", (dir / "src").string(), "-o", (dir / "x").string(), "--n-prime", "4"}), 1);
}

TEST(Cli, PipelineRunsEndToEnd) {
    TempDir dir("cli_pipe");
    ASSERT_EQ(cli({"make-smoke-corpus", "-o", (dir / "corpus").string(), "--n", "6", "--hr-size", "64"}), 0);
    std::ofstream(dir / "run.cfg") << tiny_config(dir.path());
    const auto cfg = (dir / "run.cfg").string();
    const auto out = (dir / "run").string();
    ASSERT_EQ(cli({"train-degrade", "-c", cfg, "-o", out}), 0);
    EXPECT_TRUE(fs::exists(dir / "run" / "stage1.ckpt"));
    EXPECT_FALSE(slurp(dir / "run" / "stage1_log.jsonl").empty());
    ASSERT_EQ(cli({"synthesize-lr", "-c", cfg, "--set", "run.out_dir=" + out}), 0);
    EXPECT_TRUE(fs::exists(dir / "run" / "pairs" / "pairs.tsv"));
    ASSERT_EQ(cli({"train-sr", "-c", cfg, "-o", out}), 0);
    ASSERT_EQ(cli({"super-resolve", (dir / "corpus" / "lr").string(), (dir / "sr").string(), "--checkpoint",
                   (dir / "run" / "stage2.ckpt").string()}),
              0);
    EXPECT_EQ(load_image(list_images(dir / "sr").front()).height(), 64);
    ASSERT_EQ(cli({"train-sr", "-c", cfg, "-o", out, "--set", "stage2.ablation=l1_only"}), 0);
}
