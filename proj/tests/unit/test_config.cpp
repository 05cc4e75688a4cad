#include <gtest/gtest.h>

#include "unpaired_sr/config.hpp"

using namespace unpaired_sr;

namespace {

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse_config_text(text, "cfg.toml", overrides);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Config, Defaults) {
    const auto c = default_config();
    EXPECT_EQ(c.data.scale, 4);
    EXPECT_EQ(c.stage1.batch, 8);
    EXPECT_EQ(c.stage1.lr0, 1e-4);
    EXPECT_EQ(c.stage1.weights.w1, 2.0);
    EXPECT_EQ(c.stage1.weights.w3, 0.5);
    EXPECT_EQ(c.stage2.weights.lambda2, 0.1);
    EXPECT_EQ(c.stage2.weights.lambda4, 2.0);
    EXPECT_EQ(c.stage2.sr.n_groups, 5);
    EXPECT_EQ(c.border_crop(), 4);
    EXPECT_EQ(c.tiles().tile, 128);
    EXPECT_FALSE(config_keys().empty());
}

TEST(Config, ParsesAllValueKinds) {
    const auto c = parse_config_text(R"(
# comment
[data]
lr_dir = "corpus/lr"   # trailing comment
hr_dir = "corpus/hr"
scale = 2
augment = true

[stage1]
total_steps = 300
halve_every = 100

[stage2]
ablation = "no_ada"
total_steps = 10

[weights]
lambda2 = 0.001

[networks]
sr_tap = "after_shallow"
g_blocks = 3

[run]
seed = 42
)");
    EXPECT_EQ(c.data.lr_dir, "corpus/lr");
    EXPECT_EQ(c.data.scale, 2);
    EXPECT_EQ(c.stage2.sr.scale, 2);
    EXPECT_TRUE(c.stage1.augment);
    EXPECT_EQ(c.stage1.total_steps, 300);
    EXPECT_EQ(c.stage2.weights.lambda2, 0.001);
    EXPECT_EQ(c.stage1.weights.lambda2, 0.001);
    EXPECT_EQ(c.stage2.ablation, Ablation::no_ada);
    EXPECT_EQ(c.stage2.effective_weights().lambda4, 0.0);
    EXPECT_EQ(c.stage2.sr.tap.kind, TapKind::after_shallow);
    EXPECT_EQ(c.stage1.generator.n_res_blocks, 3);
    EXPECT_EQ(c.stage1.seed, 42u);
    EXPECT_EQ(c.stage2.seed, 42u);
}

TEST(Config, UnknownKeyNamesLine) {
    const auto e = error_of("[stage1]\nbatch = 4\nbogus = 1\n");
    EXPECT_TRUE(contains(e, "cfg.toml:3")) << e;
    EXPECT_TRUE(contains(e, "bogus")) << e;
    EXPECT_TRUE(contains(error_of("[nowhere]\n"), "cfg.toml:1"));
}

TEST(Config, TypeMismatchNamesLine) {
    const auto e = error_of("[stage1]\n\nbatch = \"eight\"\n");
    EXPECT_TRUE(contains(e, "cfg.toml:3")) << e;
    EXPECT_TRUE(contains(e, "batch")) << e;
    EXPECT_FALSE(error_of("[weights]\nw1 = 3\n").size());
    EXPECT_TRUE(contains(error_of("[data]\naugment = 1\n"), "augment"));
}

TEST(Config, InvariantViolationNamesLine) {
    const auto e = error_of("[stage2]\nbatch = 2\n\nlr0 = -1.0\n");
    EXPECT_TRUE(contains(e, ":4")) << e;
    EXPECT_TRUE(contains(e, "lr0")) << e;
    const auto w = error_of("[weights]\nw3 = -0.5\n");
    EXPECT_TRUE(contains(w, ":2")) << w;
    EXPECT_TRUE(contains(error_of("[data]\nscale = 5\n"), "scale"));
}

TEST(Config, SyntaxErrors) {
    EXPECT_TRUE(contains(error_of("[stage1]\nbatch 4\n"), ":2"));
    EXPECT_TRUE(contains(error_of("[stage1]\nbatch = 4\nbatch = 5\n"), ":3"));
    EXPECT_TRUE(contains(error_of("batch = 4\n"), ":1"));
    EXPECT_TRUE(contains(error_of("[data]\nlr_dir = \"unterminated\n"), ":2"));
}

TEST(Config, OverridesApplyInOrder) {
    const auto c = parse_config_text("[stage1]\nbatch = 4\n", "cfg", {"stage1.batch=6", "run.out_dir=out dir",
                                                                       "stage2.ablation=l1_only"});
    EXPECT_EQ(c.stage1.batch, 6);
    EXPECT_EQ(c.run.out_dir, "out dir");
    EXPECT_EQ(c.stage2.ablation, Ablation::l1_only);
    EXPECT_TRUE(contains(error_of("", {"stage1.nope=1"}), "--set"));
    EXPECT_TRUE(contains(error_of("", {"stage1batch=1"}), "--set"));
    EXPECT_TRUE(contains(error_of("", {"stage1.batch=0"}), "--set"));
}
