#include <cmath>

#include <gtest/gtest.h>

#include "unpaired_sr/losses.hpp"

using namespace unpaired_sr;

namespace {

const double kTwoLn2 = 2.0 * std::log(2.0);

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> values(const torch::Tensor& t) {
    auto c = t.to(torch::kFloat64).contiguous();
    return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// RaGAN written out term by term with explicit means.
double ragan_direct(const torch::Tensor& real, const torch::Tensor& fake, bool generator) {
    const auto r = values(real), f = values(fake);
    const double mr = mean(r), mf = mean(f);
    double a = 0.0, b = 0.0;
    for (double x : f) a += generator ? -std::log(sig(x - mr)) : -std::log(1.0 - sig(x - mr));
    for (double x : r) b += generator ? -std::log(1.0 - sig(x - mf)) : -std::log(sig(x - mf));
    return a / static_cast<double>(f.size()) + b / static_cast<double>(r.size());
}

}  // namespace

TEST(Losses, AdversarialLossesAtZeroLogits) {
    const auto z = torch::zeros({2, 1, 6, 6}, torch::kFloat64);
    EXPECT_NEAR(gan_loss(z, z, Side::discriminator).item<double>(), kTwoLn2, 1e-9);
    EXPECT_NEAR(gan_real_hr_loss(z, z, Side::discriminator).item<double>(), kTwoLn2, 1e-9);
    EXPECT_NEAR(ragan_loss(z, z, Side::generator).item<double>(), kTwoLn2, 1e-9);
    EXPECT_NEAR(ragan_loss(z, z, Side::discriminator).item<double>(), kTwoLn2, 1e-9);
    EXPECT_NEAR(adaptive_feature_loss(z, z, Side::generator).item<double>(), kTwoLn2, 1e-9);
    EXPECT_NEAR(adaptive_feature_loss(z, z, Side::discriminator).item<double>(), kTwoLn2, 1e-9);
    EXPECT_NEAR(gan_loss(z, z, Side::generator).item<double>(), std::log(2.0), 1e-9);
    const auto c = torch::full({2, 1, 6, 6}, 3.7, torch::kFloat64);
    EXPECT_NEAR(ragan_loss(c, c, Side::generator).item<double>(), kTwoLn2, 1e-9);
}

TEST(Losses, PerfectSeparationLimits) {
    const auto big = torch::full({1, 1, 4, 4}, 60.0, torch::kFloat64);
    EXPECT_LT(gan_loss(big, -big, Side::discriminator).item<double>(), 1e-20);
    EXPECT_GT(gan_loss(big, -big, Side::generator).item<double>(), 59.0);
    EXPECT_LT(ragan_loss(big, -big, Side::discriminator).item<double>(), 1e-20);
    EXPECT_GT(ragan_loss(big, -big, Side::generator).item<double>(), 100.0);
    EXPECT_TRUE(std::isfinite(gan_loss(big * 1e3, -big * 1e3, Side::generator).item<double>()));
}

TEST(Losses, RaganMatchesDirectFormula) {
    torch::manual_seed(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r = torch::randn({2, 1, 5, 5}, torch::kFloat64) * 2;
        const auto f = torch::randn({2, 1, 5, 5}, torch::kFloat64) * 2 + 0.5;
        EXPECT_NEAR(ragan_loss(r, f, Side::generator).item<double>(), ragan_direct(r, f, true), 1e-6);
        EXPECT_NEAR(ragan_loss(r, f, Side::discriminator).item<double>(), ragan_direct(r, f, false), 1e-6);
    }
}

TEST(Losses, GanMatchesDirectFormula) {
    torch::manual_seed(4);
    const auto r = torch::randn({3, 1, 4, 4}, torch::kFloat64);
    const auto f = torch::randn({3, 1, 4, 4}, torch::kFloat64);
    double d = 0.0, g = 0.0;
    for (double x : values(r)) d += -std::log(sig(x)) / 48.0;
    for (double x : values(f)) {
        d += -std::log(1.0 - sig(x)) / 48.0;
        g += -std::log(sig(x)) / 48.0;
    }
    EXPECT_NEAR(gan_loss(r, f, Side::discriminator).item<double>(), d, 1e-9);
    EXPECT_NEAR(gan_loss(r, f, Side::generator).item<double>(), g, 1e-9);
    // Feature adversary: generated features are the positive class for the discriminator.
    EXPECT_NEAR(adaptive_feature_loss(r, f, Side::discriminator).item<double>(),
                gan_loss(r, f, Side::discriminator).item<double>(), 1e-12);
    EXPECT_NEAR(adaptive_feature_loss(r, f, Side::generator).item<double>(),
                gan_loss(f, r, Side::discriminator).item<double>(), 1e-12);
}

TEST(Losses, ReconstructionLosses) {
    torch::manual_seed(5);
    const auto x = torch::rand({2, 3, 8, 8}), y = torch::rand({2, 3, 8, 8});
    EXPECT_EQ(cycle_loss(x, x, y, y).item<double>(), 0.0);
    EXPECT_NEAR(cycle_loss(x, x + 0.1, y, y + 0.1).item<double>(), 0.2, 1e-6);
    EXPECT_EQ(l1_content_loss(x, x).item<double>(), 0.0);
    EXPECT_NEAR(l1_content_loss(x + 0.25, x).item<double>(), 0.25, 1e-6);
    const auto a = torch::rand({2, 3, 8, 8}), b = torch::rand({2, 3, 8, 8});
    double s1 = 0.0, s2 = 0.0;
    const auto va = values(a), vb = values(b), vx = values(x), vy = values(y);
    for (size_t i = 0; i < va.size(); ++i) {
        s1 += std::abs(va[i] - vb[i]);
        s2 += std::abs(vx[i] - vy[i]);
    }
    const double n = static_cast<double>(va.size());
    EXPECT_NEAR(l1_content_loss(a, b).item<double>(), s1 / n, 1e-6);
    EXPECT_NEAR(cycle_loss(a, b, x, y).item<double>(), s1 / n + s2 / n, 1e-6);
    EXPECT_GT(l1_content_loss(a, b).item<double>(), 0.0);
    EXPECT_THROW(cycle_loss(x, x.narrow(2, 0, 4), y, y), ShapeError);
    EXPECT_THROW(l1_content_loss(x, x.narrow(3, 0, 4)), ShapeError);
}

TEST(Losses, NonNegativeOnRandomInputs) {
    torch::manual_seed(6);
    for (int i = 0; i < 10; ++i) {
        const auto r = torch::randn({1, 1, 6, 6}) * 5, f = torch::randn({1, 1, 6, 6}) * 5;
        for (Side s : {Side::generator, Side::discriminator}) {
            EXPECT_GE(gan_loss(r, f, s).item<double>(), 0.0);
            EXPECT_GE(ragan_loss(r, f, s).item<double>(), 0.0);
            EXPECT_GE(adaptive_feature_loss(r, f, s).item<double>(), 0.0);
        }
    }
}

TEST(Losses, NanLogitsRaise) {
    const auto z = torch::zeros({1, 1, 3, 3});
    auto n = z.clone();
    n[0][0][1][1] = std::nan("");
    EXPECT_THROW(gan_loss(z, n, Side::generator), NumericError);
    EXPECT_THROW(gan_loss(n, z, Side::discriminator), NumericError);
    EXPECT_THROW(ragan_loss(n, z, Side::generator), NumericError);
    EXPECT_THROW(adaptive_feature_loss(z, n, Side::generator), NumericError);
}

TEST(Objectives, Stage1Totals) {
    const auto one = torch::ones({});
    Stage1Components c{one, one, one};
    auto obj = stage1_objective(c, LossWeights{});
    EXPECT_EQ(obj.report.total, 4.5);
    EXPECT_EQ(obj.total.item<double>(), 4.5);
    EXPECT_EQ(obj.report.total, obj.report.recompute_total());
    ASSERT_EQ(obj.report.terms.size(), 3u);
    EXPECT_EQ(obj.report.terms[2].name, "cycle");

    LossWeights zero{0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(stage1_objective(c, zero).report.total, 0.0);

    LossWeights gan_only;
    gan_only.w2 = gan_only.w3 = 0.0;
    const auto rep = stage1_objective(Stage1Components{one, std::nullopt, std::nullopt}, gan_only).report;
    EXPECT_FALSE(rep.term("cycle").has_value());
    EXPECT_EQ(rep.total, 2.0);
    EXPECT_THROW(stage1_objective(Stage1Components{one, one, std::nullopt}, LossWeights{}), CompositionError);
}

TEST(Objectives, Stage2Totals) {
    const auto t = [](double v) { return torch::full({}, v, torch::kFloat64); };
    Stage2Components c{t(0.5), t(1.386), t(1.386), t(1.386)};
    const auto obj = stage2_objective(c, LossWeights{});
    EXPECT_NEAR(obj.report.total, 4.7966, 1e-12);
    EXPECT_EQ(obj.report.total, obj.report.recompute_total());
    EXPECT_NEAR(obj.total.item<double>(), obj.report.total, 1e-12);

    LossWeights l1_only;
    l1_only.lambda2 = l1_only.lambda3 = l1_only.lambda4 = 0.0;
    EXPECT_EQ(stage2_objective(c, l1_only).report.total, 0.5);
    const auto only = stage2_objective(Stage2Components{t(0.5), {}, {}, {}}, l1_only);
    EXPECT_EQ(only.report.terms.size(), 1u);
    EXPECT_EQ(only.report.total, 0.5);
    EXPECT_THROW(stage2_objective(Stage2Components{t(0.5), t(1), t(1), {}}, LossWeights{}), CompositionError);
}

TEST(Objectives, RandomTotalsRecomputeExactly) {
    torch::manual_seed(7);
    for (int i = 0; i < 20; ++i) {
        const auto r = torch::rand({4}, torch::kFloat64);
        const auto w = torch::rand({4}, torch::kFloat64);
        LossWeights lw;
        lw.lambda1 = w[0].item<double>();
        lw.lambda2 = w[1].item<double>();
        lw.lambda3 = w[2].item<double>();
        lw.lambda4 = w[3].item<double>();
        const auto rep = stage2_objective(Stage2Components{r[0], r[1], r[2], r[3]}, lw).report;
        EXPECT_EQ(rep.total, rep.recompute_total());
        EXPECT_EQ(rep, stage2_objective(Stage2Components{r[0], r[1], r[2], r[3]}, lw).report);
    }
}

TEST(Objectives, WeightValidation) {
    LossWeights w;
    EXPECT_NO_THROW(w.validate());
    w.lambda3 = -1;
    EXPECT_THROW(w.validate(), ConfigError);
    w.lambda3 = std::nan("");
    EXPECT_THROW(w.validate(), ConfigError);
}

TEST(Objectives, ReportJson) {
    LossReport r;
    r.step = 4;
    r.terms = {{"l1", 1.0, 0.5}, {"ada", 0.0, 1.2}};
    r.total = 0.5;
    r.diagnostics["lr"] = 1e-4;
    const auto j = r.to_json();
    EXPECT_EQ(j.dump(), R"({"step":4,"l1":0.5,"ada":1.2,"total":0.5,"lr":0.0001})");
}

TEST(AdaptiveLoss, ExtractorGradientAntisymmetricWhenStreamsMatch) {
    torch::manual_seed(8);
    // Linear feature discriminator; zero features sit at the zero-logit point.
    auto w = torch::randn({1, 8, 1, 1}, torch::kFloat64);
    auto feats = torch::zeros({2, 8, 5, 5}, torch::kFloat64);
    auto gen = feats.clone().requires_grad_(true);
    auto real = feats.clone().requires_grad_(true);
    const auto d = [&](const torch::Tensor& x) { return torch::conv2d(x, w); };
    const auto loss = adaptive_feature_loss(d(gen), d(real), Side::generator);
    EXPECT_NEAR(loss.item<double>(), kTwoLn2, 1e-12);
    loss.backward();
    EXPECT_GT(gen.grad().abs().max().item<double>(), 0.0);
    EXPECT_LT((gen.grad() + real.grad()).abs().max().item<double>(), 1e-15);
}
