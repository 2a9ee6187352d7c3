#include "ecg/errors.hpp"
#include "ecg/metrics.hpp"

#include "test_util.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace ecg;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

ConfusionMatrix diagonal(std::uint64_t n) {
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < kNumClasses; ++i)
        cm.counts[i][i] = n;
    return cm;
}

ConfusionMatrix random_matrix(Rng& rng) {
    ConfusionMatrix cm;
    for (auto& row : cm.counts)
        for (auto& v : row)
            v = uniform_below(rng, 50);
    return cm;
}

} // namespace

TEST(Confusion, Examples) {
    const std::vector<int> t{0, 1, 0}, p{0, 1, 1};
    const auto cm = confusion(t, p);
    EXPECT_EQ(cm.counts[0][0], 1u);
    EXPECT_EQ(cm.counts[1][1], 1u);
    EXPECT_EQ(cm.counts[0][1], 1u);
    EXPECT_EQ(cm.total(), 3u);
    EXPECT_EQ(confusion(std::vector<int>{}, std::vector<int>{}), ConfusionMatrix{});
    const std::vector<int> perfect{0, 1, 2, 3, 4, 4};
    const auto d = confusion(perfect, perfect);
    EXPECT_EQ(d.trace(), d.total());
}

TEST(Confusion, BadInput) {
    EXPECT_THROW(confusion(std::vector<int>{0, 1}, std::vector<int>{0}), InputError);
    EXPECT_THROW(confusion(std::vector<int>{5}, std::vector<int>{0}), InputError);
    EXPECT_THROW(confusion(std::vector<int>{0}, std::vector<int>{-1}), InputError);
}

TEST(Metrics, DiagonalIsPerfect) {
    const auto r = compute_metrics(diagonal(7));
    EXPECT_EQ(r.accuracy, 1.0);
    for (const auto& c : r.per_class) {
        EXPECT_EQ(c.sensitivity, 1.0);
        EXPECT_EQ(c.specificity, 1.0);
    }
    EXPECT_EQ(r.macro_sensitivity, 1.0);
    EXPECT_EQ(r.macro_specificity, 1.0);
}

TEST(Metrics, SensitivityDefinition) {
    ConfusionMatrix cm;
    cm.counts[2][2] = 9;
    cm.counts[2][0] = 1;
    cm.counts[0][0] = 10;
    const auto r = compute_metrics(cm);
    EXPECT_DOUBLE_EQ(*r.per_class[2].sensitivity, 0.9);
    EXPECT_EQ(r.per_class[2].tp, 9u);
    EXPECT_EQ(r.per_class[2].fn, 1u);
    EXPECT_FALSE(r.per_class[1].sensitivity.has_value());
    EXPECT_THROW(compute_metrics(ConfusionMatrix{}), InputError);
}

TEST(Metrics, IdentitiesOnRandomMatrices) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto cm = random_matrix(rng);
        const auto r = compute_metrics(cm);
        EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(cm.trace()) / static_cast<double>(cm.total()));
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const auto& m = r.per_class[c];
            EXPECT_EQ(m.tp + m.fn, cm.row_sum(c));
            EXPECT_EQ(m.tp + m.fp, cm.column_sum(c));
            EXPECT_EQ(m.tp + m.fp + m.fn + m.tn, cm.total());
            EXPECT_GE(m.accuracy, 0.0);
            EXPECT_LE(m.accuracy, 1.0);
        }
    }
}

TEST(Metrics, PermutationInvariance) {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto cm = random_matrix(rng);
        std::array<std::size_t, kNumClasses> perm{0, 1, 2, 3, 4};
        shuffle(std::span<std::size_t>(perm), rng);
        ConfusionMatrix pm;
        for (std::size_t i = 0; i < kNumClasses; ++i)
            for (std::size_t j = 0; j < kNumClasses; ++j)
                pm.counts[perm[i]][perm[j]] = cm.counts[i][j];
        const auto a = compute_metrics(cm), b = compute_metrics(pm);
        EXPECT_DOUBLE_EQ(a.accuracy, b.accuracy);
        EXPECT_NEAR(*a.macro_sensitivity, *b.macro_sensitivity, 1e-15);
        EXPECT_NEAR(*a.macro_specificity, *b.macro_specificity, 1e-15);
        for (std::size_t i = 0; i < kNumClasses; ++i)
            EXPECT_EQ(a.per_class[i].sensitivity, b.per_class[perm[i]].sensitivity);
    }
}

TEST(Metrics, TwoClassReductionMatchesHandFormulas) {
    ConfusionMatrix cm;
    cm.counts[0][0] = 40;  // TN for class 1
    cm.counts[0][1] = 10;  // FP
    cm.counts[1][0] = 5;   // FN
    cm.counts[1][1] = 45;  // TP
    const auto r = compute_metrics(cm);
    const auto& c1 = r.per_class[1];
    EXPECT_EQ(c1.tp, 45u);
    EXPECT_EQ(c1.tn, 40u);
    EXPECT_EQ(c1.fp, 10u);
    EXPECT_EQ(c1.fn, 5u);
    EXPECT_DOUBLE_EQ(*c1.sensitivity, 45.0 / 50.0);
    EXPECT_DOUBLE_EQ(*c1.specificity, 40.0 / 50.0);
    EXPECT_DOUBLE_EQ(c1.accuracy, 85.0 / 100.0);
    EXPECT_DOUBLE_EQ(*r.per_class[0].sensitivity, 40.0 / 50.0);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.85);
    // Classes 2..4 have no support: sensitivity undefined, specificity 1.
    EXPECT_DOUBLE_EQ(*r.macro_sensitivity, (0.9 + 0.8) / 2);
    EXPECT_DOUBLE_EQ(*r.macro_specificity, (0.9 + 0.8 + 1 + 1 + 1) / 5);
}

TEST(Report, FilesAndDeterminism) {
    const auto cm = diagonal(3);
    const auto report = compute_metrics(cm);
    TrainLog log;
    log.epochs.push_back({1, 0.5, 0.8, 0.75, 1.25});
    log.epochs.push_back({2, 0.25, 0.9, std::nullopt, 1.0});
    const auto a = ecg::testing::scratch_dir("report_a"), b = ecg::testing::scratch_dir("report_b");
    emit_report(report, cm, log, a);
    emit_report(report, cm, log, b);
    for (const char* f : {"confusion.csv", "metrics.json", "curves.csv"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;

    const auto csv = slurp(a / "confusion.csv");
    EXPECT_EQ(csv, "true\\predicted,NOR,LBBB,RBBB,APC,PVC\n"
                   "NOR,3,0,0,0,0\nLBBB,0,3,0,0,0\nRBBB,0,0,3,0,0\nAPC,0,0,0,3,0\nPVC,0,0,0,0,3\n");
    const auto j = nlohmann::json::parse(slurp(a / "metrics.json"));
    EXPECT_EQ(j.at("accuracy").get<double>(), report.accuracy);
    const auto curves = slurp(a / "curves.csv");
    EXPECT_EQ(curves.substr(0, curves.find('\n')), "epoch,train_loss,train_acc,test_acc,seconds");
    EXPECT_NE(curves.find("\n2,0.25,0.90000000000000002,,1\n"), std::string::npos) << curves;
}

TEST(Report, UndefinedRatesAreNull) {
    ConfusionMatrix cm;
    cm.counts[0][0] = 4;
    const auto j = nlohmann::json::parse(metrics_json(compute_metrics(cm), cm));
    EXPECT_TRUE(j.at("per_class").at("LBBB").at("sensitivity").is_null());
    EXPECT_FALSE(j.at("undefined").empty());
}
