#include "ecg/errors.hpp"
#include "ecg/nn.hpp"
#include "ecg/optimizer.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ecg;
using ecg::testing::away_from_zero;
using ecg::testing::max_relative_error;
using ecg::testing::numeric_gradient;
using ecg::testing::project;
using ecg::testing::random_tensor;
using DT = BasicTensor<double>;

namespace {

// Straight loops over the output positions, with explicit bounds checks in
// place of padding.
DT oracle_conv(const DT& x, const DT& w, const DT& b, std::size_t stride, std::size_t pad) {
    const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    const std::size_t O = w.dim(0), K = w.dim(2);
    const long out_len = (static_cast<long>(L + 2 * pad) - static_cast<long>(K)) / static_cast<long>(stride) + 1;
    DT y({B, O, static_cast<std::size_t>(out_len)});
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t o = 0; o < O; ++o)
            for (long i = 0; i < out_len; ++i) {
                double s = b[o];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t m = 0; m < K; ++m) {
                        const long src = i * static_cast<long>(stride) + static_cast<long>(m) - static_cast<long>(pad);
                        if (src >= 0 && src < static_cast<long>(L))
                            s += w.at(o, c, m) * x.at(n, c, static_cast<std::size_t>(src));
                    }
                y.at(n, o, static_cast<std::size_t>(i)) = s;
            }
    return y;
}

DT oracle_pool(const DT& x, std::size_t window, std::size_t stride) {
    const std::size_t out_len = (x.dim(2) - window) / stride + 1;
    DT y({x.dim(0), x.dim(1), out_len});
    for (std::size_t n = 0; n < x.dim(0); ++n)
        for (std::size_t c = 0; c < x.dim(1); ++c)
            for (std::size_t i = 0; i < out_len; ++i) {
                double m = -INFINITY;
                for (std::size_t r = 0; r < window; ++r)
                    m = std::max(m, x.at(n, c, i * stride + r));
                y.at(n, c, i) = m;
            }
    return y;
}

// Distinct values at least `gap` apart inside every tensor, so max pooling
// never sees a near tie.
DT distinct_values(Rng& rng, std::vector<std::size_t> shape, double gap = 0.01) {
    DT t(std::move(shape));
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = gap * static_cast<double>(i) - 0.5 * gap * static_cast<double>(v.size());
    shuffle(std::span<double>(v), rng);
    std::copy(v.begin(), v.end(), t.values().begin());
    return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(uniform_below(rng, hi - lo + 1));
}

} // namespace

TEST(Conv, IdentityKernel) {
    const Tensor x({1, 1, 4}, std::vector<float>{1, 1, 1, 1});
    const Tensor w({1, 1, 3}, std::vector<float>{0, 1, 0});
    const Tensor b({1}, 0.0f);
    const auto y = conv1d_forward(x, w, b, {1, 1});
    EXPECT_EQ(y, Tensor({1, 1, 4}, std::vector<float>{1, 1, 1, 1}));
}

TEST(Conv, DifferenceKernel) {
    const Tensor x({1, 1, 4}, std::vector<float>{1, 2, 3, 4});
    const Tensor w({1, 1, 3}, std::vector<float>{1, 0, -1});
    const auto y = conv1d_forward(x, w, Tensor({1}, 0.0f), {1, 0});
    EXPECT_EQ(y, Tensor({1, 1, 2}, std::vector<float>{-2, -2}));
}

TEST(Conv, ExhaustiveSmallShapesMatchOracle) {
    Rng rng(1);
    for (std::size_t L = 1; L <= 16; ++L)
        for (std::size_t K = 1; K <= 7; ++K)
            for (std::size_t stride = 1; stride <= 3; ++stride)
                for (std::size_t pad = 0; pad <= 3; ++pad) {
                    if (L + 2 * pad < K)
                        continue;
                    const auto x = random_tensor(rng, {2, 2, L});
                    const auto w = random_tensor(rng, {3, 2, K});
                    const auto b = random_tensor(rng, {3});
                    const auto y = conv1d_forward(x, w, b, {stride, pad});
                    const auto o = oracle_conv(x, w, b, stride, pad);
                    ASSERT_EQ(y.shape(), o.shape()) << L << ' ' << K << ' ' << stride << ' ' << pad;
                    EXPECT_EQ(y.shape()[2], conv_output_length(L, K, {stride, pad}));
                    for (std::size_t i = 0; i < y.size(); ++i)
                        ASSERT_NEAR(y[i], o[i], 1e-12);
                }
}

TEST(Conv, ShapeErrors) {
    const Tensor x({1, 2, 8});
    EXPECT_THROW(conv1d_forward(x, Tensor({3, 1, 3}), Tensor({3}), {1, 0}), ShapeError);
    EXPECT_THROW(conv1d_forward(x, Tensor({3, 2, 3}), Tensor({2}), {1, 0}), ShapeError);
    EXPECT_THROW(conv1d_forward(x, Tensor({3, 2, 11}), Tensor({3}), {1, 1}), ShapeError);
}

TEST(Conv, GradientsMatchFiniteDifferences) {
    Rng rng(2);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t B = pick(rng, 1, 3), C = pick(rng, 1, 3), O = pick(rng, 1, 4);
        const std::size_t K = pick(rng, 1, 7), stride = pick(rng, 1, 3), pad = pick(rng, 0, K / 2);
        const std::size_t L = pick(rng, K, 20);
        const ConvGeometry g{stride, pad};
        auto x = random_tensor(rng, {B, C, L});
        auto w = random_tensor(rng, {O, C, K});
        auto b = random_tensor(rng, {O});
        const auto r = random_tensor(rng, conv1d_forward(x, w, b, g).shape());
        auto loss = [&] { return project(conv1d_forward(x, w, b, g), r); };
        const auto grads = conv1d_backward(x, w, r, g);
        EXPECT_LT(max_relative_error(grads.dx, numeric_gradient(x, loss, 1e-3)), 1e-4);
        EXPECT_LT(max_relative_error(grads.dw, numeric_gradient(w, loss, 1e-3)), 1e-4);
        EXPECT_LT(max_relative_error(grads.db, numeric_gradient(b, loss, 1e-3)), 1e-4);
    }
}

TEST(Relu, Definition) {
    const Tensor x({3}, std::vector<float>{-1, 0, 2});
    EXPECT_EQ(relu_forward(x), Tensor({3}, std::vector<float>{0, 0, 2}));
    const Tensor dy({3}, std::vector<float>{5, 5, 5});
    EXPECT_EQ(relu_backward(x, dy), Tensor({3}, std::vector<float>{0, 0, 5}));
}

TEST(Relu, AllNegative) {
    const Tensor x({2, 4}, -3.0f);
    EXPECT_EQ(relu_forward(x), Tensor({2, 4}, 0.0f));
    EXPECT_EQ(relu_backward(x, Tensor({2, 4}, 1.0f)), Tensor({2, 4}, 0.0f));
}

TEST(Relu, GradientAwayFromZero) {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        auto x = away_from_zero(rng, {pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 12)});
        const auto r = random_tensor(rng, x.shape());
        auto loss = [&] { return project(relu_forward(x), r); };
        EXPECT_LT(max_relative_error(relu_backward(x, r), numeric_gradient(x, loss, 1e-3)), 1e-4);
    }
}

TEST(Pool, Definition) {
    const Tensor x({1, 1, 4}, std::vector<float>{1, 3, 2, 5});
    const auto p = maxpool1d_forward(x, {2, 2});
    EXPECT_EQ(p.y, Tensor({1, 1, 2}, std::vector<float>{3, 5}));
}

TEST(Pool, TiesRouteToFirstIndex) {
    const Tensor x({1, 1, 6}, 2.0f);
    const auto p = maxpool1d_forward(x, {2, 2});
    EXPECT_EQ(p.y, Tensor({1, 1, 3}, 2.0f));
    const auto dx = maxpool1d_backward(Tensor({1, 1, 3}, 1.0f), p.argmax, x.shape());
    EXPECT_EQ(dx, Tensor({1, 1, 6}, std::vector<float>{1, 0, 1, 0, 1, 0}));
}

TEST(Pool, ExhaustiveSmallShapesMatchBruteForce) {
    Rng rng(4);
    for (std::size_t L = 1; L <= 16; ++L)
        for (std::size_t window = 1; window <= L; ++window)
            for (std::size_t stride = 1; stride <= 4; ++stride) {
                const auto x = random_tensor(rng, {2, 2, L});
                const auto p = maxpool1d_forward(x, {window, stride});
                EXPECT_EQ(p.y, oracle_pool(x, window, stride)) << L << ' ' << window << ' ' << stride;
            }
}

TEST(Pool, WindowLongerThanInput) {
    EXPECT_THROW(maxpool1d_forward(Tensor({1, 1, 3}), {4, 1}), ShapeError);
}

TEST(Pool, GradientWithoutTies) {
    Rng rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t window = pick(rng, 1, 4), stride = pick(rng, 1, 3);
        auto x = distinct_values(rng, {pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, window, 16)});
        const PoolSpec s{window, stride};
        const auto p = maxpool1d_forward(x, s);
        const auto r = random_tensor(rng, p.y.shape());
        auto loss = [&] { return project(maxpool1d_forward(x, s).y, r); };
        const auto dx = maxpool1d_backward(r, p.argmax, x.shape());
        EXPECT_LT(max_relative_error(dx, numeric_gradient(x, loss, 1e-3)), 1e-4);
    }
}

TEST(Dense, IdentityAndHandExample) {
    const Tensor x({1, 2}, std::vector<float>{1, 2});
    const Tensor eye({2, 2}, std::vector<float>{1, 0, 0, 1});
    EXPECT_EQ(fully_connected_forward(x, eye, Tensor({2}, 0.0f)), x);
    const Tensor w({2, 2}, std::vector<float>{1, 1, 0, 1});
    const Tensor b({2}, std::vector<float>{0, 1});
    EXPECT_EQ(fully_connected_forward(x, w, b), Tensor({1, 2}, std::vector<float>{3, 3}));
    EXPECT_THROW(fully_connected_forward(Tensor({1, 3}), w, b), ShapeError);
}

TEST(Dense, GradientsMatchFiniteDifferences) {
    Rng rng(6);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t B = pick(rng, 1, 4), I = pick(rng, 1, 12), O = pick(rng, 1, 8);
        auto x = random_tensor(rng, {B, I});
        auto w = random_tensor(rng, {O, I});
        auto b = random_tensor(rng, {O});
        const auto r = random_tensor(rng, {B, O});
        auto loss = [&] { return project(fully_connected_forward(x, w, b), r); };
        const auto g = fully_connected_backward(x, w, r);
        EXPECT_LT(max_relative_error(g.dx, numeric_gradient(x, loss, 1e-3)), 1e-4);
        EXPECT_LT(max_relative_error(g.dw, numeric_gradient(w, loss, 1e-3)), 1e-4);
        EXPECT_LT(max_relative_error(g.db, numeric_gradient(b, loss, 1e-3)), 1e-4);
    }
}

TEST(SoftmaxLoss, EqualLogits) {
    const Tensor z({2, 5}, 0.7f);
    const int labels[] = {0, 3};
    const auto r = softmax_cross_entropy(z, labels);
    EXPECT_NEAR(r.loss, std::log(5.0), 1e-6);
    for (float p : r.probs.values())
        EXPECT_NEAR(p, 0.2f, 1e-7);
}

TEST(SoftmaxLoss, LargeLogitIsStable) {
    const Tensor z({1, 5}, std::vector<float>{1000, 0, 0, 0, 0});
    const int label[] = {0};
    const auto r = softmax_cross_entropy(z, label);
    EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_NEAR(r.loss, 0.0, 1e-12);
    EXPECT_TRUE(r.probs.all_finite());
    EXPECT_TRUE(r.grad_logits.all_finite());
}

TEST(SoftmaxLoss, BadLabel) {
    const Tensor z({1, 5});
    const int hi[] = {5}, lo[] = {-1};
    EXPECT_THROW(softmax_cross_entropy(z, hi), LabelError);
    EXPECT_THROW(softmax_cross_entropy(z, lo), LabelError);
}

TEST(SoftmaxLoss, RowsSumToOne) {
    Rng rng(7);
    const auto z = random_tensor(rng, {16, 5}, -30, 30);
    const auto p = softmax(z);
    for (std::size_t r = 0; r < 16; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < 5; ++c) {
            EXPECT_GE(p[r * 5 + c], 0.0);
            s += p[r * 5 + c];
        }
        EXPECT_NEAR(s, 1.0, 1e-6);
    }
}

TEST(SoftmaxLoss, GradientMatchesFiniteDifferences) {
    Rng rng(8);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t B = pick(rng, 1, 6);
        auto z = random_tensor(rng, {B, 5}, -3, 3);
        std::vector<int> labels(B);
        for (auto& l : labels)
            l = static_cast<int>(uniform_below(rng, 5));
        auto loss = [&] { return softmax_cross_entropy(z, labels).loss; };
        const auto g = softmax_cross_entropy(z, labels).grad_logits;
        EXPECT_LT(max_relative_error(g, numeric_gradient(z, loss, 1e-3)), 1e-4);
    }
}

TEST(Residual, Identities) {
    Rng rng(9);
    const auto a = random_tensor(rng, {2, 3, 4});
    EXPECT_EQ(residual_add(a, DT(a.shape(), 0.0)), a);
    DT neg = a;
    for (auto& v : neg.values())
        v = -v;
    EXPECT_EQ(residual_add(a, neg), DT(a.shape(), 0.0));
    EXPECT_THROW(residual_add(a, DT({2, 3, 5})), ShapeError);
}

TEST(Residual, GradientReachesBothBranchesUnchanged) {
    Rng rng(10);
    auto a = random_tensor(rng, {2, 2, 5});
    auto b = random_tensor(rng, {2, 2, 5});
    const auto r = random_tensor(rng, {2, 2, 5});
    auto loss = [&] { return project(residual_add(a, b), r); };
    EXPECT_LT(max_relative_error(r, numeric_gradient(a, loss, 1e-3)), 1e-10);
    EXPECT_LT(max_relative_error(r, numeric_gradient(b, loss, 1e-3)), 1e-10);
}

TEST(Finite, RejectsNaN) {
    Tensor t({3}, 1.0f);
    EXPECT_NO_THROW(require_finite(t, "x"));
    t[1] = NAN;
    EXPECT_THROW(require_finite(t, "x"), NumericError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    ParameterList<float> p{{"w", Tensor({3}, std::vector<float>{1, -2, 3})}};
    const ParameterList<float> g{{"w", Tensor({3}, 0.0f)}};
    AdamState s;
    adam_step(p, g, s, 0.001);
    EXPECT_EQ(p[0].value, Tensor({3}, std::vector<float>{1, -2, 3}));
    EXPECT_EQ(s.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    ParameterList<double> p{{"w", DT({1}, 0.5)}};
    const ParameterList<double> g{{"w", DT({1}, 1.0)}};
    AdamState s;
    adam_step(p, g, s, 0.001);
    // m_hat = 1, v_hat = 1: the step is lr / (1 + eps).
    EXPECT_NEAR(p[0].value[0] - 0.5, -0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ConstantGradientDescends) {
    ParameterList<float> p{{"w", Tensor({2}, 0.0f)}};
    const ParameterList<float> g{{"w", Tensor({2}, std::vector<float>{2.0f, -0.5f})}};
    AdamState s;
    for (int i = 0; i < 100; ++i)
        adam_step(p, g, s, 0.01);
    EXPECT_LT(p[0].value[0], -0.5f);
    EXPECT_GT(p[0].value[1], 0.5f);
}

TEST(Adam, NonFiniteGradientAbortsWithoutUpdate) {
    ParameterList<float> p{{"w", Tensor({2}, 1.0f)}};
    const ParameterList<float> g{{"w", Tensor({2}, std::vector<float>{0.1f, INFINITY})}};
    AdamState s;
    EXPECT_THROW(adam_step(p, g, s, 0.001), NumericError);
    EXPECT_EQ(p[0].value, Tensor({2}, 1.0f));
    EXPECT_EQ(s.step, 0u);
}

TEST(Sgd, Step) {
    ParameterList<float> p{{"w", Tensor({2}, 1.0f)}};
    const ParameterList<float> g{{"w", Tensor({2}, std::vector<float>{1.0f, -2.0f})}};
    sgd_step(p, g, 0.5);
    EXPECT_EQ(p[0].value, Tensor({2}, std::vector<float>{0.5f, 2.0f}));
}

TEST(Determinism, ForwardIsBitIdentical) {
    Rng rng(11);
    const auto x = tensor_cast<float>(random_tensor(rng, {4, 3, 40}));
    const auto w = tensor_cast<float>(random_tensor(rng, {5, 3, 7}));
    const auto b = tensor_cast<float>(random_tensor(rng, {5}));
    EXPECT_EQ(conv1d_forward(x, w, b, {2, 3}), conv1d_forward(x, w, b, {2, 3}));
}
