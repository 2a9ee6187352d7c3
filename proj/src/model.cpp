#include "ecg/model.hpp"

#include "ecg/random.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace ecg {
namespace {

enum Slot : std::size_t {
    kConv1W, kConv1B, kConv2W, kConv2B, kRes1W, kRes1B, kRes2W, kRes2B, kProjW, kProjB,
    kFc1W, kFc1B, kFc2W, kFc2B, kSlotCount
};

struct Geometry {
    ConvGeometry conv;
    PoolSpec pool;
    ConvGeometry res_first;
    ConvGeometry res_second;
    ConvGeometry projection;
};

Geometry geometry(const ModelConfig& c) {
    return {{c.conv_stride, c.conv_kernel / 2},
            {c.pool_window, c.pool_stride},
            {c.res_stride, c.res_kernel / 2},
            {1, c.res_kernel / 2},
            {c.res_stride, 0}};
}

template <typename T>
struct Activations {
    BasicTensor<T> input, c1, p1_in, c2, p2_in, p2, m1, m2, shortcut, sum, flat, f1, h1, logits;
    BasicTensor<T> p1;
    std::vector<std::size_t> pool1_argmax, pool2_argmax;
};

template <typename T>
Activations<T> run_forward(const BasicModelParams<T>& params, const BasicTensor<T>& batch) {
    const auto& cfg = params.config;
    if (batch.rank() != 3 || batch.dim(1) != 1 || batch.dim(2) != cfg.input_length)
        throw ShapeError("model input must be (batch, 1, " + std::to_string(cfg.input_length) +
                         "), got " + batch.shape_string());
    if (params.tensors.size() != kSlotCount)
        throw ShapeError("model has " + std::to_string(params.tensors.size()) +
                         " parameter tensors, expected " + std::to_string(kSlotCount));
    require_finite(batch, "model input");

    const auto g = geometry(cfg);
    const auto& P = params.tensors;
    Activations<T> a;
    a.input = batch;
    a.c1 = conv1d_forward(batch, P[kConv1W].value, P[kConv1B].value, g.conv);
    a.p1_in = relu_forward(a.c1);
    auto pool1 = maxpool1d_forward(a.p1_in, g.pool);
    a.p1 = std::move(pool1.y);
    a.pool1_argmax = std::move(pool1.argmax);

    a.c2 = conv1d_forward(a.p1, P[kConv2W].value, P[kConv2B].value, g.conv);
    a.p2_in = relu_forward(a.c2);
    auto pool2 = maxpool1d_forward(a.p2_in, g.pool);
    a.p2 = std::move(pool2.y);
    a.pool2_argmax = std::move(pool2.argmax);
    require_finite(a.p2, "feature extractor output");

    a.m1 = conv1d_forward(a.p2, P[kRes1W].value, P[kRes1B].value, g.res_first);
    a.m2 = conv1d_forward(relu_forward(a.m1), P[kRes2W].value, P[kRes2B].value, g.res_second);
    a.shortcut = conv1d_forward(a.p2, P[kProjW].value, P[kProjB].value, g.projection);
    a.sum = residual_add(a.m2, a.shortcut);
    require_finite(a.sum, "residual block output");

    const std::size_t n = batch.dim(0);
    a.flat = relu_forward(a.sum).reshaped({n, a.sum.dim(1) * a.sum.dim(2)});
    a.f1 = fully_connected_forward(a.flat, P[kFc1W].value, P[kFc1B].value);
    a.h1 = relu_forward(a.f1);
    a.logits = fully_connected_forward(a.h1, P[kFc2W].value, P[kFc2B].value);
    require_finite(a.logits, "logits");
    return a;
}

std::size_t parse_size(std::string_view value, std::string_view key) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
    return static_cast<std::size_t>(v);
}

} // namespace

std::string ModelConfig::to_text() const {
    std::ostringstream out;
    out << "input_length=" << input_length << '\n'
        << "conv_filters=" << conv_filters << '\n'
        << "conv_kernel=" << conv_kernel << '\n'
        << "conv_stride=" << conv_stride << '\n'
        << "pool_window=" << pool_window << '\n'
        << "pool_stride=" << pool_stride << '\n'
        << "res_kernel=" << res_kernel << '\n'
        << "res_stride=" << res_stride << '\n'
        << "res_filters=" << res_filters << '\n'
        << "fc_hidden=" << fc_hidden << '\n'
        << "num_classes=" << num_classes << '\n'
        << "seed=" << seed << '\n';
    return out.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
    ModelConfig c;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        const auto line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line without '=': " + std::string(line));
        const auto key = line.substr(0, eq);
        const auto value = line.substr(eq + 1);
        if (key == "input_length") c.input_length = parse_size(value, key);
        else if (key == "conv_filters") c.conv_filters = parse_size(value, key);
        else if (key == "conv_kernel") c.conv_kernel = parse_size(value, key);
        else if (key == "conv_stride") c.conv_stride = parse_size(value, key);
        else if (key == "pool_window") c.pool_window = parse_size(value, key);
        else if (key == "pool_stride") c.pool_stride = parse_size(value, key);
        else if (key == "res_kernel") c.res_kernel = parse_size(value, key);
        else if (key == "res_stride") c.res_stride = parse_size(value, key);
        else if (key == "res_filters") c.res_filters = parse_size(value, key);
        else if (key == "fc_hidden") c.fc_hidden = parse_size(value, key);
        else if (key == "num_classes") c.num_classes = parse_size(value, key);
        else if (key == "seed") c.seed = parse_size(value, key);
        else throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
    return c;
}

std::vector<std::size_t> length_chain(const ModelConfig& c) {
    const std::size_t fields[] = {c.input_length, c.conv_filters, c.conv_kernel, c.conv_stride,
                                  c.pool_window,  c.pool_stride,  c.res_kernel,  c.res_stride,
                                  c.res_filters,  c.fc_hidden,    c.num_classes};
    for (auto f : fields)
        if (f == 0)
            throw ConfigError("model config fields must all be positive");

    const auto g = geometry(c);
    auto pooled = [&](std::size_t len) {
        return len < g.pool.window ? 0 : (len - g.pool.window) / g.pool.stride + 1;
    };
    std::vector<std::size_t> chain{c.input_length};
    chain.push_back(conv_output_length(chain.back(), c.conv_kernel, g.conv));
    chain.push_back(pooled(chain.back()));
    chain.push_back(conv_output_length(chain.back(), c.conv_kernel, g.conv));
    chain.push_back(pooled(chain.back()));
    const std::size_t before_res = chain.back();
    chain.push_back(conv_output_length(before_res, c.res_kernel, g.res_first));
    const std::size_t main_len = conv_output_length(chain.back(), c.res_kernel, g.res_second);
    const std::size_t short_len = conv_output_length(before_res, 1, g.projection);

    auto render = [&] {
        std::string s;
        for (std::size_t i = 0; i < chain.size(); ++i)
            s += (i ? "->" : "") + std::to_string(chain[i]);
        return s;
    };
    for (auto len : chain)
        if (len == 0)
            throw ConfigError("layer length chain collapses: " + render());
    if (main_len != chain.back() || short_len != chain.back())
        throw ConfigError("residual branches disagree (main " + std::to_string(main_len) +
                          ", shortcut " + std::to_string(short_len) + ") after " + render());
    return chain;
}

std::size_t flatten_features(const ModelConfig& c) { return length_chain(c).back() * c.res_filters; }

std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_shapes(
    const ModelConfig& c) {
    const std::size_t features = flatten_features(c);
    return {
        {"conv1.weight", {c.conv_filters, 1, c.conv_kernel}},
        {"conv1.bias", {c.conv_filters}},
        {"conv2.weight", {c.conv_filters, c.conv_filters, c.conv_kernel}},
        {"conv2.bias", {c.conv_filters}},
        {"res_conv1.weight", {c.res_filters, c.conv_filters, c.res_kernel}},
        {"res_conv1.bias", {c.res_filters}},
        {"res_conv2.weight", {c.res_filters, c.res_filters, c.res_kernel}},
        {"res_conv2.bias", {c.res_filters}},
        {"res_projection.weight", {c.res_filters, c.conv_filters, 1}},
        {"res_projection.bias", {c.res_filters}},
        {"fc1.weight", {c.fc_hidden, features}},
        {"fc1.bias", {c.fc_hidden}},
        {"fc2.weight", {c.num_classes, c.fc_hidden}},
        {"fc2.bias", {c.num_classes}},
    };
}

template <typename T>
const BasicTensor<T>& BasicModelParams<T>::get(std::string_view name) const {
    for (const auto& t : tensors)
        if (t.name == name)
            return t.value;
    throw ShapeError("no parameter named " + std::string(name));
}

template <typename T>
BasicModelParams<T> build_model(const ModelConfig& config) {
    BasicModelParams<T> params{config, {}};
    Rng rng(config.seed);
    for (auto& [name, shape] : parameter_shapes(config)) {
        BasicTensor<T> t(shape);
        if (shape.size() > 1) {
            std::size_t fan_in = 1;
            for (std::size_t i = 1; i < shape.size(); ++i)
                fan_in *= shape[i];
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
            for (auto& v : t.values())
                v = static_cast<T>((2.0 * uniform_unit(rng) - 1.0) * limit);
        }
        params.tensors.push_back({name, std::move(t)});
    }
    return params;
}

template <typename T>
BasicTensor<T> forward(const BasicModelParams<T>& params, const BasicTensor<T>& batch) {
    return run_forward(params, batch).logits;
}

template <typename T>
LossGradients<T> loss_and_gradients(const BasicModelParams<T>& params, const BasicTensor<T>& batch,
                                    std::span<const int> labels) {
    const auto a = run_forward(params, batch);
    auto sce = softmax_cross_entropy(a.logits, labels);
    if (!std::isfinite(sce.loss))
        throw NumericError("non-finite loss");

    const auto g = geometry(params.config);
    const auto& P = params.tensors;
    std::vector<BasicTensor<T>> grads(kSlotCount);

    auto fc2 = fully_connected_backward(a.h1, P[kFc2W].value, sce.grad_logits);
    grads[kFc2W] = std::move(fc2.dw);
    grads[kFc2B] = std::move(fc2.db);
    auto fc1 = fully_connected_backward(a.flat, P[kFc1W].value, relu_backward(a.f1, fc2.dx));
    grads[kFc1W] = std::move(fc1.dw);
    grads[kFc1B] = std::move(fc1.db);

    const auto d_sum = relu_backward(a.sum, fc1.dx.reshaped(a.sum.shape()));
    // The residual sum passes d_sum unchanged to both branches.
    auto proj = conv1d_backward(a.p2, P[kProjW].value, d_sum, g.projection);
    grads[kProjW] = std::move(proj.dw);
    grads[kProjB] = std::move(proj.db);
    const auto m1_act = relu_forward(a.m1);
    auto res2 = conv1d_backward(m1_act, P[kRes2W].value, d_sum, g.res_second);
    grads[kRes2W] = std::move(res2.dw);
    grads[kRes2B] = std::move(res2.db);
    auto res1 = conv1d_backward(a.p2, P[kRes1W].value, relu_backward(a.m1, res2.dx), g.res_first);
    grads[kRes1W] = std::move(res1.dw);
    grads[kRes1B] = std::move(res1.db);
    const auto d_p2 = residual_add(res1.dx, proj.dx);

    const auto d_c2 =
        relu_backward(a.c2, maxpool1d_backward(d_p2, a.pool2_argmax, a.p2_in.shape()));
    auto conv2 = conv1d_backward(a.p1, P[kConv2W].value, d_c2, g.conv);
    grads[kConv2W] = std::move(conv2.dw);
    grads[kConv2B] = std::move(conv2.db);
    const auto d_c1 =
        relu_backward(a.c1, maxpool1d_backward(conv2.dx, a.pool1_argmax, a.p1_in.shape()));
    auto conv1 = conv1d_backward(a.input, P[kConv1W].value, d_c1, g.conv);
    grads[kConv1W] = std::move(conv1.dw);
    grads[kConv1B] = std::move(conv1.db);

    LossGradients<T> out;
    out.loss = sce.loss;
    out.probs = std::move(sce.probs);
    for (std::size_t i = 0; i < kSlotCount; ++i)
        out.grads.push_back({P[i].name, std::move(grads[i])});
    return out;
}

template struct BasicModelParams<float>;
template struct BasicModelParams<double>;
template BasicModelParams<float> build_model<float>(const ModelConfig&);
template BasicModelParams<double> build_model<double>(const ModelConfig&);
template BasicTensor<float> forward(const BasicModelParams<float>&, const BasicTensor<float>&);
template BasicTensor<double> forward(const BasicModelParams<double>&, const BasicTensor<double>&);
template LossGradients<float> loss_and_gradients(const BasicModelParams<float>&,
                                                 const BasicTensor<float>&, std::span<const int>);
template LossGradients<double> loss_and_gradients(const BasicModelParams<double>&,
                                                  const BasicTensor<double>&, std::span<const int>);

} // namespace ecg
