#include "ecg/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace ecg {
namespace {

template <typename T>
void require_rank(const BasicTensor<T>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) +
                         ", got shape " + t.shape_string());
}

template <typename T>
std::vector<T> narrow(const std::vector<double>& acc) {
    std::vector<T> out(acc.size());
    std::transform(acc.begin(), acc.end(), out.begin(), [](double v) { return static_cast<T>(v); });
    return out;
}

// Kernel taps [lo, hi) that land inside the unpadded input for a window starting at `start`.
std::pair<std::size_t, std::size_t> kernel_range(std::ptrdiff_t start, std::size_t kernel,
                                                 std::size_t len) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -start);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(kernel),
                                                       static_cast<std::ptrdiff_t>(len) - start);
    if (hi <= lo)
        return {0, 0};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

} // namespace

std::size_t conv_output_length(std::size_t length, std::size_t kernel, const ConvGeometry& g) {
    if (g.stride == 0 || kernel == 0 || length + 2 * g.padding < kernel)
        return 0;
    return (length + 2 * g.padding - kernel) / g.stride + 1;
}

template <typename T>
BasicTensor<T> conv1d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& bias, const ConvGeometry& g) {
    require_rank(x, 3, "conv1d input");
    require_rank(w, 3, "conv1d weights");
    require_rank(bias, 1, "conv1d bias");
    const std::size_t batch = x.dim(0), in_ch = x.dim(1), len = x.dim(2);
    const std::size_t out_ch = w.dim(0), kernel = w.dim(2);
    if (w.dim(1) != in_ch || bias.dim(0) != out_ch)
        throw ShapeError("conv1d shape mismatch: input " + x.shape_string() + ", weights " +
                         w.shape_string() + ", bias " + bias.shape_string());
    if (g.stride == 0)
        throw ShapeError("conv1d stride must be positive");
    const std::size_t out_len = conv_output_length(len, kernel, g);
    if (out_len == 0)
        throw ShapeError("conv1d kernel " + std::to_string(kernel) + " does not fit input " +
                         x.shape_string() + " with padding " + std::to_string(g.padding));

    BasicTensor<T> y({batch, out_ch, out_len});
    const auto pad = static_cast<std::ptrdiff_t>(g.padding);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < out_ch; ++o) {
            for (std::size_t i = 0; i < out_len; ++i) {
                double acc = bias[o];
                const auto start = static_cast<std::ptrdiff_t>(i * g.stride) - pad;
                const auto [m_lo, m_hi] = kernel_range(start, kernel, len);
                for (std::size_t c = 0; c < in_ch; ++c) {
                    const T* wrow = &w.at(o, c, 0);
                    const T* xrow = &x.at(b, c, 0);
                    for (std::size_t m = m_lo; m < m_hi; ++m)
                        acc += static_cast<double>(wrow[m]) *
                               xrow[static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(m))];
                }
                y.at(b, o, i) = static_cast<T>(acc);
            }
        }
    }
    return y;
}

template <typename T>
ConvGrads<T> conv1d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                             const BasicTensor<T>& dy, const ConvGeometry& g) {
    require_rank(x, 3, "conv1d input");
    require_rank(w, 3, "conv1d weights");
    require_rank(dy, 3, "conv1d output gradient");
    const std::size_t batch = x.dim(0), in_ch = x.dim(1), len = x.dim(2);
    const std::size_t out_ch = w.dim(0), kernel = w.dim(2);
    const std::size_t out_len = conv_output_length(len, kernel, g);
    if (dy.dim(0) != batch || dy.dim(1) != out_ch || dy.dim(2) != out_len || w.dim(1) != in_ch)
        throw ShapeError("conv1d backward shape mismatch: input " + x.shape_string() +
                         ", weights " + w.shape_string() + ", output gradient " +
                         dy.shape_string());

    std::vector<double> dx(x.size(), 0.0), dw(w.size(), 0.0), db(out_ch, 0.0);
    const auto pad = static_cast<std::ptrdiff_t>(g.padding);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < out_ch; ++o) {
            for (std::size_t i = 0; i < out_len; ++i) {
                const double grad = dy.at(b, o, i);
                db[o] += grad;
                if (grad == 0.0)
                    continue;
                const auto start = static_cast<std::ptrdiff_t>(i * g.stride) - pad;
                const auto [m_lo, m_hi] = kernel_range(start, kernel, len);
                for (std::size_t c = 0; c < in_ch; ++c) {
                    const std::size_t wbase = (o * in_ch + c) * kernel;
                    const std::size_t xbase = (b * in_ch + c) * len;
                    for (std::size_t m = m_lo; m < m_hi; ++m) {
                        const auto xi = xbase + static_cast<std::size_t>(
                                                    start + static_cast<std::ptrdiff_t>(m));
                        dw[wbase + m] += grad * x[xi];
                        dx[xi] += grad * w[wbase + m];
                    }
                }
            }
        }
    }
    return {BasicTensor<T>(x.shape(), narrow<T>(dx)), BasicTensor<T>(w.shape(), narrow<T>(dw)),
            BasicTensor<T>({out_ch}, narrow<T>(db))};
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x) {
    BasicTensor<T> y = x;
    for (auto& v : y.values())
        v = v > T{0} ? v : T{0};
    return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy) {
    if (x.shape() != dy.shape())
        throw ShapeError("relu backward shape mismatch: " + x.shape_string() + " vs " +
                         dy.shape_string());
    BasicTensor<T> dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        dx[i] = x[i] > T{0} ? dy[i] : T{0};
    return dx;
}

template <typename T>
PoolResult<T> maxpool1d_forward(const BasicTensor<T>& x, const PoolSpec& s) {
    require_rank(x, 3, "maxpool input");
    if (s.window == 0 || s.stride == 0)
        throw ShapeError("pool window and stride must be positive");
    const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
    if (s.window > len)
        throw ShapeError("pool window " + std::to_string(s.window) + " exceeds input " +
                         x.shape_string());
    const std::size_t out_len = (len - s.window) / s.stride + 1;

    PoolResult<T> r{BasicTensor<T>({batch, ch, out_len}), {}};
    r.argmax.resize(r.y.size());
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t base = (b * ch + c) * len;
            for (std::size_t i = 0; i < out_len; ++i) {
                std::size_t best = base + i * s.stride;
                for (std::size_t k = 1; k < s.window; ++k) {
                    const std::size_t idx = base + i * s.stride + k;
                    if (x[idx] > x[best])
                        best = idx;
                }
                const std::size_t out = (b * ch + c) * out_len + i;
                r.y[out] = x[best];
                r.argmax[out] = best;
            }
        }
    }
    return r;
}

template <typename T>
BasicTensor<T> maxpool1d_backward(const BasicTensor<T>& dy, std::span<const std::size_t> argmax,
                                  const std::vector<std::size_t>& input_shape) {
    if (argmax.size() != dy.size())
        throw ShapeError("maxpool backward: " + std::to_string(argmax.size()) +
                         " routes for gradient " + dy.shape_string());
    BasicTensor<T> dx(input_shape);
    for (std::size_t i = 0; i < dy.size(); ++i)
        dx[argmax[i]] += dy[i];
    return dx;
}

template <typename T>
BasicTensor<T> fully_connected_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                       const BasicTensor<T>& b) {
    require_rank(x, 2, "dense input");
    require_rank(w, 2, "dense weights");
    require_rank(b, 1, "dense bias");
    const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
    if (w.dim(1) != in || b.dim(0) != out)
        throw ShapeError("dense shape mismatch: input " + x.shape_string() + ", weights " +
                         w.shape_string() + ", bias " + b.shape_string());
    BasicTensor<T> y({batch, out});
    for (std::size_t n = 0; n < batch; ++n) {
        const T* xrow = x.data() + n * in;
        for (std::size_t o = 0; o < out; ++o) {
            const T* wrow = w.data() + o * in;
            double acc = b[o];
            for (std::size_t k = 0; k < in; ++k)
                acc += static_cast<double>(wrow[k]) * xrow[k];
            y[n * out + o] = static_cast<T>(acc);
        }
    }
    return y;
}

template <typename T>
DenseGrads<T> fully_connected_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                       const BasicTensor<T>& dy) {
    require_rank(x, 2, "dense input");
    require_rank(w, 2, "dense weights");
    require_rank(dy, 2, "dense output gradient");
    const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
    if (w.dim(1) != in || dy.dim(0) != batch || dy.dim(1) != out)
        throw ShapeError("dense backward shape mismatch: input " + x.shape_string() +
                         ", weights " + w.shape_string() + ", output gradient " +
                         dy.shape_string());
    std::vector<double> dx(x.size(), 0.0), dw(w.size(), 0.0), db(out, 0.0);
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t o = 0; o < out; ++o) {
            const double grad = dy[n * out + o];
            db[o] += grad;
            for (std::size_t k = 0; k < in; ++k) {
                dw[o * in + k] += grad * x[n * in + k];
                dx[n * in + k] += grad * w[o * in + k];
            }
        }
    }
    return {BasicTensor<T>(x.shape(), narrow<T>(dx)), BasicTensor<T>(w.shape(), narrow<T>(dw)),
            BasicTensor<T>({out}, narrow<T>(db))};
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
    require_rank(logits, 2, "logits");
    const std::size_t batch = logits.dim(0), k = logits.dim(1);
    BasicTensor<T> probs(logits.shape());
    for (std::size_t n = 0; n < batch; ++n) {
        const T* z = logits.data() + n * k;
        const double zmax = *std::max_element(z, z + k);
        double sum = 0.0;
        std::vector<double> e(k);
        for (std::size_t j = 0; j < k; ++j) {
            e[j] = std::exp(static_cast<double>(z[j]) - zmax);
            sum += e[j];
        }
        for (std::size_t j = 0; j < k; ++j)
            probs[n * k + j] = static_cast<T>(e[j] / sum);
    }
    return probs;
}

template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels) {
    require_rank(logits, 2, "logits");
    const std::size_t batch = logits.dim(0), k = logits.dim(1);
    if (labels.size() != batch)
        throw ShapeError("got " + std::to_string(labels.size()) + " labels for logits " +
                         logits.shape_string());
    for (int label : labels)
        if (label < 0 || static_cast<std::size_t>(label) >= k)
            throw LabelError("label " + std::to_string(label) + " outside 0.." +
                             std::to_string(k - 1));

    SoftmaxLoss<T> out{0.0, BasicTensor<T>(logits.shape()), BasicTensor<T>(logits.shape())};
    double total = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
        const T* z = logits.data() + n * k;
        const double zmax = *std::max_element(z, z + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            sum += std::exp(static_cast<double>(z[j]) - zmax);
        const double log_sum = std::log(sum);
        const auto label = static_cast<std::size_t>(labels[n]);
        total += -(static_cast<double>(z[label]) - zmax - log_sum);
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(static_cast<double>(z[j]) - zmax - log_sum);
            out.probs[n * k + j] = static_cast<T>(p);
            out.grad_logits[n * k + j] =
                static_cast<T>((p - (j == label ? 1.0 : 0.0)) / static_cast<double>(batch));
        }
    }
    out.loss = batch ? total / static_cast<double>(batch) : 0.0;
    return out;
}

template <typename T>
BasicTensor<T> residual_add(const BasicTensor<T>& main, const BasicTensor<T>& shortcut) {
    if (main.shape() != shortcut.shape())
        throw ShapeError("residual shapes differ: " + main.shape_string() + " vs " +
                         shortcut.shape_string());
    BasicTensor<T> y = main;
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] += shortcut[i];
    return y;
}

template <typename T>
void require_finite(const BasicTensor<T>& t, const std::string& where) {
    if (!t.all_finite())
        throw NumericError("non-finite value in " + where);
}

#define ECG_INSTANTIATE_NN(T)                                                                    \
    template BasicTensor<T> conv1d_forward(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                           const BasicTensor<T>&, const ConvGeometry&);          \
    template ConvGrads<T> conv1d_backward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                          const BasicTensor<T>&, const ConvGeometry&);           \
    template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                 \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);         \
    template PoolResult<T> maxpool1d_forward(const BasicTensor<T>&, const PoolSpec&);            \
    template BasicTensor<T> maxpool1d_backward(const BasicTensor<T>&,                            \
                                               std::span<const std::size_t>,                     \
                                               const std::vector<std::size_t>&);                 \
    template BasicTensor<T> fully_connected_forward(const BasicTensor<T>&, const BasicTensor<T>&, \
                                                    const BasicTensor<T>&);                      \
    template DenseGrads<T> fully_connected_backward(const BasicTensor<T>&, const BasicTensor<T>&, \
                                                    const BasicTensor<T>&);                      \
    template BasicTensor<T> softmax(const BasicTensor<T>&);                                      \
    template SoftmaxLoss<T> softmax_cross_entropy(const BasicTensor<T>&, std::span<const int>);  \
    template BasicTensor<T> residual_add(const BasicTensor<T>&, const BasicTensor<T>&);          \
    template void require_finite(const BasicTensor<T>&, const std::string&);

ECG_INSTANTIATE_NN(float)
ECG_INSTANTIATE_NN(double)

} // namespace ecg
