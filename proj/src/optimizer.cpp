#include "ecg/optimizer.hpp"

#include <cmath>

namespace ecg {
namespace {

template <typename T>
void check_grads(const ParameterList<T>& params, const ParameterList<T>& grads) {
    if (params.size() != grads.size())
        throw ShapeError("optimizer got " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].value.shape() != grads[i].value.shape())
            throw ShapeError("gradient for " + params[i].name + " has shape " +
                             grads[i].value.shape_string() + ", parameter has " +
                             params[i].value.shape_string());
        if (!grads[i].value.all_finite())
            throw NumericError("non-finite gradient for " + params[i].name);
    }
}

} // namespace

OptimizerKind optimizer_from_name(std::string_view name) {
    if (name == "adam")
        return OptimizerKind::Adam;
    if (name == "sgd")
        return OptimizerKind::Sgd;
    throw ParameterError("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

std::string_view optimizer_name(OptimizerKind kind) noexcept {
    return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

template <typename T>
void adam_step(ParameterList<T>& params, const ParameterList<T>& grads, AdamState& state,
               double learning_rate) {
    check_grads(params, grads);
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.value.size(), 0.0);
            state.second_moment.emplace_back(p.value.size(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size())
        throw ShapeError("Adam state tracks " + std::to_string(state.first_moment.size()) +
                         " tensors, got " + std::to_string(params.size()));

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].value;
        const auto& g = grads[i].value;
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = g[k];
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            p[k] = static_cast<T>(p[k] - learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon));
        }
    }
}

template <typename T>
void sgd_step(ParameterList<T>& params, const ParameterList<T>& grads, double learning_rate) {
    check_grads(params, grads);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].value;
        const auto& g = grads[i].value;
        for (std::size_t k = 0; k < p.size(); ++k)
            p[k] = static_cast<T>(p[k] - learning_rate * g[k]);
    }
}

template void adam_step(ParameterList<float>&, const ParameterList<float>&, AdamState&, double);
template void adam_step(ParameterList<double>&, const ParameterList<double>&, AdamState&, double);
template void sgd_step(ParameterList<float>&, const ParameterList<float>&, double);
template void sgd_step(ParameterList<double>&, const ParameterList<double>&, double);

} // namespace ecg
