#include "zsl/optim.hpp"

#include <cmath>
#include <span>
#include <stdexcept>

namespace zsl {

namespace {

void check_config(const AdamConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("adam_init: lr must be positive");
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0)
        throw std::invalid_argument("adam_init: betas must lie in [0,1)");
    if (!(cfg.eps > 0.0)) throw std::invalid_argument("adam_init: eps must be positive");
}

// theta -= lr * m_hat / (sqrt(v_hat) + eps), moments updated in place
void update_span(std::span<double> theta, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamConfig& cfg, double bc1, double bc2) {
    if (grad.size() != theta.size() || m.size() != theta.size())
        throw std::invalid_argument("adam_step: gradient shape mismatch");
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        theta[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

}  // namespace

AdamState adam_init(const GeneratorParams& params, AdamConfig cfg) {
    check_config(cfg);
    AdamState s;
    s.cfg = cfg;
    s.m_w1 = Matrix(params.w1.rows, params.w1.cols);
    s.v_w1 = Matrix(params.w1.rows, params.w1.cols);
    s.m_b1 = Vector(params.b1.size(), 0.0);
    s.v_b1 = Vector(params.b1.size(), 0.0);
    s.m_w2 = Matrix(params.w2.rows, params.w2.cols);
    s.v_w2 = Matrix(params.w2.rows, params.w2.cols);
    s.m_b2 = Vector(params.b2.size(), 0.0);
    s.v_b2 = Vector(params.b2.size(), 0.0);
    return s;
}

AdamState adam_init(const GeneratorParams& params, const Matrix& ws, AdamConfig cfg) {
    AdamState s = adam_init(params, cfg);
    s.has_ws = true;
    s.m_ws = Matrix(ws.rows, ws.cols);
    s.v_ws = Matrix(ws.rows, ws.cols);
    return s;
}

void adam_step(GeneratorParams& params, Matrix* ws, const Gradients& grads, AdamState& state) {
    if (state.has_ws != (ws != nullptr))
        throw std::invalid_argument("adam_step: ws presence does not match the optimizer state");
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.t));

    update_span(params.w1.data, grads.d_w1.data, state.m_w1.data, state.v_w1.data, state.cfg, bc1,
                bc2);
    update_span(params.b1, grads.d_b1, state.m_b1, state.v_b1, state.cfg, bc1, bc2);
    update_span(params.w2.data, grads.d_w2.data, state.m_w2.data, state.v_w2.data, state.cfg, bc1,
                bc2);
    update_span(params.b2, grads.d_b2, state.m_b2, state.v_b2, state.cfg, bc1, bc2);
    update_span({&params.sigma, 1}, {&grads.d_sigma, 1}, {&state.m_sigma, 1}, {&state.v_sigma, 1},
                state.cfg, bc1, bc2);
    if (ws != nullptr) {
        if (!grads.d_ws.same_shape(*ws))
            throw std::invalid_argument("adam_step: d_ws shape mismatch");
        update_span(ws->data, grads.d_ws.data, state.m_ws.data, state.v_ws.data, state.cfg, bc1,
                    bc2);
    }
}

}  // namespace zsl
