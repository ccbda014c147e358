#pragma once

#include "zsl/generator.hpp"
#include "zsl/linalg.hpp"

namespace zsl {

struct AdamConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moments mirror the generator parameters; the ws slot exists only when the
// optimizer also drives trainable seen-class classifier rows.
struct AdamState {
    AdamConfig cfg;
    long long t = 0;
    Matrix m_w1, v_w1;
    Vector m_b1, v_b1;
    Matrix m_w2, v_w2;
    Vector m_b2, v_b2;
    double m_sigma = 0.0, v_sigma = 0.0;
    bool has_ws = false;
    Matrix m_ws, v_ws;
};

AdamState adam_init(const GeneratorParams& params, AdamConfig cfg = {});
AdamState adam_init(const GeneratorParams& params, const Matrix& ws, AdamConfig cfg = {});

// One bias-corrected Adam step in place. ws must be non-null iff the state
// was initialized with a ws slot; grads.d_ws must match it.
void adam_step(GeneratorParams& params, Matrix* ws, const Gradients& grads, AdamState& state);

inline void adam_step(GeneratorParams& params, const Gradients& grads, AdamState& state) {
    adam_step(params, nullptr, grads, state);
}

}  // namespace zsl
