#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zsl/generator.hpp"

namespace zsl {

struct TensorCheck {
    std::string tensor;  // w1, b1, w2, b2, sigma, ws
    std::size_t checked = 0;
    std::size_t skipped = 0;  // coordinates whose +/-h interval straddles a ReLU kink
    double max_rel_err = 0.0;
    double max_abs_small = 0.0;  // worst |analytic - fd| among near-zero coordinates
    bool pass = true;
};

struct GradCheckReport {
    std::vector<TensorCheck> tensors;
    bool pass = true;
};

struct GradCheckOptions {
    double step = 1e-5;
    double rel_tol = 1e-5;
    double abs_tol = 1e-8;          // replaces the relative rule near zero
    double small_threshold = 1e-6;  // both gradients below this -> absolute rule
};

// Central finite differences against the analytic gradients of forward_loss.
// Coordinates whose perturbation flips a ReLU activation (or invalidates the
// forward pass) are skipped rather than compared across the kink.
GradCheckReport check_gradients(const GeneratorParams& params, const ForwardSpec& spec,
                                const LossConfig& cfg, const GradCheckOptions& opts = {});

enum class CheckLoss { ce, gce, joint };

struct GradCheckInstance {
    GeneratorParams params;
    ForwardSpec spec;
    LossConfig cfg;
};

// Canonical small random instance (attr 6, hidden 8, feat 10, 4 classes x 2
// samples; the joint kind adds 3 trainable extra rows and 6 CE samples).
GradCheckInstance make_check_instance(CheckLoss kind, std::uint64_t seed);

const char* check_loss_name(CheckLoss kind);

}  // namespace zsl
