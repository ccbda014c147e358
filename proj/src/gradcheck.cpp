#include "zsl/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace zsl {

namespace {

bool masks_match(const ForwardCache& a, const ForwardCache& b) {
    for (std::size_t i = 0; i < a.z1.data.size(); ++i)
        if ((a.z1.data[i] > 0.0) != (b.z1.data[i] > 0.0)) return false;
    for (std::size_t i = 0; i < a.z2.data.size(); ++i)
        if ((a.z2.data[i] > 0.0) != (b.z2.data[i] > 0.0)) return false;
    return true;
}

}  // namespace

GradCheckReport check_gradients(const GeneratorParams& params, const ForwardSpec& spec,
                                const LossConfig& cfg, const GradCheckOptions& opts) {
    const auto forward = forward_loss(params, spec, cfg);
    const Gradients g = backward(params, forward.second, cfg);

    GeneratorParams work = params;
    ForwardSpec work_spec = spec;

    struct View {
        const char* name;
        double* data;
        const double* grad;
        std::size_t size;
    };
    std::vector<View> views = {
        {"w1", work.w1.data.data(), g.d_w1.data.data(), work.w1.data.size()},
        {"b1", work.b1.data(), g.d_b1.data(), work.b1.size()},
        {"w2", work.w2.data.data(), g.d_w2.data.data(), work.w2.data.size()},
        {"b2", work.b2.data(), g.d_b2.data(), work.b2.size()},
        {"sigma", &work.sigma, &g.d_sigma, 1},
    };
    if (spec.extra_rows.rows > 0)
        views.push_back({"ws", work_spec.extra_rows.data.data(), g.d_ws.data.data(),
                         work_spec.extra_rows.data.size()});

    GradCheckReport report;
    for (const auto& view : views) {
        TensorCheck tc;
        tc.tensor = view.name;
        for (std::size_t i = 0; i < view.size; ++i) {
            const double orig = view.data[i];
            bool skip = false;
            double loss_plus = 0.0, loss_minus = 0.0;
            ForwardCache cache_plus, cache_minus;
            try {
                view.data[i] = orig + opts.step;
                auto fp = forward_loss(work, work_spec, cfg);
                view.data[i] = orig - opts.step;
                auto fm = forward_loss(work, work_spec, cfg);
                loss_plus = fp.first;
                loss_minus = fm.first;
                cache_plus = std::move(fp.second);
                cache_minus = std::move(fm.second);
            } catch (const std::invalid_argument&) {
                skip = true;  // perturbation crossed a validity boundary (zero-norm row)
            }
            view.data[i] = orig;
            if (!skip && !masks_match(cache_plus, cache_minus)) skip = true;
            if (skip) {
                ++tc.skipped;
                continue;
            }
            ++tc.checked;
            const double fd = (loss_plus - loss_minus) / (2.0 * opts.step);
            const double a = view.grad[i];
            const double diff = std::abs(a - fd);
            if (std::abs(a) < opts.small_threshold && std::abs(fd) < opts.small_threshold) {
                tc.max_abs_small = std::max(tc.max_abs_small, diff);
                if (!(diff < opts.abs_tol)) tc.pass = false;
            } else {
                const double rel = diff / std::max(std::abs(a), std::abs(fd));
                tc.max_rel_err = std::max(tc.max_rel_err, rel);
                if (!(rel < opts.rel_tol)) tc.pass = false;
            }
        }
        if (!tc.pass) report.pass = false;
        report.tensors.push_back(std::move(tc));
    }
    return report;
}

const char* check_loss_name(CheckLoss kind) {
    switch (kind) {
        case CheckLoss::ce: return "ce";
        case CheckLoss::gce: return "gce";
        case CheckLoss::joint: return "joint";
    }
    return "?";
}

GradCheckInstance make_check_instance(CheckLoss kind, std::uint64_t seed) {
    constexpr std::size_t attr_dim = 6, hidden = 8, feat_dim = 10;
    constexpr std::size_t m = 4, n = 2;

    Rng rng(seed);
    GradCheckInstance inst;
    inst.params = init_params(attr_dim, hidden, feat_dim, rng);
    // lift the pre-ReLU outputs a little so random rows keep healthy norms
    for (double& v : inst.params.b2) v = 0.05;

    inst.spec.attrs = Matrix(m, attr_dim);
    for (double& v : inst.spec.attrs.data) v = rng.uniform(0.1, 1.0);

    const std::size_t n_extra = kind == CheckLoss::joint ? 3 : 0;
    inst.spec.extra_rows = Matrix(n_extra, feat_dim);
    for (double& v : inst.spec.extra_rows.data) v = rng.uniform(0.1, 1.0);

    const std::size_t n_seen_samples = kind == CheckLoss::joint ? n_extra * 2 : 0;
    inst.spec.features = Matrix(m * n + n_seen_samples, feat_dim);
    for (double& v : inst.spec.features.data) v = rng.normal();

    const SampleLoss episode_kind =
        kind == CheckLoss::ce ? SampleLoss::cross_entropy : SampleLoss::generalized_ce;
    for (std::size_t i = 0; i < m * n; ++i)
        inst.spec.samples.push_back(
            {i, i / n, episode_kind, 1.0 / static_cast<double>(m * n)});
    for (std::size_t i = 0; i < n_seen_samples; ++i)
        inst.spec.samples.push_back({m * n + i, m + i / 2, SampleLoss::cross_entropy,
                                     1.0 / static_cast<double>(n_seen_samples)});

    inst.cfg.lambda = 1e-3;
    inst.cfg.q = 0.5;
    inst.cfg.score_fn = ScoreFn::cosine;
    return inst;
}

}  // namespace zsl
