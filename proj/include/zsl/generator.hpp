#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zsl/episode.hpp"
#include "zsl/linalg.hpp"
#include "zsl/rng.hpp"

namespace zsl {

enum class ScoreFn { cosine, dot };

// The classifier generator f: attr -> relu(w2 * relu(w1*attr + b1) + b2),
// plus the temperature sigma used by cosine scoring.
struct GeneratorParams {
    Matrix w1;  // hidden x attr_dim
    Vector b1;  // hidden
    Matrix w2;  // feat_dim x hidden
    Vector b2;  // feat_dim
    double sigma = 10.0;

    bool operator==(const GeneratorParams&) const = default;
};

struct Gradients {
    Matrix d_w1;
    Vector d_b1;
    Matrix d_w2;
    Vector d_b2;
    double d_sigma = 0.0;
    Matrix d_ws;  // trainable extra classifier rows; 0x0 when the loss had none
};

struct LossConfig {
    double lambda = 0.0;  // l2 coefficient on w1, w2 (squared Frobenius)
    double q = 0.5;       // GCE exponent, (0,1]
    ScoreFn score_fn = ScoreFn::cosine;

    bool operator==(const LossConfig&) const = default;
};

enum class SampleLoss { cross_entropy, generalized_ce };

struct SpecSample {
    std::size_t feature_row = 0;  // row in ForwardSpec::features
    std::size_t target_row = 0;   // row in the stacked classifier
    SampleLoss kind = SampleLoss::cross_entropy;
    double weight = 1.0;          // contribution multiplier, e.g. 1/(m*n)
};

// One differentiable scoring problem. Classifier rows 0..K-1 are generated
// from attrs through f; extra_rows (trainable, e.g. seen-class classifiers)
// are stacked below them. Every sample is scored against the full stack.
struct ForwardSpec {
    Matrix attrs;       // K x attr_dim
    Matrix extra_rows;  // E x feat_dim, may be 0 x feat_dim
    Matrix features;    // S x feat_dim
    std::vector<SpecSample> samples;
};

struct ForwardCache {
    ForwardSpec spec;
    LossConfig cfg;
    GeneratorParams params;  // snapshot; backward rejects a mismatching cache
    Matrix z1;               // K x hidden, pre-ReLU
    Matrix h;                // K x hidden
    Matrix z2;               // K x feat_dim, pre-ReLU
    Matrix w_all;            // (K+E) x feat_dim: relu(z2) rows, then extra rows
    Vector row_norms;        // K+E
    Vector x_norms;          // one per sample
    Matrix cosines;          // samples x (K+E); empty in dot mode
    Matrix scores;           // samples x (K+E) logits
    Matrix probs;            // samples x (K+E)
    double loss = 0.0;
};

GeneratorParams init_params(std::size_t attr_dim, std::size_t hidden, std::size_t feat_dim,
                            Rng& rng);

// W = f(A), one classifier row per attribute row. Entries are >= 0.
Matrix gen_classifiers(const GeneratorParams& p, const Matrix& attrs);

// Logits of x against each classifier row: sigma*cos(w_i, x) or dot(w_i, x).
Vector score(const Matrix& w, std::span<const double> x, double sigma, ScoreFn fn);

// (1 - probs[label]^q) / q. MAE at q=1, cross-entropy in the q->0 limit.
double gce_loss(std::span<const double> probs, std::size_t label, double q);

// Weighted sample losses plus lambda*(||w1||_F^2 + ||w2||_F^2), with every
// intermediate retained for backward.
std::pair<double, ForwardCache> forward_loss(const GeneratorParams& p, const ForwardSpec& spec,
                                             const LossConfig& cfg);

// Episode cross-entropy: mean over samples of -logit_y + logsumexp(logits),
// plus the regularizer.
std::pair<double, ForwardCache> ce_loss(const GeneratorParams& p, const Episode& episode,
                                        const LossConfig& cfg);

// Exact gradients of cache.loss. d_ws is filled iff the spec had extra rows.
Gradients backward(const GeneratorParams& p, const ForwardCache& cache, const LossConfig& cfg);

// Samples scored against the episode's own classes with weight 1/num_samples.
ForwardSpec episode_spec(const Episode& episode, SampleLoss kind);

void save_checkpoint(const GeneratorParams& p, const std::string& path);
GeneratorParams load_checkpoint(const std::string& path);

}  // namespace zsl
