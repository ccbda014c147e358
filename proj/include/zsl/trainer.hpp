#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/generator.hpp"

namespace zsl {

struct TrainConfig {
    std::size_t m_classes = 32;
    std::size_t n_per_class = 4;
    std::size_t iterations = 20000;
    double lr = 1e-3;      // tuned for the mean-reduced episode loss
    double lambda = 1e-4;
    std::size_t hidden = 1600;
    ScoreFn score_fn = ScoreFn::cosine;
    std::uint64_t seed = 1;
};

struct LossRecord {
    std::size_t iteration = 0;
    double loss = 0.0;
};

struct GzslReport {
    double u = 0.0;  // unseen mean class accuracy
    double s = 0.0;  // seen mean class accuracy
    double h = 0.0;  // harmonic mean
    std::map<int, double> per_class;
};

// Episode loop: sample from seen classes, cross-entropy, Adam. Loss recorded
// at iteration 1 and every 100th thereafter when records is non-null.
GeneratorParams train_inductive(const FeatureTable& train, const AttributeTable& attrs,
                                const SplitSpec& split, const TrainConfig& cfg,
                                std::vector<LossRecord>* records = nullptr);

// Argmax over classifier rows; ids[i] labels row i. Ties go to the lowest
// class id.
int predict_class(const Matrix& w, const std::vector<int>& ids, std::span<const double> x,
                  double sigma, ScoreFn fn);

// Top-1 mean class accuracy over unseen classes only. Every test sample must
// belong to an unseen class.
double evaluate_zsl(const GeneratorParams& params, const FeatureTable& test,
                    const AttributeTable& attrs, const std::set<int>& unseen_classes, ScoreFn fn);

// Full generalized evaluation: unseen classifier rows stacked above seen
// rows, argmax over the union.
GzslReport evaluate_gzsl(const GeneratorParams& params, const FeatureTable& test,
                         const AttributeTable& attrs, const SplitSpec& split, ScoreFn fn);

// Same, with caller-supplied seen-class classifier rows (e.g. trained W_s).
GzslReport evaluate_gzsl_rows(const GeneratorParams& params, const Matrix& w_seen,
                              const std::vector<int>& seen_ids, const FeatureTable& test,
                              const AttributeTable& attrs, const SplitSpec& split, ScoreFn fn);

// 2us/(u+s), zero when both are zero. Inputs must lie in [0,1].
double harmonic_mean(double u, double s);

}  // namespace zsl
