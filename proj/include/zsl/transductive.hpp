#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/episode.hpp"
#include "zsl/generator.hpp"
#include "zsl/trainer.hpp"

namespace zsl {

struct PseudoLabeled {
    int sample_id = 0;
    int true_class = -1;  // -1 when ground truth is withheld
    int label = 0;        // argmax unseen class id
    double ratio = 0.0;   // top-1 / top-2 softmax probability
    Vector features;
    Vector probs;  // over unseen classes in ascending id order
};

struct ConfidentSet {
    std::vector<PseudoLabeled> samples;
};

// Trainable seen-class classifier rows; row i classifies class_ids[i].
struct SeenClassifier {
    std::vector<int> class_ids;
    Matrix w_s;
};

struct TransductiveConfig {
    double gamma = 1.2;  // peakiness threshold on the top-1/top-2 prob ratio
    double q = 0.5;
    std::size_t n_rounds = 5;
    std::size_t n_inner = 1000;
    bool use_gce = true;             // false: plain cross-entropy on pseudo-labels
    double corrupt_fraction = 0.0;   // fraction of confident labels randomly flipped
    TrainConfig train;               // episode sizes, lr, lambda, score_fn, seed
};

struct RoundTrace {
    std::size_t round = 0;
    std::size_t confident_count = 0;
    double confident_fraction = 0.0;
    double pseudo_label_accuracy = 0.0;  // NaN when ground truth is withheld
    double loss_mean = 0.0;
};

struct TransductiveResult {
    GeneratorParams params;
    SeenClassifier seen;
    std::vector<PseudoLabeled> final_labels;
    std::vector<RoundTrace> trace;
};

// Label every sample of x_u by cosine-softmax over the unseen classes only.
// Results are ordered by sample_id.
std::vector<PseudoLabeled> pseudo_label(const GeneratorParams& params, const FeatureTable& x_u,
                                        const AttributeTable& attrs, const std::set<int>& unseen,
                                        ScoreFn fn);

// Keep samples whose top-1/top-2 probability ratio exceeds gamma. A single
// unseen class makes every sample confident.
ConfidentSet filter_confident(const std::vector<PseudoLabeled>& labeled, double gamma);

// L_u + L_s over the full stacked classifier [f(A_u) ; w_s] with global
// class targets: unseen samples under GCE (or CE), seen samples under CE,
// plus the lambda regularizer. t_u may be empty; t_s may not.
std::pair<double, ForwardCache> joint_loss(const GeneratorParams& params,
                                           const SeenClassifier& seen, const Episode& t_s,
                                           const Episode& t_u, const AttributeTable& attrs,
                                           const std::set<int>& unseen, const LossConfig& cfg,
                                           SampleLoss unseen_kind = SampleLoss::generalized_ce);

// Self-training rounds: pseudo-label x_u, filter by peakiness, then jointly
// update f and w_s on mixed seen/confident episodes.
TransductiveResult train_transductive(const GeneratorParams& start,
                                      const FeatureTable& seen_train, const AttributeTable& attrs,
                                      const SplitSpec& split, const FeatureTable& x_u,
                                      const TransductiveConfig& cfg);

void save_seen_classifier(const SeenClassifier& s, const std::string& path);
SeenClassifier load_seen_classifier(const std::string& path);

}  // namespace zsl
