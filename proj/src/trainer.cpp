#include "zsl/trainer.hpp"

#include <algorithm>
#include <stdexcept>

#include "zsl/episode.hpp"
#include "zsl/optim.hpp"
#include "zsl/rng.hpp"

namespace zsl {

namespace {

void check_train_config(const TrainConfig& cfg) {
    if (cfg.m_classes < 2) throw std::invalid_argument("train: m_classes must be >= 2");
    if (cfg.n_per_class < 1) throw std::invalid_argument("train: n_per_class must be >= 1");
    if (cfg.iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");
    if (cfg.hidden < 1) throw std::invalid_argument("train: hidden must be >= 1");
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
    if (cfg.lambda < 0.0) throw std::invalid_argument("train: lambda must be >= 0");
}

struct ClassStats {
    std::map<int, std::size_t> correct;
    std::map<int, std::size_t> total;

    double mca(const std::set<int>& classes) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& [cid, cnt] : total) {
            if (!classes.count(cid)) continue;
            auto it = correct.find(cid);
            const double c = it == correct.end() ? 0.0 : static_cast<double>(it->second);
            sum += c / static_cast<double>(cnt);
            ++n;
        }
        if (n == 0) throw std::invalid_argument("evaluate: no test samples for the class set");
        return sum / static_cast<double>(n);
    }
};

}  // namespace

GeneratorParams train_inductive(const FeatureTable& train, const AttributeTable& attrs,
                                const SplitSpec& split, const TrainConfig& cfg,
                                std::vector<LossRecord>* records) {
    check_train_config(cfg);
    const ClassIndex index = build_class_index(train, split.seen);
    if (index.by_class.empty())
        throw std::invalid_argument("train_inductive: no seen-class training samples");

    Rng rng(cfg.seed);
    GeneratorParams params = init_params(attrs.attr_dim, cfg.hidden, train.feat_dim, rng);
    AdamState adam = adam_init(params, AdamConfig{.lr = cfg.lr});
    const LossConfig lcfg{.lambda = cfg.lambda, .q = 0.5, .score_fn = cfg.score_fn};

    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        const Episode ep =
            sample_episode(index, train, attrs, rng, cfg.m_classes, cfg.n_per_class);
        auto [loss, cache] = ce_loss(params, ep, lcfg);
        const Gradients grads = backward(params, cache, lcfg);
        adam_step(params, grads, adam);
        if (records && (it == 1 || it % 100 == 0)) records->push_back({it, loss});
    }
    return params;
}

int predict_class(const Matrix& w, const std::vector<int>& ids, std::span<const double> x,
                  double sigma, ScoreFn fn) {
    if (w.rows != ids.size()) throw std::invalid_argument("predict_class: id/row count mismatch");
    if (w.rows == 0) throw std::invalid_argument("predict_class: no classifier rows");
    const Vector logits = score(w, x, sigma, fn);
    std::size_t best = 0;
    for (std::size_t r = 1; r < logits.size(); ++r) {
        if (logits[r] > logits[best] || (logits[r] == logits[best] && ids[r] < ids[best]))
            best = r;
    }
    return ids[best];
}

double evaluate_zsl(const GeneratorParams& params, const FeatureTable& test,
                    const AttributeTable& attrs, const std::set<int>& unseen_classes, ScoreFn fn) {
    const std::vector<int> ids(unseen_classes.begin(), unseen_classes.end());
    const Matrix w = gen_classifiers(params, attribute_matrix(attrs, ids));
    ClassStats stats;
    for (const auto& sample : test.samples) {
        if (!unseen_classes.count(sample.class_id))
            throw std::invalid_argument("evaluate_zsl: sample " + std::to_string(sample.sample_id) +
                                        " belongs to a non-unseen class");
        ++stats.total[sample.class_id];
        if (predict_class(w, ids, sample.features, params.sigma, fn) == sample.class_id)
            ++stats.correct[sample.class_id];
    }
    return stats.mca(unseen_classes);
}

GzslReport evaluate_gzsl_rows(const GeneratorParams& params, const Matrix& w_seen,
                              const std::vector<int>& seen_ids, const FeatureTable& test,
                              const AttributeTable& attrs, const SplitSpec& split, ScoreFn fn) {
    if (w_seen.rows != seen_ids.size())
        throw std::invalid_argument("evaluate_gzsl: seen id/row count mismatch");
    const std::vector<int> unseen_ids(split.unseen.begin(), split.unseen.end());
    const Matrix w_unseen = gen_classifiers(params, attribute_matrix(attrs, unseen_ids));
    if (w_seen.rows > 0 && w_seen.cols != w_unseen.cols)
        throw std::invalid_argument("evaluate_gzsl: seen classifier feat_dim mismatch");

    // concatenation [W_u ; W_s], unseen rows first
    Matrix w_all(w_unseen.rows + w_seen.rows, w_unseen.cols);
    std::copy(w_unseen.data.begin(), w_unseen.data.end(), w_all.data.begin());
    std::copy(w_seen.data.begin(), w_seen.data.end(),
              w_all.data.begin() + static_cast<std::ptrdiff_t>(w_unseen.data.size()));
    std::vector<int> all_ids = unseen_ids;
    all_ids.insert(all_ids.end(), seen_ids.begin(), seen_ids.end());

    ClassStats stats;
    for (const auto& sample : test.samples) {
        if (!split.seen.count(sample.class_id) && !split.unseen.count(sample.class_id))
            throw std::invalid_argument("evaluate_gzsl: sample " +
                                        std::to_string(sample.sample_id) +
                                        " belongs to a class outside the split");
        ++stats.total[sample.class_id];
        if (predict_class(w_all, all_ids, sample.features, params.sigma, fn) == sample.class_id)
            ++stats.correct[sample.class_id];
    }

    GzslReport report;
    report.u = stats.mca(split.unseen);
    report.s = stats.mca(split.seen);
    report.h = harmonic_mean(report.u, report.s);
    for (const auto& [cid, cnt] : stats.total) {
        auto it = stats.correct.find(cid);
        const double c = it == stats.correct.end() ? 0.0 : static_cast<double>(it->second);
        report.per_class[cid] = c / static_cast<double>(cnt);
    }
    return report;
}

GzslReport evaluate_gzsl(const GeneratorParams& params, const FeatureTable& test,
                         const AttributeTable& attrs, const SplitSpec& split, ScoreFn fn) {
    const std::vector<int> seen_ids(split.seen.begin(), split.seen.end());
    const Matrix w_seen = gen_classifiers(params, attribute_matrix(attrs, seen_ids));
    return evaluate_gzsl_rows(params, w_seen, seen_ids, test, attrs, split, fn);
}

double harmonic_mean(double u, double s) {
    if (u < 0.0 || u > 1.0 || s < 0.0 || s > 1.0)
        throw std::invalid_argument("harmonic_mean: inputs must lie in [0,1]");
    if (u + s == 0.0) return 0.0;
    return 2.0 * u * s / (u + s);
}

}  // namespace zsl
