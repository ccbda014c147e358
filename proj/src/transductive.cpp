#include "zsl/transductive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "zsl/io.hpp"
#include "zsl/optim.hpp"
#include "zsl/rng.hpp"

namespace zsl {

namespace {

void check_transductive_config(const TransductiveConfig& cfg) {
    if (!(cfg.gamma > 0.0)) throw std::invalid_argument("transductive: gamma must be positive");
    if (!(cfg.q > 0.0 && cfg.q <= 1.0))
        throw std::invalid_argument("transductive: q must lie in (0,1]");
    if (cfg.n_rounds < 1) throw std::invalid_argument("transductive: n_rounds must be >= 1");
    if (cfg.n_inner < 1) throw std::invalid_argument("transductive: n_inner must be >= 1");
    if (cfg.corrupt_fraction < 0.0 || cfg.corrupt_fraction > 1.0)
        throw std::invalid_argument("transductive: corrupt_fraction must lie in [0,1]");
}

std::size_t row_of(const std::vector<int>& sorted_ids, int id, const char* what) {
    const auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
    if (it == sorted_ids.end() || *it != id)
        throw std::invalid_argument(std::string("joint_loss: ") + what + " class " +
                                    std::to_string(id) + " not in its class set");
    return static_cast<std::size_t>(it - sorted_ids.begin());
}

}  // namespace

std::vector<PseudoLabeled> pseudo_label(const GeneratorParams& params, const FeatureTable& x_u,
                                        const AttributeTable& attrs, const std::set<int>& unseen,
                                        ScoreFn fn) {
    if (unseen.empty()) throw std::invalid_argument("pseudo_label: empty unseen class set");
    const std::vector<int> ids(unseen.begin(), unseen.end());
    const Matrix w = gen_classifiers(params, attribute_matrix(attrs, ids));

    std::vector<PseudoLabeled> out;
    out.reserve(x_u.samples.size());
    for (const auto& sample : x_u.samples) {
        const Vector logits = score(w, sample.features, params.sigma, fn);
        PseudoLabeled pl;
        pl.sample_id = sample.sample_id;
        pl.true_class = sample.class_id >= 0 ? sample.class_id : -1;
        pl.features = sample.features;
        pl.probs = softmax(logits);

        std::size_t best = 0;
        for (std::size_t r = 1; r < pl.probs.size(); ++r)
            if (pl.probs[r] > pl.probs[best]) best = r;  // ids ascending: ties keep the lowest
        pl.label = ids[best];

        if (pl.probs.size() < 2) {
            pl.ratio = std::numeric_limits<double>::infinity();
        } else {
            double second = -1.0;
            for (std::size_t r = 0; r < pl.probs.size(); ++r)
                if (r != best && pl.probs[r] > second) second = pl.probs[r];
            pl.ratio = second > 0.0 ? pl.probs[best] / second
                                    : std::numeric_limits<double>::infinity();
        }
        out.push_back(std::move(pl));
    }
    std::sort(out.begin(), out.end(),
              [](const PseudoLabeled& a, const PseudoLabeled& b) { return a.sample_id < b.sample_id; });
    return out;
}

ConfidentSet filter_confident(const std::vector<PseudoLabeled>& labeled, double gamma) {
    ConfidentSet set;
    for (const auto& pl : labeled)
        if (pl.ratio > gamma) set.samples.push_back(pl);
    return set;
}

std::pair<double, ForwardCache> joint_loss(const GeneratorParams& params,
                                           const SeenClassifier& seen, const Episode& t_s,
                                           const Episode& t_u, const AttributeTable& attrs,
                                           const std::set<int>& unseen, const LossConfig& cfg,
                                           SampleLoss unseen_kind) {
    if (t_s.features.rows == 0) throw std::invalid_argument("joint_loss: empty seen episode");
    if (seen.w_s.rows != seen.class_ids.size())
        throw std::invalid_argument("joint_loss: seen classifier id/row count mismatch");

    const std::vector<int> unseen_ids(unseen.begin(), unseen.end());

    ForwardSpec spec;
    spec.attrs = attribute_matrix(attrs, unseen_ids);
    spec.extra_rows = seen.w_s;

    const std::size_t n_u = t_u.features.rows;
    const std::size_t n_s = t_s.features.rows;
    const std::size_t feat = t_s.features.cols;
    if (n_u > 0 && t_u.features.cols != feat)
        throw std::invalid_argument("joint_loss: episode feat_dim mismatch");
    spec.features = Matrix(n_u + n_s, feat);
    std::copy(t_u.features.data.begin(), t_u.features.data.end(), spec.features.data.begin());
    std::copy(t_s.features.data.begin(), t_s.features.data.end(),
              spec.features.data.begin() + static_cast<std::ptrdiff_t>(t_u.features.data.size()));

    for (std::size_t i = 0; i < n_u; ++i) {
        const int global = t_u.class_ids.at(static_cast<std::size_t>(t_u.local_labels[i]));
        spec.samples.push_back({i, row_of(unseen_ids, global, "unseen"), unseen_kind,
                                1.0 / static_cast<double>(n_u)});
    }
    for (std::size_t j = 0; j < n_s; ++j) {
        const int global = t_s.class_ids.at(static_cast<std::size_t>(t_s.local_labels[j]));
        const auto it = std::find(seen.class_ids.begin(), seen.class_ids.end(), global);
        if (it == seen.class_ids.end())
            throw std::invalid_argument("joint_loss: seen class " + std::to_string(global) +
                                        " not in the seen classifier");
        const std::size_t row = static_cast<std::size_t>(it - seen.class_ids.begin());
        spec.samples.push_back({n_u + j, unseen_ids.size() + row, SampleLoss::cross_entropy,
                                1.0 / static_cast<double>(n_s)});
    }
    return forward_loss(params, spec, cfg);
}

TransductiveResult train_transductive(const GeneratorParams& start,
                                      const FeatureTable& seen_train, const AttributeTable& attrs,
                                      const SplitSpec& split, const FeatureTable& x_u,
                                      const TransductiveConfig& cfg) {
    check_transductive_config(cfg);
    if (cfg.train.m_classes < 2)
        throw std::invalid_argument("transductive: m_classes must be >= 2");
    if (cfg.train.n_per_class < 1)
        throw std::invalid_argument("transductive: n_per_class must be >= 1");
    if (!(cfg.train.lr > 0.0)) throw std::invalid_argument("transductive: lr must be positive");
    if (cfg.train.lambda < 0.0)
        throw std::invalid_argument("transductive: lambda must be >= 0");

    const ClassIndex seen_index = build_class_index(seen_train, split.seen);
    if (seen_index.by_class.empty())
        throw std::invalid_argument("train_transductive: no seen-class training samples");

    const std::vector<int> unseen_ids(split.unseen.begin(), split.unseen.end());

    TransductiveResult result;
    result.params = start;
    result.seen.class_ids.assign(split.seen.begin(), split.seen.end());
    result.seen.w_s =
        gen_classifiers(start, attribute_matrix(attrs, result.seen.class_ids));

    AdamState adam = adam_init(result.params, result.seen.w_s, AdamConfig{.lr = cfg.train.lr});
    Rng rng(cfg.train.seed);
    const LossConfig lcfg{.lambda = cfg.train.lambda, .q = cfg.q, .score_fn = cfg.train.score_fn};
    const SampleLoss u_kind =
        cfg.use_gce ? SampleLoss::generalized_ce : SampleLoss::cross_entropy;

    for (std::size_t round = 1; round <= cfg.n_rounds; ++round) {
        auto labeled = pseudo_label(result.params, x_u, attrs, split.unseen, cfg.train.score_fn);
        ConfidentSet conf = filter_confident(labeled, cfg.gamma);

        if (cfg.corrupt_fraction > 0.0 && !conf.samples.empty() && unseen_ids.size() > 1) {
            const std::size_t k = static_cast<std::size_t>(
                cfg.corrupt_fraction * static_cast<double>(conf.samples.size()));
            for (std::size_t pos : rng.sample_without_replacement(conf.samples.size(), k)) {
                auto& victim = conf.samples[pos];
                const std::size_t cur = row_of(unseen_ids, victim.label, "unseen");
                std::size_t pick = rng.below(unseen_ids.size() - 1);
                if (pick >= cur) ++pick;
                victim.label = unseen_ids[pick];
            }
        }

        RoundTrace trace;
        trace.round = round;
        trace.confident_count = conf.samples.size();
        trace.confident_fraction =
            x_u.samples.empty() ? 0.0
                                : static_cast<double>(conf.samples.size()) /
                                      static_cast<double>(x_u.samples.size());
        std::size_t with_truth = 0, correct = 0;
        for (const auto& s : conf.samples) {
            if (s.true_class < 0) continue;
            ++with_truth;
            if (s.label == s.true_class) ++correct;
        }
        trace.pseudo_label_accuracy =
            with_truth == 0 ? std::numeric_limits<double>::quiet_NaN()
                            : static_cast<double>(correct) / static_cast<double>(with_truth);

        FeatureTable conf_table;
        conf_table.feat_dim = x_u.feat_dim;
        for (const auto& s : conf.samples)
            conf_table.samples.push_back({s.sample_id, s.label, s.features});
        const ClassIndex conf_index = build_class_index(conf_table, split.unseen);

        double loss_sum = 0.0;
        for (std::size_t it = 0; it < cfg.n_inner; ++it) {
            const Episode t_s = sample_episode(seen_index, seen_train, attrs, rng,
                                               cfg.train.m_classes, cfg.train.n_per_class);
            Episode t_u;
            if (!conf_index.by_class.empty()) {
                t_u = sample_episode(conf_index, conf_table, attrs, rng, cfg.train.m_classes,
                                     cfg.train.n_per_class);
            } else {
                t_u.attributes = Matrix(0, attrs.attr_dim);
                t_u.features = Matrix(0, seen_train.feat_dim);
            }
            auto [loss, cache] =
                joint_loss(result.params, result.seen, t_s, t_u, attrs, split.unseen, lcfg, u_kind);
            const Gradients grads = backward(result.params, cache, lcfg);
            adam_step(result.params, &result.seen.w_s, grads, adam);
            loss_sum += loss;
        }
        trace.loss_mean = loss_sum / static_cast<double>(cfg.n_inner);
        result.trace.push_back(trace);
    }

    result.final_labels = pseudo_label(result.params, x_u, attrs, split.unseen, cfg.train.score_fn);
    return result;
}

void save_seen_classifier(const SeenClassifier& s, const std::string& path) {
    if (s.w_s.rows != s.class_ids.size())
        throw std::invalid_argument("save_seen_classifier: id/row count mismatch");
    std::ostringstream out;
    out << "version=1\n[classes " << s.class_ids.size() << "]\n";
    for (std::size_t i = 0; i < s.class_ids.size(); ++i) {
        if (i) out << ' ';
        out << s.class_ids[i];
    }
    out << "\n[w_s " << s.w_s.rows << ' ' << s.w_s.cols << "]\n";
    for (std::size_t r = 0; r < s.w_s.rows; ++r) {
        for (std::size_t c = 0; c < s.w_s.cols; ++c) {
            if (c) out << ' ';
            out << format_g17(s.w_s(r, c));
        }
        out << "\n";
    }
    write_text_file(path, out.str());
}

SeenClassifier load_seen_classifier(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "version=1")
        throw ParseError(path + ": expected 'version=1' header");
    std::size_t count = 0;
    if (!std::getline(in, line) || sscanf(line.c_str(), "[classes %zu]", &count) != 1)
        throw ParseError(path + ": expected [classes n] section");
    SeenClassifier s;
    s.class_ids.resize(count);
    for (auto& id : s.class_ids) {
        std::string tok;
        if (!(in >> tok)) throw ParseError(path + ": short class id list");
        id = static_cast<int>(parse_int(tok, path + ": class id"));
    }
    std::getline(in, line);  // finish the id line
    std::size_t rows = 0, cols = 0;
    if (!std::getline(in, line) || sscanf(line.c_str(), "[w_s %zu %zu]", &rows, &cols) != 2)
        throw ParseError(path + ": expected [w_s rows cols] section");
    if (rows != count) throw ParseError(path + ": class count does not match w_s rows");
    s.w_s = Matrix(rows, cols);
    for (double& v : s.w_s.data) {
        std::string tok;
        if (!(in >> tok)) throw ParseError(path + ": short w_s section");
        v = parse_double(tok, path + ": w_s");
    }
    if (!all_finite(s.w_s.data)) throw ParseError(path + ": non-finite classifier values");
    return s;
}

}  // namespace zsl
