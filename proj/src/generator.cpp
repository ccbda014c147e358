#include "zsl/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "zsl/io.hpp"

namespace zsl {

namespace {

double frobenius_sq(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data) s += v * v;
    return s;
}

void check_loss_config(const LossConfig& cfg, bool needs_q) {
    if (cfg.lambda < 0.0) throw std::invalid_argument("loss: lambda must be >= 0");
    if (needs_q && !(cfg.q > 0.0 && cfg.q <= 1.0))
        throw std::invalid_argument("loss: q must lie in (0,1]");
}

Matrix read_values(std::istream& in, std::size_t rows, std::size_t cols, const std::string& path,
                   const std::string& name) {
    Matrix m(rows, cols);
    for (double& v : m.data) {
        std::string tok;
        if (!(in >> tok)) throw ParseError(path + ": short [" + name + "] section");
        v = parse_double(tok, path + ": [" + name + "]");
    }
    return m;
}

}  // namespace

GeneratorParams init_params(std::size_t attr_dim, std::size_t hidden, std::size_t feat_dim,
                            Rng& rng) {
    if (attr_dim < 1 || hidden < 1 || feat_dim < 1)
        throw std::invalid_argument("init_params: dims must be >= 1");
    GeneratorParams p;
    p.w1 = Matrix(hidden, attr_dim);
    p.b1 = Vector(hidden, 0.0);
    p.w2 = Matrix(feat_dim, hidden);
    p.b2 = Vector(feat_dim, 0.0);
    const double bound1 = std::sqrt(6.0 / static_cast<double>(attr_dim));
    for (double& v : p.w1.data) v = rng.uniform(-bound1, bound1);
    const double bound2 = std::sqrt(6.0 / static_cast<double>(hidden));
    for (double& v : p.w2.data) v = rng.uniform(-bound2, bound2);
    p.sigma = 10.0;
    return p;
}

Matrix gen_classifiers(const GeneratorParams& p, const Matrix& attrs) {
    if (attrs.cols != p.w1.cols)
        throw std::invalid_argument("gen_classifiers: attr_dim mismatch (" +
                                    std::to_string(attrs.cols) + " vs " +
                                    std::to_string(p.w1.cols) + ")");
    const std::size_t hidden = p.w1.rows;
    const std::size_t feat = p.w2.rows;
    Matrix out(attrs.rows, feat);
    Vector h(hidden);
    for (std::size_t k = 0; k < attrs.rows; ++k) {
        const auto a = attrs.row(k);
        for (std::size_t j = 0; j < hidden; ++j) {
            const double z = dot(p.w1.row(j), a) + p.b1[j];
            h[j] = z > 0.0 ? z : 0.0;
        }
        for (std::size_t f = 0; f < feat; ++f) {
            const double z = dot(p.w2.row(f), h) + p.b2[f];
            out(k, f) = z > 0.0 ? z : 0.0;
        }
    }
    return out;
}

Vector score(const Matrix& w, std::span<const double> x, double sigma, ScoreFn fn) {
    if (w.cols != x.size())
        throw std::invalid_argument("score: feature dim mismatch (" + std::to_string(w.cols) +
                                    " vs " + std::to_string(x.size()) + ")");
    if (fn == ScoreFn::cosine) {
        Vector logits = cosine_rows(w, x);
        for (double& v : logits) v *= sigma;
        return logits;
    }
    Vector logits(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) logits[r] = dot(w.row(r), x);
    return logits;
}

double gce_loss(std::span<const double> probs, std::size_t label, double q) {
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("gce_loss: q must lie in (0,1]");
    if (label >= probs.size()) throw std::invalid_argument("gce_loss: label out of range");
    return (1.0 - std::pow(probs[label], q)) / q;
}

std::pair<double, ForwardCache> forward_loss(const GeneratorParams& p, const ForwardSpec& spec,
                                             const LossConfig& cfg) {
    const std::size_t hidden = p.w1.rows;
    const std::size_t feat = p.w2.rows;
    if (p.b1.size() != hidden || p.w2.cols != hidden || p.b2.size() != feat)
        throw std::invalid_argument("forward_loss: inconsistent parameter shapes");
    if (spec.attrs.rows > 0 && spec.attrs.cols != p.w1.cols)
        throw std::invalid_argument("forward_loss: attr_dim mismatch");
    if (spec.extra_rows.rows > 0 && spec.extra_rows.cols != feat)
        throw std::invalid_argument("forward_loss: extra_rows feat_dim mismatch");
    if (spec.features.rows > 0 && spec.features.cols != feat)
        throw std::invalid_argument("forward_loss: feature dim mismatch");

    const std::size_t k_gen = spec.attrs.rows;
    const std::size_t n_rows = k_gen + spec.extra_rows.rows;
    const std::size_t n_samples = spec.samples.size();

    bool needs_q = false;
    for (const auto& s : spec.samples) {
        if (s.feature_row >= spec.features.rows)
            throw std::invalid_argument("forward_loss: sample feature_row out of range");
        if (s.target_row >= n_rows)
            throw std::invalid_argument("forward_loss: sample target_row out of range");
        if (!std::isfinite(s.weight))
            throw std::invalid_argument("forward_loss: non-finite sample weight");
        if (s.kind == SampleLoss::generalized_ce) needs_q = true;
    }
    check_loss_config(cfg, needs_q);
    if (n_samples > 0 && n_rows == 0)
        throw std::invalid_argument("forward_loss: samples but no classifier rows");

    ForwardCache cache;
    cache.spec = spec;
    cache.cfg = cfg;
    cache.params = p;
    cache.z1 = Matrix(k_gen, hidden);
    cache.h = Matrix(k_gen, hidden);
    cache.z2 = Matrix(k_gen, feat);
    cache.w_all = Matrix(n_rows, feat);

    for (std::size_t k = 0; k < k_gen; ++k) {
        const auto a = spec.attrs.row(k);
        for (std::size_t j = 0; j < hidden; ++j) {
            const double z = dot(p.w1.row(j), a) + p.b1[j];
            cache.z1(k, j) = z;
            cache.h(k, j) = z > 0.0 ? z : 0.0;
        }
        for (std::size_t f = 0; f < feat; ++f) {
            const double z = dot(p.w2.row(f), cache.h.row(k)) + p.b2[f];
            cache.z2(k, f) = z;
            cache.w_all(k, f) = z > 0.0 ? z : 0.0;
        }
    }
    for (std::size_t e = 0; e < spec.extra_rows.rows; ++e) {
        const auto src = spec.extra_rows.row(e);
        std::copy(src.begin(), src.end(), cache.w_all.row(k_gen + e).begin());
    }

    cache.row_norms.resize(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) cache.row_norms[r] = norm(cache.w_all.row(r));

    const bool cosine = cfg.score_fn == ScoreFn::cosine;
    cache.x_norms.resize(n_samples);
    if (cosine) cache.cosines = Matrix(n_samples, n_rows);
    cache.scores = Matrix(n_samples, n_rows);
    cache.probs = Matrix(n_samples, n_rows);

    double loss = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const auto& sample = spec.samples[s];
        const auto x = spec.features.row(sample.feature_row);
        const double xn = norm(x);
        cache.x_norms[s] = xn;
        if (cosine && xn == 0.0)
            throw std::invalid_argument("forward_loss: zero-norm feature in cosine mode");
        for (std::size_t r = 0; r < n_rows; ++r) {
            if (cosine) {
                const double rn = cache.row_norms[r];
                if (rn == 0.0)
                    throw std::invalid_argument(
                        "forward_loss: zero-norm classifier row in cosine mode");
                const double c = dot(cache.w_all.row(r), x) / (rn * xn);
                cache.cosines(s, r) = c;
                cache.scores(s, r) = p.sigma * c;
            } else {
                cache.scores(s, r) = dot(cache.w_all.row(r), x);
            }
        }
        const auto logits = cache.scores.row(s);
        const Vector pr = softmax(logits);
        std::copy(pr.begin(), pr.end(), cache.probs.row(s).begin());
        double sample_loss;
        if (sample.kind == SampleLoss::cross_entropy) {
            sample_loss = -logits[sample.target_row] + log_sum_exp(logits);
        } else {
            sample_loss = (1.0 - std::pow(pr[sample.target_row], cfg.q)) / cfg.q;
        }
        loss += sample.weight * sample_loss;
    }

    loss += cfg.lambda * (frobenius_sq(p.w1) + frobenius_sq(p.w2));
    cache.loss = loss;
    return {loss, std::move(cache)};
}

ForwardSpec episode_spec(const Episode& episode, SampleLoss kind) {
    if (episode.local_labels.size() != episode.features.rows)
        throw std::invalid_argument("episode_spec: label/feature count mismatch");
    if (episode.features.rows == 0) throw std::invalid_argument("episode_spec: empty episode");
    ForwardSpec spec;
    spec.attrs = episode.attributes;
    spec.extra_rows = Matrix(0, episode.features.cols);
    spec.features = episode.features;
    const double w = 1.0 / static_cast<double>(episode.features.rows);
    for (std::size_t i = 0; i < episode.features.rows; ++i) {
        const int label = episode.local_labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= episode.class_ids.size())
            throw std::invalid_argument("episode_spec: local label out of range");
        spec.samples.push_back({i, static_cast<std::size_t>(label), kind, w});
    }
    return spec;
}

std::pair<double, ForwardCache> ce_loss(const GeneratorParams& p, const Episode& episode,
                                        const LossConfig& cfg) {
    return forward_loss(p, episode_spec(episode, SampleLoss::cross_entropy), cfg);
}

Gradients backward(const GeneratorParams& p, const ForwardCache& cache, const LossConfig& cfg) {
    if (!(cache.params == p) || !(cache.cfg == cfg))
        throw std::invalid_argument("backward: cache was built for different params or config");

    const std::size_t hidden = p.w1.rows;
    const std::size_t feat = p.w2.rows;
    const std::size_t attr_dim = p.w1.cols;
    const std::size_t k_gen = cache.spec.attrs.rows;
    const std::size_t n_rows = cache.w_all.rows;
    const std::size_t n_extra = n_rows - k_gen;
    const bool cosine = cfg.score_fn == ScoreFn::cosine;

    Gradients g;
    g.d_w1 = Matrix(hidden, attr_dim);
    g.d_b1 = Vector(hidden, 0.0);
    g.d_w2 = Matrix(feat, hidden);
    g.d_b2 = Vector(feat, 0.0);
    if (n_extra > 0) g.d_ws = Matrix(n_extra, feat);

    Matrix d_w_all(n_rows, feat);
    for (std::size_t s = 0; s < cache.spec.samples.size(); ++s) {
        const auto& sample = cache.spec.samples[s];
        const auto x = cache.spec.features.row(sample.feature_row);
        const double xn = cache.x_norms[s];
        const double py = cache.probs(s, sample.target_row);
        // d(loss_s)/d(logit_j): CE gives p_j - delta; GCE multiplies by p_y^q,
        // which also kills the blow-up of p_y^(q-1) at p_y = 0.
        const double gce_scale =
            sample.kind == SampleLoss::generalized_ce ? std::pow(py, cfg.q) : 1.0;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const double delta = r == sample.target_row ? 1.0 : 0.0;
            const double dl = sample.weight * gce_scale * (cache.probs(s, r) - delta);
            if (dl == 0.0) continue;
            if (cosine) {
                const double c = cache.cosines(s, r);
                g.d_sigma += dl * c;
                const double dc = dl * p.sigma;
                const double rn = cache.row_norms[r];
                const double inv_rx = 1.0 / (rn * xn);
                const double self = c / (rn * rn);
                auto w_row = cache.w_all.row(r);
                auto d_row = d_w_all.row(r);
                for (std::size_t f = 0; f < feat; ++f)
                    d_row[f] += dc * (x[f] * inv_rx - self * w_row[f]);
            } else {
                auto d_row = d_w_all.row(r);
                for (std::size_t f = 0; f < feat; ++f) d_row[f] += dl * x[f];
            }
        }
    }

    Vector d_z2(feat);
    Vector d_h(hidden);
    for (std::size_t k = 0; k < k_gen; ++k) {
        for (std::size_t f = 0; f < feat; ++f)
            d_z2[f] = cache.z2(k, f) > 0.0 ? d_w_all(k, f) : 0.0;
        std::fill(d_h.begin(), d_h.end(), 0.0);
        const auto h_row = cache.h.row(k);
        for (std::size_t f = 0; f < feat; ++f) {
            const double dz = d_z2[f];
            g.d_b2[f] += dz;
            if (dz == 0.0) continue;
            auto d_w2_row = g.d_w2.row(f);
            const auto w2_row = p.w2.row(f);
            for (std::size_t j = 0; j < hidden; ++j) {
                d_w2_row[j] += dz * h_row[j];
                d_h[j] += dz * w2_row[j];
            }
        }
        const auto a_row = cache.spec.attrs.row(k);
        for (std::size_t j = 0; j < hidden; ++j) {
            const double dz = cache.z1(k, j) > 0.0 ? d_h[j] : 0.0;
            if (dz == 0.0) continue;
            g.d_b1[j] += dz;
            auto d_w1_row = g.d_w1.row(j);
            for (std::size_t d = 0; d < attr_dim; ++d) d_w1_row[d] += dz * a_row[d];
        }
    }

    for (std::size_t e = 0; e < n_extra; ++e) {
        const auto src = d_w_all.row(k_gen + e);
        std::copy(src.begin(), src.end(), g.d_ws.row(e).begin());
    }

    if (cfg.lambda != 0.0) {
        for (std::size_t i = 0; i < p.w1.data.size(); ++i)
            g.d_w1.data[i] += 2.0 * cfg.lambda * p.w1.data[i];
        for (std::size_t i = 0; i < p.w2.data.size(); ++i)
            g.d_w2.data[i] += 2.0 * cfg.lambda * p.w2.data[i];
    }
    return g;
}

void save_checkpoint(const GeneratorParams& p, const std::string& path) {
    std::ostringstream out;
    out << "version=1\n";
    auto write_matrix = [&out](const char* name, const Matrix& m) {
        out << '[' << name << ' ' << m.rows << ' ' << m.cols << "]\n";
        for (std::size_t r = 0; r < m.rows; ++r) {
            for (std::size_t c = 0; c < m.cols; ++c) {
                if (c) out << ' ';
                out << format_g17(m(r, c));
            }
            out << "\n";
        }
    };
    auto write_vector = [&out](const char* name, const Vector& v) {
        out << '[' << name << ' ' << v.size() << "]\n";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out << ' ';
            out << format_g17(v[i]);
        }
        out << "\n";
    };
    write_matrix("w1", p.w1);
    write_vector("b1", p.b1);
    write_matrix("w2", p.w2);
    write_vector("b2", p.b2);
    out << "[sigma]\n" << format_g17(p.sigma) << "\n";
    write_text_file(path, out.str());
}

GeneratorParams load_checkpoint(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "version=1")
        throw ParseError(path + ": expected 'version=1' header");

    auto read_section = [&](const std::string& name, bool vector_like) -> Matrix {
        std::size_t rows = 0, cols = 0;
        do {
            if (!std::getline(in, line)) throw ParseError(path + ": missing [" + name + "] section");
        } while (line.empty());
        std::istringstream hdr(line);
        char open = 0;
        std::string tag;
        hdr >> open >> tag;
        if (open != '[')
            throw ParseError(path + ": expected [" + name + "] section, got '" + line + "'");
        if (vector_like) {
            if (tag != name || !(hdr >> rows)) {
                // single-value section writes its size inline with the bracket
                if (tag == name + "]")
                    rows = 1;
                else
                    throw ParseError(path + ": malformed [" + name + "] header");
            }
            cols = 1;
        } else {
            if (tag != name || !(hdr >> rows >> cols))
                throw ParseError(path + ": malformed [" + name + "] header");
        }
        if (rows == 0 || cols == 0) throw ParseError(path + ": empty [" + name + "] section");
        return read_values(in, rows, cols, path, name);
    };

    GeneratorParams p;
    p.w1 = read_section("w1", false);
    p.b1 = read_section("b1", true).data;
    p.w2 = read_section("w2", false);
    p.b2 = read_section("b2", true).data;
    p.sigma = read_section("sigma", true).data.at(0);

    if (p.b1.size() != p.w1.rows || p.w2.cols != p.w1.rows || p.b2.size() != p.w2.rows)
        throw ParseError(path + ": inconsistent parameter shapes");
    if (!all_finite(p.w1.data) || !all_finite(p.b1) || !all_finite(p.w2.data) ||
        !all_finite(p.b2) || !std::isfinite(p.sigma))
        throw ParseError(path + ": non-finite parameter values");
    return p;
}

}  // namespace zsl
