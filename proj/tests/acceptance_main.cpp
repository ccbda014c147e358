#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/episode.hpp"
#include "zsl/generator.hpp"
#include "zsl/gradcheck.hpp"
#include "zsl/io.hpp"
#include "zsl/linalg.hpp"
#include "zsl/rng.hpp"
#include "zsl/trainer.hpp"
#include "zsl/transductive.hpp"

// Acceptance suite: one line per release criterion, thresholds pinned below.
// Run as: acceptance <path-to-zsl>

namespace fs = std::filesystem;
using namespace zsl;

namespace {

// pinned thresholds
constexpr std::size_t kGradSeeds = 10;       // criterion 1: seeds per loss kind
constexpr double kGradWallSeconds = 30.0;    //              wall-clock budget
constexpr double kExactTol = 1e-12;          // criteria 2, 9: analytic identities
constexpr double kCeLimitTol = 1e-4;         // criterion 2: q -> 0 limit at q = 1e-6
constexpr double kHarmonicTol = 5e-4;        // criterion 3: reference pairs carry 3 decimals
constexpr double kNcmFloor = 0.95;           // criterion 4: nearest-class-mean oracle
constexpr double kZslFloor = 0.80;           // criterion 4: trained top-1 MCA, unseen only
constexpr double kTrainWallSeconds = 300.0;  //              training budget
constexpr double kSeenFloor = 0.80;          // criterion 5: generalized seen MCA
constexpr double kPremiseCeil = 0.90;        // criterion 6: inductive unseen MCA must sit below
constexpr double kTransGain = 0.02;          //              required unseen-MCA improvement
constexpr double kTransWallSeconds = 300.0;  //              self-training budget
constexpr double kCorruptFraction = 0.3;     // criterion 7: pseudo-label corruption rate

int g_failed = 0;
std::string g_zsl;

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

void report(int idx, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", idx, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

struct State {
    SyntheticData d1;       // default synthetic benchmark, seed 1
    GeneratorParams model;  // trained on d1 with default settings
    double zsl_t1 = 0.0;
    bool trained = false;
    SyntheticData d3;  // same layout at noise 0.3
    bool have_d3 = false;
};

// ---------------------------------------------------------------- criterion 1
void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    bool all = true;
    double worst = 0.0;
    for (const CheckLoss kind : {CheckLoss::ce, CheckLoss::gce, CheckLoss::joint}) {
        for (std::uint64_t seed = 1; seed <= kGradSeeds; ++seed) {
            const GradCheckInstance inst = make_check_instance(kind, seed);
            const GradCheckReport rep = check_gradients(inst.params, inst.spec, inst.cfg);
            all = all && rep.pass;
            for (const auto& t : rep.tensors) worst = std::max(worst, t.max_rel_err);
        }
    }
    const double elapsed = seconds_since(t0);
    report(1, all && elapsed < kGradWallSeconds,
           fmt("analytic gradients match finite differences over 3 losses x %zu seeds "
               "(max rel err %.2e, %.2fs < %.0fs)",
               kGradSeeds, worst, elapsed, kGradWallSeconds));
}

// ---------------------------------------------------------------- criterion 2
void criterion2() {
    bool ok = true;

    // across p = 0.01 .. 0.99: q = 1 is exactly MAE, q -> 0 approaches CE
    for (int i = 1; i <= 99; ++i) {
        const double p = i / 100.0;
        const Vector probs{p, 1.0 - p};
        ok = ok && gce_loss(probs, 0, 1.0) == 1.0 - p;
        ok = ok && near(gce_loss(probs, 0, 1e-6), -std::log(p), kCeLimitTol);
    }
    const Vector quarter{0.25, 0.75};
    ok = ok && near(gce_loss(quarter, 0, 0.5), 1.0, kExactTol);  // (1 - sqrt(1/4)) / (1/2)

    // identity generator, orthogonal attribute rows, equidistant feature:
    // cross-entropy must be exactly ln 2 plus the regularizer
    GeneratorParams id2;
    id2.w1 = Matrix(2, 2);
    id2.w1(0, 0) = id2.w1(1, 1) = 1.0;
    id2.b1 = Vector(2, 0.0);
    id2.w2 = id2.w1;
    id2.b2 = Vector(2, 0.0);
    id2.sigma = 1.0;
    ForwardSpec spec;
    spec.attrs = id2.w1;
    spec.extra_rows = Matrix(0, 2);
    spec.features = Matrix(1, 2, 1.0);
    spec.samples = {{0, 0, SampleLoss::cross_entropy, 1.0}};
    LossConfig cfg;
    cfg.lambda = 0.01;
    const auto [loss, cache] = forward_loss(id2, spec, cfg);
    const double want = std::log(2.0) + 0.01 * 4.0;
    ok = ok && near(loss, want, kExactTol);
    ok = ok && near(cache.probs(0, 0), 0.5, kExactTol);

    report(2, ok,
           fmt("loss identities hold for p in {0.01..0.99}: exact MAE at q=1, CE limit at "
               "q->0 (tol %.0e), symmetric two-class CE = ln2 + reg (tol %.0e)",
               kCeLimitTol, kExactTol));
}

// ---------------------------------------------------------------- criterion 3
void criterion3() {
    const double h1 = harmonic_mean(0.627, 0.770);
    const double h2 = harmonic_mean(0.802, 0.900);
    bool ok = near(h1, 0.691, kHarmonicTol) && near(h2, 0.848, kHarmonicTol);
    ok = ok && harmonic_mean(0.0, 0.9) == 0.0 && harmonic_mean(1.0, 1.0) == 1.0;
    report(3, ok,
           fmt("harmonic mean reproduces the reference pairs: h(0.627,0.770)=%.4f "
               "(want 0.691), h(0.802,0.900)=%.4f (want 0.848), tol %.0e",
               h1, h2, kHarmonicTol));
}

// ---------------------------------------------------------------- criterion 4
// The oracle classifies unseen test samples by nearest class mean computed
// straight from the generating linear map, with plain loops only.
double ncm_oracle_mca(const SyntheticData& d) {
    const Matrix& map = d.truth.map;  // feat_dim x attr_dim
    std::vector<int> uids(d.split.unseen.begin(), d.split.unseen.end());
    std::vector<Vector> mu;
    for (const int cid : uids) {
        const Vector& a = d.attributes.entries.at(cid);
        Vector m(map.rows, 0.0);
        for (std::size_t i = 0; i < map.rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < map.cols; ++j) s += map(i, j) * a[j];
            m[i] = s;
        }
        mu.push_back(std::move(m));
    }
    std::map<int, std::size_t> correct, total;
    for (const auto& sample : d.test.samples) {
        if (!d.split.unseen.count(sample.class_id)) continue;
        std::size_t best = 0;
        double best_d2 = 0.0;
        for (std::size_t c = 0; c < mu.size(); ++c) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < mu[c].size(); ++i) {
                const double diff = sample.features[i] - mu[c][i];
                d2 += diff * diff;
            }
            if (c == 0 || d2 < best_d2) {  // ties keep the lowest id (ascending uids)
                best = c;
                best_d2 = d2;
            }
        }
        ++total[sample.class_id];
        if (uids[best] == sample.class_id) ++correct[sample.class_id];
    }
    double sum = 0.0;
    for (const auto& [cid, cnt] : total)
        sum += static_cast<double>(correct[cid]) / static_cast<double>(cnt);
    return sum / static_cast<double>(total.size());
}

void criterion4(State& st) {
    st.d1 = generate_synthetic(SyntheticSpec{});
    const double ncm = ncm_oracle_mca(st.d1);

    const auto t0 = std::chrono::steady_clock::now();
    const TrainConfig cfg;  // library defaults are the pinned settings
    st.model = train_inductive(st.d1.train, st.d1.attributes, st.d1.split, cfg);
    const double elapsed = seconds_since(t0);

    const FeatureTable unseen_test = filter_by_classes(st.d1.test, st.d1.split.unseen);
    st.zsl_t1 = evaluate_zsl(st.model, unseen_test, st.d1.attributes, st.d1.split.unseen,
                             ScoreFn::cosine);
    st.trained = true;
    report(4, ncm >= kNcmFloor && st.zsl_t1 >= kZslFloor && elapsed < kTrainWallSeconds,
           fmt("unseen top-1 MCA: nearest-mean oracle %.3f >= %.2f, trained generator "
               "%.3f >= %.2f (%.0fs < %.0fs)",
               ncm, kNcmFloor, st.zsl_t1, kZslFloor, elapsed, kTrainWallSeconds));
}

// ---------------------------------------------------------------- criterion 5
void criterion5(State& st) {
    if (!st.trained) {
        report(5, false, "prerequisite failed: no trained model from criterion 4");
        return;
    }
    const std::vector<int> uids(st.d1.split.unseen.begin(), st.d1.split.unseen.end());
    const std::vector<int> sids(st.d1.split.seen.begin(), st.d1.split.seen.end());
    const Matrix w_u = gen_classifiers(st.model, attribute_matrix(st.d1.attributes, uids));
    const Matrix w_s = gen_classifiers(st.model, attribute_matrix(st.d1.attributes, sids));
    Matrix w_all(w_u.rows + w_s.rows, w_u.cols);
    for (std::size_t r = 0; r < w_u.rows; ++r)
        std::copy(w_u.row(r).begin(), w_u.row(r).end(), w_all.row(r).begin());
    for (std::size_t r = 0; r < w_s.rows; ++r)
        std::copy(w_s.row(r).begin(), w_s.row(r).end(), w_all.row(w_u.rows + r).begin());

    // argmax over the unseen block of the concatenated classifier must equal
    // the restricted evaluation bit for bit
    std::map<int, std::size_t> correct, total;
    for (const auto& sample : st.d1.test.samples) {
        if (!st.d1.split.unseen.count(sample.class_id)) continue;
        const Vector logits = score(w_all, sample.features, st.model.sigma, ScoreFn::cosine);
        std::size_t best = 0;
        for (std::size_t r = 1; r < uids.size(); ++r)
            if (logits[r] > logits[best]) best = r;
        ++total[sample.class_id];
        if (uids[best] == sample.class_id) ++correct[sample.class_id];
    }
    double sum = 0.0;
    for (const auto& [cid, cnt] : total)
        sum += static_cast<double>(correct[cid]) / static_cast<double>(cnt);
    const double restricted = sum / static_cast<double>(total.size());

    const GzslReport g =
        evaluate_gzsl(st.model, st.d1.test, st.d1.attributes, st.d1.split, ScoreFn::cosine);
    const bool ok = restricted == st.zsl_t1 && g.s >= kSeenFloor &&
                    g.h == harmonic_mean(g.u, g.s);
    report(5, ok,
           fmt("classifier concatenation: unseen block reproduces restricted ZSL exactly "
               "(%.3f), generalized u=%.3f s=%.3f>=%.2f h=%.3f",
               restricted, g.u, g.s, kSeenFloor, g.h));
}

// ---------------------------------------------------------------- criterion 6
void criterion6(State& st) {
    if (!st.trained) {
        report(6, false, "prerequisite failed: no trained model from criterion 4");
        return;
    }
    SyntheticSpec sp3;
    sp3.noise_std = 0.3;
    st.d3 = generate_synthetic(sp3);
    st.have_d3 = true;

    const GzslReport before =
        evaluate_gzsl(st.model, st.d3.test, st.d3.attributes, st.d3.split, ScoreFn::cosine);
    const bool premise = before.u < kPremiseCeil;

    TransductiveConfig tc;  // gamma 1.2, q 0.5, 5 rounds x 1000, GCE
    tc.train.seed = 2;
    const FeatureTable x_u = filter_by_classes(st.d3.test, st.d3.split.unseen);
    const auto t0 = std::chrono::steady_clock::now();
    const TransductiveResult res =
        train_transductive(st.model, st.d3.train, st.d3.attributes, st.d3.split, x_u, tc);
    const double elapsed = seconds_since(t0);

    const GzslReport after = evaluate_gzsl_rows(res.params, res.seen.w_s, res.seen.class_ids,
                                                st.d3.test, st.d3.attributes, st.d3.split,
                                                ScoreFn::cosine);
    bool counts_ok = true;
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        counts_ok = counts_ok && res.trace[i].confident_count >= res.trace[i - 1].confident_count;

    const bool ok = premise && after.u >= before.u + kTransGain && counts_ok &&
                    elapsed < kTransWallSeconds;
    report(6, ok,
           fmt("self-training lifts unseen MCA on the noisy benchmark: %.3f -> %.3f "
               "(gain %.3f >= %.2f, premise %.3f < %.2f, confident counts non-decreasing, "
               "%.0fs < %.0fs)",
               before.u, after.u, after.u - before.u, kTransGain, before.u, kPremiseCeil,
               elapsed, kTransWallSeconds));
}

// ---------------------------------------------------------------- criterion 7
void criterion7(State& st) {
    if (!st.trained || !st.have_d3) {
        report(7, false, "prerequisite failed: criterion 4 or 6 did not run");
        return;
    }
    const FeatureTable x_u = filter_by_classes(st.d3.test, st.d3.split.unseen);
    bool ok = true;
    std::string detail;
    for (const std::uint64_t seed : {1, 2, 3}) {
        TransductiveConfig tc;
        tc.corrupt_fraction = kCorruptFraction;
        tc.train.seed = seed;
        tc.use_gce = true;
        const TransductiveResult gce = train_transductive(st.model, st.d3.train,
                                                          st.d3.attributes, st.d3.split, x_u, tc);
        tc.use_gce = false;
        const TransductiveResult ce = train_transductive(st.model, st.d3.train,
                                                         st.d3.attributes, st.d3.split, x_u, tc);
        const double u_gce = evaluate_gzsl_rows(gce.params, gce.seen.w_s, gce.seen.class_ids,
                                                st.d3.test, st.d3.attributes, st.d3.split,
                                                ScoreFn::cosine)
                                 .u;
        const double u_ce = evaluate_gzsl_rows(ce.params, ce.seen.w_s, ce.seen.class_ids,
                                               st.d3.test, st.d3.attributes, st.d3.split,
                                               ScoreFn::cosine)
                                .u;
        ok = ok && u_gce >= u_ce;
        detail += fmt("%sseed %llu: %.3f vs %.3f", detail.empty() ? "" : ", ",
                      static_cast<unsigned long long>(seed), u_gce, u_ce);
    }
    report(7, ok,
           fmt("generalized CE beats plain CE under %.0f%% pseudo-label corruption (%s)",
               kCorruptFraction * 100.0, detail.c_str()));
}

// ---------------------------------------------------------------- criterion 8
int run_cli(const std::string& args) {
    const std::string cmd = g_zsl + " " + args;
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool run_pipeline(const fs::path& dir) {
    const std::string d = dir.string();
    bool ok = true;
    ok = ok && run_cli("synth --out " + d + "/data --n-seen 12 --n-unseen 4"
                       " --samples-per-class 20 --attr-dim 8 --feat-dim 16"
                       " --noise-std 0.1 --seed 7 > /dev/null") == 0;
    ok = ok && run_cli("train --data " + d + "/data --out " + d + "/tr --iterations 300"
                       " --hidden 64 --m-classes 8 --n-per-class 4 --seed 3 --plotdata"
                       " > /dev/null") == 0;
    ok = ok && run_cli("eval --data " + d + "/data --checkpoint " + d + "/tr/checkpoint.txt"
                       " --out " + d + "/ev > /dev/null") == 0;
    ok = ok && run_cli("transduce --data " + d + "/data --checkpoint " + d +
                       "/tr/checkpoint.txt --out " + d + "/td --rounds 2 --inner 50"
                       " --m-classes 8 --n-per-class 4 --seed 3 > /dev/null") == 0;
    ok = ok && run_cli("ablate --data " + d + "/data --out " + d + "/ab --iterations 100"
                       " --hidden 32 --m-classes 8 --n-per-class 4 --seed 2 > /dev/null") == 0;
    ok = ok && run_cli("gradcheck --seeds 2 > " + d + "/gradcheck.txt") == 0;
    return ok;
}

void criterion8() {
    const fs::path work = "acceptance_work";
    fs::remove_all(work);
    fs::create_directories(work / "runA");
    fs::create_directories(work / "runB");
    const bool ran = run_pipeline(work / "runA") && run_pipeline(work / "runB");

    const std::vector<std::string> files = {
        "data/attributes.csv", "data/features_train.csv", "data/features_test.csv",
        "data/split.csv",      "data/groundtruth.txt",    "tr/checkpoint.txt",
        "tr/report.csv",       "tr/loss_curve.csv",       "ev/metrics.csv",
        "td/checkpoint.txt",   "td/seen_classifier.txt",  "td/trace.csv",
        "td/metrics.csv",      "ab/ablation.csv",         "gradcheck.txt"};
    std::size_t matched = 0;
    std::string first_diff;
    for (const auto& f : files) {
        std::string a, b;
        try {
            a = read_text_file((work / "runA" / f).string());
            b = read_text_file((work / "runB" / f).string());
        } catch (const IoError&) {
        }
        if (!a.empty() && a == b) {
            ++matched;
        } else if (first_diff.empty()) {
            first_diff = f;
        }
    }
    const bool ok = ran && matched == files.size();
    report(8, ok,
           ok ? fmt("rerunning the full CLI pipeline reproduces all %zu output files "
                    "byte for byte",
                    files.size())
              : fmt("pipeline %s; %zu/%zu files identical (first mismatch: %s)",
                    ran ? "ran" : "failed", matched, files.size(),
                    first_diff.empty() ? "none" : first_diff.c_str()));
}

// ---------------------------------------------------------------- criterion 9
void criterion9(State& st) {
    bool ok = true;
    std::string why;
    auto fail = [&](const char* what) {
        ok = false;
        if (why.empty()) why = what;
    };

    // episode sampler invariants over 1000 draws
    {
        const ClassIndex index = build_class_index(st.d1.train, st.d1.split.seen);
        Rng rng(99);
        std::set<int> covered;
        for (int draw = 0; draw < 1000 && ok; ++draw) {
            const Episode ep = sample_episode(index, st.d1.train, st.d1.attributes, rng, 32, 4);
            if (ep.class_ids.size() != 32 || ep.features.rows != 128) fail("episode shape");
            std::set<int> distinct(ep.class_ids.begin(), ep.class_ids.end());
            if (distinct.size() != 32) fail("episode classes not distinct");
            for (const int cid : ep.class_ids) {
                if (!st.d1.split.seen.count(cid)) fail("episode drew a non-seen class");
                covered.insert(cid);
            }
            for (std::size_t i = 0; i < ep.local_labels.size(); ++i)
                if (ep.local_labels[i] != static_cast<int>(i / 4)) fail("episode label order");
            for (std::size_t r = 0; r < ep.attributes.rows; ++r) {
                const Vector& a = st.d1.attributes.entries.at(ep.class_ids[r]);
                for (std::size_t j = 0; j < a.size(); ++j)
                    if (ep.attributes(r, j) != a[j]) fail("episode attribute rows");
            }
        }
        if (covered.size() != st.d1.split.seen.size()) fail("episode class coverage");
    }

    // cosine scoring is invariant to feature scale
    {
        const GradCheckInstance inst = make_check_instance(CheckLoss::ce, 5);
        const auto [l1, c1] = forward_loss(inst.params, inst.spec, inst.cfg);
        ForwardSpec scaled = inst.spec;
        for (double& v : scaled.features.data) v *= 137.0;
        const auto [l2, c2] = forward_loss(inst.params, scaled, inst.cfg);
        for (std::size_t i = 0; i < c1.probs.data.size(); ++i)
            if (!near(c1.probs.data[i], c2.probs.data[i], kExactTol))
                fail("cosine scale invariance");

        // softmax rows are normalized and shift-invariant
        for (std::size_t r = 0; r < c1.probs.rows; ++r) {
            double s = 0.0;
            for (const double v : c1.probs.row(r)) s += v;
            if (!near(s, 1.0, kExactTol)) fail("softmax normalization");
        }
        Rng rng(17);
        Vector v(9);
        for (double& x : v) x = rng.uniform(-30.0, 30.0);
        Vector shifted = v;
        for (double& x : shifted) x += 1000.0;
        const Vector pa = softmax(v), pb = softmax(shifted);
        for (std::size_t i = 0; i < pa.size(); ++i)
            if (!near(pa[i], pb[i], kExactTol)) fail("softmax shift invariance");
    }

    // the peakiness filter is monotone in gamma
    if (st.trained) {
        const FeatureTable unseen_test = filter_by_classes(st.d1.test, st.d1.split.unseen);
        const auto labeled = pseudo_label(st.model, unseen_test, st.d1.attributes,
                                          st.d1.split.unseen, ScoreFn::cosine);
        std::size_t prev = labeled.size() + 1;
        for (const double gamma : {0.5, 1.0, 1.2, 1.5, 2.0, 5.0, 10.0, 1e3}) {
            const std::size_t kept = filter_confident(labeled, gamma).samples.size();
            if (kept > prev) fail("peakiness filter monotonicity");
            prev = kept;
        }
    } else {
        fail("no trained model for the filter invariant");
    }

    // episode loss is equivariant under class permutation
    {
        const ClassIndex index = build_class_index(st.d1.train, st.d1.split.seen);
        Rng rng(7);
        const Episode ep = sample_episode(index, st.d1.train, st.d1.attributes, rng, 2, 4);
        Episode swapped = ep;
        std::swap(swapped.class_ids[0], swapped.class_ids[1]);
        for (std::size_t j = 0; j < ep.attributes.cols; ++j) {
            swapped.attributes(0, j) = ep.attributes(1, j);
            swapped.attributes(1, j) = ep.attributes(0, j);
        }
        for (int& l : swapped.local_labels) l = 1 - l;
        Rng prng(3);
        const GeneratorParams p = init_params(st.d1.attributes.attr_dim, 64,
                                              st.d1.train.feat_dim, prng);
        LossConfig cfg;
        cfg.lambda = 1e-4;
        const auto [la, ca] = ce_loss(p, ep, cfg);
        const auto [lb, cb] = ce_loss(p, swapped, cfg);
        if (!near(la, lb, kExactTol)) fail("permutation equivariance");
    }

    report(9, ok,
           ok ? fmt("structural invariants hold: episode sampling, cosine scale invariance, "
                    "softmax normalization, filter monotonicity, permutation equivariance "
                    "(tol %.0e)",
                    kExactTol)
              : fmt("invariant violated: %s", why.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-zsl>\n");
        return 2;
    }
    g_zsl = argv[1];

    State st;
    const auto guarded = [](int idx, auto&& f) {
        try {
            f();
        } catch (const std::exception& e) {
            report(idx, false, fmt("unexpected exception: %s", e.what()));
        }
    };
    guarded(1, [&] { criterion1(); });
    guarded(2, [&] { criterion2(); });
    guarded(3, [&] { criterion3(); });
    guarded(4, [&] { criterion4(st); });
    guarded(5, [&] { criterion5(st); });
    guarded(6, [&] { criterion6(st); });
    guarded(7, [&] { criterion7(st); });
    guarded(8, [&] { criterion8(); });
    guarded(9, [&] { criterion9(st); });

    std::printf("acceptance: %d/9 criteria passed\n", 9 - g_failed);
    return g_failed == 0 ? 0 : 1;
}
