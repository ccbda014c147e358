#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "zsl/dataset.hpp"
#include "zsl/gradcheck.hpp"
#include "zsl/io.hpp"
#include "zsl/trainer.hpp"
#include "zsl/transductive.hpp"

namespace fs = std::filesystem;
using namespace zsl;

namespace {

const std::map<std::string, ScoreFn> kScoreNames{{"cosine", ScoreFn::cosine},
                                                 {"dot", ScoreFn::dot}};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

struct DataBundle {
    AttributeTable attrs;
    SplitSpec split;
    FeatureTable train;
    FeatureTable test;
};

void require_clean(const ValidationReport& report, const std::string& what) {
    if (report.issues.empty()) return;
    std::cerr << "validation failed for " << what << ":\n";
    for (const auto& issue : report.issues) std::cerr << "  - " << issue << "\n";
    throw std::invalid_argument("dataset validation failed (" +
                                std::to_string(report.issues.size()) + " issue(s))");
}

DataBundle load_bundle(const std::string& dir, bool need_train, bool need_test) {
    if (dir.empty()) throw std::invalid_argument("--data directory is required");
    DataBundle d;
    d.attrs = load_attributes(dir + "/attributes.csv");
    d.split = load_split(dir + "/split.csv");
    if (need_train) {
        d.train = load_features(dir + "/features_train.csv");
        require_clean(validate_dataset(d.attrs, d.train, d.split, true),
                      dir + "/features_train.csv");
    }
    if (need_test) {
        d.test = load_features(dir + "/features_test.csv");
        require_clean(validate_dataset(d.attrs, d.test, d.split, false),
                      dir + "/features_test.csv");
        if (need_train && d.train.feat_dim != d.test.feat_dim)
            throw std::invalid_argument("train/test feature dimensions differ");
    }
    return d;
}

using MetricRows = std::vector<std::pair<std::string, double>>;

MetricRows compute_metrics(const GeneratorParams& p, const SeenClassifier* seen,
                           const DataBundle& d, ScoreFn fn) {
    const FeatureTable unseen_test = filter_by_classes(d.test, d.split.unseen);
    const double t1 = evaluate_zsl(p, unseen_test, d.attrs, d.split.unseen, fn);
    const GzslReport g =
        seen ? evaluate_gzsl_rows(p, seen->w_s, seen->class_ids, d.test, d.attrs, d.split, fn)
             : evaluate_gzsl(p, d.test, d.attrs, d.split, fn);
    return {{"zsl_t1", t1}, {"gzsl_u", g.u}, {"gzsl_s", g.s}, {"gzsl_h", g.h}};
}

std::string metrics_csv(const MetricRows& rows) {
    std::string s = "metric,value\n";
    for (const auto& [k, v] : rows) s += k + "," + format_g17(v) + "\n";
    return s;
}

std::string curve_csv(const std::vector<LossRecord>& records) {
    std::string s = "iteration,loss\n";
    for (const auto& r : records)
        s += std::to_string(r.iteration) + "," + format_g17(r.loss) + "\n";
    return s;
}

std::string trace_csv(const std::vector<RoundTrace>& trace) {
    std::string s = "round,confident_count,confident_fraction,pseudo_label_accuracy,loss_mean\n";
    for (const auto& t : trace) {
        s += std::to_string(t.round) + "," + std::to_string(t.confident_count) + "," +
             format_g17(t.confident_fraction) + ",";
        if (!std::isnan(t.pseudo_label_accuracy)) s += format_g17(t.pseudo_label_accuracy);
        s += "," + format_g17(t.loss_mean) + "\n";
    }
    return s;
}

void print_metrics(const MetricRows& rows) {
    for (const auto& [k, v] : rows) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        std::cout << "  " << k << " = " << buf << "\n";
    }
}

int cmd_synth(const SyntheticSpec& spec, const std::string& out) {
    const SyntheticData data = generate_synthetic(spec);
    ensure_dir(out);
    save_attributes(data.attributes, out + "/attributes.csv");
    save_features(data.train, out + "/features_train.csv");
    save_features(data.test, out + "/features_test.csv");
    save_split(data.split, out + "/split.csv");
    save_ground_truth(data.truth, out + "/groundtruth.txt");
    std::cout << "wrote 5 files to " << out << " (seed " << spec.seed << ", "
              << data.train.samples.size() << " train / " << data.test.samples.size()
              << " test samples)\n";
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out, const TrainConfig& cfg,
              bool plotdata) {
    const DataBundle d = load_bundle(data_dir, true, true);
    ensure_dir(out);
    std::vector<LossRecord> records;
    const GeneratorParams p = train_inductive(d.train, d.attrs, d.split, cfg, &records);
    save_checkpoint(p, out + "/checkpoint.txt");
    const MetricRows metrics = compute_metrics(p, nullptr, d, cfg.score_fn);
    write_text_file(out + "/report.csv", curve_csv(records) + metrics_csv(metrics));
    if (plotdata) write_text_file(out + "/loss_curve.csv", curve_csv(records));
    std::cout << "trained " << cfg.iterations << " iterations (seed " << cfg.seed << ")\n";
    print_metrics(metrics);
    return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& checkpoint,
             const std::string& seen_path, const std::string& out, ScoreFn fn) {
    const DataBundle d = load_bundle(data_dir, false, true);
    const GeneratorParams p = load_checkpoint(checkpoint);
    SeenClassifier seen;
    const bool with_seen = !seen_path.empty();
    if (with_seen) seen = load_seen_classifier(seen_path);
    ensure_dir(out);
    const MetricRows metrics = compute_metrics(p, with_seen ? &seen : nullptr, d, fn);
    write_text_file(out + "/metrics.csv", metrics_csv(metrics));
    std::cout << "evaluated " << d.test.samples.size() << " test samples\n";
    print_metrics(metrics);
    return 0;
}

int cmd_transduce(const std::string& data_dir, const std::string& checkpoint,
                  const std::string& out, const TransductiveConfig& cfg) {
    const DataBundle d = load_bundle(data_dir, true, true);
    const GeneratorParams start = load_checkpoint(checkpoint);
    ensure_dir(out);
    const FeatureTable x_u = filter_by_classes(d.test, d.split.unseen);
    const TransductiveResult result =
        train_transductive(start, d.train, d.attrs, d.split, x_u, cfg);
    save_checkpoint(result.params, out + "/checkpoint.txt");
    save_seen_classifier(result.seen, out + "/seen_classifier.txt");
    write_text_file(out + "/trace.csv", trace_csv(result.trace));
    const MetricRows metrics =
        compute_metrics(result.params, &result.seen, d, cfg.train.score_fn);
    write_text_file(out + "/metrics.csv", metrics_csv(metrics));
    std::cout << "transduced " << cfg.n_rounds << " rounds x " << cfg.n_inner
              << " iterations (seed " << cfg.train.seed << ")\n";
    print_metrics(metrics);
    return 0;
}

int cmd_gradcheck(std::uint64_t base_seed, std::size_t n_seeds, double step, double tol) {
    GradCheckOptions opts;
    opts.step = step;
    opts.rel_tol = tol;
    std::printf("%-6s %-5s %-6s %8s %8s %13s %s\n", "loss", "seed", "tensor", "checked",
                "skipped", "max_rel_err", "result");
    bool all_pass = true;
    for (const CheckLoss kind : {CheckLoss::ce, CheckLoss::gce, CheckLoss::joint}) {
        for (std::uint64_t s = 0; s < n_seeds; ++s) {
            const std::uint64_t seed = base_seed + s;
            const GradCheckInstance inst = make_check_instance(kind, seed);
            const GradCheckReport report = check_gradients(inst.params, inst.spec, inst.cfg, opts);
            for (const auto& t : report.tensors) {
                std::printf("%-6s %-5llu %-6s %8zu %8zu %13.3e %s\n", check_loss_name(kind),
                            static_cast<unsigned long long>(seed), t.tensor.c_str(), t.checked,
                            t.skipped, t.max_rel_err, t.pass ? "PASS" : "FAIL");
            }
            all_pass = all_pass && report.pass;
        }
    }
    std::printf("gradcheck: %s\n", all_pass ? "PASS" : "FAIL");
    return all_pass ? 0 : 3;
}

int cmd_ablate(const std::string& data_dir, const std::string& out, TrainConfig cfg) {
    const DataBundle d = load_bundle(data_dir, true, true);
    ensure_dir(out);
    cfg.score_fn = ScoreFn::cosine;
    const GeneratorParams p_cos = train_inductive(d.train, d.attrs, d.split, cfg);
    const MetricRows m_cos = compute_metrics(p_cos, nullptr, d, ScoreFn::cosine);
    cfg.score_fn = ScoreFn::dot;
    const GeneratorParams p_dot = train_inductive(d.train, d.attrs, d.split, cfg);
    const MetricRows m_dot = compute_metrics(p_dot, nullptr, d, ScoreFn::dot);

    std::string csv = "metric,cosine,dot\n";
    for (std::size_t i = 0; i < m_cos.size(); ++i)
        csv += m_cos[i].first + "," + format_g17(m_cos[i].second) + "," +
               format_g17(m_dot[i].second) + "\n";
    write_text_file(out + "/ablation.csv", csv);
    std::cout << "ablation over " << cfg.iterations << " iterations (seed " << cfg.seed << ")\n";
    for (std::size_t i = 0; i < m_cos.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "  %s: cosine %.4f vs dot %.4f", m_cos[i].first.c_str(),
                      m_cos[i].second, m_dot[i].second);
        std::cout << buf << "\n";
    }
    return 0;
}

void add_common_config(CLI::App* sub, std::string& sink) {
    // The option exists for --help; the value is consumed by expand_config_args
    // before CLI11 ever parses.
    sub->add_option("--config", sink,
                    "Config file with 'key = value' lines and # comments; "
                    "command-line flags override file values");
}

std::string strip_ws(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Replaces "--config FILE" with "--key=value" tokens read from FILE, injected at
// the same position so they stay in the subcommand's scope. Keys the user already
// passed on the command line are skipped, which makes explicit flags win. Unknown
// keys surface as unknown options when CLI11 parses the expanded vector.
std::vector<std::string> expand_config_args(std::vector<std::string> args) {
    std::string path;
    std::size_t at = 0;
    bool found = false;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config") {
            if (i + 1 >= args.size()) throw std::invalid_argument("--config requires a file path");
            path = args[i + 1];
            at = i;
            found = true;
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (a.rfind("--config=", 0) == 0) {
            path = a.substr(9);
            at = i;
            found = true;
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!found) return args;
    if (path.empty()) throw std::invalid_argument("--config requires a file path");
    for (const auto& a : args) {
        if (a == "--config" || a.rfind("--config=", 0) == 0)
            throw std::invalid_argument("--config may be given at most once");
    }

    std::set<std::string> given;
    for (const auto& a : args) {
        if (a.rfind("--", 0) != 0) continue;
        given.insert(a.substr(0, a.find('=')));
    }

    const std::string text = read_text_file(path);
    std::vector<std::string> injected;
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = strip_ws(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = strip_ws(line.substr(0, eq));
        std::string value = strip_ws(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
        if (key == "config")
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": config files cannot nest config");
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (given.count("--" + key)) continue;
        injected.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
    return args;
}

void add_train_options(CLI::App* sub, TrainConfig& cfg) {
    sub->add_option("--m-classes", cfg.m_classes, "Classes per episode")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
    sub->add_option("--n-per-class", cfg.n_per_class, "Samples per episode class")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--iterations", cfg.iterations, "Training iterations")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--lr", cfg.lr, "Adam learning rate")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--lambda", cfg.lambda, "L2 coefficient on the generator weights")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--hidden", cfg.hidden, "Hidden layer width")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--score", cfg.score_fn, "Scoring function")
        ->transform(CLI::CheckedTransformer(kScoreNames, CLI::ignore_case))
        ->default_str("cosine");
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot classification by generating visual classifiers from attributes"};
    app.name("zsl");
    app.require_subcommand(1);
    app.footer("Exit codes: 0 success, 1 validation/contract error, 2 I/O error, "
               "3 gradient-check failure.");
    std::string config_sink;

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
    SyntheticSpec synth_spec;
    std::string synth_out = ".";
    synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
    synth->add_option("--n-seen", synth_spec.n_seen, "Seen classes")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth->add_option("--n-unseen", synth_spec.n_unseen, "Unseen classes")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth->add_option("--samples-per-class", synth_spec.samples_per_class, "Samples per class")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth->add_option("--attr-dim", synth_spec.attr_dim, "Attribute dimension")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth->add_option("--feat-dim", synth_spec.feat_dim, "Feature dimension")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth->add_option("--noise-std", synth_spec.noise_std, "Within-class noise stddev")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", synth_spec.seed, "Random seed")->capture_default_str();
    add_common_config(synth, config_sink);

    // train
    auto* train = app.add_subcommand("train", "Train the classifier generator on seen classes");
    std::string train_data, train_out = ".";
    TrainConfig train_cfg;
    bool train_plot = false;
    train->add_option("--data", train_data, "Dataset directory")->required();
    train->add_option("--out", train_out, "Output directory")->capture_default_str();
    add_train_options(train, train_cfg);
    train->add_flag("--plotdata", train_plot, "Also write loss_curve.csv");
    add_common_config(train, config_sink);

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint (ZSL and generalized ZSL)");
    std::string eval_data, eval_ckpt, eval_seen, eval_out = ".";
    ScoreFn eval_fn = ScoreFn::cosine;
    std::uint64_t eval_seed = 1;
    eval->add_option("--data", eval_data, "Dataset directory")->required();
    eval->add_option("--checkpoint", eval_ckpt, "Generator checkpoint")->required();
    eval->add_option("--seen-classifier", eval_seen,
                     "Trained seen-class classifier (defaults to generated rows)");
    eval->add_option("--out", eval_out, "Output directory")->capture_default_str();
    eval->add_option("--score", eval_fn, "Scoring function")
        ->transform(CLI::CheckedTransformer(kScoreNames, CLI::ignore_case))
        ->default_str("cosine");
    eval->add_option("--seed", eval_seed, "Random seed (unused; evaluation is deterministic)")
        ->capture_default_str();
    add_common_config(eval, config_sink);

    // transduce
    auto* trans = app.add_subcommand(
        "transduce", "Self-train on unlabeled unseen-class features from a checkpoint");
    std::string trans_data, trans_ckpt, trans_out = ".";
    TransductiveConfig trans_cfg;
    bool trans_xe = false;
    trans->add_option("--data", trans_data, "Dataset directory")->required();
    trans->add_option("--checkpoint", trans_ckpt, "Starting generator checkpoint")->required();
    trans->add_option("--out", trans_out, "Output directory")->capture_default_str();
    trans->add_option("--gamma", trans_cfg.gamma, "Peakiness threshold (top1/top2 ratio)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    trans->add_option("--q", trans_cfg.q, "GCE exponent in (0,1]")
        ->capture_default_str()
        ->check(CLI::Range(1e-9, 1.0));
    trans->add_option("--rounds", trans_cfg.n_rounds, "Self-training rounds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    trans->add_option("--inner", trans_cfg.n_inner, "Inner iterations per round")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    trans->add_flag("--xe", trans_xe,
                    "Use plain cross-entropy on pseudo-labels instead of GCE");
    trans->add_option("--corrupt-fraction", trans_cfg.corrupt_fraction,
                      "Fraction of confident labels to randomly flip (robustness studies)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    add_train_options(trans, trans_cfg.train);
    add_common_config(trans, config_sink);

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck",
                                    "Check analytic gradients against finite differences");
    std::uint64_t grad_seed = 1;
    std::size_t grad_seeds = 10;
    double grad_step = 1e-5, grad_tol = 1e-5;
    grad->add_option("--seed", grad_seed, "First seed")->capture_default_str();
    grad->add_option("--seeds", grad_seeds, "Number of seeds per loss")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    grad->add_option("--step", grad_step, "Finite-difference step")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    grad->add_option("--tol", grad_tol, "Relative error tolerance")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    add_common_config(grad, config_sink);

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Train cosine and dot scoring side by side");
    std::string ablate_data, ablate_out = ".";
    TrainConfig ablate_cfg;
    ablate->add_option("--data", ablate_data, "Dataset directory")->required();
    ablate->add_option("--out", ablate_out, "Output directory")->capture_default_str();
    add_train_options(ablate, ablate_cfg);
    add_common_config(ablate, config_sink);

    std::vector<std::string> args;
    try {
        args = expand_config_args({argv + 1, argv + argc});
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // help is success, every parse failure is a contract error
    }

    try {
        if (*synth) return cmd_synth(synth_spec, synth_out);
        if (*train) return cmd_train(train_data, train_out, train_cfg, train_plot);
        if (*eval) return cmd_eval(eval_data, eval_ckpt, eval_seen, eval_out, eval_fn);
        if (*trans) {
            trans_cfg.use_gce = !trans_xe;
            return cmd_transduce(trans_data, trans_ckpt, trans_out, trans_cfg);
        }
        if (*grad) return cmd_gradcheck(grad_seed, grad_seeds, grad_step, grad_tol);
        if (*ablate) return cmd_ablate(ablate_data, ablate_out, ablate_cfg);
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
