#include "zsl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "zsl/io.hpp"
#include "zsl/rng.hpp"

namespace zsl {

namespace {

std::vector<std::string> non_empty_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

std::string at_line(const std::string& path, std::size_t lineno) {
    return path + ":" + std::to_string(lineno);
}

}  // namespace

AttributeTable load_attributes(const std::string& path) {
    const auto lines = non_empty_lines(read_text_file(path));
    if (lines.empty()) throw ParseError(path + ": empty file");
    const auto header = split_csv(lines[0]);
    if (header.size() < 2 || header[0] != "class_id")
        throw ParseError(at_line(path, 1) + ": expected header 'class_id,a0,...'");
    AttributeTable table;
    table.attr_dim = header.size() - 1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv(lines[i]);
        const std::string ctx = at_line(path, i + 1);
        if (fields.size() != header.size())
            throw ParseError(ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        const long long cid = parse_int(fields[0], ctx);
        if (cid < 0) throw ParseError(ctx + ": negative class_id");
        Vector attr(table.attr_dim);
        for (std::size_t j = 0; j < table.attr_dim; ++j) attr[j] = parse_double(fields[j + 1], ctx);
        if (!table.entries.emplace(static_cast<int>(cid), std::move(attr)).second)
            throw ParseError(ctx + ": duplicate class_id " + std::to_string(cid));
    }
    return table;
}

void save_attributes(const AttributeTable& table, const std::string& path) {
    std::ostringstream out;
    out << "class_id";
    for (std::size_t j = 0; j < table.attr_dim; ++j) out << ",a" << j;
    out << "\n";
    for (const auto& [cid, attr] : table.entries) {
        out << cid;
        for (double v : attr) out << ',' << format_g17(v);
        out << "\n";
    }
    write_text_file(path, out.str());
}

FeatureTable load_features(const std::string& path) {
    const auto lines = non_empty_lines(read_text_file(path));
    if (lines.empty()) throw ParseError(path + ": empty file");
    const auto header = split_csv(lines[0]);
    if (header.size() < 3 || header[0] != "sample_id" || header[1] != "class_id")
        throw ParseError(at_line(path, 1) + ": expected header 'sample_id,class_id,x0,...'");
    FeatureTable table;
    table.feat_dim = header.size() - 2;
    std::set<int> seen_ids;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv(lines[i]);
        const std::string ctx = at_line(path, i + 1);
        if (fields.size() != header.size())
            throw ParseError(ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        FeatureSample s;
        s.sample_id = static_cast<int>(parse_int(fields[0], ctx));
        const long long cid = parse_int(fields[1], ctx);
        if (cid < 0) throw ParseError(ctx + ": negative class_id");
        s.class_id = static_cast<int>(cid);
        if (!seen_ids.insert(s.sample_id).second)
            throw ParseError(ctx + ": duplicate sample_id " + std::to_string(s.sample_id));
        s.features.resize(table.feat_dim);
        for (std::size_t j = 0; j < table.feat_dim; ++j)
            s.features[j] = parse_double(fields[j + 2], ctx);
        table.samples.push_back(std::move(s));
    }
    return table;
}

void save_features(const FeatureTable& table, const std::string& path) {
    std::ostringstream out;
    out << "sample_id,class_id";
    for (std::size_t j = 0; j < table.feat_dim; ++j) out << ",x" << j;
    out << "\n";
    for (const auto& s : table.samples) {
        out << s.sample_id << ',' << s.class_id;
        for (double v : s.features) out << ',' << format_g17(v);
        out << "\n";
    }
    write_text_file(path, out.str());
}

SplitSpec load_split(const std::string& path) {
    const auto lines = non_empty_lines(read_text_file(path));
    if (lines.empty()) throw ParseError(path + ": empty file");
    const auto header = split_csv(lines[0]);
    if (header.size() != 2 || header[0] != "class_id" || header[1] != "role")
        throw ParseError(at_line(path, 1) + ": expected header 'class_id,role'");
    SplitSpec split;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv(lines[i]);
        const std::string ctx = at_line(path, i + 1);
        if (fields.size() != 2) throw ParseError(ctx + ": expected 2 fields");
        const long long cid = parse_int(fields[0], ctx);
        if (cid < 0) throw ParseError(ctx + ": negative class_id");
        const int id = static_cast<int>(cid);
        if (split.seen.count(id) || split.unseen.count(id))
            throw ParseError(ctx + ": class " + std::to_string(id) + " listed twice");
        if (fields[1] == "seen")
            split.seen.insert(id);
        else if (fields[1] == "unseen")
            split.unseen.insert(id);
        else
            throw ParseError(ctx + ": unknown role '" + fields[1] + "'");
    }
    if (split.seen.empty()) throw ParseError(path + ": no seen classes");
    if (split.unseen.empty()) throw ParseError(path + ": no unseen classes");
    return split;
}

void save_split(const SplitSpec& split, const std::string& path) {
    std::ostringstream out;
    out << "class_id,role\n";
    for (int id : split.seen) out << id << ",seen\n";
    for (int id : split.unseen) out << id << ",unseen\n";
    write_text_file(path, out.str());
}

GroundTruth load_ground_truth(const std::string& path) {
    const auto lines = non_empty_lines(read_text_file(path));
    if (lines.size() < 3 || lines[0] != "version=1")
        throw ParseError(path + ": expected 'version=1' header");
    GroundTruth truth;
    if (lines[1].rfind("seed=", 0) != 0) throw ParseError(path + ": expected 'seed=' line");
    truth.seed = static_cast<std::uint64_t>(parse_int(lines[1].substr(5), path + ": seed"));
    std::istringstream hdr(lines[2]);
    std::string tag;
    std::size_t rows = 0, cols = 0;
    char bracket = 0;
    hdr >> bracket >> tag >> rows >> cols;
    if (bracket != '[' || tag != "map" || rows == 0 || cols == 0)
        throw ParseError(path + ": expected '[map rows cols]' section");
    if (lines.size() != 3 + rows) throw ParseError(path + ": expected " + std::to_string(rows) + " map rows");
    truth.map = Matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        std::istringstream row(lines[3 + r]);
        for (std::size_t c = 0; c < cols; ++c) {
            std::string tok;
            if (!(row >> tok)) throw ParseError(at_line(path, 4 + r) + ": short map row");
            truth.map(r, c) = parse_double(tok, at_line(path, 4 + r));
        }
    }
    return truth;
}

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
    std::ostringstream out;
    out << "version=1\n";
    out << "seed=" << truth.seed << "\n";
    out << "[map " << truth.map.rows << " " << truth.map.cols << "]\n";
    for (std::size_t r = 0; r < truth.map.rows; ++r) {
        for (std::size_t c = 0; c < truth.map.cols; ++c) {
            if (c) out << ' ';
            out << format_g17(truth.map(r, c));
        }
        out << "\n";
    }
    write_text_file(path, out.str());
}

ValidationReport validate_dataset(const AttributeTable& attrs, const FeatureTable& feats,
                                  const SplitSpec& split, bool require_seen_samples) {
    ValidationReport report;
    for (int id : split.seen)
        if (!attrs.entries.count(id))
            report.issues.push_back("seen class " + std::to_string(id) + " has no attributes");
    for (int id : split.unseen)
        if (!attrs.entries.count(id))
            report.issues.push_back("unseen class " + std::to_string(id) + " has no attributes");
    for (const auto& s : feats.samples) {
        ++report.per_class_counts[s.class_id];
        if (!split.seen.count(s.class_id) && !split.unseen.count(s.class_id))
            report.issues.push_back("sample " + std::to_string(s.sample_id) + " has class " +
                                    std::to_string(s.class_id) + " outside the split");
    }
    if (require_seen_samples) {
        for (int id : split.seen) {
            auto it = report.per_class_counts.find(id);
            if (it == report.per_class_counts.end() || it->second == 0)
                report.issues.push_back("seen class " + std::to_string(id) + " has no samples");
        }
    }
    return report;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_seen < 1 || spec.n_unseen < 1 || spec.samples_per_class < 1 || spec.attr_dim < 1 ||
        spec.feat_dim < 1)
        throw std::invalid_argument("generate_synthetic: all counts must be >= 1");
    if (spec.noise_std < 0.0)
        throw std::invalid_argument("generate_synthetic: noise_std must be >= 0");

    Rng rng(spec.seed);
    SyntheticData data;
    const std::size_t n_classes = spec.n_seen + spec.n_unseen;

    data.attributes.attr_dim = spec.attr_dim;
    for (std::size_t c = 0; c < n_classes; ++c) {
        Vector attr(spec.attr_dim);
        for (double& v : attr) v = rng.uniform01();
        data.attributes.entries.emplace(static_cast<int>(c), std::move(attr));
    }

    data.truth.seed = spec.seed;
    data.truth.map = Matrix(spec.feat_dim, spec.attr_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.attr_dim));
    for (double& v : data.truth.map.data) v = rng.normal() * scale;

    data.train.feat_dim = spec.feat_dim;
    data.test.feat_dim = spec.feat_dim;
    const std::size_t holdout = spec.samples_per_class / 5;  // 20% of each seen class
    int next_sample_id = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const bool is_seen = c < spec.n_seen;
        Vector mean(spec.feat_dim, 0.0);
        const Vector& attr = data.attributes.entries.at(static_cast<int>(c));
        for (std::size_t r = 0; r < spec.feat_dim; ++r)
            mean[r] = dot(data.truth.map.row(r), attr);
        for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
            FeatureSample sample;
            sample.sample_id = next_sample_id++;
            sample.class_id = static_cast<int>(c);
            sample.features.resize(spec.feat_dim);
            for (std::size_t r = 0; r < spec.feat_dim; ++r)
                sample.features[r] = mean[r] + spec.noise_std * rng.normal();
            const bool to_test = !is_seen || s >= spec.samples_per_class - holdout;
            (to_test ? data.test : data.train).samples.push_back(std::move(sample));
        }
    }

    for (std::size_t c = 0; c < n_classes; ++c) {
        if (c < spec.n_seen)
            data.split.seen.insert(static_cast<int>(c));
        else
            data.split.unseen.insert(static_cast<int>(c));
    }
    return data;
}

FeatureTable filter_by_classes(const FeatureTable& feats, const std::set<int>& classes) {
    FeatureTable out;
    out.feat_dim = feats.feat_dim;
    for (const auto& s : feats.samples)
        if (classes.count(s.class_id)) out.samples.push_back(s);
    return out;
}

Matrix attribute_matrix(const AttributeTable& attrs, const std::vector<int>& class_ids) {
    Matrix m(class_ids.size(), attrs.attr_dim);
    for (std::size_t i = 0; i < class_ids.size(); ++i) {
        auto it = attrs.entries.find(class_ids[i]);
        if (it == attrs.entries.end())
            throw std::invalid_argument("attribute_matrix: class " + std::to_string(class_ids[i]) +
                                        " has no attributes");
        std::copy(it->second.begin(), it->second.end(), m.row(i).begin());
    }
    return m;
}

}  // namespace zsl
