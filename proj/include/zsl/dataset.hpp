#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "zsl/linalg.hpp"

namespace zsl {

// Per-class semantic attribute vectors.
struct AttributeTable {
    std::size_t attr_dim = 0;
    std::map<int, Vector> entries;  // class_id -> attribute vector

    bool operator==(const AttributeTable&) const = default;
};

struct FeatureSample {
    int sample_id = 0;
    int class_id = 0;
    Vector features;

    bool operator==(const FeatureSample&) const = default;
};

// Labeled visual feature vectors.
struct FeatureTable {
    std::size_t feat_dim = 0;
    std::vector<FeatureSample> samples;

    bool operator==(const FeatureTable&) const = default;
};

struct SplitSpec {
    std::set<int> seen;
    std::set<int> unseen;

    bool operator==(const SplitSpec&) const = default;
};

struct SyntheticSpec {
    std::size_t n_seen = 40;
    std::size_t n_unseen = 10;
    std::size_t samples_per_class = 50;
    std::size_t attr_dim = 16;
    std::size_t feat_dim = 32;
    double noise_std = 0.1;
    std::uint64_t seed = 1;
};

// The linear attribute-to-mean map behind a synthetic dataset.
struct GroundTruth {
    std::uint64_t seed = 0;
    Matrix map;  // feat_dim x attr_dim; class mean = map * attributes

    bool operator==(const GroundTruth&) const = default;
};

struct ValidationReport {
    std::vector<std::string> issues;
    std::map<int, std::size_t> per_class_counts;
};

struct SyntheticData {
    AttributeTable attributes;
    FeatureTable train;  // seen classes, 80% of each
    FeatureTable test;   // all unseen samples + 20% holdout of each seen class
    SplitSpec split;
    GroundTruth truth;
};

AttributeTable load_attributes(const std::string& path);
void save_attributes(const AttributeTable& table, const std::string& path);

FeatureTable load_features(const std::string& path);
void save_features(const FeatureTable& table, const std::string& path);

SplitSpec load_split(const std::string& path);
void save_split(const SplitSpec& split, const std::string& path);

GroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const GroundTruth& truth, const std::string& path);

// Consistency report, never throws. Zero-sample seen classes are reported
// only when require_seen_samples is set (an evaluation-only table may
// legitimately hold nothing for some seen class).
ValidationReport validate_dataset(const AttributeTable& attrs, const FeatureTable& feats,
                                  const SplitSpec& split, bool require_seen_samples = true);

SyntheticData generate_synthetic(const SyntheticSpec& spec);

FeatureTable filter_by_classes(const FeatureTable& feats, const std::set<int>& classes);

// Stack the attribute vectors for class_ids, one row each. Throws if any id is missing.
Matrix attribute_matrix(const AttributeTable& attrs, const std::vector<int>& class_ids);

}  // namespace zsl
