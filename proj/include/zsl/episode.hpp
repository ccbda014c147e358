#pragma once

#include <map>
#include <set>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/linalg.hpp"
#include "zsl/rng.hpp"

namespace zsl {

// One sampled mini-task: m classes relabeled 0..m-1, n samples each.
// Position in class_ids is the local label; attributes row i belongs to
// class_ids[i].
struct Episode {
    std::vector<int> class_ids;
    Matrix attributes;              // m x attr_dim
    Matrix features;                // (m*n) x feat_dim
    std::vector<int> local_labels;  // one entry per feature row, in {0..m-1}
};

struct ClassIndex {
    std::map<int, std::vector<std::size_t>> by_class;  // class_id -> sample indices
};

// Index over exactly the allowed classes that have at least one sample.
ClassIndex build_class_index(const FeatureTable& feats, const std::set<int>& allowed);

// m distinct classes uniformly without replacement (all of them when fewer
// than m exist), n samples per class without replacement, falling back to
// with-replacement for classes holding fewer than n. Local labels follow
// the class draw order.
Episode sample_episode(const ClassIndex& index, const FeatureTable& feats,
                       const AttributeTable& attrs, Rng& rng, std::size_t m, std::size_t n);

}  // namespace zsl
