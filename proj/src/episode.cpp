#include "zsl/episode.hpp"

#include <algorithm>
#include <stdexcept>

namespace zsl {

ClassIndex build_class_index(const FeatureTable& feats, const std::set<int>& allowed) {
    ClassIndex index;
    for (std::size_t i = 0; i < feats.samples.size(); ++i) {
        const int cid = feats.samples[i].class_id;
        if (allowed.count(cid)) index.by_class[cid].push_back(i);
    }
    return index;
}

Episode sample_episode(const ClassIndex& index, const FeatureTable& feats,
                       const AttributeTable& attrs, Rng& rng, std::size_t m, std::size_t n) {
    if (index.by_class.empty()) throw std::invalid_argument("sample_episode: empty class index");
    if (m < 2) throw std::invalid_argument("sample_episode: m must be >= 2");
    if (n < 1) throw std::invalid_argument("sample_episode: n must be >= 1");

    std::vector<int> pool;
    pool.reserve(index.by_class.size());
    for (const auto& [cid, _] : index.by_class) pool.push_back(cid);

    const std::size_t m_eff = std::min(m, pool.size());
    Episode ep;
    for (std::size_t pos : rng.sample_without_replacement(pool.size(), m_eff))
        ep.class_ids.push_back(pool[pos]);

    ep.attributes = attribute_matrix(attrs, ep.class_ids);
    ep.features = Matrix(m_eff * n, feats.feat_dim);
    ep.local_labels.reserve(m_eff * n);

    std::size_t row = 0;
    for (std::size_t local = 0; local < m_eff; ++local) {
        const auto& members = index.by_class.at(ep.class_ids[local]);
        std::vector<std::size_t> picks;
        if (members.size() >= n) {
            for (std::size_t pos : rng.sample_without_replacement(members.size(), n))
                picks.push_back(members[pos]);
        } else {
            for (std::size_t j = 0; j < n; ++j)
                picks.push_back(members[rng.below(members.size())]);
        }
        for (std::size_t idx : picks) {
            const auto& src = feats.samples[idx].features;
            std::copy(src.begin(), src.end(), ep.features.row(row).begin());
            ep.local_labels.push_back(static_cast<int>(local));
            ++row;
        }
    }
    return ep;
}

}  // namespace zsl
