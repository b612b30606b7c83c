#include "dtuap/split.hpp"

#include <algorithm>

#include "dtuap/errors.hpp"

namespace dtuap {

CleanPredictions predict_dataset(const Classifier& victim, const LabeledDataset& data) {
    CleanPredictions out;
    out.labels.reserve(static_cast<std::size_t>(data.size()));
    constexpr int kChunk = 256;
    std::vector<int> positions;
    for (int start = 0; start < data.size(); start += kChunk) {
        const int count = std::min(kChunk, data.size() - start);
        positions.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) positions[static_cast<std::size_t>(i)] = start + i;
        const auto pred = victim.predict(data.gather(positions));
        out.labels.insert(out.labels.end(), pred.labels.begin(), pred.labels.end());
    }
    return out;
}

ClassSplit build_split(const LabeledDataset& data, const Classifier& victim,
                       const std::vector<int>& sources, int cap) {
    return build_split(data, predict_dataset(victim, data), victim.classes(), sources, cap);
}

ClassSplit build_split(const LabeledDataset& data, const CleanPredictions& preds, int classes,
                       const std::vector<int>& sources, int cap) {
    if (sources.empty()) throw UsageError("build_split: empty source set");
    std::vector<char> is_source(static_cast<std::size_t>(classes), 0);
    for (int s : sources) {
        if (s < 0 || s >= classes)
            throw UsageError("build_split: source class " + std::to_string(s) +
                             " out of range [0," + std::to_string(classes) + ")");
        is_source[static_cast<std::size_t>(s)] = 1;
    }
    if (static_cast<int>(preds.labels.size()) != data.size())
        throw Error("build_split: prediction count does not match dataset");

    ClassSplit split;
    split.sources = sources;
    split.cap = cap > 0 ? cap : 0;
    split.clean_pred = preds.labels;
    split.targeted_per_source.assign(sources.size(), 0);

    std::vector<int> taken(static_cast<std::size_t>(classes), 0);
    for (int i = 0; i < data.size(); ++i) {
        const int label = data.labels[static_cast<std::size_t>(i)];
        if (preds.labels[static_cast<std::size_t>(i)] != label) continue; // misclassified
        if (cap > 0 && taken[static_cast<std::size_t>(label)] >= cap) continue;
        ++taken[static_cast<std::size_t>(label)];
        if (is_source[static_cast<std::size_t>(label)]) {
            split.targeted.push_back(i);
            for (std::size_t s = 0; s < sources.size(); ++s)
                if (sources[s] == label) ++split.targeted_per_source[s];
        } else {
            split.nontargeted.push_back(i);
        }
    }

    if (split.targeted.empty())
        throw UsageError("build_split: no correctly classified samples in the source set");
    if (split.nontargeted.empty())
        throw UsageError("build_split: non-targeted pool is empty");
    return split;
}

namespace {

// Uniform draw of `count` pool entries; partial Fisher-Yates without
// replacement when the pool is large enough, otherwise independent draws.
void draw(const std::vector<int>& pool, int count, Rng& rng, std::vector<int>& out,
          bool& with_replacement) {
    if (static_cast<int>(pool.size()) >= count) {
        std::vector<int> idx(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) idx[i] = static_cast<int>(i);
        for (int i = 0; i < count; ++i) {
            const auto j = i + static_cast<int>(rng.uniform_u32(
                                   static_cast<std::uint32_t>(idx.size() - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
            out.push_back(pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
        }
    } else {
        with_replacement = true;
        for (int i = 0; i < count; ++i)
            out.push_back(pool[rng.uniform_u32(static_cast<std::uint32_t>(pool.size()))]);
    }
}

} // namespace

Batch sample_batch(const ClassSplit& split, int m, Rng& rng) {
    if (m < 2 || m % 2 != 0)
        throw UsageError("sample_batch: mini-batch size must be even and >= 2, got " +
                         std::to_string(m));
    if (split.targeted.empty() || split.nontargeted.empty())
        throw UsageError("sample_batch: empty pool");

    Batch b;
    b.targeted_pos.reserve(static_cast<std::size_t>(m / 2));
    b.nontargeted_pos.reserve(static_cast<std::size_t>(m / 2));
    draw(split.targeted, m / 2, rng, b.targeted_pos, b.with_replacement);
    draw(split.nontargeted, m / 2, rng, b.nontargeted_pos, b.with_replacement);
    return b;
}

} // namespace dtuap
