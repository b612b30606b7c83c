#pragma once

#include <vector>

#include "dtuap/dataset.hpp"
#include "dtuap/model.hpp"
#include "dtuap/rng.hpp"

namespace dtuap {

// Victim predictions over a whole dataset, computed once and reused when
// several splits are carved out of the same (victim, dataset) pair.
struct CleanPredictions {
    std::vector<int> labels; // predicted class per dataset position
};

CleanPredictions predict_dataset(const Classifier& victim, const LabeledDataset& data);

// Crafting pools: correctly classified samples partitioned into targeted
// (label in the source set) and non-targeted (every other class, the sink
// class included) positions. clean_pred holds the victim's frozen clean
// prediction for every dataset position.
struct ClassSplit {
    std::vector<int> targeted;
    std::vector<int> nontargeted;
    std::vector<int> clean_pred;
    std::vector<int> sources;
    int cap = 0; // per-class cap that was applied (0 = none)
    // per source class: number of pooled targeted samples (Multi2One checks)
    std::vector<int> targeted_per_source;
};

// cap <= 0 means unlimited; the cap applies per class to both pools.
ClassSplit build_split(const LabeledDataset& data, const Classifier& victim,
                       const std::vector<int>& sources, int cap = 0);
ClassSplit build_split(const LabeledDataset& data, const CleanPredictions& preds, int classes,
                       const std::vector<int>& sources, int cap = 0);

struct Batch {
    std::vector<int> targeted_pos;    // m/2 dataset positions, listed first
    std::vector<int> nontargeted_pos; // m/2 dataset positions
    bool with_replacement = false;    // fallback engaged because a pool < m/2
};

// Half targeted / half non-targeted, uniform over each pool; without
// replacement within the batch when the pool allows it. Reproducible from
// the rng state alone.
Batch sample_batch(const ClassSplit& split, int m, Rng& rng);

} // namespace dtuap
