#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtuap/tensor.hpp"

namespace dtuap {

// Labeled images in [0,1], NCHW, with a per-class position index.
struct LabeledDataset {
    Tensor images; // [N, C, H, W]
    std::vector<int> labels;
    int classes = 0;
    std::string split; // "train" | "validation"
    std::string id;    // provenance tag used in reports
    std::vector<std::vector<int>> by_class;

    int size() const { return images.defined() ? images.dim(0) : 0; }
    std::vector<int> image_shape() const; // [C, H, W]
    // Copies the images at the given positions into a [n, C, H, W] batch.
    Tensor gather(const std::vector<int>& positions) const;

    void rebuild_class_index();
};

// IDX (big-endian) loaders: images magic 0x00000803, labels 0x00000801.
// Pixels are divided by 255. expected_classes=0 infers C as max label + 1.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        const std::string& split, int expected_classes = 0);

// Serializes a single-channel dataset back to the IDX pair (fixtures).
void save_idx(const LabeledDataset& data, const std::string& images_path,
              const std::string& labels_path);

// CIFAR-10 binary batches: records of 1 label byte + 3072 RGB-plane bytes.
LabeledDataset load_cifar_binary(const std::vector<std::string>& paths,
                                 const std::string& split, int expected_classes = 0);

// Gaussian blobs around pairwise-separated template images; fast fixture
// for property tests and desk-scale attack experiments.
struct BlobConfig {
    int classes = 5;
    int per_class = 100;
    std::vector<int> shape = {1, 8, 8}; // [C, H, W]
    std::uint64_t seed = 1;
    float margin = 0.8f; // min pairwise L2 distance between templates
    float sigma = 0.05f; // per-pixel noise around the template
    std::string split = "train"; // templates depend only on (classes, shape, seed, margin);
                                 // sample noise additionally on the split tag
};

LabeledDataset synth_blobs(const BlobConfig& cfg);

// The class templates a blob dataset was drawn from (test oracle access).
std::vector<std::vector<float>> blob_templates(const BlobConfig& cfg);

} // namespace dtuap
