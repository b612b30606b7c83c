#pragma once

#include <string>

#include "dtuap/model.hpp"

namespace dtuap {

struct CheckpointMeta {
    std::string dataset_id;
    int epochs = 0;
    float final_val_accuracy = 0.0f;
    std::string hyperparameters; // JSON text, free-form
};

// DTAC checkpoint: magic "DTAC", u32 version=1 LE, u32 JSON header length +
// header, then each named tensor as (u32 name length, name, u32 rank, dims
// as u32 LE, raw f32 LE values). Round-trips parameters bit-exactly.
void save_checkpoint(const std::string& path, const Classifier& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    Classifier model;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace dtuap
