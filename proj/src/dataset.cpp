#include "dtuap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "dtuap/errors.hpp"
#include "dtuap/rng.hpp"

namespace dtuap {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw DataError("failed reading " + path);
    return bytes;
}

std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803; // ubyte, 3 dimensions
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801; // ubyte, 1 dimension

} // namespace

std::vector<int> LabeledDataset::image_shape() const {
    return {images.dim(1), images.dim(2), images.dim(3)};
}

Tensor LabeledDataset::gather(const std::vector<int>& positions) const {
    const int n = static_cast<int>(positions.size());
    if (n == 0) throw Error("gather: empty position list");
    const auto& s = images.shape();
    const std::size_t chw = static_cast<std::size_t>(s[1]) * s[2] * s[3];
    Tensor out({n, s[1], s[2], s[3]});
    for (int i = 0; i < n; ++i) {
        const int pos = positions[static_cast<std::size_t>(i)];
        if (pos < 0 || pos >= size())
            throw Error("gather: position " + std::to_string(pos) + " out of range");
        std::copy_n(images.data() + static_cast<std::size_t>(pos) * chw, chw,
                    out.data() + static_cast<std::size_t>(i) * chw);
    }
    return out;
}

void LabeledDataset::rebuild_class_index() {
    by_class.assign(static_cast<std::size_t>(classes), {});
    for (int i = 0; i < size(); ++i)
        by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        const std::string& split, int expected_classes) {
    const auto img = read_file(images_path);
    if (img.size() < 16) throw DataError(images_path + ": truncated IDX header");
    if (be32(img.data()) != kIdxImagesMagic)
        throw DataError(images_path + ": bad IDX magic (expected 0x00000803)");
    const std::uint32_t n = be32(img.data() + 4);
    const std::uint32_t rows = be32(img.data() + 8);
    const std::uint32_t cols = be32(img.data() + 12);
    const std::size_t want = 16 + static_cast<std::size_t>(n) * rows * cols;
    if (img.size() != want)
        throw DataError(images_path + ": expected " + std::to_string(want) + " bytes, found " +
                        std::to_string(img.size()));

    const auto lab = read_file(labels_path);
    if (lab.size() < 8) throw DataError(labels_path + ": truncated IDX header");
    if (be32(lab.data()) != kIdxLabelsMagic)
        throw DataError(labels_path + ": bad IDX magic (expected 0x00000801)");
    const std::uint32_t ln = be32(lab.data() + 4);
    if (lab.size() != 8 + static_cast<std::size_t>(ln))
        throw DataError(labels_path + ": label payload does not match header count");
    if (ln != n)
        throw DataError("IDX count mismatch: " + std::to_string(n) + " images vs " +
                        std::to_string(ln) + " labels");
    if (n == 0) throw DataError(images_path + ": empty dataset");

    LabeledDataset d;
    d.images = Tensor({static_cast<int>(n), 1, static_cast<int>(rows), static_cast<int>(cols)});
    const float inv = 1.0f / 255.0f;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * rows * cols; ++i)
        d.images.data()[i] = static_cast<float>(img[16 + i]) * inv;

    d.labels.resize(n);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const int l = lab[8 + i];
        if (expected_classes > 0 && l >= expected_classes)
            throw DataError(labels_path + ": label " + std::to_string(l) + " out of range [0," +
                            std::to_string(expected_classes) + ")");
        d.labels[i] = l;
        max_label = std::max(max_label, l);
    }
    d.classes = expected_classes > 0 ? expected_classes : max_label + 1;
    d.split = split;
    d.id = "idx:" + images_path;
    d.rebuild_class_index();
    return d;
}

void save_idx(const LabeledDataset& data, const std::string& images_path,
              const std::string& labels_path) {
    if (data.images.dim(1) != 1)
        throw UsageError("save_idx: IDX images are single-channel, dataset has " +
                         std::to_string(data.images.dim(1)));
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot write " + images_path);
    const int n = data.size(), rows = data.images.dim(2), cols = data.images.dim(3);
    put_be32(img, kIdxImagesMagic);
    put_be32(img, static_cast<std::uint32_t>(n));
    put_be32(img, static_cast<std::uint32_t>(rows));
    put_be32(img, static_cast<std::uint32_t>(cols));
    for (std::int64_t i = 0; i < data.images.numel(); ++i) {
        const float v = data.images.data()[i];
        const int byte = static_cast<int>(std::lround(v * 255.0f));
        const std::uint8_t u = static_cast<std::uint8_t>(std::clamp(byte, 0, 255));
        img.write(reinterpret_cast<const char*>(&u), 1);
    }
    if (!img) throw DataError("failed writing " + images_path);

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot write " + labels_path);
    put_be32(lab, kIdxLabelsMagic);
    put_be32(lab, static_cast<std::uint32_t>(n));
    for (int l : data.labels) {
        const std::uint8_t u = static_cast<std::uint8_t>(l);
        lab.write(reinterpret_cast<const char*>(&u), 1);
    }
    if (!lab) throw DataError("failed writing " + labels_path);
}

LabeledDataset load_cifar_binary(const std::vector<std::string>& paths,
                                 const std::string& split, int expected_classes) {
    constexpr std::size_t kRecord = 1 + 3 * 32 * 32;
    if (paths.empty()) throw DataError("load_cifar_binary: no input files");

    std::vector<std::uint8_t> all;
    for (const auto& p : paths) {
        auto bytes = read_file(p);
        if (bytes.empty() || bytes.size() % kRecord != 0)
            throw DataError(p + ": size " + std::to_string(bytes.size()) +
                            " is not a multiple of " + std::to_string(kRecord) +
                            " (truncated record?)");
        all.insert(all.end(), bytes.begin(), bytes.end());
    }

    const int n = static_cast<int>(all.size() / kRecord);
    LabeledDataset d;
    d.images = Tensor({n, 3, 32, 32});
    d.labels.resize(static_cast<std::size_t>(n));
    const float inv = 1.0f / 255.0f;
    int max_label = 0;
    for (int i = 0; i < n; ++i) {
        const std::uint8_t* rec = all.data() + static_cast<std::size_t>(i) * kRecord;
        const int l = rec[0];
        if (expected_classes > 0 && l >= expected_classes)
            throw DataError("CIFAR record " + std::to_string(i) + ": label " + std::to_string(l) +
                            " out of range [0," + std::to_string(expected_classes) + ")");
        d.labels[static_cast<std::size_t>(i)] = l;
        max_label = std::max(max_label, l);
        float* dst = d.images.data() + static_cast<std::size_t>(i) * 3 * 32 * 32;
        for (std::size_t j = 0; j < 3 * 32 * 32; ++j)
            dst[j] = static_cast<float>(rec[1 + j]) * inv;
    }
    d.classes = expected_classes > 0 ? expected_classes : max_label + 1;
    d.split = split;
    d.id = "cifar:" + paths.front();
    d.rebuild_class_index();
    return d;
}

namespace {

// Template pixels are kept away from the [0,1] edges so that +/- sigma noise
// rarely clips.
std::vector<std::vector<float>> make_templates(const BlobConfig& cfg) {
    const std::size_t d = static_cast<std::size_t>(cfg.shape[0]) * cfg.shape[1] * cfg.shape[2];
    Rng rng = Rng(cfg.seed).derive(0);
    std::vector<std::vector<float>> templates;
    templates.reserve(static_cast<std::size_t>(cfg.classes));
    for (int c = 0; c < cfg.classes; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            std::vector<float> t(d);
            for (auto& v : t) v = rng.uniform(0.2f, 0.8f);
            placed = true;
            for (const auto& prev : templates) {
                double dist2 = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    const double diff = t[i] - prev[i];
                    dist2 += diff * diff;
                }
                if (std::sqrt(dist2) < cfg.margin) {
                    placed = false;
                    break;
                }
            }
            if (placed) templates.push_back(std::move(t));
        }
        if (!placed)
            throw UsageError("synth_blobs: margin " + std::to_string(cfg.margin) +
                             " infeasible for " + std::to_string(cfg.classes) +
                             " classes in this image shape");
    }
    return templates;
}

} // namespace

std::vector<std::vector<float>> blob_templates(const BlobConfig& cfg) {
    return make_templates(cfg);
}

LabeledDataset synth_blobs(const BlobConfig& cfg) {
    if (cfg.classes < 2) throw UsageError("synth_blobs: need at least 2 classes");
    if (cfg.per_class < 1) throw UsageError("synth_blobs: per_class must be >= 1");
    if (cfg.margin <= 0.0f) throw UsageError("synth_blobs: margin must be > 0");
    if (cfg.shape.size() != 3) throw UsageError("synth_blobs: shape must be [C,H,W]");

    const auto templates = make_templates(cfg);
    const std::size_t d = templates.front().size();

    // noise stream keyed on the split so train/validation share templates
    // but draw independent samples
    std::uint64_t split_key = 1;
    for (char ch : cfg.split) split_key = split_key * 131 + static_cast<unsigned char>(ch);
    Rng noise = Rng(cfg.seed).derive(split_key);

    const int n = cfg.classes * cfg.per_class;
    LabeledDataset out;
    out.images = Tensor({n, cfg.shape[0], cfg.shape[1], cfg.shape[2]});
    out.labels.resize(static_cast<std::size_t>(n));
    for (int c = 0; c < cfg.classes; ++c) {
        for (int s = 0; s < cfg.per_class; ++s) {
            const int idx = c * cfg.per_class + s;
            float* dst = out.images.data() + static_cast<std::size_t>(idx) * d;
            for (std::size_t i = 0; i < d; ++i) {
                const float v = templates[static_cast<std::size_t>(c)][i] +
                                noise.normal(0.0f, cfg.sigma);
                dst[i] = std::clamp(v, 0.0f, 1.0f);
            }
            out.labels[static_cast<std::size_t>(idx)] = c;
        }
    }
    out.classes = cfg.classes;
    out.split = cfg.split;
    out.id = "blobs:c" + std::to_string(cfg.classes) + "x" + std::to_string(cfg.per_class) +
             ":" + cfg.split + ":s" + std::to_string(cfg.seed);
    out.rebuild_class_index();
    return out;
}

} // namespace dtuap
