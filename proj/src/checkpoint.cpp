#include "dtuap/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dtuap/errors.hpp"

namespace dtuap {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'D', 'T', 'A', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError(path + ": truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void save_checkpoint(const std::string& path, const Classifier& model,
                     const CheckpointMeta& meta) {
    json header;
    header["arch"] = model.arch();
    header["input_shape"] = model.input_shape();
    header["classes"] = model.classes();
    header["normalization"] = {{"mean", model.normalization().mean},
                               {"std", model.normalization().std}};
    header["training"] = {{"dataset", meta.dataset_id},
                          {"epochs", meta.epochs},
                          {"final_val_accuracy", meta.final_val_accuracy}};
    if (!meta.hyperparameters.empty())
        header["hyperparameters"] = json::parse(meta.hyperparameters);
    json names = json::array();
    for (const auto& [name, t] : model.params()) names.push_back(name);
    header["tensors"] = names;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const std::string htext = header.dump();
    put_u32(out, static_cast<std::uint32_t>(htext.size()));
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));

    for (const auto& [name, t] : model.params()) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
        for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * 4));
    }
    if (!out) throw DataError("failed writing " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path + ": not a DTAC checkpoint (bad magic)");
    const std::uint32_t version = get_u32(in, path);
    if (version != kVersion)
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));

    const std::uint32_t hlen = get_u32(in, path);
    std::string htext(hlen, '\0');
    in.read(htext.data(), hlen);
    if (!in) throw DataError(path + ": truncated header");

    json header;
    try {
        header = json::parse(htext);
    } catch (const json::exception& e) {
        throw DataError(path + ": malformed header JSON: " + e.what());
    }

    LoadedCheckpoint lc;
    try {
        const std::string arch = header.at("arch");
        const std::vector<int> input_shape = header.at("input_shape");
        const int classes = header.at("classes");
        Normalization norm;
        norm.mean = header.at("normalization").at("mean").get<std::vector<float>>();
        norm.std = header.at("normalization").at("std").get<std::vector<float>>();
        lc.model = Classifier::build(arch, input_shape, classes, 0, std::move(norm));
        lc.meta.dataset_id = header.at("training").value("dataset", "");
        lc.meta.epochs = header.at("training").value("epochs", 0);
        lc.meta.final_val_accuracy = header.at("training").value("final_val_accuracy", 0.0f);
        if (header.contains("hyperparameters"))
            lc.meta.hyperparameters = header["hyperparameters"].dump();

        for (const auto& jname : header.at("tensors")) {
            const std::string want = jname.get<std::string>();
            const std::uint32_t nlen = get_u32(in, path);
            std::string name(nlen, '\0');
            in.read(name.data(), nlen);
            if (!in) throw DataError(path + ": truncated tensor name");
            if (name != want)
                throw DataError(path + ": tensor order mismatch (header says '" + want +
                                "', file has '" + name + "')");
            const std::uint32_t rank = get_u32(in, path);
            std::vector<int> dims(rank);
            for (auto& d : dims) d = static_cast<int>(get_u32(in, path));

            Tensor t = lc.model.param(name);
            if (t.shape() != dims)
                throw DataError(path + ": tensor '" + name + "' has shape " +
                                Tensor::shape_str(dims) + ", model expects " +
                                Tensor::shape_str(t.shape()));
            in.read(reinterpret_cast<char*>(t.data()),
                    static_cast<std::streamsize>(t.numel() * 4));
            if (!in) throw DataError(path + ": truncated tensor data for '" + name + "'");
        }
    } catch (const json::exception& e) {
        throw DataError(path + ": header missing fields: " + std::string(e.what()));
    }
    return lc;
}

} // namespace dtuap
