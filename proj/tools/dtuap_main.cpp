// dtuap: train desk-scale classifiers, craft double-targeted universal
// perturbations, sweep the attack hyper-parameters, and inspect the
// resulting perturbation files.
//
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric
// failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtuap/attack.hpp"
#include "dtuap/checkpoint.hpp"
#include "dtuap/dataset.hpp"
#include "dtuap/errors.hpp"
#include "dtuap/eval.hpp"
#include "dtuap/image_io.hpp"
#include "dtuap/model.hpp"
#include "dtuap/split.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dtuap;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
    std::vector<int> out;
    for (const auto& part : split_csv(s)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw UsageError(std::string("bad ") + what + " value '" + part + "'");
        }
    }
    return out;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config file not found: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + " is not valid JSON: " + std::string(e.what()));
    }
}

template <typename T>
T get_or(const json& cfg, const std::string& key, const T& fallback) {
    if (!cfg.contains(key) || cfg.at(key).is_null()) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError("config field '" + key + "' has the wrong type");
    }
}

struct DatasetPair {
    LabeledDataset train;
    LabeledDataset validation;
};

std::string find_existing(const std::vector<std::string>& candidates) {
    for (const auto& c : candidates)
        if (fs::exists(c)) return c;
    throw UsageError("dataset file not found: " + candidates.front());
}

DatasetPair load_datasets(const json& cfg, int expected_classes = 0) {
    const std::string format = get_or<std::string>(cfg, "format", "idx");
    if (format == "blobs") {
        BlobConfig bc;
        const json b = cfg.contains("blobs") ? cfg.at("blobs") : json::object();
        bc.classes = get_or<int>(b, "classes", 5);
        bc.per_class = get_or<int>(b, "per_class", 200);
        bc.shape = get_or<std::vector<int>>(b, "shape", {1, 8, 8});
        bc.seed = get_or<std::uint64_t>(b, "seed", 7777);
        bc.margin = get_or<float>(b, "margin", 0.8f);
        bc.sigma = get_or<float>(b, "sigma", 0.05f);
        DatasetPair out;
        bc.split = "train";
        out.train = synth_blobs(bc);
        bc.split = "validation";
        bc.per_class = get_or<int>(b, "per_class_val", std::max(1, bc.per_class / 2));
        out.validation = synth_blobs(bc);
        return out;
    }

    if (!cfg.contains("dataset")) throw UsageError("missing --dataset directory");
    const std::string dir = cfg.at("dataset").get<std::string>();
    if (!fs::exists(dir)) throw UsageError("dataset path not found: " + dir);

    DatasetPair out;
    if (format == "idx") {
        const auto timg = find_existing({dir + "/train-images-idx3-ubyte",
                                         dir + "/train-images.idx3-ubyte"});
        const auto tlab = find_existing({dir + "/train-labels-idx1-ubyte",
                                         dir + "/train-labels.idx1-ubyte"});
        const auto vimg = find_existing({dir + "/t10k-images-idx3-ubyte",
                                         dir + "/t10k-images.idx3-ubyte"});
        const auto vlab = find_existing({dir + "/t10k-labels-idx1-ubyte",
                                         dir + "/t10k-labels.idx1-ubyte"});
        out.train = load_idx(timg, tlab, "train", expected_classes);
        out.validation = load_idx(vimg, vlab, "validation", expected_classes);
    } else if (format == "cifar") {
        std::vector<std::string> train_files;
        for (int i = 1; i <= 5; ++i) {
            const std::string p = dir + "/data_batch_" + std::to_string(i) + ".bin";
            if (fs::exists(p)) train_files.push_back(p);
        }
        if (train_files.empty())
            throw UsageError("dataset file not found: " + dir + "/data_batch_1.bin");
        const std::string test = dir + "/test_batch.bin";
        if (!fs::exists(test)) throw UsageError("dataset file not found: " + test);
        out.train = load_cifar_binary(train_files, "train", expected_classes);
        out.validation = load_cifar_binary({test}, "validation", expected_classes);
    } else {
        throw UsageError("unknown dataset format '" + format + "' (expected idx, cifar or blobs)");
    }
    return out;
}

AttackSpec spec_from_config(const json& cfg) {
    AttackSpec spec;
    if (cfg.contains("source")) spec.sources = cfg.at("source").get<std::vector<int>>();
    spec.sink = get_or<int>(cfg, "sink", -1);
    spec.norm = norm_from_string(get_or<std::string>(cfg, "norm", "linf"));
    spec.eps = get_or<float>(cfg, "eps", 15.0f / 255.0f);
    spec.alpha = get_or<float>(cfg, "alpha", 1.0f);
    spec.dominance = get_or<float>(cfg, "dominance", 5.0f);
    spec.iters = get_or<int>(cfg, "iters", 500);
    spec.batch = get_or<int>(cfg, "batch", 64);
    spec.adam.lr = get_or<float>(cfg, "lr", 0.01f);
    spec.projection = projection_from_string(get_or<std::string>(cfg, "projection", "clip"));
    spec.loss = loss_config_from_string(get_or<std::string>(cfg, "loss", "lt+lnt"));
    spec.seed = get_or<std::uint64_t>(cfg, "seed", 1);
    if (get_or<bool>(cfg, "patch", false)) {
        CircleMask m;
        const auto center = get_or<std::vector<int>>(cfg, "center", {});
        if (center.size() != 2) throw UsageError("--patch requires --center y,x");
        m.center_y = center[0];
        m.center_x = center[1];
        m.radius = get_or<float>(cfg, "radius", 0.0f);
        spec.patch = m;
    }
    return spec;
}

void write_resolved_config(const json& cfg, const std::string& out_dir) {
    std::ofstream out(out_dir + "/resolved_config.json");
    if (!out) throw DataError("cannot write " + out_dir + "/resolved_config.json");
    out << cfg.dump(2) << '\n';
}

std::string ensure_out_dir(const json& cfg, const std::string& fallback) {
    const std::string dir = get_or<std::string>(cfg, "out", fallback);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir);
    return dir;
}

json resolved_attack_config(const json& cfg, const AttackSpec& spec, const std::string& command) {
    json out = cfg;
    out["command"] = command;
    out["source"] = spec.sources;
    out["sink"] = spec.sink;
    out["norm"] = to_string(spec.norm);
    out["eps"] = spec.eps;
    out["alpha"] = spec.alpha;
    out["dominance"] = spec.dominance;
    out["iters"] = spec.iters;
    out["batch"] = spec.batch;
    out["lr"] = spec.adam.lr;
    out["projection"] = to_string(spec.projection);
    out["loss"] = to_string(spec.loss);
    out["seed"] = spec.seed;
    out["cap"] = get_or<int>(cfg, "cap", 0);
    out["include_sink_in_nt"] = get_or<bool>(cfg, "include_sink_in_nt", false);
    out["format"] = get_or<std::string>(cfg, "format", "idx");
    if (spec.patch) {
        out["patch"] = true;
        out["center"] = {spec.patch->center_y, spec.patch->center_x};
        out["radius"] = spec.patch->radius;
    }
    return out;
}

int cmd_train(const json& cfg) {
    const std::string out_dir = ensure_out_dir(cfg, "train-run");
    DatasetPair data = load_datasets(cfg);

    const std::string arch = get_or<std::string>(cfg, "model", "cnn-small");
    TrainConfig tc;
    tc.epochs = get_or<int>(cfg, "epochs", 5);
    tc.batch = get_or<int>(cfg, "batch", 64);
    tc.lr = get_or<float>(cfg, "lr", 0.05f);
    tc.seed = get_or<std::uint64_t>(cfg, "seed", 1);
    tc.hflip = get_or<bool>(cfg, "hflip", false);

    Classifier model = Classifier::build(arch, data.train.image_shape(), data.train.classes,
                                         tc.seed);
    const TrainLog log = train(model, data.train, data.validation, tc);

    CheckpointMeta meta;
    meta.dataset_id = data.train.id;
    meta.epochs = tc.epochs;
    meta.final_val_accuracy = log.final_val_accuracy;
    meta.hyperparameters = json({{"lr", tc.lr},
                                 {"batch", tc.batch},
                                 {"momentum", tc.momentum},
                                 {"decay", tc.decay},
                                 {"decay_every", tc.decay_every},
                                 {"seed", tc.seed}})
                               .dump();
    const std::string ckpt = out_dir + "/checkpoint.dtac";
    save_checkpoint(ckpt, model, meta);

    {
        std::ofstream csv(out_dir + "/train_log.csv");
        if (!csv) throw DataError("cannot write " + out_dir + "/train_log.csv");
        csv << "epoch,mean_loss,val_accuracy,lr\n";
        for (const auto& row : log.epochs)
            csv << row.epoch << ',' << row.mean_loss << ',' << row.val_accuracy << ',' << row.lr
                << '\n';
    }

    json resolved = cfg;
    resolved["command"] = "train";
    resolved["model"] = arch;
    resolved["epochs"] = tc.epochs;
    resolved["batch"] = tc.batch;
    resolved["lr"] = tc.lr;
    resolved["seed"] = tc.seed;
    resolved["out"] = out_dir;
    write_resolved_config(resolved, out_dir);

    std::cout << "trained " << arch << " on " << data.train.id << ": val accuracy "
              << log.final_val_accuracy << "\ncheckpoint: " << ckpt << "\n";
    return 0;
}

struct AttackContext {
    Classifier victim;
    DatasetPair data;
    AttackSpec spec;
    int cap = 0;
    EvalOptions eval_options;
};

AttackContext make_attack_context(const json& cfg) {
    AttackContext ctx;
    if (!cfg.contains("checkpoint")) throw UsageError("missing --checkpoint");
    auto loaded = load_checkpoint(cfg.at("checkpoint").get<std::string>());
    ctx.victim = std::move(loaded.model);
    ctx.spec = spec_from_config(cfg);
    ctx.spec.validate(ctx.victim.classes()); // usage errors before any compute
    ctx.cap = get_or<int>(cfg, "cap", 0);
    ctx.eval_options.include_sink_in_nt = get_or<bool>(cfg, "include_sink_in_nt", false);
    ctx.data = load_datasets(cfg, ctx.victim.classes());
    if (ctx.data.train.image_shape() != ctx.victim.input_shape())
        throw UsageError("dataset images do not match the checkpoint input shape");
    return ctx;
}

int cmd_attack(const json& cfg) {
    const std::string out_dir = ensure_out_dir(cfg, "attack-run");
    AttackContext ctx = make_attack_context(cfg);

    const ClassSplit split = build_split(ctx.data.train, ctx.victim, ctx.spec.sources, ctx.cap);
    Perturbation p = ctx.spec.sources.size() > 1
                         ? craft_multi2one(ctx.victim, ctx.data.train, split, ctx.spec)
                         : craft(ctx.victim, ctx.data.train, split, ctx.spec);
    if (p.sampled_with_replacement)
        std::cerr << "warning: a crafting pool was smaller than batch/2; sampled with "
                     "replacement\n";

    const EvalReport rep = evaluate(ctx.victim, ctx.data.validation, p, ctx.spec.sources,
                                    ctx.spec.sink, ctx.eval_options);
    p.kappa_t = rep.kappa_t;
    p.kappa_nt = rep.kappa_nt;

    save_perturbation(out_dir + "/perturbation.dtap", p);
    write_craft_log_csv(out_dir + "/craft_log.csv", p.log);

    ScenarioTable table;
    ScenarioRow row;
    row.scenario_id = 0;
    row.sources = ctx.spec.sources;
    row.sink = ctx.spec.sink;
    row.kappa_t = rep.kappa_t;
    row.kappa_nt = rep.kappa_nt;
    row.clean_accuracy = rep.clean_accuracy;
    row.seed = ctx.spec.seed;
    table.rows.push_back(row);
    table.avg_kappa_t = rep.kappa_t;
    table.avg_kappa_nt = rep.kappa_nt;
    write_scenario_csv(out_dir + "/eval.csv", table);

    {
        std::ofstream csv(out_dir + "/confusion.csv");
        if (!csv) throw DataError("cannot write " + out_dir + "/confusion.csv");
        csv << "true,pred,count\n";
        for (int t = 0; t < rep.classes; ++t)
            for (int q = 0; q < rep.classes; ++q)
                if (rep.confusion_at(t, q) != 0)
                    csv << t << ',' << q << ',' << rep.confusion_at(t, q) << '\n';
    }

    json resolved = resolved_attack_config(cfg, ctx.spec, "attack");
    resolved["out"] = out_dir;
    write_resolved_config(resolved, out_dir);

    std::string src_text;
    for (std::size_t i = 0; i < ctx.spec.sources.size(); ++i)
        src_text += (i ? "," : "") + std::to_string(ctx.spec.sources[i]);
    std::cout << "attack " << src_text << " -> " << ctx.spec.sink
              << (ctx.spec.sources.size() > 1 ? " (Multi2One)" : "")
              << (ctx.spec.patch ? " (patch)" : "") << "\n"
              << format_scenario_table(table) << "kappa_t=" << rep.kappa_t
              << " kappa_nt=" << rep.kappa_nt << "\n";
    return 0;
}

int cmd_sweep(const json& cfg) {
    const std::string out_dir = ensure_out_dir(cfg, "sweep-run");
    if (!cfg.contains("axis")) throw UsageError("missing --axis");
    if (!cfg.contains("values")) throw UsageError("missing --values");
    const SweepAxis axis = sweep_axis_from_string(cfg.at("axis").get<std::string>());
    const std::vector<std::string> values = cfg.at("values").get<std::vector<std::string>>();

    AttackContext ctx = make_attack_context(cfg);
    const SweepResult result = sweep(ctx.victim, ctx.data.train, ctx.data.validation, axis,
                                     values, ctx.spec, ctx.cap, ctx.eval_options);

    const std::string csv_path = out_dir + "/sweep_" + to_string(axis) + ".csv";
    write_sweep_csv(csv_path, result);

    json resolved = resolved_attack_config(cfg, ctx.spec, "sweep");
    resolved["axis"] = to_string(axis);
    resolved["values"] = values;
    resolved["out"] = out_dir;
    write_resolved_config(resolved, out_dir);

    std::cout << format_sweep_table(result) << "wrote " << csv_path << "\n";
    return 0;
}

int cmd_dump(const json& cfg) {
    if (!cfg.contains("file")) throw UsageError("dump: missing perturbation file argument");
    const std::string path = cfg.at("file").get<std::string>();
    const Perturbation p = load_perturbation(path);

    const auto& shape = p.delta.shape();
    std::string src_text;
    for (std::size_t i = 0; i < p.spec.sources.size(); ++i)
        src_text += (i ? "," : "") + std::to_string(p.spec.sources[i]);

    std::cout << "perturbation " << path << "\n"
              << "  scenario: " << src_text << " -> " << p.spec.sink << "\n"
              << "  model: " << p.model_id << "  dataset: " << p.dataset_id << "\n"
              << "  shape: " << Tensor::shape_str(shape) << "  norm: " << to_string(p.spec.norm)
              << "  eps: " << p.spec.eps << "  iters: " << p.spec.iters
              << "  seed: " << p.spec.seed << "\n"
              << "  |delta|_" << (p.spec.norm == Norm::linf ? "inf" : "2") << " = "
              << delta_norm(p.delta, p.spec.norm) << "\n";
    if (p.mask.defined())
        std::cout << "  patch mask: " << Tensor::shape_str(p.mask.shape()) << "\n";
    if (p.kappa_t) std::cout << "  kappa_t: " << *p.kappa_t << "\n";
    if (p.kappa_nt) std::cout << "  kappa_nt: " << *p.kappa_nt << "\n";

    if (!cfg.contains("out")) return 0;
    const std::string out_dir = ensure_out_dir(cfg, "dump-run");

    const int chan = shape[0], h = shape[1], w = shape[2];
    const std::string ext = chan == 3 ? ".ppm" : ".pgm";
    write_pnm(out_dir + "/delta_amplified" + ext,
              minmax_to_u8(p.delta.data(), static_cast<std::size_t>(p.delta.numel())), chan, h, w);
    std::cout << "wrote " << out_dir << "/delta_amplified" << ext << "\n";

    const int num = get_or<int>(cfg, "num", 0);
    if (num > 0) {
        DatasetPair data = load_datasets(cfg);
        if (data.validation.image_shape() != shape)
            throw UsageError("dump: dataset images do not match the perturbation shape");
        // adversarial examples from source-class validation samples
        std::vector<int> picks;
        for (int i = 0; i < data.validation.size() && static_cast<int>(picks.size()) < num; ++i)
            for (int s : p.spec.sources)
                if (data.validation.labels[static_cast<std::size_t>(i)] == s) {
                    picks.push_back(i);
                    break;
                }
        const std::size_t chw = static_cast<std::size_t>(p.delta.numel());
        for (std::size_t k = 0; k < picks.size(); ++k) {
            Tensor img = data.validation.gather({picks[k]});
            for (std::size_t i = 0; i < chw; ++i)
                img.data()[i] = std::clamp(img.data()[i] + p.delta.data()[i], 0.0f, 1.0f);
            const std::string name = out_dir + "/adv_" + std::to_string(k) + ext;
            write_pnm(name, unit_to_u8(img.data(), chw), chan, h, w);
        }
        std::cout << "wrote " << picks.size() << " adversarial example rasters\n";
    }

    json resolved = cfg;
    resolved["command"] = "dump";
    resolved["out"] = out_dir;
    write_resolved_config(resolved, out_dir);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"double-targeted universal adversarial perturbations"};
    app.require_subcommand(1);

    // raw option storage; only options the user actually passed are folded
    // into the config, so precedence is CLI > config file > defaults
    std::string config_path, dataset, format, model, checkpoint, norm, out, axis, values;
    std::string projection, loss, source, center, file;
    double eps = 0, alpha = 0, dominance = 0, radius = 0, lr = 0;
    int sink = 0, iters = 0, batch = 0, cap = 0, epochs = 0, num = 0;
    std::uint64_t seed = 0;
    bool patch = false, include_sink = false, hflip = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--dataset", dataset, "dataset directory");
        cmd->add_option("--format", format, "dataset format: idx, cifar or blobs");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--out", out, "output directory");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a classifier");
    add_common(train_cmd);
    train_cmd->add_option("--model", model, "architecture: mlp-2, cnn-small, cnn-resnetish");
    train_cmd->add_option("--epochs", epochs, "training epochs");
    train_cmd->add_option("--batch", batch, "mini-batch size");
    train_cmd->add_option("--lr", lr, "SGD learning rate");
    train_cmd->add_flag("--hflip", hflip, "augment with horizontal flips");

    auto add_attack_opts = [&](CLI::App* cmd) {
        add_common(cmd);
        cmd->add_option("--checkpoint", checkpoint, "victim checkpoint (DTAC)");
        cmd->add_option("--source", source, "source class list, e.g. 3 or 1,4,7");
        cmd->add_option("--sink", sink, "sink class");
        cmd->add_option("--norm", norm, "perturbation norm: linf or l2");
        cmd->add_option("--eps", eps, "perturbation budget in [0,1] pixel units");
        cmd->add_option("--alpha", alpha, "non-targeted loss weight");
        cmd->add_option("--dominance", dominance, "dominance value D");
        cmd->add_option("--iters", iters, "attack iterations");
        cmd->add_option("--batch", batch, "attack mini-batch size (even)");
        cmd->add_option("--lr", lr, "Adam learning rate");
        cmd->add_option("--cap", cap, "samples per class cap (0 = all)");
        cmd->add_flag("--patch", patch, "craft a circular patch instead of an eps-ball delta");
        cmd->add_option("--center", center, "patch center as y,x");
        cmd->add_option("--radius", radius, "patch radius in pixels");
        cmd->add_option("--projection", projection, "projection: clip or rescale");
        cmd->add_option("--loss", loss, "loss config: lt+lnt, ltce+lnt, lt, lt1+lnt, lt2+lnt");
        cmd->add_flag("--include-sink-in-nt", include_sink,
                      "count sink-class samples inside kappa_nt");
    };

    CLI::App* attack_cmd = app.add_subcommand("attack", "craft and evaluate a perturbation");
    add_attack_opts(attack_cmd);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "re-craft across one hyper-parameter axis");
    add_attack_opts(sweep_cmd);
    sweep_cmd->add_option("--axis", axis, "alpha, dominance, epsilon, cap or loss");
    sweep_cmd->add_option("--values", values, "comma-separated axis values");

    CLI::App* dump_cmd = app.add_subcommand("dump", "inspect a perturbation file");
    dump_cmd->add_option("file", file, "DTAP perturbation file")->required();
    add_common(dump_cmd);
    dump_cmd->add_option("--num", num, "number of adversarial example rasters to write");

    try {
        app.parse(argc, argv);

        CLI::App* cmd = app.get_subcommands().front();
        json cfg = config_path.empty() ? json::object() : load_config_file(config_path);

        auto passed = [&](const char* name) { return cmd->count(name) > 0; };
        if (passed("--dataset")) cfg["dataset"] = dataset;
        if (passed("--format")) cfg["format"] = format;
        if (passed("--seed")) cfg["seed"] = seed;
        if (passed("--out")) cfg["out"] = out;
        if (cmd == train_cmd) {
            if (passed("--model")) cfg["model"] = model;
            if (passed("--epochs")) cfg["epochs"] = epochs;
            if (passed("--batch")) cfg["batch"] = batch;
            if (passed("--lr")) cfg["lr"] = lr;
            if (passed("--hflip")) cfg["hflip"] = true;
        } else if (cmd == attack_cmd || cmd == sweep_cmd) {
            if (passed("--checkpoint")) cfg["checkpoint"] = checkpoint;
            if (passed("--source")) cfg["source"] = parse_int_list(source, "--source");
            if (passed("--sink")) cfg["sink"] = sink;
            if (passed("--norm")) cfg["norm"] = norm;
            if (passed("--eps")) cfg["eps"] = eps;
            if (passed("--alpha")) cfg["alpha"] = alpha;
            if (passed("--dominance")) cfg["dominance"] = dominance;
            if (passed("--iters")) cfg["iters"] = iters;
            if (passed("--batch")) cfg["batch"] = batch;
            if (passed("--lr")) cfg["lr"] = lr;
            if (passed("--cap")) cfg["cap"] = cap;
            if (passed("--patch")) cfg["patch"] = true;
            if (passed("--center")) cfg["center"] = parse_int_list(center, "--center");
            if (passed("--radius")) cfg["radius"] = radius;
            if (passed("--projection")) cfg["projection"] = projection;
            if (passed("--loss")) cfg["loss"] = loss;
            if (passed("--include-sink-in-nt")) cfg["include_sink_in_nt"] = true;
            if (cmd == sweep_cmd) {
                if (passed("--axis")) cfg["axis"] = axis;
                if (passed("--values")) cfg["values"] = split_csv(values);
            }
        } else if (cmd == dump_cmd) {
            cfg["file"] = file;
            if (passed("--num")) cfg["num"] = num;
        }

        if (cmd == train_cmd) return cmd_train(cfg);
        if (cmd == attack_cmd) return cmd_attack(cfg);
        if (cmd == sweep_cmd) return cmd_sweep(cfg);
        return cmd_dump(cfg);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::cout << app.help();
            return 0;
        }
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
