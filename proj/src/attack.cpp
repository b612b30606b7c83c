#include "dtuap/attack.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dtuap/errors.hpp"
#include "dtuap/kernels.hpp"
#include "dtuap/losses.hpp"
#include "dtuap/ops.hpp"

namespace dtuap {

using nlohmann::json;

std::string to_string(Norm n) { return n == Norm::linf ? "linf" : "l2"; }
std::string to_string(Projection p) { return p == Projection::clip ? "clip" : "rescale"; }

std::string to_string(LossConfig c) {
    switch (c) {
    case LossConfig::lt_lnt: return "lt+lnt";
    case LossConfig::ltce_lnt: return "ltce+lnt";
    case LossConfig::lt_only: return "lt";
    case LossConfig::lt1_lnt: return "lt1+lnt";
    case LossConfig::lt2_lnt: return "lt2+lnt";
    }
    return "?";
}

Norm norm_from_string(const std::string& s) {
    if (s == "linf") return Norm::linf;
    if (s == "l2") return Norm::l2;
    throw UsageError("unknown norm '" + s + "' (expected linf or l2)");
}

Projection projection_from_string(const std::string& s) {
    if (s == "clip") return Projection::clip;
    if (s == "rescale") return Projection::rescale_always;
    throw UsageError("unknown projection '" + s + "' (expected clip or rescale)");
}

LossConfig loss_config_from_string(const std::string& s) {
    if (s == "lt+lnt") return LossConfig::lt_lnt;
    if (s == "ltce+lnt") return LossConfig::ltce_lnt;
    if (s == "lt") return LossConfig::lt_only;
    if (s == "lt1+lnt") return LossConfig::lt1_lnt;
    if (s == "lt2+lnt") return LossConfig::lt2_lnt;
    throw UsageError("unknown loss config '" + s +
                     "' (expected one of lt+lnt, ltce+lnt, lt, lt1+lnt, lt2+lnt)");
}

void AttackSpec::validate(int classes) const {
    if (sources.empty()) throw UsageError("attack: source set is empty");
    for (int s : sources) {
        if (s < 0 || s >= classes)
            throw UsageError("attack: source class " + std::to_string(s) + " out of range [0," +
                             std::to_string(classes) + ")");
        if (s == sink) throw UsageError("attack: sink class " + std::to_string(sink) +
                                        " is in the source set");
    }
    if (sink < 0 || sink >= classes)
        throw UsageError("attack: sink class " + std::to_string(sink) + " out of range [0," +
                         std::to_string(classes) + ")");
    if (!patch && eps <= 0.0f) throw UsageError("attack: eps must be > 0");
    if (alpha < 0.0f) throw UsageError("attack: alpha must be >= 0");
    if (dominance < 0.0f) throw UsageError("attack: dominance must be >= 0");
    if (iters < 0) throw UsageError("attack: iteration count must be >= 0");
    if (batch < 2 || batch % 2 != 0)
        throw UsageError("attack: batch size must be even and >= 2");
    if (adam.lr <= 0.0f) throw UsageError("attack: learning rate must be > 0");
}

float delta_norm(const Tensor& delta, Norm norm) {
    const auto& K = kernels::active();
    const auto n = static_cast<std::size_t>(delta.numel());
    if (norm == Norm::linf) return K.max_abs(delta.data(), n);
    return std::sqrt(K.dot(delta.data(), delta.data(), n));
}

void project(Tensor& delta, Norm norm, float eps, Projection mode) {
    const auto& K = kernels::active();
    const auto n = static_cast<std::size_t>(delta.numel());
    if (mode == Projection::clip) {
        if (norm == Norm::linf) {
            K.clamp(delta.data(), -eps, eps, delta.data(), n);
        } else {
            const float len = delta_norm(delta, Norm::l2);
            if (len > eps) K.vscale(delta.data(), eps / len, delta.data(), n);
        }
        return;
    }
    // literal Algorithm-1 projection: always rescale onto the sphere
    const float len = delta_norm(delta, norm);
    if (len > 0.0f) K.vscale(delta.data(), eps / len, delta.data(), n);
}

Tensor make_circle_mask(const std::vector<int>& input_shape, const CircleMask& mask) {
    if (input_shape.size() != 3) throw UsageError("make_circle_mask: input shape must be [C,H,W]");
    const int h = input_shape[1], w = input_shape[2];
    if (mask.radius <= 0.0f) throw UsageError("patch: radius must be > 0");
    if (mask.center_y - mask.radius < -0.5f || mask.center_y + mask.radius > h - 0.5f ||
        mask.center_x - mask.radius < -0.5f || mask.center_x + mask.radius > w - 0.5f)
        throw UsageError("patch: circle (center " + std::to_string(mask.center_y) + "," +
                         std::to_string(mask.center_x) + ", radius " +
                         std::to_string(mask.radius) + ") does not fit a " + std::to_string(h) +
                         "x" + std::to_string(w) + " image");

    Tensor m({h, w});
    const float r2 = mask.radius * mask.radius;
    std::int64_t area = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float dy = static_cast<float>(y - mask.center_y);
            const float dx = static_cast<float>(x - mask.center_x);
            if (dy * dy + dx * dx <= r2) {
                m.data()[y * w + x] = 1.0f;
                ++area;
            }
        }
    if (area == 0) throw UsageError("patch: mask has zero area");
    return m;
}

namespace {

// Adam on the flat delta buffer; bias-corrected, state owned by the session.
class Adam {
public:
    Adam(std::size_t n, const AdamConfig& cfg) : cfg_(cfg), m_(n, 0.0f), v_(n, 0.0f) {}

    void step(std::vector<float>& x, const std::vector<float>& g) {
        ++t_;
        const float c1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
        const float c2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
        for (std::size_t i = 0; i < x.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0f - cfg_.beta1) * g[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0f - cfg_.beta2) * g[i] * g[i];
            const float mhat = m_[i] / c1;
            const float vhat = v_[i] / c2;
            x[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }

private:
    AdamConfig cfg_;
    int t_ = 0;
    std::vector<float> m_, v_;
};

void apply_mask(Tensor& delta, const Tensor& mask) {
    const int chan = delta.dim(0);
    const std::size_t plane = static_cast<std::size_t>(mask.numel());
    for (int c = 0; c < chan; ++c)
        kernels::active().vmul(delta.data() + c * plane, mask.data(), delta.data() + c * plane,
                               plane);
}

} // namespace

LossBundle loss_total(Graph& g, const Classifier& victim, const Tensor& x_t,
                      std::span<const int> clean_pred_t, const Tensor& x_nt,
                      std::span<const int> clean_pred_nt, const Tensor& delta,
                      const AttackSpec& spec) {
    LossBundle out;
    const Tensor adv_t = ops::clamp(g, ops::add(g, x_t, delta), 0.0f, 1.0f);
    const Tensor logits_t = victim.forward(g, adv_t);

    Tensor lt1, lt2;
    switch (spec.loss) {
    case LossConfig::lt_lnt:
    case LossConfig::lt_only:
        lt1 = losses::loss_t1(g, logits_t, clean_pred_t);
        lt2 = losses::loss_t2(g, logits_t, spec.sink, spec.dominance);
        break;
    case LossConfig::ltce_lnt:
        lt1 = losses::loss_t1_ce(g, logits_t, clean_pred_t);
        lt2 = losses::loss_t2_ce(g, logits_t, spec.sink);
        break;
    case LossConfig::lt1_lnt:
        lt1 = losses::loss_t1(g, logits_t, clean_pred_t);
        break;
    case LossConfig::lt2_lnt:
        lt2 = losses::loss_t2(g, logits_t, spec.sink, spec.dominance);
        break;
    }

    Tensor loss_t;
    if (lt1.defined() && lt2.defined())
        loss_t = ops::add(g, lt1, lt2);
    else
        loss_t = lt1.defined() ? lt1 : lt2;
    out.t1 = lt1.defined() ? lt1.item() : 0.0f;
    out.t2 = lt2.defined() ? lt2.item() : 0.0f;

    out.total = loss_t;
    if (spec.loss != LossConfig::lt_only) {
        const Tensor adv_nt = ops::clamp(g, ops::add(g, x_nt, delta), 0.0f, 1.0f);
        const Tensor logits_nt = victim.forward(g, adv_nt);
        const Tensor lnt = losses::loss_nt(g, logits_nt, clean_pred_nt);
        out.nt = lnt.item();
        out.total = ops::add(g, loss_t, ops::scale(g, lnt, spec.alpha));
    }
    return out;
}

Perturbation craft(const Classifier& victim, const LabeledDataset& data, const ClassSplit& split,
                   const AttackSpec& spec, const CraftHooks& hooks) {
    spec.validate(victim.classes());
    if (data.image_shape() != victim.input_shape())
        throw UsageError("craft: dataset images " + Tensor::shape_str(data.image_shape()) +
                         " do not match the victim input " +
                         Tensor::shape_str(victim.input_shape()));

    const Classifier frozen = victim.frozen_clone();
    const auto& shape = frozen.input_shape();

    Perturbation out;
    out.spec = spec;
    out.model_id = frozen.arch();
    out.dataset_id = data.id;
    out.delta = Tensor(shape, 0.0f, true);
    if (spec.patch) out.mask = make_circle_mask(shape, *spec.patch);

    Tensor& delta = out.delta;
    Adam adam(static_cast<std::size_t>(delta.numel()), spec.adam);
    const Rng base(spec.seed);

    auto preds_of = [&](const std::vector<int>& positions) {
        std::vector<int> preds(positions.size());
        for (std::size_t i = 0; i < positions.size(); ++i)
            preds[i] = split.clean_pred[static_cast<std::size_t>(positions[i])];
        return preds;
    };

    out.log.reserve(static_cast<std::size_t>(spec.iters));
    for (int iter = 0; iter < spec.iters; ++iter) {
        Rng rng = base.derive(static_cast<std::uint64_t>(iter));
        const Batch batch = sample_batch(split, spec.batch, rng);
        out.sampled_with_replacement |= batch.with_replacement;

        Graph g;
        const LossBundle bundle =
            loss_total(g, frozen, data.gather(batch.targeted_pos), preds_of(batch.targeted_pos),
                       data.gather(batch.nontargeted_pos), preds_of(batch.nontargeted_pos), delta,
                       spec);

        const float lval = bundle.total.item();
        if (!std::isfinite(lval))
            throw NumericError("craft: non-finite loss at iteration " + std::to_string(iter));

        g.backward(bundle.total);
        adam.step(delta.values(), delta.grad());
        delta.zero_grad();

        if (spec.patch) {
            apply_mask(delta, out.mask);
        } else {
            project(delta, spec.norm, spec.eps, spec.projection);
        }

        CraftLogRow row;
        row.iter = iter;
        row.loss = lval;
        row.loss_t1 = bundle.t1;
        row.loss_t2 = bundle.t2;
        row.loss_nt = bundle.nt;
        row.delta_norm = delta_norm(delta, spec.norm);
        out.log.push_back(row);
        if (hooks.on_iteration) hooks.on_iteration(row, delta);
    }
    return out;
}

Perturbation craft_multi2one(const Classifier& victim, const LabeledDataset& data,
                             const ClassSplit& split, const AttackSpec& spec,
                             const CraftHooks& hooks) {
    if (split.sources.size() != spec.sources.size())
        throw UsageError("craft_multi2one: split and spec disagree on the source set");
    for (std::size_t s = 0; s < split.targeted_per_source.size(); ++s)
        if (split.targeted_per_source[s] == 0)
            throw UsageError("craft_multi2one: source class " +
                             std::to_string(split.sources[s]) +
                             " has no correctly classified samples");
    return craft(victim, data, split, spec, hooks);
}

// --- DTAP serialization ---

namespace {

constexpr char kMagic[4] = {'D', 'T', 'A', 'P'};
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
    if (!in) throw DataError(path + ": truncated perturbation file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

json spec_to_json(const AttackSpec& s) {
    json j;
    j["sources"] = s.sources;
    j["sink"] = s.sink;
    j["norm"] = to_string(s.norm);
    j["eps"] = s.eps;
    j["alpha"] = s.alpha;
    j["dominance"] = s.dominance;
    j["iters"] = s.iters;
    j["batch"] = s.batch;
    j["adam"] = {{"lr", s.adam.lr}, {"beta1", s.adam.beta1}, {"beta2", s.adam.beta2},
                 {"eps", s.adam.eps}};
    j["projection"] = to_string(s.projection);
    j["loss"] = to_string(s.loss);
    j["seed"] = s.seed;
    if (s.patch)
        j["patch"] = {{"center", {s.patch->center_y, s.patch->center_x}},
                      {"radius", s.patch->radius}};
    return j;
}

AttackSpec spec_from_json(const json& j) {
    AttackSpec s;
    s.sources = j.at("sources").get<std::vector<int>>();
    s.sink = j.at("sink");
    s.norm = norm_from_string(j.at("norm"));
    s.eps = j.at("eps");
    s.alpha = j.at("alpha");
    s.dominance = j.at("dominance");
    s.iters = j.at("iters");
    s.batch = j.at("batch");
    s.adam.lr = j.at("adam").at("lr");
    s.adam.beta1 = j.at("adam").at("beta1");
    s.adam.beta2 = j.at("adam").at("beta2");
    s.adam.eps = j.at("adam").at("eps");
    s.projection = projection_from_string(j.at("projection"));
    s.loss = loss_config_from_string(j.at("loss"));
    s.seed = j.at("seed");
    if (j.contains("patch")) {
        CircleMask m;
        m.center_y = j["patch"]["center"][0];
        m.center_x = j["patch"]["center"][1];
        m.radius = j["patch"]["radius"];
        s.patch = m;
    }
    return s;
}

} // namespace

void save_perturbation(const std::string& path, const Perturbation& p) {
    json header;
    header["spec"] = spec_to_json(p.spec);
    header["delta_shape"] = p.delta.shape();
    header["model_id"] = p.model_id;
    header["dataset_id"] = p.dataset_id;
    header["seed"] = p.spec.seed;
    header["norm"] = to_string(p.spec.norm);
    header["eps"] = p.spec.eps;
    if (p.mask.defined()) header["mask_shape"] = p.mask.shape();
    if (p.kappa_t) header["kappa_t"] = *p.kappa_t;
    if (p.kappa_nt) header["kappa_nt"] = *p.kappa_nt;
    header["sampled_with_replacement"] = p.sampled_with_replacement;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    const std::string htext = header.dump();
    put_u32(out, static_cast<std::uint32_t>(htext.size()));
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    out.write(reinterpret_cast<const char*>(p.delta.data()),
              static_cast<std::streamsize>(p.delta.numel() * 4));
    if (p.mask.defined()) {
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(p.mask.numel()));
        for (std::size_t i = 0; i < bytes.size(); ++i)
            bytes[i] = p.mask.data()[i] != 0.0f ? 1 : 0;
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw DataError("failed writing " + path);
}

Perturbation load_perturbation(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path + ": not a DTAP perturbation file (bad magic)");
    const std::uint32_t version = get_u32(in, path);
    if (version != kVersion)
        throw DataError(path + ": unsupported DTAP version " + std::to_string(version));

    const std::uint32_t hlen = get_u32(in, path);
    std::string htext(hlen, '\0');
    in.read(htext.data(), hlen);
    if (!in) throw DataError(path + ": truncated header");

    Perturbation p;
    try {
        const json header = json::parse(htext);
        p.spec = spec_from_json(header.at("spec"));
        p.model_id = header.value("model_id", "");
        p.dataset_id = header.value("dataset_id", "");
        if (header.contains("kappa_t")) p.kappa_t = header["kappa_t"].get<double>();
        if (header.contains("kappa_nt")) p.kappa_nt = header["kappa_nt"].get<double>();
        p.sampled_with_replacement = header.value("sampled_with_replacement", false);

        const std::vector<int> dshape = header.at("delta_shape").get<std::vector<int>>();
        p.delta = Tensor(dshape);
        in.read(reinterpret_cast<char*>(p.delta.data()),
                static_cast<std::streamsize>(p.delta.numel() * 4));
        if (!in) throw DataError(path + ": truncated delta payload");

        if (header.contains("mask_shape")) {
            const std::vector<int> mshape = header["mask_shape"].get<std::vector<int>>();
            p.mask = Tensor(mshape);
            std::vector<std::uint8_t> bytes(static_cast<std::size_t>(p.mask.numel()));
            in.read(reinterpret_cast<char*>(bytes.data()),
                    static_cast<std::streamsize>(bytes.size()));
            if (!in) throw DataError(path + ": truncated mask payload");
            for (std::size_t i = 0; i < bytes.size(); ++i)
                p.mask.data()[i] = bytes[i] ? 1.0f : 0.0f;
        }
    } catch (const json::exception& e) {
        throw DataError(path + ": malformed DTAP header: " + std::string(e.what()));
    }
    return p;
}

} // namespace dtuap
