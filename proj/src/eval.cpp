#include "dtuap/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "dtuap/errors.hpp"
#include "dtuap/kernels.hpp"
#include "dtuap/rng.hpp"
#include "dtuap/split.hpp"

namespace dtuap {

EvalReport evaluate(const Classifier& victim, const LabeledDataset& validation,
                    const Perturbation& perturbation, const std::vector<int>& sources, int sink,
                    const EvalOptions& options) {
    const int classes = victim.classes();
    if (sources.empty()) throw UsageError("evaluate: empty source set");
    std::vector<char> is_source(static_cast<std::size_t>(classes), 0);
    for (int s : sources) {
        if (s < 0 || s >= classes)
            throw UsageError("evaluate: source class " + std::to_string(s) + " out of range");
        if (s == sink) throw UsageError("evaluate: sink class is in the source set");
        is_source[static_cast<std::size_t>(s)] = 1;
    }
    if (sink < 0 || sink >= classes) throw UsageError("evaluate: sink class out of range");
    if (validation.image_shape() != victim.input_shape() ||
        perturbation.delta.shape() != victim.input_shape())
        throw UsageError("evaluate: image shapes of dataset, perturbation and victim differ");

    const auto& K = kernels::active();
    const std::size_t chw = static_cast<std::size_t>(perturbation.delta.numel());
    const int n = validation.size();

    EvalReport rep;
    rep.sources = sources;
    rep.sink = sink;
    rep.classes = classes;
    rep.confusion.assign(static_cast<std::size_t>(classes) * classes, 0);
    rep.kappa_t_per_source.assign(sources.size(), 0.0);

    std::vector<std::int64_t> per_source_hits(sources.size(), 0);
    std::vector<std::int64_t> per_source_total(sources.size(), 0);
    std::int64_t hits_t = 0, hits_nt = 0, clean_correct = 0;

    constexpr int kChunk = 256;
    std::vector<int> positions;
    for (int start = 0; start < n; start += kChunk) {
        const int count = std::min(kChunk, n - start);
        positions.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) positions[static_cast<std::size_t>(i)] = start + i;

        Tensor batch = validation.gather(positions);
        const auto clean = victim.predict(batch);

        // x_adv = clamp(x + delta, 0, 1), delta broadcast across the batch
        for (int i = 0; i < count; ++i) {
            float* img = batch.data() + static_cast<std::size_t>(i) * chw;
            K.vadd(img, perturbation.delta.data(), img, chw);
        }
        K.clamp(batch.data(), 0.0f, 1.0f, batch.data(),
                static_cast<std::size_t>(batch.numel()));
        const auto adv = victim.predict(batch);

        for (int i = 0; i < count; ++i) {
            const int truth = validation.labels[static_cast<std::size_t>(start + i)];
            const int pred = adv.labels[static_cast<std::size_t>(i)];
            rep.confusion[static_cast<std::size_t>(truth) * classes + pred] += 1;
            if (clean.labels[static_cast<std::size_t>(i)] == truth) ++clean_correct;

            if (is_source[static_cast<std::size_t>(truth)]) {
                ++rep.n_targeted;
                if (pred == sink) ++hits_t;
                for (std::size_t s = 0; s < sources.size(); ++s) {
                    if (sources[s] != truth) continue;
                    ++per_source_total[s];
                    if (pred == sink) ++per_source_hits[s];
                }
            } else if (truth != sink || options.include_sink_in_nt) {
                ++rep.n_nontargeted;
                if (pred == sink) ++hits_nt;
            }
        }
    }

    if (rep.n_targeted == 0)
        throw UsageError("evaluate: validation split has no samples from the source set");
    rep.kappa_t = static_cast<double>(hits_t) / static_cast<double>(rep.n_targeted);
    rep.kappa_nt = rep.n_nontargeted == 0
                       ? 0.0
                       : static_cast<double>(hits_nt) / static_cast<double>(rep.n_nontargeted);
    rep.clean_accuracy = static_cast<double>(clean_correct) / static_cast<double>(n);
    for (std::size_t s = 0; s < sources.size(); ++s)
        rep.kappa_t_per_source[s] =
            per_source_total[s] == 0
                ? 0.0
                : static_cast<double>(per_source_hits[s]) / static_cast<double>(per_source_total[s]);
    return rep;
}

int worker_count(int tasks) {
    int cap = 0;
    if (const char* env = std::getenv("DTUAP_THREADS")) {
        cap = std::atoi(env);
        if (cap < 1) cap = 1;
    } else {
        cap = static_cast<int>(std::thread::hardware_concurrency());
        if (cap < 1) cap = 1;
    }
    return std::max(1, std::min(cap, tasks));
}

std::vector<Scenario> random_scenarios(int classes, int count, std::uint64_t seed) {
    if (classes < 2) throw UsageError("random_scenarios: need at least 2 classes");
    Rng rng(seed);
    std::vector<Scenario> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<std::pair<int, int>> used;
    int guard = 0;
    while (static_cast<int>(out.size()) < count) {
        if (++guard > count * 1000)
            throw UsageError("random_scenarios: not enough distinct source->sink pairs");
        const int src = static_cast<int>(rng.uniform_u32(static_cast<std::uint32_t>(classes)));
        const int snk = static_cast<int>(rng.uniform_u32(static_cast<std::uint32_t>(classes)));
        if (src == snk) continue;
        if (std::find(used.begin(), used.end(), std::make_pair(src, snk)) != used.end()) continue;
        used.emplace_back(src, snk);
        out.push_back(Scenario{{src}, snk});
    }
    return out;
}

ScenarioTable run_scenarios(const Classifier& victim, const LabeledDataset& train,
                            const LabeledDataset& validation,
                            const std::vector<Scenario>& scenarios, const AttackSpec& base,
                            int cap, const EvalOptions& options) {
    if (scenarios.empty()) throw UsageError("run_scenarios: empty scenario list");
    const CleanPredictions preds = predict_dataset(victim, train);

    ScenarioTable table;
    table.rows.resize(scenarios.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_text;
    std::mutex error_mutex;

    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= scenarios.size() || failed.load()) break;
            try {
                const Scenario& sc = scenarios[i];
                AttackSpec spec = base;
                spec.sources = sc.sources;
                spec.sink = sc.sink;
                spec.seed = Rng(base.seed).derive(i).seed();
                const ClassSplit split =
                    build_split(train, preds, victim.classes(), spec.sources, cap);
                Perturbation p = craft(victim, train, split, spec);
                const EvalReport rep =
                    evaluate(victim, validation, p, spec.sources, spec.sink, options);

                ScenarioRow row;
                row.scenario_id = static_cast<int>(i);
                row.sources = sc.sources;
                row.sink = sc.sink;
                row.kappa_t = rep.kappa_t;
                row.kappa_nt = rep.kappa_nt;
                row.clean_accuracy = rep.clean_accuracy;
                row.seed = spec.seed;
                table.rows[i] = row;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                failed.store(true);
                if (error_text.empty()) error_text = e.what();
            }
        }
    };

    const int workers = worker_count(static_cast<int>(scenarios.size()));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw Error("run_scenarios: " + error_text);

    double sum_t = 0.0, sum_nt = 0.0;
    for (const auto& row : table.rows) {
        sum_t += row.kappa_t;
        sum_nt += row.kappa_nt;
    }
    table.avg_kappa_t = sum_t / static_cast<double>(table.rows.size());
    table.avg_kappa_nt = sum_nt / static_cast<double>(table.rows.size());
    return table;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "alpha") return SweepAxis::alpha;
    if (s == "dominance" || s == "D") return SweepAxis::dominance;
    if (s == "epsilon" || s == "eps") return SweepAxis::epsilon;
    if (s == "cap" || s == "samples-per-class") return SweepAxis::samples_per_class;
    if (s == "loss" || s == "loss-config") return SweepAxis::loss_config;
    throw UsageError("unknown sweep axis '" + s +
                     "' (expected alpha, dominance, epsilon, cap or loss)");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::dominance: return "dominance";
    case SweepAxis::epsilon: return "epsilon";
    case SweepAxis::samples_per_class: return "samples-per-class";
    case SweepAxis::loss_config: return "loss-config";
    }
    return "?";
}

namespace {

float parse_float(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const float v = std::stof(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("sweep: bad ") + what + " value '" + s + "'");
    }
}

int parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("sweep: bad ") + what + " value '" + s + "'");
    }
}

} // namespace

SweepResult sweep(const Classifier& victim, const LabeledDataset& train,
                  const LabeledDataset& validation, SweepAxis axis,
                  const std::vector<std::string>& values, const AttackSpec& base, int cap,
                  const EvalOptions& options) {
    if (values.empty()) throw UsageError("sweep: no axis values given");

    // Parse and validate everything up front so a bad value fails fast.
    struct Point {
        AttackSpec spec;
        int cap;
    };
    std::vector<Point> points;
    points.reserve(values.size());
    for (const auto& v : values) {
        Point pt{base, cap};
        switch (axis) {
        case SweepAxis::alpha: pt.spec.alpha = parse_float(v, "alpha"); break;
        case SweepAxis::dominance: pt.spec.dominance = parse_float(v, "dominance"); break;
        case SweepAxis::epsilon: pt.spec.eps = parse_float(v, "epsilon"); break;
        case SweepAxis::samples_per_class: pt.cap = parse_int(v, "samples-per-class"); break;
        case SweepAxis::loss_config: pt.spec.loss = loss_config_from_string(v); break;
        }
        pt.spec.validate(victim.classes());
        points.push_back(std::move(pt));
    }

    const CleanPredictions preds = predict_dataset(victim, train);

    SweepResult result;
    result.axis = axis;
    result.base = base;
    result.points.resize(values.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_text;
    std::mutex error_mutex;

    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size() || failed.load()) break;
            try {
                const Point& pt = points[i];
                const ClassSplit split =
                    build_split(train, preds, victim.classes(), pt.spec.sources, pt.cap);
                Perturbation p = craft(victim, train, split, pt.spec);
                const EvalReport rep =
                    evaluate(victim, validation, p, pt.spec.sources, pt.spec.sink, options);
                result.points[i] = SweepPoint{values[i], rep.kappa_t, rep.kappa_nt};
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                failed.store(true);
                if (error_text.empty()) error_text = e.what();
            }
        }
    };

    const int workers = worker_count(static_cast<int>(points.size()));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw Error("sweep: " + error_text);
    return result;
}

namespace {

std::string join_sources(const std::vector<int>& sources) {
    std::string out;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (i) out += '|';
        out += std::to_string(sources[i]);
    }
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

} // namespace

void write_scenario_csv(const std::string& path, const ScenarioTable& table) {
    auto out = open_out(path);
    out << "scenario_id,source,sink,kappa_t,kappa_nt,clean_acc,seed\n";
    out << std::setprecision(10);
    for (const auto& row : table.rows)
        out << row.scenario_id << ',' << join_sources(row.sources) << ',' << row.sink << ','
            << row.kappa_t << ',' << row.kappa_nt << ',' << row.clean_accuracy << ',' << row.seed
            << '\n';
    out << "avg,,," << table.avg_kappa_t << ',' << table.avg_kappa_nt << ",,\n";
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
    auto out = open_out(path);
    out << "axis,value,kappa_t,kappa_nt,seed\n";
    out << std::setprecision(10);
    for (const auto& pt : result.points)
        out << to_string(result.axis) << ',' << pt.value << ',' << pt.kappa_t << ','
            << pt.kappa_nt << ',' << result.base.seed << '\n';
}

void write_craft_log_csv(const std::string& path, const std::vector<CraftLogRow>& log) {
    auto out = open_out(path);
    out << "iter,loss,loss_t1,loss_t2,loss_nt,delta_norm\n";
    out << std::setprecision(9);
    for (const auto& row : log)
        out << row.iter << ',' << row.loss << ',' << row.loss_t1 << ',' << row.loss_t2 << ','
            << row.loss_nt << ',' << row.delta_norm << '\n';
}

std::string format_scenario_table(const ScenarioTable& table) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "scenario" << std::setw(12) << "source" << std::setw(6)
       << "sink" << std::right << std::setw(10) << "kappa_t" << std::setw(10) << "kappa_nt"
       << std::setw(12) << "clean_acc" << '\n';
    os << std::fixed << std::setprecision(4);
    for (const auto& row : table.rows)
        os << std::left << std::setw(10) << row.scenario_id << std::setw(12)
           << join_sources(row.sources) << std::setw(6) << row.sink << std::right << std::setw(10)
           << row.kappa_t << std::setw(10) << row.kappa_nt << std::setw(12) << row.clean_accuracy
           << '\n';
    os << std::left << std::setw(28) << "avg" << std::right << std::setw(10) << table.avg_kappa_t
       << std::setw(10) << table.avg_kappa_nt << '\n';
    return os.str();
}

std::string format_sweep_table(const SweepResult& result) {
    std::ostringstream os;
    os << std::left << std::setw(18) << to_string(result.axis) << std::right << std::setw(10)
       << "kappa_t" << std::setw(10) << "kappa_nt" << '\n';
    os << std::fixed << std::setprecision(4);
    for (const auto& pt : result.points)
        os << std::left << std::setw(18) << pt.value << std::right << std::setw(10) << pt.kappa_t
           << std::setw(10) << pt.kappa_nt << '\n';
    return os.str();
}

} // namespace dtuap
