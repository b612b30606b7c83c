#pragma once

#include <string>
#include <vector>

#include "dtuap/attack.hpp"
#include "dtuap/dataset.hpp"
#include "dtuap/model.hpp"

namespace dtuap {

struct EvalOptions {
    // Strict reading of "all other classes": count ground-truth sink-class
    // samples inside kappa_nt. Off by default; a clean sink sample
    // classified as sink was never fooled.
    bool include_sink_in_nt = false;
};

struct EvalReport {
    double kappa_t = 0.0;  // source-labelled validation samples hitting the sink
    double kappa_nt = 0.0; // remaining classes hitting the sink
    double clean_accuracy = 0.0;
    std::int64_t n_targeted = 0;    // denominator of kappa_t
    std::int64_t n_nontargeted = 0; // denominator of kappa_nt
    std::vector<std::int64_t> confusion; // [true][adversarial prediction], C*C row-major
    std::vector<int> sources;
    int sink = -1;
    std::vector<double> kappa_t_per_source; // aligned with sources
    int classes = 0;

    std::int64_t confusion_at(int truth, int pred) const {
        return confusion[static_cast<std::size_t>(truth) * classes + pred];
    }
};

// Applies clamp(x + delta, 0, 1) to every validation sample and recounts
// predictions. Pure function of (victim, data, perturbation).
EvalReport evaluate(const Classifier& victim, const LabeledDataset& validation,
                    const Perturbation& perturbation, const std::vector<int>& sources, int sink,
                    const EvalOptions& options = {});

// --- scenario protocol ---

struct Scenario {
    std::vector<int> sources;
    int sink;
};

struct ScenarioRow {
    int scenario_id;
    std::vector<int> sources;
    int sink;
    double kappa_t, kappa_nt, clean_accuracy;
    std::uint64_t seed;
};

struct ScenarioTable {
    std::vector<ScenarioRow> rows;
    double avg_kappa_t = 0.0, avg_kappa_nt = 0.0;
};

// Crafts one perturbation per scenario (per-scenario seeds derived from the
// base spec seed) and evaluates on the validation split. Scenarios run in
// parallel, capped by the DTUAP_THREADS environment variable; each scenario
// stays internally deterministic.
ScenarioTable run_scenarios(const Classifier& victim, const LabeledDataset& train,
                            const LabeledDataset& validation,
                            const std::vector<Scenario>& scenarios, const AttackSpec& base,
                            int cap = 0, const EvalOptions& options = {});

// `count` distinct random source->sink pairs (used by the Table-1 style
// protocol where scenarios are drawn at random).
std::vector<Scenario> random_scenarios(int classes, int count, std::uint64_t seed);

// --- ablation sweeps ---

enum class SweepAxis { alpha, dominance, epsilon, samples_per_class, loss_config };

SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis axis);

struct SweepPoint {
    std::string value;
    double kappa_t, kappa_nt;
};

struct SweepResult {
    SweepAxis axis;
    std::vector<SweepPoint> points;
    AttackSpec base;
};

// Re-crafts and re-evaluates once per axis value with everything else (seed
// included) frozen. Values are parsed per axis; unknown values throw.
SweepResult sweep(const Classifier& victim, const LabeledDataset& train,
                  const LabeledDataset& validation, SweepAxis axis,
                  const std::vector<std::string>& values, const AttackSpec& base, int cap = 0,
                  const EvalOptions& options = {});

// --- emission ---

void write_scenario_csv(const std::string& path, const ScenarioTable& table);
void write_sweep_csv(const std::string& path, const SweepResult& result);
void write_craft_log_csv(const std::string& path, const std::vector<CraftLogRow>& log);
std::string format_scenario_table(const ScenarioTable& table);
std::string format_sweep_table(const SweepResult& result);

// Worker cap: DTUAP_THREADS when set, hardware concurrency otherwise,
// never more than `tasks`.
int worker_count(int tasks);

} // namespace dtuap
