#ifndef MUTEXNET_EXPERIMENTS_HPP
#define MUTEXNET_EXPERIMENTS_HPP

#include <memory>
#include <string>
#include <vector>

#include "mutexnet/data.hpp"
#include "mutexnet/trainer.hpp"

namespace mutexnet {

/** Declarative description of an experiment: dataset, sweep axes,
 * regularizer arms, trial count, and the training template. Loadable from
 * JSON; every field has a CLI flag override. */
struct ExperimentSpec {
    std::string dataset = "synthetic"; // mnist | synthetic
    std::vector<double> labeled_fractions{0.01};
    std::vector<double> unlabeled_fractions{}; // for the unlabeled sweep
    std::vector<Regularizer> regularizers{Regularizer::none, Regularizer::mutex};
    int trials = 5;
    std::uint64_t base_seed = 1;
    int jobs = 1;
    std::string output_dir = "out";
    std::string data_dir; // empty = $MUTEXNET_DATA_DIR, else "data/mnist"

    std::string preset = "synthetic-mlp"; // synthetic-mlp | mnist-dense | mnist-conv
    TrainConfig train;                    // template; seed derived per trial

    int synthetic_n_per_class = 200;
    int synthetic_test_n_per_class = 200;
    SyntheticLayout layout;

    int boundary_resolution = 200;

    /// Throws invalid_argument on out-of-range fields or an entropy arm
    /// with a sigmoid head (entropy needs simplex rows).
    void validate() const;

    std::string resolved_data_dir() const;
};

ExperimentSpec spec_from_json_file(const std::string& path);
ExperimentSpec spec_from_json_text(const std::string& text);
std::string spec_to_json_text(const ExperimentSpec& spec);

/// One trial's persisted outcome (one line of trials.jsonl).
struct TrialRecord {
    std::string dataset;
    std::string preset;
    Head head = Head::sigmoid;
    double labeled_fraction = 0.0;
    double unlabeled_fraction = 1.0; // 1.0 = all of 𝓤
    Regularizer regularizer = Regularizer::none;
    double lambda = 1.0;
    int trial = 0;
    std::uint64_t seed = 0;
    double error_rate = 0.0;
    int n_correct = 0;
    int n_total = 0;
    double mean_confidence = 0.0;
    double final_loss_sup = 0.0;
    double final_loss_unsup = 0.0;
    double final_loss_total = 0.0;
};

/// Aggregate over the trials of one sweep setting.
struct TrialReport {
    double labeled_fraction = 0.0;
    double unlabeled_fraction = 1.0;
    Regularizer regularizer = Regularizer::none;
    std::vector<double> errors; // per trial, in trial order
    std::vector<std::uint64_t> seeds;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation (n-1); 0 for n == 1
};

/// Which fraction varies across table rows.
enum class SweepAxis { labeled, unlabeled };

struct SweepResult {
    std::vector<TrialRecord> records; // trials x settings, fixed order
    std::vector<TrialReport> reports; // one per setting
    SweepAxis axis = SweepAxis::labeled;
};

/** Label-ratio protocol: for every labeled fraction and regularizer arm,
 * `trials` runs with seeds base_seed + trial. All arms of one
 * (fraction, trial) share the split, the initial parameters, and the batch
 * order, so differences are attributable to the loss alone. */
SweepResult run_sweep(const ExperimentSpec& spec);

/** Fixed-labeled / variable-unlabeled protocol: the labeled fraction is
 * labeled_fractions.front(); 𝓤 is subsampled per sweep point. Fraction 0
 * is the labeled-data-only baseline (regularizer none on the untouched
 * split, so the batch cadence matches the other points). */
SweepResult run_unlabeled_sweep(const ExperimentSpec& spec);

/// Recomputes reports from persisted records (the `report` subcommand).
SweepResult aggregate_records(std::vector<TrialRecord> records);

void write_trials_jsonl(const std::vector<TrialRecord>& records, const std::string& path);
std::vector<TrialRecord> load_trials_jsonl(const std::string& path);

/// Human table: rows = swept fractions, columns = regularizers, cells
/// "mean ± std" in percent with two decimals.
std::string render_table(const SweepResult& result);
/// Machine table: one CSV row per report.
std::string render_table_csv(const SweepResult& result);

/// Writes trials.jsonl, table.txt and table.csv into dir (created if
/// needed).
void write_sweep_outputs(const SweepResult& result, const std::string& dir);

/// "1%", "0.13%", "100%" style rendering of a fraction.
std::string format_fraction_percent(double fraction);

/** One paired synthetic run (baseline vs the spec's regularizer) at the
 * given seed: trains both nets, exports boundary CSVs plus the dataset CSV
 * when out_dir is nonempty, and reports test error and the
 * boundary-margin metric of each arm. */
struct BoundaryComparison {
    EvalResult eval_base, eval_reg;
    double margin_base = 0.0, margin_reg = 0.0;
    double confidence_base = 0.0, confidence_reg = 0.0; // on unlabeled points
};
BoundaryComparison export_boundary(const ExperimentSpec& spec, std::uint64_t trial_seed, const std::string& out_dir);

/// Loads the train or test side of the spec's dataset.
std::shared_ptr<const Dataset> load_experiment_dataset(const ExperimentSpec& spec, bool train_side);

} // namespace mutexnet

#endif // MUTEXNET_EXPERIMENTS_HPP
