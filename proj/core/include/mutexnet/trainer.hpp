#ifndef MUTEXNET_TRAINER_HPP
#define MUTEXNET_TRAINER_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mutexnet/data.hpp"
#include "mutexnet/losses.hpp"
#include "mutexnet/nn.hpp"

namespace mutexnet {

/** Everything one training run needs. Defaults follow the protocol this
 * toolkit reproduces: lambda = 1, no momentum. */
struct TrainConfig {
    LossConfig loss;
    double lr = 0.1;
    double momentum = 0.0;
    int epochs = 10;
    std::size_t n_labeled = 64;    // labeled quota per batch
    std::size_t n_unlabeled = 128; // unlabeled chunk per batch
    std::uint64_t seed = 1;        // batch shuffling stream
    Head head = Head::sigmoid;
    /// Ablation: restrict the regularizer to unlabeled rows instead of the
    /// default labeled+unlabeled concatenation.
    bool unsup_on_unlabeled_only = false;
    /// Optional holdout evaluation every eval_every epochs (0 = never).
    const Dataset* eval_set = nullptr;
    int eval_every = 0;
};

/// One training-log line.
struct EpochRecord {
    int epoch = 0;
    double loss_sup = 0.0;
    double loss_unsup = 0.0;
    double loss_total = 0.0;
    std::optional<double> eval_error;
};

using TrainLog = std::vector<EpochRecord>;

/** Runs semi-supervised SGD on the split: per batch, supervised
 * cross-entropy on the labeled rows plus lambda times the configured
 * regularizer over the labeled+unlabeled rows, one backward pass, one SGD
 * step. With regularizer none (or lambda 0) the unlabeled rows contribute
 * nothing and are skipped, so such runs are bit-identical to purely
 * supervised ones under the same seed. */
TrainLog train(Network& net, const SplitDataset& sd, const TrainConfig& cfg);

struct EvalResult {
    double error_rate = 0.0; // 1 - n_correct / n_total
    int n_correct = 0;
    int n_total = 0;
    double mean_confidence = 0.0; // mean over samples of max_k f_k
};

/** Argmax evaluation on a labeled dataset; ties go to the lowest class
 * index. */
EvalResult evaluate(const Network& net, const Dataset& test);

struct Rect {
    double x_min = -1.0, x_max = 1.0;
    double y_min = -1.0, y_max = 1.0;
};

/** Dense evaluation of a 2-d-input network over a lattice. Lattice points
 * run inclusively from min to max in each axis, resolution per side. */
struct DecisionGrid {
    int resolution = 0;
    Rect bounds;
    std::vector<double> xs, ys; // lattice coordinates, length = resolution
    Tensor scores;              // [resolution^2 x K], row index = iy * resolution + ix
    std::vector<int> argmax;    // length = resolution^2
};

DecisionGrid decision_grid(const Network& net, const Rect& bounds, int resolution);

/// Lattice points whose argmax differs from at least one 4-neighbor.
std::vector<std::pair<double, double>> boundary_cells(const DecisionGrid& grid);

/** Mean over the given 2-d points of the distance to the nearest
 * argmax-change lattice point. Larger = decision boundary further from the
 * data. Returns +infinity-free 0 when the grid has no boundary cells. */
double mean_boundary_margin(const DecisionGrid& grid, const Tensor& points);

/// One JSON object per epoch record, newline separated.
void write_train_log_jsonl(const TrainLog& log, std::ostream& out);

} // namespace mutexnet

#endif // MUTEXNET_TRAINER_HPP
