#ifndef MUTEXNET_DATA_HPP
#define MUTEXNET_DATA_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mutexnet/rng.hpp"
#include "mutexnet/tensor.hpp"

namespace mutexnet {

/** A labeled classification dataset: N feature rows plus class indices in
 * [0, class_count). Immutable once built. */
struct Dataset {
    Tensor features; // [N x d]
    std::vector<int> labels;
    int class_count = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_dim() const { return features.rank() == 2 ? features.dim(1) : 0; }

    /// Validates the invariants (shape agreement, labels in range, N >= 1).
    void check() const;
};

/** Reads a big-endian IDX image/label file pair (magic 2051 / 2049).
 * Pixels are scaled from [0, 255] to [0, 1]. Item counts must agree. */
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Point-cloud geometry for the 3-class synthetic set.
struct SyntheticLayout {
    enum class Kind { gaussians, arcs };
    Kind kind = Kind::gaussians;
    // gaussians: isotropic clusters with means on an equilateral triangle.
    // sigma is picked so the clusters almost touch: a handful of labels
    // leaves real ambiguity for the boundary, yet the nearest-mean rule
    // still lands above 99%.
    double circumradius = 2.0;
    double sigma = 0.65;
    // arcs: three concentric arc segments (nonlinear boundaries).
    double arc_radius = 2.0;
    double arc_noise = 0.15;
};

/** Draws n_per_class samples for each of three classes under the layout.
 * Deterministic for a given rng state. */
Dataset make_synthetic(Rng& rng, int n_per_class, const SyntheticLayout& layout = {});

/// The three Gaussian means actually used for a layout (for oracles/tests).
std::vector<std::pair<double, double>> synthetic_means(const SyntheticLayout& layout);

/** Disjoint labeled/unlabeled partition of a dataset's indices. Labels of
 * the unlabeled part are hidden from the training-facing surface; the
 * audit accessor exists for evaluation and tests only. */
class SplitDataset {
public:
    const Dataset& source() const { return *source_; }
    std::shared_ptr<const Dataset> source_ptr() const { return source_; }

    std::size_t labeled_count() const { return labeled_.size(); }
    std::size_t unlabeled_count() const { return unlabeled_.size(); }
    const std::vector<std::size_t>& labeled_indices() const { return labeled_; }
    const std::vector<std::size_t>& unlabeled_indices() const { return unlabeled_; }

    /// Features and labels of labeled samples, by position in 𝓛.
    Tensor labeled_features(const std::vector<std::size_t>& positions) const;
    std::vector<int> labeled_labels(const std::vector<std::size_t>& positions) const;

    /// Features of unlabeled samples, by position in 𝓤. No label access.
    Tensor unlabeled_features(const std::vector<std::size_t>& positions) const;

    /** Audit-only view of the unlabeled part as a labeled dataset.
     * For evaluation and tests; the trainer never calls this. */
    Dataset unlabeled_audit_dataset() const;

    friend SplitDataset split(std::shared_ptr<const Dataset> ds, double labeled_fraction, Rng& rng, bool stratified);
    friend SplitDataset limit_unlabeled(const SplitDataset& sd, double unlabeled_fraction, Rng& rng);

private:
    SplitDataset(std::shared_ptr<const Dataset> source, std::vector<std::size_t> labeled,
                 std::vector<std::size_t> unlabeled);

    std::shared_ptr<const Dataset> source_;
    std::vector<std::size_t> labeled_;
    std::vector<std::size_t> unlabeled_;
};

/** Randomly picks round(labeled_fraction * N) samples as the labeled set 𝓛;
 * the rest form 𝓤. Stratified mode (the default) draws a class-balanced
 * labeled set: per-class quotas of target/K, so e.g. 80 labels over ten
 * classes means 8 per class. Requires at least one labeled sample per
 * class. */
SplitDataset split(std::shared_ptr<const Dataset> ds, double labeled_fraction, Rng& rng, bool stratified = true);

/** Subsamples 𝓤 to round(unlabeled_fraction * N) samples (capped at |𝓤|,
 * matching a protocol where "100% of training data" means every sample not
 * already labeled). 𝓛 is untouched. */
SplitDataset limit_unlabeled(const SplitDataset& sd, double unlabeled_fraction, Rng& rng);

/// One semi-supervised minibatch.
struct Batch {
    Tensor labeled_x;            // [n_labeled x d]
    std::vector<int> labeled_y;
    Tensor unlabeled_x;          // [n_unlabeled x d], possibly empty
};

/** Epoch-structured batch stream. One epoch is a shuffled pass over 𝓤 in
 * chunks of n_unlabeled (the final chunk may be short); every batch also
 * carries n_labeled samples drawn by cycling a permutation of 𝓛 that is
 * reshuffled whenever exhausted, so labeled samples recur within an epoch.
 * When 𝓤 is empty an epoch is a shuffled pass over 𝓛 in chunks of
 * n_labeled instead. */
class BatchStream {
public:
    BatchStream(const SplitDataset& sd, std::size_t n_labeled, std::size_t n_unlabeled, Rng rng);

    /// Number of batches in each epoch.
    std::size_t batches_per_epoch() const;

    /// Starts a new epoch (reshuffles the unlabeled pass order).
    void start_epoch();

    /// Next batch of the current epoch, or nullopt when the epoch is done.
    std::optional<Batch> next();

private:
    const SplitDataset* sd_;
    std::size_t n_labeled_;
    std::size_t n_unlabeled_;
    Rng rng_;
    std::vector<std::size_t> unlabeled_order_; // positions into 𝓤
    std::size_t unlabeled_cursor_ = 0;
    std::vector<std::size_t> labeled_cycle_;   // positions into 𝓛
    std::size_t labeled_cursor_ = 0;           // persists across epochs
    bool supervised_only_ = false;
};

/// Writes a 2-d dataset as CSV with header "x1,x2,label".
void save_points_csv(const Dataset& ds, const std::string& path);

/// Reads a CSV produced by save_points_csv back into a Dataset.
Dataset load_points_csv(const std::string& path);

} // namespace mutexnet

#endif // MUTEXNET_DATA_HPP
