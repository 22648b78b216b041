#ifndef MUTEXNET_LOSSES_HPP
#define MUTEXNET_LOSSES_HPP

#include <string>
#include <vector>

#include "mutexnet/tensor.hpp"

namespace mutexnet {

enum class Regularizer { none, mutex, entropy };
enum class Head { sigmoid, softmax };

std::string to_string(Regularizer r);
std::string to_string(Head h);
Regularizer regularizer_from_string(const std::string& s);
Head head_from_string(const std::string& s);

/** Objective selection: which unsupervised regularizer to add to the
 * supervised cross-entropy term, and with what weight. */
struct LossConfig {
    Regularizer regularizer = Regularizer::none;
    double lambda = 1.0; // must be >= 0
};

/// The three components of the combined objective for one batch or epoch:
/// total == supervised + lambda * unsupervised.
struct LossValue {
    double supervised = 0.0;
    double unsupervised = 0.0;
    double total = 0.0;
};

/// Loss evaluation result: scalar value plus its gradient w.r.t. the
/// prediction tensor the loss was evaluated on.
struct LossResult {
    double value = 0.0;
    Tensor grad;
};

/** Boolean mutual-exclusivity indicator on a binary score vector: true iff
 * exactly one component is 1. Each entry must be exactly 0 or 1. */
bool mutex_indicator(const std::vector<double>& f);

/** Mutual-exclusivity loss on prediction rows f in [0,1]^K, K >= 2.
 *
 * Per row:  l = -sum_j f_j * prod_{k != j} (1 - f_k)
 *
 * which is minus the probability that exactly one of K independent
 * Bernoulli(f_k) events occurs; the batch value is the mean over rows, so
 * it always lies in [-1, 0] and reaches -1 exactly at one-hot rows. The
 * gradient is the analytic derivative of the batch mean. Products are
 * accumulated by sequential multiplication in index order.
 */
LossResult mutex_loss(const Tensor& f);

/** Mean per-row entropy of probability rows (natural log, 0*log 0 = 0).
 *
 * Rows must be on the simplex: entries >= 0 and each row summing to 1
 * within 1e-6. The gradient is -(log p + 1)/rows with p clamped to
 * [1e-12, 1 - 1e-12] before the log.
 */
LossResult entropy_loss(const Tensor& p);

/** Supervised cross-entropy against integer class labels.
 *
 * sigmoid head: mean over rows of sum_k BCE(f_k, [k == y]) -- K independent
 * binary targets. softmax head: mean over rows of -log f_y. Probabilities
 * are clamped to [1e-12, 1 - 1e-12] before any log.
 */
LossResult cross_entropy_loss(const Tensor& f, const std::vector<int>& labels, Head head);

/// The combined objective: supervised + lambda * unsupervised.
double total_loss(double supervised, double unsupervised, const LossConfig& cfg);

/// Convenience: assembles a LossValue honoring the total identity.
LossValue make_loss_value(double supervised, double unsupervised, const LossConfig& cfg);

} // namespace mutexnet

#endif // MUTEXNET_LOSSES_HPP
