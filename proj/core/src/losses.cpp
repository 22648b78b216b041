#include "mutexnet/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace mutexnet {

namespace {

constexpr double kProbEps = 1e-12;

double clamp_prob(double p) {
    if (p < kProbEps) return kProbEps;
    if (p > 1.0 - kProbEps) return 1.0 - kProbEps;
    return p;
}

void require_batch_of_scores(const Tensor& f, const char* who) {
    if (f.rank() != 2) {
        throw std::invalid_argument(std::string(who) + ": expected [batch x K], got " + f.shape_str());
    }
}

} // namespace

std::string to_string(Regularizer r) {
    switch (r) {
        case Regularizer::none: return "none";
        case Regularizer::mutex: return "mutex";
        case Regularizer::entropy: return "entropy";
    }
    return "?";
}

std::string to_string(Head h) {
    return h == Head::sigmoid ? "sigmoid" : "softmax";
}

Regularizer regularizer_from_string(const std::string& s) {
    if (s == "none") return Regularizer::none;
    if (s == "mutex") return Regularizer::mutex;
    if (s == "entropy") return Regularizer::entropy;
    throw std::invalid_argument("unknown regularizer '" + s + "' (expected none|mutex|entropy)");
}

Head head_from_string(const std::string& s) {
    if (s == "sigmoid") return Head::sigmoid;
    if (s == "softmax") return Head::softmax;
    throw std::invalid_argument("unknown head '" + s + "' (expected sigmoid|softmax)");
}

bool mutex_indicator(const std::vector<double>& f) {
    int ones = 0;
    for (double v : f) {
        if (v == 1.0) {
            ++ones;
        } else if (v != 0.0) {
            throw std::invalid_argument("mutex_indicator: non-binary entry " + std::to_string(v));
        }
    }
    return ones == 1;
}

LossResult mutex_loss(const Tensor& f) {
    require_batch_of_scores(f, "mutex_loss");
    const std::size_t rows = f.dim(0), K = f.dim(1);
    if (K < 2) {
        throw std::invalid_argument("mutex_loss: needs K >= 2 classes, got K=" + std::to_string(K));
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f[i] >= 0.0 && f[i] <= 1.0)) {
            throw std::invalid_argument("mutex_loss: entry " + std::to_string(f[i]) + " outside [0, 1]");
        }
    }

    std::vector<double> grad(rows * K, 0.0);
    std::vector<double> g(K);        // 1 - f for the current row
    std::vector<double> pre(K + 1);  // prefix products of g
    std::vector<double> suf(K + 1);  // suffix products of g
    std::vector<double> pre2(K), suf2(K);
    double value = 0.0;

    for (std::size_t r = 0; r < rows; ++r) {
        const double* fr = f.data() + r * K;
        for (std::size_t k = 0; k < K; ++k) g[k] = 1.0 - fr[k];

        pre[0] = 1.0;
        for (std::size_t k = 0; k < K; ++k) pre[k + 1] = pre[k] * g[k];
        suf[K] = 1.0;
        for (std::size_t k = K; k > 0; --k) suf[k - 1] = g[k - 1] * suf[k];

        // prod_{k != j} (1 - f_k) without division
        double row_sum = 0.0;
        for (std::size_t j = 0; j < K; ++j) row_sum += fr[j] * (pre[j] * suf[j + 1]);
        value -= row_sum;

        // d/df_m of the row term: for each m, exclude index m and take
        // prefix/suffix products over the remaining entries so the
        // two-index exclusion products come out division-free.
        for (std::size_t m = 0; m < K; ++m) {
            double acc = 1.0;
            for (std::size_t k = 0; k < K; ++k) {
                if (k == m) continue;
                pre2[k] = acc;
                acc *= g[k];
            }
            const double excl_m = acc; // prod_{k != m} (1 - f_k)
            acc = 1.0;
            for (std::size_t k = K; k > 0; --k) {
                const std::size_t kk = k - 1;
                if (kk == m) continue;
                suf2[kk] = acc;
                acc *= g[kk];
            }
            double sum_others = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                if (j == m) continue;
                sum_others += fr[j] * pre2[j] * suf2[j];
            }
            grad[r * K + m] = -(excl_m - sum_others);
        }
    }

    const double inv_rows = 1.0 / static_cast<double>(rows);
    for (double& v : grad) v *= inv_rows;
    return {value * inv_rows, Tensor::from_raw({rows, K}, std::move(grad))};
}

LossResult entropy_loss(const Tensor& p) {
    require_batch_of_scores(p, "entropy_loss");
    const std::size_t rows = p.dim(0), K = p.dim(1);

    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double v = p.at2(r, k);
            if (v < 0.0) {
                throw std::invalid_argument("entropy_loss: negative probability " + std::to_string(v));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw std::invalid_argument("entropy_loss: row " + std::to_string(r) + " sums to " +
                                        std::to_string(sum) + ", off the simplex");
        }
    }

    std::vector<double> grad(rows * K);
    double value = 0.0;
    const double inv_rows = 1.0 / static_cast<double>(rows);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double v = p[i];
        if (v > 0.0) value -= v * std::log(v); // 0 log 0 = 0
        grad[i] = -(std::log(clamp_prob(v)) + 1.0) * inv_rows;
    }
    return {value * inv_rows, Tensor::from_raw({rows, K}, std::move(grad))};
}

LossResult cross_entropy_loss(const Tensor& f, const std::vector<int>& labels, Head head) {
    require_batch_of_scores(f, "cross_entropy_loss");
    const std::size_t rows = f.dim(0), K = f.dim(1);
    if (labels.size() != rows) {
        throw std::invalid_argument("cross_entropy_loss: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(rows) + " rows");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= K) {
            throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(y) + " out of range [0, " +
                                        std::to_string(K) + ")");
        }
    }

    std::vector<double> grad(rows * K, 0.0);
    double value = 0.0;
    const double inv_rows = 1.0 / static_cast<double>(rows);

    if (head == Head::sigmoid) {
        // K independent binary targets per row.
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t y = static_cast<std::size_t>(labels[r]);
            for (std::size_t k = 0; k < K; ++k) {
                const double pk = clamp_prob(f.at2(r, k));
                if (k == y) {
                    value -= std::log(pk);
                    grad[r * K + k] = -inv_rows / pk;
                } else {
                    value -= std::log(1.0 - pk);
                    grad[r * K + k] = inv_rows / (1.0 - pk);
                }
            }
        }
    } else {
        // Negative log-likelihood of the labeled class.
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t y = static_cast<std::size_t>(labels[r]);
            const double py = clamp_prob(f.at2(r, y));
            value -= std::log(py);
            grad[r * K + y] = -inv_rows / py;
        }
    }
    return {value * inv_rows, Tensor::from_raw({rows, K}, std::move(grad))};
}

double total_loss(double supervised, double unsupervised, const LossConfig& cfg) {
    if (cfg.lambda < 0.0) {
        throw std::invalid_argument("total_loss: lambda must be >= 0, got " + std::to_string(cfg.lambda));
    }
    return supervised + cfg.lambda * unsupervised;
}

LossValue make_loss_value(double supervised, double unsupervised, const LossConfig& cfg) {
    return {supervised, unsupervised, total_loss(supervised, unsupervised, cfg)};
}

} // namespace mutexnet
