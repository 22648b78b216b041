#include "mutexnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace mutexnet {

TrainLog train(Network& net, const SplitDataset& sd, const TrainConfig& cfg) {
    if (net.classes() != static_cast<std::size_t>(sd.source().class_count)) {
        throw std::logic_error("train: network has " + std::to_string(net.classes()) + " outputs but dataset has " +
                               std::to_string(sd.source().class_count) + " classes");
    }
    if (net.input_size() != sd.source().feature_dim()) {
        throw std::logic_error("train: network input size " + std::to_string(net.input_size()) +
                               " != feature dim " + std::to_string(sd.source().feature_dim()));
    }
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.loss.lambda < 0.0) throw std::invalid_argument("train: lambda must be >= 0");

    // A zero-weight regularizer contributes nothing; skipping its forward
    // pass keeps such runs bit-identical to regularizer=none.
    const bool use_unsup = cfg.loss.regularizer != Regularizer::none && cfg.loss.lambda > 0.0;

    BatchStream stream(sd, cfg.n_labeled, cfg.n_unlabeled, Rng(cfg.seed));
    GradientSet velocity = GradientSet::zeros_like(net);
    TrainLog log;
    log.reserve(cfg.epochs);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (epoch > 1) stream.start_epoch();

        double sup_sum = 0.0, unsup_sum = 0.0;
        std::size_t sup_rows = 0, unsup_rows = 0;

        while (auto batch = stream.next()) {
            const std::size_t n_l = batch->labeled_x.dim(0);
            const std::size_t n_u = batch->unlabeled_x.empty() ? 0 : batch->unlabeled_x.dim(0);

            const Tensor x = use_unsup && n_u > 0 ? concat_rows(batch->labeled_x, batch->unlabeled_x)
                                                  : batch->labeled_x;
            auto [f, cache] = forward(net, x);

            // supervised term on the labeled rows
            const Tensor f_labeled = n_u > 0 && use_unsup ? slice_rows(f, 0, n_l) : f;
            LossResult sup = cross_entropy_loss(f_labeled, batch->labeled_y, cfg.head);
            sup_sum += sup.value * static_cast<double>(n_l);
            sup_rows += n_l;

            Tensor dL_df = Tensor::zeros(f.shape());
            const std::size_t K = f.dim(1);
            std::copy(sup.grad.data(), sup.grad.data() + sup.grad.size(), dL_df.data());

            if (use_unsup) {
                // regularizer over labeled+unlabeled rows (or 𝓤 only under
                // the ablation flag); mean within the part it sees
                const std::size_t r0 = cfg.unsup_on_unlabeled_only && n_u > 0 ? n_l : 0;
                const Tensor f_reg = r0 == 0 ? f : slice_rows(f, r0, f.dim(0));
                LossResult unsup = cfg.loss.regularizer == Regularizer::mutex ? mutex_loss(f_reg)
                                                                              : entropy_loss(f_reg);
                unsup_sum += unsup.value * static_cast<double>(f_reg.dim(0));
                unsup_rows += f_reg.dim(0);
                double* d = dL_df.data() + r0 * K;
                for (std::size_t i = 0; i < unsup.grad.size(); ++i) d[i] += cfg.loss.lambda * unsup.grad[i];
            }

            GradientSet grads = backward(net, cache, dL_df);
            sgd_step(net, grads, cfg.lr, cfg.momentum, velocity);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss_sup = sup_rows ? sup_sum / static_cast<double>(sup_rows) : 0.0;
        rec.loss_unsup = unsup_rows ? unsup_sum / static_cast<double>(unsup_rows) : 0.0;
        rec.loss_total = total_loss(rec.loss_sup, rec.loss_unsup, cfg.loss);
        if (cfg.eval_set && cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
            rec.eval_error = evaluate(net, *cfg.eval_set).error_rate;
        }
        if (!std::isfinite(rec.loss_total)) {
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                     " (sup=" + std::to_string(rec.loss_sup) +
                                     ", unsup=" + std::to_string(rec.loss_unsup) + ")");
        }
        log.push_back(std::move(rec));
    }
    return log;
}

EvalResult evaluate(const Network& net, const Dataset& test) {
    test.check();
    if (net.input_size() != test.feature_dim()) {
        throw std::invalid_argument("evaluate: network input size " + std::to_string(net.input_size()) +
                                    " != feature dim " + std::to_string(test.feature_dim()));
    }
    const std::size_t n = test.size();
    const std::size_t K = net.classes();
    const std::size_t chunk = 512;

    int correct = 0;
    double conf_sum = 0.0;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t stop = std::min(start + chunk, n);
        Tensor f = predict(net, slice_rows(test.features, start, stop));
        for (std::size_t r = 0; r < stop - start; ++r) {
            const double* row = f.data() + r * K;
            std::size_t best = 0;
            for (std::size_t k = 1; k < K; ++k) {
                if (row[k] > row[best]) best = k; // ties keep the lowest index
            }
            conf_sum += row[best];
            if (static_cast<int>(best) == test.labels[start + r]) ++correct;
        }
    }
    EvalResult res;
    res.n_correct = correct;
    res.n_total = static_cast<int>(n);
    res.error_rate = 1.0 - static_cast<double>(correct) / static_cast<double>(n);
    res.mean_confidence = conf_sum / static_cast<double>(n);
    return res;
}

DecisionGrid decision_grid(const Network& net, const Rect& bounds, int resolution) {
    if (net.input_size() != 2) {
        throw std::invalid_argument("decision_grid: needs a 2-d-input network, this one takes " +
                                    std::to_string(net.input_size()) + " features");
    }
    if (resolution < 2) throw std::invalid_argument("decision_grid: resolution must be >= 2");
    if (!(bounds.x_min < bounds.x_max && bounds.y_min < bounds.y_max)) {
        throw std::invalid_argument("decision_grid: degenerate bounds");
    }

    DecisionGrid grid;
    grid.resolution = resolution;
    grid.bounds = bounds;
    grid.xs.resize(resolution);
    grid.ys.resize(resolution);
    for (int i = 0; i < resolution; ++i) {
        const double t = static_cast<double>(i) / (resolution - 1);
        grid.xs[i] = bounds.x_min + t * (bounds.x_max - bounds.x_min);
        grid.ys[i] = bounds.y_min + t * (bounds.y_max - bounds.y_min);
    }

    const std::size_t cells = static_cast<std::size_t>(resolution) * resolution;
    std::vector<double> pts(cells * 2);
    for (int iy = 0; iy < resolution; ++iy) {
        for (int ix = 0; ix < resolution; ++ix) {
            const std::size_t i = static_cast<std::size_t>(iy) * resolution + ix;
            pts[i * 2] = grid.xs[ix];
            pts[i * 2 + 1] = grid.ys[iy];
        }
    }

    grid.scores = predict(net, Tensor::from_raw({cells, 2}, std::move(pts)));
    const std::size_t K = grid.scores.dim(1);
    grid.argmax.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const double* row = grid.scores.data() + i * K;
        std::size_t best = 0;
        for (std::size_t k = 1; k < K; ++k) {
            if (row[k] > row[best]) best = k;
        }
        grid.argmax[i] = static_cast<int>(best);
    }
    return grid;
}

std::vector<std::pair<double, double>> boundary_cells(const DecisionGrid& grid) {
    std::vector<std::pair<double, double>> cells;
    const int R = grid.resolution;
    auto label = [&](int ix, int iy) { return grid.argmax[static_cast<std::size_t>(iy) * R + ix]; };
    for (int iy = 0; iy < R; ++iy) {
        for (int ix = 0; ix < R; ++ix) {
            const int c = label(ix, iy);
            const bool edge = (ix > 0 && label(ix - 1, iy) != c) || (ix + 1 < R && label(ix + 1, iy) != c) ||
                              (iy > 0 && label(ix, iy - 1) != c) || (iy + 1 < R && label(ix, iy + 1) != c);
            if (edge) cells.emplace_back(grid.xs[ix], grid.ys[iy]);
        }
    }
    return cells;
}

double mean_boundary_margin(const DecisionGrid& grid, const Tensor& points) {
    if (points.rank() != 2 || points.dim(1) != 2) {
        throw std::invalid_argument("mean_boundary_margin: points must be [n x 2], got " + points.shape_str());
    }
    const auto cells = boundary_cells(grid);
    if (cells.empty()) return 0.0;
    const std::size_t n = points.dim(0);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double px = points.at2(i, 0), py = points.at2(i, 1);
        double best = std::numeric_limits<double>::max();
        for (const auto& [cx, cy] : cells) {
            const double dx = px - cx, dy = py - cy;
            best = std::min(best, dx * dx + dy * dy);
        }
        sum += std::sqrt(best);
    }
    return sum / static_cast<double>(n);
}

void write_train_log_jsonl(const TrainLog& log, std::ostream& out) {
    for (const EpochRecord& rec : log) {
        nlohmann::json j{
            {"epoch", rec.epoch},
            {"loss_sup", rec.loss_sup},
            {"loss_unsup", rec.loss_unsup},
            {"loss_total", rec.loss_total},
        };
        if (rec.eval_error) j["eval_error"] = *rec.eval_error;
        out << j.dump() << '\n';
    }
}

} // namespace mutexnet
