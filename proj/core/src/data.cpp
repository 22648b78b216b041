#include "mutexnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mutexnet {

void Dataset::check() const {
    if (labels.empty()) throw std::invalid_argument("Dataset: empty");
    if (features.rank() != 2 || features.dim(0) != labels.size()) {
        throw std::invalid_argument("Dataset: features " + features.shape_str() + " do not match " +
                                    std::to_string(labels.size()) + " labels");
    }
    if (class_count < 1) throw std::invalid_argument("Dataset: class_count must be >= 1");
    for (int y : labels) {
        if (y < 0 || y >= class_count) {
            throw std::invalid_argument("Dataset: label " + std::to_string(y) + " outside [0, " +
                                        std::to_string(class_count) + ")");
        }
    }
}

// ------------------------------------------------------------------- MNIST

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("IDX file " + path + " truncated in header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot open IDX image file " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("cannot open IDX label file " + labels_path);

    const std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != 2051) {
        throw std::runtime_error("IDX image file " + images_path + ": expected magic 2051, got " +
                                 std::to_string(img_magic));
    }
    const std::uint32_t lab_magic = read_be32(lab, labels_path);
    if (lab_magic != 2049) {
        throw std::runtime_error("IDX label file " + labels_path + ": expected magic 2049, got " +
                                 std::to_string(lab_magic));
    }

    const std::uint32_t n_images = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    const std::uint32_t n_labels = read_be32(lab, labels_path);
    if (n_images != n_labels) {
        throw std::runtime_error("IDX pair mismatch: " + std::to_string(n_images) + " images vs " +
                                 std::to_string(n_labels) + " labels");
    }
    if (n_images == 0 || rows == 0 || cols == 0) {
        throw std::runtime_error("IDX image file " + images_path + ": degenerate dimensions");
    }

    const std::size_t d = std::size_t(rows) * cols;
    std::vector<unsigned char> raw(std::size_t(n_images) * d);
    img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (img.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw std::runtime_error("IDX image file " + images_path + " truncated: expected " +
                                 std::to_string(raw.size()) + " pixel bytes");
    }

    std::vector<unsigned char> raw_labels(n_labels);
    lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(raw_labels.size()));
    if (lab.gcount() != static_cast<std::streamsize>(raw_labels.size())) {
        throw std::runtime_error("IDX label file " + labels_path + " truncated: expected " +
                                 std::to_string(raw_labels.size()) + " label bytes");
    }

    std::vector<double> feats(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) feats[i] = raw[i] / 255.0;

    Dataset ds;
    ds.features = Tensor::from_raw({n_images, d}, std::move(feats));
    ds.labels.assign(raw_labels.begin(), raw_labels.end());
    ds.class_count = 10;
    ds.check();
    return ds;
}

// --------------------------------------------------------------- synthetic

std::vector<std::pair<double, double>> synthetic_means(const SyntheticLayout& layout) {
    // Equilateral triangle on a circle of the configured circumradius.
    const double r = layout.circumradius;
    const double pi = 3.14159265358979323846;
    std::vector<std::pair<double, double>> means;
    for (int c = 0; c < 3; ++c) {
        const double angle = pi / 2.0 + c * 2.0 * pi / 3.0;
        means.emplace_back(r * std::cos(angle), r * std::sin(angle));
    }
    return means;
}

Dataset make_synthetic(Rng& rng, int n_per_class, const SyntheticLayout& layout) {
    if (n_per_class < 1) {
        throw std::invalid_argument("make_synthetic: n_per_class must be >= 1, got " + std::to_string(n_per_class));
    }
    if (layout.kind == SyntheticLayout::Kind::gaussians && !(layout.sigma > 0.0 && layout.circumradius > 0.0)) {
        throw std::invalid_argument("make_synthetic: gaussian layout needs positive sigma and circumradius");
    }
    if (layout.kind == SyntheticLayout::Kind::arcs && !(layout.arc_radius > 0.0 && layout.arc_noise >= 0.0)) {
        throw std::invalid_argument("make_synthetic: arc layout needs positive radius and nonnegative noise");
    }

    const std::size_t n = std::size_t(n_per_class) * 3;
    std::vector<double> feats;
    feats.reserve(n * 2);
    std::vector<int> labels;
    labels.reserve(n);
    const double pi = 3.14159265358979323846;

    if (layout.kind == SyntheticLayout::Kind::gaussians) {
        const auto means = synthetic_means(layout);
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < n_per_class; ++i) {
                feats.push_back(rng.gaussian(means[c].first, layout.sigma));
                feats.push_back(rng.gaussian(means[c].second, layout.sigma));
                labels.push_back(c);
            }
        }
    } else {
        // Three 100-degree arc segments of one circle, jittered radially.
        for (int c = 0; c < 3; ++c) {
            const double arc_start = c * 2.0 * pi / 3.0;
            const double arc_span = 2.0 * pi / 3.0 * 0.83;
            for (int i = 0; i < n_per_class; ++i) {
                const double t = arc_start + rng.next_double() * arc_span;
                const double r = layout.arc_radius + rng.gaussian(0.0, layout.arc_noise);
                feats.push_back(r * std::cos(t));
                feats.push_back(r * std::sin(t));
                labels.push_back(c);
            }
        }
    }

    Dataset ds;
    ds.features = Tensor({n, 2}, std::move(feats)); // validating ctor: rejects non-finite draws
    ds.labels = std::move(labels);
    ds.class_count = 3;
    return ds;
}

// ------------------------------------------------------------ SplitDataset

SplitDataset::SplitDataset(std::shared_ptr<const Dataset> source, std::vector<std::size_t> labeled,
                           std::vector<std::size_t> unlabeled)
    : source_(std::move(source)), labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)) {}

namespace {

Tensor gather_rows(const Dataset& ds, const std::vector<std::size_t>& index_set,
                   const std::vector<std::size_t>& positions) {
    const std::size_t d = ds.feature_dim();
    std::vector<double> out(positions.size() * d);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] >= index_set.size()) {
            throw std::invalid_argument("gather: position " + std::to_string(positions[i]) + " out of range");
        }
        const double* src = ds.features.data() + index_set[positions[i]] * d;
        std::copy(src, src + d, out.begin() + i * d);
    }
    return Tensor::from_raw({positions.size(), d}, std::move(out));
}

} // namespace

Tensor SplitDataset::labeled_features(const std::vector<std::size_t>& positions) const {
    return gather_rows(*source_, labeled_, positions);
}

std::vector<int> SplitDataset::labeled_labels(const std::vector<std::size_t>& positions) const {
    std::vector<int> out(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) out[i] = source_->labels[labeled_[positions[i]]];
    return out;
}

Tensor SplitDataset::unlabeled_features(const std::vector<std::size_t>& positions) const {
    return gather_rows(*source_, unlabeled_, positions);
}

Dataset SplitDataset::unlabeled_audit_dataset() const {
    if (unlabeled_.empty()) throw std::invalid_argument("unlabeled_audit_dataset: 𝓤 is empty");
    std::vector<std::size_t> all(unlabeled_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Dataset ds;
    ds.features = unlabeled_features(all);
    ds.labels.resize(unlabeled_.size());
    for (std::size_t i = 0; i < unlabeled_.size(); ++i) ds.labels[i] = source_->labels[unlabeled_[i]];
    ds.class_count = source_->class_count;
    return ds;
}

SplitDataset split(std::shared_ptr<const Dataset> ds, double labeled_fraction, Rng& rng, bool stratified) {
    if (!ds) throw std::invalid_argument("split: null dataset");
    ds->check();
    if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
        throw std::invalid_argument("split: labeled_fraction must be in (0, 1], got " +
                                    std::to_string(labeled_fraction));
    }

    const std::size_t n = ds->size();
    const std::size_t target = static_cast<std::size_t>(std::llround(labeled_fraction * static_cast<double>(n)));

    std::vector<std::size_t> labeled;
    std::vector<char> is_labeled(n, 0);

    if (stratified) {
        const std::size_t K = static_cast<std::size_t>(ds->class_count);
        std::vector<std::vector<std::size_t>> by_class(K);
        for (std::size_t i = 0; i < n; ++i) by_class[ds->labels[i]].push_back(i);

        // Class-balanced quotas: target/K each, remainder seats going to the
        // largest classes (lowest index on ties), overflow past a class's
        // size pushed to whichever class has the most spare room.
        std::vector<std::size_t> take(K, target / K);
        std::vector<std::size_t> order(K);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (by_class[a].size() != by_class[b].size()) return by_class[a].size() > by_class[b].size();
            return a < b;
        });
        for (std::size_t i = 0; i < target % K; ++i) ++take[order[i]];

        std::size_t overflow = 0;
        for (std::size_t c = 0; c < K; ++c) {
            if (take[c] > by_class[c].size()) {
                overflow += take[c] - by_class[c].size();
                take[c] = by_class[c].size();
            }
        }
        while (overflow > 0) {
            std::size_t best = K;
            for (std::size_t c = 0; c < K; ++c) {
                if (take[c] < by_class[c].size() &&
                    (best == K || by_class[c].size() - take[c] > by_class[best].size() - take[best])) {
                    best = c;
                }
            }
            if (best == K) throw std::logic_error("split: labeled target exceeds dataset size");
            ++take[best];
            --overflow;
        }

        for (std::size_t c = 0; c < K; ++c) {
            if (take[c] == 0) {
                throw std::invalid_argument("split: stratified split would leave class " + std::to_string(c) +
                                            " without labeled samples (" + std::to_string(target) + " labels over " +
                                            std::to_string(K) + " classes)");
            }
        }
        for (std::size_t c = 0; c < K; ++c) {
            rng.shuffle(by_class[c]);
            for (std::size_t i = 0; i < take[c]; ++i) {
                labeled.push_back(by_class[c][i]);
                is_labeled[by_class[c][i]] = 1;
            }
        }
    } else {
        if (target == 0) {
            throw std::invalid_argument("split: fraction " + std::to_string(labeled_fraction) +
                                        " rounds to an empty labeled set");
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        for (std::size_t i = 0; i < target; ++i) {
            labeled.push_back(order[i]);
            is_labeled[order[i]] = 1;
        }
    }

    std::sort(labeled.begin(), labeled.end());
    std::vector<std::size_t> unlabeled;
    unlabeled.reserve(n - labeled.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_labeled[i]) unlabeled.push_back(i);
    }
    return SplitDataset(std::move(ds), std::move(labeled), std::move(unlabeled));
}

SplitDataset limit_unlabeled(const SplitDataset& sd, double unlabeled_fraction, Rng& rng) {
    if (!(unlabeled_fraction >= 0.0 && unlabeled_fraction <= 1.0)) {
        throw std::invalid_argument("limit_unlabeled: fraction must be in [0, 1], got " +
                                    std::to_string(unlabeled_fraction));
    }
    const std::size_t n = sd.source().size();
    std::size_t target = static_cast<std::size_t>(std::llround(unlabeled_fraction * static_cast<double>(n)));
    target = std::min(target, sd.unlabeled_count()); // "100% of training data" = all of 𝓤

    std::vector<std::size_t> pool = sd.unlabeled_indices();
    rng.shuffle(pool);
    pool.resize(target);
    std::sort(pool.begin(), pool.end());
    return SplitDataset(sd.source_ptr(), sd.labeled_indices(), std::move(pool));
}

// -------------------------------------------------------------- BatchStream

BatchStream::BatchStream(const SplitDataset& sd, std::size_t n_labeled, std::size_t n_unlabeled, Rng rng)
    : sd_(&sd), n_labeled_(n_labeled), n_unlabeled_(n_unlabeled), rng_(rng) {
    if (sd.labeled_count() == 0) throw std::invalid_argument("BatchStream: labeled set is empty");
    if (n_labeled_ < 1) throw std::invalid_argument("BatchStream: n_labeled must be >= 1");
    supervised_only_ = sd.unlabeled_count() == 0;
    if (!supervised_only_ && n_unlabeled_ == 0) {
        throw std::invalid_argument("BatchStream: n_unlabeled must be >= 1 when 𝓤 is nonempty");
    }

    labeled_cycle_.resize(sd.labeled_count());
    std::iota(labeled_cycle_.begin(), labeled_cycle_.end(), std::size_t{0});
    rng_.shuffle(labeled_cycle_);

    unlabeled_order_.resize(sd.unlabeled_count());
    std::iota(unlabeled_order_.begin(), unlabeled_order_.end(), std::size_t{0});
    start_epoch();
}

std::size_t BatchStream::batches_per_epoch() const {
    if (supervised_only_) {
        return (sd_->labeled_count() + n_labeled_ - 1) / n_labeled_;
    }
    return (sd_->unlabeled_count() + n_unlabeled_ - 1) / n_unlabeled_;
}

void BatchStream::start_epoch() {
    unlabeled_cursor_ = 0;
    if (supervised_only_) {
        rng_.shuffle(labeled_cycle_);
        labeled_cursor_ = 0;
    } else {
        rng_.shuffle(unlabeled_order_);
    }
}

std::optional<Batch> BatchStream::next() {
    if (supervised_only_) {
        if (labeled_cursor_ >= labeled_cycle_.size()) return std::nullopt;
        const std::size_t end = std::min(labeled_cursor_ + n_labeled_, labeled_cycle_.size());
        std::vector<std::size_t> pos(labeled_cycle_.begin() + labeled_cursor_, labeled_cycle_.begin() + end);
        labeled_cursor_ = end;
        Batch b;
        b.labeled_x = sd_->labeled_features(pos);
        b.labeled_y = sd_->labeled_labels(pos);
        return b;
    }

    if (unlabeled_cursor_ >= unlabeled_order_.size()) return std::nullopt;
    const std::size_t end = std::min(unlabeled_cursor_ + n_unlabeled_, unlabeled_order_.size());
    std::vector<std::size_t> upos(unlabeled_order_.begin() + unlabeled_cursor_, unlabeled_order_.begin() + end);
    unlabeled_cursor_ = end;

    std::vector<std::size_t> lpos;
    lpos.reserve(n_labeled_);
    for (std::size_t i = 0; i < n_labeled_; ++i) {
        if (labeled_cursor_ >= labeled_cycle_.size()) {
            rng_.shuffle(labeled_cycle_); // new cycle
            labeled_cursor_ = 0;
        }
        lpos.push_back(labeled_cycle_[labeled_cursor_++]);
    }

    Batch b;
    b.labeled_x = sd_->labeled_features(lpos);
    b.labeled_y = sd_->labeled_labels(lpos);
    b.unlabeled_x = sd_->unlabeled_features(upos);
    return b;
}

// --------------------------------------------------------------------- CSV

void save_points_csv(const Dataset& ds, const std::string& path) {
    ds.check();
    if (ds.feature_dim() != 2) {
        throw std::invalid_argument("save_points_csv: expects 2-d features, got " + ds.features.shape_str());
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_points_csv: cannot open " + path);
    out << "x1,x2,label\n";
    out.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.features.at2(i, 0) << ',' << ds.features.at2(i, 1) << ',' << ds.labels[i] << '\n';
    }
    if (!out) throw std::runtime_error("save_points_csv: write to " + path + " failed");
}

Dataset load_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_points_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "x1,x2,label") {
        throw std::runtime_error("load_points_csv: " + path + " missing 'x1,x2,label' header");
    }
    std::vector<double> feats;
    std::vector<int> labels;
    int max_label = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        double x1, x2;
        int label;
        char c1, c2;
        if (!(ss >> x1 >> c1 >> x2 >> c2 >> label) || c1 != ',' || c2 != ',') {
            throw std::runtime_error("load_points_csv: " + path + ":" + std::to_string(line_no) + ": bad row '" +
                                     line + "'");
        }
        feats.push_back(x1);
        feats.push_back(x2);
        labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    if (labels.empty()) throw std::runtime_error("load_points_csv: " + path + " has no data rows");
    Dataset ds;
    ds.features = Tensor({labels.size(), 2}, std::move(feats));
    ds.labels = std::move(labels);
    ds.class_count = max_label + 1;
    ds.check();
    return ds;
}

} // namespace mutexnet
