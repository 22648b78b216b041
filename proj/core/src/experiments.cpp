#include "mutexnet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace mutexnet {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDatasetSeedSalt = 0x646174617365744bULL; // synthetic draw stream
constexpr std::uint64_t kLimitSeedSalt = 0x756e6c61626c696dULL;   // unlabeled subsample stream

} // namespace

// ------------------------------------------------------------ spec & JSON

void ExperimentSpec::validate() const {
    if (dataset != "mnist" && dataset != "synthetic") {
        throw std::invalid_argument("spec: dataset must be mnist or synthetic, got '" + dataset + "'");
    }
    if (labeled_fractions.empty()) throw std::invalid_argument("spec: labeled_fractions is empty");
    for (double f : labeled_fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw std::invalid_argument("spec: labeled fraction " + std::to_string(f) + " outside (0, 1]");
        }
    }
    for (double f : unlabeled_fractions) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw std::invalid_argument("spec: unlabeled fraction " + std::to_string(f) + " outside [0, 1]");
        }
    }
    if (regularizers.empty()) throw std::invalid_argument("spec: no regularizer arms");
    if (trials < 1) throw std::invalid_argument("spec: trials must be >= 1");
    if (jobs < 1) throw std::invalid_argument("spec: jobs must be >= 1");
    if (train.loss.lambda < 0.0) throw std::invalid_argument("spec: lambda must be >= 0");
    if (!(train.lr > 0.0)) throw std::invalid_argument("spec: lr must be > 0");
    if (train.epochs < 1) throw std::invalid_argument("spec: epochs must be >= 1");
    for (Regularizer r : regularizers) {
        if (r == Regularizer::entropy && train.head == Head::sigmoid) {
            throw std::invalid_argument(
                "spec: the entropy regularizer needs probability rows; use --head softmax for entropy arms");
        }
    }
    if (boundary_resolution < 2) throw std::invalid_argument("spec: boundary_resolution must be >= 2");
}

std::string ExperimentSpec::resolved_data_dir() const {
    if (!data_dir.empty()) return data_dir;
    if (const char* env = std::getenv("MUTEXNET_DATA_DIR")) return env;
    return "data/mnist";
}

namespace {

json layout_to_json(const SyntheticLayout& l) {
    return json{
        {"kind", l.kind == SyntheticLayout::Kind::gaussians ? "gaussians" : "arcs"},
        {"circumradius", l.circumradius},
        {"sigma", l.sigma},
        {"arc_radius", l.arc_radius},
        {"arc_noise", l.arc_noise},
    };
}

SyntheticLayout layout_from_json(const json& j) {
    SyntheticLayout l;
    const std::string kind = j.value("kind", "gaussians");
    if (kind == "gaussians") {
        l.kind = SyntheticLayout::Kind::gaussians;
    } else if (kind == "arcs") {
        l.kind = SyntheticLayout::Kind::arcs;
    } else {
        throw std::invalid_argument("layout: unknown kind '" + kind + "'");
    }
    l.circumradius = j.value("circumradius", l.circumradius);
    l.sigma = j.value("sigma", l.sigma);
    l.arc_radius = j.value("arc_radius", l.arc_radius);
    l.arc_noise = j.value("arc_noise", l.arc_noise);
    return l;
}

} // namespace

std::string spec_to_json_text(const ExperimentSpec& spec) {
    std::vector<std::string> regs;
    for (Regularizer r : spec.regularizers) regs.push_back(to_string(r));
    json j{
        {"dataset", spec.dataset},
        {"labeled_fractions", spec.labeled_fractions},
        {"unlabeled_fractions", spec.unlabeled_fractions},
        {"regularizers", regs},
        {"trials", spec.trials},
        {"base_seed", spec.base_seed},
        {"jobs", spec.jobs},
        {"output_dir", spec.output_dir},
        {"data_dir", spec.data_dir},
        {"preset", spec.preset},
        {"head", to_string(spec.train.head)},
        {"lambda", spec.train.loss.lambda},
        {"lr", spec.train.lr},
        {"momentum", spec.train.momentum},
        {"epochs", spec.train.epochs},
        {"n_labeled", spec.train.n_labeled},
        {"n_unlabeled", spec.train.n_unlabeled},
        {"unsup_on_unlabeled_only", spec.train.unsup_on_unlabeled_only},
        {"synthetic_n_per_class", spec.synthetic_n_per_class},
        {"synthetic_test_n_per_class", spec.synthetic_test_n_per_class},
        {"layout", layout_to_json(spec.layout)},
        {"boundary_resolution", spec.boundary_resolution},
    };
    return j.dump(2);
}

ExperimentSpec spec_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("spec: invalid JSON: ") + e.what());
    }
    ExperimentSpec spec;
    spec.dataset = j.value("dataset", spec.dataset);
    if (j.contains("labeled_fractions")) spec.labeled_fractions = j.at("labeled_fractions").get<std::vector<double>>();
    if (j.contains("unlabeled_fractions")) {
        spec.unlabeled_fractions = j.at("unlabeled_fractions").get<std::vector<double>>();
    }
    if (j.contains("regularizers")) {
        spec.regularizers.clear();
        for (const auto& s : j.at("regularizers")) spec.regularizers.push_back(regularizer_from_string(s));
    }
    spec.trials = j.value("trials", spec.trials);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    spec.jobs = j.value("jobs", spec.jobs);
    spec.output_dir = j.value("output_dir", spec.output_dir);
    spec.data_dir = j.value("data_dir", spec.data_dir);
    spec.preset = j.value("preset", spec.preset);
    if (j.contains("head")) spec.train.head = head_from_string(j.at("head").get<std::string>());
    spec.train.loss.lambda = j.value("lambda", spec.train.loss.lambda);
    spec.train.lr = j.value("lr", spec.train.lr);
    spec.train.momentum = j.value("momentum", spec.train.momentum);
    spec.train.epochs = j.value("epochs", spec.train.epochs);
    spec.train.n_labeled = j.value("n_labeled", spec.train.n_labeled);
    spec.train.n_unlabeled = j.value("n_unlabeled", spec.train.n_unlabeled);
    spec.train.unsup_on_unlabeled_only = j.value("unsup_on_unlabeled_only", spec.train.unsup_on_unlabeled_only);
    spec.synthetic_n_per_class = j.value("synthetic_n_per_class", spec.synthetic_n_per_class);
    spec.synthetic_test_n_per_class = j.value("synthetic_test_n_per_class", spec.synthetic_test_n_per_class);
    if (j.contains("layout")) spec.layout = layout_from_json(j.at("layout"));
    spec.boundary_resolution = j.value("boundary_resolution", spec.boundary_resolution);
    return spec;
}

ExperimentSpec spec_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return spec_from_json_text(ss.str());
}

// ----------------------------------------------------------------- dataset

std::shared_ptr<const Dataset> load_experiment_dataset(const ExperimentSpec& spec, bool train_side) {
    if (spec.dataset == "mnist") {
        const std::filesystem::path dir = spec.resolved_data_dir();
        const auto images = dir / (train_side ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte");
        const auto labels = dir / (train_side ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte");
        if (!std::filesystem::exists(images) || !std::filesystem::exists(labels)) {
            throw std::runtime_error("MNIST IDX files not found under '" + dir.string() +
                                     "' (set MUTEXNET_DATA_DIR or --data-dir)");
        }
        return std::make_shared<Dataset>(load_mnist_idx(images.string(), labels.string()));
    }
    // The synthetic dataset is fixed across trials (splits vary instead),
    // mirroring how a real dataset behaves under the protocol.
    Rng rng(mix_seed(spec.base_seed, kDatasetSeedSalt + (train_side ? 0 : 1)));
    const int n = train_side ? spec.synthetic_n_per_class : spec.synthetic_test_n_per_class;
    return std::make_shared<Dataset>(make_synthetic(rng, n, spec.layout));
}

// ------------------------------------------------------------- single trial

namespace {

struct TrialTask {
    double labeled_fraction = 0.0;
    double unlabeled_fraction = 1.0; // reported; 1.0 = all of 𝓤
    bool apply_limit = false;        // run limit_unlabeled at that fraction
    std::size_t limit_index = 0;     // sweep point index, salts the subsample rng
    Regularizer regularizer = Regularizer::none;
    int trial = 0;
};

TrialRecord run_trial(const ExperimentSpec& spec, const std::shared_ptr<const Dataset>& train_ds,
                      const Dataset& test_ds, const TrialTask& task) {
    const std::uint64_t trial_seed = spec.base_seed + static_cast<std::uint64_t>(task.trial);

    // One stream per concern, all derived from the trial seed, so every
    // arm of a (setting, trial) pair sees the same split, the same initial
    // parameters and the same batch order.
    Rng rng(trial_seed);
    Rng split_rng = rng.split();
    Rng init_rng = rng.split();
    const std::uint64_t batch_seed = rng.next_u64();

    SplitDataset sd = split(train_ds, task.labeled_fraction, split_rng, /*stratified=*/true);
    if (task.apply_limit) {
        Rng limit_rng(mix_seed(trial_seed, kLimitSeedSalt + task.limit_index));
        sd = limit_unlabeled(sd, task.unlabeled_fraction, limit_rng);
    }

    PresetOptions opts;
    opts.classes = static_cast<std::size_t>(train_ds->class_count);
    opts.head = spec.train.head;
    Network net = make_preset(spec.preset, init_rng, opts);

    TrainConfig cfg = spec.train;
    cfg.loss.regularizer = task.regularizer;
    cfg.seed = batch_seed;
    TrainLog log = train(net, sd, cfg);

    const EvalResult ev = evaluate(net, test_ds);

    TrialRecord rec;
    rec.dataset = spec.dataset;
    rec.preset = spec.preset;
    rec.head = cfg.head;
    rec.labeled_fraction = task.labeled_fraction;
    rec.unlabeled_fraction = task.unlabeled_fraction;
    rec.regularizer = task.regularizer;
    rec.lambda = cfg.loss.lambda;
    rec.trial = task.trial;
    rec.seed = trial_seed;
    rec.error_rate = ev.error_rate;
    rec.n_correct = ev.n_correct;
    rec.n_total = ev.n_total;
    rec.mean_confidence = ev.mean_confidence;
    rec.final_loss_sup = log.back().loss_sup;
    rec.final_loss_unsup = log.back().loss_unsup;
    rec.final_loss_total = log.back().loss_total;
    return rec;
}

std::vector<TrialRecord> run_tasks(const ExperimentSpec& spec, const std::vector<TrialTask>& tasks) {
    const auto train_ds = load_experiment_dataset(spec, /*train_side=*/true);
    const auto test_ds = load_experiment_dataset(spec, /*train_side=*/false);

    std::vector<TrialRecord> records(tasks.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(tasks.size());

    const std::size_t workers = std::min<std::size_t>(spec.jobs, tasks.size());
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                records[i] = run_trial(spec, train_ds, *test_ds, tasks[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return records;
}

void fill_reports(SweepResult& result) {
    // Group in encounter order by (labeled fraction, unlabeled fraction, arm).
    std::vector<std::tuple<double, double, Regularizer>> keys;
    for (const TrialRecord& r : result.records) {
        const auto key = std::make_tuple(r.labeled_fraction, r.unlabeled_fraction, r.regularizer);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& key : keys) {
        TrialReport rep;
        rep.labeled_fraction = std::get<0>(key);
        rep.unlabeled_fraction = std::get<1>(key);
        rep.regularizer = std::get<2>(key);
        for (const TrialRecord& r : result.records) {
            if (std::make_tuple(r.labeled_fraction, r.unlabeled_fraction, r.regularizer) != key) continue;
            rep.errors.push_back(r.error_rate);
            rep.seeds.push_back(r.seed);
        }
        const std::size_t n = rep.errors.size();
        double sum = 0.0;
        for (double e : rep.errors) sum += e;
        rep.mean = sum / static_cast<double>(n);
        if (n > 1) {
            double ss = 0.0;
            for (double e : rep.errors) ss += (e - rep.mean) * (e - rep.mean);
            rep.stddev = std::sqrt(ss / static_cast<double>(n - 1));
        }
        result.reports.push_back(std::move(rep));
    }
}

} // namespace

// ------------------------------------------------------------------ sweeps

SweepResult run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<TrialTask> tasks;
    for (double fraction : spec.labeled_fractions) {
        for (Regularizer reg : spec.regularizers) {
            for (int t = 0; t < spec.trials; ++t) {
                TrialTask task;
                task.labeled_fraction = fraction;
                task.regularizer = reg;
                task.trial = t;
                tasks.push_back(task);
            }
        }
    }
    SweepResult result;
    result.axis = SweepAxis::labeled;
    result.records = run_tasks(spec, tasks);
    fill_reports(result);
    return result;
}

SweepResult run_unlabeled_sweep(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.unlabeled_fractions.empty()) {
        throw std::invalid_argument("unlabeled sweep: spec.unlabeled_fractions is empty");
    }
    const double labeled_fraction = spec.labeled_fractions.front();
    // The non-baseline arm of the sweep: first configured regularizer that
    // is not 'none'.
    Regularizer arm = Regularizer::mutex;
    for (Regularizer r : spec.regularizers) {
        if (r != Regularizer::none) {
            arm = r;
            break;
        }
    }

    std::vector<TrialTask> tasks;
    for (std::size_t p = 0; p < spec.unlabeled_fractions.size(); ++p) {
        const double uf = spec.unlabeled_fractions[p];
        for (int t = 0; t < spec.trials; ++t) {
            TrialTask task;
            task.labeled_fraction = labeled_fraction;
            task.trial = t;
            if (uf == 0.0) {
                // "labeled data only" row: supervised baseline on the
                // untouched split so the batch cadence matches the other
                // points and the comparison isolates unlabeled-data usage.
                task.regularizer = Regularizer::none;
                task.apply_limit = false;
                task.unlabeled_fraction = 0.0;
            } else {
                task.regularizer = arm;
                task.apply_limit = true;
                task.unlabeled_fraction = uf;
                task.limit_index = p;
            }
            tasks.push_back(task);
        }
    }

    SweepResult result;
    result.axis = SweepAxis::unlabeled;
    result.records = run_tasks(spec, tasks);
    fill_reports(result);
    return result;
}

SweepResult aggregate_records(std::vector<TrialRecord> records) {
    SweepResult result;
    result.records = std::move(records);
    bool unlabeled_varies = false;
    for (const TrialRecord& r : result.records) {
        if (r.unlabeled_fraction != result.records.front().unlabeled_fraction) unlabeled_varies = true;
    }
    result.axis = unlabeled_varies ? SweepAxis::unlabeled : SweepAxis::labeled;
    fill_reports(result);
    return result;
}

// ------------------------------------------------------------ persistence

namespace {

json record_to_json(const TrialRecord& r) {
    return json{
        {"dataset", r.dataset},
        {"preset", r.preset},
        {"head", to_string(r.head)},
        {"labeled_fraction", r.labeled_fraction},
        {"unlabeled_fraction", r.unlabeled_fraction},
        {"regularizer", to_string(r.regularizer)},
        {"lambda", r.lambda},
        {"trial", r.trial},
        {"seed", r.seed},
        {"error_rate", r.error_rate},
        {"n_correct", r.n_correct},
        {"n_total", r.n_total},
        {"mean_confidence", r.mean_confidence},
        {"final_loss_sup", r.final_loss_sup},
        {"final_loss_unsup", r.final_loss_unsup},
        {"final_loss_total", r.final_loss_total},
    };
}

TrialRecord record_from_json(const json& j) {
    TrialRecord r;
    r.dataset = j.at("dataset").get<std::string>();
    r.preset = j.at("preset").get<std::string>();
    r.head = head_from_string(j.at("head").get<std::string>());
    r.labeled_fraction = j.at("labeled_fraction").get<double>();
    r.unlabeled_fraction = j.at("unlabeled_fraction").get<double>();
    r.regularizer = regularizer_from_string(j.at("regularizer").get<std::string>());
    r.lambda = j.at("lambda").get<double>();
    r.trial = j.at("trial").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.error_rate = j.at("error_rate").get<double>();
    r.n_correct = j.at("n_correct").get<int>();
    r.n_total = j.at("n_total").get<int>();
    r.mean_confidence = j.at("mean_confidence").get<double>();
    r.final_loss_sup = j.at("final_loss_sup").get<double>();
    r.final_loss_unsup = j.at("final_loss_unsup").get<double>();
    r.final_loss_total = j.at("final_loss_total").get<double>();
    return r;
}

} // namespace

void write_trials_jsonl(const std::vector<TrialRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const TrialRecord& r : records) out << record_to_json(r).dump() << '\n';
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

std::vector<TrialRecord> load_trials_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<TrialRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad trial record: " + e.what());
        }
    }
    if (records.empty()) throw std::runtime_error(path + ": no trial records");
    return records;
}

// ----------------------------------------------------------------- tables

std::string format_fraction_percent(double fraction) {
    const double pct = fraction * 100.0;
    std::ostringstream os;
    if (std::abs(pct - std::llround(pct)) < 1e-9) {
        os << static_cast<long long>(std::llround(pct)) << "%";
    } else {
        os.setf(std::ios::fixed);
        os.precision(2);
        os << pct << "%";
    }
    return os.str();
}

namespace {

std::string format_cell(double mean, double stddev) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << mean * 100.0 << " ± " << stddev * 100.0;
    return os.str();
}

double row_key(const TrialReport& rep, SweepAxis axis) {
    return axis == SweepAxis::labeled ? rep.labeled_fraction : rep.unlabeled_fraction;
}

} // namespace

std::string render_table(const SweepResult& result) {
    if (result.reports.empty()) throw std::invalid_argument("render_table: no reports");

    std::vector<double> rows;
    std::vector<Regularizer> cols;
    for (const TrialReport& rep : result.reports) {
        const double rk = row_key(rep, result.axis);
        if (std::find(rows.begin(), rows.end(), rk) == rows.end()) rows.push_back(rk);
        if (std::find(cols.begin(), cols.end(), rep.regularizer) == cols.end()) cols.push_back(rep.regularizer);
    }

    const std::string row_title = result.axis == SweepAxis::labeled ? "labeled" : "unlabeled";
    std::vector<std::vector<std::string>> cells(rows.size() + 1, std::vector<std::string>(cols.size() + 1, "-"));
    cells[0][0] = row_title;
    for (std::size_t c = 0; c < cols.size(); ++c) cells[0][c + 1] = to_string(cols[c]);
    for (std::size_t r = 0; r < rows.size(); ++r) cells[r + 1][0] = format_fraction_percent(rows[r]);
    for (const TrialReport& rep : result.reports) {
        const auto ri = std::find(rows.begin(), rows.end(), row_key(rep, result.axis)) - rows.begin();
        const auto ci = std::find(cols.begin(), cols.end(), rep.regularizer) - cols.begin();
        cells[ri + 1][ci + 1] = format_cell(rep.mean, rep.stddev);
    }

    std::vector<std::size_t> widths(cols.size() + 1, 0);
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream os;
    os << "error rates: average (%) ± std. dev over " << result.reports.front().errors.size() << " trials\n";
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t c = 0; c < cells[r].size(); ++c) {
            if (c) os << "  ";
            os << cells[r][c];
            for (std::size_t pad = cells[r][c].size(); pad < widths[c]; ++pad) os << ' ';
        }
        os << '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c ? 2 : 0);
            os << std::string(total, '-') << '\n';
        }
    }
    return os.str();
}

std::string render_table_csv(const SweepResult& result) {
    std::ostringstream os;
    os << "labeled_fraction,unlabeled_fraction,regularizer,mean_pct,std_pct,trials\n";
    os.setf(std::ios::fixed);
    os.precision(6);
    for (const TrialReport& rep : result.reports) {
        os << rep.labeled_fraction << ',' << rep.unlabeled_fraction << ',' << to_string(rep.regularizer) << ','
           << rep.mean * 100.0 << ',' << rep.stddev * 100.0 << ',' << rep.errors.size() << '\n';
    }
    return os.str();
}

void write_sweep_outputs(const SweepResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base = dir;
    write_trials_jsonl(result.records, (base / "trials.jsonl").string());
    std::ofstream txt(base / "table.txt");
    txt << render_table(result);
    std::ofstream csv(base / "table.csv");
    csv << render_table_csv(result);
    if (!txt || !csv) throw std::runtime_error("failed writing tables under " + dir);
}

// --------------------------------------------------------------- boundary

namespace {

Rect dataset_bounds(const Dataset& ds) {
    Rect r;
    r.x_min = r.y_min = std::numeric_limits<double>::max();
    r.x_max = r.y_max = std::numeric_limits<double>::lowest();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        r.x_min = std::min(r.x_min, ds.features.at2(i, 0));
        r.x_max = std::max(r.x_max, ds.features.at2(i, 0));
        r.y_min = std::min(r.y_min, ds.features.at2(i, 1));
        r.y_max = std::max(r.y_max, ds.features.at2(i, 1));
    }
    const double pad_x = 0.15 * (r.x_max - r.x_min);
    const double pad_y = 0.15 * (r.y_max - r.y_min);
    r.x_min -= pad_x;
    r.x_max += pad_x;
    r.y_min -= pad_y;
    r.y_max += pad_y;
    return r;
}

void write_boundary_csv(const DecisionGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    const std::size_t K = grid.scores.dim(1);
    out << "x1,x2";
    for (std::size_t k = 1; k <= K; ++k) out << ",f_" << k;
    out << ",argmax\n";
    out.precision(17);
    const int R = grid.resolution;
    for (int iy = 0; iy < R; ++iy) {
        for (int ix = 0; ix < R; ++ix) {
            const std::size_t i = static_cast<std::size_t>(iy) * R + ix;
            out << grid.xs[ix] << ',' << grid.ys[iy];
            for (std::size_t k = 0; k < K; ++k) out << ',' << grid.scores.at2(i, k);
            out << ',' << grid.argmax[i] << '\n';
        }
    }
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

double mean_max_score(const Network& net, const Tensor& points) {
    if (points.empty()) return 0.0;
    const Tensor f = predict(net, points);
    const std::size_t K = f.dim(1);
    double sum = 0.0;
    for (std::size_t r = 0; r < f.dim(0); ++r) {
        const double* row = f.data() + r * K;
        double best = row[0];
        for (std::size_t k = 1; k < K; ++k) best = std::max(best, row[k]);
        sum += best;
    }
    return sum / static_cast<double>(f.dim(0));
}

} // namespace

BoundaryComparison export_boundary(const ExperimentSpec& spec, std::uint64_t trial_seed, const std::string& out_dir) {
    spec.validate();
    if (spec.dataset != "synthetic") {
        throw std::invalid_argument("export_boundary: only the synthetic dataset has a 2-d input space");
    }
    Regularizer arm = Regularizer::mutex;
    for (Regularizer r : spec.regularizers) {
        if (r != Regularizer::none) {
            arm = r;
            break;
        }
    }

    const auto train_ds = load_experiment_dataset(spec, /*train_side=*/true);
    const auto test_ds = load_experiment_dataset(spec, /*train_side=*/false);

    Rng rng(trial_seed);
    Rng split_rng = rng.split();
    Rng init_rng = rng.split();
    const std::uint64_t batch_seed = rng.next_u64();

    const SplitDataset sd = split(train_ds, spec.labeled_fractions.front(), split_rng, true);

    PresetOptions opts;
    opts.classes = static_cast<std::size_t>(train_ds->class_count);
    opts.head = spec.train.head;
    Network net_base = make_preset(spec.preset, init_rng, opts);
    Network net_reg = net_base; // identical initial parameters

    TrainConfig cfg_base = spec.train;
    cfg_base.loss.regularizer = Regularizer::none;
    cfg_base.seed = batch_seed;
    TrainConfig cfg_reg = spec.train;
    cfg_reg.loss.regularizer = arm;
    cfg_reg.seed = batch_seed;

    train(net_base, sd, cfg_base);
    train(net_reg, sd, cfg_reg);

    const Rect bounds = dataset_bounds(*train_ds);
    const DecisionGrid grid_base = decision_grid(net_base, bounds, spec.boundary_resolution);
    const DecisionGrid grid_reg = decision_grid(net_reg, bounds, spec.boundary_resolution);

    std::vector<std::size_t> all_unlabeled(sd.unlabeled_count());
    std::iota(all_unlabeled.begin(), all_unlabeled.end(), std::size_t{0});
    const Tensor unlabeled_points = sd.unlabeled_features(all_unlabeled);

    BoundaryComparison cmp;
    cmp.eval_base = evaluate(net_base, *test_ds);
    cmp.eval_reg = evaluate(net_reg, *test_ds);
    cmp.margin_base = mean_boundary_margin(grid_base, unlabeled_points);
    cmp.margin_reg = mean_boundary_margin(grid_reg, unlabeled_points);
    cmp.confidence_base = mean_max_score(net_base, unlabeled_points);
    cmp.confidence_reg = mean_max_score(net_reg, unlabeled_points);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path base = out_dir;
        write_boundary_csv(grid_base, (base / "boundary_none.csv").string());
        write_boundary_csv(grid_reg, (base / ("boundary_" + to_string(arm) + ".csv")).string());
        save_points_csv(*train_ds, (base / "dataset.csv").string());
    }
    return cmp;
}

} // namespace mutexnet
