#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hik/cluster.hpp"
#include "hik/data.hpp"
#include "hik/io.hpp"
#include "hik/kernel.hpp"
#include "hik/krr.hpp"
#include "hik/parallel.hpp"
#include "hik/timer.hpp"
#include "hik/tune.hpp"

namespace hik::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataArgs {
    std::string path;
    std::string format = "auto";
    int label_column = -1;
    bool no_labels = false;
};

struct SolverArgs {
    std::string method = "2mn";
    double h = 1.0;
    double lambda = 1.0;
    double tol = 1e-2;
    Index leaf_size = 16;
    std::string sampler = "dense";
    std::string solver = "hss";
    double eta = 2.0;
    std::uint64_t seed = 1;
    int threads = 0;
};

void add_data_options(CLI::App* app, DataArgs& a, bool required = true) {
    auto* opt = app->add_option("--data", a.path, "Dataset file (CSV or LIBSVM)");
    if (required)
        opt->required();
    app->add_option("--format", a.format, "csv, libsvm or auto (by extension)")
        ->check(CLI::IsMember({"auto", "csv", "libsvm"}))
        ->capture_default_str();
    app->add_option("--label-column", a.label_column, "CSV label column; -1 is the last column")
        ->capture_default_str();
}

void add_threads(CLI::App* app, SolverArgs& a) {
    app->add_option("--threads", a.threads, "Worker threads; 0 uses all available")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

void add_method_options(CLI::App* app, SolverArgs& a) {
    app->add_option("--method", a.method, "Ordering: np, kd, pca or 2mn")
        ->check(CLI::IsMember({"np", "kd", "pca", "2mn"}))
        ->capture_default_str();
    app->add_option("--leaf-size", a.leaf_size, "Cluster tree leaf size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--seed", a.seed, "Seed for clustering, sampling and splits")->capture_default_str();
    add_threads(app, a);
}

void add_solver_options(CLI::App* app, SolverArgs& a, bool with_h_lambda = true) {
    add_method_options(app, a);
    if (with_h_lambda) {
        app->add_option("--h", a.h, "Gaussian kernel width")->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--lambda", a.lambda, "Ridge regularization")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
    }
    app->add_option("--tol", a.tol, "HSS relative compression tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--sampler", a.sampler, "HSS sampler: dense or hmat")
        ->check(CLI::IsMember({"dense", "hmat"}))
        ->capture_default_str();
    app->add_option("--solver", a.solver, "hss or dense (Cholesky baseline)")
        ->check(CLI::IsMember({"hss", "dense"}))
        ->capture_default_str();
    app->add_option("--eta", a.eta, "H-matrix admissibility parameter")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

SolverOptions solver_options(const SolverArgs& a) {
    SolverOptions o;
    if (a.solver == "dense")
        o.kind = SolverKind::Dense;
    else
        o.kind = a.sampler == "hmat" ? SolverKind::HssHmat : SolverKind::HssDense;
    o.hss.tol = a.tol;
    o.hss.seed = a.seed;
    o.hmat.eta = a.eta;
    o.leaf_size = a.leaf_size;
    return o;
}

ClusterMethod cluster_method(const SolverArgs& a) { return {parse_cluster_tag(a.method), a.seed}; }

void apply_threads(const SolverArgs& a) { set_num_threads(a.threads); }

/// Every option of the subcommand with its effective value, plus the raw arguments.
json flag_set(const CLI::App* app, const std::vector<std::string>& args) {
    json flags = json::object();
    for (const auto* opt : app->get_options()) {
        if (opt->get_lnames().empty() || opt->get_lnames().front() == "help")
            continue;
        const auto& name = opt->get_lnames().front();
        if (opt->count() > 0) {
            const auto& res = opt->results();
            if (opt->get_expected_min() == 0)
                flags[name] = true;
            else
                flags[name] = res.size() == 1 ? json(res.front()) : json(res);
        } else {
            flags[name] = opt->get_expected_min() == 0 ? json(false) : json(opt->get_default_str());
        }
    }
    flags["argv"] = args;
    return flags;
}

DataFormat data_format(const DataArgs& a) {
    if (a.format != "auto")
        return parse_format(a.format);
    auto ext = fs::path(a.path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv" || ext == ".txt" ? DataFormat::Csv : DataFormat::LibSvm;
}

DataMatrix load(const DataArgs& a) {
    if (a.path.empty() || !resolve_data_path(a.path))
        throw UsageError("dataset not found: " + a.path);
    const auto fmt = data_format(a);
    if (fmt == DataFormat::LibSvm) {
        auto dm = load_dataset(a.path, fmt);
        if (a.no_labels)
            dm.labels.reset();
        return dm;
    }
    auto dm = load_dataset(a.path, fmt);
    if (a.no_labels)
        return dm;
    const Index col = a.label_column < 0 ? dm.d() - 1 : a.label_column;
    if (col < 0 || col >= dm.d())
        throw UsageError("label column out of range");
    std::vector<int> labels(static_cast<std::size_t>(dm.n()));
    for (Index i = 0; i < dm.n(); ++i) {
        const double v = dm.points(i, col);
        if (v != std::round(v))
            throw ParseError("label is not an integer", static_cast<std::size_t>(i + 1));
        labels[static_cast<std::size_t>(i)] = static_cast<int>(v);
    }
    PointMatrix pts(dm.n(), dm.d() - 1);
    for (Index j = 0, k = 0; j < dm.d(); ++j)
        if (j != col)
            pts.col(k++) = dm.points.col(j);
    DataMatrix out{std::move(pts), std::move(labels)};
    out.validate();
    return out;
}

std::string dataset_name(const std::string& path) { return fs::path(path).stem().string(); }

void write_json_file(const fs::path& path, const json& j) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(std::stod(item));
    if (out.empty())
        throw UsageError("empty list: " + s);
    return out;
}

DataMatrix subsample(const DataMatrix& dm, Index n, std::uint64_t seed) {
    std::vector<Index> idx(static_cast<std::size_t>(dm.n()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(std::min(n, dm.n())));
    return select_rows(dm, idx);
}

/// Binary +-1 labels for training, honouring --positive-class.
std::vector<int> binary_labels(const DataMatrix& dm, std::optional<int> positive_class) {
    if (!dm.labels)
        throw UsageError("dataset has no labels");
    if (positive_class)
        return one_vs_all_labels(*dm.labels, *positive_class);
    if (!is_binary_pm1(*dm.labels))
        throw UsageError("labels must be +-1; pass --positive-class for one-vs-all");
    return *dm.labels;
}

// ---------------------------------------------------------------- rank-study

struct RankStudyArgs {
    DataArgs data;
    SolverArgs solver;
    std::string h_list = "0.01,0.1,1,10,100";
    std::string methods = "np,kd,pca,2mn";
    double threshold = 0.01;
    Index subsample_n = 0;
    bool no_normalize = false;
    std::string out = "ranks.csv";
    std::string spectra;
};

int rank_study(const RankStudyArgs& a, std::ostream& out) {
    apply_threads(a.solver);
    DataMatrix dm = load(a.data);
    if (a.subsample_n > 0)
        dm = subsample(dm, a.subsample_n, a.solver.seed);
    if (dm.n() > 4096)
        throw std::runtime_error("rank-study computes dense SVDs and needs n <= 4096 (got " +
                                 std::to_string(dm.n()) + "); pass --subsample 4096");
    if (dm.n() < 2)
        throw std::runtime_error("rank-study needs at least 2 points");
    if (!a.no_normalize)
        dm = normalize_zscore(dm).first;
    const auto hs = parse_list(a.h_list);
    std::vector<std::string> methods;
    {
        std::stringstream ss(a.methods);
        std::string m;
        while (std::getline(ss, m, ','))
            if (!m.empty()) {
                parse_cluster_tag(m);
                methods.push_back(m);
            }
    }

    std::ofstream ranks(a.out);
    if (!ranks)
        throw std::runtime_error("cannot write " + a.out);
    ranks << "method,h,rows,cols,effective_rank,sigma_max\n";
    std::ofstream spectra;
    if (!a.spectra.empty()) {
        spectra.open(a.spectra);
        if (!spectra)
            throw std::runtime_error("cannot write " + a.spectra);
        spectra << "method,h,index,sigma\n";
    }
    ranks.precision(10);
    spectra.precision(10);
    for (const auto& m : methods) {
        const ClusterMethod cm{parse_cluster_tag(m), a.solver.seed};
        const auto tree = build_tree(dm, cm, a.solver.leaf_size);
        const PointMatrix p = apply_permutation(dm, tree).points;
        const auto& root = tree.node(tree.root());
        IndexRange left{0, dm.n() / 2}, right{dm.n() / 2, dm.n()};
        if (!root.is_leaf()) {
            left = tree.node(root.left).range;
            right = tree.node(root.right).range;
        }
        for (double h : hs) {
            const Matrix block = kernel_block(p, left, p, right, h);
            const Vector s = singular_values(block);
            Index rank = 0;
            for (Index i = 0; i < s.size(); ++i)
                rank += s(i) > a.threshold ? 1 : 0;
            ranks << m << ',' << h << ',' << left.size() << ',' << right.size() << ',' << rank << ','
                  << (s.size() ? s(0) : 0.0) << '\n';
            out << m << " h=" << h << " effective_rank=" << rank << '\n';
            if (spectra.is_open())
                for (Index i = 0; i < s.size(); ++i)
                    spectra << m << ',' << h << ',' << i << ',' << s(i) << '\n';
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    DataArgs data;
    SolverArgs solver;
    std::string model_dir;
    std::string report;
    std::string test;
    std::optional<int> positive_class;
    bool no_normalize = false;
};

MetricsReport base_report(const std::string& dataset, const DataMatrix& dm, const SolverArgs& s) {
    MetricsReport r;
    r.dataset = dataset;
    r.n = dm.n();
    r.d = dm.d();
    r.method = s.method;
    r.solver = s.solver == "dense" ? "dense" : (s.sampler == "hmat" ? "hss-hmat" : "hss-dense");
    r.h = s.h;
    r.lambda = s.lambda;
    r.tol = s.solver == "dense" ? 0.0 : s.tol;
    r.leaf_size = s.leaf_size;
    r.seed = s.seed;
    return r;
}

int train_cmd(const TrainArgs& a, const json& flags, std::ostream& out) {
    apply_threads(a.solver);
    DataMatrix dm = load(a.data);
    if (!dm.labels)
        throw UsageError("training data needs labels");
    std::optional<NormStats> norm;
    if (!a.no_normalize) {
        auto [nd, st] = normalize_zscore(dm);
        dm = std::move(nd);
        norm = std::move(st);
    }
    const KernelConfig cfg{a.solver.h, a.solver.lambda};
    const auto sopts = solver_options(a.solver);
    const auto cm = cluster_method(a.solver);

    StoredModel sm;
    sm.norm = norm;
    sm.positive_class = a.positive_class;
    TrainReport rep;
    Timer total;
    const bool binary = a.positive_class.has_value() || is_binary_pm1(*dm.labels);
    if (binary) {
        DataMatrix bin{dm.points, binary_labels(dm, a.positive_class)};
        KrrModel km = train(bin, cfg, cm, sopts, &rep);
        sm.model = {std::move(km.tree), std::move(km.train_points), Matrix(km.w), km.cfg, km.solver_tol};
    } else {
        sm.model = train_multiclass(dm, cfg, cm, sopts, &rep);
    }
    sm.binary = binary;

    MetricsReport r = base_report(dataset_name(a.data.path), dm, a.solver);
    r.levels = sm.model.tree.level_count();
    if (rep.hss) {
        r.memory_mb = rep.hss->memory_mb();
        r.max_rank = rep.hss->max_rank;
    } else {
        r.memory_mb = static_cast<double>(dm.n()) * static_cast<double>(dm.n()) * kEntryBytes / 1.0e6;
        r.max_rank = dm.n();
    }
    r.t_hmatrix_s = rep.timings.hmatrix_s;
    r.t_compress_s = rep.timings.compress_s;
    r.t_sample_s = rep.timings.sample_s;
    r.t_factor_s = rep.timings.factor_s;
    r.t_solve_s = rep.timings.solve_s;
    r.flags = flags;

    if (!a.test.empty()) {
        DataArgs ta = a.data;
        ta.path = a.test;
        DataMatrix test = load(ta);
        if (!test.labels)
            throw UsageError("test data needs labels");
        if (norm)
            test = apply_normalization(test, *norm);
        if (binary) {
            const auto truth = binary_labels(test, a.positive_class);
            r.accuracy = accuracy(predict(sm.model.submodel(0), test), truth);
        } else {
            r.accuracy = accuracy(predict_multiclass(sm.model, test), *test.labels);
        }
    }

    sm.extra = {{"method", a.solver.method},
                {"solver", r.solver},
                {"seed", a.solver.seed},
                {"leaf_size", a.solver.leaf_size},
                {"levels", r.levels},
                {"memory_mb", r.memory_mb},
                {"max_rank", r.max_rank},
                {"warnings", rep.warnings},
                {"flags", flags}};
    save_model(a.model_dir, sm);
    const fs::path report_path = a.report.empty() ? fs::path(a.model_dir) / "report.json" : fs::path(a.report);
    write_json_file(report_path, to_json(r));

    for (const auto& w : rep.warnings)
        out << "warning: " << w << '\n';
    out << "trained " << (binary ? "binary" : std::to_string(sm.model.class_count()) + "-class") << " model on n="
        << dm.n() << " in " << total.seconds() << " s; memory " << r.memory_mb << " MB, max rank " << r.max_rank
        << '\n';
    if (r.accuracy)
        out << "test accuracy " << *r.accuracy << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
    DataArgs data;
    SolverArgs solver;
    std::string model_dir;
    std::string out = "predictions.csv";
    std::string report;
};

int predict_cmd(const PredictArgs& a, const json& flags, std::ostream& out) {
    apply_threads(a.solver);
    if (!fs::exists(fs::path(a.model_dir) / "model.json"))
        throw UsageError("model not found: " + a.model_dir);
    const StoredModel sm = load_model(a.model_dir);
    DataMatrix dm = load(a.data);
    if (dm.d() != sm.model.train_points.cols())
        throw std::runtime_error("dimension mismatch: model has d=" + std::to_string(sm.model.train_points.cols()) +
                                 ", data has d=" + std::to_string(dm.d()));
    if (sm.norm)
        dm = apply_normalization(dm, *sm.norm);
    Timer t;
    const std::vector<int> pred =
        sm.binary ? predict(sm.model.submodel(0), dm) : predict_multiclass(sm.model, dm);
    const double predict_s = t.seconds();

    std::ofstream f(a.out);
    if (!f)
        throw std::runtime_error("cannot write " + a.out);
    f << "label\n";
    for (int p : pred)
        f << p << '\n';

    std::optional<double> acc;
    if (dm.labels) {
        const auto truth = sm.binary ? binary_labels(dm, sm.positive_class) : *dm.labels;
        acc = accuracy(pred, truth);
        out << "accuracy " << *acc << '\n';
    }
    out << "wrote " << pred.size() << " predictions to " << a.out << '\n';

    if (!a.report.empty()) {
        SolverArgs s;
        s.method = sm.extra.value("method", std::string("2mn"));
        s.seed = sm.extra.value("seed", std::uint64_t{0});
        s.leaf_size = sm.extra.value("leaf_size", Index{16});
        s.h = sm.model.cfg.h;
        s.lambda = sm.model.cfg.lambda;
        MetricsReport r = base_report(dataset_name(a.data.path), dm, s);
        r.solver = sm.extra.value("solver", std::string("hss-dense"));
        r.tol = sm.model.solver_tol;
        r.levels = sm.extra.value("levels", Index{0});
        r.memory_mb = sm.extra.value("memory_mb", 0.0);
        r.max_rank = sm.extra.value("max_rank", Index{0});
        r.t_solve_s = predict_s;
        r.accuracy = acc;
        r.flags = flags;
        write_json_file(a.report, to_json(r));
    }
    return kExitOk;
}

// ---------------------------------------------------------------- tune

struct TuneArgs {
    DataArgs data;
    std::string val;
    double val_fraction = 0.2;
    SolverArgs solver;
    SearchSpace space;
    std::string strategy = "blackbox";
    Index budget = 100;
    Index max_compressions = 0;
    Index grid = 16;
    std::optional<int> positive_class;
    bool no_normalize = false;
    std::string out = "trials.csv";
    std::string report;
};

int tune_cmd(const TuneArgs& a, const json& flags, std::ostream& out) {
    apply_threads(a.solver);
    DataMatrix all = load(a.data);
    DataMatrix train_dm, val_dm;
    if (!a.val.empty()) {
        DataArgs va = a.data;
        va.path = a.val;
        train_dm = std::move(all);
        val_dm = load(va);
    } else {
        if (!(a.val_fraction > 0.0 && a.val_fraction < 1.0))
            throw UsageError("--val-fraction must lie in (0, 1)");
        std::vector<Index> idx(static_cast<std::size_t>(all.n()));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::mt19937_64 rng(a.solver.seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto nval = static_cast<std::size_t>(std::llround(a.val_fraction * static_cast<double>(all.n())));
        if (nval == 0 || nval >= idx.size())
            throw std::runtime_error("validation split would be empty");
        val_dm = select_rows(all, std::span<const Index>(idx).first(nval));
        train_dm = select_rows(all, std::span<const Index>(idx).subspan(nval));
    }
    if (!a.no_normalize) {
        auto [nd, st] = normalize_zscore(train_dm);
        train_dm = std::move(nd);
        val_dm = apply_normalization(val_dm, st);
    }
    train_dm.labels = binary_labels(train_dm, a.positive_class);
    val_dm.labels = binary_labels(val_dm, a.positive_class);

    TuneContext ctx{&train_dm, &val_dm, cluster_method(a.solver), solver_options(a.solver)};
    SearchSpace space = a.space;
    space.h_points = a.grid;
    space.lambda_points = a.grid;
    SearchResult res;
    if (a.strategy == "grid") {
        res = grid_search(space, ctx);
    } else {
        BlackBoxOptions bo;
        bo.budget = a.budget;
        bo.seed = a.solver.seed;
        bo.max_compressions = a.max_compressions;
        res = black_box_search(space, bo, ctx);
    }
    write_trials_csv(a.out, res.records);
    out << "best h=" << res.best.h << " lambda=" << res.best.lambda << " acc=" << res.best.validation_accuracy
        << " (" << res.records.size() << " trials, " << res.compressions << " compressions)\n";
    if (!a.report.empty()) {
        json j = {{"schema_version", kMetricsSchemaVersion},
                  {"strategy", a.strategy},
                  {"best",
                   {{"trial", res.best.trial},
                    {"h", res.best.h},
                    {"lambda", res.best.lambda},
                    {"accuracy", res.best.validation_accuracy}}},
                  {"trials", res.records.size()},
                  {"compressions", res.compressions},
                  {"factorizations", res.factorizations},
                  {"seed", a.solver.seed},
                  {"flags", flags}};
        write_json_file(a.report, j);
    }
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    DataArgs data;
    SolverArgs solver;
    std::string n_list = "1000,2000,4000,8000";
    BlobSpec blobs{.n = 0, .d = 2, .clusters = 16, .spread = 10.0, .sigma = 1.0, .seed = 1};
    int repeats = 1;
    std::string out = "scaling.csv";
};

int bench_cmd(const BenchArgs& a, std::ostream& out) {
    apply_threads(a.solver);
    std::vector<Index> sizes;
    for (double v : parse_list(a.n_list)) {
        if (v < 2 || v != std::round(v))
            throw UsageError("--n-list entries must be integers >= 2");
        sizes.push_back(static_cast<Index>(v));
    }
    std::sort(sizes.begin(), sizes.end());
    const Index n_max = sizes.back();

    DataMatrix pool;
    if (!a.data.path.empty()) {
        pool = subsample(load(a.data), n_max, a.solver.seed);
        if (pool.n() < n_max)
            throw std::runtime_error("dataset has fewer than " + std::to_string(n_max) + " points");
    } else {
        BlobSpec spec = a.blobs;
        spec.n = n_max;
        spec.seed = a.solver.seed;
        pool = make_blobs(spec);
    }
    std::vector<int> y(static_cast<std::size_t>(n_max));
    for (Index i = 0; i < n_max; ++i)
        y[static_cast<std::size_t>(i)] = pool.labels && (*pool.labels)[static_cast<std::size_t>(i)] % 2 ? -1 : 1;

    std::ofstream f(a.out);
    if (!f)
        throw std::runtime_error("cannot write " + a.out);
    f.precision(10);
    f << "n,memory_mb,dense_memory_mb,max_rank,levels,t_hmatrix_s,t_compress_s,t_sample_s,t_factor_s,t_solve_s\n";
    const KernelConfig cfg{a.solver.h, a.solver.lambda};
    for (Index n : sizes) {
        std::vector<Index> rows(static_cast<std::size_t>(n));
        std::iota(rows.begin(), rows.end(), Index{0});
        DataMatrix dm = select_rows(pool, rows);
        dm.labels = std::vector<int>(y.begin(), y.begin() + n);
        TrainReport best;
        double best_fs = std::numeric_limits<double>::infinity();
        for (int r = 0; r < std::max(1, a.repeats); ++r) {
            TrainReport rep;
            train(dm, cfg, cluster_method(a.solver), solver_options(a.solver), &rep);
            const double fs_time = rep.timings.factor_s + rep.timings.solve_s;
            if (fs_time < best_fs) {
                best_fs = fs_time;
                best = rep;
            }
        }
        const double dense_mb = static_cast<double>(n) * static_cast<double>(n) * kEntryBytes / 1.0e6;
        const double mem = best.hss ? best.hss->memory_mb() : dense_mb;
        f << n << ',' << mem << ',' << dense_mb << ',' << (best.hss ? best.hss->max_rank : n) << ','
          << (best.hss ? best.hss->level_count : 0) << ',' << best.timings.hmatrix_s << ',' << best.timings.compress_s
          << ',' << best.timings.sample_s << ',' << best.timings.factor_s << ',' << best.timings.solve_s << '\n';
        out << "n=" << n << " memory " << mem << " MB, factor+solve " << best_fs << " s\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    BlobSpec blobs;
    bool binary = false;
    std::string out;
};

int generate_cmd(const GenerateArgs& a, std::ostream& out) {
    DataMatrix dm = make_blobs(a.blobs);
    if (a.binary)
        for (auto& l : *dm.labels)
            l = l % 2 ? -1 : 1;
    write_csv(a.out, dm);
    out << "wrote " << dm.n() << " points to " << a.out << '\n';
    return kExitOk;
}

void add_blob_options(CLI::App* app, BlobSpec& b) {
    app->add_option("--d", b.d, "Dimension")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--clusters", b.clusters, "Number of Gaussian blobs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--spread", b.spread, "Blob centres are uniform in [-spread, spread]^d")->capture_default_str();
    app->add_option("--sigma", b.sigma, "Blob standard deviation")->check(CLI::PositiveNumber)->capture_default_str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Kernel ridge regression with HSS-compressed Gaussian kernels", "hik"};
    app.set_help_flag("--help", "Print help and exit");
    app.require_subcommand(1);

    RankStudyArgs rs;
    auto* rs_cmd = app.add_subcommand("rank-study", "Effective rank of the top-level off-diagonal kernel block");
    add_data_options(rs_cmd, rs.data);
    rs_cmd->add_flag("--no-labels", rs.data.no_labels, "The CSV has no label column");
    add_method_options(rs_cmd, rs.solver);
    rs_cmd->add_option("--h-list", rs.h_list, "Comma-separated kernel widths")->capture_default_str();
    rs_cmd->add_option("--methods", rs.methods, "Comma-separated orderings")->capture_default_str();
    rs_cmd->add_option("--threshold", rs.threshold, "Singular value threshold")->capture_default_str();
    rs_cmd->add_option("--subsample", rs.subsample_n, "Use a random subset of this many points");
    rs_cmd->add_flag("--no-normalize", rs.no_normalize, "Skip z-score normalization");
    rs_cmd->add_option("--out", rs.out, "Rank CSV")->capture_default_str();
    rs_cmd->add_option("--spectra", rs.spectra, "Optional singular value CSV");

    TrainArgs tr;
    auto* tr_cmd = app.add_subcommand("train", "Train a classifier and write a model directory");
    add_data_options(tr_cmd, tr.data);
    add_solver_options(tr_cmd, tr.solver);
    tr_cmd->add_option("--model", tr.model_dir, "Output model directory")->required();
    tr_cmd->add_option("--report", tr.report, "Metrics JSON (default: <model>/report.json)");
    tr_cmd->add_option("--test", tr.test, "Optional labelled test set for the report accuracy");
    tr_cmd->add_option("--positive-class", tr.positive_class, "Train one-vs-all for this class id");
    tr_cmd->add_flag("--no-normalize", tr.no_normalize, "Skip z-score normalization");

    PredictArgs pr;
    auto* pr_cmd = app.add_subcommand("predict", "Predict labels with a trained model");
    add_data_options(pr_cmd, pr.data);
    pr_cmd->add_flag("--no-labels", pr.data.no_labels, "The CSV has no label column");
    add_threads(pr_cmd, pr.solver);
    pr_cmd->add_option("--model", pr.model_dir, "Model directory")->required();
    pr_cmd->add_option("--out", pr.out, "Predicted labels CSV")->capture_default_str();
    pr_cmd->add_option("--report", pr.report, "Optional metrics JSON");

    TuneArgs tu;
    auto* tu_cmd = app.add_subcommand("tune", "Search (h, lambda) by validation accuracy");
    add_data_options(tu_cmd, tu.data);
    add_solver_options(tu_cmd, tu.solver, false);
    tu_cmd->add_option("--val", tu.val, "Validation file (default: split --data)");
    tu_cmd->add_option("--val-fraction", tu.val_fraction, "Validation share when splitting")->capture_default_str();
    tu_cmd->add_option("--h-min", tu.space.h_min, "Lower bound for h")->required()->check(CLI::PositiveNumber);
    tu_cmd->add_option("--h-max", tu.space.h_max, "Upper bound for h")->required()->check(CLI::PositiveNumber);
    tu_cmd->add_option("--lambda-min", tu.space.lambda_min, "Lower bound for lambda")
        ->required()
        ->check(CLI::PositiveNumber);
    tu_cmd->add_option("--lambda-max", tu.space.lambda_max, "Upper bound for lambda")
        ->required()
        ->check(CLI::PositiveNumber);
    tu_cmd->add_option("--strategy", tu.strategy, "blackbox or grid")
        ->check(CLI::IsMember({"blackbox", "grid"}))
        ->capture_default_str();
    tu_cmd->add_option("--budget", tu.budget, "Black-box trial budget")->capture_default_str();
    tu_cmd->add_option("--max-compressions", tu.max_compressions, "Black-box cap on distinct h (0: automatic)")
        ->capture_default_str();
    tu_cmd->add_option("--grid", tu.grid, "Grid points per axis")->check(CLI::PositiveNumber)->capture_default_str();
    tu_cmd->add_option("--positive-class", tu.positive_class, "One-vs-all class id");
    tu_cmd->add_flag("--no-normalize", tu.no_normalize, "Skip z-score normalization");
    tu_cmd->add_option("--out", tu.out, "Trials CSV")->capture_default_str();
    tu_cmd->add_option("--report", tu.report, "Optional summary JSON");

    BenchArgs be;
    auto* be_cmd = app.add_subcommand("bench", "Memory and time scaling over a doubling set of n");
    add_data_options(be_cmd, be.data, false);
    add_solver_options(be_cmd, be.solver);
    add_blob_options(be_cmd, be.blobs);
    be_cmd->add_option("--n-list", be.n_list, "Comma-separated problem sizes")->capture_default_str();
    be_cmd->add_option("--repeats", be.repeats, "Timing repeats (minimum is kept)")->capture_default_str();
    be_cmd->add_option("--out", be.out, "Scaling CSV")->capture_default_str();

    GenerateArgs ge;
    auto* ge_cmd = app.add_subcommand("generate", "Write a synthetic Gaussian-blob CSV");
    ge_cmd->add_option("--n", ge.blobs.n, "Number of points")->check(CLI::PositiveNumber)->capture_default_str();
    add_blob_options(ge_cmd, ge.blobs);
    ge_cmd->add_option("--seed", ge.blobs.seed, "Seed")->capture_default_str();
    ge_cmd->add_flag("--binary", ge.binary, "Map blob ids to +-1 by parity");
    ge_cmd->add_option("--out", ge.out, "Output CSV")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*rs_cmd)
            return rank_study(rs, out);
        if (*tr_cmd)
            return train_cmd(tr, flag_set(tr_cmd, args), out);
        if (*pr_cmd)
            return predict_cmd(pr, flag_set(pr_cmd, args), out);
        if (*tu_cmd)
            return tune_cmd(tu, flag_set(tu_cmd, args), out);
        if (*be_cmd)
            return bench_cmd(be, out);
        if (*ge_cmd)
            return generate_cmd(ge, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace hik::cli
