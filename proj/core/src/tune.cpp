#include "hik/tune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hik/timer.hpp"

namespace hik {

namespace {

std::vector<double> logspace(double lo, double hi, Index count) {
    std::vector<double> out;
    if (count == 1)
        return {lo};
    const double a = std::log(lo), b = std::log(hi);
    for (Index i = 0; i < count; ++i)
        out.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1)));
    out.front() = lo;
    out.back() = hi;
    return out;
}

void check_context(const TuneContext& ctx) {
    if (!ctx.train || !ctx.validation)
        throw std::invalid_argument("tuning needs training and validation data");
    if (!ctx.train->labels || !ctx.validation->labels)
        throw std::invalid_argument("tuning data must be labelled");
}

/// Lazily prepared kernels, one per distinct h.
class KernelCache {
public:
    explicit KernelCache(const TuneContext& ctx) : ctx_(ctx) {}

    /// Null when preparation failed; the error text is returned through `error`.
    const PreparedKernel* get(double h, std::string& error, double& seconds) {
        seconds = 0.0;
        if (auto it = cache_.find(h); it != cache_.end()) {
            error = it->second.error;
            return it->second.kernel.get();
        }
        Entry e;
        Timer t;
        ++compressions_;
        try {
            e.kernel = std::make_unique<PreparedKernel>(ctx_.train->points, h, ctx_.method, ctx_.solver);
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        seconds = t.seconds();
        error = e.error;
        return cache_.emplace(h, std::move(e)).first->second.kernel.get();
    }

    Index compressions() const { return compressions_; }

private:
    struct Entry {
        std::unique_ptr<PreparedKernel> kernel;
        std::string error;
    };
    const TuneContext& ctx_;
    std::map<double, Entry> cache_;
    Index compressions_ = 0;
};

TrialRecord evaluate(KernelCache& cache, const TuneContext& ctx, double h, double lambda, Index trial,
                     Index& factorizations) {
    TrialRecord rec;
    rec.trial = trial;
    rec.h = h;
    rec.lambda = lambda;
    std::string err;
    double prep_s = 0.0;
    const PreparedKernel* prep = cache.get(h, err, prep_s);
    Timer t;
    if (!prep) {
        rec.error = err;
        rec.wall_time_s = prep_s;
        return rec;
    }
    if (auto st = prep->stats()) {
        rec.memory_bytes = st->memory_bytes;
        rec.max_rank = st->max_rank;
    }
    try {
        ++factorizations;
        const KrrModel model = train(*prep, *ctx.train->labels, lambda);
        rec.validation_accuracy = accuracy(predict(model, *ctx.validation), *ctx.validation->labels);
    } catch (const std::exception& ex) {
        rec.validation_accuracy = 0.0;
        rec.error = ex.what();
    }
    rec.wall_time_s = prep_s + t.seconds();
    return rec;
}

} // namespace

void SearchSpace::validate() const {
    if (!(h_min > 0.0 && h_min < h_max))
        throw std::invalid_argument("search space needs 0 < h_min < h_max");
    if (!(lambda_min > 0.0 && lambda_min < lambda_max))
        throw std::invalid_argument("search space needs 0 < lambda_min < lambda_max");
    if (h_points < 1 || lambda_points < 1)
        throw std::invalid_argument("grid sizes must be at least 1");
}

SearchResult grid_search(const SearchSpace& space, const TuneContext& ctx) {
    space.validate();
    check_context(ctx);
    SearchResult res;
    KernelCache cache(ctx);
    const auto hs = logspace(space.h_min, space.h_max, space.h_points);
    const auto lambdas = logspace(space.lambda_min, space.lambda_max, space.lambda_points);
    Index trial = 0;
    for (double h : hs)
        for (double lambda : lambdas)
            res.records.push_back(evaluate(cache, ctx, h, lambda, trial++, res.factorizations));

    auto better = [](const TrialRecord& a, const TrialRecord& b) {
        if (a.validation_accuracy != b.validation_accuracy)
            return a.validation_accuracy > b.validation_accuracy;
        if (a.lambda != b.lambda)
            return a.lambda < b.lambda;
        return a.h < b.h;
    };
    res.best = res.records.front();
    for (const auto& r : res.records)
        if (better(r, res.best))
            res.best = r;
    res.compressions = cache.compressions();
    return res;
}

SearchResult black_box_search(const SearchSpace& space, const BlackBoxOptions& opts, const TuneContext& ctx) {
    space.validate();
    check_context(ctx);
    if (opts.budget < 4)
        throw std::invalid_argument("black-box search needs a budget of at least 4");
    const Index budget = opts.budget;
    const Index max_comp = opts.max_compressions > 0 ? opts.max_compressions : std::max<Index>(1, budget / 32);
    const Index anchors = std::max<Index>(1, max_comp - max_comp / 3);
    const Index explore = (budget + 1) / 2;

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double lh0 = std::log(space.h_min), lh1 = std::log(space.h_max);
    const double ll0 = std::log(space.lambda_min), ll1 = std::log(space.lambda_max);

    auto h_at = [&](double log_h) { return std::clamp(std::exp(log_h), space.h_min, space.h_max); };
    auto lambda_at = [&](double log_l) { return std::clamp(std::exp(log_l), space.lambda_min, space.lambda_max); };

    SearchResult res;
    KernelCache cache(ctx);
    Index trial = 0;
    Index incumbent = -1;
    auto run = [&](double h, double lambda) {
        res.records.push_back(evaluate(cache, ctx, h, lambda, trial++, res.factorizations));
        const auto& rec = res.records.back();
        const bool improved =
            incumbent < 0 || rec.validation_accuracy > res.records[static_cast<std::size_t>(incumbent)].validation_accuracy;
        if (improved)
            incumbent = rec.trial;
        return improved;
    };

    // Exploration: stratified h anchors, and a Latin hypercube over (anchor stratum, log lambda).
    std::vector<double> anchor_h(static_cast<std::size_t>(anchors));
    for (Index j = 0; j < anchors; ++j)
        anchor_h[static_cast<std::size_t>(j)] =
            h_at(lh0 + (lh1 - lh0) * (static_cast<double>(j) + unit(rng)) / static_cast<double>(anchors));
    std::vector<Index> lambda_stratum(static_cast<std::size_t>(explore)), anchor_stratum(static_cast<std::size_t>(explore));
    std::iota(lambda_stratum.begin(), lambda_stratum.end(), Index{0});
    std::iota(anchor_stratum.begin(), anchor_stratum.end(), Index{0});
    std::shuffle(lambda_stratum.begin(), lambda_stratum.end(), rng);
    std::shuffle(anchor_stratum.begin(), anchor_stratum.end(), rng);
    for (Index i = 0; i < explore; ++i) {
        const double u = (static_cast<double>(lambda_stratum[static_cast<std::size_t>(i)]) + unit(rng)) /
                         static_cast<double>(explore);
        const Index a = anchor_stratum[static_cast<std::size_t>(i)] * anchors / explore;
        run(anchor_h[static_cast<std::size_t>(a)], lambda_at(ll0 + (ll1 - ll0) * u));
    }

    // Refinement around the incumbent.
    double sigma_lambda = 0.25 * (ll1 - ll0);
    const double sigma_h = 0.5 * (lh1 - lh0) / static_cast<double>(anchors);
    while (trial < budget) {
        const auto& inc = res.records[static_cast<std::size_t>(incumbent)];
        double h = inc.h;
        double ll = std::clamp(std::log(inc.lambda) + sigma_lambda * gauss(rng), ll0, ll1);
        const bool stalled = sigma_lambda < 0.02 * (ll1 - ll0);
        if (stalled && cache.compressions() < max_comp) {
            h = h_at(std::log(inc.h) + sigma_h * gauss(rng));
            ll = std::log(inc.lambda);
            sigma_lambda = 0.25 * (ll1 - ll0);
        }
        if (!run(h, lambda_at(ll)))
            sigma_lambda *= 0.5;
    }

    res.best = res.records[static_cast<std::size_t>(incumbent)];
    res.compressions = cache.compressions();
    return res;
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    out.precision(10);
    out << "trial,h,lambda,acc,mem_mb,max_rank,time_s\n";
    for (const auto& r : records)
        out << r.trial << ',' << r.h << ',' << r.lambda << ',' << r.validation_accuracy << ','
            << static_cast<double>(r.memory_bytes) / 1.0e6 << ',' << r.max_rank << ',' << r.wall_time_s << '\n';
    return out.str();
}

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << trials_csv(records);
}

} // namespace hik
