#include "hik/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace hik {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return std::string(s.substr(b, e - b));
}

std::optional<double> to_double(std::string_view s) {
    std::string t = trim(s);
    if (!t.empty() && t.front() == '+')
        t.erase(0, 1);
    if (t.empty())
        return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        return std::nullopt;
    return v;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

int to_label(double v, std::size_t line) {
    if (!std::isfinite(v) || v != std::round(v))
        throw ParseError("label is not an integer", line);
    return static_cast<int>(v);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void DataMatrix::validate() const {
    if (!points.allFinite())
        throw std::invalid_argument("data contains non-finite coordinates");
    if (labels && static_cast<Index>(labels->size()) != n())
        throw std::invalid_argument("label count does not match point count");
}

DataFormat parse_format(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "csv")
        return DataFormat::Csv;
    if (s == "libsvm" || s == "svm")
        return DataFormat::LibSvm;
    throw std::invalid_argument("unknown data format '" + name + "'");
}

DataMatrix parse_csv(const std::string& text, std::optional<Index> label_column) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t lineno = 0;
    std::size_t width = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty())
            continue;
        auto fields = split_fields(line, ',');
        std::vector<double> values;
        values.reserve(fields.size());
        bool numeric = true;
        for (const auto& f : fields) {
            auto v = to_double(f);
            if (!v) {
                numeric = false;
                break;
            }
            values.push_back(*v);
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue; // header
            }
            throw ParseError("non-numeric field", lineno);
        }
        first = false;
        if (width == 0)
            width = values.size();
        else if (values.size() != width)
            throw ParseError("inconsistent dimension: expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(values.size()),
                             lineno);
        if (label_column) {
            const auto col = static_cast<std::size_t>(*label_column);
            if (col >= values.size())
                throw ParseError("label column out of range", lineno);
            labels.push_back(to_label(values[col], lineno));
            values.erase(values.begin() + static_cast<std::ptrdiff_t>(col));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty())
        throw ParseError("no records", 0);

    DataMatrix out;
    const Index d = static_cast<Index>(rows.front().size());
    out.points.resize(static_cast<Index>(rows.size()), d);
    for (Index i = 0; i < out.n(); ++i)
        for (Index j = 0; j < d; ++j)
            out.points(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (label_column)
        out.labels = std::move(labels);
    out.validate();
    return out;
}

DataMatrix parse_libsvm(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::map<Index, double>> rows;
    std::vector<int> labels;
    std::size_t lineno = 0;
    Index dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok))
            continue;
        auto lab = to_double(tok);
        if (!lab)
            throw ParseError("bad label '" + tok + "'", lineno);
        labels.push_back(to_label(*lab, lineno));
        std::map<Index, double> feats;
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw ParseError("expected idx:val, got '" + tok + "'", lineno);
            Index idx = 0;
            const auto idx_str = tok.substr(0, colon);
            auto [p, ec] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
            if (ec != std::errc() || p != idx_str.data() + idx_str.size() || idx < 1)
                throw ParseError("bad feature index '" + idx_str + "'", lineno);
            auto val = to_double(tok.substr(colon + 1));
            if (!val)
                throw ParseError("bad feature value in '" + tok + "'", lineno);
            feats[idx - 1] = *val;
            dim = std::max(dim, idx);
        }
        rows.push_back(std::move(feats));
    }
    if (rows.empty())
        throw ParseError("no records", 0);

    DataMatrix out;
    out.points = PointMatrix::Zero(static_cast<Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (auto [j, v] : rows[i])
            out.points(static_cast<Index>(i), j) = v;
    out.labels = std::move(labels);
    out.validate();
    return out;
}

std::optional<std::filesystem::path> resolve_data_path(const std::filesystem::path& path) {
    if (std::filesystem::exists(path))
        return path;
    if (path.is_absolute())
        return std::nullopt;
    if (const char* root = std::getenv("HIK_DATA_DIR")) {
        auto p = std::filesystem::path(root) / path;
        if (std::filesystem::exists(p))
            return p;
    }
    return std::nullopt;
}

DataMatrix load_dataset(const std::filesystem::path& path, DataFormat format, std::optional<Index> label_column) {
    const auto text = read_file(resolve_data_path(path).value_or(path));
    return format == DataFormat::Csv ? parse_csv(text, label_column) : parse_libsvm(text);
}

void write_csv(const std::filesystem::path& path, const DataMatrix& data) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    for (Index i = 0; i < data.n(); ++i) {
        for (Index j = 0; j < data.d(); ++j)
            out << (j ? "," : "") << data.points(i, j);
        if (data.labels)
            out << (data.d() ? "," : "") << (*data.labels)[static_cast<std::size_t>(i)];
        out << '\n';
    }
}

std::pair<DataMatrix, NormStats> normalize_zscore(const DataMatrix& data) {
    if (data.n() < 1)
        throw std::invalid_argument("normalize_zscore needs at least one point");
    NormStats stats;
    stats.mean = data.points.colwise().mean().transpose();
    stats.std.resize(data.d());
    for (Index j = 0; j < data.d(); ++j) {
        const double var = (data.points.col(j).array() - stats.mean(j)).square().mean();
        stats.std(j) = std::sqrt(var);
    }
    return {apply_normalization(data, stats), stats};
}

DataMatrix apply_normalization(const DataMatrix& data, const NormStats& stats) {
    if (stats.mean.size() != data.d())
        throw std::invalid_argument("normalization statistics have the wrong dimension");
    DataMatrix out = data;
    for (Index j = 0; j < data.d(); ++j) {
        out.points.col(j).array() -= stats.mean(j);
        if (stats.std(j) > 0.0)
            out.points.col(j) /= stats.std(j);
    }
    return out;
}

DataMatrix select_rows(const DataMatrix& data, std::span<const Index> rows) {
    DataMatrix out;
    out.points.resize(static_cast<Index>(rows.size()), data.d());
    std::vector<int> labels;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.points.row(static_cast<Index>(i)) = data.points.row(rows[i]);
        if (data.labels)
            labels.push_back((*data.labels)[static_cast<std::size_t>(rows[i])]);
    }
    if (data.labels)
        out.labels = std::move(labels);
    return out;
}

std::array<DataMatrix, 3> split_dataset(const DataMatrix& data, std::array<double, 3> fractions, std::uint64_t seed) {
    for (double f : fractions)
        if (!(f > 0.0))
            throw std::invalid_argument("split fractions must be positive");
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");
    const Index n = data.n();
    const auto n_train = static_cast<Index>(std::llround(static_cast<double>(n) * fractions[0]));
    const auto n_val = static_cast<Index>(std::llround(static_cast<double>(n) * fractions[1]));
    const Index n_test = n - n_train - n_val;
    if (n_train <= 0 || n_val <= 0 || n_test <= 0)
        throw std::invalid_argument("split produces an empty part (sizes " + std::to_string(n_train) + "/" +
                                    std::to_string(n_val) + "/" + std::to_string(n_test) + ")");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::span<const Index> all(order);
    return {select_rows(data, all.subspan(0, static_cast<std::size_t>(n_train))),
            select_rows(data, all.subspan(static_cast<std::size_t>(n_train), static_cast<std::size_t>(n_val))),
            select_rows(data, all.subspan(static_cast<std::size_t>(n_train + n_val)))};
}

std::vector<int> one_vs_all_labels(std::span<const int> labels, int positive_class) {
    std::vector<int> out(labels.size());
    std::transform(labels.begin(), labels.end(), out.begin(),
                   [&](int l) { return l == positive_class ? 1 : -1; });
    return out;
}

int class_count(std::span<const int> labels) {
    int c = 0;
    for (int l : labels) {
        if (l < 0)
            throw std::invalid_argument("class ids must be non-negative");
        c = std::max(c, l + 1);
    }
    return c;
}

bool is_binary_pm1(std::span<const int> labels) {
    return std::all_of(labels.begin(), labels.end(), [](int l) { return l == 1 || l == -1; });
}

DataMatrix make_blobs(const BlobSpec& spec) {
    if (spec.n < 1 || spec.d < 1 || spec.clusters < 1)
        throw std::invalid_argument("make_blobs: n, d and clusters must be positive");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(-spec.spread, spec.spread);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix centers(spec.clusters, spec.d);
    for (Index c = 0; c < spec.clusters; ++c)
        for (Index j = 0; j < spec.d; ++j)
            centers(c, j) = uni(rng);

    DataMatrix out;
    out.points.resize(spec.n, spec.d);
    std::vector<int> labels(static_cast<std::size_t>(spec.n));
    for (Index i = 0; i < spec.n; ++i) {
        const int c = static_cast<int>(i % spec.clusters);
        labels[static_cast<std::size_t>(i)] = c;
        for (Index j = 0; j < spec.d; ++j)
            out.points(i, j) = centers(c, j) + spec.sigma * gauss(rng);
    }
    std::vector<Index> order(static_cast<std::size_t>(spec.n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    out.labels = std::move(labels);
    return select_rows(out, order);
}

} // namespace hik
