#include "calign/data_io.hpp"

#include "calign/random.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace calign {

const char* to_string(SourceKind kind) {
    switch (kind) {
    case SourceKind::Csv: return "csv";
    case SourceKind::Libsvm: return "libsvm";
    case SourceKind::Synthetic: return "synthetic";
    }
    return "?";
}

SourceKind source_from_string(const std::string& name) {
    if (name == "csv") return SourceKind::Csv;
    if (name == "libsvm") return SourceKind::Libsvm;
    if (name == "synthetic") return SourceKind::Synthetic;
    throw ParameterError("unknown dataset source '" + name + "'");
}

const char* to_string(BankFamily family) {
    switch (family) {
    case BankFamily::GaussianGrid: return "gaussian_grid";
    case BankFamily::RankOne: return "rank_one";
    case BankFamily::Explicit: return "explicit";
    }
    return "?";
}

BankFamily family_from_string(const std::string& name) {
    if (name == "gaussian_grid") return BankFamily::GaussianGrid;
    if (name == "rank_one") return BankFamily::RankOne;
    if (name == "explicit") return BankFamily::Explicit;
    throw ParameterError("unknown bank family '" + name + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& field, double& out) {
    if (field.empty()) return false;
    const char* begin = field.c_str();
    char* end = nullptr;
    errno = 0;
    out = std::strtod(begin, &end);
    return end == begin + field.size() && errno != ERANGE;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

void check_label(double y, Task task, const std::string& source, std::size_t line) {
    if (!std::isfinite(y)) throw ParseError(source, line, "non-finite label");
    if (task == Task::Classification && y != 1.0 && y != -1.0)
        throw ParseError(source, line, "classification label " + std::to_string(y) + " is not -1 or +1");
}

}  // namespace

Sample parse_csv(const std::string& text, const std::string& label_column, Task task, const std::string& source) {
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> row_lines;
    std::size_t width = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (lineno == 1 && raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) raw.erase(0, 3);
        if (trim(raw).empty()) continue;
        const auto fields = split(raw, ',');
        if (width == 0) width = fields.size();
        else if (fields.size() != width)
            throw ParseError(source, lineno, "expected " + std::to_string(width) + " fields, got " +
                                                 std::to_string(fields.size()));
        std::vector<double> vals(fields.size());
        bool numeric = true;
        for (std::size_t c = 0; c < fields.size(); ++c)
            if (!parse_number(fields[c], vals[c])) numeric = false;
        if (!numeric) {
            if (rows.empty() && header.empty()) {
                header = fields;
                continue;
            }
            throw ParseError(source, lineno, "non-numeric field");
        }
        for (double v : vals)
            if (!std::isfinite(v)) throw ParseError(source, lineno, "non-finite value");
        rows.push_back(std::move(vals));
        row_lines.push_back(lineno);
    }
    if (rows.empty()) throw InputError(source + ": no data rows");
    if (width < 2) throw InputError(source + ": need at least one feature column and a label column");

    std::size_t label = width;
    if (label_column == "last") label = width - 1;
    else if (label_column == "first") label = 0;
    else {
        double idx;
        if (parse_number(label_column, idx) && idx >= 0 && idx == std::floor(idx)) label = static_cast<std::size_t>(idx);
        else {
            auto it = std::find(header.begin(), header.end(), label_column);
            if (it == header.end()) throw ParameterError(source + ": label column '" + label_column + "' not found");
            label = static_cast<std::size_t>(it - header.begin());
        }
    }
    if (label >= width)
        throw ParameterError(source + ": label column " + label_column + " out of range (" +
                             std::to_string(width) + " columns)");

    Sample s;
    s.task = task;
    s.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
    s.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        check_label(rows[r][label], task, source, row_lines[r]);
        s.labels[static_cast<Eigen::Index>(r)] = rows[r][label];
        Eigen::Index c = 0;
        for (std::size_t f = 0; f < width; ++f)
            if (f != label) s.points(static_cast<Eigen::Index>(r), c++) = rows[r][f];
    }
    return s;
}

Sample parse_libsvm(const std::string& text, Task task, const std::string& source) {
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    struct Row {
        double label;
        std::vector<std::pair<std::size_t, double>> entries;
    };
    std::vector<Row> rows;
    std::size_t dim = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string tok;
        if (!(ls >> tok)) continue;
        Row row;
        if (!parse_number(tok, row.label)) throw ParseError(source, lineno, "bad label '" + tok + "'");
        check_label(row.label, task, source, lineno);
        std::size_t prev = 0;
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw ParseError(source, lineno, "expected index:value, got '" + tok + "'");
            const std::string is = tok.substr(0, colon);
            if (is == "qid") continue;
            double idx, val;
            if (!parse_number(is, idx) || idx < 1 || idx != std::floor(idx))
                throw ParseError(source, lineno, "bad feature index '" + is + "'");
            if (!parse_number(tok.substr(colon + 1), val) || !std::isfinite(val))
                throw ParseError(source, lineno, "bad feature value in '" + tok + "'");
            const auto i = static_cast<std::size_t>(idx);
            if (i <= prev) throw ParseError(source, lineno, "feature indices must be increasing");
            prev = i;
            dim = std::max(dim, i);
            row.entries.emplace_back(i - 1, val);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(source + ": no data rows");
    if (dim == 0) throw InputError(source + ": no features");
    Sample s;
    s.task = task;
    s.points = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    s.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        s.labels[static_cast<Eigen::Index>(r)] = rows[r].label;
        for (const auto& [c, v] : rows[r].entries)
            s.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
    return s;
}

void preprocess(Sample& s, const Preprocessing& pre) {
    if (pre.standardize_features) {
        s.constant_features.clear();
        const double m = static_cast<double>(s.points.rows());
        for (Eigen::Index c = 0; c < s.points.cols(); ++c) {
            const double mean = s.points.col(c).mean();
            s.points.col(c).array() -= mean;
            const double sd = std::sqrt(s.points.col(c).squaredNorm() / m);
            if (sd > 1e-12 * std::max(1.0, std::abs(mean))) s.points.col(c) /= sd;
            else {
                s.points.col(c).setZero();
                s.constant_features.push_back(static_cast<std::size_t>(c));
            }
        }
    }
    if (pre.center_labels || pre.normalize_labels) {
        if (s.task == Task::Classification)
            throw ParameterError("label centering/normalization applies to regression only");
        s.labels.array() -= s.labels.mean();
    }
    if (pre.normalize_labels) {
        const double ms = s.labels.squaredNorm() / static_cast<double>(s.labels.size());
        if (!(ms > 0.0)) throw InputError("cannot normalize constant labels");
        s.labels /= std::sqrt(ms);
    }
}

Sample synth_two_point(double alpha, std::size_t m, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("two_point: alpha must be in (0,1)");
    if (m < 2) throw ParameterError("two_point: m must be at least 2 to hold both classes");
    auto neg = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(m) + 0.5));
    neg = std::clamp<std::size_t>(neg, 1, m - 1);
    std::vector<double> labels(m, 1.0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(neg), -1.0);
    Rng rng(seed);
    shuffle_in_place(labels, rng);
    Sample s;
    s.task = Task::Classification;
    s.points = Matrix::Zero(static_cast<Eigen::Index>(m), 2);
    s.labels.resize(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        s.labels[static_cast<Eigen::Index>(i)] = labels[i];
        s.points(static_cast<Eigen::Index>(i), 0) = labels[i];
    }
    return s;
}

Sample synth_gaussian_classes(std::size_t m, std::size_t dim, double separation, std::uint64_t seed) {
    if (m < 2) throw ParameterError("gaussian_classes: m must be at least 2");
    if (dim < 1) throw ParameterError("gaussian_classes: dim must be at least 1");
    if (!(separation >= 0.0)) throw ParameterError("gaussian_classes: separation must be non-negative");
    Rng rng(seed);
    Sample s;
    s.task = Task::Classification;
    s.points.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dim));
    s.labels.resize(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        const double y = i % 2 == 0 ? 1.0 : -1.0;
        s.labels[static_cast<Eigen::Index>(i)] = y;
        for (std::size_t c = 0; c < dim; ++c)
            s.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = standard_normal(rng);
        s.points(static_cast<Eigen::Index>(i), 0) += 0.5 * separation * y;
    }
    return s;
}

Sample synth_sine_regression(std::size_t m, std::size_t dim, double noise, std::uint64_t seed) {
    if (m < 2) throw ParameterError("sine_regression: m must be at least 2");
    if (dim < 1) throw ParameterError("sine_regression: dim must be at least 1");
    if (!(noise >= 0.0)) throw ParameterError("sine_regression: noise must be non-negative");
    Rng rng(seed);
    Sample s;
    s.task = Task::Regression;
    s.points.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dim));
    s.labels.resize(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < dim; ++c)
            s.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = -3.0 + 6.0 * uniform01(rng);
        s.labels[static_cast<Eigen::Index>(i)] =
            std::sin(s.points(static_cast<Eigen::Index>(i), 0)) + noise * standard_normal(rng);
    }
    return s;
}

namespace {

double param(const DatasetConfig& cfg, const std::string& key, double fallback) {
    auto it = cfg.params.find(key);
    return it == cfg.params.end() ? fallback : it->second;
}

std::size_t count_param(const DatasetConfig& cfg, const std::string& key, double fallback) {
    const double v = param(cfg, key, fallback);
    if (!(v >= 0.0) || v != std::floor(v)) throw ParameterError("parameter '" + key + "' must be a whole number");
    return static_cast<std::size_t>(v);
}

}  // namespace

Sample load_dataset(const DatasetConfig& cfg) {
    Sample s;
    switch (cfg.source) {
    case SourceKind::Csv:
        s = parse_csv(read_text_file(cfg.path), cfg.label_column, cfg.task, cfg.path);
        break;
    case SourceKind::Libsvm:
        s = parse_libsvm(read_text_file(cfg.path), cfg.task, cfg.path);
        break;
    case SourceKind::Synthetic:
        if (cfg.generator == "two_point") {
            if (cfg.task != Task::Classification) throw ParameterError("two_point is a classification generator");
            s = synth_two_point(param(cfg, "alpha", 0.5), count_param(cfg, "m", 100), cfg.seed);
        } else if (cfg.generator == "gaussian_classes") {
            if (cfg.task != Task::Classification)
                throw ParameterError("gaussian_classes is a classification generator");
            s = synth_gaussian_classes(count_param(cfg, "m", 100), count_param(cfg, "dim", 2),
                                       param(cfg, "separation", 2.0), cfg.seed);
        } else if (cfg.generator == "sine_regression") {
            if (cfg.task != Task::Regression) throw ParameterError("sine_regression is a regression generator");
            s = synth_sine_regression(count_param(cfg, "m", 100), count_param(cfg, "dim", 1),
                                      param(cfg, "noise", 0.1), cfg.seed);
        } else {
            throw ParameterError("unknown generator '" + cfg.generator + "'");
        }
        break;
    }
    s.task = cfg.task;
    preprocess(s, cfg.preprocessing);
    s.validate();
    return s;
}

void BankConfig::validate() const {
    switch (family) {
    case BankFamily::GaussianGrid:
        if (gamma0 > gamma1) throw ParameterError("gaussian_grid: gamma0 must not exceed gamma1");
        break;
    case BankFamily::RankOne:
        if (top_k < 1) throw ParameterError("rank_one: top_k must be at least 1");
        break;
    case BankFamily::Explicit:
        if (kernels.empty()) throw ParameterError("explicit bank: no kernels listed");
        for (const auto& k : kernels) calign::validate(k);
        break;
    }
}

std::vector<KernelSpec> bank_specs(const Sample& sample, const BankConfig& cfg) {
    cfg.validate();
    std::vector<KernelSpec> specs;
    switch (cfg.family) {
    case BankFamily::GaussianGrid:
        for (int g = cfg.gamma0; g <= cfg.gamma1; ++g) specs.push_back(GaussianKernel{std::ldexp(1.0, g)});
        break;
    case BankFamily::RankOne: {
        if (cfg.top_k > sample.dim())
            throw ParameterError("rank_one: top_k = " + std::to_string(cfg.top_k) + " exceeds feature count " +
                                 std::to_string(sample.dim()));
        std::vector<double> var(sample.dim());
        for (std::size_t c = 0; c < sample.dim(); ++c) {
            const auto col = sample.points.col(static_cast<Eigen::Index>(c));
            var[c] = (col.array() - col.mean()).square().mean();
        }
        std::vector<std::size_t> order(sample.dim());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return var[a] > var[b]; });
        order.resize(cfg.top_k);
        std::sort(order.begin(), order.end());
        for (auto c : order) specs.push_back(RankOneKernel{c});
        break;
    }
    case BankFamily::Explicit:
        specs = cfg.kernels;
        for (const auto& k : specs)
            if (const auto* r = std::get_if<RankOneKernel>(&k); r && r->feature_index >= sample.dim())
                throw ParameterError("rank_one feature index out of range");
        break;
    }
    return specs;
}

BaseKernelBank build_bank(const Sample& sample, const BankConfig& cfg) {
    const auto specs = bank_specs(sample, cfg);
    std::vector<GramMatrix> ks;
    std::vector<std::string> names;
    std::vector<std::size_t> degenerate;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        GramMatrix K = gram(specs[k], sample);
        if (cfg.trace_one) K = trace_normalize(K);
        const Matrix Kc = center(K.entries());
        const double cn = Kc.norm();
        if (!(cn > 1e-12 * K.entries().norm())) {
            degenerate.push_back(k);
            ks.push_back(K);
        } else {
            Matrix E = cfg.center ? Kc : K.entries();
            if (cfg.frobenius_one) E /= cn;
            ks.push_back(GramMatrix::trusted(std::move(E), cfg.center, cfg.trace_one && !cfg.frobenius_one && !cfg.center));
        }
        names.push_back(describe(specs[k]));
    }
    if (!degenerate.empty()) {
        std::string list;
        for (auto k : degenerate) list += (list.empty() ? "" : ", ") + std::to_string(k) + " (" + names[k] + ")";
        throw DegenerateKernel("build_bank: degenerate centered kernel(s): " + list, degenerate);
    }
    return BaseKernelBank(std::move(ks), std::move(names));
}

}  // namespace calign
