#include "calign/harness.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <thread>

namespace calign {

using nlohmann::json;

const char* to_string(Method m) {
    switch (m) {
    case Method::Unif: return "unif";
    case Method::Align: return "align";
    case Method::Alignf: return "alignf";
    case Method::L1svm: return "l1svm";
    case Method::L2krr: return "l2krr";
    case Method::Onestage: return "onestage";
    case Method::Lq: return "lq";
    }
    return "?";
}

Method method_from_string(const std::string& name) {
    for (Method m : {Method::Unif, Method::Align, Method::Alignf, Method::L1svm, Method::L2krr, Method::Onestage,
                     Method::Lq})
        if (name == to_string(m)) return m;
    throw ParameterError("unknown method '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (folds < 3)
        throw ParameterError("folds must be at least 3 (one test, one validation and one training fold)");
    auto positive = [](const std::vector<double>& g, const char* what) {
        if (g.empty()) throw ParameterError(std::string(what) + " must not be empty");
        for (double v : g)
            if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(what) + " entries must be positive");
    };
    positive(lambda_grid, "lambda_grid");
    positive(Lambda_grid, "Lambda_grid");
    auto nonneg = [](const std::vector<double>& g, const char* what) {
        if (g.empty()) throw ParameterError(std::string(what) + " must not be empty");
        for (double v : g)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError(std::string(what) + " entries must be >= 0");
    };
    if (method == Method::Onestage) {
        nonneg(onestage_grids.gamma, "onestage gamma grid");
        nonneg(onestage_grids.gamma_prime, "onestage gamma_prime grid");
        nonneg(onestage_grids.gamma_dprime, "onestage gamma_dprime grid");
    }
    if (method == Method::L1svm && task() != Task::Classification)
        throw ParameterError("l1svm is a classification method");
    if (method == Method::L2krr && task() != Task::Regression) throw ParameterError("l2krr is a regression method");
    if (method == Method::Lq && !(q > 1.0)) throw ParameterError("lq needs q > 1");
    bank.validate();
}

std::vector<int> fold_assignment(std::size_t m, int folds, std::uint64_t seed) {
    if (folds < 1) throw ParameterError("fold count must be positive");
    if (m < static_cast<std::size_t>(folds)) throw ParameterError("fewer points than folds");
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    shuffle_in_place(idx, rng);
    std::vector<int> assign(m);
    for (std::size_t i = 0; i < m; ++i) assign[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return assign;
}

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("MKL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 256));
    }
    return 1;
}

namespace {

[[noreturn]] void rethrow_with_prefix(std::exception_ptr ep, const std::string& prefix) {
    try {
        std::rethrow_exception(ep);
    } catch (const NonConverged& e) {
        throw NonConverged(prefix + e.what(), e.best_iterate(), e.residual());
    } catch (const DegenerateKernel& e) {
        throw DegenerateKernel(prefix + e.what(), e.indices());
    } catch (const Error& e) {
        throw Error(e.kind(), prefix + e.what());
    } catch (const std::exception& e) {
        throw NumericError(prefix + e.what());
    }
}

// Runs f(0..n-1) on up to `threads` workers; rethrows the failure with the
// lowest index.
template <class F>
void parallel_for(std::size_t n, int threads, const char* label, F&& f) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto nt = static_cast<std::size_t>(std::max(1, threads));
    if (nt <= 1 || n <= 1) worker();
    else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(nt, n); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < n; ++i)
        if (errors[i]) rethrow_with_prefix(errors[i], std::string(label) + " " + std::to_string(i) + ": ");
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double error_of(Task task, const Vector& pred, const Vector& truth) {
    if (truth.size() == 0) return 0.0;
    if (task == Task::Classification) {
        int wrong = 0;
        for (Eigen::Index i = 0; i < truth.size(); ++i)
            if (pred[i] != truth[i]) ++wrong;
        return static_cast<double>(wrong) / static_cast<double>(truth.size());
    }
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(truth.size()));
}

Vector pick(const Vector& v, const std::vector<std::size_t>& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(idx[i])];
    return out;
}

struct Candidate {
    double Lambda = 1.0;
    double reg = 1.0;
    std::optional<double> gamma, gamma_prime, gamma_dprime;
};

std::vector<Candidate> candidates(const ExperimentConfig& cfg) {
    std::vector<Candidate> out;
    if (cfg.method == Method::Onestage) {
        for (double g : cfg.onestage_grids.gamma)
            for (double gp : cfg.onestage_grids.gamma_prime)
                for (double gd : cfg.onestage_grids.gamma_dprime) {
                    Candidate c;
                    c.Lambda = 0.0;
                    c.reg = 1.0;
                    c.gamma = g;
                    c.gamma_prime = gp;
                    c.gamma_dprime = gd;
                    out.push_back(c);
                }
        return out;
    }
    for (double L : cfg.Lambda_grid)
        for (double r : cfg.lambda_grid) out.push_back({L, r, {}, {}, {}});
    return out;
}

// A trained combination: weights plus one second-stage model.
struct Fitted {
    Vector mu;
    std::optional<SvmModel> svm;
    std::optional<KrrModel> krr;
    double y_offset = 0.0;
};

// Direction (at radius 1) for the methods whose weights do not depend on
// the radius or the second-stage regularization.
std::optional<Vector> unit_direction(const ExperimentConfig& cfg, const BaseKernelBank& bank, const Vector& y) {
    switch (cfg.method) {
    case Method::Unif: return unif_weights(bank.size(), 1.0).mu;
    case Method::Align: return align_weights(bank, y, 1.0).mu;
    case Method::Alignf: return alignf(bank, y, NormKind::L1, 1.0).weights.mu;
    case Method::Lq: return lq_weights(bank, y, cfg.q, 1.0, NormKind::L1).mu;
    default: return std::nullopt;
    }
}

Fitted fit_candidate(const ExperimentConfig& cfg, const BaseKernelBank& bank, const Vector& y_fit, double y_offset,
                     const Candidate& c, const std::optional<Vector>& direction) {
    Fitted f;
    f.y_offset = y_offset;
    SvmOptions svm;
    svm.add_bias = cfg.svm_bias;
    if (direction) {
        f.mu = c.Lambda * *direction;
    } else if (cfg.method == Method::L1svm) {
        auto r = l1svm_learn(bank, y_fit, c.reg, c.Lambda, LearnOptions{}, svm);
        f.mu = r.weights.mu;
        f.svm = std::move(r.model);
        return f;
    } else if (cfg.method == Method::L2krr) {
        auto r = l2krr_learn(bank, y_fit, c.reg, c.Lambda);
        f.mu = r.weights.mu;
        f.krr = std::move(r.model);
        return f;
    } else {
        OneStageConfig oc;
        oc.gamma = *c.gamma;
        oc.gamma_prime = *c.gamma_prime;
        oc.gamma_dprime = *c.gamma_dprime;
        oc.tol = 1e-6;
        auto r = onestage_learn(bank, y_fit, oc);
        f.mu = r.weights.mu;
        f.krr = std::move(r.model);
        return f;
    }
    const GramMatrix K = bank.combine(f.mu);
    if (cfg.task() == Task::Classification) f.svm = svm_fit(K, y_fit, c.reg, svm);
    else f.krr = krr_fit(K, y_fit, c.reg);
    return f;
}

Vector predict_rows(const Fitted& f, const BaseKernelBank& full, const std::vector<std::size_t>& rows,
                    const std::vector<std::size_t>& train) {
    const Matrix Kx = full.combine_block(f.mu, rows, train);
    if (f.svm) return predict(*f.svm, Kx);
    Vector p = predict(*f.krr, Kx);
    p.array() += f.y_offset;
    return p;
}

double alignment_or_zero(const BaseKernelBank& bank, const Vector& mu, const Vector& y) {
    if (!(mu.maxCoeff() > 0.0)) return 0.0;
    try {
        return target_alignment(bank.combine(mu), y);
    } catch (const DegenerateKernel&) {
        return 0.0;
    }
}

std::string dataset_id(const DatasetConfig& d) {
    if (d.source == SourceKind::Synthetic) {
        std::ostringstream os;
        os.precision(17);
        os << d.generator << "(";
        bool first = true;
        for (const auto& [k, v] : d.params) {
            os << (first ? "" : ",") << k << "=" << v;
            first = false;
        }
        os << ";seed=" << d.seed << ")";
        return os.str();
    }
    return std::filesystem::path(d.path).filename().string();
}

}  // namespace

ExperimentRun run_cv(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    return run_cv(cfg, load_dataset(cfg.dataset), threads);
}

ExperimentRun run_cv(const ExperimentConfig& cfg, const Sample& sample, int threads) {
    cfg.validate();
    sample.validate();
    if (sample.task != cfg.task()) throw ParameterError("sample task does not match the experiment task");
    // The bank is built once on all features (no labels involved) and
    // sub-blocked per fold.
    const BaseKernelBank full = build_bank(sample, cfg.bank);
    const auto assign = fold_assignment(sample.size(), cfg.folds, cfg.seed);
    const auto cands = candidates(cfg);

    ExperimentRun run;
    run.dataset = dataset_id(cfg.dataset);
    run.method = to_string(cfg.method);
    if (cfg.method == Method::Lq) {
        std::ostringstream os;
        os.precision(17);
        os << "lq(q=" << cfg.q << ")";
        run.method = os.str();
    }
    run.task = to_string(cfg.task());
    run.folds = cfg.folds;
    run.seed = cfg.seed;
    run.kernels = full.names();
    run.fold_results.resize(static_cast<std::size_t>(cfg.folds));

    parallel_for(static_cast<std::size_t>(cfg.folds), resolve_threads(threads), "fold", [&](std::size_t r) {
        const int test_fold = static_cast<int>(r);
        const int val_fold = (test_fold + 1) % cfg.folds;
        std::vector<std::size_t> train, val, test;
        for (std::size_t i = 0; i < assign.size(); ++i) {
            if (assign[i] == test_fold) test.push_back(i);
            else if (assign[i] == val_fold) val.push_back(i);
            else train.push_back(i);
        }
        const BaseKernelBank bank = full.principal(train);
        Vector y_fit = pick(sample.labels, train);
        double offset = 0.0;
        if (cfg.task() == Task::Regression) {
            offset = y_fit.mean();
            y_fit.array() -= offset;
        }
        const auto direction = unit_direction(cfg, bank, y_fit);

        FoldRecord rec;
        rec.fold = test_fold;
        rec.n_train = train.size();
        rec.n_validation = val.size();
        rec.n_test = test.size();

        if (cfg.method == Method::Align || cfg.method == Method::Alignf) {
            const AlignmentSystem sys = alignment_system(bank, y_fit);
            const double rho_unif = combined_alignment(sys, unif_weights(bank.size(), 1.0).mu, y_fit);
            const double rho_alignf = combined_alignment(sys, alignf(sys, y_fit, NormKind::L1, 1.0).weights.mu, y_fit);
            rec.unif_alignment = rho_unif;
            rec.alignf_alignment = rho_alignf;
            if (rho_alignf < rho_unif - 1e-8)
                throw NumericError("alignf training alignment " + std::to_string(rho_alignf) +
                                   " is below the uniform combination's " + std::to_string(rho_unif));
        }

        const Vector y_val = pick(sample.labels, val);
        std::optional<Fitted> best;
        std::size_t best_c = 0;
        double best_err = 0.0;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            Fitted f = fit_candidate(cfg, bank, y_fit, offset, cands[c], direction);
            const double e = error_of(cfg.task(), predict_rows(f, full, val, train), y_val);
            if (!best || e < best_err) {
                best = std::move(f);
                best_err = e;
                best_c = c;
            }
        }
        const Candidate& chosen = cands[best_c];
        rec.validation_error = best_err;
        rec.test_error = error_of(cfg.task(), predict_rows(*best, full, test, train), pick(sample.labels, test));
        rec.train_alignment = alignment_or_zero(bank, best->mu, y_fit);
        rec.Lambda = chosen.Lambda;
        rec.reg = chosen.reg;
        rec.gamma = chosen.gamma;
        rec.gamma_prime = chosen.gamma_prime;
        rec.gamma_dprime = chosen.gamma_dprime;
        rec.mu.assign(best->mu.data(), best->mu.data() + best->mu.size());
        run.fold_results[r] = std::move(rec);
    });

    std::vector<double> errs, aligns;
    for (const auto& f : run.fold_results) {
        errs.push_back(f.test_error);
        aligns.push_back(f.train_alignment);
    }
    run.mean_error = mean_of(errs);
    run.std_error = sd_of(errs);
    run.mean_alignment = mean_of(aligns);
    run.std_alignment = sd_of(aligns);
    return run;
}

WeightsReport learn_weights(const ExperimentConfig& cfg, const Sample& sample) {
    cfg.validate();
    sample.validate();
    const BaseKernelBank bank = build_bank(sample, cfg.bank);
    Vector y = sample.labels;
    double offset = 0.0;
    if (cfg.task() == Task::Regression) {
        offset = y.mean();
        y.array() -= offset;
    }
    Candidate c = candidates(cfg).front();
    const Fitted f = fit_candidate(cfg, bank, y, offset, c, unit_direction(cfg, bank, y));
    WeightsReport w;
    w.method = to_string(cfg.method);
    w.kernels = bank.names();
    w.mu.assign(f.mu.data(), f.mu.data() + f.mu.size());
    w.alignment = alignment_or_zero(bank, f.mu, y);
    return w;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("pearson: length mismatch");
    if (a.size() < 2) return std::nullopt;
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationReport correlation_report(const Sample& sample, const BaseKernelBank& bank, int folds,
                                     std::uint64_t seed, double reg, int threads,
                                     const BaseKernelBank* uncentered) {
    sample.validate();
    if (uncentered && (uncentered->size() != bank.size() || uncentered->sample_size() != bank.sample_size()))
        throw DimensionError("uncentered bank does not match the bank");
    if (bank.size() < 3) throw ParameterError("correlation_report needs at least 3 base kernels");
    if (bank.sample_size() != sample.size()) throw DimensionError("bank and sample sizes differ");
    if (folds < 2) throw ParameterError("correlation_report needs at least 2 folds");
    if (!(reg > 0.0)) throw ParameterError("correlation_report: regularization must be positive");
    const auto assign = fold_assignment(sample.size(), folds, seed);
    const Task task = sample.task;
    Vector y = sample.labels;
    if (task == Task::Regression) y.array() -= y.mean();

    CorrelationReport rep;
    rep.folds = folds;
    rep.seed = seed;
    rep.rows.resize(bank.size());
    parallel_for(bank.size(), resolve_threads(threads), "kernel", [&](std::size_t k) {
        KernelCorrelationRow row;
        row.name = bank.names()[k];
        Vector e = Vector::Zero(static_cast<Eigen::Index>(bank.size()));
        e[static_cast<Eigen::Index>(k)] = 1.0;
        double err_sum = 0.0;
        for (int f = 0; f < folds; ++f) {
            std::vector<std::size_t> train, test;
            for (std::size_t i = 0; i < assign.size(); ++i) (assign[i] == f ? test : train).push_back(i);
            Vector yt = pick(sample.labels, train);
            double offset = 0.0;
            if (task == Task::Regression) {
                offset = yt.mean();
                yt.array() -= offset;
            }
            const GramMatrix K = bank[k].principal(train);
            const Matrix Kx = bank.combine_block(e, test, train);
            Vector pred;
            if (task == Task::Classification) pred = predict(svm_fit(K, yt, reg), Kx);
            else {
                pred = predict(krr_fit(K, yt, reg), Kx);
                pred.array() += offset;
            }
            err_sum += error_of(task, pred, pick(sample.labels, test));
        }
        row.accuracy = 1.0 - err_sum / folds;
        const Matrix T = y * y.transpose();
        row.centered = centered_alignment(bank[k].entries(), T);
        row.uncentered = uncentered_alignment((uncentered ? (*uncentered)[k] : bank[k]).entries(), T);
        rep.rows[k] = row;
    });
    std::vector<double> acc, cen, unc;
    for (const auto& r : rep.rows) {
        acc.push_back(r.accuracy);
        cen.push_back(r.centered);
        unc.push_back(r.uncentered);
    }
    rep.corr_centered = pearson(acc, cen);
    rep.corr_uncentered = pearson(acc, unc);
    return rep;
}

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b, double p_level) {
    if (a.size() != b.size()) throw DimensionError("paired_ttest: samples differ in length");
    if (a.size() < 2) throw ParameterError("paired_ttest: need at least 2 pairs");
    if (!(p_level > 0.0 && p_level < 1.0)) throw ParameterError("paired_ttest: level must be in (0,1)");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = a[i] - b[i];
        if (!std::isfinite(d[i])) throw InputError("paired_ttest: non-finite values");
    }
    TTestResult r;
    r.n = d.size();
    r.mean_diff = mean_of(d);
    r.sd_diff = sd_of(d);
    if (r.sd_diff == 0.0) {
        if (r.mean_diff == 0.0) r.inconclusive = true;
        else {
            r.p_value = r.mean_diff > 0.0 ? 0.0 : 1.0;
            r.significant = r.mean_diff > 0.0;
        }
        return r;
    }
    const double t = r.mean_diff / (r.sd_diff / std::sqrt(static_cast<double>(r.n)));
    const boost::math::students_t dist(static_cast<double>(r.n - 1));
    r.t = t;
    r.p_value = boost::math::cdf(boost::math::complement(dist, t));
    r.significant = *r.p_value < p_level;
    return r;
}

// ---------------------------------------------------------------- JSON

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::string base_join(const std::string& base, const std::string& path) {
    if (path.empty() || base.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base) / p).lexically_normal().string();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (!j.is_object()) throw InputError(std::string(where) + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || it.key() == k;
        if (!ok) throw InputError(std::string(where) + ": unknown key '" + it.key() + "'");
    }
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
}

std::vector<double> double_list(const json& j, const char* key, std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (v.is_number()) return {v.get<double>()};
    return v.get<std::vector<double>>();
}

}  // namespace

DatasetConfig dataset_config_from_json(const json& j, const std::string& base_dir, Task task) {
    return guarded([&] {
    check_keys(j, {"source", "path", "label_column", "generator", "params", "seed", "preprocessing", "task"},
               "dataset");
    DatasetConfig d;
    d.task = j.contains("task") ? task_from_string(j.at("task").get<std::string>()) : task;
    d.source = source_from_string(j.value("source", std::string("csv")));
    d.path = base_join(base_dir, j.value("path", std::string()));
    if (j.contains("label_column")) {
        const json& lc = j.at("label_column");
        d.label_column = lc.is_number_integer() ? std::to_string(lc.get<long long>()) : lc.get<std::string>();
    }
    d.generator = j.value("generator", std::string());
    if (j.contains("params"))
        for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it) d.params[it.key()] = it->get<double>();
    d.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("preprocessing")) {
        const json& p = j.at("preprocessing");
        check_keys(p, {"standardize_features", "center_labels", "normalize_labels"}, "preprocessing");
        d.preprocessing.standardize_features = p.value("standardize_features", false);
        d.preprocessing.center_labels = p.value("center_labels", false);
        d.preprocessing.normalize_labels = p.value("normalize_labels", false);
    }
    if (d.source != SourceKind::Synthetic && d.path.empty()) throw InputError("dataset: path is required");
    return d;
    });
}

BankConfig bank_config_from_json(const json& j) {
    return guarded([&] {
    check_keys(j, {"family", "gamma0", "gamma1", "top_k", "kernels", "normalize", "center"}, "bank");
    BankConfig b;
    b.family = family_from_string(j.value("family", std::string("gaussian_grid")));
    b.gamma0 = j.value("gamma0", b.gamma0);
    b.gamma1 = j.value("gamma1", b.gamma1);
    if (j.contains("top_k")) {
        const long long k = j.at("top_k").get<long long>();
        if (k < 1) throw ParameterError("bank: top_k must be at least 1");
        b.top_k = static_cast<std::size_t>(k);
    }
    if (j.contains("kernels"))
        for (const auto& k : j.at("kernels")) b.kernels.push_back(kernel_spec_from_json(k));
    if (j.contains("normalize")) {
        const json& n = j.at("normalize");
        check_keys(n, {"trace_one", "frobenius_one"}, "bank.normalize");
        b.trace_one = n.value("trace_one", b.trace_one);
        b.frobenius_one = n.value("frobenius_one", b.frobenius_one);
    }
    b.center = j.value("center", b.center);
    b.validate();
    return b;
    });
}

KernelSpec kernel_spec_from_json(const json& j) {
    return guarded([&]() -> KernelSpec {
        check_keys(j, {"kind", "gamma", "offset", "feature_index"}, "kernel");
        const std::string kind = j.at("kind").get<std::string>();
        KernelSpec s;
        if (kind == "gaussian") s = GaussianKernel{j.value("gamma", 1.0)};
        else if (kind == "linear") s = LinearKernel{j.value("offset", 0.0)};
        else if (kind == "rank_one") {
            const long long f = j.at("feature_index").get<long long>();
            if (f < 0) throw ParameterError("rank_one: feature index must be non-negative");
            s = RankOneKernel{static_cast<std::size_t>(f)};
        } else
            throw ParameterError("unknown kernel kind '" + kind + "'");
        validate(s);
        return s;
    });
}

FiniteDistribution distribution_from_json(const json& j) {
    return guarded([&] {
        check_keys(j, {"two_point", "atoms"}, "distribution");
        if (j.contains("two_point")) {
            const json& t = j.at("two_point");
            check_keys(t, {"alpha", "label_noise"}, "two_point");
            return FiniteDistribution::two_point(t.value("alpha", 0.5), t.value("label_noise", 0.0));
        }
        std::vector<Atom> atoms;
        for (const auto& a : j.at("atoms")) {
            check_keys(a, {"point", "label", "mass"}, "atom");
            const auto p = a.at("point").get<std::vector<double>>();
            atoms.push_back({Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size())),
                             a.at("label").get<double>(), a.at("mass").get<double>()});
        }
        return FiniteDistribution(std::move(atoms));
    });
}

ExperimentConfig experiment_config_from_json(const json& j, const std::string& base_dir) {
    return guarded([&] {
        check_keys(j,
                   {"dataset", "bank", "method", "q", "task", "folds", "lambda_grid", "Lambda_grid",
                    "onestage_gamma_grids", "seed", "svm", "Lambda", "lambda"},
                   "experiment config");
        ExperimentConfig c;
        const Task task = task_from_string(j.value("task", std::string("classification")));
        c.dataset = dataset_config_from_json(j.at("dataset"), base_dir, task);
        if (j.contains("bank")) c.bank = bank_config_from_json(j.at("bank"));
        c.method = method_from_string(j.value("method", std::string("alignf")));
        c.q = j.value("q", c.q);
        c.folds = j.value("folds", c.folds);
        c.lambda_grid = double_list(j, "lambda_grid", c.lambda_grid);
        c.Lambda_grid = double_list(j, "Lambda_grid", c.Lambda_grid);
        // Single values for the weights command.
        if (j.contains("Lambda")) c.Lambda_grid = {j.at("Lambda").get<double>()};
        if (j.contains("lambda")) c.lambda_grid = {j.at("lambda").get<double>()};
        if (j.contains("onestage_gamma_grids")) {
            const json& g = j.at("onestage_gamma_grids");
            check_keys(g, {"gamma", "gamma_prime", "gamma_dprime"}, "onestage_gamma_grids");
            c.onestage_grids.gamma = double_list(g, "gamma", c.onestage_grids.gamma);
            c.onestage_grids.gamma_prime = double_list(g, "gamma_prime", c.onestage_grids.gamma_prime);
            c.onestage_grids.gamma_dprime = double_list(g, "gamma_dprime", c.onestage_grids.gamma_dprime);
        }
        c.seed = j.value("seed", c.seed);
        if (j.contains("svm")) {
            check_keys(j.at("svm"), {"add_bias"}, "svm");
            c.svm_bias = j.at("svm").value("add_bias", false);
        }
        c.validate();
        return c;
    });
}

json to_json(const ExperimentRun& run) {
    json folds = json::array();
    for (const auto& f : run.fold_results) {
        folds.push_back({{"fold", f.fold},
                         {"n_train", f.n_train},
                         {"n_validation", f.n_validation},
                         {"n_test", f.n_test},
                         {"test_error", f.test_error},
                         {"validation_error", f.validation_error},
                         {"train_alignment", f.train_alignment},
                         {"Lambda", f.Lambda},
                         {"reg", f.reg},
                         {"gamma", opt(f.gamma)},
                         {"gamma_prime", opt(f.gamma_prime)},
                         {"gamma_dprime", opt(f.gamma_dprime)},
                         {"mu", f.mu},
                         {"unif_alignment", opt(f.unif_alignment)},
                         {"alignf_alignment", opt(f.alignf_alignment)}});
    }
    json j = {{"spec_version", run.spec_version},
              {"dataset", run.dataset},
              {"method", run.method},
              {"task", run.task},
              {"folds", run.folds},
              {"seed", run.seed},
              {"kernels", run.kernels},
              {"fold_results", folds},
              {"summary",
               {{"mean_error", run.mean_error},
                {"std_error", run.std_error},
                {"mean_alignment", run.mean_alignment},
                {"std_alignment", run.std_alignment}}}};
    if (run.wall_clock_seconds) j["wall_clock_seconds"] = *run.wall_clock_seconds;
    return j;
}

ExperimentRun experiment_run_from_json(const json& j) {
    return guarded([&] {
        ExperimentRun r;
        r.spec_version = j.at("spec_version").get<std::string>();
        r.dataset = j.at("dataset").get<std::string>();
        r.method = j.at("method").get<std::string>();
        r.task = j.at("task").get<std::string>();
        r.folds = j.at("folds").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.kernels = j.at("kernels").get<std::vector<std::string>>();
        for (const auto& f : j.at("fold_results")) {
            FoldRecord rec;
            rec.fold = f.at("fold").get<int>();
            rec.n_train = f.at("n_train").get<std::size_t>();
            rec.n_validation = f.at("n_validation").get<std::size_t>();
            rec.n_test = f.at("n_test").get<std::size_t>();
            rec.test_error = f.at("test_error").get<double>();
            rec.validation_error = f.at("validation_error").get<double>();
            rec.train_alignment = f.at("train_alignment").get<double>();
            rec.Lambda = f.at("Lambda").get<double>();
            rec.reg = f.at("reg").get<double>();
            rec.gamma = opt_from(f, "gamma");
            rec.gamma_prime = opt_from(f, "gamma_prime");
            rec.gamma_dprime = opt_from(f, "gamma_dprime");
            rec.mu = f.at("mu").get<std::vector<double>>();
            rec.unif_alignment = opt_from(f, "unif_alignment");
            rec.alignf_alignment = opt_from(f, "alignf_alignment");
            r.fold_results.push_back(std::move(rec));
        }
        const json& s = j.at("summary");
        r.mean_error = s.at("mean_error").get<double>();
        r.std_error = s.at("std_error").get<double>();
        r.mean_alignment = s.at("mean_alignment").get<double>();
        r.std_alignment = s.at("std_alignment").get<double>();
        r.wall_clock_seconds = opt_from(j, "wall_clock_seconds");
        if (static_cast<int>(r.fold_results.size()) != r.folds)
            throw InputError("run: fold count does not match fold_results");
        return r;
    });
}

json to_json(const CorrelationReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"kernel", r.name}, {"accuracy", r.accuracy}, {"centered", r.centered},
                        {"uncentered", r.uncentered}});
    return {{"spec_version", kSchemaVersion}, {"folds", rep.folds}, {"seed", rep.seed}, {"kernels", rows},
            {"corr_accuracy_centered", opt(rep.corr_centered)},
            {"corr_accuracy_uncentered", opt(rep.corr_uncentered)}};
}

json to_json(const TTestResult& t) {
    return {{"spec_version", kSchemaVersion}, {"n", t.n}, {"mean_diff", t.mean_diff}, {"sd_diff", t.sd_diff},
            {"t", opt(t.t)}, {"p_value", opt(t.p_value)}, {"significant", t.significant},
            {"inconclusive", t.inconclusive}};
}

json to_json(const WeightsReport& w) {
    return {{"spec_version", kSchemaVersion}, {"method", w.method}, {"kernels", w.kernels}, {"mu", w.mu},
            {"alignment", w.alignment}};
}

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

std::string to_csv(const ExperimentRun& run) {
    std::ostringstream os;
    os << "fold,test_error,validation_error,train_alignment,Lambda,reg\n";
    for (const auto& f : run.fold_results)
        os << f.fold << ',' << num(f.test_error) << ',' << num(f.validation_error) << ',' << num(f.train_alignment)
           << ',' << num(f.Lambda) << ',' << num(f.reg) << '\n';
    os << "mean," << num(run.mean_error) << ",," << num(run.mean_alignment) << ",,\n";
    os << "std," << num(run.std_error) << ",," << num(run.std_alignment) << ",,\n";
    return os.str();
}

std::string to_csv(const CorrelationReport& rep) {
    std::ostringstream os;
    os << "kernel,accuracy,centered,uncentered\n";
    for (const auto& r : rep.rows)
        os << '"' << r.name << "\"," << num(r.accuracy) << ',' << num(r.centered) << ',' << num(r.uncentered) << '\n';
    os << "corr,," << num(rep.corr_centered) << ',' << num(rep.corr_uncentered) << '\n';
    return os.str();
}

// ---------------------------------------------------------------- theory

namespace {

Report theory_concentration(const json& j) {
    check_keys(j, {"distribution", "kernel", "R2", "Rp2", "delta", "sample_sizes", "trials", "seed"}, "concentration");
    ConcentrationConfig c;
    c.dist = distribution_from_json(j.at("distribution"));
    if (j.contains("kernel")) c.kernel = kernel_spec_from_json(j.at("kernel"));
    c.R2 = j.value("R2", 0.0);
    c.Rp2 = j.value("Rp2", 0.0);
    c.delta = j.value("delta", c.delta);
    if (j.contains("sample_sizes")) c.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    const auto rep = concentration_trial(c);
    Report out;
    json rows = json::array();
    std::ostringstream csv;
    csv << "m,bound,coverage,median_error,mean_error,max_error,degenerate_trials,expectation_bias,bias_bound\n";
    for (const auto& r : rep.rows) {
        rows.push_back({{"m", r.m}, {"bound", r.bound}, {"coverage", r.coverage}, {"median_error", r.median_error},
                        {"mean_error", r.mean_error}, {"max_error", r.max_error},
                        {"degenerate_trials", r.degenerate_trials}, {"expectation_bias", r.expectation_bias},
                        {"bias_bound", r.bias_bound}});
        csv << r.m << ',' << num(r.bound) << ',' << num(r.coverage) << ',' << num(r.median_error) << ','
            << num(r.mean_error) << ',' << num(r.max_error) << ',' << r.degenerate_trials << ','
            << num(r.expectation_bias) << ',' << num(r.bias_bound) << '\n';
    }
    out.json = {{"spec_version", kSchemaVersion}, {"rho", rep.rho}, {"beta", rep.beta}, {"R2", rep.R2},
                {"Rp2", rep.Rp2}, {"delta", rep.delta}, {"trials", rep.trials}, {"seed", rep.seed},
                {"rows", rows}};
    out.csv = csv.str();
    return out;
}

Report theory_perturbation(const json& j) {
    check_keys(j, {"distribution", "kernel", "m", "trials", "seed"}, "perturbation");
    const auto dist = distribution_from_json(j.at("distribution"));
    const KernelSpec k = j.contains("kernel") ? kernel_spec_from_json(j.at("kernel")) : KernelSpec{LinearKernel{1.0}};
    const auto rep = perturbation_check(dist, k, j.value("m", std::size_t{50}), j.value("trials", 1000),
                                        j.value("seed", std::uint64_t{1}));
    Report out;
    out.json = {{"spec_version", kSchemaVersion}, {"m", rep.m}, {"trials", rep.trials},
                {"violations", rep.violations}, {"bound", rep.bound}, {"max_ratio", rep.max_ratio},
                {"seed", rep.seed}};
    out.csv = "m,trials,violations,bound,max_ratio\n" + std::to_string(rep.m) + ',' + std::to_string(rep.trials) +
              ',' + std::to_string(rep.violations) + ',' + num(rep.bound) + ',' + num(rep.max_ratio) + '\n';
    return out;
}

Report theory_predictor(const json& j, const std::string& base_dir) {
    check_keys(j, {"dataset", "task", "bank"}, "predictor");
    const Task task = task_from_string(j.value("task", std::string("classification")));
    Sample s = load_dataset(dataset_config_from_json(j.at("dataset"), base_dir, task));
    BankConfig bc = j.contains("bank") ? bank_config_from_json(j.at("bank")) : BankConfig{};
    Vector y = s.labels;
    if (task == Task::Regression) y = normalize_regression_labels(y);
    json rows = json::array();
    std::ostringstream csv;
    csv << "kernel,rho_hat,gamma_hat,gamma_effective,identity,error,bound,holds,rho_u,R2_hat,g_error,g_bound,g_holds\n";
    for (const auto& spec : bank_specs(s, bc)) {
        const GramMatrix K = gram(spec, s);
        const auto d = predictor_diagnostics(K, y, task);
        json row = {{"kernel", describe(spec)}, {"rho_hat", d.rho_hat}, {"gamma_hat", d.gamma_hat},
                    {"gamma_effective", d.gamma_effective}, {"identity_value", d.identity_value},
                    {"empirical_error", d.empirical_error}, {"bound", d.bound_value}, {"holds", d.holds}};
        csv << '"' << describe(spec) << "\"," << num(d.rho_hat) << ',' << num(d.gamma_hat) << ','
            << num(d.gamma_effective) << ',' << num(d.identity_value) << ',' << num(d.empirical_error) << ','
            << num(d.bound_value) << ',' << (d.holds ? 1 : 0);
        if (task == Task::Classification) {
            const auto g = g_star_diagnostics(K, y);
            row["g_star"] = {{"rho_u", g.rho_u}, {"R2_hat", g.R2_hat}, {"empirical_error", g.empirical_error},
                             {"bound", g.bound_value}, {"holds", g.holds}};
            csv << ',' << num(g.rho_u) << ',' << num(g.R2_hat) << ',' << num(g.empirical_error) << ','
                << num(g.bound_value) << ',' << (g.holds ? 1 : 0) << '\n';
        } else {
            csv << ",,,,,\n";
        }
        rows.push_back(row);
    }
    Report out;
    out.json = {{"spec_version", kSchemaVersion}, {"task", to_string(task)}, {"sample_analogue", true},
                {"rows", rows}};
    out.csv = csv.str();
    return out;
}

Report theory_stability(const json& j, const std::string& base_dir) {
    check_keys(j, {"dataset", "task", "bank", "trials", "seed", "tol", "flip_label", "Lambda1"}, "stability");
    const Task task = task_from_string(j.value("task", std::string("classification")));
    const Sample s = load_dataset(dataset_config_from_json(j.at("dataset"), base_dir, task));
    const BankConfig bc = j.contains("bank") ? bank_config_from_json(j.at("bank")) : BankConfig{};
    const auto specs = bank_specs(s, bc);
    const int trials = j.value("trials", 100);
    const std::uint64_t seed = j.value("seed", std::uint64_t{1});
    const double tol = j.value("tol", 1e-10);
    const bool flip = j.value("flip_label", false);
    const double L1 = j.value("Lambda1", 1.0);
    if (trials < 1) throw ParameterError("stability: trials must be positive");

    std::ostringstream csv;
    csv << "trial,index,replacement,lhs,rhs,slack,holds,identity_residual,m2_ratio\n";
    int holds = 0;
    double min_slack = std::numeric_limits<double>::infinity(), max_resid = 0.0, max_m2 = 0.0;
    const double knorm = bc.trace_one ? group_norm(build_bank(s, bc), 0.0) : 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(trial_seed(seed, static_cast<std::uint64_t>(t)));
        const auto i = static_cast<std::size_t>(uniform_below(rng, s.size()));
        const auto r = static_cast<std::size_t>(uniform_below(rng, s.size()));
        double label = s.labels[static_cast<Eigen::Index>(r)];
        if (flip) label = -label;
        const Vector point = s.points.row(static_cast<Eigen::Index>(r)).transpose();
        StabilityProbe pr;
        try {
            pr = qp_stability_check(s, specs, bc.trace_one, i, point, label, tol);
        } catch (const DegenerateKernel&) {
            continue;  // the replacement collapsed a kernel; nothing to compare
        }
        if (pr.holds) ++holds;
        min_slack = std::min(min_slack, pr.slack);
        double resid = 0.0, m2 = 0.0;
        if (pr.v.norm() > 0.0 && pr.v_prime.norm() > 0.0) {
            resid = delta_mu_identity(pr.v, pr.v_prime);
            const Vector dmu = L1 * (pr.v_prime / pr.v_prime.lpNorm<1>() - pr.v / pr.v.lpNorm<1>());
            m2 = dmu.lpNorm<1>() * knorm / (2.0 * L1);
        }
        max_resid = std::max(max_resid, resid);
        max_m2 = std::max(max_m2, m2);
        csv << t << ',' << i << ',' << r << ',' << num(pr.lhs) << ',' << num(pr.rhs) << ',' << num(pr.slack) << ','
            << (pr.holds ? 1 : 0) << ',' << num(resid) << ',' << num(m2) << '\n';
    }
    Report out;
    out.json = {{"spec_version", kSchemaVersion}, {"trials", trials}, {"holds", holds},
                {"min_slack", std::isfinite(min_slack) ? json(min_slack) : json(nullptr)},
                {"slack_floor", -10.0 * tol}, {"max_identity_residual", max_resid},
                {"max_m2_ratio", bc.trace_one ? json(max_m2) : json(nullptr)}, {"seed", seed}};
    out.csv = csv.str();
    return out;
}

Report theory_genbound(const json& j) {
    check_keys(j, {"Lambda1", "lambda0", "R2", "M", "delta_mu_norm", "K_group_norm", "sample_sizes", "delta",
                   "empirical_risk", "seed"},
               "genbound");
    GenBoundInputs in;
    in.Lambda1 = j.value("Lambda1", 1.0);
    in.lambda0 = j.value("lambda0", 1.0);
    in.R2 = j.value("R2", 1.0);
    in.M_label = j.value("M", 1.0);
    in.delta_mu_norm = j.value("delta_mu_norm", 0.0);
    in.K_group_norm = j.value("K_group_norm", 0.0);
    const double delta = j.value("delta", 0.05);
    const double risk = j.value("empirical_risk", 0.0);
    const auto ms = j.contains("sample_sizes") ? j.at("sample_sizes").get<std::vector<std::size_t>>()
                                               : std::vector<std::size_t>{100, 1000, 10000, 100000};
    json rows = json::array();
    std::ostringstream csv;
    csv << "m,M1,M2,M2_simplified,sqrt_term,bound,bound_simplified\n";
    for (auto m : ms) {
        const auto g = generalization_bound_value(in, m, delta, risk);
        rows.push_back({{"m", m}, {"M1", g.M1}, {"M2", g.M2}, {"M2_simplified", g.M2_simplified},
                        {"sqrt_term", g.sqrt_term}, {"bound", g.bound}, {"bound_simplified", g.bound_simplified}});
        csv << m << ',' << num(g.M1) << ',' << num(g.M2) << ',' << num(g.M2_simplified) << ',' << num(g.sqrt_term)
            << ',' << num(g.bound) << ',' << num(g.bound_simplified) << '\n';
    }
    Report out;
    out.json = {{"spec_version", kSchemaVersion}, {"delta", delta}, {"rows", rows}};
    out.csv = csv.str();
    return out;
}

Report theory_curve(const json& j) {
    check_keys(j, {"alphas", "seed"}, "curve");
    std::vector<double> alphas;
    if (j.contains("alphas")) alphas = j.at("alphas").get<std::vector<double>>();
    else
        for (int i = 1; i <= 19; ++i) alphas.push_back(i * 0.05);
    json rows = json::array();
    std::ostringstream csv;
    csv << "alpha,uncentered,centered\n";
    for (const auto& p : two_point_curve(alphas)) {
        rows.push_back({{"alpha", p.alpha}, {"uncentered", p.uncentered}, {"centered", p.centered}});
        csv << num(p.alpha) << ',' << num(p.uncentered) << ',' << num(p.centered) << '\n';
    }
    Report out;
    out.json = {{"spec_version", kSchemaVersion}, {"rows", rows}};
    out.csv = csv.str();
    return out;
}

}  // namespace

Report run_theory(const std::string& kind, const json& cfg, const std::string& base_dir) {
    return guarded([&] {
        if (kind == "concentration") return theory_concentration(cfg);
        if (kind == "perturbation") return theory_perturbation(cfg);
        if (kind == "predictor") return theory_predictor(cfg, base_dir);
        if (kind == "stability") return theory_stability(cfg, base_dir);
        if (kind == "genbound") return theory_genbound(cfg);
        if (kind == "curve") return theory_curve(cfg);
        throw ParameterError("unknown theory check '" + kind + "'");
    });
}

}  // namespace calign
