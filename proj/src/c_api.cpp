#include "calign/calign.h"

#include "calign/harness.hpp"
#include "calign/two_stage.hpp"

#include <chrono>
#include <cmath>
#include <new>
#include <string>

struct calign_result {
    std::string json;
    std::string csv;
};

struct calign_sample {
    calign::Sample sample;
};

struct calign_bank {
    calign::BaseKernelBank bank;
};

namespace {

thread_local std::string g_last_error;

calign_status status_of(calign::ErrorKind kind) {
    using calign::ErrorKind;
    switch (kind) {
    case ErrorKind::Input: return CALIGN_E_INPUT;
    case ErrorKind::Dimension: return CALIGN_E_DIMENSION;
    case ErrorKind::Parameter: return CALIGN_E_PARAMETER;
    case ErrorKind::DegenerateKernel: return CALIGN_E_DEGENERATE_KERNEL;
    case ErrorKind::NoSignal: return CALIGN_E_NO_SIGNAL;
    case ErrorKind::SingularSystem: return CALIGN_E_SINGULAR;
    case ErrorKind::NonConverged: return CALIGN_E_NONCONVERGED;
    case ErrorKind::Numeric: return CALIGN_E_NUMERIC;
    }
    return CALIGN_E_INTERNAL;
}

// Runs f, translating every exception into a status and message.
template <class F>
calign_status guard(F&& f) {
    g_last_error.clear();
    try {
        f();
        return CALIGN_OK;
    } catch (const calign::NonConverged& e) {
        g_last_error = std::string(e.what()) + " (residual " + std::to_string(e.residual()) + ")";
        return CALIGN_E_NONCONVERGED;
    } catch (const calign::DegenerateKernel& e) {
        g_last_error = e.what();
        if (!e.indices().empty()) {
            g_last_error += " [kernels";
            for (auto i : e.indices()) g_last_error += " " + std::to_string(i);
            g_last_error += "]";
        }
        return CALIGN_E_DEGENERATE_KERNEL;
    } catch (const calign::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = std::string("config: ") + e.what();
        return CALIGN_E_INPUT;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return CALIGN_E_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CALIGN_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return CALIGN_E_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw calign::ParameterError(what);
}

nlohmann::json parse_config(const char* text) {
    require(text != nullptr, "config text is null");
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw calign::ParseError("<config>", 0, e.what());
    }
}

std::string dir_of(const char* base_dir) { return base_dir ? std::string(base_dir) : std::string(); }

calign::Matrix square_from(const double* data, std::size_t m) {
    calign::Matrix K(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i * m + j];
    return K;
}

void emit(calign_result** out, std::string json, std::string csv = {}) {
    *out = new calign_result{std::move(json), std::move(csv)};
}

}  // namespace

extern "C" {

const char* calign_last_error(void) { return g_last_error.c_str(); }

const char* calign_status_name(calign_status status) {
    switch (status) {
    case CALIGN_OK: return "ok";
    case CALIGN_E_INPUT: return "input error";
    case CALIGN_E_DIMENSION: return "dimension mismatch";
    case CALIGN_E_PARAMETER: return "invalid parameter";
    case CALIGN_E_DEGENERATE_KERNEL: return "degenerate kernel";
    case CALIGN_E_NO_SIGNAL: return "no signal";
    case CALIGN_E_SINGULAR: return "singular system";
    case CALIGN_E_NONCONVERGED: return "not converged";
    case CALIGN_E_NUMERIC: return "numeric failure";
    case CALIGN_E_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* calign_schema_version(void) { return calign::kSchemaVersion; }

const char* calign_result_json(const calign_result* r) { return r ? r->json.c_str() : ""; }
const char* calign_result_csv(const calign_result* r) { return r ? r->csv.c_str() : ""; }
void calign_result_free(calign_result* r) { delete r; }

calign_status calign_run_cv(const char* config_json, const char* base_dir, int threads, int timing,
                            calign_result** out) {
    return guard([&] {
        require(out != nullptr, "output pointer is null");
        const auto cfg = calign::experiment_config_from_json(parse_config(config_json), dir_of(base_dir));
        const auto t0 = std::chrono::steady_clock::now();
        auto run = calign::run_cv(cfg, threads);
        if (timing)
            run.wall_clock_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        emit(out, calign::to_json(run).dump(2), calign::to_csv(run));
    });
}

calign_status calign_run_correlation(const char* config_json, const char* base_dir, int threads,
                                     calign_result** out) {
    return guard([&] {
        require(out != nullptr, "output pointer is null");
        const auto cfg = calign::experiment_config_from_json(parse_config(config_json), dir_of(base_dir));
        const auto sample = calign::load_dataset(cfg.dataset);
        const auto bank = calign::build_bank(sample, cfg.bank);
        // The uncentered alignment must see uncentered matrices.
        auto raw_cfg = cfg.bank;
        raw_cfg.center = false;
        raw_cfg.frobenius_one = false;
        const auto raw = calign::build_bank(sample, raw_cfg);
        const auto rep = calign::correlation_report(sample, bank, cfg.folds, cfg.seed, cfg.lambda_grid.front(),
                                                    threads, &raw);
        emit(out, calign::to_json(rep).dump(2), calign::to_csv(rep));
    });
}

calign_status calign_learn_weights(const char* config_json, const char* base_dir, calign_result** out) {
    return guard([&] {
        require(out != nullptr, "output pointer is null");
        const auto cfg = calign::experiment_config_from_json(parse_config(config_json), dir_of(base_dir));
        const auto w = calign::learn_weights(cfg, calign::load_dataset(cfg.dataset));
        emit(out, calign::to_json(w).dump(2));
    });
}

calign_status calign_run_theory(const char* kind, const char* config_json, const char* base_dir,
                                calign_result** out) {
    return guard([&] {
        require(out != nullptr && kind != nullptr, "null argument");
        auto rep = calign::run_theory(kind, parse_config(config_json), dir_of(base_dir));
        emit(out, rep.json.dump(2), std::move(rep.csv));
    });
}

calign_status calign_paired_ttest(const double* a, const double* b, std::size_t n, double level,
                                  calign_result** out) {
    return guard([&] {
        require(out != nullptr && (n == 0 || (a && b)), "null argument");
        const auto t = calign::paired_ttest(std::vector<double>(a, a + n), std::vector<double>(b, b + n), level);
        emit(out, calign::to_json(t).dump(2));
    });
}

calign_status calign_centered_alignment(const double* K, const double* K_other, std::size_t m, double* out) {
    return guard([&] {
        require(K && K_other && out, "null argument");
        require(m >= 2, "matrices must be at least 2 x 2");
        *out = calign::centered_alignment(calign::GramMatrix(square_from(K, m)),
                                          calign::GramMatrix(square_from(K_other, m)));
    });
}

calign_status calign_nnqp(const double* M, const double* a, std::size_t p, double* v_out, double* residual_out) {
    return guard([&] {
        require(M && a && v_out, "null argument");
        require(p >= 1, "empty problem");
        calign::NnqpProblem prob;
        prob.M = square_from(M, p);
        prob.a = Eigen::Map<const calign::Vector>(a, static_cast<Eigen::Index>(p));
        const auto r = calign::nnqp_solve(prob);
        for (std::size_t k = 0; k < p; ++k) v_out[k] = r.v[static_cast<Eigen::Index>(k)];
        if (residual_out) *residual_out = r.kkt_residual;
    });
}

calign_status calign_alignf(const double* kernels, std::size_t p, std::size_t m, const double* y, int norm_l1,
                            double radius, double* mu_out) {
    return guard([&] {
        require(kernels && y && mu_out, "null argument");
        require(p >= 1 && m >= 2, "need at least one kernel over two points");
        std::vector<calign::GramMatrix> ks;
        for (std::size_t k = 0; k < p; ++k) ks.emplace_back(square_from(kernels + k * m * m, m));
        const calign::BaseKernelBank bank(std::move(ks));
        const calign::Vector yv = Eigen::Map<const calign::Vector>(y, static_cast<Eigen::Index>(m));
        const auto r = calign::alignf(bank, yv, norm_l1 ? calign::NormKind::L1 : calign::NormKind::L2, radius);
        for (std::size_t k = 0; k < p; ++k) mu_out[k] = r.weights.mu[static_cast<Eigen::Index>(k)];
    });
}

calign_status calign_sample_load(const char* dataset_json, const char* base_dir, calign_sample** out) {
    return guard([&] {
        require(out != nullptr, "output pointer is null");
        const auto cfg = calign::dataset_config_from_json(parse_config(dataset_json), dir_of(base_dir));
        *out = new calign_sample{calign::load_dataset(cfg)};
    });
}

std::size_t calign_sample_size(const calign_sample* s) { return s ? s->sample.size() : 0; }
std::size_t calign_sample_dim(const calign_sample* s) { return s ? s->sample.dim() : 0; }

calign_status calign_sample_labels(const calign_sample* s, double* out) {
    return guard([&] {
        require(s && out, "null argument");
        for (Eigen::Index i = 0; i < s->sample.labels.size(); ++i) out[i] = s->sample.labels[i];
    });
}

void calign_sample_free(calign_sample* s) { delete s; }

calign_status calign_bank_build(const calign_sample* s, const char* bank_json, calign_bank** out) {
    return guard([&] {
        require(s && out, "null argument");
        const auto cfg = bank_json ? calign::bank_config_from_json(parse_config(bank_json)) : calign::BankConfig{};
        *out = new calign_bank{calign::build_bank(s->sample, cfg)};
    });
}

std::size_t calign_bank_size(const calign_bank* b) { return b ? b->bank.size() : 0; }

calign_status calign_bank_kernel(const calign_bank* b, std::size_t k, double* out) {
    return guard([&] {
        require(b && out, "null argument");
        if (k >= b->bank.size()) throw calign::DimensionError("kernel index out of range");
        const auto& K = b->bank[k].entries();
        const auto m = static_cast<std::size_t>(K.rows());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                out[i * m + j] = K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    });
}

calign_status calign_bank_weights(const calign_bank* b, const calign_sample* s, const char* method, double q,
                                  double radius, double* mu_out) {
    return guard([&] {
        require(b && s && method && mu_out, "null argument");
        if (b->bank.sample_size() != s->sample.size()) throw calign::DimensionError("bank and sample sizes differ");
        calign::Vector y = s->sample.labels;
        if (s->sample.task == calign::Task::Regression) y.array() -= y.mean();
        const std::string name = method;
        calign::MixtureWeights w;
        if (name == "unif") w = calign::unif_weights(b->bank.size(), radius);
        else if (name == "align") w = calign::align_weights(b->bank, y, radius);
        else if (name == "alignf") w = calign::alignf(b->bank, y, calign::NormKind::L1, radius).weights;
        else if (name == "lq") w = calign::lq_weights(b->bank, y, q, radius, calign::NormKind::L1);
        else throw calign::ParameterError("unsupported method '" + name + "' for bank weights");
        for (std::size_t k = 0; k < b->bank.size(); ++k) mu_out[k] = w.mu[static_cast<Eigen::Index>(k)];
    });
}

void calign_bank_free(calign_bank* b) { delete b; }

}  // extern "C"
