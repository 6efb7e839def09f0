#pragma once

#include "calign/data_io.hpp"
#include "calign/predictors.hpp"
#include "calign/theory_bench.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace calign {

inline constexpr const char* kSchemaVersion = "1.0";

enum class Method { Unif, Align, Alignf, L1svm, L2krr, Onestage, Lq };

const char* to_string(Method m);
Method method_from_string(const std::string& name);

struct OneStageGrids {
    std::vector<double> gamma{0.0};
    std::vector<double> gamma_prime{1.0};
    std::vector<double> gamma_dprime{0.0};
};

struct ExperimentConfig {
    DatasetConfig dataset;
    BankConfig bank;
    Method method = Method::Alignf;
    double q = 2.0;  // lq only
    int folds = 5;
    // Second-stage regularization: C for SVM, lambda0 for KRR.
    std::vector<double> lambda_grid{1.0};
    // Mixture radius.
    std::vector<double> Lambda_grid{1.0};
    OneStageGrids onestage_grids;
    std::uint64_t seed = 1;
    bool svm_bias = false;

    Task task() const { return dataset.task; }
    // folds >= 3 (test, validation and at least one training fold), grids
    // non-empty and positive, method compatible with the task.
    void validate() const;
};

struct FoldRecord {
    int fold = 0;
    std::size_t n_train = 0, n_validation = 0, n_test = 0;
    double test_error = 0.0;
    double validation_error = 0.0;
    double train_alignment = 0.0;
    double Lambda = 0.0;
    double reg = 0.0;
    std::optional<double> gamma, gamma_prime, gamma_dprime;
    std::vector<double> mu;
    // Filled for align / alignf runs: the dominance re-check.
    std::optional<double> unif_alignment;
    std::optional<double> alignf_alignment;

    bool operator==(const FoldRecord&) const = default;
};

struct ExperimentRun {
    std::string spec_version = kSchemaVersion;
    std::string dataset;
    std::string method;
    std::string task;
    int folds = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> kernels;
    std::vector<FoldRecord> fold_results;
    double mean_error = 0.0, std_error = 0.0;
    double mean_alignment = 0.0, std_alignment = 0.0;
    std::optional<double> wall_clock_seconds;

    bool operator==(const ExperimentRun&) const = default;
};

// Shuffled assignment of m points to `folds` folds (sizes differ by at most one).
std::vector<int> fold_assignment(std::size_t m, int folds, std::uint64_t seed);

// threads <= 0: MKL_THREADS from the environment, else 1.
int resolve_threads(int threads);

// Rotation r tests on fold r, validates on fold r+1 and trains on the rest.
ExperimentRun run_cv(const ExperimentConfig& cfg, int threads = 0);
// Same on an already loaded sample.
ExperimentRun run_cv(const ExperimentConfig& cfg, const Sample& sample, int threads = 0);

// Weights a method learns on the full sample, at the first grid values.
struct WeightsReport {
    std::string method;
    std::vector<std::string> kernels;
    std::vector<double> mu;
    double alignment = 0.0;
};
WeightsReport learn_weights(const ExperimentConfig& cfg, const Sample& sample);

struct KernelCorrelationRow {
    std::string name;
    double accuracy = 0.0;    // 1 - error, or 1 - RMSE for regression
    double centered = 0.0;    // rho_hat against y y^T
    double uncentered = 0.0;  // A_hat against y y^T
};

struct CorrelationReport {
    std::vector<KernelCorrelationRow> rows;
    std::optional<double> corr_centered;    // Pearson(accuracy, centered); empty if undefined
    std::optional<double> corr_uncentered;  // Pearson(accuracy, uncentered)
    int folds = 0;
    std::uint64_t seed = 0;
};

// Needs p >= 3. Single-kernel accuracy is plain k-fold CV with the given
// second-stage regularization (C or lambda0). The uncentered alignment is
// taken on `uncentered` when given (same kernels before centering), else on
// `bank`.
CorrelationReport correlation_report(const Sample& sample, const BaseKernelBank& bank, int folds,
                                     std::uint64_t seed, double reg = 1.0, int threads = 0,
                                     const BaseKernelBank* uncentered = nullptr);

// Empty when either vector has zero variance.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

struct TTestResult {
    std::size_t n = 0;
    double mean_diff = 0.0;
    double sd_diff = 0.0;
    std::optional<double> t;
    std::optional<double> p_value;  // one-sided, H1: mean(a) > mean(b)
    bool significant = false;
    bool inconclusive = false;
};

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b, double p_level = 0.1);

// JSON forms. Relative dataset paths are resolved against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
nlohmann::json to_json(const ExperimentRun& run);
ExperimentRun experiment_run_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CorrelationReport& rep);
nlohmann::json to_json(const TTestResult& t);
nlohmann::json to_json(const WeightsReport& w);
KernelSpec kernel_spec_from_json(const nlohmann::json& j);
DatasetConfig dataset_config_from_json(const nlohmann::json& j, const std::string& base_dir = "",
                                       Task task = Task::Classification);
BankConfig bank_config_from_json(const nlohmann::json& j);
FiniteDistribution distribution_from_json(const nlohmann::json& j);

// One fold per row plus mean and std rows.
std::string to_csv(const ExperimentRun& run);
std::string to_csv(const CorrelationReport& rep);

// JSON report and a CSV table.
struct Report {
    nlohmann::json json;
    std::string csv;
};

// kind: concentration, perturbation, predictor, stability, genbound, curve.
Report run_theory(const std::string& kind, const nlohmann::json& cfg, const std::string& base_dir = "");

}  // namespace calign
