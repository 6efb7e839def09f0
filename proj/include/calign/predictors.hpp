#pragma once

#include "calign/two_stage.hpp"

#include <vector>

namespace calign {

struct KrrModel {
    Vector alpha;
    double lambda0 = 0.0;
    double effective_lambda = 0.0;  // m * lambda0
    Vector fitted;                  // K alpha on the training rows
};

// alpha = (K + m lambda0 I)^{-1} y.
KrrModel krr_fit(const GramMatrix& K, const Vector& y, double lambda0);
// Same with the ridge given directly (K + ridge I)^{-1} y.
KrrModel krr_fit_ridge(const Matrix& K, const Vector& y, double ridge);

struct SvmOptions {
    double tol = 1e-6;       // projected-gradient stopping threshold
    int max_epochs = 20000;
    // Adds +1 to every kernel entry, which plays the role of an
    // unregularized-ish bias term. Off by default.
    bool add_bias = false;
};

struct SvmModel {
    Vector alpha;   // 0 <= alpha <= C
    Vector labels;  // training labels (+-1)
    double C = 0.0;
    bool add_bias = false;
    std::vector<std::size_t> support;
    double dual_objective = 0.0;  // 2 alpha^T 1 - alpha^T Q alpha
    double duality_gap = 0.0;
    int epochs = 0;
};

// Box-constrained dual coordinate ascent on 2 alpha^T 1 - alpha^T Y K Y alpha,
// no equality constraint. Warm start from `init` when given.
SvmModel svm_fit(const GramMatrix& K, const Vector& y, double C, const SvmOptions& opts = {},
                 const Vector* init = nullptr);
SvmModel svm_fit(const Matrix& K, const Vector& y, double C, const SvmOptions& opts = {},
                 const Vector* init = nullptr);

// K_cross has one row per test point and one column per training point.
Vector predict(const KrrModel& model, const Matrix& K_cross);
Vector decision_values(const SvmModel& model, const Matrix& K_cross);
// sign of the decision value, 0 mapped to +1.
Vector predict(const SvmModel& model, const Matrix& K_cross);

MixtureWeights unif_weights(std::size_t p, double radius);

struct LearnOptions {
    double tol = 1e-6;        // projected-gradient norm
    int max_iter = 500;
    double armijo = 1e-4;
};

struct L1SvmResult {
    MixtureWeights weights;
    SvmModel model;
    std::vector<double> objective_trace;
    int iterations = 0;
};

// min over {mu >= 0, sum mu <= Lambda} of the SVM dual optimum at K_mu.
// Base kernels should be trace-one.
L1SvmResult l1svm_learn(const BaseKernelBank& bank, const Vector& y, double C, double radius,
                        const LearnOptions& opts = {}, const SvmOptions& svm = {});

struct KrrLearnResult {
    MixtureWeights weights;
    KrrModel model;
    std::vector<double> objective_trace;
    int iterations = 0;
};

// min over {mu >= 0, ||mu - mu0||_2 <= Lambda} of y^T (K_mu + m lambda0 I)^{-1} y.
// An empty mu0 means zero.
KrrLearnResult l2krr_learn(const BaseKernelBank& bank, const Vector& y, double lambda0, double radius,
                           const Vector& mu0 = Vector(), const LearnOptions& opts = {});

struct OneStageConfig {
    double gamma = 0.0;
    double gamma_prime = 1.0;
    double gamma_dprime = 0.0;
    int max_outer_iter = 500;
    double tol = 1e-8;

    // Throws ParameterError on negative entries or gamma' = gamma'' = 0.
    void validate() const;
};

// G(mu) = y^T (K_mu + I)^{-1} y - gamma mu^T a + mu^T (gamma'' M + gamma' I) mu.
double onestage_objective(const BaseKernelBank& bank, const AlignmentSystem& sys, const Vector& y,
                          const OneStageConfig& cfg, const Vector& mu);

// Projected gradient on G over mu >= 0, from mu = 0. The returned model
// is the KRR fit at ridge 1 with the learned mu. weights.norm_kind is L2
// and weights.radius is ||mu||_2 (possibly 0).
KrrLearnResult onestage_learn(const BaseKernelBank& bank, const Vector& y, const OneStageConfig& cfg);

// Euclidean projection onto {mu >= 0, sum mu <= radius}.
Vector project_capped_simplex(const Vector& z, double radius);

}  // namespace calign
