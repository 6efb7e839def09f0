#pragma once

#include "calign/alignment.hpp"

#include <vector>

namespace calign {

enum class NormKind { L1, L2 };

const char* to_string(NormKind kind);

// Non-negative kernel combination weights, scaled so that
// ||mu||_{norm_kind} = radius.
struct MixtureWeights {
    Vector mu;
    NormKind norm_kind = NormKind::L1;
    double radius = 1.0;

    // Rescales `direction` (non-negative, non-zero) onto the given sphere.
    static MixtureWeights scaled(const Vector& direction, NormKind kind, double radius);
    MixtureWeights rescaled(NormKind kind, double radius) const;
};

// min_{v >= 0} v^T M v - 2 v^T a
struct NnqpProblem {
    Matrix M;
    Vector a;

    double objective(const Vector& v) const { return v.dot(M * v) - 2.0 * v.dot(a); }
    Vector gradient(const Vector& v) const { return 2.0 * (M * v - a); }
    // max_k |min(v_k, grad_k)|
    double kkt_residual(const Vector& v) const;
};

struct NnqpResult {
    Vector v;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int sweeps = 0;
    // Objective after each sweep (and after each accepted subspace solve).
    std::vector<double> objective_trace;
};

struct NnqpOptions {
    double tol = 1e-10;
    // <= 0 means 100 p^2 sweeps.
    int max_sweeps = 0;
    // When the sweeps run out, try an active-set solve before giving up.
    bool active_set_fallback = true;
};

// Cyclic coordinate descent with exact coordinate minimization, plus a
// free-set solve on the current support after each sweep that is kept only
// when it is feasible and does not increase the objective. Throws
// NonConverged (best iterate, residual) when the sweep budget and the
// active-set fallback both fail.
NnqpResult nnqp_solve(const NnqpProblem& prob, const NnqpOptions& opts = {});

// mu_k proportional to rho(K_k, K_Y), then ||mu||_1 = radius.
MixtureWeights align_weights(const BaseKernelBank& bank, const Vector& y, double radius = 1.0);

// mu_k proportional to score_k^{1/(q-1)}; q > 1.
MixtureWeights lq_from_scores(const Vector& scores, double q, double radius = 1.0,
                              NormKind kind = NormKind::L1);
// q -> 1 limit: all weight on the largest score, lowest index on ties.
MixtureWeights argmax_from_scores(const Vector& scores, double radius = 1.0,
                                  NormKind kind = NormKind::L1);

// Uses <K_kc, K_Y> as the score. Requires ||K_kc||_F = 1 (to 1e-8) for
// every base kernel.
MixtureWeights lq_weights(const BaseKernelBank& bank, const Vector& y, double q, double radius = 1.0,
                          NormKind kind = NormKind::L1);
MixtureWeights lq_argmax_weights(const BaseKernelBank& bank, const Vector& y, double radius = 1.0,
                                 NormKind kind = NormKind::L1);

struct AlignfResult {
    MixtureWeights weights;
    Vector v;               // QP solution
    AlignmentSystem system;
    double alignment = 0.0; // achieved rho(K_mu, y y^T)
    NnqpResult qp;
};

AlignfResult alignf(const BaseKernelBank& bank, const Vector& y, NormKind kind = NormKind::L2,
                    double radius = 1.0, const NnqpOptions& opts = {});
// Same from a precomputed system.
AlignfResult alignf(const AlignmentSystem& sys, const Vector& y, NormKind kind = NormKind::L2,
                    double radius = 1.0, const NnqpOptions& opts = {});

MixtureWeights alignf_weights(const BaseKernelBank& bank, const Vector& y, NormKind kind = NormKind::L2,
                              double radius = 1.0);

struct LinearCombination {
    Vector mu;          // unit L2, signs unconstrained
    double mu_dot_a = 0.0;
};

// M^{-1} a / ||M^{-1} a||. Throws SingularSystem when
// lambda_min(M) <= 1e-10 Tr[M].
LinearCombination linear_combination_weights(const AlignmentSystem& sys);
LinearCombination linear_combination_weights(const BaseKernelBank& bank, const Vector& y);

// ||v||_M = sqrt(v^T M v).
double rho0_of_solution(const Vector& v, const Matrix& M);

}  // namespace calign
