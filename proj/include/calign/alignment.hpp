#pragma once

#include "calign/kernel_core.hpp"

#include <utility>
#include <vector>

namespace calign {

struct AlignmentReport {
    double centered = 0.0;
    double uncentered = 0.0;
    double unnormalized = 0.0;
    // <K_c, K'_c>_F
    double frobenius_numerator = 0.0;
    // (||K_c||_F, ||K'_c||_F)
    std::pair<double, double> norms{0.0, 0.0};
};

// <K_c, K'_c> / (||K_c|| ||K'_c||). DegenerateKernel if either centered
// norm is zero.
double centered_alignment(const GramMatrix& K, const GramMatrix& Kp);
double centered_alignment(const Matrix& K, const Matrix& Kp);

// <K, K'> / (||K|| ||K'||), no centering.
double uncentered_alignment(const GramMatrix& K, const GramMatrix& Kp);
double uncentered_alignment(const Matrix& K, const Matrix& Kp);

// (1/m^2) <K_c, K'_c>.
double unnormalized_alignment(const GramMatrix& K, const GramMatrix& Kp);
double unnormalized_alignment(const Matrix& K, const Matrix& Kp);

AlignmentReport alignment_report(const GramMatrix& K, const GramMatrix& Kp);

// Alignment of K with the label kernel y y^T.
double target_alignment(const GramMatrix& K, const Vector& y);

struct Atom {
    Vector point;
    double label = 0.0;
    double mass = 0.0;
};

// Finite-support distribution over labelled points.
class FiniteDistribution {
public:
    FiniteDistribution() = default;
    // Throws ParameterError if a mass is negative, masses do not sum to 1
    // within 1e-12, or points have differing dimensions.
    explicit FiniteDistribution(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    std::size_t dim() const { return atoms_.empty() ? 0 : static_cast<std::size_t>(atoms_.front().point.size()); }

    // Index of the atom selected by a uniform draw u in [0, 1).
    std::size_t atom_for(double u) const;

    // The two-atom example: mass alpha at (-1,0) labelled -1, the rest at
    // (1,0) labelled +1. With `label_noise` > 0 each atom also emits the
    // opposite label with that probability (four atoms in total).
    static FiniteDistribution two_point(double alpha, double label_noise = 0.0);

private:
    std::vector<Atom> atoms_;
    std::vector<double> cumulative_;
};

// Exact population moments of a kernel against the target kernel y y'
// under a finite distribution, by enumeration of all atom pairs.
struct PopulationMoments {
    double cross = 0.0;        // E[K_c K'_c]
    double kernel = 0.0;       // E[K_c^2]
    double target = 0.0;       // E[K'_c^2]
    double raw_cross = 0.0;    // E[K K']
    double raw_kernel = 0.0;   // E[K^2]
    double raw_target = 0.0;   // E[K'^2]
};

PopulationMoments population_moments(const KernelSpec& spec, const FiniteDistribution& dist);

// rho(K, K_Y) computed exactly. DegenerateKernel if E[K_c^2] = 0 or the
// target has no centered variance.
double population_alignment(const KernelSpec& spec, const FiniteDistribution& dist);
// A(K, K_Y), the uncentered counterpart.
double population_uncentered_alignment(const KernelSpec& spec, const FiniteDistribution& dist);

// a_k = <K_kc, y y^T>, M_kl = <K_kc, K_lc>.
struct AlignmentSystem {
    Vector a;
    Matrix M;
    double min_eigenvalue = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(a.size()); }
    // Centered base kernels linearly independent, judged by
    // lambda_min(M) > 1e-10 Tr[M].
    bool independent() const { return min_eigenvalue > 1e-10 * M.trace(); }
};

AlignmentSystem alignment_system(const BaseKernelBank& bank, const Vector& y);

// rho(K_mu, y y^T) from (a, M, ||y y^T_c||) without forming K_mu.
double combined_alignment(const AlignmentSystem& sys, const Vector& mu, const Vector& y);

}  // namespace calign
