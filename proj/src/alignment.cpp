#include "calign/alignment.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace calign {

namespace {

// Centered norms below this fraction of the uncentered norm are rounding
// residue of a constant kernel.
constexpr double kDegenerateRel = 1e-12;

void same_shape(const Matrix& A, const Matrix& B, const char* op) {
    if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() != A.cols())
        throw DimensionError(std::string(op) + ": operands must be square and of equal size");
}

}  // namespace

double centered_alignment(const Matrix& K, const Matrix& Kp) {
    same_shape(K, Kp, "centered_alignment");
    const Matrix Kc = center(K);
    const Matrix Kpc = center(Kp);
    const double n1 = Kc.norm();
    const double n2 = Kpc.norm();
    if (!(n1 > kDegenerateRel * K.norm()) || !(n2 > kDegenerateRel * Kp.norm()))
        throw DegenerateKernel("centered_alignment: centered kernel has zero Frobenius norm");
    return frobenius_product(Kc, Kpc) / (n1 * n2);
}

double centered_alignment(const GramMatrix& K, const GramMatrix& Kp) {
    return centered_alignment(K.entries(), Kp.entries());
}

double uncentered_alignment(const Matrix& K, const Matrix& Kp) {
    same_shape(K, Kp, "uncentered_alignment");
    const double n1 = K.norm();
    const double n2 = Kp.norm();
    if (!(n1 > 0.0) || !(n2 > 0.0))
        throw DegenerateKernel("uncentered_alignment: kernel has zero Frobenius norm");
    return frobenius_product(K, Kp) / (n1 * n2);
}

double uncentered_alignment(const GramMatrix& K, const GramMatrix& Kp) {
    return uncentered_alignment(K.entries(), Kp.entries());
}

double unnormalized_alignment(const Matrix& K, const Matrix& Kp) {
    same_shape(K, Kp, "unnormalized_alignment");
    const double m = static_cast<double>(K.rows());
    return frobenius_product(center(K), center(Kp)) / (m * m);
}

double unnormalized_alignment(const GramMatrix& K, const GramMatrix& Kp) {
    return unnormalized_alignment(K.entries(), Kp.entries());
}

AlignmentReport alignment_report(const GramMatrix& K, const GramMatrix& Kp) {
    same_shape(K.entries(), Kp.entries(), "alignment_report");
    AlignmentReport r;
    const Matrix Kc = center(K.entries());
    const Matrix Kpc = center(Kp.entries());
    const double m = static_cast<double>(K.size());
    r.frobenius_numerator = frobenius_product(Kc, Kpc);
    r.norms = {Kc.norm(), Kpc.norm()};
    r.unnormalized = r.frobenius_numerator / (m * m);
    if (!(r.norms.first > kDegenerateRel * K.entries().norm()) ||
        !(r.norms.second > kDegenerateRel * Kp.entries().norm()))
        throw DegenerateKernel("alignment_report: centered kernel has zero Frobenius norm");
    r.centered = r.frobenius_numerator / (r.norms.first * r.norms.second);
    r.uncentered = uncentered_alignment(K.entries(), Kp.entries());
    return r;
}

double target_alignment(const GramMatrix& K, const Vector& y) {
    if (static_cast<std::size_t>(y.size()) != K.size())
        throw DimensionError("target_alignment: label count does not match kernel size");
    return centered_alignment(K.entries(), Matrix(y * y.transpose()));
}

FiniteDistribution::FiniteDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ParameterError("distribution needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms_) {
        if (!(a.mass >= 0.0)) throw ParameterError("distribution masses must be non-negative");
        if (a.point.size() != atoms_.front().point.size())
            throw DimensionError("distribution atoms have differing dimensions");
        if (!a.point.allFinite() || !std::isfinite(a.label))
            throw InputError("distribution atom has non-finite entries");
        total += a.mass;
        cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ParameterError("distribution masses sum to " + std::to_string(total) + ", expected 1");
}

std::size_t FiniteDistribution::atom_for(double u) const {
    const double target = u * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    if (i >= atoms_.size()) i = atoms_.size() - 1;
    // Skip zero-mass atoms that share a cumulative value.
    while (atoms_[i].mass == 0.0 && i + 1 < atoms_.size()) ++i;
    return i;
}

FiniteDistribution FiniteDistribution::two_point(double alpha, double label_noise) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("two_point: alpha must be in [0,1]");
    if (!(label_noise >= 0.0 && label_noise < 0.5))
        throw ParameterError("two_point: label noise must be in [0, 0.5)");
    Vector left(2), right(2);
    left << -1.0, 0.0;
    right << 1.0, 0.0;
    std::vector<Atom> atoms;
    if (label_noise == 0.0) {
        atoms.push_back({left, -1.0, alpha});
        atoms.push_back({right, 1.0, 1.0 - alpha});
    } else {
        atoms.push_back({left, -1.0, alpha * (1.0 - label_noise)});
        atoms.push_back({left, 1.0, alpha * label_noise});
        atoms.push_back({right, 1.0, (1.0 - alpha) * (1.0 - label_noise)});
        atoms.push_back({right, -1.0, (1.0 - alpha) * label_noise});
    }
    return FiniteDistribution(std::move(atoms));
}

PopulationMoments population_moments(const KernelSpec& spec, const FiniteDistribution& dist) {
    validate(spec);
    const auto& atoms = dist.atoms();
    const auto n = static_cast<Eigen::Index>(atoms.size());
    Matrix K(n, n), T(n, n);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        w[i] = atoms[static_cast<std::size_t>(i)].mass;
        for (Eigen::Index j = 0; j < n; ++j) {
            K(i, j) = kernel_value(spec, atoms[static_cast<std::size_t>(i)].point,
                                   atoms[static_cast<std::size_t>(j)].point);
            T(i, j) = atoms[static_cast<std::size_t>(i)].label * atoms[static_cast<std::size_t>(j)].label;
        }
    }
    // Centering in feature space under the distribution:
    // K_c(x,x') = K(x,x') - E_x K(x,x') - E_x' K(x,x') + E K.
    auto centered = [&](const Matrix& A) {
        const Vector marg = A * w;  // E_{x'} A(x, x')
        const double grand = w.dot(marg);
        Matrix C(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) C(i, j) = A(i, j) - marg[i] - marg[j] + grand;
        return C;
    };
    const Matrix Kc = centered(K);
    const Matrix Tc = centered(T);
    auto expect = [&](const Matrix& A, const Matrix& B) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) s += w[i] * w[j] * A(i, j) * B(i, j);
        return s;
    };
    PopulationMoments pm;
    pm.cross = expect(Kc, Tc);
    pm.kernel = expect(Kc, Kc);
    pm.target = expect(Tc, Tc);
    pm.raw_cross = expect(K, T);
    pm.raw_kernel = expect(K, K);
    pm.raw_target = expect(T, T);
    return pm;
}

double population_alignment(const KernelSpec& spec, const FiniteDistribution& dist) {
    const auto pm = population_moments(spec, dist);
    const double scale = std::max(pm.raw_kernel, 1e-300);
    if (!(pm.kernel > 1e-14 * scale))
        throw DegenerateKernel("population_alignment: E[K_c^2] vanishes on the support");
    if (!(pm.target > 1e-14 * std::max(pm.raw_target, 1e-300)))
        throw DegenerateKernel("population_alignment: target kernel has no centered variance");
    return pm.cross / std::sqrt(pm.kernel * pm.target);
}

double population_uncentered_alignment(const KernelSpec& spec, const FiniteDistribution& dist) {
    const auto pm = population_moments(spec, dist);
    if (!(pm.raw_kernel > 0.0) || !(pm.raw_target > 0.0))
        throw DegenerateKernel("population_uncentered_alignment: zero second moment");
    return pm.raw_cross / std::sqrt(pm.raw_kernel * pm.raw_target);
}

AlignmentSystem alignment_system(const BaseKernelBank& bank, const Vector& y) {
    const std::size_t p = bank.size();
    if (p == 0) throw ParameterError("alignment_system: empty bank");
    if (static_cast<std::size_t>(y.size()) != bank.sample_size())
        throw DimensionError("alignment_system: label count does not match bank sample size");
    std::vector<Matrix> centered;
    centered.reserve(p);
    std::vector<std::size_t> degenerate;
    for (std::size_t k = 0; k < p; ++k) {
        centered.push_back(center(bank[k].entries()));
        if (!(centered.back().norm() > kDegenerateRel * bank[k].entries().norm())) degenerate.push_back(k);
    }
    if (!degenerate.empty())
        throw DegenerateKernel("alignment_system: degenerate centered base kernel", degenerate);
    const Matrix target = y * y.transpose();
    AlignmentSystem sys;
    const auto P = static_cast<Eigen::Index>(p);
    sys.a.resize(P);
    sys.M.resize(P, P);
    for (Eigen::Index k = 0; k < P; ++k) {
        sys.a[k] = frobenius_product(centered[static_cast<std::size_t>(k)], target);
        for (Eigen::Index l = 0; l <= k; ++l) {
            const double v = frobenius_product(centered[static_cast<std::size_t>(k)],
                                               centered[static_cast<std::size_t>(l)]);
            sys.M(k, l) = v;
            sys.M(l, k) = v;
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sys.M, Eigen::EigenvaluesOnly);
    sys.min_eigenvalue = eig.eigenvalues().minCoeff();
    return sys;
}

double combined_alignment(const AlignmentSystem& sys, const Vector& mu, const Vector& y) {
    if (mu.size() != sys.a.size()) throw DimensionError("combined_alignment: weight size mismatch");
    const double quad = mu.dot(sys.M * mu);
    if (!(quad > 0.0)) throw DegenerateKernel("combined_alignment: combined centered kernel is zero");
    const Vector yc = y.array() - y.mean();
    const double target_norm = yc.squaredNorm();  // ||(y y^T)_c||_F
    if (!(target_norm > 0.0)) throw DegenerateKernel("combined_alignment: constant labels");
    return mu.dot(sys.a) / (std::sqrt(quad) * target_norm);
}

}  // namespace calign
