#include "calign/two_stage.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace calign {

const char* to_string(NormKind kind) { return kind == NormKind::L1 ? "l1" : "l2"; }

namespace {

double norm_of(const Vector& v, NormKind kind) {
    return kind == NormKind::L1 ? v.lpNorm<1>() : v.norm();
}

}  // namespace

MixtureWeights MixtureWeights::scaled(const Vector& direction, NormKind kind, double radius) {
    if (!(radius > 0.0)) throw ParameterError("mixture radius must be positive");
    if ((direction.array() < -1e-12).any()) throw ParameterError("mixture direction has negative entries");
    const Vector clamped = direction.cwiseMax(0.0);
    const double n = norm_of(clamped, kind);
    if (!(n > 0.0)) throw NoSignal("mixture direction is zero");
    return MixtureWeights{clamped * (radius / n), kind, radius};
}

MixtureWeights MixtureWeights::rescaled(NormKind kind, double r) const {
    return scaled(mu, kind, r);
}

double NnqpProblem::kkt_residual(const Vector& v) const {
    const Vector g = gradient(v);
    double r = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) r = std::max(r, std::abs(std::min(v[k], g[k])));
    return r;
}

namespace {

// Lawson-Hanson on the quadratic form: grow the passive set by the most
// violated coordinate, solve on it, and step back to feasibility when the
// solve leaves the orthant.
Vector nnqp_active_set(const NnqpProblem& prob, int max_outer) {
    const Eigen::Index p = prob.a.size();
    Vector v = Vector::Zero(p);
    std::vector<bool> passive(static_cast<std::size_t>(p), false);
    const double scale = std::max(1.0, prob.a.cwiseAbs().maxCoeff());
    auto solve_passive = [&] {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index k = 0; k < p; ++k)
            if (passive[static_cast<std::size_t>(k)]) idx.push_back(k);
        const auto f = static_cast<Eigen::Index>(idx.size());
        Matrix Mff(f, f);
        Vector af(f);
        for (Eigen::Index r = 0; r < f; ++r) {
            af[r] = prob.a[idx[static_cast<std::size_t>(r)]];
            for (Eigen::Index c = 0; c < f; ++c) Mff(r, c) = prob.M(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
        }
        const Vector zf = Mff.completeOrthogonalDecomposition().solve(af);
        Vector z = Vector::Zero(p);
        for (Eigen::Index r = 0; r < f; ++r) z[idx[static_cast<std::size_t>(r)]] = zf[r];
        return z;
    };
    for (int outer = 0; outer < max_outer; ++outer) {
        const Vector w = prob.a - prob.M * v;
        Eigen::Index best = -1;
        double best_w = 1e-14 * scale;
        for (Eigen::Index k = 0; k < p; ++k)
            if (!passive[static_cast<std::size_t>(k)] && w[k] > best_w) best_w = w[k], best = k;
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner <= p; ++inner) {
            const Vector z = solve_passive();
            bool feasible = true;
            double step = 1.0;
            for (Eigen::Index k = 0; k < p; ++k)
                if (passive[static_cast<std::size_t>(k)] && z[k] <= 0.0) {
                    feasible = false;
                    const double d = v[k] - z[k];
                    if (d > 0.0) step = std::min(step, v[k] / d);
                }
            if (feasible) {
                v = z;
                break;
            }
            v += step * (z - v);
            for (Eigen::Index k = 0; k < p; ++k)
                if (passive[static_cast<std::size_t>(k)] && v[k] <= 1e-15 * (1.0 + v.cwiseAbs().maxCoeff())) {
                    passive[static_cast<std::size_t>(k)] = false;
                    v[k] = 0.0;
                }
        }
    }
    return v;
}

}  // namespace

NnqpResult nnqp_solve(const NnqpProblem& prob, const NnqpOptions& opts) {
    const Eigen::Index p = prob.a.size();
    if (prob.M.rows() != p || prob.M.cols() != p) throw DimensionError("nnqp: M and a sizes differ");
    if (!(opts.tol > 0.0)) throw ParameterError("nnqp: tol must be positive");
    if (!prob.M.allFinite() || !prob.a.allFinite()) throw InputError("nnqp: non-finite problem data");
    for (Eigen::Index k = 0; k < p; ++k) {
        if (prob.M(k, k) < 0.0) throw ParameterError("nnqp: M has a negative diagonal entry");
        if (prob.M(k, k) == 0.0 && prob.a[k] > 0.0)
            throw ParameterError("nnqp: objective unbounded below along coordinate " + std::to_string(k));
    }
    const int max_sweeps = opts.max_sweeps > 0 ? opts.max_sweeps : static_cast<int>(std::max<Eigen::Index>(100 * p * p, 100));

    NnqpResult res;
    res.v = Vector::Zero(p);
    res.objective = 0.0;
    res.objective_trace.push_back(0.0);
    res.kkt_residual = prob.kkt_residual(res.v);
    if (res.kkt_residual <= opts.tol) return res;

    Vector Mv = Vector::Zero(p);
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        res.sweeps = sweep;
        for (Eigen::Index k = 0; k < p; ++k) {
            const double mkk = prob.M(k, k);
            double next = 0.0;
            if (mkk > 0.0) {
                const double off = Mv[k] - mkk * res.v[k];
                next = std::max(0.0, (prob.a[k] - off) / mkk);
            }
            const double delta = next - res.v[k];
            if (delta != 0.0) {
                Mv.noalias() += delta * prob.M.col(k);
                res.v[k] = next;
            }
        }
        // Recompute from scratch to stop drift in the running product.
        Mv.noalias() = prob.M * res.v;
        res.objective = prob.objective(res.v);
        res.objective_trace.push_back(res.objective);
        res.kkt_residual = prob.kkt_residual(res.v);
        if (res.kkt_residual <= opts.tol) return res;

        // Exact solve on the current support. a lies in range(M) for the
        // alignment systems, so the minimum-norm solution of the free block
        // is a stationary point of the restricted problem.
        std::vector<Eigen::Index> free;
        for (Eigen::Index k = 0; k < p; ++k)
            if (res.v[k] > 0.0) free.push_back(k);
        if (free.empty()) continue;
        const auto f = static_cast<Eigen::Index>(free.size());
        Matrix Mff(f, f);
        Vector af(f);
        for (Eigen::Index r = 0; r < f; ++r) {
            af[r] = prob.a[free[static_cast<std::size_t>(r)]];
            for (Eigen::Index c = 0; c < f; ++c)
                Mff(r, c) = prob.M(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
        }
        const Vector xf = Mff.completeOrthogonalDecomposition().solve(af);
        if (!xf.allFinite() || (xf.array() < 0.0).any()) continue;
        Vector cand = Vector::Zero(p);
        for (Eigen::Index r = 0; r < f; ++r) cand[free[static_cast<std::size_t>(r)]] = xf[r];
        const double cand_obj = prob.objective(cand);
        if (cand_obj > res.objective) continue;
        res.v = cand;
        Mv.noalias() = prob.M * res.v;
        res.objective = cand_obj;
        res.objective_trace.push_back(cand_obj);
        res.kkt_residual = prob.kkt_residual(res.v);
        if (res.kkt_residual <= opts.tol) return res;
    }
    // Coordinate descent crawls when M is close to singular. Finish with an
    // active-set pass, which terminates in finitely many support changes.
    const Vector alt = opts.active_set_fallback ? nnqp_active_set(prob, 10 * static_cast<int>(p) + 10) : res.v;
    const double alt_obj = prob.objective(alt);
    const double alt_res = prob.kkt_residual(alt);
    if (opts.active_set_fallback && alt_res <= opts.tol && alt_obj <= res.objective + 1e-12 * (1.0 + std::abs(res.objective))) {
        res.v = alt;
        res.objective = std::min(alt_obj, res.objective);
        res.objective_trace.push_back(res.objective);
        res.kkt_residual = alt_res;
        return res;
    }
    throw NonConverged("nnqp: no KKT point within " + std::to_string(max_sweeps) +
                           " sweeps (residual " + std::to_string(res.kkt_residual) + ")",
                       res.v, res.kkt_residual);
}

namespace {

// <K_kc, y y^T> and ||K_kc||_F for each base kernel.
void centered_scores(const BaseKernelBank& bank, const Vector& y, Vector& numer, Vector& norms) {
    if (static_cast<std::size_t>(y.size()) != bank.sample_size())
        throw DimensionError("label count does not match bank sample size");
    const auto p = static_cast<Eigen::Index>(bank.size());
    numer.resize(p);
    norms.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Matrix Kc = center(bank[static_cast<std::size_t>(k)].entries());
        norms[k] = Kc.norm();
        if (!(norms[k] > 0.0))
            throw DegenerateKernel("base kernel has zero centered norm", {static_cast<std::size_t>(k)});
        // <K_c, y y^T> = y^T K_c y
        numer[k] = y.dot(Kc * y);
    }
}

}  // namespace

MixtureWeights align_weights(const BaseKernelBank& bank, const Vector& y, double radius) {
    if (bank.size() == 0) throw ParameterError("align_weights: empty bank");
    Vector numer, norms;
    centered_scores(bank, y, numer, norms);
    Vector raw = (numer.array() / norms.array()).matrix();
    // PSD inputs give non-negative products; clamp rounding residue.
    raw = raw.cwiseMax(0.0);
    if (!(raw.maxCoeff() > 0.0)) throw NoSignal("align_weights: every base kernel has zero alignment");
    return MixtureWeights::scaled(raw, NormKind::L1, radius);
}

MixtureWeights lq_from_scores(const Vector& scores, double q, double radius, NormKind kind) {
    if (!(q > 1.0)) throw ParameterError("lq weights need q > 1 (use the argmax mode for q = 1)");
    if (scores.size() == 0) throw ParameterError("lq weights: no scores");
    const double expo = 1.0 / (q - 1.0);
    Vector raw(scores.size());
    for (Eigen::Index k = 0; k < scores.size(); ++k) raw[k] = std::pow(std::max(scores[k], 0.0), expo);
    if (!(raw.maxCoeff() > 0.0)) throw NoSignal("lq weights: all scores are zero");
    return MixtureWeights::scaled(raw, kind, radius);
}

MixtureWeights argmax_from_scores(const Vector& scores, double radius, NormKind kind) {
    if (scores.size() == 0) throw ParameterError("argmax weights: no scores");
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    if (!(scores[best] > 0.0)) throw NoSignal("argmax weights: all scores are zero");
    Vector e = Vector::Zero(scores.size());
    e[best] = 1.0;
    return MixtureWeights::scaled(e, kind, radius);
}

namespace {

Vector normalized_bank_scores(const BaseKernelBank& bank, const Vector& y) {
    if (bank.size() == 0) throw ParameterError("lq_weights: empty bank");
    Vector numer, norms;
    centered_scores(bank, y, numer, norms);
    for (Eigen::Index k = 0; k < norms.size(); ++k)
        if (std::abs(norms[k] - 1.0) > 1e-8)
            throw ParameterError("lq_weights: centered base kernel " + std::to_string(k) +
                                 " has Frobenius norm " + std::to_string(norms[k]) + ", expected 1");
    return numer;
}

}  // namespace

MixtureWeights lq_weights(const BaseKernelBank& bank, const Vector& y, double q, double radius, NormKind kind) {
    return lq_from_scores(normalized_bank_scores(bank, y), q, radius, kind);
}

MixtureWeights lq_argmax_weights(const BaseKernelBank& bank, const Vector& y, double radius, NormKind kind) {
    return argmax_from_scores(normalized_bank_scores(bank, y), radius, kind);
}

AlignfResult alignf(const AlignmentSystem& sys, const Vector& y, NormKind kind, double radius,
                    const NnqpOptions& opts) {
    if (!(sys.a.cwiseAbs().maxCoeff() > 0.0)) throw NoSignal("alignf: a = 0");
    AlignfResult out;
    out.system = sys;
    out.qp = nnqp_solve(NnqpProblem{sys.M, sys.a}, opts);
    out.v = out.qp.v;
    if (!(out.v.maxCoeff() > 0.0)) throw NoSignal("alignf: QP solution is zero");
    out.weights = MixtureWeights::scaled(out.v / out.v.norm(), kind, radius);
    out.alignment = combined_alignment(sys, out.weights.mu, y);
    return out;
}

AlignfResult alignf(const BaseKernelBank& bank, const Vector& y, NormKind kind, double radius,
                    const NnqpOptions& opts) {
    return alignf(alignment_system(bank, y), y, kind, radius, opts);
}

MixtureWeights alignf_weights(const BaseKernelBank& bank, const Vector& y, NormKind kind, double radius) {
    return alignf(bank, y, kind, radius).weights;
}

LinearCombination linear_combination_weights(const AlignmentSystem& sys) {
    if (!sys.independent())
        throw SingularSystem("linear_combination_weights: M is singular (min eigenvalue " +
                             std::to_string(sys.min_eigenvalue) + "); use alignf instead");
    const Vector x = sys.M.ldlt().solve(sys.a);
    const double n = x.norm();
    if (!(n > 0.0)) throw NoSignal("linear_combination_weights: M^{-1} a = 0");
    LinearCombination out;
    out.mu = x / n;
    out.mu_dot_a = out.mu.dot(sys.a);
    return out;
}

LinearCombination linear_combination_weights(const BaseKernelBank& bank, const Vector& y) {
    return linear_combination_weights(alignment_system(bank, y));
}

double rho0_of_solution(const Vector& v, const Matrix& M) {
    if (v.size() != M.rows() || M.rows() != M.cols()) throw DimensionError("rho0: size mismatch");
    if (!(v.cwiseAbs().maxCoeff() > 0.0)) throw ParameterError("rho0: v must be non-zero");
    if ((v.array() < 0.0).any()) throw ParameterError("rho0: v must be non-negative");
    return std::sqrt(std::max(0.0, v.dot(M * v)));
}

}  // namespace calign
