#include "calign/predictors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace calign {

namespace {

Vector spd_solve(Matrix A, const Vector& b) {
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-12 * A.trace() / static_cast<double>(A.rows());
        A.diagonal().array() += jitter;
        llt.compute(A);
        if (llt.info() != Eigen::Success) throw NumericError("linear system is not positive definite");
    }
    Vector x = llt.solve(b);
    if (!x.allFinite()) throw NumericError("linear solve produced non-finite values");
    return x;
}

Matrix combined(const BaseKernelBank& bank, const Vector& mu) {
    const auto m = static_cast<Eigen::Index>(bank.sample_size());
    Matrix K = Matrix::Zero(m, m);
    for (std::size_t k = 0; k < bank.size(); ++k) {
        const double w = mu[static_cast<Eigen::Index>(k)];
        if (w != 0.0) K.noalias() += w * bank[k].entries();
    }
    return K;
}

void check_labels(const BaseKernelBank& bank, const Vector& y) {
    if (bank.size() == 0) throw ParameterError("empty kernel bank");
    if (static_cast<std::size_t>(y.size()) != bank.sample_size())
        throw DimensionError("label count does not match bank sample size");
}

void check_pm1(const Vector& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 1.0 && y[i] != -1.0) throw InputError("SVM labels must be -1 or +1");
}

}  // namespace

KrrModel krr_fit_ridge(const Matrix& K, const Vector& y, double ridge) {
    if (K.rows() != K.cols() || K.rows() != y.size()) throw DimensionError("krr: kernel and labels differ in size");
    if (!(ridge > 0.0)) throw ParameterError("krr: regularization must be positive");
    Matrix A = K;
    A.diagonal().array() += ridge;
    KrrModel model;
    model.alpha = spd_solve(std::move(A), y);
    model.effective_lambda = ridge;
    model.lambda0 = ridge / static_cast<double>(y.size());
    model.fitted = K * model.alpha;
    return model;
}

KrrModel krr_fit(const GramMatrix& K, const Vector& y, double lambda0) {
    if (!(lambda0 > 0.0)) throw ParameterError("krr: lambda0 must be positive");
    KrrModel model = krr_fit_ridge(K.entries(), y, lambda0 * static_cast<double>(y.size()));
    model.lambda0 = lambda0;
    return model;
}

SvmModel svm_fit(const GramMatrix& K, const Vector& y, double C, const SvmOptions& opts, const Vector* init) {
    return svm_fit(K.entries(), y, C, opts, init);
}

SvmModel svm_fit(const Matrix& Kin, const Vector& y, double C, const SvmOptions& opts, const Vector* init) {
    const Eigen::Index m = y.size();
    if (Kin.rows() != Kin.cols() || Kin.rows() != m) throw DimensionError("svm: kernel and labels differ in size");
    if (!(C >= 0.0) || !std::isfinite(C)) throw ParameterError("svm: C must be non-negative");
    if (!(opts.tol > 0.0)) throw ParameterError("svm: tol must be positive");
    check_pm1(y);

    SvmModel model;
    model.labels = y;
    model.C = C;
    model.add_bias = opts.add_bias;
    model.alpha = Vector::Zero(m);
    if (C == 0.0) return model;

    Matrix Q = Kin;
    if (opts.add_bias) Q.array() += 1.0;
    Q = y.asDiagonal() * Q * y.asDiagonal();

    Vector& alpha = model.alpha;
    if (init != nullptr && init->size() == m) alpha = init->cwiseMax(0.0).cwiseMin(C);
    Vector Qa = Q * alpha;

    auto violation = [&]() {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double g = 1.0 - Qa[i];
            if (g > 0.0 && alpha[i] < C) worst = std::max(worst, g);
            else if (g < 0.0 && alpha[i] > 0.0) worst = std::max(worst, -g);
        }
        return worst;
    };

    double worst = violation();
    int epoch = 0;
    while (worst > opts.tol && epoch < opts.max_epochs) {
        ++epoch;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double g = 1.0 - Qa[i];
            const double qii = Q(i, i);
            double next;
            if (qii > 0.0) next = std::clamp(alpha[i] + g / qii, 0.0, C);
            else next = g > 0.0 ? C : (g < 0.0 ? 0.0 : alpha[i]);
            const double d = next - alpha[i];
            if (d != 0.0) {
                Qa.noalias() += d * Q.col(i);
                alpha[i] = next;
            }
        }
        Qa.noalias() = Q * alpha;
        worst = violation();
    }
    model.epochs = epoch;

    const double quad = alpha.dot(Qa);
    model.dual_objective = 2.0 * alpha.sum() - quad;
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) hinge += std::max(0.0, 1.0 - Qa[i]);
    model.duality_gap = (quad + 2.0 * C * hinge) - model.dual_objective;
    for (Eigen::Index i = 0; i < m; ++i)
        if (alpha[i] > 0.0) model.support.push_back(static_cast<std::size_t>(i));
    if (worst > opts.tol)
        throw NonConverged("svm: dual coordinate ascent did not converge in " + std::to_string(opts.max_epochs) +
                               " epochs (duality gap " + std::to_string(model.duality_gap) + ")",
                           alpha, model.duality_gap);
    return model;
}

Vector predict(const KrrModel& model, const Matrix& K_cross) {
    if (K_cross.cols() != model.alpha.size())
        throw DimensionError("predict: cross kernel has " + std::to_string(K_cross.cols()) +
                             " columns, model has " + std::to_string(model.alpha.size()) + " training points");
    return K_cross * model.alpha;
}

Vector decision_values(const SvmModel& model, const Matrix& K_cross) {
    if (K_cross.cols() != model.alpha.size())
        throw DimensionError("predict: cross kernel has " + std::to_string(K_cross.cols()) +
                             " columns, model has " + std::to_string(model.alpha.size()) + " training points");
    const Vector ay = model.alpha.cwiseProduct(model.labels);
    Vector f = K_cross * ay;
    if (model.add_bias) f.array() += ay.sum();
    return f;
}

Vector predict(const SvmModel& model, const Matrix& K_cross) {
    Vector f = decision_values(model, K_cross);
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = f[i] >= 0.0 ? 1.0 : -1.0;
    return f;
}

MixtureWeights unif_weights(std::size_t p, double radius) {
    if (p == 0) throw ParameterError("unif_weights: p must be at least 1");
    if (!(radius > 0.0)) throw ParameterError("unif_weights: radius must be positive");
    MixtureWeights w;
    w.mu = Vector::Constant(static_cast<Eigen::Index>(p), radius / static_cast<double>(p));
    w.norm_kind = NormKind::L1;
    w.radius = radius;
    return w;
}

Vector project_capped_simplex(const Vector& z, double radius) {
    Vector x = z.cwiseMax(0.0);
    if (x.sum() <= radius) return x;
    // Projection onto {x >= 0, sum x = radius}: x = max(z - theta, 0).
    std::vector<double> s(z.data(), z.data() + z.size());
    std::sort(s.begin(), s.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        cum += s[j];
        const double t = (cum - radius) / static_cast<double>(j + 1);
        if (s[j] - t > 0.0) theta = t;
    }
    return (z.array() - theta).cwiseMax(0.0).matrix();
}

namespace {

// Shared projected-gradient loop with Armijo backtracking. `eval` returns the
// objective at mu and fills the gradient; `project` maps onto the feasible set.
template <class Eval, class Project>
Vector projected_descent(Vector mu, Eval&& eval, Project&& project, const LearnOptions& opts,
                         std::vector<double>& trace, int& iterations, const char* who) {
    Vector grad;
    double f = eval(mu, &grad);
    trace.push_back(f);
    double step = 1.0;
    for (int it = 0; it < opts.max_iter; ++it) {
        iterations = it;
        const double pg = (project(Vector(mu - grad)) - mu).norm();
        if (pg <= opts.tol) return mu;
        bool accepted = false;
        double t = step;
        Vector cand_grad;
        while (t > 1e-14) {
            const Vector cand = project(Vector(mu - t * grad));
            const Vector d = cand - mu;
            if (d.norm() == 0.0) break;
            const double fc = eval(cand, &cand_grad);
            if (fc <= f + opts.armijo * grad.dot(d)) {
                mu = cand;
                f = fc;
                grad = cand_grad;
                trace.push_back(f);
                accepted = true;
                step = 2.0 * t;
                break;
            }
            t *= 0.5;
        }
        // No decrease available at any step length: the iterate is optimal
        // to the accuracy of the objective evaluation.
        if (!accepted) return mu;
    }
    iterations = opts.max_iter;
    const double pg = (project(Vector(mu - grad)) - mu).norm();
    if (pg <= opts.tol) return mu;
    throw NonConverged(std::string(who) + ": projected gradient did not converge in " +
                           std::to_string(opts.max_iter) + " iterations",
                       mu, pg);
}

}  // namespace

L1SvmResult l1svm_learn(const BaseKernelBank& bank, const Vector& y, double C, double radius,
                        const LearnOptions& opts, const SvmOptions& svm) {
    check_labels(bank, y);
    check_pm1(y);
    if (!(radius > 0.0)) throw ParameterError("l1svm: Lambda must be positive");
    const auto p = static_cast<Eigen::Index>(bank.size());
    L1SvmResult res;
    Vector alpha_warm = Vector::Zero(y.size());

    auto eval = [&](const Vector& mu, Vector* grad) {
        SvmModel model = svm_fit(combined(bank, mu), y, C, svm, &alpha_warm);
        alpha_warm = model.alpha;
        const Vector ay = model.alpha.cwiseProduct(y);
        grad->resize(p);
        for (Eigen::Index k = 0; k < p; ++k)
            (*grad)[k] = -ay.dot(bank[static_cast<std::size_t>(k)].entries() * ay);
        return model.dual_objective;
    };
    auto project = [&](const Vector& z) { return project_capped_simplex(z, radius); };

    Vector mu = Vector::Constant(p, radius / static_cast<double>(p));
    if (p > 1) mu = projected_descent(mu, eval, project, opts, res.objective_trace, res.iterations, "l1svm");
    else {
        Vector g;
        res.objective_trace.push_back(eval(mu, &g));
    }
    res.model = svm_fit(combined(bank, mu), y, C, svm, &alpha_warm);
    res.weights.mu = mu;
    res.weights.norm_kind = NormKind::L1;
    res.weights.radius = mu.sum();
    return res;
}

KrrLearnResult l2krr_learn(const BaseKernelBank& bank, const Vector& y, double lambda0, double radius,
                           const Vector& mu0_in, const LearnOptions& opts) {
    check_labels(bank, y);
    if (!(lambda0 > 0.0)) throw ParameterError("l2krr: lambda0 must be positive");
    if (!(radius > 0.0)) throw ParameterError("l2krr: Lambda must be positive");
    const auto p = static_cast<Eigen::Index>(bank.size());
    const Vector mu0 = mu0_in.size() == 0 ? Vector::Zero(p) : mu0_in;
    if (mu0.size() != p) throw DimensionError("l2krr: mu0 size does not match bank size");
    if ((mu0.array() < 0.0).any()) throw ParameterError("l2krr: mu0 must be non-negative");
    const double ridge = lambda0 * static_cast<double>(y.size());

    auto eval = [&](const Vector& mu, Vector* grad) {
        Matrix A = combined(bank, mu);
        A.diagonal().array() += ridge;
        const Vector alpha = spd_solve(std::move(A), y);
        grad->resize(p);
        for (Eigen::Index k = 0; k < p; ++k)
            (*grad)[k] = -alpha.dot(bank[static_cast<std::size_t>(k)].entries() * alpha);
        return y.dot(alpha);
    };
    auto project = [&](const Vector& z) {
        Vector x = z.cwiseMax(0.0);
        const double r = (x - mu0).norm();
        if (r > radius) x = mu0 + (radius / r) * (x - mu0);
        return x;
    };

    KrrLearnResult res;
    Vector mu = mu0 + Vector::Constant(p, radius / std::sqrt(static_cast<double>(p)));
    mu = projected_descent(mu, eval, project, opts, res.objective_trace, res.iterations, "l2krr");
    res.model = krr_fit_ridge(combined(bank, mu), y, ridge);
    res.model.lambda0 = lambda0;
    res.weights.mu = mu;
    res.weights.norm_kind = NormKind::L2;
    res.weights.radius = mu.norm();
    return res;
}

void OneStageConfig::validate() const {
    if (!(gamma >= 0.0) || !(gamma_prime >= 0.0) || !(gamma_dprime >= 0.0))
        throw ParameterError("onestage: gamma, gamma', gamma'' must be non-negative");
    if (!(gamma_prime > 0.0) && !(gamma_dprime > 0.0))
        throw ParameterError("onestage: one of gamma', gamma'' must be positive");
    if (max_outer_iter < 1) throw ParameterError("onestage: max_outer_iter must be at least 1");
    if (!(tol > 0.0)) throw ParameterError("onestage: tol must be positive");
}

namespace {

double onestage_eval(const BaseKernelBank& bank, const AlignmentSystem& sys, const Vector& y,
                     const OneStageConfig& cfg, const Vector& mu, Vector* grad) {
    Matrix A = combined(bank, mu);
    A.diagonal().array() += 1.0;
    const Vector alpha = spd_solve(std::move(A), y);
    const Vector Pmu = cfg.gamma_dprime * (sys.M * mu) + cfg.gamma_prime * mu;
    if (grad != nullptr) {
        const auto p = static_cast<Eigen::Index>(bank.size());
        grad->resize(p);
        for (Eigen::Index k = 0; k < p; ++k)
            (*grad)[k] = -alpha.dot(bank[static_cast<std::size_t>(k)].entries() * alpha) - cfg.gamma * sys.a[k] +
                         2.0 * Pmu[k];
    }
    return y.dot(alpha) - cfg.gamma * mu.dot(sys.a) + mu.dot(Pmu);
}

}  // namespace

double onestage_objective(const BaseKernelBank& bank, const AlignmentSystem& sys, const Vector& y,
                          const OneStageConfig& cfg, const Vector& mu) {
    check_labels(bank, y);
    if (mu.size() != static_cast<Eigen::Index>(bank.size())) throw DimensionError("onestage: weight size mismatch");
    return onestage_eval(bank, sys, y, cfg, mu, nullptr);
}

KrrLearnResult onestage_learn(const BaseKernelBank& bank, const Vector& y, const OneStageConfig& cfg) {
    check_labels(bank, y);
    cfg.validate();
    const AlignmentSystem sys = alignment_system(bank, y);
    const auto p = static_cast<Eigen::Index>(bank.size());
    LearnOptions opts;
    opts.tol = cfg.tol;
    opts.max_iter = cfg.max_outer_iter;
    auto eval = [&](const Vector& mu, Vector* grad) { return onestage_eval(bank, sys, y, cfg, mu, grad); };
    auto project = [](const Vector& z) { return Vector(z.cwiseMax(0.0)); };

    KrrLearnResult res;
    Vector mu = projected_descent(Vector(Vector::Zero(p)), eval, project, opts, res.objective_trace,
                                  res.iterations, "onestage");
    res.model = krr_fit_ridge(combined(bank, mu), y, 1.0);
    res.weights.mu = mu;
    res.weights.norm_kind = NormKind::L2;
    res.weights.radius = mu.norm();
    return res;
}

}  // namespace calign
