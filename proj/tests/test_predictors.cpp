#include <doctest.h>

#include "calign/predictors.hpp"
#include "calign/error.hpp"
#include "oracles.hpp"

using namespace calign;

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

void check_monotone(const std::vector<double>& trace) {
    for (std::size_t t = 1; t < trace.size(); ++t)
        CHECK(trace[t] <= trace[t - 1] + 1e-12 * (1.0 + std::abs(trace[t - 1])));
}

Matrix trace_one(Matrix K) { return K / K.trace(); }

}  // namespace

TEST_CASE("krr: hand examples") {
    const Vector y = vec2(2, 0);
    const KrrModel m = krr_fit(GramMatrix(Matrix(Matrix::Identity(2, 2))), y, 0.5);
    CHECK(m.alpha[0] == doctest::Approx(1.0));
    CHECK(m.alpha[1] == doctest::Approx(0.0).scale(1.0));
    CHECK(m.effective_lambda == doctest::Approx(1.0));
    const Vector pred = predict(m, Matrix::Identity(2, 2));
    CHECK(pred[0] == doctest::Approx(1.0));
    CHECK(pred[1] == doctest::Approx(0.0).scale(1.0));
    CHECK(predict(m, Matrix::Zero(1, 2))[0] == 0.0);

    const KrrModel z = krr_fit(GramMatrix(Matrix(Matrix::Zero(2, 2))), y, 0.25);
    CHECK((z.alpha - y / 0.5).norm() < 1e-15);
    CHECK(predict(z, Matrix::Zero(2, 2)).norm() == 0.0);
    CHECK_THROWS_AS(krr_fit(GramMatrix(Matrix(Matrix::Identity(2, 2))), y, 0.0), ParameterError);
    CHECK_THROWS_AS(krr_fit(GramMatrix(Matrix(Matrix::Identity(3, 3))), y, 1.0), DimensionError);
}

TEST_CASE("krr: dense-solve oracle and in-sample consistency") {
    std::mt19937_64 gen(51);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix K = oracle::random_psd(5, 3, gen);
        const Vector y = oracle::random_vec(5, gen);
        const double lam = 0.01 + 0.2 * rep;
        const KrrModel m = krr_fit(GramMatrix(K), y, lam);
        const Vector ref = oracle::ridge_solve(K, y, 5 * lam);
        CHECK((m.alpha - ref).norm() <= 1e-10 * (1.0 + ref.norm()));
        CHECK(((K + 5 * lam * Matrix::Identity(5, 5)) * m.alpha - y).norm() <= 1e-10 * (1.0 + y.norm()));
        CHECK((predict(m, K) - m.fitted).norm() <= 1e-12 * (1.0 + y.norm()));
        // In-sample fit equals y minus the ridge residual.
        CHECK((m.fitted - (y - 5 * lam * m.alpha)).norm() <= 1e-10 * (1.0 + y.norm()));
    }
}

TEST_CASE("krr: scaling the kernel by Lambda equals scaling the ridge by 1/Lambda") {
    std::mt19937_64 gen(52);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix K = oracle::random_psd(8, 4, gen);
        const Vector y = oracle::random_vec(8, gen);
        const double L = 0.1 + rep, lam = 0.3;
        const KrrModel scaled = krr_fit(GramMatrix(Matrix(L * K)), y, lam);
        const KrrModel ridge = krr_fit(GramMatrix(K), y, lam / L);
        CHECK((predict(scaled, L * K) - predict(ridge, K)).norm() <= 1e-10 * (1.0 + y.norm()));
    }
}

TEST_CASE("svm: separable pair and empty box") {
    Matrix K(2, 2);
    K << 2, 0, 0, 2;  // linear+1 on x = -1, +1
    const Vector y = vec2(-1, 1);
    const SvmModel m = svm_fit(GramMatrix(K), y, 100.0);
    const Vector p = predict(m, K);
    CHECK(p[0] == -1.0);
    CHECK(p[1] == 1.0);
    CHECK(m.duality_gap <= 1e-6);

    const SvmModel z = svm_fit(GramMatrix(K), y, 0.0);
    CHECK(z.alpha.norm() == 0.0);
    CHECK(decision_values(z, K).norm() == 0.0);
    // A zero decision value is reported as +1.
    CHECK(predict(z, K)[0] == 1.0);
    CHECK_THROWS_AS(svm_fit(GramMatrix(K), vec2(1, 0.5), 1.0), InputError);
}

TEST_CASE("svm: dual objective against a grid over the box") {
    Matrix X(4, 2);
    X << 0.0, 0.2, 1.0, 0.9, -0.5, -1.0, 0.8, -0.3;
    Vector y(4);
    y << 1, 1, -1, -1;
    Matrix K = X * X.transpose();
    K.array() += 1.0;
    const double C = 1.0;
    const SvmModel m = svm_fit(GramMatrix(K), y, C);
    Matrix Q = K;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) Q(i, j) *= y[i] * y[j];
    // f(a) = 2 sum a - a'Qa on a 0.01 grid, the last coordinate in closed form per cell.
    const int n = 100;
    double best = -1e300;
    for (int i0 = 0; i0 <= n; ++i0)
        for (int i1 = 0; i1 <= n; ++i1)
            for (int i2 = 0; i2 <= n; ++i2) {
                const double a0 = C * i0 / n, a1 = C * i1 / n, a2 = C * i2 / n;
                const double base = 2 * (a0 + a1 + a2) - (Q(0, 0) * a0 * a0 + Q(1, 1) * a1 * a1 + Q(2, 2) * a2 * a2 +
                                                         2 * (Q(0, 1) * a0 * a1 + Q(0, 2) * a0 * a2 + Q(1, 2) * a1 * a2));
                const double lin = 2 - 2 * (Q(0, 3) * a0 + Q(1, 3) * a1 + Q(2, 3) * a2);
                for (int i3 = 0; i3 <= n; ++i3) {
                    const double a3 = C * i3 / n;
                    best = std::max(best, base + lin * a3 - Q(3, 3) * a3 * a3);
                }
            }
    CHECK(m.dual_objective >= best - 1e-9);
    CHECK(m.dual_objective <= best + 1e-2);
    CHECK(m.alpha.minCoeff() >= 0.0);
    CHECK(m.alpha.maxCoeff() <= C);
    CHECK(m.dual_objective == doctest::Approx(2 * m.alpha.sum() - m.alpha.dot(Q * m.alpha)).epsilon(1e-12));
}

TEST_CASE("unif weights") {
    const MixtureWeights w = unif_weights(4, 1.0);
    for (int k = 0; k < 4; ++k) CHECK(w.mu[k] == 0.25);
    CHECK(unif_weights(1, 3.5).mu[0] == 3.5);
    CHECK(unif_weights(7, 2.0).mu.sum() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(unif_weights(0, 1.0), ParameterError);
}

TEST_CASE("capped simplex projection against bisection") {
    std::mt19937_64 gen(61);
    for (int rep = 0; rep < 50; ++rep) {
        const Vector z = 2.0 * oracle::random_vec(5, gen);
        const double r = 0.5 + (rep % 4);
        const Vector x = project_capped_simplex(z, r);
        CHECK((x - oracle::capped_simplex(z, r)).norm() <= 1e-10);
        CHECK(x.minCoeff() >= 0.0);
        CHECK(x.sum() <= r + 1e-12);
    }
}

TEST_CASE("l1svm: a single kernel reduces to svm_fit") {
    std::mt19937_64 gen(71);
    const Matrix K = trace_one(oracle::random_psd(12, 4, gen));
    const Vector y = oracle::random_labels(12, gen);
    const L1SvmResult r = l1svm_learn(BaseKernelBank({GramMatrix(K)}), y, 5.0, 2.0);
    CHECK(r.weights.mu[0] == doctest::Approx(2.0).epsilon(1e-9));
    const SvmModel direct = svm_fit(GramMatrix(Matrix(2.0 * K)), y, 5.0);
    CHECK(r.model.dual_objective == doctest::Approx(direct.dual_objective).epsilon(1e-6));
    check_monotone(r.objective_trace);
}

TEST_CASE("l1svm: the label kernel wins against noise") {
    std::mt19937_64 gen(72);
    const int m = 20;
    const Vector y = oracle::random_labels(m, gen);
    const Matrix KY = trace_one(y * y.transpose());
    const Matrix N = trace_one(oracle::random_psd(m, m, gen));
    const BaseKernelBank bank({GramMatrix(KY), GramMatrix(N)});
    const double C = 1.0, L = 1.0;
    const L1SvmResult r = l1svm_learn(bank, y, C, L);
    check_monotone(r.objective_trace);
    CHECK(r.weights.mu[0] >= 0.9 * L);
    double grid_min = 1e300;
    for (int i = 0; i <= 20; ++i)
        for (int j = 0; i + j <= 20; ++j) {
            const Vector mu = vec2(0.05 * i * L, 0.05 * j * L);
            if (mu.sum() == 0.0) continue;
            grid_min = std::min(grid_min, svm_fit(bank.combine(mu), y, C).dual_objective);
        }
    CHECK(r.model.dual_objective <= grid_min + 1e-6 * (1.0 + std::abs(grid_min)));
}

TEST_CASE("l2krr: single kernel, label kernel preference and fixed point") {
    std::mt19937_64 gen(81);
    const int m = 10;
    const Vector y = oracle::random_labels(m, gen);
    const Matrix K0 = oracle::random_psd(m, 3, gen);
    const KrrLearnResult one = l2krr_learn(BaseKernelBank({GramMatrix(K0)}), y, 0.1, 1.5);
    CHECK(one.weights.mu[0] == doctest::Approx(1.5).epsilon(1e-9));

    const Matrix KY = y * y.transpose();
    const BaseKernelBank bank({GramMatrix(KY), GramMatrix(Matrix(Matrix::Identity(m, m)))});
    const double lam = 0.1, L = 1.0;
    const KrrLearnResult r = l2krr_learn(bank, y, lam, L);
    check_monotone(r.objective_trace);
    CHECK(r.weights.mu[0] > r.weights.mu[1]);
    const Matrix Kmu = bank.combine(r.weights.mu).entries();
    CHECK((r.model.alpha - oracle::ridge_solve(Kmu, y, m * lam)).norm() <= 1e-8);

    auto objective = [&](const Vector& mu) {
        Matrix K = mu[0] * KY + mu[1] * Matrix::Identity(m, m);
        return y.dot(oracle::ridge_solve(K, y, m * lam));
    };
    double grid_min = 1e300;
    for (int i = 0; i <= 50; ++i)
        for (int j = 0; j <= 50; ++j) {
            const Vector mu = vec2(0.02 * i * L, 0.02 * j * L);
            if (mu.norm() > L) continue;
            grid_min = std::min(grid_min, objective(mu));
        }
    CHECK(objective(r.weights.mu) <= grid_min + 1e-9);
}

TEST_CASE("onestage: heavy penalty keeps the weights at zero") {
    std::mt19937_64 gen(91);
    const int m = 8;
    const Vector y = oracle::random_vec(m, gen);
    const BaseKernelBank bank({GramMatrix(oracle::random_psd(m, 2, gen)), GramMatrix(oracle::random_psd(m, 3, gen))});
    OneStageConfig cfg;
    cfg.gamma = 0.0;
    cfg.gamma_dprime = 0.0;
    cfg.gamma_prime = 1e6;
    const KrrLearnResult r = onestage_learn(bank, y, cfg);
    // Stationarity gives 2 gamma' mu_k <= alpha' K_k alpha <= lambda_max(K_k) |y|^2.
    for (int k = 0; k < 2; ++k) {
        const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(bank[k].entries()).eigenvalues().maxCoeff();
        CHECK(r.weights.mu[k] <= lmax * y.squaredNorm() / (2.0 * cfg.gamma_prime) + 1e-12);
    }
    const AlignmentSystem sys = alignment_system(bank, y);
    CHECK(onestage_objective(bank, sys, y, cfg, Vector::Zero(2)) == doctest::Approx(y.squaredNorm()).epsilon(1e-14));
    cfg.gamma_prime = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("onestage: one kernel against golden section") {
    std::mt19937_64 gen(92);
    const int m = 10;
    const Vector y = oracle::random_labels(m, gen);
    const Matrix K = trace_one(oracle::random_psd(m, 3, gen)) * 5.0;
    const BaseKernelBank bank({GramMatrix(K)});
    OneStageConfig cfg;
    cfg.gamma = 0.5;
    cfg.gamma_prime = 0.2;
    cfg.gamma_dprime = 0.1;
    const AlignmentSystem sys = alignment_system(bank, y);
    const Matrix Kc = oracle::center(K);
    const double a = oracle::frob(Kc, y * y.transpose()), M = oracle::frob(Kc, Kc);
    auto G = [&](double t) {
        return y.dot(oracle::ridge_solve(t * K, y, 1.0)) - cfg.gamma * t * a + (cfg.gamma_dprime * M + cfg.gamma_prime) * t * t;
    };
    const double t_star = oracle::golden_section(G, 0.0, 100.0);
    const KrrLearnResult r = onestage_learn(bank, y, cfg);
    check_monotone(r.objective_trace);
    CHECK(onestage_objective(bank, sys, y, cfg, r.weights.mu) == doctest::Approx(G(r.weights.mu[0])).epsilon(1e-12));
    CHECK(G(r.weights.mu[0]) <= G(t_star) + 1e-6);
    CHECK(r.weights.mu[0] == doctest::Approx(t_star).epsilon(1e-3));
}

TEST_CASE("onestage: two kernels against grid refinement") {
    std::mt19937_64 gen(93);
    const int m = 12;
    const Vector y = oracle::random_labels(m, gen);
    const Matrix K1 = trace_one(oracle::random_psd(m, 2, gen)) * 4.0;
    const Matrix K2 = trace_one(oracle::random_psd(m, 4, gen)) * 4.0;
    const BaseKernelBank bank({GramMatrix(K1), GramMatrix(K2)});
    OneStageConfig cfg;
    cfg.gamma = 1.0;
    cfg.gamma_prime = 0.5;
    cfg.gamma_dprime = 0.0;
    const Matrix T = y * y.transpose();
    const Vector a = vec2(oracle::frob(oracle::center(K1), T), oracle::frob(oracle::center(K2), T));
    auto G = [&](double s, double t) {
        return y.dot(oracle::ridge_solve(s * K1 + t * K2, y, 1.0)) - cfg.gamma * (s * a[0] + t * a[1]) +
               cfg.gamma_prime * (s * s + t * t);
    };
    const double best = oracle::grid_refine_2d(G);
    const KrrLearnResult r = onestage_learn(bank, y, cfg);
    check_monotone(r.objective_trace);
    const double got = G(r.weights.mu[0], r.weights.mu[1]);
    CHECK(got <= best + 1e-4);
    CHECK(got >= best - 1e-4);
    CHECK((r.model.alpha - oracle::ridge_solve(bank.combine(r.weights.mu).entries(), y, 1.0)).norm() <= 1e-8);
}
