// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fail.
#include "calign/alignment.hpp"
#include "calign/data_io.hpp"
#include "calign/harness.hpp"
#include "calign/predictors.hpp"
#include "calign/theory_bench.hpp"
#include "calign/two_stage.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace calign;

namespace {

struct Outcome {
    bool ok = true;
    std::ostringstream note;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) note << "first failure: " << what << "; ";
        ok = ok && cond;
    }
};

Matrix outer(const Vector& y) { return y * y.transpose(); }

bool monotone(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] > trace[i - 1] + 1e-9 * (1.0 + std::abs(trace[i - 1]))) return false;
    return true;
}

Matrix scaled_trace_one(const Matrix& K, double s) { return s * K / K.trace(); }

// 1. Alignment of linear+1 on the exact two-point population.
void two_point_curve_check(Outcome& o) {
    std::vector<double> alphas;
    for (int i = 1; i <= 9; ++i) alphas.push_back(0.1 * i);
    const auto pts = two_point_curve(alphas);
    double worst = 0.0;
    for (const auto& p : pts) {
        const double a = p.alpha;
        worst = std::max(worst, std::abs(p.uncentered - std::sqrt(a * a + (1 - a) * (1 - a))));
        worst = std::max(worst, std::abs(p.centered - 1.0));
        // Independent route through the population moments.
        const auto dist = FiniteDistribution::two_point(a);
        worst = std::max(worst, std::abs(population_alignment(LinearKernel{1.0}, dist) - 1.0));
    }
    o.require(pts.size() == 9, "nine curve points");
    o.require(worst <= 1e-9, "curve within 1e-9");
    o.note << "max deviation " << worst;
}

// 2. QP solver against support enumeration.
void qp_oracle_check(Outcome& o) {
    std::mt19937_64 gen(2024);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int p = 2 + rep % 3;
        NnqpProblem prob;
        if (rep % 4 == 3) {
            // Rank-deficient M with a in its range.
            prob.M = oracle::random_psd(p, p - 1, gen);
            prob.a = prob.M * oracle::random_vec(p, gen);
        } else {
            prob.M = oracle::random_psd(p, p + rep % 2, gen);
            prob.a = oracle::random_vec(p, gen);
        }
        const auto r = nnqp_solve(prob);
        const Vector ref = oracle::brute_nnqp(prob.M, prob.a);
        const double ref_obj = oracle::qp_objective(prob.M, prob.a, ref);
        const double gap = std::abs(oracle::qp_objective(prob.M, prob.a, r.v) - ref_obj) / (1.0 + std::abs(ref_obj));
        worst = std::max(worst, gap);
        o.require(r.v.minCoeff() >= 0.0, "feasible solution");
    }
    o.require(worst <= 1e-8, "objective gap within 1e-8");
    o.note << "200 instances, max relative objective gap " << worst;
}

// 3. Closed form when the unconstrained solution is non-negative.
void closed_form_check(Outcome& o) {
    std::mt19937_64 gen(77);
    int accepted = 0, drawn = 0;
    double worst_dir = 0.0, worst_rho = 0.0;
    while (accepted < 100 && drawn < 20000) {
        ++drawn;
        const int m = 16, p = 2 + drawn % 3;
        const Vector y = oracle::random_labels(m, gen);
        if (std::abs(y.sum()) == m) continue;
        std::vector<Matrix> raw;
        std::vector<GramMatrix> ks;
        for (int k = 0; k < p; ++k) {
            std::uniform_real_distribution<double> u(0.0, 0.3);
            raw.push_back(oracle::random_psd(m, 3, gen) + u(gen) * outer(y));
            ks.emplace_back(raw.back());
        }
        Matrix M(p, p);
        Vector a(p);
        const Matrix Tc = oracle::center(outer(y));
        for (int k = 0; k < p; ++k) {
            a[k] = oracle::frob(oracle::center(raw[k]), Tc);
            for (int l = 0; l < p; ++l) M(k, l) = oracle::frob(oracle::center(raw[k]), oracle::center(raw[l]));
        }
        const Vector w = M.fullPivLu().solve(a);
        if (w.minCoeff() < 0.0) continue;
        ++accepted;
        const BaseKernelBank bank(ks);
        const AlignfResult r = alignf(bank, y, NormKind::L2, 1.0);
        worst_dir = std::max(worst_dir, (r.v / r.v.norm() - w / w.norm()).norm());
        Matrix Kmu = Matrix::Zero(m, m);
        for (int k = 0; k < p; ++k) Kmu += r.weights.mu[k] * raw[k];
        const double rho = oracle::centered_alignment(Kmu, outer(y));
        const double rho0 = rho0_of_solution(r.v, r.system.M) / std::sqrt(oracle::frob(Tc, Tc));
        worst_rho = std::max(worst_rho, std::abs(rho - rho0));
    }
    o.require(accepted >= 50, "enough instances pass the filter");
    o.require(worst_dir <= 1e-8, "direction matches M^-1 a");
    o.require(worst_rho <= 1e-8, "achieved alignment equals the M-norm of v");
    o.note << accepted << " of " << drawn << " draws kept, direction gap " << worst_dir << ", alignment gap "
           << worst_rho;
}

// 4. alignf maximizes the training alignment fold by fold.
void dominance_check(Outcome& o) {
    std::mt19937_64 gen(404);
    const int m = 60, p = 6, folds = 5;
    int checked = 0;
    double min_margin_unif = 1e300, min_margin_align = 1e300;
    for (int bank_id = 0; bank_id < 20; ++bank_id) {
        const Vector y = oracle::random_labels(m, gen);
        std::vector<Matrix> raw;
        std::vector<GramMatrix> ks;
        std::uniform_real_distribution<double> signal(0.0, 0.5);
        std::uniform_int_distribution<int> rank(1, 10);
        for (int k = 0; k < p; ++k) {
            raw.push_back(scaled_trace_one(oracle::random_psd(m, rank(gen), gen), 1.0) + signal(gen) * outer(y) / m);
            ks.emplace_back(raw.back());
        }
        const BaseKernelBank bank(ks);
        const auto fold = fold_assignment(m, folds, static_cast<std::uint64_t>(bank_id + 1));
        for (int r = 0; r < folds; ++r) {
            std::vector<std::size_t> train;
            for (int i = 0; i < m; ++i)
                if (fold[i] != r && fold[i] != (r + 1) % folds) train.push_back(static_cast<std::size_t>(i));
            const BaseKernelBank sub = bank.principal(train);
            Vector yt(static_cast<Eigen::Index>(train.size()));
            for (std::size_t i = 0; i < train.size(); ++i) yt[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(train[i])];
            auto rho_of = [&](const Vector& mu) {
                const auto n = static_cast<Eigen::Index>(train.size());
                Matrix K = Matrix::Zero(n, n);
                for (int k = 0; k < p; ++k)
                    for (Eigen::Index i = 0; i < n; ++i)
                        for (Eigen::Index j = 0; j < n; ++j)
                            K(i, j) += mu[k] * raw[k](static_cast<Eigen::Index>(train[i]), static_cast<Eigen::Index>(train[j]));
                return oracle::centered_alignment(K, outer(yt));
            };
            const double r_unif = rho_of(unif_weights(p, 1.0).mu);
            const double r_align = rho_of(align_weights(sub, yt, 1.0).mu);
            const double r_alignf = rho_of(alignf(sub, yt, NormKind::L1, 1.0).weights.mu);
            o.require(r_alignf >= r_align - 1e-8, "alignf >= align");
            o.require(r_align >= 0.0, "align >= 0");
            o.require(r_alignf >= r_unif - 1e-8, "alignf >= unif - 1e-8");
            min_margin_unif = std::min(min_margin_unif, r_alignf - r_unif);
            min_margin_align = std::min(min_margin_align, r_alignf - r_align);
            ++checked;
        }
    }
    o.note << checked << " folds, min margin over unif " << min_margin_unif << ", over align " << min_margin_align;
}

// 5. Concentration of the empirical alignment.
void concentration_check(Outcome& o) {
    ConcentrationConfig exact;
    exact.dist = FiniteDistribution::two_point(0.3);
    exact.sample_sizes = {25, 100, 400};
    exact.trials = 500;
    exact.seed = 5;
    const auto rep_exact = concentration_trial(exact);
    for (const auto& row : rep_exact.rows) o.require(row.coverage >= 0.95, "coverage on the noiseless family");

    // With label noise the population alignment is below one and the error
    // has something to decay.
    ConcentrationConfig noisy = exact;
    noisy.dist = FiniteDistribution::two_point(0.3, 0.1);
    const auto rep = concentration_trial(noisy);
    o.require(rep.rows.size() == 3, "three sample sizes");
    for (const auto& row : rep.rows) o.require(row.coverage >= 0.95, "coverage on the noisy family");
    const double ratio = rep.rows[2].median_error / rep.rows[1].median_error;
    o.require(ratio <= 0.6, "median error at m=400 <= 0.6 x m=100");
    o.note << "rho " << rep.rho << ", coverage";
    for (const auto& row : rep.rows) o.note << " m=" << row.m << ":" << row.coverage;
    o.note << ", median ratio 400/100 " << ratio;
}

// 6. Identity for h_S and the sample bounds on every bundled dataset.
void predictor_identity_check(Outcome& o) {
    struct Entry {
        std::string name;
        Sample sample;
    };
    std::vector<Entry> corpus;
    {
        DatasetConfig c;
        c.path = std::string(CALIGN_DATA_DIR) + "/rings350.csv";
        c.label_column = "label";
        c.preprocessing.standardize_features = true;
        corpus.push_back({"rings350", load_dataset(c)});
        DatasetConfig r;
        r.source = SourceKind::Libsvm;
        r.path = std::string(CALIGN_DATA_DIR) + "/counts300.svm";
        r.task = Task::Regression;
        r.preprocessing.standardize_features = true;
        r.preprocessing.normalize_labels = true;
        corpus.push_back({"counts300", load_dataset(r)});
    }
    corpus.push_back({"two_point", synth_two_point(0.3, 80, 1)});
    corpus.push_back({"gaussian_classes", synth_gaussian_classes(120, 3, 1.5, 2)});
    {
        Sample s = synth_sine_regression(120, 2, 0.2, 3);
        s.labels = normalize_regression_labels(s.labels);
        corpus.push_back({"sine_regression", s});
    }
    double worst_identity = 0.0, worst_violation = -1e300;
    int kernels = 0;
    for (const auto& e : corpus) {
        const Sample& s = e.sample;
        BankConfig bc;
        bc.center = false;
        if (e.name == "counts300") {
            bc.family = BankFamily::RankOne;
            bc.top_k = 8;
        } else {
            bc.gamma0 = -3;
            bc.gamma1 = 2;
        }
        const BaseKernelBank bank = build_bank(s, bc);
        std::vector<Matrix> ks;
        for (std::size_t k = 0; k < bank.size(); ++k) ks.push_back(bank[k].entries());
        Matrix uniform = Matrix::Zero(s.size(), s.size());
        for (const auto& K : ks) uniform += K / static_cast<double>(ks.size());
        ks.push_back(uniform);
        const Vector& y = s.labels;
        const int m = static_cast<int>(s.size());
        for (const auto& K : ks) {
            const Vector h = oracle::h_predictor(K, y);
            const double rho = oracle::centered_alignment(K, outer(y));
            double yh = 0.0;
            for (int i = 0; i < m; ++i) yh += y[i] * h[i];
            yh /= m;
            const PredictorDiagnostics d = predictor_diagnostics(GramMatrix(K), y, s.task);
            worst_identity = std::max({worst_identity, std::abs(yh - rho), std::abs(d.identity_value - rho),
                                       std::abs(d.rho_hat - rho)});
            double err = 0.0, bound = 0.0;
            if (s.task == Task::Classification) {
                // Gamma: worst pointwise over average second moment of the
                // centered kernel, divided by the label scale.
                const Matrix Kc = oracle::center(K), Tc = oracle::center(outer(y));
                const double avg = oracle::frob(Kc, Kc) / (double(m) * m);
                double g = 0.0;
                for (int i = 0; i < m; ++i) g = std::max(g, std::sqrt(Kc.row(i).squaredNorm() / m / avg));
                const double gamma = g / std::sqrt(oracle::frob(Tc, Tc) / (double(m) * m));
                int wrong = 0;
                for (int i = 0; i < m; ++i) wrong += (y[i] * h[i] < 0.0);
                err = double(wrong) / m;
                bound = 1.0 - rho / gamma;
            } else {
                err = (y - h).squaredNorm() / m;
                bound = 2.0 * (1.0 - rho);
            }
            worst_violation = std::max(worst_violation, err - bound);
            o.require(d.holds, "library reports the bound as holding");
            ++kernels;
        }
    }
    o.require(worst_identity <= 1e-9, "identity within 1e-9");
    o.require(worst_violation <= 1e-8, "bounds never violated beyond 1e-8");
    o.note << corpus.size() << " datasets, " << kernels << " kernels, identity gap " << worst_identity
           << ", max (error - bound) " << worst_violation;
}

// 7. Normalization identity and QP stability under one-point replacement.
void stability_check(Outcome& o) {
    std::mt19937_64 gen(7);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int p = 2 + rep % 5;
        const Vector v = oracle::random_vec(p, gen).cwiseAbs(), w = oracle::random_vec(p, gen).cwiseAbs();
        worst = std::max(worst, delta_mu_identity(v, w));
        // Same identity evaluated directly.
        const Vector dv = w - v;
        const double nv = v.norm(), nw = w.norm();
        const Vector rhs = dv / nw - dv.dot(v + w) * v / (nv * nw * (nv + nw));
        worst = std::max(worst, (w / nw - v / nv - rhs).norm());
    }
    o.require(worst <= 1e-12, "identity residual within 1e-12");

    const std::vector<KernelSpec> specs{LinearKernel{1.0}, GaussianKernel{1.0}, GaussianKernel{0.25}};
    const double tol = 1e-10;
    int holds = 0, trials = 0, skipped = 0;
    double min_slack = 1e300;
    for (int t = 0; t < 500; ++t) {
        const Sample s = (t % 2 == 0) ? synth_gaussian_classes(30, 2, 1.5, 100 + t) : synth_two_point(0.4, 30, 100 + t);
        std::uniform_int_distribution<int> pick(0, 29);
        const auto i = static_cast<std::size_t>(pick(gen));
        const auto r = static_cast<Eigen::Index>(pick(gen));
        const Vector point = s.points.row(r).transpose() + 0.1 * oracle::random_vec(2, gen);
        const double label = (t % 3 == 0) ? -s.labels[r] : s.labels[r];
        try {
            const StabilityProbe pr = qp_stability_check(s, specs, true, i, point, label, tol);
            ++trials;
            // Recompute both sides from the returned systems.
            const Vector dv = pr.v_prime - pr.v;
            const double lhs = dv.dot(pr.M * dv);
            const double rhs = (pr.a_prime - pr.a - (pr.M_prime - pr.M) * pr.v_prime).dot(dv);
            const double slack = rhs - lhs;
            min_slack = std::min(min_slack, slack);
            if (slack >= -10.0 * tol && pr.holds) ++holds;
        } catch (const DegenerateKernel&) {
            ++skipped;
        }
    }
    o.require(holds == trials, "stability inequality on every trial");
    o.require(trials >= 450, "enough non-degenerate trials");
    o.note << "identity residual " << worst << ", " << holds << "/" << trials << " trials hold (" << skipped
           << " degenerate), min slack " << min_slack;
}

// 8. Learners against dense and grid oracles.
void learner_check(Outcome& o) {
    std::mt19937_64 gen(8);
    double worst_krr = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
        const int m = 10 + rep;
        const Matrix K = oracle::random_psd(m, 1 + rep % 7, gen);
        const Vector y = oracle::random_vec(m, gen);
        const double lam = 0.01 * (1 + rep % 5);
        const KrrModel model = krr_fit(GramMatrix(K), y, lam);
        const Vector ref = oracle::ridge_solve(K, y, m * lam);
        worst_krr = std::max(worst_krr, (model.alpha - ref).norm() / (1.0 + ref.norm()));
    }
    o.require(worst_krr <= 1e-10, "KRR matches the dense solve");

    double worst_onestage = 0.0;
    bool all_monotone = true;
    for (int rep = 0; rep < 6; ++rep) {
        const int m = 10, p = 1 + rep % 2;
        const Vector y = oracle::random_labels(m, gen);
        std::vector<Matrix> raw;
        std::vector<GramMatrix> ks;
        for (int k = 0; k < p; ++k) {
            raw.push_back(scaled_trace_one(oracle::random_psd(m, 2 + 2 * k, gen), 4.0));
            ks.emplace_back(raw.back());
        }
        const BaseKernelBank bank(ks);
        OneStageConfig cfg;
        cfg.gamma = 0.5 + 0.5 * rep;
        cfg.gamma_prime = 0.5;
        cfg.gamma_dprime = (rep % 3 == 0) ? 0.1 : 0.0;
        const Matrix T = outer(y);
        Vector a(p);
        Matrix M(p, p);
        for (int k = 0; k < p; ++k) {
            a[k] = oracle::frob(oracle::center(raw[k]), T);
            for (int l = 0; l < p; ++l) M(k, l) = oracle::frob(oracle::center(raw[k]), oracle::center(raw[l]));
        }
        auto G = [&](double s, double t) {
            Vector mu(p);
            mu[0] = s;
            if (p == 2) mu[1] = t;
            Matrix Km = s * raw[0];
            if (p == 2) Km += t * raw[1];
            return y.dot(oracle::ridge_solve(Km, y, 1.0)) - cfg.gamma * mu.dot(a) +
                   mu.dot((cfg.gamma_dprime * M + cfg.gamma_prime * Matrix::Identity(p, p)) * mu);
        };
        const double best = p == 1 ? G(oracle::golden_section([&](double s) { return G(s, 0.0); }, 0.0, 200.0), 0.0)
                                   : oracle::grid_refine_2d(G);
        const KrrLearnResult r = onestage_learn(bank, y, cfg);
        all_monotone = all_monotone && monotone(r.objective_trace);
        const double got = G(r.weights.mu[0], p == 2 ? r.weights.mu[1] : 0.0);
        worst_onestage = std::max(worst_onestage, got - best);
    }
    o.require(worst_onestage <= 1e-4, "onestage within 1e-4 of the grid optimum");

    // Iterative learners on a common bank.
    const int m = 40;
    const Vector y = oracle::random_labels(m, gen);
    std::vector<GramMatrix> ks;
    for (int k = 0; k < 4; ++k) ks.emplace_back(scaled_trace_one(oracle::random_psd(m, 3, gen) + 0.2 * k * outer(y) / m, 1.0));
    const BaseKernelBank bank(ks);
    const L1SvmResult l1 = l1svm_learn(bank, y, 10.0, 4.0);
    const KrrLearnResult l2 = l2krr_learn(bank, y, 1e-3, 2.0);
    NnqpProblem prob;
    prob.M = oracle::random_psd(6, 6, gen);
    prob.a = oracle::random_vec(6, gen);
    const NnqpResult qp = nnqp_solve(prob);
    all_monotone = all_monotone && monotone(l1.objective_trace) && monotone(l2.objective_trace) &&
                   monotone(qp.objective_trace);
    o.require(all_monotone, "objective traces non-increasing");
    o.note << "KRR gap " << worst_krr << ", onestage excess " << worst_onestage << ", traces monotone "
           << (all_monotone ? "yes" : "no");
}

// 9. alignf against uniform weights on the bundled rings data.
void rings_check(Outcome& o) {
    ExperimentConfig cfg;
    cfg.dataset.path = std::string(CALIGN_DATA_DIR) + "/rings350.csv";
    cfg.dataset.label_column = "label";
    cfg.dataset.preprocessing.standardize_features = true;
    cfg.bank.gamma0 = -3;
    cfg.bank.gamma1 = 3;
    cfg.folds = 5;
    cfg.lambda_grid = {1.0};
    cfg.Lambda_grid = {0.25, 1.0, 4.0, 16.0};
    cfg.seed = 1;
    cfg.method = Method::Alignf;
    const ExperimentRun af = run_cv(cfg, 0);
    cfg.method = Method::Unif;
    const ExperimentRun un = run_cv(cfg, 0);
    std::vector<double> ea, eu, aa, au;
    for (const auto& f : af.fold_results) ea.push_back(f.test_error), aa.push_back(f.train_alignment);
    for (const auto& f : un.fold_results) eu.push_back(f.test_error), au.push_back(f.train_alignment);
    auto sd = [](const std::vector<double>& v) {
        const double mu = oracle::mean(v);
        double s = 0.0;
        for (double x : v) s += (x - mu) * (x - mu);
        return std::sqrt(s / static_cast<double>(v.size() - 1));
    };
    const double pooled = std::sqrt(0.5 * (sd(ea) * sd(ea) + sd(eu) * sd(eu)));
    o.require(oracle::mean(aa) > oracle::mean(au), "alignf training alignment above unif");
    o.require(oracle::mean(ea) <= oracle::mean(eu) + pooled, "alignf error within one pooled std of unif");
    o.note << "alignment " << oracle::mean(aa) << " vs " << oracle::mean(au) << ", error " << oracle::mean(ea)
           << " vs " << oracle::mean(eu) << " (pooled std " << pooled << ")";
}

// 10. Scaling the kernel by Lambda equals scaling the ridge by 1/Lambda.
void regularization_path_check(Outcome& o) {
    std::mt19937_64 gen(10);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const int m = 8 + rep % 20, n = 5;
        Matrix X(m + n, 3);
        for (int i = 0; i < m + n; ++i) X.row(i) = oracle::random_vec(3, gen).transpose();
        Matrix full(m + n, m + n);
        for (int i = 0; i < m + n; ++i)
            for (int j = 0; j < m + n; ++j) full(i, j) = std::exp(-0.5 * (X.row(i) - X.row(j)).squaredNorm());
        const Matrix K = full.topLeftCorner(m, m), cross = full.bottomLeftCorner(n, m);
        const Vector y = oracle::random_vec(m, gen);
        std::uniform_real_distribution<double> u(0.1, 20.0);
        const double L = u(gen), lam = 0.05 * u(gen);
        const KrrModel scaled = krr_fit(GramMatrix(Matrix(L * K)), y, lam);
        const KrrModel ridge = krr_fit(GramMatrix(K), y, lam / L);
        const Vector p1 = predict(scaled, L * cross), p2 = predict(ridge, cross);
        worst = std::max({worst, (p1 - p2).norm() / (1.0 + p2.norm()),
                          (scaled.fitted - ridge.fitted).norm() / (1.0 + ridge.fitted.norm())});
    }
    o.require(worst <= 1e-10, "predictions agree to 1e-10");
    o.note << "50 instances, max relative gap " << worst;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double time_limit;  // seconds, <= 0 for none
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "two-point alignment curve", 1.0, two_point_curve_check},
        {2, "QP solver matches support enumeration", 10.0, qp_oracle_check},
        {3, "closed form when M^-1 a >= 0", 0.0, closed_form_check},
        {4, "alignf dominates align and unif per fold", 0.0, dominance_check},
        {5, "concentration coverage and decay", 60.0, concentration_check},
        {6, "h_S identity and sample bounds", 0.0, predictor_identity_check},
        {7, "normalization identity and QP stability", 0.0, stability_check},
        {8, "learners against oracles", 0.0, learner_check},
        {9, "alignf vs unif on rings350", 120.0, rings_check},
        {10, "KRR regularization path", 0.0, regularization_path_check},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.ok = false;
            o.note << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit > 0.0 && secs > c.time_limit) {
            o.ok = false;
            o.note << "; over the " << c.time_limit << " s limit";
        }
        if (!o.ok) ++failed;
        std::printf("%s %2d %-45s %8.3f s  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs, o.note.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
