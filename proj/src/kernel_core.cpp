#include "calign/kernel_core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace calign {

const char* to_string(Task task) {
    return task == Task::Classification ? "classification" : "regression";
}

Task task_from_string(const std::string& name) {
    if (name == "classification") return Task::Classification;
    if (name == "regression") return Task::Regression;
    throw ParameterError("unknown task '" + name + "'");
}

void Sample::validate() const {
    if (points.rows() < 2) throw InputError("sample needs at least 2 points");
    if (labels.size() != points.rows())
        throw DimensionError("label count " + std::to_string(labels.size()) +
                             " does not match point count " + std::to_string(points.rows()));
    if (!points.allFinite()) throw InputError("sample contains non-finite features");
    if (!labels.allFinite()) throw InputError("sample contains non-finite labels");
    if (task == Task::Classification) {
        for (Eigen::Index i = 0; i < labels.size(); ++i)
            if (labels[i] != 1.0 && labels[i] != -1.0)
                throw InputError("classification label " + std::to_string(labels[i]) +
                                 " at row " + std::to_string(i) + " is not in {-1,+1}");
    }
}

Sample Sample::subset(const std::vector<std::size_t>& idx) const {
    Sample out;
    out.task = task;
    out.constant_features = constant_features;
    out.points.resize(static_cast<Eigen::Index>(idx.size()), points.cols());
    out.labels.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(idx[r]);
        out.points.row(static_cast<Eigen::Index>(r)) = points.row(i);
        out.labels[static_cast<Eigen::Index>(r)] = labels[i];
    }
    return out;
}

namespace {

void check_square(const Matrix& K, const char* what) {
    if (K.rows() != K.cols())
        throw DimensionError(std::string(what) + " must be square, got " +
                             std::to_string(K.rows()) + "x" + std::to_string(K.cols()));
}

Matrix symmetrized(Matrix K) {
    return 0.5 * (K + K.transpose());
}

}  // namespace

GramMatrix::GramMatrix(Unchecked, Matrix entries, bool centered, bool trace_one)
    : entries_(std::move(entries)), centered_(centered), trace_one_(trace_one) {}

GramMatrix::GramMatrix(Matrix entries, bool centered, bool trace_one)
    : centered_(centered), trace_one_(trace_one) {
    check_square(entries, "Gram matrix");
    if (!entries.allFinite()) throw InputError("Gram matrix has non-finite entries");
    const double scale = entries.cwiseAbs().maxCoeff();
    const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
    if (entries.size() > 0 && asym > 1e-10 * std::max(scale, 1e-300))
        throw InputError("Gram matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    entries_ = symmetrized(std::move(entries));
    if (entries_.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(entries_, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
        if (lo < -1e-8 * hi)
            throw InputError("Gram matrix is not PSD (min eigenvalue " + std::to_string(lo) + ")");
    }
}

GramMatrix GramMatrix::trusted(Matrix entries, bool centered, bool trace_one) {
    check_square(entries, "Gram matrix");
    return GramMatrix(Unchecked{}, symmetrized(std::move(entries)), centered, trace_one);
}

GramMatrix GramMatrix::principal(const std::vector<std::size_t>& idx) const {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Matrix sub(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            sub(r, c) = entries_(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c]));
    return GramMatrix(Unchecked{}, std::move(sub), false, false);
}

void validate(const KernelSpec& spec) {
    if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
        if (!(g->gamma > 0.0) || !std::isfinite(g->gamma))
            throw ParameterError("gaussian kernel needs gamma > 0");
    } else if (const auto* l = std::get_if<LinearKernel>(&spec)) {
        if (!(l->offset >= 0.0) || !std::isfinite(l->offset))
            throw ParameterError("linear kernel needs offset >= 0");
    }
}

std::string describe(const KernelSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    if (const auto* g = std::get_if<GaussianKernel>(&spec))
        os << "gaussian(gamma=" << g->gamma << ")";
    else if (const auto* l = std::get_if<LinearKernel>(&spec))
        os << "linear(offset=" << l->offset << ")";
    else
        os << "rank_one(feature=" << std::get<RankOneKernel>(spec).feature_index << ")";
    return os.str();
}

double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                    const Eigen::Ref<const Vector>& z) {
    if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
        // Fixed left-to-right accumulation so results do not depend on
        // vectorization of the caller.
        double d2 = 0.0;
        for (Eigen::Index t = 0; t < x.size(); ++t) {
            const double diff = x[t] - z[t];
            d2 += diff * diff;
        }
        if (!std::isfinite(d2)) throw InputError("non-finite squared distance in gaussian kernel");
        return std::exp(-g->gamma * d2);
    }
    if (const auto* l = std::get_if<LinearKernel>(&spec)) {
        double dot = 0.0;
        for (Eigen::Index t = 0; t < x.size(); ++t) dot += x[t] * z[t];
        return dot + l->offset;
    }
    const auto k = static_cast<Eigen::Index>(std::get<RankOneKernel>(spec).feature_index);
    if (k >= x.size()) throw DimensionError("rank_one feature index out of range");
    return x[k] * z[k];
}

GramMatrix gram(const KernelSpec& spec, const Sample& sample) {
    validate(spec);
    const Matrix& X = sample.points;
    const Eigen::Index m = X.rows();
    Matrix K(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vector xi = X.row(i).transpose();
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_value(spec, xi, X.row(j).transpose());
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    if (!K.allFinite()) throw InputError("kernel evaluation produced non-finite values");
    return GramMatrix::trusted(std::move(K));
}

Matrix cross_gram(const KernelSpec& spec, const Matrix& rows, const Matrix& cols) {
    validate(spec);
    if (rows.cols() != cols.cols()) throw DimensionError("cross_gram feature dimension mismatch");
    Matrix K(rows.rows(), cols.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const Vector xi = rows.row(i).transpose();
        for (Eigen::Index j = 0; j < cols.rows(); ++j)
            K(i, j) = kernel_value(spec, xi, cols.row(j).transpose());
    }
    return K;
}

Matrix center(const Matrix& K) {
    check_square(K, "centering input");
    const Eigen::Index m = K.rows();
    if (m == 0) return K;
    const Vector col_mean = K.colwise().mean().transpose();
    const Vector row_mean = K.rowwise().mean();
    const double grand = K.mean();
    Matrix out(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i)
            out(i, j) = K(i, j) - col_mean[j] - row_mean[i] + grand;
    return out;
}

GramMatrix center(const GramMatrix& K) {
    if (K.is_centered()) return K;
    return GramMatrix::trusted(center(K.entries()), true, false);
}

double frobenius_product(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw DimensionError("frobenius_product: " + std::to_string(A.rows()) + "x" +
                             std::to_string(A.cols()) + " vs " + std::to_string(B.rows()) + "x" +
                             std::to_string(B.cols()));
    return A.cwiseProduct(B).sum();
}

double frobenius_product(const GramMatrix& A, const GramMatrix& B) {
    return frobenius_product(A.entries(), B.entries());
}

GramMatrix trace_normalize(const GramMatrix& K) {
    const double tr = K.entries().trace();
    if (!(tr > 0.0)) throw DegenerateKernel("trace_normalize: trace is " + std::to_string(tr));
    if (K.is_trace_one() && std::abs(tr - 1.0) <= 1e-12) return K;
    return GramMatrix::trusted(K.entries() / tr, K.is_centered(), true);
}

BaseKernelBank::BaseKernelBank(std::vector<GramMatrix> kernels, std::vector<std::string> names)
    : kernels_(std::move(kernels)), names_(std::move(names)) {
    if (names_.empty())
        for (std::size_t k = 0; k < kernels_.size(); ++k) names_.push_back("K" + std::to_string(k));
    if (names_.size() != kernels_.size()) throw DimensionError("bank: one name per kernel required");
    std::vector<std::size_t> degenerate;
    for (std::size_t k = 0; k < kernels_.size(); ++k) {
        if (kernels_[k].size() != kernels_.front().size())
            throw DimensionError("bank: kernel " + std::to_string(k) + " has size " +
                                 std::to_string(kernels_[k].size()) + ", expected " +
                                 std::to_string(kernels_.front().size()));
        const Matrix Kc = center(kernels_[k].entries());
        const double scale = kernels_[k].entries().norm();
        if (!(Kc.norm() > 1e-12 * std::max(scale, 1e-300))) degenerate.push_back(k);
    }
    if (!degenerate.empty()) {
        std::string list;
        for (auto k : degenerate) list += (list.empty() ? "" : ",") + std::to_string(k);
        throw DegenerateKernel("bank: centered base kernel(s) with zero norm: " + list, degenerate);
    }
}

GramMatrix BaseKernelBank::combine(const Vector& mu) const {
    if (static_cast<std::size_t>(mu.size()) != kernels_.size())
        throw DimensionError("combine: weight count does not match bank size");
    const auto m = static_cast<Eigen::Index>(sample_size());
    Matrix K = Matrix::Zero(m, m);
    bool centered = true;
    for (std::size_t k = 0; k < kernels_.size(); ++k) {
        if (mu[static_cast<Eigen::Index>(k)] < -1e-12)
            throw ParameterError("combine: mixture weights must be non-negative");
        K.noalias() += mu[static_cast<Eigen::Index>(k)] * kernels_[k].entries();
        centered = centered && kernels_[k].is_centered();
    }
    return GramMatrix::trusted(std::move(K), centered, false);
}

Matrix BaseKernelBank::combine_block(const Vector& mu, const std::vector<std::size_t>& rows,
                                     const std::vector<std::size_t>& cols) const {
    if (static_cast<std::size_t>(mu.size()) != kernels_.size())
        throw DimensionError("combine_block: weight count does not match bank size");
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < kernels_.size(); ++k) {
        const double w = mu[static_cast<Eigen::Index>(k)];
        if (w == 0.0) continue;
        const Matrix& K = kernels_[k].entries();
        for (std::size_t c = 0; c < cols.size(); ++c)
            for (std::size_t r = 0; r < rows.size(); ++r)
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +=
                    w * K(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
    }
    return out;
}

BaseKernelBank BaseKernelBank::principal(const std::vector<std::size_t>& idx) const {
    std::vector<GramMatrix> sub;
    sub.reserve(kernels_.size());
    for (const auto& K : kernels_) sub.push_back(K.principal(idx));
    return BaseKernelBank(std::move(sub), names_);
}

GramMatrix target_kernel(const Vector& y) {
    return GramMatrix::trusted(y * y.transpose());
}

}  // namespace calign
