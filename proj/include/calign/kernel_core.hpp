#pragma once

#include "calign/error.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace calign {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Task { Classification, Regression };

const char* to_string(Task task);
Task task_from_string(const std::string& name);

// m points with d features and one label per point.
struct Sample {
    Matrix points;
    Vector labels;
    Task task = Task::Classification;
    // Features that were constant when standardization was requested.
    std::vector<std::size_t> constant_features;

    std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }

    // Throws InputError unless m >= 2, all entries are finite and
    // classification labels are in {-1, +1}.
    void validate() const;

    // Rows selected by `idx`, in that order.
    Sample subset(const std::vector<std::size_t>& idx) const;
};

// Symmetric PSD kernel matrix plus provenance flags.
class GramMatrix {
public:
    GramMatrix() = default;

    // Validates symmetry (relative 1e-10) and PSD-ness
    // (lambda_min >= -1e-8 * lambda_max). Throws InputError otherwise.
    explicit GramMatrix(Matrix entries, bool centered = false, bool trace_one = false);

    // For matrices that are PSD by construction (kernel evaluations,
    // centering, non-negative combinations). Symmetrizes but skips the
    // eigenvalue check.
    static GramMatrix trusted(Matrix entries, bool centered = false, bool trace_one = false);

    const Matrix& entries() const { return entries_; }
    std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
    bool is_centered() const { return centered_; }
    bool is_trace_one() const { return trace_one_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

    // Principal submatrix on `idx` (flags are dropped: a sub-block of a
    // centered matrix is not centered).
    GramMatrix principal(const std::vector<std::size_t>& idx) const;

private:
    struct Unchecked {};
    GramMatrix(Unchecked, Matrix entries, bool centered, bool trace_one);

    Matrix entries_;
    bool centered_ = false;
    bool trace_one_ = false;
};

struct GaussianKernel {
    double gamma = 1.0;
};
struct LinearKernel {
    double offset = 0.0;
};
struct RankOneKernel {
    std::size_t feature_index = 0;
};

using KernelSpec = std::variant<GaussianKernel, LinearKernel, RankOneKernel>;

// Throws ParameterError for gamma <= 0 or offset < 0.
void validate(const KernelSpec& spec);
std::string describe(const KernelSpec& spec);

// Kernel value between two feature vectors.
double kernel_value(const KernelSpec& spec, const Eigen::Ref<const Vector>& x,
                    const Eigen::Ref<const Vector>& z);

GramMatrix gram(const KernelSpec& spec, const Sample& sample);

// Rows of `rows` against rows of `cols`; not necessarily square.
Matrix cross_gram(const KernelSpec& spec, const Matrix& rows, const Matrix& cols);

// K_c = K - row means - column means + grand mean.
GramMatrix center(const GramMatrix& K);
Matrix center(const Matrix& K);

double frobenius_product(const Matrix& A, const Matrix& B);
double frobenius_product(const GramMatrix& A, const GramMatrix& B);

// Divides by the trace. Throws DegenerateKernel if the trace is not positive.
GramMatrix trace_normalize(const GramMatrix& K);

// Ordered collection of p Gram matrices over a shared sample.
class BaseKernelBank {
public:
    BaseKernelBank() = default;
    // Throws DimensionError on mismatched sizes, DegenerateKernel (listing
    // every offending index) if any centered kernel has zero norm.
    BaseKernelBank(std::vector<GramMatrix> kernels, std::vector<std::string> names = {});

    std::size_t size() const { return kernels_.size(); }
    std::size_t sample_size() const { return kernels_.empty() ? 0 : kernels_.front().size(); }
    const GramMatrix& operator[](std::size_t k) const { return kernels_[k]; }
    const std::vector<GramMatrix>& kernels() const { return kernels_; }
    const std::vector<std::string>& names() const { return names_; }

    // sum_k mu_k K_k. mu must be non-negative.
    GramMatrix combine(const Vector& mu) const;
    // Same combination on a rectangular block: rows `rows`, columns `cols`.
    Matrix combine_block(const Vector& mu, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols) const;

    BaseKernelBank principal(const std::vector<std::size_t>& idx) const;

private:
    std::vector<GramMatrix> kernels_;
    std::vector<std::string> names_;
};

// Target kernel y y^T.
GramMatrix target_kernel(const Vector& y);

}  // namespace calign
