#pragma once

#include "calign/kernel_core.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace calign {

enum class SourceKind { Csv, Libsvm, Synthetic };

struct Preprocessing {
    bool standardize_features = false;
    bool center_labels = false;
    // Centers and scales labels to mean square 1. Regression only.
    bool normalize_labels = false;
};

struct DatasetConfig {
    SourceKind source = SourceKind::Csv;
    std::string path;                    // csv / libsvm
    std::string label_column = "last";   // csv: "last", "first", 0-based index or header name
    std::string generator;               // synthetic: two_point, gaussian_classes, sine_regression
    std::map<std::string, double> params;
    std::uint64_t seed = 1;
    Task task = Task::Classification;
    Preprocessing preprocessing;
};

// Parsers on in-memory text; `source` is used in error messages.
Sample parse_csv(const std::string& text, const std::string& label_column, Task task,
                 const std::string& source = "<csv>");
Sample parse_libsvm(const std::string& text, Task task, const std::string& source = "<libsvm>");

// Reads, parses, generates and preprocesses. Throws ParseError (with line
// number) for malformed records and InputError for labels outside {-1,+1}
// in classification.
Sample load_dataset(const DatasetConfig& cfg);

// Standardize (population variance) -> center labels -> normalize labels.
void preprocess(Sample& sample, const Preprocessing& pre);

// round(alpha m) points at (-1,0) labelled -1 and the rest at (1,0) labelled +1,
// in shuffled order. Both classes are always present.
Sample synth_two_point(double alpha, std::size_t m, std::uint64_t seed);

// Two Gaussian classes at -+separation/2 along the first axis, unit noise.
Sample synth_gaussian_classes(std::size_t m, std::size_t dim, double separation, std::uint64_t seed);

// x uniform on [-3,3]^dim, y = sin(x_0) + noise N(0,1).
Sample synth_sine_regression(std::size_t m, std::size_t dim, double noise, std::uint64_t seed);

enum class BankFamily { GaussianGrid, RankOne, Explicit };

struct BankConfig {
    BankFamily family = BankFamily::GaussianGrid;
    int gamma0 = -3;
    int gamma1 = 3;
    std::size_t top_k = 1;
    std::vector<KernelSpec> kernels;  // explicit family
    bool trace_one = true;
    bool frobenius_one = false;
    bool center = true;

    void validate() const;
};

// Resolved kernel list: gamma ascending, or feature index ascending.
std::vector<KernelSpec> bank_specs(const Sample& sample, const BankConfig& cfg);

// Per kernel: trace-normalize the raw matrix, then center, then (if asked)
// divide by the centered Frobenius norm.
BaseKernelBank build_bank(const Sample& sample, const BankConfig& cfg);

std::string read_text_file(const std::string& path);

const char* to_string(SourceKind kind);
SourceKind source_from_string(const std::string& name);
const char* to_string(BankFamily family);
BankFamily family_from_string(const std::string& name);

}  // namespace calign
