#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mechanic/vec.hpp"

namespace mechanic {

// Indices of the examples making up one minibatch.
using Batch = std::vector<std::uint32_t>;

// Immutable example matrix plus labels. Rows are stored dense up to
// kDenseDimLimit features and sparse above it; accessors hide the split.
class Dataset {
public:
    static constexpr long kDenseDimLimit = 10000;

    static Dataset dense_from(std::vector<double> features, std::vector<double> labels, long dim);
    static Dataset sparse_from(std::vector<std::vector<std::pair<int, double>>> rows,
                               std::vector<double> labels, long dim);

    long size() const { return n_; }
    long dim() const { return dim_; }
    bool is_sparse() const { return sparse_; }
    double label(long i) const { return labels_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& labels() const { return labels_; }

    double feature(long i, long j) const;
    double row_dot(long i, const ParamVector& w) const;
    // Same, over a raw slice of length dim() (class-major weight blocks).
    double row_dot_ptr(long i, const double* w) const;
    // out += coef * row_i
    void row_axpy(long i, double coef, ParamVector& out) const;
    void row_axpy_ptr(long i, double coef, double* out) const;
    // Dense copy of one row; throws std::invalid_argument for sparse sets
    // wider than the dense limit.
    void row_copy(long i, ParamVector& out) const;

private:
    long n_ = 0;
    long dim_ = 0;
    bool sparse_ = false;
    std::vector<double> dense_;  // row-major, n*dim
    std::vector<std::vector<std::pair<int, double>>> rows_;
    std::vector<double> labels_;
};

// Text loader for "label idx:val idx:val ..." lines with 1-based ascending
// indices. Feature dimension is the max index seen unless dim_override > 0.
// Malformed input raises ParseError carrying the line number.
Dataset load_libsvm(const std::string& path, long dim_override = 0);

void save_libsvm(const Dataset& dataset, const std::string& path);

// Gaussian features, labels from a random hyperplane, then each label is
// flipped with probability flip_noise. Deterministic in seed.
Dataset synth_logistic(std::uint64_t seed, long n_examples, long dim, double flip_noise);

// Per-epoch random reshuffle into consecutive batches; the last batch keeps
// the remainder. Deterministic in (seed, epoch).
std::vector<Batch> minibatch_iter(const Dataset& dataset, long batch_size,
                                  std::uint64_t seed, long epoch);

} // namespace mechanic
