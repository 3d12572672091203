#include "mechanic/data.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mechanic/errors.hpp"
#include "mechanic/rng.hpp"

namespace mechanic {

Dataset Dataset::dense_from(std::vector<double> features, std::vector<double> labels, long dim) {
    if (dim < 1) throw std::invalid_argument("dataset: dim must be at least 1");
    if (features.size() != labels.size() * static_cast<std::size_t>(dim))
        throw std::invalid_argument("dataset: feature/label size mismatch");
    Dataset d;
    d.n_ = static_cast<long>(labels.size());
    d.dim_ = dim;
    d.sparse_ = false;
    d.dense_ = std::move(features);
    d.labels_ = std::move(labels);
    return d;
}

Dataset Dataset::sparse_from(std::vector<std::vector<std::pair<int, double>>> rows,
                             std::vector<double> labels, long dim) {
    if (dim < 1) throw std::invalid_argument("dataset: dim must be at least 1");
    if (rows.size() != labels.size())
        throw std::invalid_argument("dataset: row/label count mismatch");
    Dataset d;
    d.n_ = static_cast<long>(labels.size());
    d.dim_ = dim;
    d.labels_ = std::move(labels);
    if (dim <= kDenseDimLimit) {
        d.sparse_ = false;
        d.dense_.assign(rows.size() * static_cast<std::size_t>(dim), 0.0);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (auto [j, val] : rows[i])
                d.dense_[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)] = val;
    } else {
        d.sparse_ = true;
        d.rows_ = std::move(rows);
    }
    return d;
}

double Dataset::feature(long i, long j) const {
    if (!sparse_) return dense_[static_cast<std::size_t>(i * dim_ + j)];
    for (auto [idx, val] : rows_[static_cast<std::size_t>(i)])
        if (idx == j) return val;
    return 0.0;
}

double Dataset::row_dot_ptr(long i, const double* w) const {
    double acc = 0.0;
    if (!sparse_) {
        const double* row = dense_.data() + static_cast<std::size_t>(i * dim_);
        for (long j = 0; j < dim_; ++j) acc += row[j] * w[j];
    } else {
        for (auto [j, val] : rows_[static_cast<std::size_t>(i)]) acc += val * w[j];
    }
    return acc;
}

double Dataset::row_dot(long i, const ParamVector& w) const {
    return row_dot_ptr(i, w.data());
}

void Dataset::row_axpy_ptr(long i, double coef, double* out) const {
    if (!sparse_) {
        const double* row = dense_.data() + static_cast<std::size_t>(i * dim_);
        for (long j = 0; j < dim_; ++j) out[j] += coef * row[j];
    } else {
        for (auto [j, val] : rows_[static_cast<std::size_t>(i)]) out[j] += coef * val;
    }
}

void Dataset::row_axpy(long i, double coef, ParamVector& out) const {
    row_axpy_ptr(i, coef, out.data());
}

void Dataset::row_copy(long i, ParamVector& out) const {
    if (sparse_)
        throw std::invalid_argument("dataset: dense row copy requested on a sparse dataset");
    out.assign(dense_.begin() + i * dim_, dense_.begin() + (i + 1) * dim_);
}

namespace {

bool parse_double(const std::string& tok, double& out) {
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    // svm-style labels carry a leading '+' that from_chars rejects
    if (begin != end && *begin == '+') {
        ++begin;
        if (begin == end || *begin == '-' || *begin == '+') return false;
    }
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

} // namespace

Dataset load_libsvm(const std::string& path, long dim_override) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open dataset file '" + path + "'");

    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<double> labels;
    long max_index = 0;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank line
        double label;
        if (!parse_double(tok, label))
            throw ParseError("bad label '" + tok + "'", line_no);
        std::vector<std::pair<int, double>> row;
        long prev_index = 0;
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw ParseError("expected index:value, got '" + tok + "'", line_no);
            long index;
            {
                const char* b = tok.data();
                auto [ptr, ec] = std::from_chars(b, b + colon, index);
                if (ec != std::errc() || ptr != b + colon)
                    throw ParseError("bad feature index in '" + tok + "'", line_no);
            }
            double value;
            if (!parse_double(tok.substr(colon + 1), value))
                throw ParseError("bad feature value in '" + tok + "'", line_no);
            if (index < 1)
                throw ParseError("feature indices are 1-based, got " + std::to_string(index),
                                 line_no);
            if (index <= prev_index)
                throw ParseError("feature indices must be ascending", line_no);
            prev_index = index;
            max_index = std::max(max_index, index);
            row.emplace_back(static_cast<int>(index - 1), value);
        }
        rows.push_back(std::move(row));
        labels.push_back(label);
    }
    if (labels.empty()) throw ParseError("empty dataset file '" + path + "'", 0);

    long dim = dim_override > 0 ? dim_override : max_index;
    if (dim < max_index)
        throw std::invalid_argument("dataset: declared dim " + std::to_string(dim) +
                                    " below max feature index " + std::to_string(max_index));
    return Dataset::sparse_from(std::move(rows), std::move(labels), dim);
}

void save_libsvm(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
    out.precision(17);
    for (long i = 0; i < dataset.size(); ++i) {
        out << dataset.label(i);
        for (long j = 0; j < dataset.dim(); ++j) {
            const double v = dataset.feature(i, j);
            if (v != 0.0) out << ' ' << (j + 1) << ':' << v;
        }
        out << '\n';
    }
}

Dataset synth_logistic(std::uint64_t seed, long n_examples, long dim, double flip_noise) {
    if (n_examples < 1 || dim < 1)
        throw std::invalid_argument("synth_logistic: need n >= 1 and dim >= 1");
    if (!(flip_noise >= 0.0 && flip_noise <= 1.0))
        throw std::invalid_argument("synth_logistic: flip_noise outside [0, 1]");
    Rng rng(seed);
    ParamVector hyperplane(static_cast<std::size_t>(dim));
    for (auto& w : hyperplane) w = rng.normal();

    std::vector<double> features(static_cast<std::size_t>(n_examples * dim));
    std::vector<double> labels(static_cast<std::size_t>(n_examples));
    for (long i = 0; i < n_examples; ++i) {
        double margin = 0.0;
        for (long j = 0; j < dim; ++j) {
            const double x = rng.normal();
            features[static_cast<std::size_t>(i * dim + j)] = x;
            margin += hyperplane[static_cast<std::size_t>(j)] * x;
        }
        double label = margin >= 0.0 ? 1.0 : -1.0;
        if (rng.next_double() < flip_noise) label = -label;
        labels[static_cast<std::size_t>(i)] = label;
    }
    return Dataset::dense_from(std::move(features), std::move(labels), dim);
}

std::vector<Batch> minibatch_iter(const Dataset& dataset, long batch_size,
                                  std::uint64_t seed, long epoch) {
    const long n = dataset.size();
    if (batch_size < 1 || batch_size > n)
        throw std::invalid_argument("minibatch_iter: batch_size outside [1, n]");
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(epoch)));
    const auto perm = rng.permutation(static_cast<std::uint32_t>(n));
    std::vector<Batch> batches;
    batches.reserve(static_cast<std::size_t>((n + batch_size - 1) / batch_size));
    for (long start = 0; start < n; start += batch_size) {
        const long end = std::min(n, start + batch_size);
        batches.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return batches;
}

} // namespace mechanic
