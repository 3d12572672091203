#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mechanic {

// Flat parameter/gradient/update vector, all layers concatenated.
using ParamVector = std::vector<double>;

inline void check_same_dim(const ParamVector& a, const ParamVector& b,
                           const char* context = "") {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(*context ? context : "vectors") +
                                    ": dimension mismatch: " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
}

inline double dot(const ParamVector& a, const ParamVector& b) {
    check_same_dim(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double nrm2(const ParamVector& a) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    return std::sqrt(acc);
}

// y += alpha * x
inline void axpy(double alpha, const ParamVector& x, ParamVector& y) {
    check_same_dim(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline bool all_finite(const ParamVector& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace mechanic
