// SPDX-License-Identifier: Apache-2.0
//
// Shared numeric aliases, error types and small helpers.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sparsebf {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Matrix shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be positive definite is numerically singular.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Not enough snapshots for the requested statistic.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A configured capacity (e.g. enumeration cap) would be exceeded.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, unsigned long long requested)
        : Error(what), requested_(requested) {}
    unsigned long long requested() const noexcept { return requested_; }

private:
    unsigned long long requested_;
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// Largest |A - A^H| entry relative to the largest |A| entry.
inline double hermitian_defect(const CMatrix& a) {
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

/// n choose k, saturating at the maximum representable value.
inline unsigned long long binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned long long r = 1;
    for (unsigned i = 1; i <= k; ++i) {
        const unsigned long long num = n - k + i;
        if (r > ~0ULL / num) return ~0ULL;
        r = r * num / i;
    }
    return r;
}

}  // namespace sparsebf
