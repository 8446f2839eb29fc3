#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace airs {

inline constexpr const char* kVersion = "0.1.0";

using cx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// dBm -> watts. All internal quantities are kept in watts; dBm appears
/// only at configuration boundaries.
inline double watts_from_dbm(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline double dbm_from_watts(double w) { return 10.0 * std::log10(w) + 30.0; }

/// dB -> linear power ratio.
inline double linear_from_db(double db) { return std::pow(10.0, db / 10.0); }

inline double db_from_linear(double x) { return 10.0 * std::log10(x); }

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw DimensionError(what);
}

/// Squared Euclidean norm of a complex vector expression.
template <typename Derived>
double norm2(const Eigen::MatrixBase<Derived>& v) {
    return v.squaredNorm();
}

/// Hermitian part; used to scrub tiny asymmetries before eigensolves.
inline CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

}  // namespace airs
