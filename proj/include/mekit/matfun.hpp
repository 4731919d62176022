#pragma once

#include <complex>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "mekit/errors.hpp"

namespace mekit {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RowVector = Eigen::RowVectorXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

// Largest absolute entry (0 for an empty matrix).
double max_abs(const Matrix& m);

// Throws DimensionError unless m is square; DomainError on NaN/Inf entries.
void require_square(const Matrix& m, const char* what);
void require_finite(const Matrix& m, const char* what);

// Matrix exponential by scaling and squaring with the degree 13 Pade approximant.
Matrix expm(const Matrix& m);

Matrix kron(const Matrix& a, const Matrix& b);
// a (+) b = a (x) I + I (x) b
Matrix kron_sum(const Matrix& a, const Matrix& b);

// Column-stacking vec operator and its inverse.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

// Solves A X + X B = C with the complex Schur (Bartels-Stewart) method.
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c);
// Reference path: vec X = (I (x) A + B^T (x) I)^{-1} vec C.
Matrix solve_sylvester_vectorized(const Matrix& a, const Matrix& b, const Matrix& c);

// Inverse with a singularity check based on the reciprocal condition number.
Matrix inverse(const Matrix& m, const char* what = "matrix");
// Solves m X = rhs, throwing SingularityError when m is numerically singular.
Matrix solve(const Matrix& m, const Matrix& rhs, const char* what = "matrix");

struct EigDecomp {
    Vector eigenvalues;
    Matrix vectors;
    double condition = 0.0;      // 2-norm condition number of the eigenvector matrix
    bool diagonalizable = false; // reconstruction residual within 1e-9 relative
};

EigDecomp eig(const Matrix& m);

// Principal power m^p. Integer p uses repeated products/inverse; otherwise
// eigendecomposition when well conditioned, Schur-Pade otherwise.
Matrix mat_frac_power(const Matrix& m, double p);

// Returns the real part of v, throwing DomainError when |Im v| > tol * max(1, scale).
double assert_real(cplx v, double scale = 1.0, double tol = 1e-8, const char* what = "value");

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
    std::string warning;
};

// Adaptive quadrature on [a, b]; b may be +infinity.
QuadResult quad(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

} // namespace mekit
