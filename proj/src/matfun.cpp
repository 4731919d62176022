#include "mekit/matfun.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mekit {

double max_abs(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        std::ostringstream os;
        os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
        throw DimensionError(os.str());
    }
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entry");
}

namespace {

constexpr double kPade13[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                              1187353796428800.0,  129060195264000.0,   10559470521600.0,
                              670442572800.0,      33522128640.0,       1323241920.0,
                              40840800.0,          960960.0,            16380.0,
                              182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;

} // namespace

Matrix expm(const Matrix& m) {
    require_square(m, "expm");
    require_finite(m, "expm");
    const Eigen::Index n = m.rows();
    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    int s = 0;
    if (norm1 > kTheta13) s = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    const Matrix a = m / std::ldexp(1.0, s);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const double* b = kPade13;
    Matrix u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
    u += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    u = a * u;
    Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2);
    v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix kron_sum(const Matrix& a, const Matrix& b) {
    require_square(a, "kron_sum");
    require_square(b, "kron_sum");
    return kron(a, Matrix::Identity(b.rows(), b.rows())) + kron(Matrix::Identity(a.rows(), a.rows()), b);
}

Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) throw DimensionError("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix inverse(const Matrix& m, const char* what) {
    require_square(m, what);
    return solve(m, Matrix::Identity(m.rows(), m.cols()), what);
}

Matrix solve(const Matrix& m, const Matrix& rhs, const char* what) {
    require_square(m, what);
    if (rhs.rows() != m.rows()) throw DimensionError(std::string(what) + ": right-hand side rows mismatch");
    Eigen::PartialPivLU<Matrix> lu(m);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) {
        std::ostringstream os;
        os << what << " is numerically singular (rcond=" << rc << ")";
        throw SingularityError(os.str());
    }
    return lu.solve(rhs);
}

Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
    require_square(a, "solve_sylvester A");
    require_square(b, "solve_sylvester B");
    if (c.rows() != a.rows() || c.cols() != b.rows()) throw DimensionError("solve_sylvester: C has wrong shape");
    require_finite(a, "solve_sylvester A");
    require_finite(b, "solve_sylvester B");
    require_finite(c, "solve_sylvester C");

    Eigen::ComplexSchur<Matrix> sa(a), sb(b);
    const Matrix& ta = sa.matrixT();
    const Matrix& tb = sb.matrixT();
    const Matrix& ua = sa.matrixU();
    const Matrix& ub = sb.matrixU();

    const double scale = max_abs(a) + max_abs(b);
    const double tol = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
    for (Eigen::Index i = 0; i < ta.rows(); ++i)
        for (Eigen::Index k = 0; k < tb.rows(); ++k)
            if (std::abs(ta(i, i) + tb(k, k)) <= tol) {
                std::ostringstream os;
                os << "solve_sylvester: eigenvalue " << ta(i, i) << " of A collides with " << -tb(k, k)
                   << " of -B";
                throw SingularityError(os.str());
            }

    const Matrix f = ua.adjoint() * c * ub;
    Matrix y(a.rows(), b.rows());
    for (Eigen::Index k = 0; k < b.rows(); ++k) {
        Vector rhs = f.col(k);
        for (Eigen::Index j = 0; j < k; ++j) rhs -= tb(j, k) * y.col(j);
        Matrix lhs = ta;
        lhs.diagonal().array() += tb(k, k);
        y.col(k) = lhs.triangularView<Eigen::Upper>().solve(rhs);
    }
    return ua * y * ub.adjoint();
}

Matrix solve_sylvester_vectorized(const Matrix& a, const Matrix& b, const Matrix& c) {
    require_square(a, "solve_sylvester_vectorized A");
    require_square(b, "solve_sylvester_vectorized B");
    if (c.rows() != a.rows() || c.cols() != b.rows())
        throw DimensionError("solve_sylvester_vectorized: C has wrong shape");
    const Matrix k = kron_sum(b.transpose(), a);
    const Matrix x = solve(k, vec(c), "Kronecker sum B^T (+) A");
    return unvec(x.col(0), a.rows(), b.rows());
}

EigDecomp eig(const Matrix& m) {
    require_square(m, "eig");
    require_finite(m, "eig");
    Eigen::ComplexEigenSolver<Matrix> es(m, true);
    if (es.info() != Eigen::Success) throw Error("eig: eigenvalue iteration did not converge");
    EigDecomp out;
    out.eigenvalues = es.eigenvalues();
    out.vectors = es.eigenvectors();
    Eigen::JacobiSVD<Matrix> svd(out.vectors);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    out.condition = smin > 0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (std::isfinite(out.condition) && out.condition < 1e12) {
        const Matrix rec = out.vectors * out.eigenvalues.asDiagonal() * out.vectors.inverse();
        const double ref = std::max(max_abs(m), std::numeric_limits<double>::min());
        out.diagonalizable = max_abs(rec - m) <= 1e-9 * ref;
    }
    return out;
}

namespace {

Matrix int_power(const Matrix& m, long p) {
    const Eigen::Index n = m.rows();
    Matrix base = p < 0 ? inverse(m, "mat_frac_power") : m;
    unsigned long e = static_cast<unsigned long>(p < 0 ? -p : p);
    Matrix out = Matrix::Identity(n, n);
    while (e) {
        if (e & 1UL) out = out * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return out;
}

} // namespace

Matrix mat_frac_power(const Matrix& m, double p) {
    require_square(m, "mat_frac_power");
    require_finite(m, "mat_frac_power");
    if (!std::isfinite(p)) throw DomainError("mat_frac_power: non-finite exponent");
    if (p == std::round(p) && std::abs(p) < 1e9) return int_power(m, static_cast<long>(std::round(p)));

    const EigDecomp ed = eig(m);
    const double scale = std::max(max_abs(m), 1.0);
    for (Eigen::Index i = 0; i < ed.eigenvalues.size(); ++i) {
        const cplx l = ed.eigenvalues(i);
        if (std::abs(l.imag()) <= 1e-12 * scale && l.real() <= 1e-14 * scale) {
            std::ostringstream os;
            os << "mat_frac_power: eigenvalue " << l << " lies on the closed negative real axis";
            throw DomainError(os.str());
        }
    }
    if (ed.diagonalizable && ed.condition < 1e6) {
        Vector lp(ed.eigenvalues.size());
        for (Eigen::Index i = 0; i < lp.size(); ++i) lp(i) = std::pow(ed.eigenvalues(i), p);
        return ed.vectors * lp.asDiagonal() * ed.vectors.inverse();
    }
    Eigen::MatrixPower<Matrix> mp(m);
    return mp(p);
}

double assert_real(cplx v, double scale, double tol, const char* what) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError(std::string(what) + ": non-finite");
    if (std::abs(v.imag()) > tol * std::max(1.0, std::abs(scale))) {
        std::ostringstream os;
        os << what << ": imaginary residual " << v.imag() << " exceeds tolerance";
        throw DomainError(os.str());
    }
    return v.real();
}

QuadResult quad(const std::function<double(double)>& f, double a, double b, double tol) {
    using boost::math::quadrature::exp_sinh;
    using boost::math::quadrature::gauss_kronrod;
    if (std::isnan(a) || std::isnan(b)) throw DomainError("quad: NaN limit");
    QuadResult out;
    if (a == b) return out;
    if (b < a) {
        out = quad(f, b, a, tol);
        out.value = -out.value;
        return out;
    }
    double err = 0.0, l1 = 0.0;
    if (std::isinf(b)) {
        bool ok = false;
        try {
            exp_sinh<double> es;
            out.value = es.integrate(f, a, std::numeric_limits<double>::infinity(), tol, &err, &l1);
            ok = std::isfinite(out.value) && err <= 10.0 * tol * std::max(1.0, l1);
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok) {
            double err2 = 0.0, l12 = 0.0;
            const double v2 = gauss_kronrod<double, 61>::integrate(
                f, a, std::numeric_limits<double>::infinity(), 12, tol, &err2, &l12);
            if (!std::isfinite(out.value) || err2 < err) {
                out.value = v2;
                err = err2;
                l1 = l12;
            }
        }
    } else {
        out.value = gauss_kronrod<double, 61>::integrate(f, a, b, 12, tol, &err, &l1);
    }
    out.error = err;
    out.converged = std::isfinite(out.value) && err <= 10.0 * tol * std::max(1.0, l1);
    if (!out.converged) {
        std::ostringstream os;
        os << "quadrature on [" << a << ", " << b << "] did not reach tolerance " << tol
           << " (error estimate " << err << ")";
        out.warning = os.str();
    }
    return out;
}

} // namespace mekit
