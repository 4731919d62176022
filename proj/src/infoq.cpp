#include "mekit/infoq.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mekit/algebra.hpp"

namespace mekit {

namespace {

struct Integral {
    double value = 0.0;
    double error = 0.0;
    std::vector<std::string> notes;
};

// Piecewise Gauss-Kronrod over [0, horizon] with shallow refinement per piece.
template <class F>
Integral integrate_pieces(F&& f, double horizon, int pieces, double tol) {
    Integral out;
    const double h = horizon / pieces;
    double worst = 0.0;
    for (int i = 0; i < pieces; ++i) {
        double err = 0.0, l1 = 0.0;
        out.value += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, i * h, (i + 1) * h, 6, tol, &err, &l1);
        out.error += err;
        worst = std::max(worst, err / std::max(l1, 1e-300));
    }
    if (worst > 100.0 * tol) {
        std::ostringstream os;
        os << "piecewise quadrature: worst relative piece error " << worst;
        out.notes.push_back(os.str());
    }
    return out;
}

// Density evaluator using the eigen-expansion when Y is well-conditioned and diagonalizable.
class DensityEval {
public:
    explicit DensityEval(const MEDist& d) : d_(d) {
        const EigDecomp ed = eig(d.Y());
        if (ed.diagonalizable && ed.condition < 1e8) {
            lambda_ = ed.eigenvalues;
            const Matrix vinv = inverse(ed.vectors, "eigenvector matrix");
            const RowVector left = d.x() * ed.vectors;
            const Vector right = vinv * d.z();
            coef_ = left.transpose().cwiseProduct(right);
            fast_ = true;
        }
    }
    double operator()(double t) const {
        if (!fast_) return pdf(d_, t);
        cplx s = 0.0;
        for (Eigen::Index k = 0; k < lambda_.size(); ++k) s += coef_(k) * std::exp(lambda_(k) * t);
        return s.real();
    }

private:
    const MEDist& d_;
    bool fast_ = false;
    Vector lambda_;
    Vector coef_;
};

int piece_count(const MEDist& d, double horizon) {
    // Resolve oscillation: roughly four pieces per period of the fastest mode.
    const Eigen::ComplexEigenSolver<Matrix> es(d.Y(), false);
    double omega = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) omega = std::max(omega, std::abs(es.eigenvalues()(i).imag()));
    const double per = omega > 0.0 ? 4.0 * horizon * omega / (2.0 * std::numbers::pi) : 0.0;
    return std::clamp(static_cast<int>(std::ceil(per)), 32, 4096);
}

double clipped_log(double f) { return std::log(std::max(f, 1e-300)); }

} // namespace

double entropy_limit(const MEDist& d, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("entropy_limit: theta must lie in (0, 1)");
    const double horizon = decay_horizon(d) / (1.0 - theta);
    const DensityEval pdf_at(d);
    const Integral in = integrate_pieces(
        [&](double t) {
            const double f = pdf_at(t);
            return f > 0.0 ? std::exp((1.0 - theta) * clipped_log(f)) : 0.0;
        },
        horizon, piece_count(d, horizon), 1e-13);
    return std::log(in.value) / theta;
}

EntropyResult entropy_numeric(const MEDist& d) {
    const double horizon = decay_horizon(d);
    const DensityEval pdf_at(d);
    const Integral in = integrate_pieces(
        [&](double t) {
            const double f = pdf_at(t);
            return f > 0.0 ? -f * clipped_log(f) : 0.0;
        },
        horizon, piece_count(d, horizon), 1e-12);
    EntropyResult out;
    out.value = in.value;
    out.quad_error = in.error;
    out.notes = in.notes;
    out.limit_value = entropy_limit(d, 1e-4);
    if (std::abs(out.limit_value - out.value) > 1e-3) {
        std::ostringstream os;
        os.precision(17);
        os << "entropy limit cross-check differs by " << std::abs(out.limit_value - out.value);
        out.notes.push_back(os.str());
    }
    return out;
}

MutualInformation mi_additive_channel(const MEDist& dx, const MEDist& dw) {
    const double sx = mean(dx), sw = mean(dw);
    if (!(sx > 0.0) || !(sw > 0.0)) throw PreconditionError("mutual information: both means must be positive");
    const MEDist y = convolve(dx, dw);
    MutualInformation out;
    out.h_y_um = entropy_numeric(normalize_mean(y)).value;
    out.h_w_um = entropy_numeric(normalize_mean(dw)).value;
    const double sy = sx + sw;
    out.value = std::log(sy / sw) + out.h_y_um - out.h_w_um;
    out.bound = 1.0 + std::log(sy) - (std::log(sw) + out.h_w_um);
    if (out.value > out.bound + 1e-9) throw DomainError("mutual information exceeds the maximum-entropy bound");
    return out;
}

namespace {

struct CellIntegrals {
    Matrix yinv;
    Matrix yinv2;
    const MEDist* d;
    // Antiderivatives of f and t f, both vanishing at infinity.
    double g(double t) const {
        if (std::isinf(t)) return 0.0;
        return (d->x() * expm(t * d->Y()) * yinv * d->z())(0, 0).real();
    }
    double h(double t) const {
        if (std::isinf(t)) return 0.0;
        return (d->x() * expm(t * d->Y()) * (t * yinv - yinv2) * d->z())(0, 0).real();
    }
};

double quantile(const MEDist& d, double p) {
    double lo = 0.0, hi = mean(d);
    while (cdf(d, hi) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(d, mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double quantizer_mse(const MEDist& d, const std::vector<double>& thresholds, const std::vector<double>& centroids) {
    if (centroids.size() != thresholds.size() + 1) throw DimensionError("quantizer_mse: need M - 1 thresholds for M points");
    const Matrix yinv = inverse(d.Y(), "Y");
    const CellIntegrals ci{yinv, yinv * yinv, &d};
    std::vector<double> edges{0.0};
    edges.insert(edges.end(), thresholds.begin(), thresholds.end());
    edges.push_back(std::numeric_limits<double>::infinity());
    double mse = moment(d, 2);
    for (std::size_t q = 0; q < centroids.size(); ++q) {
        const double p = ci.g(edges[q + 1]) - ci.g(edges[q]);
        const double m1 = ci.h(edges[q + 1]) - ci.h(edges[q]);
        mse += centroids[q] * centroids[q] * p - 2.0 * centroids[q] * m1;
    }
    return mse;
}

LloydMaxResult lloyd_max(const MEDist& d, int m, double tol, int max_iter) {
    if (m < 1) throw DomainError("lloyd_max: M must be >= 1");
    const Matrix yinv = inverse(d.Y(), "Y");
    const CellIntegrals ci{yinv, yinv * yinv, &d};
    LloydMaxResult out;
    out.centroids.resize(static_cast<std::size_t>(m));
    for (int q = 0; q < m; ++q) out.centroids[static_cast<std::size_t>(q)] = quantile(d, (q + 0.5) / m);
    out.thresholds.resize(static_cast<std::size_t>(m - 1));
    const double second = moment(d, 2);
    for (int it = 1; it <= max_iter; ++it) {
        for (int q = 0; q + 1 < m; ++q)
            out.thresholds[static_cast<std::size_t>(q)] =
                0.5 * (out.centroids[static_cast<std::size_t>(q)] + out.centroids[static_cast<std::size_t>(q + 1)]);
        double move = 0.0, mse = second;
        double lo = 0.0, g_lo = ci.g(0.0), h_lo = ci.h(0.0);
        for (int q = 0; q < m; ++q) {
            const double hi = q + 1 < m ? out.thresholds[static_cast<std::size_t>(q)] : std::numeric_limits<double>::infinity();
            const double g_hi = ci.g(hi), h_hi = ci.h(hi);
            const double p = g_hi - g_lo, m1 = h_hi - h_lo;
            double& u = out.centroids[static_cast<std::size_t>(q)];
            double nu;
            if (p > 1e-300) {
                nu = m1 / p;
            } else {
                nu = std::isinf(hi) ? lo * 1.5 + 1e-12 : 0.5 * (lo + hi);
                out.notes.push_back("empty cell " + std::to_string(q) + " re-seeded at iteration " + std::to_string(it));
            }
            move = std::max(move, std::abs(nu - u) / std::max(std::abs(nu), 1e-300));
            u = nu;
            mse += p > 1e-300 ? -m1 * m1 / p : 0.0;
            lo = hi;
            g_lo = g_hi;
            h_lo = h_hi;
        }
        out.mse_history.push_back(mse);
        out.iterations = it;
        if (move < tol) break;
    }
    for (int q = 0; q + 1 < m; ++q)
        out.thresholds[static_cast<std::size_t>(q)] =
            0.5 * (out.centroids[static_cast<std::size_t>(q)] + out.centroids[static_cast<std::size_t>(q + 1)]);
    out.mse = quantizer_mse(d, out.thresholds, out.centroids);
    if (out.iterations == max_iter) out.notes.push_back("iteration limit reached before convergence");
    return out;
}

PanterDiteResult panter_dite_mse(const MEDist& d, int m) {
    if (m < 1) throw DomainError("panter_dite_mse: M must be >= 1");
    const double horizon = 3.0 * decay_horizon(d);
    const DensityEval pdf_at(d);
    const Integral in = integrate_pieces(
        [&](double t) {
            const double f = pdf_at(t);
            return f > 0.0 ? std::cbrt(f) : 0.0;
        },
        horizon, piece_count(d, horizon), 1e-13);
    PanterDiteResult out;
    out.quad_integral = in.value;
    out.cube_root_integral = in.value;
    out.mse = std::pow(in.value, 3) / (12.0 * m * m);
    return out;
}

PanterDiteResult panter_dite_mse(const MEDist& d, int m, const RowVector& xc, const Matrix& yc, const Vector& zc) {
    PanterDiteResult out = panter_dite_mse(d, m);
    const double exact = assert_real(-(xc * solve(yc, zc, "cube-root generator"))(0, 0), 1.0, 1e-8, "cube-root integral");
    if (std::abs(exact - out.quad_integral) > 1e-8 * std::max(1.0, std::abs(exact)))
        throw PreconditionError("panter_dite_mse: supplied cube-root triple does not match the density");
    out.cube_root_integral = exact;
    out.decomposed = true;
    out.mse = std::pow(exact, 3) / (12.0 * m * m);
    return out;
}

namespace {

double triple_value(const RowVector& x, const Matrix& m, const Vector& z, const char* what) {
    const cplx v = (x * m * z)(0, 0);
    return assert_real(v, std::abs(v), 1e-8, what);
}

void check_triple(const RowVector& x, const Matrix& y, const Vector& z, const char* what) {
    require_square(y, what);
    if (x.size() != y.rows() || z.size() != y.rows()) throw DimensionError(std::string(what) + ": inconsistent shapes");
}

void require_unit_mass(const RowVector& x, const Matrix& y, const Vector& z, const char* what) {
    const double mass = triple_value(x, inverse(-y, "-Y"), z, what);
    if (std::abs(mass - 1.0) > 1e-8) {
        std::ostringstream os;
        os.precision(17);
        os << what << ": x (-Y)^{-1} z = " << mass << " but must equal 1 for a normalized density";
        throw ConstructionError(os.str());
    }
}

} // namespace

TypeI::TypeI(RowVector x, Matrix y, Vector z) : x_(std::move(x)), y_(std::move(y)), z_(std::move(z)) {
    check_triple(x_, y_, z_, "Type I");
    const double norm = std::sqrt(std::numbers::pi) * triple_value(x_, mat_frac_power(-y_, -0.5), z_, "Type I normalizer");
    if (!(norm > 0.0) || !std::isfinite(norm)) throw ConstructionError("Type I: normalizer is not finite and positive");
    c_ = 1.0 / norm;
}

double TypeI::pdf(double t) const { return c_ * triple_value(x_, expm(t * t * y_), z_, "Type I pdf"); }

double TypeI::moment(int n) const {
    if (n < 0) throw DomainError("moment order must be >= 0");
    if (n % 2 == 1) return 0.0;
    return c_ * std::tgamma((n + 1) / 2.0) * triple_value(x_, mat_frac_power(-y_, -(n + 1) / 2.0), z_, "Type I moment");
}

TypeII::TypeII(RowVector x, Matrix y, Vector z) : x_(std::move(x)), y_(std::move(y)), z_(std::move(z)) {
    check_triple(x_, y_, z_, "Type II");
    require_unit_mass(x_, y_, z_, "Type II");
    inv_sqrt_ = mat_frac_power(-y_, -0.5);
}

double TypeII::pdf(double u, double v) const {
    return triple_value(x_, expm((u * u + v * v) * y_), z_, "Type II pdf") / std::numbers::pi;
}

double TypeII::moment(int n, int m) const {
    if (n < 0 || m < 0) throw DomainError("moment orders must be >= 0");
    if (n % 2 == 1 || m % 2 == 1) return 0.0;
    return std::tgamma((n + 1) / 2.0) * std::tgamma((m + 1) / 2.0) / std::numbers::pi *
           triple_value(x_, mat_frac_power(-y_, -(n + m + 2) / 2.0), z_, "Type II moment");
}

double TypeII::marginal(double u) const {
    return triple_value(x_, expm(u * u * y_) * inv_sqrt_, z_, "Type II marginal") / std::sqrt(std::numbers::pi);
}

TypeIII::TypeIII(RowVector x, Matrix y, Vector z) : x_(std::move(x)), y_(std::move(y)), z_(std::move(z)) {
    check_triple(x_, y_, z_, "Type III");
    require_unit_mass(x_, y_, z_, "Type III");
}

double TypeIII::pdf(double t) const {
    if (t < 0.0) return 0.0;
    return 2.0 * t * triple_value(x_, expm(t * t * y_), z_, "Type III pdf");
}

double TypeIII::moment(int n) const {
    if (n < 0) throw DomainError("moment order must be >= 0");
    return std::tgamma((n + 2) / 2.0) * triple_value(x_, mat_frac_power(-y_, -(n + 2) / 2.0), z_, "Type III moment");
}

} // namespace mekit
