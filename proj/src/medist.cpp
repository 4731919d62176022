#include "mekit/medist.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace mekit {

namespace {

std::vector<double> trimmed(const std::vector<double>& p) {
    std::vector<double> out = p;
    while (!out.empty() && out.back() == 0.0) out.pop_back();
    return out;
}

void require_finite(const std::vector<double>& v, const char* what) {
    for (double c : v)
        if (!std::isfinite(c)) throw ConstructionError(std::string(what) + ": non-finite coefficient");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

cplx RationalLT::evaluate(cplx s) const {
    cplx num = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) num = num * s + *it;
    cplx den = 1.0;
    for (auto it = q.rbegin(); it != q.rend(); ++it) den = den * s + *it;
    if (den == cplx(0.0)) throw SingularityError("RationalLT: evaluation at a root of q");
    return num / den;
}

void check_rational_lt(const RationalLT& lt) {
    require_finite(lt.p, "numerator");
    require_finite(lt.q, "denominator");
    if (lt.q.empty()) throw ConstructionError("denominator must have degree >= 1");
    const auto p = trimmed(lt.p);
    if (p.size() > lt.q.size())
        throw ConstructionError("deg(p) >= deg(q): transform is not strictly proper");
    const double p1 = p.empty() ? 0.0 : p[0];
    const double q1 = lt.q[0];
    if (std::abs(p1 - q1) > 1e-12 * std::max(1.0, std::abs(q1)))
        throw ConstructionError("p1 != q1 (" + fmt(p1) + " vs " + fmt(q1) +
                                "): transform implies a point mass at zero or is unnormalized");
}

MEDist::MEDist(RowVector x, Matrix y, Vector z) : x_(std::move(x)), y_(std::move(y)), z_(std::move(z)) {
    require_square(y_, "MEDist Y");
    if (x_.size() != y_.rows() || z_.size() != y_.rows()) {
        std::ostringstream os;
        os << "MEDist: x has " << x_.size() << " entries, Y is " << y_.rows() << "x" << y_.cols() << ", z has "
           << z_.size();
        throw DimensionError(os.str());
    }
    if (!x_.allFinite() || !y_.allFinite() || !z_.allFinite())
        throw ConstructionError("MEDist: non-finite parameter entry");
}

MEDist MEDist::with_source(RationalLT lt) const {
    MEDist out = *this;
    out.lt_ = std::move(lt);
    return out;
}

Matrix companion(const std::vector<double>& q) {
    const auto d = static_cast<Eigen::Index>(q.size());
    if (d == 0) throw ConstructionError("companion: empty denominator");
    Matrix y = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i + 1 < d; ++i) y(i, i + 1) = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) y(d - 1, j) = -q[static_cast<std::size_t>(j)];
    return y;
}

MEDist from_rational_lt_unchecked(const RationalLT& lt) {
    require_finite(lt.p, "numerator");
    require_finite(lt.q, "denominator");
    if (lt.q.empty()) throw ConstructionError("denominator must have degree >= 1");
    const auto p = trimmed(lt.p);
    if (p.size() > lt.q.size())
        throw ConstructionError("deg(p) >= deg(q): transform is not strictly proper");
    const auto d = static_cast<Eigen::Index>(lt.q.size());
    RowVector x = RowVector::Zero(d);
    for (std::size_t i = 0; i < p.size(); ++i) x(static_cast<Eigen::Index>(i)) = p[i];
    Vector z = Vector::Zero(d);
    z(d - 1) = 1.0;
    return MEDist(x, companion(lt.q), z).with_source(lt);
}

MEDist from_rational_lt(const RationalLT& lt) {
    check_rational_lt(lt);
    return from_rational_lt_unchecked(lt);
}

MEDist from_product_form(const std::vector<RationalLT>& factors) {
    if (factors.empty()) throw ConstructionError("from_product_form: empty factor list");
    Eigen::Index d = 0;
    for (const auto& f : factors) {
        check_rational_lt(f);
        d += static_cast<Eigen::Index>(f.degree());
    }
    Matrix y = Matrix::Zero(d, d);
    RowVector x = RowVector::Zero(d);
    Vector z = Vector::Zero(d);
    z(d - 1) = 1.0;
    Eigen::Index off = 0;
    for (std::size_t j = 0; j < factors.size(); ++j) {
        const auto dj = static_cast<Eigen::Index>(factors[j].degree());
        y.block(off, off, dj, dj) = companion(factors[j].q);
        const auto p = trimmed(factors[j].p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const auto c = off + static_cast<Eigen::Index>(i);
            if (j == 0)
                x(c) = p[i];
            else
                y(off - 1, c) = p[i];
        }
        off += dj;
    }
    MEDist out(x, y, z);
    if (factors.size() == 1) return out.with_source(factors[0]);
    return out;
}

Matrix augmented_generator(const MEDist& d) {
    const Eigen::Index n = d.degree();
    Matrix yi = Matrix::Zero(n + 1, n + 1);
    yi.block(0, 1, 1, n) = d.x();
    yi.block(1, 1, n, n) = d.Y();
    return yi;
}

double pdf(const MEDist& d, double t) {
    if (!(t >= 0.0)) throw DomainError("pdf: t must be >= 0");
    const cplx v = (d.x() * expm(t * d.Y()) * d.z())(0, 0);
    return assert_real(v, std::abs(v), 1e-10, "pdf");
}

double cdf(const MEDist& d, double t, CdfPath path) {
    if (!(t >= 0.0)) throw DomainError("cdf: t must be >= 0");
    if (path == CdfPath::classic) {
        Matrix yz;
        try {
            yz = solve(d.Y(), d.z(), "Y");
        } catch (const SingularityError&) {
            throw SingularityError("cdf: Y is singular; the classic path is undefined, use the augmented path");
        }
        const cplx v = 1.0 + (d.x() * expm(t * d.Y()) * yz)(0, 0);
        return assert_real(v, 1.0, 1e-10, "cdf");
    }
    const Eigen::Index n = d.degree();
    const Matrix e = expm(t * augmented_generator(d));
    const cplx v = (e.block(0, 1, 1, n) * d.z())(0, 0);
    return assert_real(v, 1.0, 1e-10, "cdf");
}

cplx lt(const MEDist& d, cplx s) {
    const Eigen::Index n = d.degree();
    const Matrix m = s * Matrix::Identity(n, n) - d.Y();
    Matrix sol;
    try {
        sol = solve(m, d.z(), "sI - Y");
    } catch (const SingularityError&) {
        std::ostringstream os;
        os << "lt: s = " << s << " is an eigenvalue of Y";
        throw SingularityError(os.str());
    }
    return (d.x() * sol)(0, 0);
}

double moment(const MEDist& d, int k) {
    if (k < 1) throw DomainError("moment: k must be a positive integer");
    Eigen::PartialPivLU<Matrix> lu(d.Y());
    if (!(lu.rcond() > 1e-14)) throw SingularityError("moment: Y is singular");
    Matrix v = d.z();
    for (int i = 0; i <= k; ++i) v = lu.solve(v);
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    const cplx m = sign * fact * (d.x() * v)(0, 0);
    return assert_real(m, std::abs(m), 1e-8, "moment");
}

double mean(const MEDist& d) { return moment(d, 1); }

MEDist scale_by(const MEDist& d, double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("scale: S must be positive and finite");
    MEDist out(d.x() / s, d.Y() / s, d.z());
    if (d.source_lt()) {
        RationalLT lt = *d.source_lt();
        const double sd = std::pow(s, static_cast<double>(lt.degree()));
        for (std::size_t k = 0; k < lt.p.size(); ++k) lt.p[k] *= std::pow(s, static_cast<double>(k)) / sd;
        for (std::size_t k = 0; k < lt.q.size(); ++k) lt.q[k] *= std::pow(s, static_cast<double>(k)) / sd;
        out = out.with_source(lt);
    }
    return out;
}

MEDist scale_mean(const MEDist& d, double s) {
    const double m = mean(d);
    if (std::abs(m - 1.0) > 1e-8)
        throw PreconditionError("scale_mean: input mean is " + fmt(m) + ", expected a unit-mean distribution");
    return scale_by(d, s);
}

MEDist normalize_mean(const MEDist& d) {
    const double m = mean(d);
    if (!(m > 0.0)) throw PreconditionError("normalize_mean: mean must be positive, got " + fmt(m));
    return scale_by(d, 1.0 / m);
}

double decay_horizon(const MEDist& d) {
    const Eigen::ComplexEigenSolver<Matrix> es(d.Y(), false);
    const double scale = std::max(max_abs(d.Y()), std::numeric_limits<double>::min());
    double slowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double re = es.eigenvalues()(i).real();
        if (re >= -1e-13 * scale)
            throw DomainError("decay_horizon: eigenvalue with non-negative real part " + fmt(re));
        slowest = std::min(slowest, -re);
    }
    return 40.0 / slowest;
}

std::vector<std::string> ValidationReport::failures() const {
    std::vector<std::string> out;
    if (!lt_at_zero_is_one.pass) out.push_back("lt_at_zero_is_one: " + lt_at_zero_is_one.detail);
    if (!nonneg_on_grid.pass) out.push_back("nonneg_on_grid: " + nonneg_on_grid.detail);
    if (!cdf_limit_one.pass) out.push_back("cdf_limit_one: " + cdf_limit_one.detail);
    if (!p1_eq_q1.pass) out.push_back("p1_eq_q1: " + p1_eq_q1.detail);
    return out;
}

ValidationReport validate(const MEDist& d) {
    ValidationReport rep;
    try {
        const cplx f0 = lt(d, 0.0);
        if (std::abs(f0 - 1.0) > 1e-8) {
            rep.lt_at_zero_is_one = {false, "F(0) = " + fmt(f0.real()) + (f0.imag() != 0.0 ? " (complex)" : "")};
        } else {
            rep.lt_at_zero_is_one.detail = "F(0) = " + fmt(f0.real());
        }
    } catch (const Error& e) {
        rep.lt_at_zero_is_one = {false, std::string("s = 0: ") + e.what()};
    }

    if (d.source_lt()) {
        const auto& lt = *d.source_lt();
        const double p1 = lt.p.empty() ? 0.0 : lt.p[0];
        const double q1 = lt.q.empty() ? 0.0 : lt.q[0];
        if (std::abs(p1 - q1) > 1e-12 * std::max(1.0, std::abs(q1)))
            rep.p1_eq_q1 = {false, "coefficient index 1: p1 = " + fmt(p1) + ", q1 = " + fmt(q1)};
        else
            rep.p1_eq_q1.detail = "p1 = q1 = " + fmt(q1);
    } else {
        rep.p1_eq_q1 = {rep.lt_at_zero_is_one.pass, "no rational transform attached; checked through F(0) = 1"};
    }

    double horizon = 0.0;
    try {
        horizon = decay_horizon(d);
    } catch (const Error& e) {
        rep.nonneg_on_grid = {false, e.what()};
        rep.cdf_limit_one = {false, e.what()};
        return rep;
    }

    constexpr int kGrid = 512;
    const double h = horizon / (kGrid - 1);
    const Matrix step = expm(h * d.Y());
    Matrix v = d.z();
    double worst = std::numeric_limits<double>::infinity();
    double worst_t = 0.0;
    for (int k = 0; k < kGrid; ++k) {
        const double f = (d.x() * v)(0, 0).real();
        if (f < worst) {
            worst = f;
            worst_t = k * h;
        }
        v = step * v;
    }
    if (worst < -1e-9)
        rep.nonneg_on_grid = {false, "pdf(" + fmt(worst_t) + ") = " + fmt(worst)};
    else
        rep.nonneg_on_grid.detail = "min pdf on grid " + fmt(worst) + " at t = " + fmt(worst_t);

    try {
        const double c = cdf(d, horizon);
        if (std::abs(c - 1.0) > 1e-6)
            rep.cdf_limit_one = {false, "cdf(" + fmt(horizon) + ") = " + fmt(c)};
        else
            rep.cdf_limit_one.detail = "cdf(" + fmt(horizon) + ") = " + fmt(c);
    } catch (const Error& e) {
        rep.cdf_limit_one = {false, e.what()};
    }
    return rep;
}

} // namespace mekit
