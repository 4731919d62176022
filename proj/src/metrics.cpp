#include "mekit/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mekit/algebra.hpp"

namespace mekit {

std::string to_string(PathTag p) {
    switch (p) {
    case PathTag::closed_form: return "closed_form";
    case PathTag::quadrature: return "quadrature";
    case PathTag::eigen: return "eigen";
    case PathTag::sylvester: return "sylvester";
    case PathTag::kron: return "kron";
    case PathTag::vanloan: return "vanloan";
    }
    return "unknown";
}

namespace {

MetricResult real_result(cplx v, PathTag path, const char* what) {
    MetricResult out;
    out.path = path;
    out.diag.imag_residual = std::abs(v.imag());
    out.value = assert_real(v, std::abs(v), 1e-8, what);
    return out;
}

void require_rate(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("rate R must be positive and finite");
}

void require_theta(double theta) {
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError("Theta must be finite and >= 0");
}

// Row 0 of e^{theta Y^I}: cdf plus the block e^{theta Y} for the pdf.
struct AugEval {
    double cdf = 0.0;
    double pdf = 0.0;
};

AugEval aug_eval(const MEDist& d, double theta) {
    const Eigen::Index n = d.degree();
    const Matrix e = expm(theta * augmented_generator(d));
    AugEval out;
    out.cdf = assert_real((e.block(0, 1, 1, n) * d.z())(0, 0), 1.0, 1e-8, "cdf");
    const cplx f = (d.x() * e.block(1, 1, n, n) * d.z())(0, 0);
    out.pdf = assert_real(f, std::abs(f), 1e-8, "pdf");
    return out;
}

Matrix persistent_generator(const MEDist& d) {
    return d.Y() + d.z() * d.x();
}

} // namespace

double theta_absolute(double r) {
    require_rate(r);
    return std::expm1(r);
}

double theta_unit_mean(double r, double s) {
    require_rate(r);
    if (!(s > 0.0)) throw DomainError("S must be positive");
    return std::expm1(r) / s;
}

double theta_from_rate(double r, double s, ThetaConvention conv) {
    return conv == ThetaConvention::absolute ? theta_absolute(r) : theta_unit_mean(r, s);
}

MetricResult outage(const MEDist& d, double theta) {
    require_theta(theta);
    const Eigen::Index n = d.degree();
    const Matrix e = expm(theta * augmented_generator(d));
    return real_result((e.block(0, 1, 1, n) * d.z())(0, 0), PathTag::closed_form, "outage");
}

double outage_capacity(const MEDist& d, double q_target) {
    if (!(q_target > 0.0 && q_target < 1.0)) throw DomainError("outage_capacity: target must lie in (0, 1)");
    auto f = [&](double c) { return outage(d, std::expm1(c)).value - q_target; };
    double lo = 0.0, hi = 1.0;
    while (f(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 700.0) throw DomainError("outage_capacity: target outage not attained for any rate");
    }
    double flo = f(lo), fhi = f(hi);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    double c = (fhi != flo) ? lo - flo * (hi - lo) / (fhi - flo) : 0.5 * (lo + hi);
    if (!(c >= lo && c <= hi)) c = 0.5 * (lo + hi);
    return c;
}

MetricResult arq_throughput(const MEDist& d, double r, double theta, ArqPath path) {
    require_rate(r);
    require_theta(theta);
    if (path == ArqPath::inverse) {
        const Matrix yz = solve(d.Y(), d.z(), "Y");
        const cplx p = -(d.x() * expm(theta * d.Y()) * yz)(0, 0);
        MetricResult out = real_result(r * p, PathTag::closed_form, "ARQ throughput");
        return out;
    }
    MetricResult out = outage(d, theta);
    out.value = r * (1.0 - out.value);
    return out;
}

HarqRenewal harq_renewal(const MEDist& d, int k, double theta) {
    require_theta(theta);
    const KFoldBlock kb(d, k);
    HarqRenewal out;
    out.partial_cdfs = kb.partial_cdfs(theta);
    out.success_probability = 1.0 - out.partial_cdfs.back();
    out.mean_transmissions = 1.0;
    for (int j = 0; j + 1 < k; ++j) out.mean_transmissions += out.partial_cdfs[static_cast<std::size_t>(j)];
    return out;
}

MetricResult harq_truncated_throughput(const MEDist& d, double r, int k, double theta) {
    require_rate(r);
    const HarqRenewal hr = harq_renewal(d, k, theta);
    MetricResult out;
    out.value = r * hr.success_probability / hr.mean_transmissions;
    return out;
}

double harq_persistent_mean_transmissions(const MEDist& d, double theta) {
    require_theta(theta);
    const MEDist renewal(d.x(), persistent_generator(d), d.z());
    const Eigen::Index n = d.degree();
    const Matrix e = expm(theta * augmented_generator(renewal));
    const cplx v = (e.block(0, 1, 1, n) * d.z())(0, 0);
    return 1.0 + assert_real(v, std::abs(v), 1e-8, "renewal function");
}

MetricResult harq_persistent_throughput(const MEDist& d, double r, double theta) {
    require_rate(r);
    MetricResult out;
    out.value = r / harq_persistent_mean_transmissions(d, theta);
    return out;
}

MetricResult harq_persistent_throughput(const RationalLT& lt, double r, double theta) {
    require_rate(r);
    require_theta(theta);
    check_rational_lt(lt);
    const std::size_t dd = lt.degree();
    std::vector<double> p(dd, 0.0);
    for (std::size_t i = 0; i < lt.p.size() && i < dd; ++i) p[i] = lt.p[i];
    std::vector<double> qmp(dd);
    for (std::size_t i = 0; i < dd; ++i) qmp[i] = lt.q[i] - p[i];
    const auto n = static_cast<Eigen::Index>(dd);
    Matrix qi = Matrix::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) qi(0, 1 + i) = p[static_cast<std::size_t>(i)];
    qi.block(1, 1, n, n) = companion(qmp);
    const Matrix e = expm(theta * qi);
    const double mt = 1.0 + assert_real(e(0, n), std::abs(e(0, n)), 1e-8, "renewal function");
    MetricResult out;
    out.value = r / mt;
    return out;
}

MetricResult harq_persistent_diversity(const MEDist& base, int n, double r, double theta) {
    require_rate(r);
    require_theta(theta);
    if (n < 1) throw DomainError("diversity order N must be >= 1");
    const Eigen::Index d = base.degree();
    const Eigen::Index m = d * n + 1;
    Matrix qi = Matrix::Zero(m, m);
    qi.block(0, 1, 1, d) = base.x();
    const Matrix coupling = base.z() * base.x();
    for (int k = 0; k < n; ++k) {
        const double ang = 2.0 * std::numbers::pi * k / n;
        const cplx w(std::cos(ang), std::sin(ang));
        const Eigen::Index off = 1 + k * d;
        qi.block(off, off, d, d) = base.Y() + w * coupling;
        if (k + 1 < n) qi.block(off, off + d, d, d) = coupling;
    }
    const Matrix e = expm(theta * qi);
    const cplx v = (e.block(0, m - d, 1, d) * base.z())(0, 0);
    MetricResult out;
    out.diag.imag_residual = std::abs(v.imag());
    const double ev = assert_real(v, std::abs(v), 1e-8, "N-fold renewal function");
    out.value = r / (1.0 + ev);
    return out;
}

MetricResult harq_persistent_diversity2(const RationalLT& base, double r, double theta) {
    require_rate(r);
    require_theta(theta);
    check_rational_lt(base);
    const std::size_t dd = base.degree();
    std::vector<double> p(dd, 0.0);
    for (std::size_t i = 0; i < base.p.size() && i < dd; ++i) p[i] = base.p[i];
    std::vector<double> qm(dd), qp(dd);
    for (std::size_t i = 0; i < dd; ++i) {
        qm[i] = base.q[i] - p[i];
        qp[i] = base.q[i] + p[i];
    }
    const auto d = static_cast<Eigen::Index>(dd);
    Matrix qi = Matrix::Zero(2 * d + 1, 2 * d + 1);
    for (Eigen::Index i = 0; i < d; ++i) {
        qi(0, 1 + i) = p[static_cast<std::size_t>(i)];
        qi(d, 1 + d + i) = p[static_cast<std::size_t>(i)];
    }
    qi.block(1, 1, d, d) = companion(qm);
    qi.block(1 + d, 1 + d, d, d) = companion(qp);
    const Matrix e = expm(theta * qi);
    MetricResult out;
    out.value = r / (1.0 + assert_real(e(0, 2 * d), std::abs(e(0, 2 * d)), 1e-8, "renewal function"));
    return out;
}

MetricResult harq_persistent_erlang(int n, double r, double theta) {
    require_rate(r);
    require_theta(theta);
    if (n < 1) throw DomainError("harq_persistent_erlang: order must be >= 1");
    // (u - 1)(u^n - 1) = u^{n+1} - u^n - u + 1 in ascending coefficients without the leading 1
    std::vector<double> q(static_cast<std::size_t>(n) + 1, 0.0);
    q[0] = 1.0;
    q[1] -= 1.0;
    q[static_cast<std::size_t>(n)] -= 1.0;
    const Matrix a = companion(q);
    const Matrix e = expm(theta * (a - Matrix::Identity(n + 1, n + 1)));
    MetricResult out;
    out.value = r / assert_real(e(n, n), 1.0, 1e-8, "mean transmissions");
    return out;
}

double ncbr_direction_outage(const MEDist& a, const MEDist& b, double theta) {
    return 1.0 - (1.0 - outage(a, theta).value) * (1.0 - outage(b, theta).value);
}

MetricResult ncbr_throughput(const NcbrLinks& links, double r12, double r21) {
    require_rate(r12);
    require_rate(r21);
    const double q12 = ncbr_direction_outage(links.l13, links.l32, theta_absolute(r12));
    const double q21 = ncbr_direction_outage(links.l23, links.l31, theta_absolute(r21));
    MetricResult out;
    out.value = (r12 * (1.0 - q12) + r21 * (1.0 - q21)) / 3.0;
    return out;
}

MetricResult eff_capacity_me_rate(const MEDist& d, double theta) {
    if (!(theta > 0.0)) throw DomainError("effective capacity: theta must be positive");
    const cplx f = lt(d, theta);
    MetricResult out = real_result(f, PathTag::closed_form, "rate transform");
    if (!(out.value > 0.0)) throw DomainError("effective capacity: transform value is not positive");
    out.value = -std::log(out.value) / theta;
    return out;
}

double eff_capacity_xi(double lambda, double theta) {
    if (!(lambda < 0.0)) throw DomainError("eff_capacity_xi: eigenvalue must be real negative");
    if (!(theta > 0.0 && theta <= 1.0)) throw DomainError("eff_capacity_xi: theta must lie in (0, 1]");
    const double mu = -lambda;
    if (mu <= 500.0) {
        if (theta == 1.0) return std::exp(mu) * boost::math::expint(1, mu);
        return std::pow(mu, theta - 1.0) * std::exp(mu) * boost::math::tgamma(1.0 - theta, mu);
    }
    // e^mu Gamma(a, mu) underflows here; integrate e^{-mu v} (1 + v)^{-theta} directly.
    const QuadResult q =
        quad([&](double v) { return std::exp(-mu * v) * std::pow(1.0 + v, -theta); }, 0.0,
             std::numeric_limits<double>::infinity(), 1e-13);
    return q.value;
}

namespace {

MetricResult eff_capacity_quadrature(const MEDist& d, double theta) {
    const Eigen::Index n = d.degree();
    const double lg = std::lgamma(theta);
    auto integrand = [&](double u) {
        if (u <= 0.0) return 0.0;
        const Matrix m = u * Matrix::Identity(n, n) - d.Y();
        const double fu = (d.x() * m.partialPivLu().solve(d.z()))(0, 0).real();
        return std::exp((theta - 1.0) * std::log(u) - u - lg) * (fu - 1.0);
    };
    const QuadResult q = quad(integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
    MetricResult out;
    out.path = PathTag::quadrature;
    out.diag.quad_error = q.error / theta;
    if (!q.converged) out.diag.notes.push_back(q.warning);
    if (!(q.value > -1.0)) throw DomainError("effective capacity: expectation is not positive");
    out.value = -std::log1p(q.value) / theta;
    return out;
}

} // namespace

MetricResult eff_capacity_shannon(const MEDist& d, double theta, EffCapPath path) {
    if (!(theta > 0.0)) throw DomainError("effective capacity: theta must be positive");
    if (path == EffCapPath::quadrature) return eff_capacity_quadrature(d, theta);

    std::string why;
    if (theta > 1.0) why = "theta > 1 is outside the eigen path domain (0, 1]";
    EigDecomp ed;
    if (why.empty()) {
        ed = eig(d.Y());
        if (!ed.diagonalizable) why = "Y is not diagonalizable";
        const double scale = std::max(1.0, max_abs(d.Y()));
        for (Eigen::Index i = 0; why.empty() && i < ed.eigenvalues.size(); ++i) {
            const cplx l = ed.eigenvalues(i);
            if (std::abs(l.imag()) > 1e-10 * scale || !(l.real() < 0.0)) why = "eigenvalues are not all real negative";
        }
    }
    if (!why.empty()) {
        MetricResult out = eff_capacity_quadrature(d, theta);
        out.diag.notes.push_back("eigen path unavailable (" + why + "); used quadrature");
        return out;
    }
    Vector xi(ed.eigenvalues.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = eff_capacity_xi(ed.eigenvalues(i).real(), theta);
    const Matrix vinv = inverse(ed.vectors, "eigenvector matrix");
    const cplx e = (d.x() * ed.vectors * xi.asDiagonal() * vinv * d.z())(0, 0);
    MetricResult out = real_result(e, PathTag::eigen, "E[(1+Z)^-theta]");
    if (!(out.value > 0.0)) throw DomainError("effective capacity: expectation is not positive");
    out.value = -std::log(out.value) / theta;
    return out;
}

MetricResult ergodic_capacity(const MEDist& d) {
    const double th[3] = {1e-4, 5e-5, 1e-5};
    double c[3];
    MetricResult out;
    out.path = PathTag::quadrature;
    for (int i = 0; i < 3; ++i) {
        const MetricResult r = eff_capacity_quadrature(d, th[i]);
        c[i] = r.value;
        out.diag.quad_error = std::max(out.diag.quad_error, r.diag.quad_error);
        for (const auto& n : r.diag.notes) out.diag.notes.push_back(n);
    }
    double v = 0.0;
    for (int i = 0; i < 3; ++i) {
        double w = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) w *= th[j] / (th[j] - th[i]);
        v += w * c[i];
    }
    out.value = v;
    return out;
}

MetricResult ber_noncoherent(const MEDist& d, double a) {
    if (!(a > 0.0)) throw DomainError("BER: a must be positive");
    return real_result(0.5 * lt(d, a), PathTag::closed_form, "BER");
}

MetricResult pep(const std::vector<PepBranch>& branches) {
    if (branches.empty()) throw DomainError("pep: empty branch list");
    for (const auto& b : branches)
        if (!(b.a > 0.0)) throw DomainError("pep: a must be positive");
    auto integrand = [&](double t) {
        const double s2 = std::sin(t) * std::sin(t);
        if (s2 <= 0.0) return 0.0;
        double prod = 1.0;
        for (const auto& b : branches) {
            const Eigen::Index n = b.dist.degree();
            const Matrix m = (b.a / s2) * Matrix::Identity(n, n) - b.dist.Y();
            prod *= (b.dist.x() * m.partialPivLu().solve(b.dist.z()))(0, 0).real();
        }
        return prod;
    };
    const QuadResult q = quad(integrand, 0.0, std::numbers::pi / 2.0, 1e-12);
    MetricResult out;
    out.path = PathTag::quadrature;
    out.value = q.value / std::numbers::pi;
    out.diag.quad_error = q.error / std::numbers::pi;
    if (!q.converged) out.diag.notes.push_back(q.warning);
    return out;
}

MetricResult ber_coherent(const MEDist& d, double a, BerPath path) {
    if (!(a > 0.0)) throw DomainError("BER: a must be positive");
    if (path == BerPath::quadrature) return pep({{d, a}});
    const Eigen::Index n = d.degree();
    try {
        const Matrix w = mat_frac_power(Matrix::Identity(n, n) - d.Y() / a, -0.5);
        const Matrix yz = solve(d.Y(), w * d.z(), "Y");
        return real_result(0.5 * (1.0 + (d.x() * yz)(0, 0)), PathTag::closed_form, "BER");
    } catch (const DomainError& e) {
        if (path == BerPath::closed_form) throw;
        MetricResult out = pep({{d, a}});
        out.diag.notes.push_back(std::string("closed form unavailable (") + e.what() + "); used quadrature");
        return out;
    }
}

MetricResult ber_coherent_direct(const MEDist& d, double a) {
    if (!(a > 0.0)) throw DomainError("BER: a must be positive");
    const QuadResult q =
        quad([&](double z) { return 0.5 * std::erfc(std::sqrt(a * z)) * pdf(d, z); }, 0.0,
             std::numeric_limits<double>::infinity(), 1e-12);
    MetricResult out;
    out.path = PathTag::quadrature;
    out.value = q.value;
    out.diag.quad_error = q.error;
    if (!q.converged) out.diag.notes.push_back(q.warning);
    return out;
}

int relative_degree(const MEDist& d) {
    const double ynorm = std::max(d.Y().norm(), std::numeric_limits<double>::min());
    const double base = d.x().norm() * d.z().norm();
    Vector v = d.z();
    double scale = base;
    for (Eigen::Index k = 1; k <= d.degree(); ++k) {
        const double m = std::abs((d.x() * v)(0, 0));
        if (m > 1e-10 * scale) return static_cast<int>(k);
        v = d.Y() * v;
        scale *= ynorm;
    }
    return static_cast<int>(d.degree());
}

int diversity_gain(const MEDist& d_um, Detection) {
    const double m = mean(d_um);
    if (std::abs(m - 1.0) > 1e-8) throw PreconditionError("diversity_gain: channel must have unit mean");
    return relative_degree(d_um);
}

double ber_slope(const MEDist& d_um, Detection det, double a, double s1, double s2) {
    auto ber = [&](double s) {
        const MEDist d = scale_by(d_um, s);
        return det == Detection::noncoherent ? ber_noncoherent(d, a).value
                                             : ber_coherent(d, a, BerPath::quadrature).value;
    };
    return -(std::log(ber(s2)) - std::log(ber(s1))) / (std::log(s2) - std::log(s1));
}

double lambert_w0(double v) {
    const double em1 = -std::exp(-1.0);
    if (!std::isfinite(v)) throw DomainError("lambert_w0: non-finite argument");
    if (v < em1) {
        if (v > em1 - 1e-15) return -1.0;
        throw DomainError("lambert_w0: argument below -1/e");
    }
    if (v == 0.0) return 0.0;
    if (std::abs(v - em1) < 1e-15) return -1.0;
    double w;
    if (v < -0.25) {
        const double p = std::sqrt(2.0 * (std::exp(1.0) * v + 1.0));
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    } else if (v < 3.0) {
        w = std::log1p(v);
        if (v < 0.0) w = v * (1.0 - v);
    } else {
        const double l = std::log(v);
        w = l - std::log(l);
    }
    for (int it = 0; it < 100; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - v;
        if (f == 0.0) break;
        const double wp1 = w + 1.0;
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        const double step = f / denom;
        w -= step;
        if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w))) break;
    }
    return w;
}

ParametricModel arq_model(const MEDist& d_um) {
    ParametricModel m;
    m.f = [d_um](double theta) { return 1.0 / (1.0 - outage(d_um, theta).value); };
    m.g = [d_um](double theta) {
        const AugEval e = aug_eval(d_um, theta);
        return (1.0 - e.cdf) / (theta * e.pdf);
    };
    return m;
}

ParametricModel harq_persistent_model(const MEDist& d_um) {
    const MEDist renewal(d_um.x(), persistent_generator(d_um), d_um.z());
    ParametricModel m;
    m.f = [d_um](double theta) { return harq_persistent_mean_transmissions(d_um, theta); };
    m.g = [renewal](double theta) {
        const AugEval e = aug_eval(renewal, theta);
        return (1.0 + e.cdf) / (theta * e.pdf);
    };
    return m;
}

OptimumRow optimize_point(const ParametricModel& m, double theta) {
    if (!(theta > 0.0)) throw DomainError("optimize: Theta must be positive");
    OptimumRow row;
    row.theta = theta;
    row.g = m.g(theta);
    const double g = row.g;
    if (!std::isfinite(g) || !(g > 0.0)) {
        row.note = "W0 argument outside [-1/e, 0): no interior optimum";
        return row;
    }
    const double v = -g * std::exp(-g);
    row.r_star = g + lambert_w0(v);
    if (!(g > 1.0) || !(row.r_star > 1e-12)) {
        row.r_star = std::max(row.r_star, 0.0);
        row.note = g == 1.0 ? "branch point W0(-1/e) = -1: boundary optimum R* = 0"
                            : "g <= 1: boundary optimum R* = 0, no interior optimum";
        return row;
    }
    row.interior = true;
    row.s = std::expm1(row.r_star) / theta;
    const double f = m.f(theta);
    row.t_star = row.r_star / f;
    const double s = row.s;
    auto tput = [&](double r) { return r / m.f(std::expm1(r) / s); };
    const double h = 1e-5 * std::max(1.0, row.r_star);
    row.dtdr = (tput(row.r_star + h) - tput(row.r_star - h)) / (2.0 * h);
    return row;
}

std::vector<OptimumRow> optimize_rate(const ParametricModel& m, const std::vector<double>& thetas) {
    std::vector<OptimumRow> out;
    out.reserve(thetas.size());
    for (double t : thetas) out.push_back(optimize_point(m, t));
    return out;
}

Matrix mimo_asymptotic_generator(int n) {
    if (n < 2) throw DomainError("mimo_high_snr_outage: N must be >= 2");
    std::vector<double> poles;
    for (int k = 1; k <= n; ++k)
        for (int j = 0; j < k; ++j) poles.push_back(k);
    for (int k = n + 1; k <= 2 * n - 1; ++k)
        for (int j = 0; j < 2 * n - k; ++j) poles.push_back(k);
    const auto m = static_cast<Eigen::Index>(poles.size()) + 1;
    Matrix q = Matrix::Zero(m, m);
    q(0, 1) = 1.0;
    for (Eigen::Index i = 1; i < m; ++i) {
        q(i, i) = poles[static_cast<std::size_t>(i - 1)];
        if (i + 1 < m) q(i, i + 1) = 1.0;
    }
    return q;
}

MetricResult mimo_high_snr_outage(int n, double r, double t) {
    if (!(r >= 0.0)) throw DomainError("mimo_high_snr_outage: R must be >= 0");
    if (!(t > 0.0)) throw DomainError("mimo_high_snr_outage: t must be positive");
    const Matrix q = mimo_asymptotic_generator(n);
    double scale = 1.0;
    for (int k = 2; k < n; ++k)
        for (int j = 2; j <= k; ++j) scale *= j;
    const Matrix e = expm(r * q);
    const cplx v = std::pow(t, -static_cast<double>(n) * n) * scale * e(0, q.cols() - 1);
    return real_result(v, PathTag::closed_form, "asymptotic outage");
}

} // namespace mekit
