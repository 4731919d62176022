#include "mekit/bivariate.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mekit/algebra.hpp"
#include "mekit/json_io.hpp"

namespace mekit {

using nlohmann::json;

void check_bivme(const BivME& j) {
    require_square(j.Q1, "BivME Q1");
    require_square(j.Q2, "BivME Q2");
    const Eigen::Index d1 = j.Q1.rows(), d2 = j.Q2.rows();
    if (j.p1.size() != d1 || j.r2.size() != d2 || j.P12.rows() != d1 || j.P12.cols() != d2) {
        std::ostringstream os;
        os << "BivME: inconsistent shapes (p1 " << j.p1.size() << ", Q1 " << d1 << "x" << d1 << ", P12 "
           << j.P12.rows() << "x" << j.P12.cols() << ", Q2 " << d2 << "x" << d2 << ", r2 " << j.r2.size() << ")";
        throw DimensionError(os.str());
    }
}

namespace {

double slowest_rate(const Matrix& y) {
    const Eigen::ComplexEigenSolver<Matrix> es(y, false);
    double slow = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double re = -es.eigenvalues()(i).real();
        if (re > 1e-13 * std::max(1.0, max_abs(y))) slow = std::min(slow, re);
    }
    return slow;
}

double fastest_decay_max_re(const Matrix& y) {
    const Eigen::ComplexEigenSolver<Matrix> es(y, false);
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) m = std::max(m, es.eigenvalues()(i).real());
    return m;
}

// int_0^inf e^{z Q} r dz, with an augmented finite horizon when Q is singular.
Vector tail_integral(const Matrix& q, const Vector& r) {
    try {
        return -solve(q, r, "Q2");
    } catch (const SingularityError&) {
        const Eigen::Index n = q.rows();
        const double slow = slowest_rate(q);
        const double horizon = std::isfinite(slow) ? 40.0 / slow : 40.0;
        Matrix aug = Matrix::Zero(n + 1, n + 1);
        aug.topLeftCorner(n, n) = q;
        aug.topRightCorner(n, 1) = r;
        return expm(horizon * aug).topRightCorner(n, 1);
    }
}

// int_0^t e^{s Q} ds through the augmented block [[Q, I], [0, 0]].
Matrix exp_integral(const Matrix& q, double t) {
    const Eigen::Index n = q.rows();
    Matrix aug = Matrix::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = q;
    aug.topRightCorner(n, n) = Matrix::Identity(n, n);
    return expm(t * aug).topRightCorner(n, n);
}

RowVector head_integral(const Matrix& q, const RowVector& p) {
    try {
        const Matrix sol = solve(q.transpose(), p.transpose(), "Q1");
        return -sol.transpose();
    } catch (const SingularityError&) {
        const double slow = slowest_rate(q);
        return p * exp_integral(q, std::isfinite(slow) ? 40.0 / slow : 40.0);
    }
}

double realv(cplx v, const char* what) { return assert_real(v, std::abs(v), 1e-8, what); }

} // namespace

double bivme_pdf(const BivME& j, double z1, double z2) {
    check_bivme(j);
    if (!(z1 >= 0.0) || !(z2 >= 0.0)) throw DomainError("bivme_pdf: arguments must be >= 0");
    if (j.support == Support::ordered && z1 > z2) return 0.0;
    return realv((j.p1 * expm(z1 * j.Q1) * j.P12 * expm(z2 * j.Q2) * j.r2)(0, 0), "bivariate pdf");
}

cplx bivme_lt(const BivME& j, cplx s1, cplx s2) {
    check_bivme(j);
    const Eigen::Index d1 = j.Q1.rows(), d2 = j.Q2.rows();
    const Matrix left = solve((j.Q1 - s1 * Matrix::Identity(d1, d1)).transpose(), j.p1.transpose(), "Q1 - s1 I");
    const Matrix right = solve(j.Q2 - s2 * Matrix::Identity(d2, d2), j.r2, "Q2 - s2 I");
    return (left.transpose() * j.P12 * right)(0, 0);
}

double bivme_total_mass(const BivME& j) {
    check_bivme(j);
    const Vector w = tail_integral(j.Q2, j.r2);
    if (j.support == Support::quadrant) {
        return realv((head_integral(j.Q1, j.p1) * j.P12 * w)(0, 0), "total mass");
    }
    return integral_sylvester(0.0, kInf, j.p1, j.Q1, j.P12, j.Q2, w).value;
}

double bivme_marginal_z1(const BivME& j, double z1) {
    check_bivme(j);
    if (!(z1 >= 0.0)) throw DomainError("marginal: argument must be >= 0");
    const Vector w = tail_integral(j.Q2, j.r2);
    if (j.support == Support::quadrant) return realv((j.p1 * expm(z1 * j.Q1) * j.P12 * w)(0, 0), "marginal");
    return realv((j.p1 * expm(z1 * j.Q1) * j.P12 * expm(z1 * j.Q2) * w)(0, 0), "marginal");
}

double bivme_marginal_z2(const BivME& j, double z2) {
    check_bivme(j);
    if (!(z2 >= 0.0)) throw DomainError("marginal: argument must be >= 0");
    const Matrix tail = j.P12 * expm(z2 * j.Q2) * j.r2;
    if (j.support == Support::quadrant) return realv((head_integral(j.Q1, j.p1) * tail)(0, 0), "marginal");
    return realv((j.p1 * exp_integral(j.Q1, z2) * tail)(0, 0), "marginal");
}

MEDist bivme_marginal_z1_dist(const BivME& j) {
    check_bivme(j);
    if (j.support != Support::quadrant) throw PreconditionError("marginal triple requires quadrant support");
    return MEDist(j.p1, j.Q1, j.P12 * tail_integral(j.Q2, j.r2));
}

MEDist bivme_marginal_z2_dist(const BivME& j) {
    check_bivme(j);
    if (j.support != Support::quadrant) throw PreconditionError("marginal triple requires quadrant support");
    return MEDist(head_integral(j.Q1, j.p1) * j.P12, j.Q2, j.r2);
}

BivGridReport validate_bivme(const BivME& j) {
    check_bivme(j);
    BivGridReport rep;
    const double s1 = slowest_rate(j.Q1), s2 = slowest_rate(j.Q2);
    const double t1 = std::isfinite(s1) ? 40.0 / s1 : 40.0, t2 = std::isfinite(s2) ? 40.0 / s2 : 40.0;
    constexpr int kGrid = 32;
    std::vector<RowVector> left;
    std::vector<Vector> right;
    for (int i = 0; i < kGrid; ++i) {
        left.push_back(j.p1 * expm(t1 * i / (kGrid - 1) * j.Q1) * j.P12);
        right.push_back(expm(t2 * i / (kGrid - 1) * j.Q2) * j.r2);
    }
    rep.min_value = std::numeric_limits<double>::infinity();
    for (int a = 0; a < kGrid; ++a)
        for (int b = 0; b < kGrid; ++b) {
            if (j.support == Support::ordered && t1 * a > t2 * b) continue;
            const double v = (left[static_cast<std::size_t>(a)] * right[static_cast<std::size_t>(b)])(0, 0).real();
            rep.min_value = std::min(rep.min_value, v);
        }
    rep.nonneg = rep.min_value >= -1e-9;
    rep.mass = bivme_total_mass(j);
    rep.mass_ok = std::abs(rep.mass - 1.0) <= 1e-6;
    return rep;
}

BivME independent_bivme(const MEDist& d1, const MEDist& d2) {
    return BivME{d1.x(), d1.Y(), d1.z() * d2.x(), d2.Y(), d2.z(), Support::quadrant};
}

BivME wishart2x2_bivme() {
    BivME j;
    j.p1 = RowVector::Zero(3);
    j.p1(0) = 1.0;
    Matrix q(3, 3);
    q << -1, 1, 0, 0, -1, 1, 0, 0, -1;
    j.Q1 = q;
    j.Q2 = q;
    j.P12 = Matrix::Zero(3, 3);
    j.P12(0, 0) = 2.0;
    j.P12(1, 1) = -2.0;
    j.P12(2, 2) = 2.0;
    j.r2 = Vector::Zero(3);
    j.r2(2) = 1.0;
    j.support = Support::ordered;
    return j;
}

json to_json(const BivME& j) {
    return json{{"p1", matrix_to_json(j.p1)[0]},
                {"Q1", matrix_to_json(j.Q1)},
                {"P12", matrix_to_json(j.P12)},
                {"Q2", matrix_to_json(j.Q2)},
                {"r2", matrix_to_json(j.r2.transpose())[0]},
                {"support", j.support == Support::quadrant ? "quadrant" : "ordered"}};
}

BivME bivme_from_json(const json& j) {
    for (const char* k : {"p1", "Q1", "P12", "Q2", "r2"})
        if (!j.contains(k)) throw ConstructionError(std::string("BivME: missing field '") + k + "'");
    BivME out;
    out.p1 = matrix_from_json(json::array({j["p1"]}), "p1").row(0);
    out.Q1 = matrix_from_json(j["Q1"], "Q1");
    out.P12 = matrix_from_json(j["P12"], "P12");
    out.Q2 = matrix_from_json(j["Q2"], "Q2");
    out.r2 = matrix_from_json(json::array({j["r2"]}), "r2").row(0).transpose();
    if (j.contains("support")) {
        const std::string s = j["support"].get<std::string>();
        if (s == "ordered")
            out.support = Support::ordered;
        else if (s != "quadrant")
            throw ConstructionError("BivME: support must be 'quadrant' or 'ordered'");
    }
    check_bivme(out);
    return out;
}

double integral_product_independent(const MEDist& d1, const MEDist& d2) {
    const Matrix k = kron_sum(d1.Y(), d2.Y());
    const Matrix sol = solve(k, kron(d1.z(), d2.z()), "Y1 (+) Y2");
    return realv(-(kron(d1.x(), d2.x()) * sol)(0, 0), "product integral");
}

double integral_product_finite(const MEDist& d1, const MEDist& d2, double b) {
    if (!(b >= 0.0)) throw DomainError("integral_product_finite: b must be >= 0");
    const Eigen::Index n = d1.degree() * d2.degree();
    Matrix q = Matrix::Zero(n + 1, n + 1);
    q.block(0, 1, 1, n) = kron(d1.x(), d2.x());
    q.block(1, 1, n, n) = kron_sum(d1.Y(), d2.Y());
    const Matrix e = expm(b * q);
    return realv((e.block(0, 1, 1, n) * kron(d1.z(), d2.z()))(0, 0), "product integral");
}

SylvesterIntegral integral_sylvester(double a, double b, const RowVector& x1, const Matrix& y1, const Matrix& x12,
                                     const Matrix& y2, const Vector& z2) {
    if (!(a >= 0.0) || std::isinf(a)) throw DomainError("integral_sylvester: a must be finite and >= 0");
    if (!(b >= a)) throw DomainError("integral_sylvester: requires b >= a");
    Matrix rhs = Matrix::Zero(x12.rows(), x12.cols());
    if (!std::isinf(b)) rhs += expm(b * y1) * x12 * expm(b * y2);
    rhs -= (a == 0.0) ? x12 : Matrix(expm(a * y1) * x12 * expm(a * y2));
    SylvesterIntegral out;
    out.X = solve_sylvester(y1, y2, rhs);
    out.value = realv((x1 * out.X * z2)(0, 0), "Sylvester integral");
    return out;
}

double integral_vectorized(double b, const RowVector& x1, const Matrix& y1, const Matrix& x12, const Matrix& y2,
                           const Vector& z2) {
    if (!(b >= 0.0)) throw DomainError("integral_vectorized: b must be >= 0");
    const Matrix c = kron(z2.transpose(), x1);
    const Matrix k = kron_sum(y2.transpose(), y1);
    const Vector v = vec(x12);
    if (std::isinf(b)) return realv(-(c * solve(k, v, "Y2^T (+) Y1"))(0, 0), "vectorized integral");
    const Eigen::Index n = k.rows();
    Matrix q = Matrix::Zero(n + 1, n + 1);
    q.block(0, 1, 1, n) = c;
    q.block(1, 1, n, n) = k;
    const Matrix e = expm(b * q);
    return realv((e.block(0, 1, 1, n) * v)(0, 0), "vectorized integral");
}

double vanloan_default_horizon(const Matrix& y1, const Matrix& y2) {
    const double gap = -(fastest_decay_max_re(y1) + fastest_decay_max_re(y2));
    if (!(gap > 0.0)) throw DomainError("Van Loan horizon: Y1 (+) Y2 has a non-decaying mode");
    return 60.0 / gap;
}

VanLoanResult integral_vanloan(double b, const RowVector& x1, const Matrix& y1, const Matrix& x12, const Matrix& y2,
                               const Vector& z2) {
    VanLoanResult out;
    out.b = (std::isnan(b) || b < 0.0) ? vanloan_default_horizon(y1, y2) : b;
    if (out.b == 0.0) return out;
    const Eigen::Index d1 = y1.rows(), d2 = y2.rows();
    Matrix m = Matrix::Zero(d1 + d2, d1 + d2);
    m.topLeftCorner(d1, d1) = -y1;
    m.topRightCorner(d1, d2) = x12;
    m.bottomRightCorner(d2, d2) = y2;
    // Block exponential over a short step h = b / 2^k, then I(2h) = I(h) + e^{h Y1} I(h) e^{h Y2}.
    const double norm = std::max(max_abs(y1) * d1 + max_abs(y2) * d2, 1e-300);
    int k = 0;
    while (out.b / std::ldexp(1.0, k) * norm > 1.0 && k < 200) ++k;
    const double h = out.b / std::ldexp(1.0, k);
    const Matrix e = expm(h * m);
    Matrix g1 = expm(h * y1);
    Matrix g2 = e.bottomRightCorner(d2, d2);
    Matrix x = g1 * e.topRightCorner(d1, d2);
    for (int i = 0; i < k; ++i) {
        x += g1 * x * g2;
        g1 = g1 * g1;
        g2 = g2 * g2;
    }
    out.value = realv((x1 * x * z2)(0, 0), "Van Loan integral");
    return out;
}

double integral_commuting(double b, const RowVector& x1, const Matrix& y1, const Matrix& x12, const Matrix& y2,
                          const Vector& z2) {
    if (!(b >= 0.0)) throw DomainError("integral_commuting: b must be >= 0");
    const Matrix sim = solve(x12, y1 * x12, "X12");
    const Matrix comm = y2 * sim - sim * y2;
    if (max_abs(comm) > 1e-10 * std::max(1.0, max_abs(sim) * max_abs(y2)))
        throw PreconditionError("integral_commuting: Y2 does not commute with X12^{-1} Y1 X12");
    const Matrix m = sim + y2;
    const Eigen::Index n = m.rows();
    Matrix w;
    if (std::isinf(b))
        w = -solve(m, z2, "merged exponent");
    else
        w = solve(m, (expm(b * m) - Matrix::Identity(n, n)) * z2, "merged exponent");
    return realv((x1 * x12 * w)(0, 0), "commuting integral");
}

namespace {

// Interference part (p_I, Q_I), coupling P12 and signal part (Q, r).
struct Resolved {
    RowVector pi;
    Matrix qi;
    Matrix p12;
    Matrix q;
    Vector r;
    std::optional<MEDist> signal;
    std::optional<MEDist> interference;
};

Resolved resolve(const InterferenceScenario& scn) {
    Resolved out;
    if (scn.signal && !scn.interferers.empty()) {
        MEDist sum = scn.interferers[0];
        for (std::size_t i = 1; i < scn.interferers.size(); ++i) sum = convolve(sum, scn.interferers[i]);
        const BivME j = independent_bivme(sum, *scn.signal);
        out.pi = j.p1;
        out.qi = j.Q1;
        out.p12 = j.P12;
        out.q = j.Q2;
        out.r = j.r2;
        out.signal = scn.signal;
        out.interference = sum;
        return out;
    }
    if (scn.joint) {
        check_bivme(*scn.joint);
        if (scn.joint->support != Support::quadrant)
            throw PreconditionError("interference analysis requires a quadrant-support joint density");
        out.pi = scn.joint->p1;
        out.qi = scn.joint->Q1;
        out.p12 = scn.joint->P12;
        out.q = scn.joint->Q2;
        out.r = scn.joint->r2;
        return out;
    }
    throw PreconditionError("interference scenario needs a signal with interferers or a joint density");
}

MetricResult success_kron(const Resolved& s, double theta) {
    if (!s.signal) throw PreconditionError("Kronecker path requires independent signal and interference");
    const MEDist& d = *s.signal;
    const MEDist& di = *s.interference;
    const Matrix left = kron_sum(di.Y(), theta * d.Y());
    const Matrix right = kron(Matrix::Identity(di.degree(), di.degree()), d.Y() * expm(-theta * d.Y()));
    const Matrix sol = solve(left * right, kron(di.z(), d.z()), "Kronecker system");
    MetricResult out;
    out.path = PathTag::kron;
    const cplx v = (kron(di.x(), d.x()) * sol)(0, 0);
    out.diag.imag_residual = std::abs(v.imag());
    out.value = realv(v, "success probability");
    return out;
}

Matrix breve_p12(const Resolved& s, double theta) {
    return -s.p12 * solve(s.q, expm(theta * s.q), "Q");
}

MetricResult success_sylvester(const Resolved& s, double theta) {
    const Matrix pb = breve_p12(s, theta);
    const SylvesterIntegral si = integral_sylvester(0.0, kInf, s.pi, s.qi, pb, theta * s.q, s.r);
    MetricResult out;
    out.path = PathTag::sylvester;
    out.value = si.value;
    return out;
}

MetricResult success_vectorized(const Resolved& s, double theta) {
    MetricResult out;
    out.path = PathTag::closed_form;
    out.value = integral_vectorized(kInf, s.pi, s.qi, breve_p12(s, theta), theta * s.q, s.r);
    out.diag.notes.push_back("vectorized Kronecker-sum solve");
    return out;
}

MetricResult success_vanloan(const Resolved& s, double theta) {
    const VanLoanResult v = integral_vanloan(std::nan(""), s.pi, s.qi, breve_p12(s, theta), theta * s.q, s.r);
    MetricResult out;
    out.path = PathTag::vanloan;
    out.value = v.value;
    std::ostringstream os;
    os.precision(17);
    os << "Van Loan horizon b = " << v.b;
    out.diag.notes.push_back(os.str());
    return out;
}

MetricResult success_exp_signal(const Resolved& s, double theta) {
    if (!s.signal || s.signal->degree() != 1) throw PreconditionError("exp_signal path needs a scalar signal");
    const MEDist& d = *s.signal;
    const cplx y = d.Y()(0, 0);
    const cplx c = -(d.x()(0) * d.z()(0)) / y;
    const cplx v = c * std::exp(theta * y) * lt(*s.interference, -theta * y);
    MetricResult out;
    out.value = realv(v, "success probability");
    return out;
}

MetricResult success_exp_interference(const Resolved& s, double theta) {
    if (!s.interference || s.interference->degree() != 1)
        throw PreconditionError("exp_interference path needs a scalar interferer");
    const MEDist& d = *s.signal;
    const MEDist& di = *s.interference;
    const Eigen::Index n = d.degree();
    const cplx yi = di.Y()(0, 0);
    const cplx w = di.x()(0) * di.z()(0);
    const Matrix mgf = w * inverse(-yi * Matrix::Identity(n, n) - theta * d.Y(), "interference transform");
    const Matrix left = solve(d.Y().transpose(), d.x().transpose(), "Q").transpose();
    const cplx v = -(left * expm(theta * d.Y()) * mgf * d.z())(0, 0);
    MetricResult out;
    out.value = realv(v, "success probability");
    return out;
}

} // namespace

MetricResult arq_interference_success(const InterferenceScenario& scn, double theta, InterferencePath path) {
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError("Theta must be finite and >= 0");
    if (scn.signal && scn.interferers.empty() && !scn.joint) {
        MetricResult out = outage(*scn.signal, theta);
        out.value = 1.0 - out.value;
        out.diag.notes.push_back("no interferers: success = 1 - outage");
        return out;
    }
    const Resolved s = resolve(scn);
    switch (path) {
    case InterferencePath::kron: return success_kron(s, theta);
    case InterferencePath::sylvester: return success_sylvester(s, theta);
    case InterferencePath::vectorized: return success_vectorized(s, theta);
    case InterferencePath::vanloan: return success_vanloan(s, theta);
    case InterferencePath::exp_signal: return success_exp_signal(s, theta);
    case InterferencePath::exp_interference: return success_exp_interference(s, theta);
    case InterferencePath::automatic: break;
    }
    try {
        return success_sylvester(s, theta);
    } catch (const SingularityError& e) {
        MetricResult out = success_vectorized(s, theta);
        out.diag.notes.push_back(std::string("Sylvester path failed (") + e.what() + "); switched to vectorized");
        return out;
    }
}

MetricResult arq_interference_throughput(const InterferenceScenario& scn, double r, double theta,
                                         InterferencePath path) {
    if (!(r > 0.0)) throw DomainError("rate R must be positive");
    MetricResult out = arq_interference_success(scn, theta, path);
    out.value *= r;
    return out;
}

ParametricModel arq_interference_model(const MEDist& signal_um, const MEDist& interference) {
    InterferenceScenario scn{signal_um, {interference}, std::nullopt};
    const Resolved s = resolve(scn);
    ParametricModel m;
    m.f = [s](double theta) { return 1.0 / success_sylvester(s, theta).value; };
    m.g = [s](double theta) {
        const Matrix pb = breve_p12(s, theta);
        const Matrix tq = theta * s.q;
        const Matrix x = solve_sylvester(s.qi, tq, -pb);
        const Matrix xd = solve_sylvester(s.qi, tq, -(pb + x) * s.q);
        const double p = realv((s.pi * x * s.r)(0, 0), "success probability");
        const double dp = realv((s.pi * xd * s.r)(0, 0), "success derivative");
        return -p / (theta * dp);
    };
    return m;
}

MetricResult harq_persistent_interference(const InterferenceScenario&, double, double) {
    throw PreconditionError(
        "persistent HARQ with interference is not supported: the transform of the accumulated "
        "signal-to-interference ratio is not rational, so no ME closed form exists");
}

MetricResult sm_mimo_2x2_outage(double r) {
    if (!(r > 0.0)) throw DomainError("sm_mimo_2x2_outage: R must be positive");
    const BivME j = wishart2x2_bivme();
    const double theta = std::exp(r);
    const Matrix q1i = inverse(j.Q1, "Q1");
    const Vector w = solve(j.Q2, j.r2, "Q2");
    const double c0 = realv((j.p1 * q1i * j.P12 * w)(0, 0), "closed part");
    const double ct = realv((j.p1 * expm((theta - 1.0) * j.Q1) * q1i * j.P12 * w)(0, 0), "closed part");
    const double closed = 0.5 * (c0 - ct);
    auto integrand = [&](double t1) {
        const Matrix tail = solve(j.Q2, expm((theta / t1 - 1.0) * j.Q2) * j.r2, "Q2");
        return 0.5 * (j.p1 * expm((t1 - 1.0) * j.Q1) * j.P12 * tail)(0, 0).real();
    };
    const QuadResult q = quad(integrand, 1.0, theta, 1e-12);
    MetricResult out;
    out.path = PathTag::quadrature;
    out.value = closed + q.value;
    out.diag.quad_error = q.error;
    if (!q.converged) out.diag.notes.push_back(q.warning);
    return out;
}

} // namespace mekit
