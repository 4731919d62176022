#include <doctest.h>

#include "mekit/algebra.hpp"
#include "mekit/bivariate.hpp"
#include "oracles.hpp"

using namespace mekit;

namespace {

const double kE = oracle::e();

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
RowVector row1() { return RowVector::Ones(1); }
Vector col1() { return Vector::Ones(1); }

// P(Z > Theta (1 + Z_I)) for independent Z and Z_I by quadrature over the interference.
double success_oracle(const MEDist& sig, const MEDist& intf, double theta) {
    return oracle::half_line([&](double u) { return pdf(intf, u) * (1.0 - cdf(sig, theta * (1.0 + u))); });
}

// Mixture of two independent exponential pairs, z1 = Z_I and z2 = Z.
BivME mixture_bivme() {
    BivME j;
    j.p1 = RowVector::Constant(2, 0.5);
    j.Q1 = Matrix::Zero(2, 2);
    j.Q1(0, 0) = -1.0;
    j.Q1(1, 1) = -3.0;
    j.P12 = Matrix::Identity(2, 2);
    j.Q2 = Matrix::Zero(2, 2);
    j.Q2(0, 0) = -2.0;
    j.Q2(1, 1) = -1.0;
    j.r2 = Vector(2);
    j.r2 << 2.0, 3.0;
    return j;
}

double mixture_success(double th) {
    return 0.5 * std::exp(-2.0 * th) / (1.0 + 2.0 * th) + 0.5 * 3.0 * std::exp(-th) / (3.0 + th);
}

} // namespace

TEST_CASE("Wishart eigenvalue density") {
    const BivME w = wishart2x2_bivme();
    Matrix q(3, 3);
    q << -1, 1, 0, 0, -1, 1, 0, 0, -1;
    CHECK(oracle::max_abs_diff(w.Q1, q) == 0.0);
    CHECK(oracle::max_abs_diff(w.Q2, q) == 0.0);
    Matrix p12 = Matrix::Zero(3, 3);
    p12(0, 0) = 2.0;
    p12(1, 1) = -2.0;
    p12(2, 2) = 2.0;
    CHECK(oracle::max_abs_diff(w.P12, p12) == 0.0);
    CHECK(w.p1(0) == cplx(1.0) );
    CHECK(w.r2(2) == cplx(1.0));
    CHECK(w.support == Support::ordered);
    CHECK(std::abs(bivme_pdf(w, 1.0, 1.0)) < 1e-15);
    CHECK(std::abs(bivme_pdf(w, 1.0, 2.0) - std::exp(-3.0)) < 1e-12);
    CHECK(std::abs(bivme_pdf(w, 1.0, 2.0) - 0.049787) < 1e-6);
    CHECK(std::abs(bivme_pdf(w, 0.0, 3.0) - 9.0 * std::exp(-3.0)) < 1e-12);
    CHECK(std::abs(bivme_pdf(w, 0.0, 3.0) - 0.448084) < 1e-6);
    CHECK(bivme_pdf(w, 2.0, 1.0) == 0.0);
    for (int i = 0; i < 12; ++i)
        for (int k = i; k < 12; ++k) {
            const double z1 = 0.4 * i, z2 = 0.4 * k;
            CHECK(std::abs(bivme_pdf(w, z1, z2) - std::exp(-z1 - z2) * (z1 - z2) * (z1 - z2)) < 1e-10);
        }
    CHECK(std::abs(bivme_total_mass(w) - 1.0) < 1e-10);
    const BivGridReport rep = validate_bivme(w);
    CHECK(rep.nonneg);
    CHECK(rep.mass_ok);
    // Marginals of the ordered eigenvalues by direct quadrature.
    for (double z : {0.3, 1.0, 2.5}) {
        const double m1 = oracle::half_line([&](double v) { return std::exp(-2.0 * z - v) * v * v; });
        const double m2 = oracle::tanh_sinh([&](double u) { return std::exp(-u - z) * (u - z) * (u - z); }, 0.0, z);
        CHECK(std::abs(bivme_marginal_z1(w, z) - m1) < 1e-10);
        CHECK(std::abs(bivme_marginal_z2(w, z) - m2) < 1e-10);
    }
    CHECK(std::abs(oracle::half_line([&](double z) { return bivme_marginal_z1(w, z); }) - 1.0) < 1e-8);
    CHECK(std::abs(oracle::half_line([&](double z) { return bivme_marginal_z2(w, z); }) - 1.0) < 1e-8);
}

TEST_CASE("independent bivariate density") {
    const MEDist a = oscillatory_example(), b = nakagami(2, 1.5);
    const BivME j = independent_bivme(a, b);
    CHECK(std::abs(bivme_lt(j, 0.0, 0.0) - 1.0) < 1e-12);
    CHECK(std::abs(bivme_lt(j, cplx(0.3, 1.0), 2.0) - lt(a, cplx(0.3, 1.0)) * lt(b, 2.0)) < 1e-12);
    CHECK(std::abs(bivme_total_mass(j) - 1.0) < 1e-10);
    for (double z : {0.0, 0.4, 1.7, 3.0}) {
        CHECK(std::abs(bivme_marginal_z1(j, z) - pdf(a, z)) < 1e-10);
        CHECK(std::abs(bivme_marginal_z2(j, z) - pdf(b, z)) < 1e-10);
        CHECK(std::abs(pdf(bivme_marginal_z1_dist(j), z) - pdf(a, z)) < 1e-10);
        CHECK(std::abs(pdf(bivme_marginal_z2_dist(j), z) - pdf(b, z)) < 1e-10);
        CHECK(std::abs(bivme_pdf(j, z, 1.1) - pdf(a, z) * pdf(b, 1.1)) < 1e-12);
    }
    CHECK(validate_bivme(j).nonneg);
    CHECK(validate_bivme(j).mass_ok);
    const BivME back = bivme_from_json(to_json(j));
    CHECK(std::abs(bivme_pdf(back, 0.7, 0.9) - bivme_pdf(j, 0.7, 0.9)) < 1e-15);
    CHECK(std::abs(bivme_lt(mixture_bivme(), 0.0, 0.0) - 1.0) < 1e-14);
    BivME bad = j;
    bad.P12 = Matrix::Zero(2, 3);
    CHECK_THROWS_AS(check_bivme(bad), DimensionError);
}

TEST_CASE("integral of a product of densities") {
    CHECK(std::abs(integral_product_independent(rayleigh(1.0), rayleigh(1.0)) - 0.5) < 1e-15);
    const MEDist e2 = nakagami(2, 1.0);
    const double q = oracle::half_line([&](double t) { return oracle::erlang_pdf(2, 2.0, t) * oracle::erlang_pdf(2, 2.0, t); });
    CHECK(std::abs(integral_product_independent(e2, e2) - q) < 1e-9);
    const MEDist scaled(3.0 * e2.x(), e2.Y(), e2.z());
    CHECK(std::abs(integral_product_independent(scaled, e2) - 3.0 * q) < 1e-12);
    CHECK(integral_product_finite(e2, e2, 0.0) == 0.0);
    CHECK(std::abs(integral_product_finite(rayleigh(1.0), rayleigh(1.0), 1.0) - (1.0 - std::exp(-2.0)) / 2.0) < 1e-15);
    CHECK(std::abs(integral_product_finite(rayleigh(1.0), rayleigh(1.0), 1.0) - 0.432332) < 1e-6);
    const MEDist osc = oscillatory_example();
    CHECK(std::abs(integral_product_finite(osc, e2, 40.0) - integral_product_independent(osc, e2)) < 1e-8);
    CHECK(std::abs(integral_product_finite(osc, e2, 2.0) -
                   oracle::piecewise([&](double t) { return oracle::example2_pdf(t) * oracle::erlang_pdf(2, 2.0, t); }, 2.0, 20)) < 1e-10);
}

TEST_CASE("Sylvester and vectorized integrals") {
    const SylvesterIntegral s = integral_sylvester(0.0, kInf, row1(), scalar(-1.0), scalar(1.0), scalar(-1.0), col1());
    CHECK(std::abs(s.X(0, 0) - 0.5) < 1e-15);
    CHECK(std::abs(s.value - 0.5) < 1e-15);
    CHECK(std::abs(integral_vectorized(1.0, row1(), scalar(-1.0), scalar(1.0), scalar(-1.0), col1()) - (1.0 - std::exp(-2.0)) / 2.0) < 1e-14);
    CHECK(integral_vectorized(1.0, row1(), scalar(-1.0), scalar(0.0), scalar(-1.0), col1()) == 0.0);
    CHECK_THROWS_AS(integral_sylvester(0.0, kInf, row1(), scalar(-1.0), scalar(1.0), scalar(1.0), col1()), SingularityError);

    const MEDist a = oscillatory_example(), b = sdc(3, 1.0);
    CHECK(std::abs(integral_sylvester(0.0, kInf, a.x(), a.Y(), a.z() * b.x(), b.Y(), b.z()).value -
                   integral_product_independent(a, b)) < 1e-10);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix y1 = oracle::random_stable(rng, 3, 2.5), y2 = oracle::random_stable(rng, 2, 2.5);
        Matrix x12(3, 2);
        for (int i = 0; i < 6; ++i) x12(i / 2, i % 2) = u(rng);
        RowVector x1(3);
        Vector z2(2);
        for (int i = 0; i < 3; ++i) x1(i) = u(rng);
        for (int i = 0; i < 2; ++i) z2(i) = u(rng);
        const double b = 0.9;
        const SylvesterIntegral fin = integral_sylvester(0.3, b, x1, y1, x12, y2, z2);
        const Matrix rhs = expm(b * y1) * x12 * expm(b * y2) - expm(0.3 * y1) * x12 * expm(0.3 * y2);
        const Matrix res = y1 * fin.X + fin.X * y2 - rhs;
        CHECK(res.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
        const double quad = oracle::simpson([&](double t) { return (x1 * expm(t * y1) * x12 * expm(t * y2) * z2)(0, 0).real(); }, 0.3, b, 400);
        CHECK(std::abs(fin.value - quad) < 1e-8);
        const double s0b = integral_sylvester(0.0, b, x1, y1, x12, y2, z2).value;
        CHECK(std::abs(s0b - integral_vectorized(b, x1, y1, x12, y2, z2)) < 1e-10);
        const double inf = integral_sylvester(0.0, kInf, x1, y1, x12, y2, z2).value;
        CHECK(std::abs(inf - integral_vectorized(kInf, x1, y1, x12, y2, z2)) < 1e-10);
        // Closed vectorized form -(z2^T kron x1)(Y2^T (+) Y1)^{-1} vec(X12).
        const Matrix ks = kron_sum(y2.transpose(), y1);
        const Vector sol = ks.partialPivLu().solve(vec(x12));
        const double closed = -(kron(z2.transpose(), x1) * sol)(0, 0).real();
        CHECK(std::abs(inf - closed) < 1e-10);
        const VanLoanResult vl = integral_vanloan(std::nan(""), x1, y1, x12, y2, z2);
        CHECK(std::abs(vl.b - vanloan_default_horizon(y1, y2)) < 1e-12);
        CHECK(std::abs(vl.value - inf) < 1e-8);
    }
}

TEST_CASE("Van Loan integral") {
    CHECK(std::abs(integral_vanloan(40.0, row1(), scalar(-1.0), scalar(1.0), scalar(-1.0), col1()).value - 0.5) < 1e-12);
    CHECK(std::abs(integral_vanloan(0.0, row1(), scalar(-1.0), scalar(1.0), scalar(-1.0), col1()).value) < 1e-15);
    CHECK(std::abs(vanloan_default_horizon(scalar(-1.0), scalar(-2.0)) - 20.0) < 1e-12);
}

TEST_CASE("commuting special case") {
    Matrix a(2, 2);
    a << -2.0, 0.5, 0.3, -1.5;
    const Matrix y1 = a * a * 0.2 + a, y2 = 2.0 * a;
    const Matrix x12 = Matrix::Identity(2, 2);
    RowVector x1(2);
    x1 << 0.4, 0.6;
    Vector z2(2);
    z2 << 1.0, 2.0;
    for (double b : {0.5, 2.0})
        CHECK(std::abs(integral_commuting(b, x1, y1, x12, y2, z2) - integral_sylvester(0.0, b, x1, y1, x12, y2, z2).value) < 1e-10);
    CHECK(std::abs(integral_commuting(kInf, x1, y1, x12, y2, z2) - integral_sylvester(0.0, kInf, x1, y1, x12, y2, z2).value) < 1e-10);
    Matrix other(2, 2);
    other << -1.0, 1.0, 0.0, -3.0;
    CHECK_THROWS_AS(integral_commuting(1.0, x1, y1, x12, other.transpose(), z2), PreconditionError);
}

TEST_CASE("ARQ with interference") {
    const double th = kE - 1.0;
    const InterferenceScenario ex{rayleigh(1.0), {rayleigh(1.0)}, std::nullopt};
    const double ref = std::exp(-kE);
    CHECK(std::abs(ref - 0.065988) < 1e-6);
    for (InterferencePath p : {InterferencePath::automatic, InterferencePath::kron, InterferencePath::sylvester,
                               InterferencePath::vectorized, InterferencePath::vanloan, InterferencePath::exp_signal,
                               InterferencePath::exp_interference})
        CHECK(std::abs(arq_interference_success(ex, th, p).value - ref) < 1e-12);
    CHECK(std::abs(arq_interference_throughput(ex, 1.0, th).value - ref) < 1e-12);

    // Nakagami signal with exponential interference: the closed scalar-interferer form against the Kronecker form.
    const InterferenceScenario nak{nakagami(2, 1.0), {rayleigh(0.5)}, std::nullopt};
    for (double t : {0.3, 1.0, 2.0}) {
        const double k = arq_interference_success(nak, t, InterferencePath::kron).value;
        CHECK(std::abs(arq_interference_success(nak, t, InterferencePath::exp_interference).value - k) < 1e-10);
        CHECK(std::abs(k - success_oracle(nakagami(2, 1.0), rayleigh(0.5), t)) < 1e-9);
    }

    const std::vector<MEDist> sigs{rayleigh(2.0), nakagami(2, 3.0), nakagami(3, 1.0), oscillatory_example(), sdc(3, 2.0)};
    const std::vector<std::vector<MEDist>> intfs{{rayleigh(0.3)}, {nakagami(2, 0.5)}, {rayleigh(0.2), rayleigh(0.25)},
                                                  {sdc(2, 0.4)}};
    for (const MEDist& sig : sigs)
        for (const auto& ints : intfs) {
            const InterferenceScenario scn{sig, ints, std::nullopt};
            MEDist sum = ints[0];
            for (std::size_t i = 1; i < ints.size(); ++i) sum = convolve(sum, ints[i]);
            for (double t : {0.5, 1.5}) {
                const double k = arq_interference_success(scn, t, InterferencePath::kron).value;
                const double s = arq_interference_success(scn, t, InterferencePath::sylvester).value;
                const double v = arq_interference_success(scn, t, InterferencePath::vectorized).value;
                const double l = arq_interference_success(scn, t, InterferencePath::vanloan).value;
                CHECK(std::abs(k - s) < 1e-9);
                CHECK(std::abs(v - s) < 1e-9);
                CHECK(std::abs(l - s) < 1e-8);
                CHECK(std::abs(s - success_oracle(sig, sum, t)) < 1e-8);
            }
        }

    // Vanishing interference.
    const InterferenceScenario tiny{nakagami(2, 1.0), {rayleigh(1e-8)}, std::nullopt};
    CHECK(std::abs(arq_interference_success(tiny, 1.0).value - (1.0 - outage(nakagami(2, 1.0), 1.0).value)) < 1e-6);
    const InterferenceScenario none{nakagami(2, 1.0), {}, std::nullopt};
    CHECK(std::abs(arq_interference_success(none, 1.0).value - (1.0 - outage(nakagami(2, 1.0), 1.0).value)) < 1e-14);

    // General joint density.
    const InterferenceScenario joint{std::nullopt, {}, mixture_bivme()};
    for (double t : {0.2, 1.0, 3.0}) {
        CHECK(std::abs(arq_interference_success(joint, t).value - mixture_success(t)) < 1e-12);
        CHECK(std::abs(arq_interference_success(joint, t, InterferencePath::vectorized).value - mixture_success(t)) < 1e-12);
        CHECK(std::abs(arq_interference_success(joint, t, InterferencePath::vanloan).value - mixture_success(t)) < 1e-8);
    }
    CHECK_THROWS_AS(arq_interference_success(joint, 1.0, InterferencePath::kron), PreconditionError);
    CHECK_THROWS_AS(harq_persistent_interference(ex, 1.0, 1.0), PreconditionError);
}

TEST_CASE("interference optimizer") {
    const MEDist sig = nakagami(2, 1.0), intf = rayleigh(0.2);
    const ParametricModel m = arq_interference_model(sig, intf);
    for (double th : {0.1, 0.3, 0.6}) {
        const double h = 1e-6 * th;
        const double gnum = m.f(th) / (th * (m.f(th + h) - m.f(th - h)) / (2.0 * h));
        CHECK(std::abs(m.g(th) - gnum) < 1e-5 * std::abs(gnum));
        const OptimumRow row = optimize_point(m, th);
        if (row.interior) CHECK(std::abs(row.dtdr) < 1e-4 * row.t_star);
    }
}

TEST_CASE("2x2 spatial multiplexing outage") {
    auto region = [](double r) {
        const double th = std::exp(r);
        const double top = std::sqrt(th) - 1.0;
        return oracle::tanh_sinh(
            [&](double z1) {
                const double hi = th / (1.0 + z1) - 1.0;
                if (hi <= z1) return 0.0;
                return oracle::tanh_sinh([&](double z2) { return std::exp(-z1 - z2) * (z1 - z2) * (z1 - z2); }, z1, hi);
            },
            0.0, top);
    };
    for (double r : {0.5, 1.0, 2.0, 4.0}) CHECK(std::abs(sm_mimo_2x2_outage(r).value - region(r)) < 1e-6);
    CHECK(sm_mimo_2x2_outage(1e-6).value < 1e-12);
    CHECK(std::abs(sm_mimo_2x2_outage(8.0).value - 1.0) < 1e-6);
}
