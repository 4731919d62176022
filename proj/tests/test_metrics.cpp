#include <doctest.h>

#include <boost/math/special_functions/lambert_w.hpp>
#include <random>

#include "mekit/algebra.hpp"
#include "mekit/metrics.hpp"
#include "oracles.hpp"

using namespace mekit;

namespace {

const double kE = oracle::e();

std::vector<MEDist> family() {
    return {rayleigh(1.0), rayleigh(3.0), nakagami(2, 1.0), nakagami(3, 2.0), oscillatory_example(), sdc(3, 1.0),
            ostbc_mrc(2, 2, 1.0, 1.0)};
}

} // namespace

TEST_CASE("outage") {
    CHECK(std::abs(outage(rayleigh(1.0), kE - 1.0).value - (1.0 - std::exp(1.0 - kE))) < 1e-14);
    CHECK(std::abs(outage(rayleigh(1.0), kE - 1.0).value - 0.820625) < 1e-6);
    CHECK(outage(rayleigh(1.0), 0.0).value == 0.0);
    CHECK(std::abs(outage(nakagami(2, 1.0), 1.0).value - oracle::erlang_cdf(2, 2.0, 1.0)) < 1e-14);
    CHECK(std::abs(outage(nakagami(2, 1.0), 1.0).value - 0.593994) < 1e-6);
    CHECK_THROWS_AS(outage(rayleigh(1.0), -0.1), DomainError);
    CHECK(std::abs(outage(oscillatory_example(), 1.3).value - oracle::example2_cdf(1.3)) < 1e-13);
}

TEST_CASE("outage capacity") {
    CHECK(std::abs(outage_capacity(rayleigh(1.0), 1.0 - std::exp(-1.0)) - std::log(2.0)) < 1e-12);
    CHECK(outage_capacity(rayleigh(1.0), 1e-12) < 1e-11);
    for (const MEDist& d : family())
        for (double q : {0.01, 0.1, 0.5}) {
            const double c = outage_capacity(d, q);
            CHECK(std::abs(outage(d, std::expm1(c)).value - q) < 1e-9);
        }
    CHECK_THROWS_AS(outage_capacity(rayleigh(1.0), 1.0), DomainError);
}

TEST_CASE("ARQ throughput") {
    const double th = kE - 1.0;
    CHECK(std::abs(arq_throughput(rayleigh(1.0), 1.0, th).value - std::exp(1.0 - kE)) < 1e-14);
    CHECK(std::abs(arq_throughput(rayleigh(1.0), 1.0, th).value - 0.179375) < 1e-6);
    CHECK(arq_throughput(rayleigh(1.0), 1e-9, std::expm1(1e-9)).value < 1e-8);
    CHECK(std::abs(arq_throughput(rayleigh(1e6), 1.0, th).value - 1.0) < 1e-5);
    for (const MEDist& d : family())
        for (double t : {0.3, 1.0, 2.5})
            CHECK(std::abs(arq_throughput(d, 1.0, t).value - arq_throughput(d, 1.0, t, ArqPath::inverse).value) < 1e-10);
}

TEST_CASE("truncated HARQ") {
    const double th = kE - 1.0;
    for (const MEDist& d : family())
        CHECK(std::abs(harq_truncated_throughput(d, 1.0, 1, 0.8).value - arq_throughput(d, 1.0, 0.8).value) < 1e-12);
    const double ref = (1.0 - oracle::erlang_cdf(2, 1.0, th)) / (1.0 + oracle::erlang_cdf(1, 1.0, th));
    CHECK(std::abs(harq_truncated_throughput(rayleigh(1.0), 1.0, 2, th).value - ref) < 1e-12);
    CHECK(std::abs(ref - 0.267814) < 1e-6);
    const double t64 = harq_truncated_throughput(rayleigh(1.0), 1.0, 64, th).value;
    CHECK(std::abs(t64 - 1.0 / kE) < 1e-10);
    for (const MEDist& d : family()) {
        double prev = 0.0;
        for (int k = 1; k <= 8; ++k) {
            const double t = harq_truncated_throughput(d, 1.2, k, 1.5).value;
            CHECK(t >= prev - 1e-13);
            prev = t;
            // Renewal identity from the partial cdfs.
            const HarqRenewal hr = harq_renewal(d, k, 1.5);
            double et = 1.0;
            for (int j = 0; j + 1 < k; ++j) et += hr.partial_cdfs[static_cast<std::size_t>(j)];
            CHECK(std::abs(t - 1.2 * (1.0 - hr.partial_cdfs.back()) / et) < 1e-12);
        }
        CHECK(prev <= harq_persistent_throughput(d, 1.2, 1.5).value + 1e-12);
    }
}

TEST_CASE("persistent HARQ") {
    const double th = kE - 1.0;
    CHECK(std::abs(harq_persistent_mean_transmissions(rayleigh(1.0), th) - kE) < 1e-13);
    CHECK(std::abs(harq_persistent_throughput(rayleigh(1.0), 1.0, th).value - 1.0 / kE) < 1e-13);
    CHECK(std::abs(harq_persistent_throughput(RationalLT{{1.0}, {1.0}}, 1.0, th).value - 1.0 / kE) < 1e-13);
    // Unit exponential with 2-fold diversity, i.e. F(s) = 1/(1+s)^2.
    const RationalLT erl2{{1.0}, {1.0, 2.0}};
    for (double t : {0.5, 1.0, 3.0}) {
        const double blocks = harq_persistent_diversity2(RationalLT{{1.0}, {1.0}}, 1.0, t).value;
        const double roots = harq_persistent_diversity(rayleigh(1.0), 2, 1.0, t).value;
        const double shift = harq_persistent_erlang(2, 1.0, t).value;
        const double direct = harq_persistent_throughput(erl2, 1.0, t).value;
        const double triple = harq_persistent_throughput(from_rational_lt(erl2), 1.0, t).value;
        CHECK(std::abs(blocks - roots) < 1e-10);
        CHECK(std::abs(shift - direct) < 1e-9);
        CHECK(std::abs(direct - blocks) < 1e-10);
        CHECK(std::abs(triple - direct) < 1e-12);
        // Renewal function of Erlang-2: m(t) = t/2 - (1 - e^{-2t})/4.
        CHECK(std::abs(direct - 1.0 / (1.0 + t / 2.0 - (1.0 - std::exp(-2.0 * t)) / 4.0)) < 1e-12);
    }
    for (int n : {3, 4})
        CHECK(std::abs(harq_persistent_diversity(rayleigh(1.0), n, 1.0, 2.0).value -
                       harq_persistent_erlang(n, 1.0, 2.0).value) < 1e-9);
    const MEDist d = oscillatory_example();
    const MEDist d2 = convolve(d, d);
    CHECK(std::abs(harq_persistent_diversity(d, 2, 1.0, 1.7).value - harq_persistent_throughput(d2, 1.0, 1.7).value) < 1e-9);
}

TEST_CASE("NCBR") {
    const MEDist r = rayleigh(1.0);
    const NcbrLinks links{r, r, r, r};
    const double v = ncbr_throughput(links, 1.0, 1.0).value;
    CHECK(std::abs(v - 2.0 * std::exp(2.0 * (1.0 - kE)) / 3.0) < 1e-14);
    CHECK(std::abs(v - 0.021450) < 1e-6);
    const MEDist big = rayleigh(1e12);
    const NcbrLinks strong{big, big, r, r};
    CHECK(std::abs(ncbr_throughput(strong, 1.0, 1.0).value - (1.0 + std::exp(2.0 * (1.0 - kE))) / 3.0) < 1e-9);
    for (const MEDist& a : family())
        for (const MEDist& b : family())
            CHECK(std::abs(ncbr_direction_outage(a, b, 0.9) - min_cdf(a, b, 0.9)) < 1e-10);
}

TEST_CASE("effective capacity with ME rate") {
    CHECK(std::abs(eff_capacity_me_rate(rayleigh(1.0), 1.0).value - std::log(2.0)) < 1e-14);
    CHECK(std::abs(eff_capacity_me_rate(rayleigh(1.0), 1e-4).value - 1.0) < 1e-4);
    CHECK(std::abs(eff_capacity_me_rate(nakagami(2, 1.0), 1.0).value - 2.0 * std::log(1.5)) < 1e-14);
    CHECK(std::abs(eff_capacity_me_rate(nakagami(2, 1.0), 1.0).value - 0.810930) < 1e-6);
}

TEST_CASE("effective capacity with Shannon rate") {
    const double ref = -std::log(kE * oracle::e1(1.0));
    CHECK(std::abs(ref - 0.516930) < 5e-6);
    CHECK(std::abs(eff_capacity_shannon(rayleigh(1.0), 1.0).value - ref) < 1e-10);
    CHECK(std::abs(eff_capacity_shannon(rayleigh(1.0), 1.0, EffCapPath::quadrature).value - ref) < 1e-10);
    CHECK(std::abs(eff_capacity_xi(-1.0, 1.0) - kE * oracle::e1(1.0)) < 1e-14);
    CHECK(std::abs(eff_capacity_xi(-1.0, 1.0) - 0.596347) < 1e-6);
    for (const MEDist& d : {rayleigh(2.0), nakagami(2, 1.0), nakagami(3, 4.0), sdc(3, 1.0)})
        for (double th : {0.1, 0.5, 1.0}) {
            const MetricResult e = eff_capacity_shannon(d, th);
            // Erlang generators are defective and take the quadrature fallback.
            const bool defective = d.degree() > 1 && d.Y()(0, 0) == d.Y()(1, 1);
            CHECK(e.path == (defective ? PathTag::quadrature : PathTag::eigen));
            CHECK(e.diag.notes.empty() == !defective);
            const double q = eff_capacity_shannon(d, th, EffCapPath::quadrature).value;
            CHECK(std::abs(e.value - q) < 1e-7);
            const double direct =
                oracle::half_line([&](double z) { return std::pow(1.0 + z, -th) * pdf(d, z); });
            CHECK(std::abs(e.value + std::log(direct) / th) < 1e-8);
        }
    const MetricResult osc = eff_capacity_shannon(oscillatory_example(), 0.5);
    CHECK(osc.path == PathTag::quadrature);
    CHECK_FALSE(osc.diag.notes.empty());
    const double oref =
        -std::log(oracle::half_line([](double z) { return std::pow(1.0 + z, -0.5) * oracle::example2_pdf(z); })) / 0.5;
    CHECK(std::abs(osc.value - oref) < 1e-8);
}

TEST_CASE("ergodic capacity") {
    CHECK(std::abs(ergodic_capacity(rayleigh(1.0)).value - kE * oracle::e1(1.0)) < 1e-7);
    const double ref = oracle::half_line([](double z) { return std::log1p(z) * oracle::example2_pdf(z); });
    CHECK(std::abs(ergodic_capacity(oscillatory_example()).value - ref) < 1e-7);
}

TEST_CASE("non-coherent BER") {
    CHECK(std::abs(ber_noncoherent(rayleigh(1.0), 1.0).value - 0.25) < 1e-15);
    // Non-coherent FSK on Rayleigh: 1/(2 + S).
    CHECK(std::abs(ber_noncoherent(rayleigh(1.0), 0.5).value - 1.0 / 3.0) < 1e-15);
    double prev = 1.0;
    for (double s = 1.0; s < 1e6; s *= 3.0) {
        const double b = ber_noncoherent(nakagami(2, s), 1.0).value;
        CHECK(b < prev);
        prev = b;
    }
    for (const MEDist& d : family()) {
        const double ref = oracle::half_line([&](double z) { return 0.5 * std::exp(-z) * pdf(d, z); });
        CHECK(std::abs(ber_noncoherent(d, 1.0).value - ref) < 1e-9);
    }
}

TEST_CASE("coherent BER") {
    CHECK(std::abs(ber_coherent(rayleigh(1.0), 1.0).value - 0.5 * (1.0 - std::sqrt(0.5))) < 1e-14);
    CHECK(std::abs(ber_coherent(rayleigh(1.0), 1.0).value - 0.146447) < 1e-6);
    CHECK(ber_coherent(rayleigh(1.0), 1e10).value < 1e-5);
    for (const MEDist& d : family()) {
        const double ref = oracle::half_line([&](double z) { return oracle::qfunc(std::sqrt(2.0 * z)) * pdf(d, z); });
        const MetricResult c = ber_coherent(d, 1.0);
        CHECK(std::abs(c.value - ref) < 1e-8);
        CHECK(std::abs(c.value - ber_coherent_direct(d, 1.0).value) < 1e-8);
        CHECK(std::abs(c.value - ber_coherent(d, 1.0, BerPath::quadrature).value) < 1e-8);
    }
}

TEST_CASE("pairwise error probability") {
    CHECK(std::abs(pep({{rayleigh(1.0), 1.0}}).value - 0.146447) < 1e-6);
    for (const MEDist& d : family())
        CHECK(std::abs(pep({{d, 0.7}}).value - ber_coherent(d, 0.7).value) < 1e-8);
    // Two-branch MRC BPSK: ((1 - mu)/2)^2 (2 + mu), mu = sqrt(S/(1+S)).
    const double mu = std::sqrt(0.5);
    const double closed = std::pow((1.0 - mu) / 2.0, 2) * (2.0 + mu);
    const double v = pep({{rayleigh(1.0), 1.0}, {rayleigh(1.0), 1.0}}).value;
    CHECK(std::abs(v - closed) < 1e-10);
    std::mt19937_64 rng(7);
    std::exponential_distribution<double> ex(1.0);
    const int n = 400000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double q = oracle::qfunc(std::sqrt(2.0 * (ex(rng) + ex(rng))));
        sum += q;
        sum2 += q * q;
    }
    const double m = sum / n, se = std::sqrt((sum2 / n - m * m) / n);
    CHECK(std::abs(v - m) < 3.0 * se);
    CHECK(std::abs(pep({{rayleigh(1e-12), 1.0}, {rayleigh(1.0), 1.0}}).value - pep({{rayleigh(1.0), 1.0}}).value) < 1e-9);
    CHECK(std::abs(pep({{rayleigh(1e-14), 1.0}}).value - 0.5) < 1e-6);
}

TEST_CASE("diversity gain") {
    CHECK(diversity_gain(rayleigh(1.0), Detection::noncoherent) == 1);
    CHECK(diversity_gain(nakagami(3, 1.0), Detection::coherent) == 3);
    const MEDist ostbc = normalize_mean(ostbc_mrc(2, 2, 1.0, 1.0));
    CHECK(diversity_gain(ostbc, Detection::noncoherent) == 4);
    CHECK_THROWS_AS(diversity_gain(rayleigh(2.0), Detection::coherent), PreconditionError);
    CHECK(std::abs(ber_slope(rayleigh(1.0), Detection::noncoherent, 1.0) - 1.0) < 0.05);
    CHECK(std::abs(ber_slope(nakagami(3, 1.0), Detection::noncoherent, 1.0) - 3.0) < 0.05);
    CHECK(std::abs(ber_slope(nakagami(3, 1.0), Detection::coherent, 1.0) - 3.0) < 0.05);
    CHECK(std::abs(ber_slope(ostbc, Detection::noncoherent, 1.0) - 4.0) < 0.05);
    CHECK(std::abs(ber_slope(ostbc, Detection::coherent, 1.0) - 4.0) < 0.05);
    const MEDist osc = normalize_mean(oscillatory_example());
    CHECK(diversity_gain(osc, Detection::coherent) == 3);
    CHECK(std::abs(ber_slope(osc, Detection::noncoherent, 1.0) - 3.0) < 0.05);
}

TEST_CASE("Lambert W") {
    for (double v : {-std::exp(-1.0) + 1e-9, -0.3, -0.1, -1e-6, 0.0, 1e-3, 0.5, 1.0, 10.0, 1e6})
        CHECK(std::abs(lambert_w0(v) - boost::math::lambert_w0(v)) < 1e-12 * (1.0 + std::abs(lambert_w0(v))));
    for (double v : {-0.35, -0.2, -0.05})
        CHECK(std::abs(lambert_w0(v) - oracle::lambert_w0_bisect(v)) < 1e-12);
    CHECK(lambert_w0(-std::exp(-1.0)) == -1.0);
    CHECK_THROWS_AS(lambert_w0(-0.5), DomainError);
}

TEST_CASE("rate optimization") {
    ParametricModel fixed;
    fixed.f = [](double) { return 1.0; };
    fixed.g = [](double) { return 2.0; };
    const OptimumRow r2 = optimize_point(fixed, 1.0);
    CHECK(r2.interior);
    CHECK(std::abs(r2.r_star - (2.0 + oracle::lambert_w0_bisect(-2.0 * std::exp(-2.0)))) < 1e-12);
    CHECK(std::abs(r2.r_star - 1.5936) < 1e-4);
    fixed.g = [](double) { return 1.0; };
    const OptimumRow r1 = optimize_point(fixed, 1.0);
    CHECK_FALSE(r1.interior);
    CHECK(r1.r_star == 0.0);

    for (const MEDist& d : {rayleigh(1.0), nakagami(2, 1.0), normalize_mean(oscillatory_example())}) {
        // The oscillatory density gives a multimodal throughput curve; only stationarity is expected there.
        const bool unimodal = d.degree() <= 2;
        for (const ParametricModel& m : {arq_model(d), harq_persistent_model(d)}) {
            for (double th : {0.2, 0.5, 1.0}) {
                const double h = 1e-6 * th;
                const double gnum = m.f(th) / (th * (m.f(th + h) - m.f(th - h)) / (2.0 * h));
                CHECK(std::abs(m.g(th) - gnum) < 1e-5 * std::abs(gnum));
                const OptimumRow row = optimize_point(m, th);
                if (!row.interior || row.r_star > 20.0) continue;
                CHECK(std::abs(row.dtdr) < 1e-4 * row.t_star);
                if (!unimodal) continue;
                // Brute-force maximization over R at the emitted S.
                auto tput = [&](double r) { return r / m.f(std::expm1(r) / row.s); };
                double best = 0.0;
                for (int i = 0; i <= 4000; ++i) best = std::max(best, tput(row.r_star * (0.5 + i / 4000.0)));
                CHECK(row.t_star >= best - 1e-9);
            }
        }
    }
    const std::vector<OptimumRow> rows = optimize_rate(arq_model(rayleigh(1.0)), {0.1, 0.5, 1.0});
    CHECK(rows.size() == 3);
    CHECK(std::abs(rows[1].r_star - optimize_point(arq_model(rayleigh(1.0)), 0.5).r_star) == 0.0);
}

TEST_CASE("MIMO high-SNR outage") {
    const Matrix q = mimo_asymptotic_generator(2);
    Matrix printed = Matrix::Zero(5, 5);
    printed(0, 1) = printed(1, 1) = printed(1, 2) = printed(2, 3) = printed(3, 4) = 1.0;
    printed(2, 2) = printed(3, 3) = 2.0;
    printed(4, 4) = 3.0;
    CHECK(oracle::max_abs_diff(q, printed) == 0.0);
    CHECK(std::abs(mimo_high_snr_outage(2, 1e-12, 100.0).value) < 1e-40);
    // Partial fractions: 1/((s-1)(s-2)^2(s-3)) -> -e^u/2 - u e^{2u} + e^{3u}/2.
    for (double r : {0.5, 1.0, 2.0}) {
        const double integral = -0.5 * std::expm1(r) - (std::exp(2.0 * r) * (r / 2.0 - 0.25) + 0.25) + std::expm1(3.0 * r) / 6.0;
        const double ref = integral / std::pow(100.0, 4);
        CHECK(std::abs(mimo_high_snr_outage(2, r, 100.0).value - ref) < 1e-9 * std::abs(ref) + 1e-300);
    }
    CHECK(mimo_asymptotic_generator(3).rows() == 10);
}

TEST_CASE("throughput bounds and monotonicity") {
    for (const MEDist& d : family())
        for (double r : {0.2, 1.0, 3.0}) {
            const double th = std::expm1(r);
            for (double t : {arq_throughput(d, r, th).value, harq_truncated_throughput(d, r, 3, th).value,
                             harq_persistent_throughput(d, r, th).value}) {
                CHECK(t >= 0.0);
                CHECK(t <= r + 1e-12);
            }
        }
    for (const MEDist& base : {rayleigh(1.0), nakagami(2, 1.0), oscillatory_example()}) {
        double prev = 1.0;
        for (double s = 0.1; s < 1e4; s *= 2.0) {
            const double o = outage(scale_by(base, s), 1.0).value;
            CHECK(o <= prev + 1e-14);
            prev = o;
        }
    }
}
