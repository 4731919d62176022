#include <doctest.h>

#include "mekit/algebra.hpp"
#include "mekit/oracle.hpp"
#include "oracles.hpp"

using namespace mekit;

namespace {

const double kE = oracle::e();

void check_z(const McEstimate& est, double closed) {
    INFO("mc=" << est.value << " se=" << est.stderr_ << " closed=" << closed);
    CHECK(est.stderr_ > 0.0);
    CHECK(std::abs(est.value - closed) < 4.0 * est.stderr_);
}

} // namespace

TEST_CASE("sampling") {
    const RngConfig cfg{42, 1000000};
    const std::vector<double> ex = sample(rayleigh(1.0), cfg);
    REQUIRE(ex.size() == 1000000);
    double m = 0.0;
    for (double v : ex) m += v;
    m /= static_cast<double>(ex.size());
    CHECK(std::abs(m - 1.0) < 3.0 / std::sqrt(1e6));
    CHECK(Sampler(rayleigh(1.0)).method() == "exponential");
    CHECK(Sampler(nakagami(3, 1.0)).method() == "erlang");
    CHECK(Sampler(oscillatory_example()).method() == "grid");

    const std::vector<double> osc = sample(oscillatory_example(), cfg);
    CHECK(ks_statistic(osc, oracle::example2_cdf) < 1.63 / std::sqrt(1e6));
    const std::vector<double> erl = sample(nakagami(3, 1.0), cfg);
    CHECK(ks_statistic(erl, [](double t) { return oracle::erlang_cdf(3, 3.0, t); }) < 1.63 / std::sqrt(1e6));
    CHECK(ks_statistic(ex, [](double t) { return 1.0 - std::exp(-t); }) < 1.63 / std::sqrt(1e6));
    const MEDist mixed = max_closure(sdc(3, 1.0), oscillatory_example());
    CHECK(ks_statistic(sample(mixed, RngConfig{7, 200000}), [&](double t) { return cdf(mixed, t); }) < 1.63 / std::sqrt(2e5));

    CHECK(sample(oscillatory_example(), cfg) == osc);
    CHECK(sample(oscillatory_example(), RngConfig{43, 1000000}) != osc);

    const Sampler s(oscillatory_example());
    for (double u : {1e-9, 0.01, 0.3, 0.5, 0.9, 0.999999})
        CHECK(std::abs(oracle::example2_cdf(s.invert(u)) - u) < 1e-10);

    // A density that turns negative has a non-monotone cdf.
    const MEDist bad(RowVector::Constant(1, 1.0) * 0.0 + [] {
        RowVector x(2);
        x << 2.0, -1.0;
        return x;
    }(), [] {
        Matrix y = Matrix::Zero(2, 2);
        y(0, 0) = -1.0;
        y(1, 1) = -0.5;
        return y;
    }(), Vector::Ones(2));
    CHECK_THROWS_AS(Sampler{bad}, DomainError);
}

TEST_CASE("Monte Carlo estimates of the stated examples") {
    const RngConfig cfg{42, 1000000};
    McScenario scn;
    scn.channel = rayleigh(1.0);
    scn.r = 1.0;
    scn.theta = kE - 1.0;
    const McEstimate out = mc_metric(McKind::outage, scn, cfg);
    check_z(out, 1.0 - std::exp(1.0 - kE));
    CHECK(out.stderr_ < 0.0004);
    check_z(mc_metric(McKind::harq_persistent, scn, cfg), 1.0 / kE);
    scn.a = 1.0;
    check_z(mc_metric(McKind::ber_noncoherent, scn, cfg), 0.25);
    const McEstimate again = mc_metric(McKind::outage, scn, cfg);
    CHECK(again.value == out.value);
    CHECK(again.stderr_ == out.stderr_);
}

TEST_CASE("Monte Carlo against every closed form") {
    const RngConfig cfg{2024, 300000};
    const MEDist ch = nakagami(2, 1.5);
    McScenario scn;
    scn.channel = ch;
    scn.r = 0.8;
    scn.theta = std::expm1(0.8);
    scn.k = 3;
    scn.a = 1.0;
    scn.qos = 0.5;
    scn.interferers = {rayleigh(0.3), rayleigh(0.2)};
    scn.ncbr = NcbrLinks{rayleigh(1.0), nakagami(2, 2.0), sdc(2, 1.0), rayleigh(3.0)};
    scn.r12 = 1.0;
    scn.r21 = 0.5;
    scn.pep = {{rayleigh(1.0), 1.0}, {nakagami(2, 0.5), 1.0}};

    const InterferenceScenario iscn{ch, scn.interferers, std::nullopt};
    check_z(mc_metric(McKind::outage, scn, cfg), outage(ch, scn.theta).value);
    check_z(mc_metric(McKind::arq, scn, cfg), arq_throughput(ch, scn.r, scn.theta).value);
    check_z(mc_metric(McKind::harq_truncated, scn, cfg), harq_truncated_throughput(ch, scn.r, 3, scn.theta).value);
    check_z(mc_metric(McKind::harq_persistent, scn, cfg), harq_persistent_throughput(ch, scn.r, scn.theta).value);
    check_z(mc_metric(McKind::ncbr, scn, cfg), ncbr_throughput(*scn.ncbr, 1.0, 0.5).value);
    check_z(mc_metric(McKind::arq_interference, scn, cfg), arq_interference_throughput(iscn, scn.r, scn.theta).value);
    check_z(mc_metric(McKind::ber_noncoherent, scn, cfg), ber_noncoherent(ch, 1.0).value);
    check_z(mc_metric(McKind::ber_coherent, scn, cfg), ber_coherent(ch, 1.0).value);
    check_z(mc_metric(McKind::pep, scn, cfg), pep(scn.pep).value);
    check_z(mc_metric(McKind::eff_capacity_rate, scn, cfg), eff_capacity_me_rate(ch, 0.5).value);
    check_z(mc_metric(McKind::eff_capacity_shannon, scn, cfg), eff_capacity_shannon(ch, 0.5).value);
    check_z(mc_metric(McKind::sm_mimo_outage, scn, cfg), sm_mimo_2x2_outage(scn.r).value);
    scn.a = 0.5;
    check_z(mc_metric(McKind::ber_noncoherent, scn, cfg), ber_noncoherent(ch, 0.5).value);
    scn.channel = oscillatory_example();
    scn.a = 1.0;
    check_z(mc_metric(McKind::harq_truncated, scn, cfg),
            harq_truncated_throughput(oscillatory_example(), scn.r, 3, scn.theta).value);
    check_z(mc_metric(McKind::ber_coherent, scn, cfg), ber_coherent(oscillatory_example(), 1.0).value);
    CHECK(all_mc_kinds().size() == 12);
    for (McKind k : all_mc_kinds()) CHECK(mc_kind_from_string(to_string(k)) == k);
}

TEST_CASE("numeric convolution") {
    const std::vector<double> g = numeric_convolve(rayleigh(1.0), rayleigh(1.0), 1e-3, 8000);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = 1e-3 * static_cast<double>(i);
        worst = std::max(worst, std::abs(g[i] - t * std::exp(-t)));
    }
    CHECK(worst < 1e-5);
    const MEDist a = oscillatory_example(), b = nakagami(3, 1.0);
    const MEDist c = convolve(a, b);
    const std::vector<double> ab = numeric_convolve(a, b, 1e-3, 8000), ba = numeric_convolve(b, a, 1e-3, 8000);
    worst = 0.0;
    for (std::size_t i = 0; i < ab.size(); ++i) {
        worst = std::max(worst, std::abs(ab[i] - pdf(c, 1e-3 * static_cast<double>(i))));
        CHECK(std::abs(ab[i] - ba[i]) < 1e-12);
    }
    CHECK(worst < 1e-5);
    // The near-delta factor needs a step well below its scale 1e-6.
    const double h = 2e-8;
    const std::vector<double> id = numeric_convolve(a, rayleigh(1e-6), h, 20000);
    for (std::size_t i = 1000; i < id.size(); i += 500) {
        const double t = h * static_cast<double>(i);
        // The smoothing lags by about the mean 1e-6 of the near-delta factor.
        CHECK(std::abs(id[i] - pdf(a, t)) <= std::abs(pdf(a, t) - pdf(a, t - 2e-6)) + 1e-12);
    }
}
