#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mekit/medist.hpp"

namespace mekit {

enum class PathTag { closed_form, quadrature, eigen, sylvester, kron, vanloan };
std::string to_string(PathTag p);

struct Diagnostics {
    double imag_residual = 0.0;
    double quad_error = 0.0;
    std::vector<std::string> notes;
};

struct MetricResult {
    double value = 0.0;
    PathTag path = PathTag::closed_form;
    Diagnostics diag;
};

// Decoding threshold conventions. Absolute: Theta = e^R - 1 applied to the
// channel as given. Per unit mean: Theta = (e^R - 1)/S applied to a unit-mean channel.
enum class ThetaConvention { absolute, per_unit_mean };
double theta_absolute(double r);
double theta_unit_mean(double r, double s);
double theta_from_rate(double r, double s, ThetaConvention conv);

// P(Z <= Theta).
MetricResult outage(const MEDist& d, double theta);
// C with outage(d, e^C - 1) = q_target.
double outage_capacity(const MEDist& d, double q_target);

enum class ArqPath { augmented, inverse };
MetricResult arq_throughput(const MEDist& d, double r, double theta, ArqPath path = ArqPath::augmented);

struct HarqRenewal {
    std::vector<double> partial_cdfs; // P(Z_1 + ... + Z_k <= Theta), k = 1..K
    double success_probability = 0.0;
    double mean_transmissions = 0.0;
};
HarqRenewal harq_renewal(const MEDist& d, int k, double theta);
MetricResult harq_truncated_throughput(const MEDist& d, double r, int k, double theta);

// Persistent HARQ on the generator [[0, x], [0, Y + z x]] (companion form S - r(q - p)).
MetricResult harq_persistent_throughput(const MEDist& d, double r, double theta);
// Same on the literal companion form built from the rational transform.
MetricResult harq_persistent_throughput(const RationalLT& lt, double r, double theta);
// Expected number of transmissions 1 + E under persistent HARQ.
double harq_persistent_mean_transmissions(const MEDist& d, double theta);
// Channel (base)^N accumulated over N-fold diversity, using complex roots-of-unity blocks.
MetricResult harq_persistent_diversity(const MEDist& base, int n, double r, double theta);
// N = 2 real block form with diagonal blocks S - r(q - p) and S - r(q + p).
MetricResult harq_persistent_diversity2(const RationalLT& base, double r, double theta);
// Frequency-shift form for F(s) = 1/(1+s)^n.
MetricResult harq_persistent_erlang(int n, double r, double theta);

struct NcbrLinks {
    MEDist l13, l32, l23, l31;
};
// Outage of a two-hop direction: 1 - (1 - E_a)(1 - E_b).
double ncbr_direction_outage(const MEDist& a, const MEDist& b, double theta);
MetricResult ncbr_throughput(const NcbrLinks& links, double r12, double r21);

// Effective capacity with an ME-distributed service rate.
MetricResult eff_capacity_me_rate(const MEDist& d, double theta);

enum class EffCapPath { automatic, quadrature, eigen };
// Effective capacity when the service rate is ln(1 + Z) with Z ME-distributed.
MetricResult eff_capacity_shannon(const MEDist& d, double theta, EffCapPath path = EffCapPath::automatic);
// xi(lambda) = (-lambda)^{theta-1} e^{-lambda} Gamma(1-theta, -lambda) for real lambda < 0, theta in (0, 1].
double eff_capacity_xi(double lambda, double theta);
// E[ln(1+Z)] from the small-theta limit with Richardson extrapolation.
MetricResult ergodic_capacity(const MEDist& d);

MetricResult ber_noncoherent(const MEDist& d, double a);
enum class BerPath { automatic, closed_form, quadrature };
MetricResult ber_coherent(const MEDist& d, double a, BerPath path = BerPath::automatic);
// Oracle form: integral of Q(sqrt(2 a z)) pdf(z).
MetricResult ber_coherent_direct(const MEDist& d, double a);

struct PepBranch {
    MEDist dist;
    double a;
};
MetricResult pep(const std::vector<PepBranch>& branches);

enum class Detection { noncoherent, coherent };
// Smallest k with x Y^{k-1} z != 0; equals deg q - deg p for a minimal realization.
int relative_degree(const MEDist& d);
int diversity_gain(const MEDist& d_um, Detection det);
// Slope of -ln BER against ln S between s1 and s2 for the unit-mean channel scaled to mean S.
double ber_slope(const MEDist& d_um, Detection det, double a, double s1 = 1e3, double s2 = 1e5);

// Principal branch of the Lambert W function on [-1/e, inf).
double lambert_w0(double v);

// Throughput model T = R / f(Theta), Theta = (e^R - 1)/S, with g = f / (Theta f').
struct ParametricModel {
    std::function<double(double)> f;
    std::function<double(double)> g;
};
ParametricModel arq_model(const MEDist& d_um);
ParametricModel harq_persistent_model(const MEDist& d_um);

struct OptimumRow {
    double theta = 0.0;
    double g = 0.0;
    bool interior = false;
    double r_star = 0.0;
    double t_star = 0.0;
    double s = 0.0;
    double dtdr = 0.0; // central-difference derivative at (R*, S)
    std::string note;
};
OptimumRow optimize_point(const ParametricModel& m, double theta);
std::vector<OptimumRow> optimize_rate(const ParametricModel& m, const std::vector<double>& thetas);

// Asymptotic generator for N x N MIMO outage (first row e_2, bidiagonal chain of poles).
Matrix mimo_asymptotic_generator(int n);
MetricResult mimo_high_snr_outage(int n, double r, double t);

} // namespace mekit
