#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

#include "mekit/medist.hpp"
#include "mekit/metrics.hpp"

namespace mekit {

enum class Support {
    quadrant, // z1, z2 >= 0
    ordered   // 0 <= z1 <= z2
};

// Joint density p1 e^{z1 Q1} P12 e^{z2 Q2} r2 on the given support.
struct BivME {
    RowVector p1;
    Matrix Q1;
    Matrix P12;
    Matrix Q2;
    Vector r2;
    Support support = Support::quadrant;
};

// Throws DimensionError on inconsistent shapes.
void check_bivme(const BivME& j);

double bivme_pdf(const BivME& j, double z1, double z2);
// p1 (Q1 - s1 I)^{-1} P12 (Q2 - s2 I)^{-1} r2, the transform over the full quadrant.
cplx bivme_lt(const BivME& j, cplx s1, cplx s2);
// Integral of the density over its support.
double bivme_total_mass(const BivME& j);
// Marginal densities; these honour the support flag.
double bivme_marginal_z1(const BivME& j, double z1);
double bivme_marginal_z2(const BivME& j, double z2);
// Quadrant-support marginals as ME triples.
MEDist bivme_marginal_z1_dist(const BivME& j);
MEDist bivme_marginal_z2_dist(const BivME& j);

struct BivGridReport {
    bool nonneg = true;
    double min_value = 0.0;
    double mass = 0.0;
    bool mass_ok = true;
};
// 32 x 32 grid non-negativity check plus normalization.
BivGridReport validate_bivme(const BivME& j);

// Independent pair: P12 = z1 x2.
BivME independent_bivme(const MEDist& d1, const MEDist& d2);
// Joint density of the ordered eigenvalues of a 2x2 complex Wishart matrix.
BivME wishart2x2_bivme();

nlohmann::json to_json(const BivME& j);
BivME bivme_from_json(const nlohmann::json& j);

// Integral over [0, inf) of the product of two independent ME densities.
double integral_product_independent(const MEDist& d1, const MEDist& d2);
// Same over [0, b].
double integral_product_finite(const MEDist& d1, const MEDist& d2, double b);

struct SylvesterIntegral {
    double value = 0.0;
    Matrix X;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// x1 (int_a^b e^{t Y1} X12 e^{t Y2} dt) z2 through Y1 X + X Y2 = [e^{t Y1} X12 e^{t Y2}]_a^b; b may be infinite.
SylvesterIntegral integral_sylvester(double a, double b, const RowVector& x1, const Matrix& y1, const Matrix& x12,
                                     const Matrix& y2, const Vector& z2);
// Same integral on (0, b) through the vectorized augmented generator; b may be infinite.
double integral_vectorized(double b, const RowVector& x1, const Matrix& y1, const Matrix& x12, const Matrix& y2,
                           const Vector& z2);

struct VanLoanResult {
    double value = 0.0;
    double b = 0.0;
};
// 60 / (slowest decay rate of Y1 (+) Y2).
double vanloan_default_horizon(const Matrix& y1, const Matrix& y2);
// Block exponential of b [[-Y1, X12], [0, Y2]]; b <= 0 or NaN selects the default horizon.
VanLoanResult integral_vanloan(double b, const RowVector& x1, const Matrix& y1, const Matrix& x12, const Matrix& y2,
                               const Vector& z2);
// Merged exponent evaluation valid when Y2 commutes with X12^{-1} Y1 X12.
double integral_commuting(double b, const RowVector& x1, const Matrix& y1, const Matrix& x12, const Matrix& y2,
                          const Vector& z2);

// Signal Z with interference Z_I: either signal plus independent interferers (summed),
// or a joint density with z1 = Z_I and z2 = Z.
struct InterferenceScenario {
    std::optional<MEDist> signal;
    std::vector<MEDist> interferers;
    std::optional<BivME> joint;
};

enum class InterferencePath { automatic, kron, sylvester, vectorized, vanloan, exp_signal, exp_interference };

// P(Z > Theta (1 + Z_I)).
MetricResult arq_interference_success(const InterferenceScenario& scn, double theta,
                                      InterferencePath path = InterferencePath::automatic);
MetricResult arq_interference_throughput(const InterferenceScenario& scn, double r, double theta,
                                         InterferencePath path = InterferencePath::automatic);
// Optimization model for a unit-mean signal and a summed interferer: f = 1/P, g = -P/(Theta P').
ParametricModel arq_interference_model(const MEDist& signal_um, const MEDist& interference);
// Persistent HARQ with interference has no rational transform; always throws PreconditionError.
MetricResult harq_persistent_interference(const InterferenceScenario& scn, double r, double theta);

// Outage of 2x2 spatial multiplexing: P(ln(1+z1) + ln(1+z2) <= R) under the Wishart eigenvalue density.
MetricResult sm_mimo_2x2_outage(double r);

} // namespace mekit
