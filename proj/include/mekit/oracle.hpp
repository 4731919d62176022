#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mekit/bivariate.hpp"
#include "mekit/medist.hpp"
#include "mekit/metrics.hpp"

namespace mekit {

struct RngConfig {
    std::uint64_t seed = 42;
    std::int64_t n = 1000000;
};

// SplitMix64 step, used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Inverse-cdf sampler. Exponential and Erlang patterns use direct samplers; everything else
// inverts the cdf on a precomputed grid of local Taylor expansions of x e^{tY} Y^{-1} z.
class Sampler {
public:
    explicit Sampler(const MEDist& d);
    double operator()(std::mt19937_64& rng) const;
    // Inverse cdf at probability u in (0, 1).
    double invert(double u) const;
    std::string method() const;

private:
    enum class Kind { exponential, erlang, grid };
    double invert_tail(double u) const;

    MEDist d_;
    Kind kind_ = Kind::grid;
    double rate_ = 0.0;
    int shape_ = 1;
    double h_ = 0.0;
    int terms_ = 0;
    std::vector<double> grid_cdf_;
    std::vector<double> coef_; // cell k, term j at k * terms_ + j: r_k Y^j Y^{-1} z / j!
};

std::vector<double> sample(const MEDist& d, const RngConfig& cfg);
// Kolmogorov-Smirnov statistic of the samples against a cdf.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

enum class McKind {
    outage,
    arq,
    harq_truncated,
    harq_persistent,
    ncbr,
    arq_interference,
    ber_noncoherent,
    ber_coherent,
    pep,
    eff_capacity_rate,
    eff_capacity_shannon,
    sm_mimo_outage
};
std::string to_string(McKind k);
McKind mc_kind_from_string(const std::string& s);
std::vector<McKind> all_mc_kinds();

// Physical scenario; thresholds are absolute (Theta = e^R - 1 on the channel as given).
struct McScenario {
    std::optional<MEDist> channel;
    double r = 1.0;
    double theta = 0.0;
    int k = 1;
    double a = 1.0;
    double qos = 1.0; // effective-capacity exponent
    std::vector<MEDist> interferers;
    std::optional<NcbrLinks> ncbr;
    double r12 = 1.0;
    double r21 = 1.0;
    std::vector<PepBranch> pep;
};

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::int64_t n = 0;
};
McEstimate mc_metric(McKind kind, const McScenario& scn, const RngConfig& cfg);

// Trapezoid-rule convolution of the two densities on t_i = i * step, i = 0..count-1.
std::vector<double> numeric_convolve(const MEDist& d1, const MEDist& d2, double step, std::size_t count);

} // namespace mekit
