#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mekit/json_io.hpp"
#include "mekit/medist.hpp"

namespace mekit {

struct AlgebraOptions {
    // Lifts the degree guard for a single call.
    bool allow_large_degree = false;
};

// Degree guard; ME_KIT_MAX_DEGREE overrides the default of 4096.
std::size_t max_degree();
void check_degree(Eigen::Index d, const AlgebraOptions& opts, const char* op);

// Distribution of the sum of two independent ME variables.
MEDist convolve(const MEDist& d1, const MEDist& d2, const AlgebraOptions& opts = {});

// Stacked generator for the K-fold self convolution. One exponential gives
// the cdfs of all partial sums Z_1 + ... + Z_k, k = 1..K.
class KFoldBlock {
public:
    KFoldBlock(const MEDist& d, int k, const AlgebraOptions& opts = {});

    // Q^I = [[0, x 0 ... 0], [0, Q_K]] with Q_K block bidiagonal (Y on the diagonal, z x above it).
    const Matrix& generator() const { return gen_; }
    int K() const { return k_; }
    Eigen::Index block_degree() const { return d_; }

    Matrix exponential(double theta) const;
    // cdf of the k-fold sum at theta for k = 1..K, in order.
    std::vector<double> partial_cdfs(double theta) const;
    // Same values read from an already computed exponential.
    std::vector<double> partial_cdfs_from(const Matrix& e) const;

private:
    Matrix gen_;
    Vector z_;
    Eigen::Index d_;
    int k_;
};

enum class OrderPath {
    product, // product of the individual augmented cdfs
    kron     // one exponential of the Kronecker sum of augmented generators
};

double max_cdf(const MEDist& d1, const MEDist& d2, double t, OrderPath path = OrderPath::product);
double min_cdf(const MEDist& d1, const MEDist& d2, double t, OrderPath path = OrderPath::product);
// Closed triples for max and min; both need nonsingular Y1 and Y2.
MEDist max_closure(const MEDist& d1, const MEDist& d2, const AlgebraOptions& opts = {});
MEDist min_closure(const MEDist& d1, const MEDist& d2, const AlgebraOptions& opts = {});

struct ProvNode {
    std::string label;
    std::vector<std::shared_ptr<const ProvNode>> children;
};

struct EffectiveChannel {
    MEDist dist;
    std::shared_ptr<const ProvNode> provenance;

    std::string explain() const;
    nlohmann::json provenance_json() const;
};

EffectiveChannel leaf_channel(const MEDist& d, std::string label);
EffectiveChannel sum_channels(const EffectiveChannel& a, const EffectiveChannel& b, const AlgebraOptions& opts = {});
EffectiveChannel max_channels(const EffectiveChannel& a, const EffectiveChannel& b, const AlgebraOptions& opts = {});
EffectiveChannel min_channels(const EffectiveChannel& a, const EffectiveChannel& b, const AlgebraOptions& opts = {});
EffectiveChannel scaled_channel(const EffectiveChannel& a, double s);

// Builds the ME triple for a declarative channel description.
EffectiveChannel standard_channel(const ChannelSpec& spec, const AlgebraOptions& opts = {});
// Same as standard_channel but skips the rational-transform validity checks so
// that invalid input can be reported instead of rejected.
EffectiveChannel standard_channel_unchecked(const ChannelSpec& spec, const AlgebraOptions& opts = {});

// Individual constructors (S is the mean SNR unless stated otherwise).
MEDist rayleigh(double s);
MEDist nakagami(int m, double s);
// Selection combining over N iid branches of per-branch mean S: F(s) = N! / prod (n + sS).
MEDist sdc(int n, double s);
// F(s) = 1 / (1 + sS/(R_stc N_tx))^(N_tx N_rx)
MEDist ostbc_mrc(int n_tx, int n_rx, double r_stc, double s);
// F(s) = 1 / (1 + sS)^exponent
MEDist zf_mimo(int exponent, double s);
// Example density (1 + 1/49)(1 - cos 7t) e^{-t}: F(s) = 50 / (s^3 + 3s^2 + 52s + 50).
MEDist oscillatory_example();

} // namespace mekit
