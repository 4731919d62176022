#include "mekit/algebra.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace mekit {

using nlohmann::json;

std::size_t max_degree() {
    constexpr std::size_t kDefault = 4096;
    const char* env = std::getenv("ME_KIT_MAX_DEGREE");
    if (!env || !*env) return kDefault;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) return kDefault;
    return static_cast<std::size_t>(v);
}

void check_degree(Eigen::Index d, const AlgebraOptions& opts, const char* op) {
    if (opts.allow_large_degree) return;
    const std::size_t lim = max_degree();
    if (static_cast<std::size_t>(d) > lim) {
        std::ostringstream os;
        os << op << ": result degree " << d << " exceeds the limit " << lim
           << " (set ME_KIT_MAX_DEGREE or pass allow_large_degree)";
        throw DegreeLimitError(os.str());
    }
}

MEDist convolve(const MEDist& d1, const MEDist& d2, const AlgebraOptions& opts) {
    const Eigen::Index n1 = d1.degree(), n2 = d2.degree();
    check_degree(n1 + n2, opts, "convolve");
    RowVector x = RowVector::Zero(n1 + n2);
    x.head(n1) = d1.x();
    Matrix y = Matrix::Zero(n1 + n2, n1 + n2);
    y.topLeftCorner(n1, n1) = d1.Y();
    y.topRightCorner(n1, n2) = d1.z() * d2.x();
    y.bottomRightCorner(n2, n2) = d2.Y();
    Vector z = Vector::Zero(n1 + n2);
    z.tail(n2) = d2.z();
    return MEDist(x, y, z);
}

KFoldBlock::KFoldBlock(const MEDist& d, int k, const AlgebraOptions& opts) : z_(d.z()), d_(d.degree()), k_(k) {
    if (k < 1) throw DomainError("kfold_block: K must be >= 1");
    check_degree(d_ * k, opts, "kfold_block");
    const Eigen::Index n = d_ * k + 1;
    gen_ = Matrix::Zero(n, n);
    gen_.block(0, 1, 1, d_) = d.x();
    const Matrix coupling = d.z() * d.x();
    for (int j = 0; j < k; ++j) {
        const Eigen::Index off = 1 + j * d_;
        gen_.block(off, off, d_, d_) = d.Y();
        if (j + 1 < k) gen_.block(off, off + d_, d_, d_) = coupling;
    }
}

Matrix KFoldBlock::exponential(double theta) const {
    if (!(theta >= 0.0)) throw DomainError("kfold_block: theta must be >= 0");
    return expm(theta * gen_);
}

std::vector<double> KFoldBlock::partial_cdfs_from(const Matrix& e) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k_));
    for (int j = 0; j < k_; ++j) {
        const cplx v = (e.block(0, 1 + j * d_, 1, d_) * z_)(0, 0);
        out.push_back(assert_real(v, 1.0, 1e-8, "partial cdf"));
    }
    return out;
}

std::vector<double> KFoldBlock::partial_cdfs(double theta) const { return partial_cdfs_from(exponential(theta)); }

namespace {

Vector aug_z(const MEDist& d) {
    Vector c = Vector::Zero(d.degree() + 1);
    c.tail(d.degree()) = d.z();
    return c;
}

// E1, E2 and E1*E2 from one exponential of the Kronecker sum.
void kron_cdfs(const MEDist& d1, const MEDist& d2, double t, double& e1, double& e2, double& e12) {
    const Matrix a = augmented_generator(d1), b = augmented_generator(d2);
    const Matrix e = expm(t * kron_sum(a, b));
    const Vector c1 = aug_z(d1), c2 = aug_z(d2);
    Vector u1 = Vector::Zero(c2.size());
    u1(0) = 1.0;
    Vector u2 = Vector::Zero(c1.size());
    u2(0) = 1.0;
    const Matrix row = e.row(0);
    e12 = assert_real((row * kron(c1, c2))(0, 0), 1.0, 1e-8, "max cdf");
    e1 = assert_real((row * kron(c1, u1))(0, 0), 1.0, 1e-8, "cdf");
    e2 = assert_real((row * kron(u2, c2))(0, 0), 1.0, 1e-8, "cdf");
}

} // namespace

double max_cdf(const MEDist& d1, const MEDist& d2, double t, OrderPath path) {
    if (!(t >= 0.0)) throw DomainError("max_cdf: t must be >= 0");
    if (path == OrderPath::kron) {
        double e1, e2, e12;
        kron_cdfs(d1, d2, t, e1, e2, e12);
        return e12;
    }
    return cdf(d1, t) * cdf(d2, t);
}

double min_cdf(const MEDist& d1, const MEDist& d2, double t, OrderPath path) {
    if (!(t >= 0.0)) throw DomainError("min_cdf: t must be >= 0");
    if (path == OrderPath::kron) {
        double e1, e2, e12;
        kron_cdfs(d1, d2, t, e1, e2, e12);
        return e1 + e2 - e12;
    }
    return 1.0 - (1.0 - cdf(d1, t)) * (1.0 - cdf(d2, t));
}

MEDist max_closure(const MEDist& d1, const MEDist& d2, const AlgebraOptions& opts) {
    const Eigen::Index n1 = d1.degree(), n2 = d2.degree(), nk = n1 * n2;
    check_degree(nk + n1 + n2, opts, "max_closure");
    const Matrix y1i = inverse(d1.Y(), "Y1"), y2i = inverse(d2.Y(), "Y2");
    RowVector x(nk + n1 + n2);
    x << kron(d1.x(), d2.x()), d1.x(), d2.x();
    Matrix y = Matrix::Zero(nk + n1 + n2, nk + n1 + n2);
    y.block(0, 0, nk, nk) = kron_sum(d1.Y(), d2.Y());
    y.block(nk, nk, n1, n1) = d1.Y();
    y.block(nk + n1, nk + n1, n2, n2) = d2.Y();
    Vector z(nk + n1 + n2);
    z << kron_sum(y1i, y2i) * kron(d1.z(), d2.z()), d1.z(), d2.z();
    return MEDist(x, y, z);
}

MEDist min_closure(const MEDist& d1, const MEDist& d2, const AlgebraOptions& opts) {
    check_degree(d1.degree() * d2.degree(), opts, "min_closure");
    const Matrix y1i = inverse(d1.Y(), "Y1"), y2i = inverse(d2.Y(), "Y2");
    return MEDist(kron(d1.x(), d2.x()), kron_sum(d1.Y(), d2.Y()), -kron_sum(y1i, y2i) * kron(d1.z(), d2.z()));
}

namespace {

void explain_into(const ProvNode& n, int depth, std::ostringstream& os) {
    os << std::string(static_cast<std::size_t>(2 * depth), ' ') << n.label << "\n";
    for (const auto& c : n.children) explain_into(*c, depth + 1, os);
}

json node_json(const ProvNode& n) {
    json j{{"op", n.label}};
    if (!n.children.empty()) {
        json kids = json::array();
        for (const auto& c : n.children) kids.push_back(node_json(*c));
        j["args"] = kids;
    }
    return j;
}

std::shared_ptr<const ProvNode> node(std::string label, std::vector<std::shared_ptr<const ProvNode>> kids = {}) {
    return std::make_shared<const ProvNode>(ProvNode{std::move(label), std::move(kids)});
}

std::string with_degree(const std::string& s, Eigen::Index d) { return s + " [d=" + std::to_string(d) + "]"; }

} // namespace

std::string EffectiveChannel::explain() const {
    std::ostringstream os;
    if (provenance) explain_into(*provenance, 0, os);
    return os.str();
}

json EffectiveChannel::provenance_json() const { return provenance ? node_json(*provenance) : json(); }

EffectiveChannel leaf_channel(const MEDist& d, std::string label) {
    return {d, node(with_degree(label, d.degree()))};
}

EffectiveChannel sum_channels(const EffectiveChannel& a, const EffectiveChannel& b, const AlgebraOptions& opts) {
    MEDist d = convolve(a.dist, b.dist, opts);
    return {d, node(with_degree("sum", d.degree()), {a.provenance, b.provenance})};
}

EffectiveChannel max_channels(const EffectiveChannel& a, const EffectiveChannel& b, const AlgebraOptions& opts) {
    MEDist d = max_closure(a.dist, b.dist, opts);
    return {d, node(with_degree("max", d.degree()), {a.provenance, b.provenance})};
}

EffectiveChannel min_channels(const EffectiveChannel& a, const EffectiveChannel& b, const AlgebraOptions& opts) {
    MEDist d = min_closure(a.dist, b.dist, opts);
    return {d, node(with_degree("min", d.degree()), {a.provenance, b.provenance})};
}

EffectiveChannel scaled_channel(const EffectiveChannel& a, double s) {
    std::ostringstream os;
    os.precision(17);
    os << "scale(" << s << ")";
    MEDist d = scale_by(a.dist, s);
    return {d, node(with_degree(os.str(), d.degree()), {a.provenance})};
}

MEDist rayleigh(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConstructionError("rayleigh: S must be positive");
    return from_rational_lt({{1.0 / s}, {1.0 / s}});
}

MEDist nakagami(int m, double s) {
    if (m < 1) throw ConstructionError("nakagami: m must be a positive integer");
    if (!(s > 0.0) || !std::isfinite(s)) throw ConstructionError("nakagami: S must be positive");
    const double rate = m / s;
    return from_product_form(std::vector<RationalLT>(static_cast<std::size_t>(m), RationalLT{{rate}, {rate}}));
}

MEDist sdc(int n, double s) {
    if (n < 1) throw ConstructionError("sdc: N must be a positive integer");
    if (!(s > 0.0) || !std::isfinite(s)) throw ConstructionError("sdc: S must be positive");
    Matrix q = Matrix::Zero(n, n);
    double fact = 1.0;
    for (int i = 0; i < n; ++i) {
        q(i, i) = -(i + 1.0);
        if (i + 1 < n) q(i, i + 1) = 1.0;
        fact *= (i + 1.0);
    }
    RowVector x = RowVector::Zero(n);
    x(0) = fact;
    Vector z = Vector::Zero(n);
    z(n - 1) = 1.0;
    return scale_by(MEDist(x, q, z), s);
}

MEDist ostbc_mrc(int n_tx, int n_rx, double r_stc, double s) {
    if (n_tx < 1 || n_rx < 1) throw ConstructionError("ostbc_mrc: N_tx and N_rx must be positive integers");
    if (!(r_stc > 0.0) || !(s > 0.0)) throw ConstructionError("ostbc_mrc: R_stc and S must be positive");
    const double rate = r_stc * n_tx / s;
    return from_product_form(std::vector<RationalLT>(static_cast<std::size_t>(n_tx * n_rx), RationalLT{{rate}, {rate}}));
}

MEDist zf_mimo(int exponent, double s) {
    if (exponent < 1) throw ConstructionError("zf_mimo: exponent must be a positive integer");
    if (!(s > 0.0) || !std::isfinite(s)) throw ConstructionError("zf_mimo: S must be positive");
    return from_product_form(
        std::vector<RationalLT>(static_cast<std::size_t>(exponent), RationalLT{{1.0 / s}, {1.0 / s}}));
}

MEDist oscillatory_example() { return from_rational_lt({{50.0}, {50.0, 52.0, 3.0}}); }

namespace {

double num_param(const json& p, const char* key, const std::string& kind) {
    if (!p.contains(key)) throw ConstructionError(kind + ": missing parameter '" + key + "'");
    if (!p[key].is_number()) throw ConstructionError(kind + ": parameter '" + key + "' must be a number");
    return p[key].get<double>();
}

double num_param_or(const json& p, const char* key, double dflt, const std::string& kind) {
    return p.contains(key) ? num_param(p, key, kind) : dflt;
}

double positive(const json& p, const char* key, const std::string& kind) {
    const double v = num_param(p, key, kind);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConstructionError(kind + ": parameter '" + key + "' must be positive");
    return v;
}

int positive_int(const json& p, const char* key, const std::string& kind) {
    const double v = positive(p, key, kind);
    if (v != std::floor(v) || v > 1e6)
        throw ConstructionError(kind + ": parameter '" + key + "' must be a positive integer (got " +
                                std::to_string(v) + ")");
    return static_cast<int>(v);
}

std::string label(const std::string& kind, const json& params) {
    return params.empty() ? kind : kind + " " + params.dump();
}

EffectiveChannel build(const ChannelSpec& spec, const AlgebraOptions& opts, bool checked) {
    const std::string& k = spec.kind;
    const json& p = spec.params;
    if (k == "rational_lt") {
        RationalLT lt = rational_lt_from_json(p);
        return leaf_channel(checked ? from_rational_lt(lt) : from_rational_lt_unchecked(lt), label(k, p));
    }
    if (k == "product_form") {
        if (!p.contains("factors") || !p["factors"].is_array())
            throw ConstructionError("product_form: missing array parameter 'factors'");
        std::vector<RationalLT> fs;
        for (const auto& f : p["factors"]) fs.push_back(rational_lt_from_json(f));
        return leaf_channel(from_product_form(fs), label(k, p));
    }
    if (k == "rayleigh") return leaf_channel(rayleigh(num_param_or(p, "S", 1.0, k)), label(k, p));
    if (k == "nakagami") {
        const double m = positive(p, "m", k);
        if (m != std::floor(m))
            throw ConstructionError("nakagami: non-integer m = " + std::to_string(m) +
                                    " is not ME-distributed; only positive integers are supported");
        return leaf_channel(nakagami(static_cast<int>(m), num_param_or(p, "S", 1.0, k)), label(k, p));
    }
    if (k == "sdc") return leaf_channel(sdc(positive_int(p, "N", k), num_param_or(p, "S", 1.0, k)), label(k, p));
    if (k == "ostbc_mrc")
        return leaf_channel(ostbc_mrc(positive_int(p, "N_tx", k), positive_int(p, "N_rx", k),
                                      num_param_or(p, "R_stc", 1.0, k), num_param_or(p, "S", 1.0, k)),
                            label(k, p));
    if (k == "zf_mimo") {
        const int ntx = positive_int(p, "N_tx", k), nrx = positive_int(p, "N_rx", k);
        if (nrx < ntx) throw ConstructionError("zf_mimo: requires N_rx >= N_tx");
        if (!p.contains("exponent"))
            throw ConstructionError("zf_mimo: parameter 'exponent' is required; the degrees of freedom N_rx-N_tx+1 = " +
                                    std::to_string(nrx - ntx + 1) + " and the transform exponent N_rx-N_tx = " +
                                    std::to_string(nrx - ntx) + " disagree, so the caller must choose");
        return leaf_channel(zf_mimo(positive_int(p, "exponent", k), num_param_or(p, "S", 1.0, k)), label(k, p));
    }
    if (k == "mrc_list" || k == "sum_interference") {
        const char* key = k == "mrc_list" ? "branches" : "components";
        if (!p.contains(key) || !p[key].is_array() || p[key].empty())
            throw ConstructionError(k + ": parameter '" + key + "' must be a non-empty array of channel specs");
        std::vector<EffectiveChannel> parts;
        for (const auto& c : p[key]) parts.push_back(build(channel_spec_from_json(c), opts, checked));
        EffectiveChannel acc = parts[0];
        for (std::size_t i = 1; i < parts.size(); ++i) acc = sum_channels(acc, parts[i], opts);
        return {acc.dist, node(with_degree(k, acc.dist.degree()), {acc.provenance})};
    }
    if (k == "oscillatory_ex2") return leaf_channel(oscillatory_example(), k);
    throw ConstructionError("unknown channel kind '" + k + "'");
}

} // namespace

EffectiveChannel standard_channel(const ChannelSpec& spec, const AlgebraOptions& opts) {
    return build(spec, opts, true);
}

EffectiveChannel standard_channel_unchecked(const ChannelSpec& spec, const AlgebraOptions& opts) {
    return build(spec, opts, false);
}

} // namespace mekit
