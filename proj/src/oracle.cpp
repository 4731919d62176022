#include "mekit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace mekit {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

constexpr int kChunks = 8;
constexpr std::size_t kMaxCells = 200000;

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Detects diag -lambda with only superdiagonal couplings, x on the first entry and z on the last.
bool erlang_pattern(const MEDist& d, double& rate) {
    const Eigen::Index n = d.degree();
    const double scale = max_abs(d.Y());
    const double lam = -d.Y()(0, 0).real();
    if (!(lam > 0.0)) return false;
    cplx prod = d.x()(0) * d.z()(n - 1);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const cplx v = d.Y()(i, j);
            if (i == j) {
                if (std::abs(v + lam) > 1e-12 * scale) return false;
            } else if (j == i + 1) {
                prod *= v;
            } else if (std::abs(v) > 1e-12 * scale) {
                return false;
            }
        }
    for (Eigen::Index i = 1; i < n; ++i)
        if (std::abs(d.x()(i)) > 0.0) return false;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (std::abs(d.z()(i)) > 0.0) return false;
    if (std::abs(prod.imag()) > 1e-9 * std::abs(prod) || !near(prod.real(), std::pow(lam, static_cast<double>(n)), 1e-9))
        return false;
    rate = lam;
    return true;
}

} // namespace

Sampler::Sampler(const MEDist& d) : d_(d) {
    const Eigen::Index n = d.degree();
    if (erlang_pattern(d, rate_)) {
        shape_ = static_cast<int>(n);
        kind_ = n == 1 ? Kind::exponential : Kind::erlang;
        return;
    }
    const Vector w = solve(d.Y(), d.z(), "Y");
    double t_end = decay_horizon(d);
    for (int i = 0; i < 60 && 1.0 - cdf(d, t_end) > 1e-12; ++i) t_end *= 2.0;
    const double norm = d.Y().cwiseAbs().colwise().sum().maxCoeff();
    double h = std::min(t_end / 4096.0, 0.5 / norm);
    std::size_t cells = static_cast<std::size_t>(std::ceil(t_end / h));
    if (cells > kMaxCells) cells = kMaxCells;
    h = t_end / static_cast<double>(cells);
    const double x = h * norm;
    terms_ = 1;
    double bound = 1.0;
    while (terms_ < 80) {
        bound *= x / terms_;
        ++terms_;
        if (bound < 1e-18) break;
    }
    if (bound >= 1e-18) throw DomainError("sampler: generator too stiff for the cdf grid");
    h_ = h;
    std::vector<Vector> powers(static_cast<std::size_t>(terms_));
    powers[0] = w;
    double fact = 1.0;
    for (int j = 1; j < terms_; ++j) {
        fact *= j;
        powers[static_cast<std::size_t>(j)] = d.Y() * powers[static_cast<std::size_t>(j - 1)];
    }
    const Matrix step = expm(h * d.Y());
    RowVector row = d.x();
    grid_cdf_.resize(cells + 1);
    coef_.resize((cells + 1) * static_cast<std::size_t>(terms_));
    for (std::size_t k = 0; k <= cells; ++k) {
        double f = 1.0;
        for (int j = 0; j < terms_; ++j) {
            if (j > 0) f *= j;
            coef_[k * static_cast<std::size_t>(terms_) + static_cast<std::size_t>(j)] =
                (row * powers[static_cast<std::size_t>(j)])(0, 0).real() / f;
        }
        grid_cdf_[k] = 1.0 + coef_[k * static_cast<std::size_t>(terms_)];
        if (k > 0 && grid_cdf_[k] < grid_cdf_[k - 1] - 1e-9)
            throw DomainError("sampler: cdf is not monotone; the distribution is not valid");
        row = row * step;
    }
}

std::string Sampler::method() const {
    switch (kind_) {
    case Kind::exponential: return "exponential";
    case Kind::erlang: return "erlang";
    case Kind::grid: return "grid";
    }
    return "grid";
}

double Sampler::invert_tail(double u) const {
    double lo = h_ * static_cast<double>(grid_cdf_.size() - 1), hi = 2.0 * lo;
    while (cdf(d_, hi) < u) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) return hi;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(d_, mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double Sampler::invert(double u) const {
    if (kind_ == Kind::exponential) return -std::log1p(-u) / rate_;
    if (kind_ == Kind::erlang) {
        // Bisection on the Erlang cdf.
        auto f = [&](double t) {
            double term = 1.0, sum = 1.0;
            for (int i = 1; i < shape_; ++i) {
                term *= rate_ * t / i;
                sum += term;
            }
            return 1.0 - std::exp(-rate_ * t) * sum;
        };
        double lo = 0.0, hi = shape_ / rate_;
        while (f(hi) < u) hi *= 2.0;
        for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (f(mid) < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    if (u <= grid_cdf_.front()) return 0.0;
    if (u >= grid_cdf_.back()) return invert_tail(u);
    const auto it = std::upper_bound(grid_cdf_.begin(), grid_cdf_.end(), u);
    const std::size_t k = static_cast<std::size_t>(it - grid_cdf_.begin()) - 1;
    const double* c = &coef_[k * static_cast<std::size_t>(terms_)];
    auto eval = [&](double delta, double& deriv) {
        double v = c[terms_ - 1], dv = 0.0;
        for (int j = terms_ - 2; j >= 0; --j) {
            dv = dv * delta + v;
            v = v * delta + c[j];
        }
        deriv = dv;
        return 1.0 + v;
    };
    double lo = 0.0, hi = h_;
    const double span = grid_cdf_[k + 1] - grid_cdf_[k];
    double delta = span > 0.0 ? h_ * (u - grid_cdf_[k]) / span : 0.5 * h_;
    for (int i = 0; i < 100; ++i) {
        double deriv = 0.0;
        const double g = eval(delta, deriv) - u;
        if (std::abs(g) <= 1e-15) break;
        (g < 0.0 ? lo : hi) = delta;
        double next = deriv > 0.0 ? delta - g / deriv : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - delta) <= 1e-15 * (static_cast<double>(k) * h_ + h_)) {
            delta = next;
            break;
        }
        delta = next;
    }
    return static_cast<double>(k) * h_ + delta;
}

double Sampler::operator()(std::mt19937_64& rng) const {
    if (kind_ == Kind::exponential) return std::exponential_distribution<double>(rate_)(rng);
    if (kind_ == Kind::erlang) return std::gamma_distribution<double>(shape_, 1.0 / rate_)(rng);
    double u;
    do {
        u = std::generate_canonical<double, 53>(rng);
    } while (u <= 0.0);
    return invert(u);
}

namespace {

std::mt19937_64 chunk_rng(std::uint64_t seed, int chunk) {
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(chunk) + 1))),
                      static_cast<std::uint32_t>(splitmix64(seed + 0x1234567ULL * static_cast<std::uint64_t>(chunk + 1)) >> 32),
                      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chunk)};
    return std::mt19937_64(seq);
}

std::int64_t chunk_size(std::int64_t n, int chunk) {
    return n / kChunks + (chunk < n % kChunks ? 1 : 0);
}

// Runs body(chunk, rng, count) for each chunk on its own thread.
template <class Body>
void run_chunks(const RngConfig& cfg, Body&& body) {
    if (cfg.n < 1) throw DomainError("sample count n must be >= 1");
    std::vector<std::thread> threads;
    std::exception_ptr err;
    std::mutex m;
    for (int c = 0; c < kChunks; ++c) {
        threads.emplace_back([&, c] {
            try {
                std::mt19937_64 rng = chunk_rng(cfg.seed, c);
                body(c, rng, chunk_size(cfg.n, c));
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (err) std::rethrow_exception(err);
}

// Sums for ratio estimators sum(a)/sum(b).
struct Acc {
    double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    void add(double a, double b = 1.0) {
        n += 1;
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    void merge(const Acc& o) {
        n += o.n;
        sa += o.sa;
        sb += o.sb;
        saa += o.saa;
        sbb += o.sbb;
        sab += o.sab;
    }
    // Ratio estimate with delta-method standard error.
    McEstimate ratio() const {
        McEstimate e;
        e.n = static_cast<std::int64_t>(n);
        const double ma = sa / n, mb = sb / n, q = ma / mb;
        const double vaa = saa / n - ma * ma, vbb = sbb / n - mb * mb, vab = sab / n - ma * mb;
        const double var = (vaa - 2.0 * q * vab + q * q * vbb) / (mb * mb);
        e.value = q;
        e.stderr_ = std::sqrt(std::max(var, 0.0) / n);
        return e;
    }
};

template <class Body>
McEstimate accumulate(const RngConfig& cfg, Body&& body) {
    std::vector<Acc> accs(kChunks);
    run_chunks(cfg, [&](int c, std::mt19937_64& rng, std::int64_t count) {
        Acc& a = accs[static_cast<std::size_t>(c)];
        for (std::int64_t i = 0; i < count; ++i) body(rng, a);
    });
    Acc total;
    for (const Acc& a : accs) total.merge(a);
    return total.ratio();
}

const MEDist& need_channel(const McScenario& s) {
    if (!s.channel) throw PreconditionError("Monte Carlo scenario needs a channel");
    return *s.channel;
}

double gauss(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::complex<double> cgauss(std::mt19937_64& rng) {
    const double s = std::sqrt(0.5);
    return {s * gauss(rng), s * gauss(rng)};
}

double uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

} // namespace

std::vector<double> sample(const MEDist& d, const RngConfig& cfg) {
    const Sampler s(d);
    std::vector<std::vector<double>> parts(kChunks);
    run_chunks(cfg, [&](int c, std::mt19937_64& rng, std::int64_t count) {
        auto& p = parts[static_cast<std::size_t>(c)];
        p.reserve(static_cast<std::size_t>(count));
        for (std::int64_t i = 0; i < count; ++i) p.push_back(s(rng));
    });
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(cfg.n));
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf_fn) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf_fn(samples[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return d;
}

std::string to_string(McKind k) {
    switch (k) {
    case McKind::outage: return "outage";
    case McKind::arq: return "arq";
    case McKind::harq_truncated: return "harq_truncated";
    case McKind::harq_persistent: return "harq_persistent";
    case McKind::ncbr: return "ncbr";
    case McKind::arq_interference: return "arq_interference";
    case McKind::ber_noncoherent: return "ber_noncoherent";
    case McKind::ber_coherent: return "ber_coherent";
    case McKind::pep: return "pep";
    case McKind::eff_capacity_rate: return "eff_capacity_rate";
    case McKind::eff_capacity_shannon: return "eff_capacity_shannon";
    case McKind::sm_mimo_outage: return "sm_mimo_outage";
    }
    return "outage";
}

std::vector<McKind> all_mc_kinds() {
    return {McKind::outage,           McKind::arq,           McKind::harq_truncated,  McKind::harq_persistent,
            McKind::ncbr,             McKind::arq_interference, McKind::ber_noncoherent, McKind::ber_coherent,
            McKind::pep,              McKind::eff_capacity_rate, McKind::eff_capacity_shannon, McKind::sm_mimo_outage};
}

McKind mc_kind_from_string(const std::string& s) {
    for (McKind k : all_mc_kinds())
        if (to_string(k) == s) return k;
    throw DomainError("unknown Monte Carlo kind '" + s + "'");
}

McEstimate mc_metric(McKind kind, const McScenario& scn, const RngConfig& cfg) {
    switch (kind) {
    case McKind::outage: {
        const Sampler s(need_channel(scn));
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) { a.add(s(rng) <= scn.theta ? 1.0 : 0.0); });
    }
    case McKind::arq: {
        const Sampler s(need_channel(scn));
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) { a.add(s(rng) > scn.theta ? scn.r : 0.0); });
    }
    case McKind::harq_truncated:
    case McKind::harq_persistent: {
        const Sampler s(need_channel(scn));
        const bool persistent = kind == McKind::harq_persistent;
        if (!persistent && scn.k < 1) throw DomainError("K must be >= 1");
        // One packet per draw: a = R on success, b = transmissions used.
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) {
            double acc = 0.0;
            int tx = 0;
            bool ok = false;
            while (persistent || tx < scn.k) {
                acc += s(rng);
                ++tx;
                if (acc > scn.theta) {
                    ok = true;
                    break;
                }
                if (tx > 100000000) break;
            }
            a.add(ok ? scn.r : 0.0, tx);
        });
    }
    case McKind::ncbr: {
        if (!scn.ncbr) throw PreconditionError("NCBR Monte Carlo needs four links");
        const Sampler s13(scn.ncbr->l13), s32(scn.ncbr->l32), s23(scn.ncbr->l23), s31(scn.ncbr->l31);
        const double t12 = theta_absolute(scn.r12), t21 = theta_absolute(scn.r21);
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) {
            const bool ok12 = s13(rng) > t12 && s32(rng) > t12;
            const bool ok21 = s23(rng) > t21 && s31(rng) > t21;
            a.add(((ok12 ? scn.r12 : 0.0) + (ok21 ? scn.r21 : 0.0)) / 3.0);
        });
    }
    case McKind::arq_interference: {
        const Sampler s(need_channel(scn));
        std::vector<Sampler> si;
        for (const MEDist& d : scn.interferers) si.emplace_back(d);
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) {
            const double z = s(rng);
            double zi = 0.0;
            for (const Sampler& x : si) zi += x(rng);
            a.add(z > scn.theta * (1.0 + zi) ? scn.r : 0.0);
        });
    }
    case McKind::ber_noncoherent: {
        const Sampler s(need_channel(scn));
        const int model = scn.a == 1.0 ? 1 : (scn.a == 0.5 ? 2 : 0);
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) {
            const double z = s(rng);
            bool err;
            if (model == 1) {
                // DBPSK: two consecutive symbols through the same fade and an unknown phase.
                const double phi = 2.0 * std::numbers::pi * uniform(rng);
                const std::complex<double> g = std::polar(std::sqrt(z), phi);
                const double b = uniform(rng) < 0.5 ? -1.0 : 1.0;
                const std::complex<double> r1 = g + cgauss(rng), r2 = b * g + cgauss(rng);
                err = (std::real(r2 * std::conj(r1)) > 0.0 ? 1.0 : -1.0) != b;
            } else if (model == 2) {
                // Orthogonal binary FSK with energy detection.
                const std::complex<double> g = std::polar(std::sqrt(z), 2.0 * std::numbers::pi * uniform(rng));
                err = std::norm(cgauss(rng)) > std::norm(g + cgauss(rng));
            } else {
                err = uniform(rng) < 0.5 * std::exp(-scn.a * z);
            }
            a.add(err ? 1.0 : 0.0);
        });
    }
    case McKind::ber_coherent: {
        const Sampler s(need_channel(scn));
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) {
            const double z = s(rng);
            a.add(gauss(rng) > std::sqrt(2.0 * scn.a * z) ? 1.0 : 0.0);
        });
    }
    case McKind::pep: {
        if (scn.pep.empty()) throw PreconditionError("PEP Monte Carlo needs at least one branch");
        std::vector<Sampler> ss;
        for (const PepBranch& b : scn.pep) ss.emplace_back(b.dist);
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) {
            double e = 0.0;
            for (std::size_t i = 0; i < ss.size(); ++i) e += scn.pep[i].a * ss[i](rng);
            a.add(gauss(rng) > std::sqrt(2.0 * e) ? 1.0 : 0.0);
        });
    }
    case McKind::eff_capacity_rate:
    case McKind::eff_capacity_shannon: {
        if (!(scn.qos > 0.0)) throw DomainError("effective capacity: theta must be positive");
        const Sampler s(need_channel(scn));
        const bool shannon = kind == McKind::eff_capacity_shannon;
        McEstimate m = accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) {
            const double z = s(rng);
            a.add(shannon ? std::pow(1.0 + z, -scn.qos) : std::exp(-scn.qos * z));
        });
        McEstimate out;
        out.n = m.n;
        out.value = -std::log(m.value) / scn.qos;
        out.stderr_ = m.stderr_ / (m.value * scn.qos);
        return out;
    }
    case McKind::sm_mimo_outage: {
        const double bound = std::exp(scn.r);
        return accumulate(cfg, [&](std::mt19937_64& rng, Acc& a) {
            Eigen::Matrix2cd h;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) h(i, j) = cgauss(rng);
            const Eigen::Matrix2cd g = Eigen::Matrix2cd::Identity() + h.adjoint() * h;
            a.add(g.determinant().real() <= bound ? 1.0 : 0.0);
        });
    }
    }
    throw DomainError("unknown Monte Carlo kind");
}

std::vector<double> numeric_convolve(const MEDist& d1, const MEDist& d2, double step, std::size_t count) {
    if (!(step > 0.0)) throw DomainError("numeric_convolve: step must be positive");
    std::vector<double> f1(count), f2(count), out(count, 0.0);
    const Matrix e1 = expm(step * d1.Y()), e2 = expm(step * d2.Y());
    RowVector r1 = d1.x(), r2 = d2.x();
    for (std::size_t i = 0; i < count; ++i) {
        f1[i] = (r1 * d1.z())(0, 0).real();
        f2[i] = (r2 * d2.z())(0, 0).real();
        r1 = r1 * e1;
        r2 = r2 * e2;
    }
    for (std::size_t i = 1; i < count; ++i) {
        double s = 0.5 * (f1[0] * f2[i] + f1[i] * f2[0]);
        for (std::size_t j = 1; j < i; ++j) s += f1[j] * f2[i - j];
        out[i] = s * step;
    }
    return out;
}

} // namespace mekit
