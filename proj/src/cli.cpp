#include "mekit/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mekit/algebra.hpp"
#include "mekit/bivariate.hpp"
#include "mekit/infoq.hpp"
#include "mekit/json_io.hpp"
#include "mekit/metrics.hpp"
#include "mekit/oracle.hpp"

namespace mekit {

namespace {

using ojson = nlohmann::ordered_json;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// JSON writer that prints every double with 17 significant digits.
void write_json(std::ostream& os, const ojson& j, int indent, int level) {
    const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
    const std::string pad_end(static_cast<std::size_t>(indent * level), ' ');
    switch (j.type()) {
    case ojson::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        std::size_t i = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++i) {
            os << pad << ojson(it.key()).dump() << ": ";
            write_json(os, it.value(), indent, level + 1);
            os << (i + 1 < j.size() ? ",\n" : "\n");
        }
        os << pad_end << "}";
        return;
    }
    case ojson::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            os << pad;
            write_json(os, j[i], indent, level + 1);
            os << (i + 1 < j.size() ? ",\n" : "\n");
        }
        os << pad_end << "]";
        return;
    }
    case ojson::value_t::number_float: {
        const double v = j.get<double>();
        os << (std::isfinite(v) ? fmt(v) : "null");
        return;
    }
    default: os << j.dump();
    }
}

void print_json(std::ostream& os, const ojson& j) {
    write_json(os, j, 2, 0);
    os << "\n";
}

std::string csv_field(const ojson& v) {
    if (v.is_null()) return "";
    if (v.is_number_float()) return std::isfinite(v.get<double>()) ? fmt(v.get<double>()) : "";
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    return v.dump();
}

void print_csv(std::ostream& os, const std::vector<std::string>& header, const std::vector<ojson>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) os << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const ojson& r : rows)
        for (std::size_t i = 0; i < header.size(); ++i)
            os << csv_field(r.contains(header[i]) ? r[header[i]] : ojson()) << (i + 1 < header.size() ? "," : "\n");
}

ojson read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InputError("malformed JSON in '" + path + "' at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what());
    }
}

ChannelSpec read_spec(const std::string& path) {
    if (path.empty()) throw InputError("--spec FILE is required");
    const ojson j = read_json_file(path);
    return channel_spec_from_json(nlohmann::json::parse(j.dump()));
}

struct Options {
    std::string spec;
    std::string metric;
    std::optional<double> R, S, theta, a, q_target;
    std::optional<int> K, N;
    std::string convention = "absolute";
    std::string sweep;
    std::string out = "json";
    std::int64_t n = 1000000;
    std::uint64_t seed = 42;
    std::string detection = "noncoherent";
    std::vector<std::string> interferers;
    std::string theta_sweep;
};

// One evaluation point; unset entries fall back to defaults per metric.
struct Point {
    double R = 1.0;
    std::optional<double> S;
    int K = 1;
    double theta = 1.0;
    double a = 1.0;
    double q_target = 0.1;
    int N = 1;
};

Point base_point(const Options& o) {
    Point p;
    if (o.R) p.R = *o.R;
    p.S = o.S;
    if (o.K) p.K = *o.K;
    if (o.theta) p.theta = *o.theta;
    if (o.a) p.a = *o.a;
    if (o.q_target) p.q_target = *o.q_target;
    if (o.N) p.N = *o.N;
    return p;
}

struct Range {
    double lo = 0.0, hi = 0.0;
    int count = 1;
    std::vector<double> values() const {
        std::vector<double> v;
        for (int i = 0; i < count; ++i) v.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        return v;
    }
};

Range parse_range(const std::string& text, const std::string& what) {
    Range r;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    double count = 0;
    if (!(is >> r.lo >> c1 >> r.hi >> c2 >> count) || c1 != ':' || c2 != ':' || !is.eof() || count < 1 ||
        count != std::floor(count) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
        throw InputError(what + ": expected a:b:n with n a positive integer, got '" + text + "'");
    r.count = static_cast<int>(count);
    return r;
}

const std::vector<std::string> kSweepKeys = {"R", "S", "K", "theta", "a", "Q-target", "N"};

void set_key(Point& p, const std::string& key, double v) {
    auto as_int = [&](const char* name) {
        if (v != std::floor(v)) throw InputError(std::string("sweep over ") + name + " needs integer values");
        return static_cast<int>(v);
    };
    if (key == "R") p.R = v;
    else if (key == "S") p.S = v;
    else if (key == "K") p.K = as_int("K");
    else if (key == "theta") p.theta = v;
    else if (key == "a") p.a = v;
    else if (key == "Q-target") p.q_target = v;
    else if (key == "N") p.N = as_int("N");
}

std::vector<Point> sweep_points(const Options& o) {
    const Point base = base_point(o);
    if (o.sweep.empty()) return {base};
    const auto eq = o.sweep.find('=');
    if (eq == std::string::npos) throw InputError("--sweep: expected key=a:b:n, got '" + o.sweep + "'");
    const std::string key = o.sweep.substr(0, eq);
    if (std::find(kSweepKeys.begin(), kSweepKeys.end(), key) == kSweepKeys.end())
        throw InputError("--sweep: unknown key '" + key + "' (expected R, S, K, theta, a, Q-target or N)");
    std::vector<Point> pts;
    for (double v : parse_range(o.sweep.substr(eq + 1), "--sweep").values()) {
        Point p = base;
        set_key(p, key, v);
        pts.push_back(p);
    }
    return pts;
}

struct Context {
    const Options& opt;
    std::optional<EffectiveChannel> spec;
    std::vector<MEDist> interferers;
    bool per_unit_mean() const { return opt.convention == "per-unit-mean"; }
    const MEDist& spec_dist() const {
        if (!spec) throw InputError("--spec FILE is required for metric '" + opt.metric + "'");
        return spec->dist;
    }
};

// Channel as physically simulated: the spec, rescaled to mean S when S is given.
MEDist physical(const Context& c, const Point& p) {
    const MEDist& d = c.spec_dist();
    if (!p.S) return d;
    if (!(*p.S > 0.0)) throw InputError("--S must be positive");
    return scale_mean(normalize_mean(d), *p.S);
}

// Channel and threshold used by the closed form under the chosen convention.
std::pair<MEDist, double> evaluation(const Context& c, const Point& p) {
    if (!c.per_unit_mean()) return {physical(c, p), theta_absolute(p.R)};
    const MEDist& d = c.spec_dist();
    const double s = p.S ? *p.S : mean(d);
    return {d, theta_unit_mean(p.R, s)};
}

MetricResult value_only(double v, std::vector<std::string> notes = {}) {
    MetricResult m;
    m.value = v;
    m.diag.notes = std::move(notes);
    return m;
}

Detection detection(const Options& o) { return o.detection == "coherent" ? Detection::coherent : Detection::noncoherent; }

InterferenceScenario interference_scenario(const Context& c, const MEDist& signal) {
    if (c.interferers.empty()) throw InputError("metric 'arq_interference' needs at least one --interferer FILE");
    return InterferenceScenario{signal, c.interferers, std::nullopt};
}

const std::vector<std::string> kMetrics = {"outage",         "outage_capacity", "arq",          "harq",
                                           "harq_persistent", "ncbr",           "arq_interference", "eff_capacity",
                                           "eff_capacity_shannon", "ergodic_capacity", "ber",     "pep",
                                           "diversity_gain", "sm_mimo_outage",  "entropy",      "lloyd_max",
                                           "panter_dite"};

MetricResult eval_metric(const Context& c, const Point& p) {
    const std::string& m = c.opt.metric;
    if (m == "outage") {
        auto [d, th] = evaluation(c, p);
        return outage(d, th);
    }
    if (m == "outage_capacity") return value_only(outage_capacity(physical(c, p), p.q_target));
    if (m == "arq") {
        auto [d, th] = evaluation(c, p);
        return arq_throughput(d, p.R, th);
    }
    if (m == "harq") {
        auto [d, th] = evaluation(c, p);
        return harq_truncated_throughput(d, p.R, p.K, th);
    }
    if (m == "harq_persistent") {
        auto [d, th] = evaluation(c, p);
        return harq_persistent_throughput(d, p.R, th);
    }
    if (m == "ncbr") {
        const MEDist d = physical(c, p);
        return ncbr_throughput(NcbrLinks{d, d, d, d}, p.R, p.R);
    }
    if (m == "arq_interference") {
        auto [d, th] = evaluation(c, p);
        return arq_interference_throughput(interference_scenario(c, d), p.R, th);
    }
    if (m == "eff_capacity") return eff_capacity_me_rate(physical(c, p), p.theta);
    if (m == "eff_capacity_shannon") return eff_capacity_shannon(physical(c, p), p.theta);
    if (m == "ergodic_capacity") return ergodic_capacity(physical(c, p));
    if (m == "ber") {
        const MEDist d = physical(c, p);
        return detection(c.opt) == Detection::coherent ? ber_coherent(d, p.a) : ber_noncoherent(d, p.a);
    }
    if (m == "pep") {
        if (p.N < 1) throw InputError("--N must be >= 1");
        return pep(std::vector<PepBranch>(static_cast<std::size_t>(p.N), PepBranch{physical(c, p), p.a}));
    }
    if (m == "diversity_gain")
        return value_only(diversity_gain(normalize_mean(c.spec_dist()), detection(c.opt)));
    if (m == "sm_mimo_outage") return sm_mimo_2x2_outage(p.R);
    if (m == "entropy") {
        const EntropyResult e = entropy_numeric(physical(c, p));
        MetricResult r = value_only(e.value, e.notes);
        r.path = PathTag::quadrature;
        r.diag.quad_error = e.quad_error;
        return r;
    }
    if (m == "lloyd_max") {
        const LloydMaxResult q = lloyd_max(physical(c, p), p.N);
        std::ostringstream os;
        os << "centroids";
        for (double u : q.centroids) os << " " << fmt(u);
        std::vector<std::string> notes{os.str()};
        notes.insert(notes.end(), q.notes.begin(), q.notes.end());
        return value_only(q.mse, notes);
    }
    if (m == "panter_dite") {
        MetricResult r = value_only(panter_dite_mse(physical(c, p), p.N).mse);
        r.path = PathTag::quadrature;
        return r;
    }
    throw InputError("unknown metric '" + m + "'");
}

ojson opt_num(const std::optional<double>& v) { return v ? ojson(*v) : ojson(); }

ojson metric_row(const Context& c, std::size_t index, const Point& p, const MetricResult& r) {
    ojson row;
    row["index"] = index;
    row["metric"] = c.opt.metric;
    row["R"] = p.R;
    row["S"] = opt_num(p.S);
    row["K"] = p.K;
    row["theta"] = p.theta;
    row["a"] = p.a;
    row["N"] = p.N;
    if (c.spec) {
        try {
            row["Theta"] = evaluation(c, p).second;
        } catch (const std::exception&) {
            row["Theta"] = nullptr;
        }
    } else {
        row["Theta"] = theta_absolute(p.R);
    }
    row["value"] = r.value;
    row["path"] = to_string(r.path);
    row["imag_residual"] = r.diag.imag_residual;
    row["quad_error"] = r.diag.quad_error;
    std::string notes;
    for (const std::string& n : r.diag.notes) notes += (notes.empty() ? "" : "; ") + n;
    row["notes"] = notes;
    return row;
}

// Evaluates f(i) for i < n on a small worker pool; results keep index order.
template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& f) {
    std::vector<std::optional<T>> res(n);
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    res[i] = f(i);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    std::vector<T> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (errs[i]) std::rethrow_exception(errs[i]);
        out.push_back(std::move(*res[i]));
    }
    return out;
}

Context make_context(const Options& o, bool need_spec) {
    Context c{o, std::nullopt, {}};
    if (!o.spec.empty()) c.spec = standard_channel(read_spec(o.spec));
    else if (need_spec) throw InputError("--spec FILE is required");
    for (const std::string& f : o.interferers) c.interferers.push_back(standard_channel(read_spec(f)).dist);
    return c;
}

const std::vector<std::string> kMetricHeader = {"index", "metric", "R",     "S",    "K",             "theta",
                                                "a",     "N",      "Theta", "value", "path", "imag_residual",
                                                "quad_error", "notes"};

int cmd_metric(const Options& o, std::ostream& out) {
    if (std::find(kMetrics.begin(), kMetrics.end(), o.metric) == kMetrics.end())
        throw InputError("unknown metric '" + o.metric + "'");
    const Context c = make_context(o, o.metric != "sm_mimo_outage");
    const std::vector<Point> pts = sweep_points(o);
    const std::vector<ojson> rows = parallel_map<ojson>(
        pts.size(), [&](std::size_t i) { return metric_row(c, i, pts[i], eval_metric(c, pts[i])); });
    if (o.out == "csv") {
        print_csv(out, kMetricHeader, rows);
    } else {
        ojson doc;
        doc["metric"] = o.metric;
        doc["convention"] = o.convention;
        doc["rows"] = rows;
        print_json(out, doc);
    }
    return kExitOk;
}

int cmd_channel(const Options& o, std::ostream& out, std::ostream& err) {
    const ChannelSpec spec = read_spec(o.spec);
    const EffectiveChannel ch = standard_channel_unchecked(spec);
    const ValidationReport rep = validate(ch.dist);
    ojson doc;
    doc["kind"] = spec.kind;
    doc["degree"] = ch.dist.degree();
    ojson v;
    auto check = [](const Check& c) { return ojson{{"pass", c.pass}, {"detail", c.detail}}; };
    v["lt_at_zero_is_one"] = check(rep.lt_at_zero_is_one);
    v["nonneg_on_grid"] = check(rep.nonneg_on_grid);
    v["cdf_limit_one"] = check(rep.cdf_limit_one);
    v["p1_eq_q1"] = check(rep.p1_eq_q1);
    v["all_pass"] = rep.all_pass();
    v["failures"] = rep.failures();
    if (rep.all_pass()) {
        doc["mean"] = mean(ch.dist);
        doc["moments"] = ojson::array({moment(ch.dist, 1), moment(ch.dist, 2), moment(ch.dist, 3)});
    }
    doc["validation"] = v;
    doc["provenance"] = ojson::parse(ch.provenance_json().dump());
    doc["triple"] = ojson::parse(to_json(ch.dist).dump());
    if (o.out == "csv") {
        std::vector<ojson> rows;
        auto add = [&](const std::string& k, const ojson& val) { rows.push_back(ojson{{"key", k}, {"value", val}}); };
        add("kind", spec.kind);
        add("degree", ch.dist.degree());
        if (rep.all_pass()) {
            add("mean", doc["mean"]);
            for (int k = 0; k < 3; ++k) add("moment" + std::to_string(k + 1), doc["moments"][static_cast<std::size_t>(k)]);
        }
        add("all_pass", rep.all_pass());
        std::string fails;
        for (const std::string& f : rep.failures()) fails += (fails.empty() ? "" : "; ") + f;
        add("failures", fails);
        print_csv(out, {"key", "value"}, rows);
    } else {
        print_json(out, doc);
    }
    if (!rep.all_pass()) {
        err << "invalid channel:";
        for (const std::string& f : rep.failures()) err << " " << f << ";";
        err << "\n";
        return kExitInvalidInput;
    }
    return kExitOk;
}

struct VerifyPlan {
    McKind kind;
    McScenario scn;
};

VerifyPlan verify_plan(const Context& c, const Point& p) {
    const std::string& m = c.opt.metric;
    McScenario s;
    s.r = p.R;
    s.theta = theta_absolute(p.R);
    s.k = p.K;
    s.a = p.a;
    s.qos = p.theta;
    s.r12 = s.r21 = p.R;
    if (m == "sm_mimo_outage") return {McKind::sm_mimo_outage, s};
    const MEDist d = physical(c, p);
    s.channel = d;
    if (m == "outage") return {McKind::outage, s};
    if (m == "arq") return {McKind::arq, s};
    if (m == "harq") return {McKind::harq_truncated, s};
    if (m == "harq_persistent") return {McKind::harq_persistent, s};
    if (m == "ncbr") {
        s.ncbr = NcbrLinks{d, d, d, d};
        return {McKind::ncbr, s};
    }
    if (m == "arq_interference") {
        s.interferers = c.interferers;
        return {McKind::arq_interference, s};
    }
    if (m == "ber")
        return {detection(c.opt) == Detection::coherent ? McKind::ber_coherent : McKind::ber_noncoherent, s};
    if (m == "pep") {
        s.pep.assign(static_cast<std::size_t>(std::max(p.N, 1)), PepBranch{d, p.a});
        return {McKind::pep, s};
    }
    if (m == "eff_capacity") return {McKind::eff_capacity_rate, s};
    if (m == "eff_capacity_shannon") return {McKind::eff_capacity_shannon, s};
    throw InputError("metric '" + m + "' has no Monte Carlo mode");
}

int cmd_verify(const Options& o, std::ostream& out) {
    const Context c = make_context(o, o.metric != "sm_mimo_outage");
    const Point p = base_point(o);
    const VerifyPlan plan = verify_plan(c, p);
    const MetricResult cf = eval_metric(c, p);
    const McEstimate mc = mc_metric(plan.kind, plan.scn, RngConfig{o.seed, o.n});
    const double diff = cf.value - mc.value;
    double z;
    if (mc.stderr_ > 0.0) z = diff / mc.stderr_;
    else z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    const bool pass = std::abs(z) < 4.0;
    ojson doc;
    doc["metric"] = o.metric;
    doc["mc_kind"] = to_string(plan.kind);
    doc["convention"] = o.convention;
    doc["closed_form"] = cf.value;
    doc["path"] = to_string(cf.path);
    doc["monte_carlo"] = mc.value;
    doc["stderr"] = mc.stderr_;
    doc["z"] = std::isfinite(z) ? ojson(z) : ojson(z > 0 ? "inf" : "-inf");
    doc["n"] = mc.n;
    doc["seed"] = o.seed;
    doc["pass"] = pass;
    if (o.out == "csv") print_csv(out, {"metric", "mc_kind", "convention", "closed_form", "path", "monte_carlo", "stderr", "z", "n", "seed", "pass"}, {doc});
    else print_json(out, doc);
    return pass ? kExitOk : kExitVerifyFailed;
}

int cmd_optimize(const Options& o, std::ostream& out) {
    const Context c = make_context(o, true);
    const MEDist d_um = normalize_mean(c.spec_dist());
    ParametricModel model;
    if (o.metric == "arq") model = arq_model(d_um);
    else if (o.metric == "harq_persistent") model = harq_persistent_model(d_um);
    else if (o.metric == "arq_interference") {
        if (c.interferers.empty()) throw InputError("metric 'arq_interference' needs at least one --interferer FILE");
        MEDist sum = c.interferers[0];
        for (std::size_t i = 1; i < c.interferers.size(); ++i) sum = convolve(sum, c.interferers[i]);
        model = arq_interference_model(d_um, sum);
    } else {
        throw InputError("optimize supports metrics arq, harq_persistent and arq_interference, not '" + o.metric + "'");
    }
    if (o.theta_sweep.empty()) throw InputError("--theta-sweep a:b:n is required");
    const std::vector<double> thetas = parse_range(o.theta_sweep, "--theta-sweep").values();
    for (double t : thetas)
        if (!(t > 0.0)) throw InputError("--theta-sweep: Theta values must be positive");
    const std::vector<OptimumRow> rows = optimize_rate(model, thetas);
    std::vector<ojson> jrows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const OptimumRow& r = rows[i];
        ojson row;
        row["index"] = i;
        row["Theta"] = r.theta;
        row["g"] = r.g;
        row["optimum"] = r.interior;
        row["R_star"] = r.interior ? ojson(r.r_star) : ojson();
        row["T_star"] = r.interior ? ojson(r.t_star) : ojson();
        row["S"] = r.interior ? ojson(r.s) : ojson();
        row["dTdR"] = r.interior ? ojson(r.dtdr) : ojson();
        row["note"] = r.note;
        jrows.push_back(row);
    }
    if (o.out == "csv") {
        print_csv(out, {"index", "Theta", "g", "optimum", "R_star", "T_star", "S", "dTdR", "note"}, jrows);
    } else {
        ojson doc;
        doc["metric"] = o.metric;
        doc["rows"] = jrows;
        print_json(out, doc);
    }
    return kExitOk;
}

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--spec", o.spec, "Channel spec JSON file");
    sub->add_option("--R", o.R, "Information rate R [nats]");
    sub->add_option("--S", o.S, "Mean SNR S");
    sub->add_option("--K", o.K, "HARQ transmission limit K");
    sub->add_option("--theta", o.theta, "QoS exponent for effective capacity");
    sub->add_option("--a", o.a, "Modulation constant a");
    sub->add_option("--N", o.N, "Branch count (pep) or quantizer levels (lloyd_max, panter_dite)");
    sub->add_option("--Q-target", o.q_target, "Target outage probability for outage_capacity");
    sub->add_option("--Theta-convention", o.convention, "Decoding threshold convention")
        ->check(CLI::IsMember({"absolute", "per-unit-mean"}));
    sub->add_option("--detection", o.detection, "Detection for ber and diversity_gain")
        ->check(CLI::IsMember({"noncoherent", "coherent"}));
    sub->add_option("--interferer", o.interferers, "Interferer spec JSON file (repeatable)");
    sub->add_option("--out", o.out, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ME-distribution toolkit for wireless performance metrics", "mekit"};
    app.require_subcommand(1);
    Options o;
    CLI::App* channel = app.add_subcommand("channel", "Construct, validate and summarize a channel");
    channel->add_option("--spec", o.spec, "Channel spec JSON file")->required();
    channel->add_option("--out", o.out, "Output format")->check(CLI::IsMember({"json", "csv"}));
    CLI::App* metric = app.add_subcommand("metric", "Evaluate a metric, optionally over a sweep");
    metric->add_option("--metric", o.metric, "Metric name")->required();
    add_common(metric, o);
    metric->add_option("--sweep", o.sweep, "Sweep key=a:b:n over R, S, K, theta, a, Q-target or N");
    CLI::App* verify = app.add_subcommand("verify", "Closed form against Monte Carlo; exit 1 if |z| >= 4");
    verify->add_option("--metric", o.metric, "Metric name")->required();
    add_common(verify, o);
    verify->add_option("--n", o.n, "Monte Carlo sample count");
    verify->add_option("--seed", o.seed, "Random seed");
    CLI::App* optimize = app.add_subcommand("optimize", "Parametric optimal-rate table over Theta");
    optimize->add_option("--metric", o.metric, "arq, harq_persistent or arq_interference")->required();
    add_common(optimize, o);
    optimize->add_option("--theta-sweep", o.theta_sweep, "Theta range a:b:n")->required();

    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalidInput;
    }
    try {
        if (o.n < 1) throw InputError("--n must be >= 1");
        if (channel->parsed()) return cmd_channel(o, out, err);
        if (metric->parsed()) return cmd_metric(o, out);
        if (verify->parsed()) return cmd_verify(o, out);
        return cmd_optimize(o, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitInvalidInput;
}

} // namespace mekit
