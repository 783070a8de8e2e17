#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <tbb/global_control.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "pngkpz/asymptotic.hpp"
#include "pngkpz/exact.hpp"
#include "pngkpz/growth.hpp"
#include "pngkpz/oracle.hpp"

namespace pngkpz::cli {

using json = nlohmann::json;

namespace {

struct schema_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw schema_error(path + ": " + what);
}

const json& member(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) bad(path, "expected an object");
    if (!j.contains(key)) bad(path + "/" + key, "required field missing");
    return j.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    return j.get<double>();
}

long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) bad(path, "expected an integer");
    return j.get<long>();
}

double req_number(const json& j, const std::string& path, const char* key) {
    return number(member(j, path, key), path + "/" + key);
}

template <class T>
T opt(const json& j, const std::string& path, const char* key, T dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    const std::string p = path + "/" + key;
    if constexpr (std::is_same_v<T, bool>) {
        if (!j.at(key).is_boolean()) bad(p, "expected a boolean");
        return j.at(key).get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        return static_cast<T>(integer(j.at(key), p));
    } else {
        return static_cast<T>(number(j.at(key), p));
    }
}

std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) bad(path, "expected a non-empty array of numbers");
    std::vector<double> v;
    for (size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "/" + std::to_string(i)));
    return v;
}

std::vector<long> integers(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) bad(path, "expected a non-empty array of integers");
    std::vector<long> v;
    for (size_t i = 0; i < j.size(); ++i) v.push_back(integer(j[i], path + "/" + std::to_string(i)));
    return v;
}

void same_length(size_t a, size_t b, const std::string& path) {
    if (a != b) bad(path, "arrays must have the same length");
}

ModelParams parse_discrete(const json& j, const std::string& path) {
    ModelParams mp;
    mp.q = req_number(j, path, "q");
    mp.m = integers(member(j, path, "m"), path + "/m");
    mp.n = integers(member(j, path, "n"), path + "/n");
    mp.a = integers(member(j, path, "a"), path + "/a");
    same_length(mp.m.size(), mp.n.size(), path + "/n");
    same_length(mp.m.size(), mp.a.size(), path + "/a");
    return mp;
}

KPZParams parse_kpz(const json& j, const std::string& path) {
    KPZParams k;
    k.q = req_number(j, path, "q");
    k.T = req_number(j, path, "T");
    k.t = numbers(member(j, path, "t"), path + "/t");
    k.x = numbers(member(j, path, "x"), path + "/x");
    k.xi = numbers(member(j, path, "xi"), path + "/xi");
    k.mu = opt(j, path, "mu", 0.0);
    same_length(k.t.size(), k.x.size(), path + "/x");
    same_length(k.t.size(), k.xi.size(), path + "/xi");
    return k;
}

LimitInstance parse_limit(const json& j, const std::string& path) {
    LimitInstance in;
    in.t = numbers(member(j, path, "t"), path + "/t");
    in.x = numbers(member(j, path, "x"), path + "/x");
    in.xi = numbers(member(j, path, "xi"), path + "/xi");
    same_length(in.t.size(), in.x.size(), path + "/x");
    same_length(in.t.size(), in.xi.size(), path + "/xi");
    in.d1 = opt(j, path, "d1", in.d1);
    in.d2 = opt(j, path, "d2", in.d2);
    in.d3 = opt(j, path, "d3", in.d3);
    in.D = opt(j, path, "D", in.D);
    for (size_t k = 0; k < in.t.size(); ++k)
        if (!(in.t[k] > (k ? in.t[k - 1] : 0.0))) bad(path + "/t", "must be positive and strictly increasing");
    in.mu = opt(j, path, "mu", default_mu(in.t, in.x));
    return in;
}

struct Options {
    std::string sub;
    std::string config_path, out_path, format = "json";
    std::uint64_t seed = 1;
    int workers = 0;
    std::optional<double> tol;
    std::optional<int> theta_nodes, grid_nodes;
    std::optional<double> r_theta, mu;
    std::optional<std::uint64_t> samples;
    double s_min = -4.0, s_max = 2.0, s_step = 1.0;
};

json load_config(const Options& o, bool required) {
    if (o.config_path.empty()) {
        if (required) bad("/", "--config is required for " + o.sub);
        return json::object();
    }
    std::ifstream f(o.config_path);
    if (!f) bad("/", "cannot open config " + o.config_path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        bad("/", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) bad("/", "expected an object");
    return j;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

struct Output {
    json result;                 // json format
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;  // csv format
    std::vector<std::string> labels;        // optional leading text column
};

Output scalar_output(double value, json diag) {
    Output o;
    o.result = {{"value", value}, {"diagnostics", diag}};
    o.header.push_back("value");
    o.rows.push_back({value});
    for (auto& [k, v] : diag.items())
        if (v.is_number()) {
            o.header.push_back(k);
            o.rows[0].push_back(v.get<double>());
        }
    return o;
}

Output cmd_simulate(const json& cfg, const Options& o) {
    const double q = req_number(cfg, "", "q");
    const int M = static_cast<int>(integer(member(cfg, "", "M"), "/M"));
    const int N = static_cast<int>(integer(member(cfg, "", "N"), "/N"));
    const std::uint64_t samples = o.samples ? *o.samples : opt<std::uint64_t>(cfg, "", "samples", 1000);
    if (!(q > 0.0 && q < 1.0)) bad("/q", "must lie in (0, 1)");
    if (M < 1 || N < 1) bad("/M", "grid must be at least 1 x 1");
    if (samples < 1) bad("/samples", "must be positive");
    const auto t0 = std::chrono::steady_clock::now();
    Output out;
    out.header = {"sample", "G_MN"};
    double mean = 0.0, m2 = 0.0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const GrowthTable tab = build_table(sample_weights(q, M, N, o.seed + i));
        const double g = static_cast<double>(tab.at(M, N));
        const double d = g - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (g - mean);
        if (o.format == "csv") out.rows.push_back({static_cast<double>(i), g});
    }
    json diag = {{"samples", samples},
                 {"variance", samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0},
                 {"M", M},
                 {"N", N}};
    if (cfg.contains("instance")) {
        const ModelParams mp = parse_discrete(cfg.at("instance"), "/instance");
        const MCResult mc = mc_multipoint(mp, samples, o.seed, o.workers);
        diag["event_estimate"] = mc.estimate;
        diag["event_stderr"] = mc.stderr_;
        diag["event_hits"] = mc.hits;
    }
    diag["runtime_ms"] = ms_since(t0);
    out.result = {{"value", mean}, {"diagnostics", diag}};
    return out;
}

Output cmd_oracle(const json& cfg, const Options&) {
    const ModelParams mp = parse_discrete(member(cfg, "", "instance"), "/instance");
    const json st = cfg.value("settings", json::object());
    const std::string method = st.value("method", std::string("dp"));
    const auto t0 = std::chrono::steady_clock::now();
    if (method == "dp") {
        const DPResult r = dp_exact_prob(mp, opt<std::uint64_t>(st, "/settings", "max_states", 1000000));
        return scalar_output(r.prob, {{"states", r.states}, {"runtime_ms", ms_since(t0)}});
    }
    if (method == "truncated") {
        const TruncatedSum r = truncated_sum_prob(mp, opt<long>(st, "/settings", "cutoff", 40));
        return scalar_output(r.value, {{"tail", r.tail}, {"terms", r.terms}, {"runtime_ms", ms_since(t0)}});
    }
    bad("/settings/method", "expected \"dp\" or \"truncated\"");
}

Output cmd_exact(const json& cfg, const Options& o) {
    const json& inst = member(cfg, "", "instance");
    const ModelParams mp = inst.contains("T") ? discretize(parse_kpz(inst, "/instance"))
                                              : parse_discrete(inst, "/instance");
    const json st = cfg.value("settings", json::object());
    ExactSettings es;
    es.r_theta = o.r_theta.value_or(opt(st, "/settings", "r_theta", es.r_theta));
    es.tol = o.tol.value_or(opt(st, "/settings", "tol", es.tol));
    es.theta_nodes = o.theta_nodes.value_or(opt(st, "/settings", "theta_nodes", es.theta_nodes));
    es.zeta_nodes = opt(st, "/settings", "zeta_nodes", es.zeta_nodes);
    es.z_nodes = opt(st, "/settings", "z_nodes", es.z_nodes);
    es.delta = opt(st, "/settings", "delta", es.delta);
    es.mu = o.mu.value_or(opt(st, "/settings", "mu", es.mu));
    es.max_N = opt(st, "/settings", "max_N", es.max_N);
    const ExactResult r = multipoint_prob_exact(mp, es);
    return scalar_output(r.value, {{"imag_part", r.imag},
                                   {"theta_change", r.change},
                                   {"theta_nodes", r.theta_nodes},
                                   {"zeta_nodes", r.zeta_nodes},
                                   {"z_nodes", r.z_nodes},
                                   {"N", mp.N()},
                                   {"runtime_ms", r.runtime_ms}});
}

Output cmd_asymptotic(const json& cfg, const Options& o) {
    LimitInstance in = parse_limit(member(cfg, "", "instance"), "/instance");
    if (o.mu) in.mu = *o.mu;
    const json st = cfg.value("settings", json::object());
    LimitSettings ls;
    ls.r_theta = o.r_theta.value_or(opt(st, "/settings", "r_theta", ls.r_theta));
    ls.tol = o.tol.value_or(opt(st, "/settings", "tol", ls.tol));
    ls.theta_nodes = o.theta_nodes.value_or(opt(st, "/settings", "theta_nodes", ls.theta_nodes));
    ls.grid_nodes = o.grid_nodes.value_or(opt(st, "/settings", "grid_nodes", ls.grid_nodes));
    ls.L = opt(st, "/settings", "L", ls.L);
    const LimitResult r = multitime_cdf(in, ls);
    return scalar_output(r.value, {{"imag_part", r.imag},
                                   {"theta_change", r.change},
                                   {"theta_nodes", r.theta_nodes},
                                   {"grid_nodes", r.grid_nodes},
                                   {"runtime_ms", r.runtime_ms}});
}

Output cmd_tw(const json& cfg, const Options& o) {
    std::vector<double> s;
    if (cfg.contains("s")) {
        s = numbers(cfg.at("s"), "/s");
    } else {
        if (!(o.s_step > 0.0) || o.s_max < o.s_min) bad("/s", "need s_step > 0 and s_max >= s_min");
        const long n = std::lround(std::floor((o.s_max - o.s_min) / o.s_step + 1e-9)) + 1;
        for (long i = 0; i < n; ++i) s.push_back(o.s_min + static_cast<double>(i) * o.s_step);
    }
    const int nodes = o.grid_nodes.value_or(opt(cfg, "", "nodes", 48));
    const auto t0 = std::chrono::steady_clock::now();
    Output out;
    out.header = {"s", "F_GUE"};
    json vals = json::array();
    for (double x : s) {
        const double f = tracy_widom(x, nodes);
        out.rows.push_back({x, f});
        vals.push_back({{"s", x}, {"F_GUE", f}});
    }
    out.result = {{"value", vals}, {"diagnostics", {{"nodes", nodes}, {"runtime_ms", ms_since(t0)}}}};
    return out;
}

struct Check {
    std::string name;
    double value, tol;
    bool pass() const { return std::isfinite(value) && value < tol; }
};

Output cmd_validate(const json&, const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Check> checks;
    {
        double e = 0.0;
        for (double q : {0.3, 0.5})
            for (long a = 1; a <= 5; ++a) e = std::max(e, std::fabs(single_point_prob(1, 1, a, q) - (1.0 - std::pow(q, a))));
        checks.push_back({"single_point_closed_form", e, 1e-10});
    }
    ModelParams mp{0.4, {1, 2}, {1, 3}, {2, 4}};
    const double dp = dp_exact_prob(mp).prob;
    checks.push_back({"exact_vs_dp", std::fabs(multipoint_prob_exact(mp).value - dp), 1e-5});
    {
        const MCResult mc = mc_multipoint(mp, 100000, o.seed, o.workers);
        checks.push_back({"mc_vs_dp_in_stderr", std::fabs(mc.estimate - dp) / mc.stderr_, 4.0});
    }
    {
        const std::vector<cplx> th{std::polar(2.0, 0.7)};
        ExactSettings a, b;
        b.mu = 1.0;
        const cplx d0 = det_theta(th, mp, a), d1 = det_theta(th, mp, b);
        checks.push_back({"det_theta_mu_shift", std::abs(d0 - d1) / std::abs(d0), 1e-8});
    }
    {
        LimitInstance in;
        in.t = {1.0, 2.0};
        in.x = {0.1, -0.2};
        in.xi = {-1.0, 0.5};
        in.mu = default_mu(in.t, in.x);
        in = in.with_decaying_lines();
        const KernelIndex k6{6, 0, 0, 2, 0, {2}};
        double e = 0.0;
        for (double u : {-1.0, -0.2})
            for (double v : {-0.8, 0.4})
                e = std::max(e, std::abs(eval_basic_kernel(k6, 1, u, v < 0 ? 1 : 2, v, in) -
                                         airy_form_kernel(k6, 1, u, v < 0 ? 1 : 2, v, in)));
        checks.push_back({"contour_vs_airy_form", e, 1e-6});
    }
    {
        double e = 0.0;
        for (double x : {0.0, 0.5, -0.7})
            e = std::max(e, std::fabs(singletime_det(1.0, x, -1.0 - x * x) - tracy_widom(-1.0)));
        checks.push_back({"singletime_vs_tracy_widom", e, 1e-6});
    }
    {
        const SbpReport r = verify_sbp(5, 6, o.seed);
        checks.push_back({"summation_by_parts", std::max(r.max_abs_a, r.max_abs_b), 1e-12});
    }
    Output out;
    out.header = {"value", "tolerance", "pass"};
    json table = json::array();
    bool all = true;
    for (const auto& c : checks) {
        table.push_back({{"check", c.name}, {"value", c.value}, {"tolerance", c.tol}, {"pass", c.pass()}});
        out.rows.push_back({c.value, c.tol, c.pass() ? 1.0 : 0.0});
        all = all && c.pass();
    }
    out.result = {{"value", all}, {"diagnostics", {{"checks", table}, {"runtime_ms", ms_since(t0)}}}};
    out.header.insert(out.header.begin(), "check");
    for (const auto& c : checks) out.labels.push_back(c.name);
    return out;
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

std::string render(const Output& out, const Options& o, const json& cfg) {
    if (o.format == "csv") {
        std::ostringstream s;
        for (size_t i = 0; i < out.header.size(); ++i) s << (i ? "," : "") << out.header[i];
        s << "\n";
        for (size_t r = 0; r < out.rows.size(); ++r) {
            if (!out.labels.empty()) s << out.labels[r] << ",";
            for (size_t i = 0; i < out.rows[r].size(); ++i) s << (i ? "," : "") << fmt(out.rows[r][i]);
            s << "\n";
        }
        return s.str();
    }
    json j = out.result;
    json effective = {{"subcommand", o.sub}, {"config", cfg}};
    if (o.tol) effective["tol"] = *o.tol;
    if (o.theta_nodes) effective["theta_nodes"] = *o.theta_nodes;
    if (o.grid_nodes) effective["grid_nodes"] = *o.grid_nodes;
    if (o.r_theta) effective["r_theta"] = *o.r_theta;
    if (o.mu) effective["mu"] = *o.mu;
    if (o.samples) effective["samples"] = *o.samples;
    if (o.sub == "tw") effective["s"] = {o.s_min, o.s_max, o.s_step};
    j["provenance"] = {{"config_hash", fnv1a_hex(effective.dump())}, {"seed", o.seed}};
    return j.dump(2) + "\n";
}

}  // namespace

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Geometric last passage percolation and its KPZ limit"};
    app.require_subcommand(1, 1);
    app.add_option("--config", o.config_path, "instance/config JSON")->check(CLI::ExistingFile);
    app.add_option("--out", o.out_path, "output path (stdout if omitted)");
    app.add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--workers", o.workers, "worker threads (0: all)")->check(CLI::NonNegativeNumber);
    app.add_option("--tol", o.tol, "convergence tolerance");
    app.add_option("--theta-nodes", o.theta_nodes, "fixed theta trapezoid nodes per circle");
    app.add_option("--r-theta", o.r_theta, "theta circle radius (> 1)");
    app.add_option("--mu", o.mu, "conjugation constant");
    app.add_option("--grid-nodes", o.grid_nodes, "Gauss-Legendre nodes per block");
    app.add_option("--samples", o.samples, "sample count for simulate");
    app.add_option("--s-min", o.s_min, "tw sweep start");
    app.add_option("--s-max", o.s_max, "tw sweep end");
    app.add_option("--s-step", o.s_step, "tw sweep step");
    app.fallthrough();
    for (const char* name : {"simulate", "oracle", "exact", "asymptotic", "tw", "validate"})
        app.add_subcommand(name)->callback([&o, name] { o.sub = name; });

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "usage: " << e.what() << "\n";
        return schema;
    }

    std::unique_ptr<tbb::global_control> gc;
    if (o.workers > 0)
        gc = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism, o.workers);

    try {
        const bool needs_cfg = o.sub == "simulate" || o.sub == "oracle" || o.sub == "exact" || o.sub == "asymptotic";
        const json cfg = load_config(o, needs_cfg);
        Output res;
        if (o.sub == "simulate") res = cmd_simulate(cfg, o);
        else if (o.sub == "oracle") res = cmd_oracle(cfg, o);
        else if (o.sub == "exact") res = cmd_exact(cfg, o);
        else if (o.sub == "asymptotic") res = cmd_asymptotic(cfg, o);
        else if (o.sub == "tw") res = cmd_tw(cfg, o);
        else res = cmd_validate(cfg, o);
        const std::string text = render(res, o, cfg);
        if (o.out_path.empty()) {
            out << text;
        } else {
            std::ofstream f(o.out_path, std::ios::binary);
            f << text;
            if (!f) {
                err << "error: cannot write " << o.out_path << "\n";
                return failure;
            }
        }
        if (o.sub == "validate" && !res.result["value"].get<bool>()) return failure;
        return ok;
    } catch (const schema_error& e) {
        err << "schema: " << e.what() << "\n";
        return schema;
    } catch (const pngkpz::domain_error& e) {
        err << "invalid instance: " << e.what() << "\n";
        return schema;
    } catch (const convergence_error& e) {
        err << "convergence: " << e.what() << "\n";
        return convergence;
    } catch (const budget_error& e) {
        err << "budget: " << e.what() << "\n";
        return budget;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return failure;
    }
}

}  // namespace pngkpz::cli
