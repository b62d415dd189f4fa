// Experiment runner: one subcommand per module, key-value (or JSON, for
// S-matrices) configs, seeded and reproducible CSV/JSON outputs. Every
// output embeds its resolved configuration as "# key = value" comment
// lines, and such an output file can itself be passed back as --config.
//
// Exit codes: 0 success, 2 usage/config error, 3 numerical failure.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cohlab/bloch.hpp"
#include "cohlab/gravity.hpp"
#include "cohlab/smatrix.hpp"
#include "cohlab/squid.hpp"
#include "cohlab/zeno.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cohlab;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

// ---------------------------------------------------------------------
// key-value configs

class Config {
public:
    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file: " + path);
        Config cfg;
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("# ", 0) == 0) line = line.substr(2);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;  // data or free-text line
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || key.find(' ') != std::string::npos) continue;
            cfg.values_[key] = value;
        }
        return cfg;
    }

    void apply_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value");
        values_[assignment.substr(0, eq)] = assignment.substr(eq + 1);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string str(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) throw UsageError("missing config field: " + key);
        used_.insert(key);
        return it->second;
    }
    std::string str_or(const std::string& key, const std::string& fallback) {
        return has(key) ? str(key) : fallback;
    }

    double number(const std::string& key) {
        const std::string s = str(key);
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (...) {
            throw UsageError("field '" + key + "' is not a number: " + s);
        }
    }
    double number_or(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }

    std::uint64_t integer_or(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const std::string s = str(key);
        try {
            return std::stoull(s);
        } catch (...) {
            throw UsageError("field '" + key + "' is not an integer: " + s);
        }
    }

    std::vector<double> list(const std::string& key) {
        std::istringstream iss(str(key));
        std::vector<double> out;
        std::string tok;
        while (iss >> tok) {
            if (tok == ",") continue;
            if (!tok.empty() && tok.back() == ',') tok.pop_back();
            try {
                out.push_back(std::stod(tok));
            } catch (...) {
                throw UsageError("field '" + key + "' has a non-numeric entry: " + tok);
            }
        }
        if (out.empty()) throw UsageError("field '" + key + "' is an empty list");
        return out;
    }

    Vec3 vec3(const std::string& key) {
        const auto v = list(key);
        if (v.size() != 3) throw UsageError("field '" + key + "' needs exactly 3 numbers");
        return {v[0], v[1], v[2]};
    }

    // All recognized keys are consumed through the getters; anything left
    // is a typo or an unsupported option.
    void reject_unknown() const {
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) throw UsageError("unknown config field: " + k);
    }

    void echo(std::vector<std::string>& lines) const {
        for (const auto& [k, v] : values_) lines.push_back(k + " = " + v);
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    std::cout << path.string() << "\n";
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    bool long_run = false;

    Config load() const {
        Config cfg = Config::from_file(config_path);
        for (const auto& o : overrides) cfg.apply_override(o);
        if (seed) cfg.apply_override("seed=" + std::to_string(*seed));
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "config file (key = value lines)")
        ->required();
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
    cmd->add_option("--set", opts.overrides, "override a config field (key=value)");
    cmd->add_option("--seed", opts.seed, "override the config seed");
}

// ---------------------------------------------------------------------
// bloch

int run_bloch(const CommonOpts& opts) {
    Config cfg = opts.load();
    const bloch::BlochState p0{cfg.vec3("p0")};
    const Vec3 field = cfg.vec3("field");
    const double d = cfg.number("decoherence");
    const double t_end = cfg.number("t_end");
    const double dt = cfg.number("dt");
    const auto stride = static_cast<std::size_t>(cfg.integer_or("record_every", 1));
    const std::string out = cfg.str_or("out", "bloch_trajectory.csv");
    cfg.integer_or("seed", 0);  // deterministic run; accepted for uniformity
    cfg.reject_unknown();
    if (stride < 1) throw UsageError("record_every must be >= 1");

    TimeSeries series(0.0, dt * static_cast<double>(stride),
                      {"px", "py", "pz", "entropy", "purity"});
    bloch::evolve_observe(p0, field, bloch::DecoherenceRate(d), t_end, dt,
                          [&](std::size_t k, double, const Vec3& p) {
                              if (k % stride) return;
                              const bloch::BlochState s{p};
                              series.push_back(
                                  {p.x, p.y, p.z, bloch::entropy(s), bloch::purity(s)});
                          });

    std::vector<std::string> comments;
    cfg.echo(comments);
    std::ostringstream oss;
    series.write_csv(oss, comments);
    write_text_file(fs::path(opts.out_dir) / out, oss.str());
    return 0;
}

// ---------------------------------------------------------------------
// zeno

int run_zeno(const CommonOpts& opts) {
    Config cfg = opts.load();
    const double v = cfg.number("v");
    const auto d_list = cfg.list("d_list");
    const double t_min_factor = cfg.number_or("t_min_factor", 10.0);
    const std::string out = cfg.str_or("out", "zeno_scan.csv");
    cfg.integer_or("seed", 0);
    cfg.reject_unknown();

    std::ostringstream oss;
    std::vector<std::string> comments;
    cfg.echo(comments);
    for (const auto& line : comments) oss << "# " << line << "\n";
    oss << "D,V,fitted_rate,predicted_rate,exact_rate,residual,rel_error,status\n";
    for (double d : d_list) {
        std::string status = "ok";
        double fitted = NAN, predicted = NAN, exact = NAN, residual = NAN, rel = NAN;
        if (d == 0.0) {
            status = "oscillatory";
        } else if (d <= 2.0 * v) {
            status = "underdamped";
            predicted = zeno::zeno_prediction(v, bloch::DecoherenceRate(d));
        } else {
            predicted = zeno::zeno_prediction(v, bloch::DecoherenceRate(d));
            exact = zeno::exact_slow_rate(v, d);
            const double dt = 0.1 / std::max(v, d);
            const auto series = bloch::evolve({{0, 0, 1}}, Vec3{v, 0, 0},
                                              bloch::DecoherenceRate(d), 8.0 / predicted, dt);
            const auto fit = zeno::fit_decay_rate(series, t_min_factor / d);
            fitted = fit.rate;
            residual = fit.residual_rms;
            rel = std::abs(fitted - predicted) / predicted;
        }
        oss << num(d) << ',' << num(v) << ',' << num(fitted) << ',' << num(predicted) << ','
            << num(exact) << ',' << num(residual) << ',' << num(rel) << ',' << status << "\n";
    }
    write_text_file(fs::path(opts.out_dir) / out, oss.str());
    return 0;
}

// ---------------------------------------------------------------------
// smatrix (JSON config)

smatrix::CMatrix parse_matrix(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty()) throw UsageError(name + ": expected an array of [re, im]");
    // row-major flat list of [re, im] pairs
    const auto n2 = j.size();
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(double(n2))));
    if (n * n != static_cast<Eigen::Index>(n2))
        throw UsageError(name + ": length is not a perfect square");
    smatrix::CMatrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto& e = j[r * n + c];
            if (!e.is_array() || e.size() != 2) throw UsageError(name + ": entries are [re, im]");
            m(r, c) = {e[0].get<double>(), e[1].get<double>()};
        }
    return m;
}

int run_smatrix(const CommonOpts& opts) {
    std::ifstream in(opts.config_path);
    if (!in) throw UsageError("cannot open config file: " + opts.config_path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw UsageError(std::string("JSON parse error: ") + e.what());
    }
    if (j.contains("config")) j = j["config"];  // accept a previous output
    for (const auto& key : {"s1", "s2", "incoming"})
        if (!j.contains(key)) throw UsageError(std::string("missing config field: ") + key);

    smatrix::CMatrix s1, s2;
    smatrix::CVector incoming;
    double flux = 1.0;
    std::string out;
    try {
        s1 = parse_matrix(j["s1"], "s1");
        s2 = parse_matrix(j["s2"], "s2");
        const auto& ji = j["incoming"];
        incoming.resize(ji.size());
        for (std::size_t i = 0; i < ji.size(); ++i)
            incoming(static_cast<Eigen::Index>(i)) = {ji[i][0].get<double>(),
                                                      ji[i][1].get<double>()};
        flux = j.value("flux", 1.0);
        out = j.value("out", "smatrix_result.json");
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed smatrix config: ") + e.what());
    }

    const smatrix::ScatteringPair pair(s1, s2, incoming, flux);
    const auto half = smatrix::verify_half_rate_limit(s2, incoming, flux);

    json result;
    result["config"] = j;
    result["n"] = s1.rows();
    result["decoherence_rate"] = smatrix::decoherence_rate(pair);
    result["energy_shift"] = smatrix::energy_shift(pair);
    result["unitarity_defect_s1"] = smatrix::unitarity_defect(s1);
    result["unitarity_defect_s2"] = smatrix::unitarity_defect(s2);
    result["half_rate_check"] = {{"d_with_s1_identity", half.d},
                                 {"half_scattering_rate", half.half_rate},
                                 {"difference", half.difference}};
    write_text_file(fs::path(opts.out_dir) / out, result.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------
// gravity

int run_gravity(const CommonOpts& opts) {
    Config cfg = opts.load();
    const std::string mode = cfg.str_or("mode", "scan");
    if (mode == "galaxy") {
        const double dalpha = cfg.number("delta_alpha");
        const double b = cfg.number("b");
        const double l_max = cfg.number("l_max");
        const double threshold = cfg.number_or("threshold", 1.0);
        const std::string out = cfg.str_or("out", "galaxy_verdict.json");
        cfg.integer_or("seed", 0);
        cfg.reject_unknown();
        const auto verdict = gravity::galaxy_decoherence(dalpha, b, l_max, threshold);
        json result;
        result["config"] = {{"mode", "galaxy"},
                            {"delta_alpha", dalpha},
                            {"b", b},
                            {"l_max", l_max},
                            {"threshold", threshold}};
        result["delta_phase"] = verdict.delta_phase;
        result["phase_spread"] = 2.0 * verdict.delta_phase;
        result["decohered"] = verdict.decohered;
        write_text_file(fs::path(opts.out_dir) / out, result.dump(2) + "\n");
        return 0;
    }
    if (mode != "scan") throw UsageError("gravity mode must be scan or galaxy");

    const double flux = cfg.number_or("flux", 1.0);
    const auto dalpha_list = cfg.list("delta_alpha_list");
    const auto lmax_list = cfg.list("l_max_list");
    const double b_min = cfg.number_or("b_min", 0.0);
    const std::string out = cfg.str_or("out", "gravity_scan.csv");
    cfg.integer_or("seed", 0);
    cfg.reject_unknown();
    for (double da : dalpha_list)
        if (std::abs(da) > 0.01)
            std::cerr << "warning: delta_alpha " << da
                      << " is outside the lowest-order regime (|dalpha| << 1)\n";

    std::ostringstream oss;
    std::vector<std::string> comments;
    cfg.echo(comments);
    for (const auto& line : comments) oss << "# " << line << "\n";
    oss << "delta_alpha,l_max,D_numeric,D_estimate,ratio\n";
    for (double lm : lmax_list) {
        for (double da : dalpha_list) {
            const gravity::ImpactGeometry geom{lm, b_min, 1025};
            const double d_num = gravity::impact_rate(flux, 0.0, da, geom);
            const double d_est = gravity::small_delta_estimate(flux, da, lm);
            const double ratio = d_est > 0 ? d_num / d_est : NAN;
            oss << num(da) << ',' << num(lm) << ',' << num(d_num) << ',' << num(d_est) << ','
                << num(ratio) << "\n";
        }
    }
    write_text_file(fs::path(opts.out_dir) / out, oss.str());
    return 0;
}

// ---------------------------------------------------------------------
// squid

int run_squid(const CommonOpts& opts) {
    Config cfg = opts.load();
    squid::SquidParams params;
    params.beta = cfg.number_or("beta", 1.19);
    params.inductance = cfg.number_or("inductance", 400e-12);
    params.capacitance = cfg.number_or("capacitance", 0.1e-12);
    params.n_levels = static_cast<int>(cfg.integer_or("n_levels", 8));
    const auto n_traj = static_cast<int>(cfg.integer_or("n_trajectories", 200));
    const std::uint64_t seed = cfg.integer_or("seed", 1);
    squid::SweepOptions sweep_opts;
    sweep_opts.dt_max = cfg.number_or("dt_max", squid::SweepOptions{}.dt_max);

    double target_inverse_d = cfg.number_or("target_inverse_d", 0.0);
    if (opts.long_run) target_inverse_d = 39000.0;

    // sweep times: explicit list, or factors of the decoherence time
    std::vector<double> sweeps;
    if (cfg.has("sweep_times") && !opts.long_run) {
        sweeps = cfg.list("sweep_times");
    } else {
        std::vector<double> factors{0.1, 0.5, 1.0, 2.0, 5.0};
        if (cfg.has("sweep_time_factors")) factors = cfg.list("sweep_time_factors");
        if (!(target_inverse_d > 0))
            throw UsageError("sweep_time_factors needs target_inverse_d (or --long-run)");
        for (double f : factors) sweeps.push_back(f * target_inverse_d);
        if (cfg.has("sweep_times")) cfg.str("sweep_times");  // consume when overridden
    }

    squid::NoiseModel noise{cfg.number_or("noise_amplitude", -1.0), seed};
    const double tilt = cfg.number_or("tilt_over_splitting", 8.0);
    const bool explicit_window = cfg.has("x_start") || cfg.has("x_end");
    double x_start = cfg.number_or("x_start", 0.0);
    double x_end = cfg.number_or("x_end", 0.0);
    const std::string out = cfg.str_or("out", "squid_sweep.csv");
    const std::string debug_out = cfg.str_or("debug_out", "");
    cfg.reject_unknown();

    if (noise.amplitude < 0) {
        if (!(target_inverse_d > 0))
            throw UsageError("provide either noise_amplitude or target_inverse_d");
        noise = squid::calibrate_noise(params, target_inverse_d, seed);
        std::cerr << "calibrated noise amplitude " << num(noise.amplitude) << " for 1/D = "
                  << num(target_inverse_d) << "\n";
    }

    std::ostringstream oss, dbg;
    std::vector<std::string> comments;
    cfg.echo(comments);
    comments.push_back("resolved_noise_amplitude = " + num(noise.amplitude));
    for (const auto& line : comments) {
        oss << "# " << line << "\n";
        dbg << "# " << line << "\n";
    }
    oss << "t_sweep,inversion_probability,uncertainty,n_traj,seed\n";
    dbg << "t_sweep,trajectory,probability\n";
    for (double t_sweep : sweeps) {
        squid::SweepProtocol protocol;
        if (explicit_window) {
            protocol = squid::SweepProtocol{x_start, x_end, t_sweep};
        } else {
            protocol = squid::inversion_protocol(params, t_sweep, tilt);
        }
        std::vector<double> per_traj;
        const auto r = squid::adiabatic_sweep(params, protocol, noise, n_traj, seed, sweep_opts,
                                              debug_out.empty() ? nullptr : &per_traj);
        if (r.truncation_warning)
            std::cerr << "warning: t_sweep " << num(t_sweep) << ": top-level population reached "
                      << num(r.max_top_level_population) << " (> 1%), consider more levels\n";
        oss << num(t_sweep) << ',' << num(r.inversion_probability) << ',' << num(r.uncertainty)
            << ',' << r.n_trajectories << ',' << seed << "\n";
        for (std::size_t k = 0; k < per_traj.size(); ++k)
            dbg << num(t_sweep) << ',' << k << ',' << num(per_traj[k]) << "\n";
    }
    write_text_file(fs::path(opts.out_dir) / out, oss.str());
    if (!debug_out.empty()) write_text_file(fs::path(opts.out_dir) / debug_out, dbg.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-state decoherence laboratory"};
    app.require_subcommand(1);

    CommonOpts bloch_opts, zeno_opts, smatrix_opts, gravity_opts, squid_opts;
    add_common(app.add_subcommand("bloch", "damped precession trajectory"), bloch_opts);
    add_common(app.add_subcommand("zeno", "overdamped decay-rate scan"), zeno_opts);
    add_common(app.add_subcommand("smatrix", "unitarity-deficit decoherence rate"), smatrix_opts);
    add_common(app.add_subcommand("gravity", "eikonal decoherence integrals"), gravity_opts);
    auto* squid_cmd = app.add_subcommand("squid", "rf-SQUID inversion experiment");
    add_common(squid_cmd, squid_opts);
    squid_cmd->add_flag("--long-run", squid_opts.long_run,
                        "full-scale run with 1/D = 39000 time units");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("bloch")) return run_bloch(bloch_opts);
        if (app.got_subcommand("zeno")) return run_zeno(zeno_opts);
        if (app.got_subcommand("smatrix")) return run_smatrix(smatrix_opts);
        if (app.got_subcommand("gravity")) return run_gravity(gravity_opts);
        if (app.got_subcommand("squid")) return run_squid(squid_opts);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
