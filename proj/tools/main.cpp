// hmdesign command-line front end: coverage lookup, capacity evaluation,
// constellation optimization, H-QAM optimization and rate-region sweeps.
// Every command writes a run manifest next to its outputs; re-running with
// the recorded parameters reproduces the outputs byte for byte.
//
// Exit codes: 0 success, 2 argument error, 3 semantic input error,
// 4 infeasible problem, 5 internal numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmdesign/capacity.hpp"
#include "hmdesign/constellation_io.hpp"
#include "hmdesign/coverage.hpp"
#include "hmdesign/errors.hpp"
#include "hmdesign/optimizer.hpp"
#include "hmdesign/rate_region.hpp"

#ifndef HMDESIGN_VERSION
#define HMDESIGN_VERSION "0.0.0"
#endif

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitArgs = 2;
constexpr int kExitInput = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitNumerical = 5;

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw hmdesign::IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw hmdesign::IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw hmdesign::IoError("rename failed for " + path + ": " + ec.message());
}

// Run manifest: command, full parameter set, seed, version, duration and
// output paths, serialized alongside every output.
class Manifest {
public:
    Manifest(std::string command, std::string path)
        : command_(std::move(command)), path_(std::move(path)),
          t0_(std::chrono::steady_clock::now()) {}

    json& params() { return params_; }
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    void add_output(const std::string& p) { outputs_.push_back(p); }

    void write() const {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        json doc;
        doc["command"] = command_;
        doc["parameters"] = params_;
        doc["seed"] = seed_;
        doc["tool_version"] = HMDESIGN_VERSION;
        doc["duration_seconds"] = secs;
        doc["outputs"] = outputs_;
        write_file_atomic(path_, doc.dump(2) + "\n");
    }

private:
    std::string command_;
    std::string path_;
    json params_ = json::object();
    std::uint64_t seed_ = 0;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point t0_;
};

std::string manifest_path_for(const std::string& out_path, const std::string& command) {
    if (out_path.empty()) return command + ".manifest.json";
    std::filesystem::path p(out_path);
    p.replace_extension();
    return p.string() + ".manifest.json";
}

int map_error(const std::exception& e) {
    if (dynamic_cast<const hmdesign::Infeasible*>(&e)) return kExitInfeasible;
    if (dynamic_cast<const hmdesign::NoFeasibleStart*>(&e)) return kExitInfeasible;
    if (dynamic_cast<const hmdesign::IoError*>(&e) ||
        dynamic_cast<const hmdesign::SizeMismatch*>(&e) ||
        dynamic_cast<const hmdesign::NonFinite*>(&e) ||
        dynamic_cast<const hmdesign::ZeroPower*>(&e) ||
        dynamic_cast<const hmdesign::NoLpBits*>(&e) ||
        dynamic_cast<const hmdesign::UnsupportedOrder*>(&e) ||
        dynamic_cast<const hmdesign::InvalidSpec*>(&e)) {
        return kExitInput;
    }
    return kExitNumerical;
}

// ---- coverage ---------------------------------------------------------------

struct CoverageArgs {
    std::optional<double> percent;
    std::optional<double> snr;
    hmdesign::CoverageParams params;
    std::string manifest_path;
};

int run_coverage(const CoverageArgs& a) {
    if (a.percent.has_value() == a.snr.has_value()) {
        std::cerr << "coverage: exactly one of --percent / --snr is required\n";
        return kExitArgs;
    }
    Manifest manifest("coverage",
                      a.manifest_path.empty() ? "coverage.manifest.json" : a.manifest_path);
    manifest.params() = {{"ps", a.params.ps_dbm},         {"pn", a.params.pn_dbm},
                         {"radius", a.params.radius_km},  {"sigma", a.params.shadow_sigma_db},
                         {"pl_a", a.params.pl_a},         {"pl_b", a.params.pl_b}};
    json out;
    if (a.percent) {
        const double fraction = *a.percent / 100.0;
        if (!(fraction > 0.0 && fraction < 1.0)) {
            std::cerr << "coverage: fraction must be in (0,1)\n";
            return kExitArgs;
        }
        manifest.params()["percent"] = *a.percent;
        out["percent"] = *a.percent;
        out["snr_db"] = hmdesign::snr_at_coverage(fraction, a.params);
    } else {
        manifest.params()["snr"] = *a.snr;
        out["snr_db"] = *a.snr;
        out["coverage_fraction"] = hmdesign::snr_exceed_prob(*a.snr, a.params);
    }
    std::cout << out.dump(2) << "\n";
    manifest.write();
    return kExitOk;
}

// ---- capacity ---------------------------------------------------------------

struct CapacityArgs {
    std::string constellation_path;
    double snr_h = 0.0;
    std::optional<double> snr_l;
    int nodes = 24;
    bool mc_check = false;
    int mc_samples = 200000;
    std::uint64_t seed = 1;
    std::string manifest_path;
};

int run_capacity(const CapacityArgs& a) {
    const hmdesign::Constellation c = hmdesign::load_constellation(a.constellation_path);
    if (a.snr_l && c.m_l() == 0) {
        std::cerr << "capacity: constellation has no LP bits, r_l unavailable\n";
        return kExitInput;
    }
    hmdesign::QuadratureSpec q;
    q.nodes_per_dim = a.nodes;
    q.mc_samples = a.mc_samples;
    q.seed = a.seed;

    const double power = c.average_power();
    if (!(power > 0.0)) {
        std::cerr << "capacity: constellation has zero power\n";
        return kExitInput;
    }
    // SNR is defined against the constellation's own average power
    const auto ch_h = hmdesign::ChannelSpec::from_snr_db(a.snr_h, power);

    json out;
    out["power"] = power;
    out["papr"] = c.papr();
    out["snr_h_db"] = a.snr_h;
    out["nodes"] = a.nodes;
    const std::vector<double> hp = hmdesign::per_bit_hp(c, ch_h, q);
    double r_h = 0.0;
    for (double v : hp) r_h += v;
    out["per_bit_hp"] = hp;
    out["r_h"] = r_h;
    if (a.snr_l) {
        const auto ch_l = hmdesign::ChannelSpec::from_snr_db(*a.snr_l, power);
        const std::vector<double> lp = hmdesign::per_bit_lp(c, ch_l, q);
        double r_l = 0.0;
        for (double v : lp) r_l += v;
        out["snr_l_db"] = *a.snr_l;
        out["per_bit_lp"] = lp;
        out["r_l"] = r_l;
        if (a.mc_check) {
            json mc = json::array();
            for (int j = 1; j <= c.m_l(); ++j) {
                const auto est = hmdesign::mc_bit_mi(c, ch_l, hmdesign::Layer::lp, j,
                                                     a.mc_samples, a.seed + 1000 + j);
                mc.push_back({{"bit", j}, {"value", est.value}, {"std_error", est.std_error}});
            }
            out["mc_lp"] = mc;
        }
    }
    if (a.mc_check) {
        json mc = json::array();
        for (int i = 1; i <= c.m_h(); ++i) {
            const auto est =
                hmdesign::mc_bit_mi(c, ch_h, hmdesign::Layer::hp, i, a.mc_samples, a.seed + i);
            mc.push_back({{"bit", i}, {"value", est.value}, {"std_error", est.std_error}});
        }
        out["mc_hp"] = mc;
    }
    std::cout << out.dump(2) << "\n";

    Manifest manifest("capacity",
                      a.manifest_path.empty() ? "capacity.manifest.json" : a.manifest_path);
    manifest.params() = {{"constellation", a.constellation_path},
                         {"snr_h", a.snr_h},
                         {"nodes", a.nodes},
                         {"mc_check", a.mc_check},
                         {"mc_samples", a.mc_samples}};
    if (a.snr_l) manifest.params()["snr_l"] = *a.snr_l;
    manifest.set_seed(a.seed);
    manifest.write();
    return kExitOk;
}

// ---- optimize / hqam --------------------------------------------------------

struct OptimizeArgs {
    int m_h = 2;
    int m_l = 2;
    double snr_h = 0.0;
    double snr_l = 0.0;
    double r_star = 0.0;
    double power = 1.0;
    std::optional<double> papr;
    std::string symmetry;  // "", "none" or "central"
    int starts = 20;
    std::uint64_t seed = 0;
    int nodes = 24;
    std::string out_path;
    std::string manifest_path;
};

json start_logs_json(const hmdesign::SolveResult& res) {
    json logs = json::array();
    for (const auto& log : res.start_logs) {
        logs.push_back({{"start", log.start_index},
                        {"start_found", log.start_found},
                        {"converged", log.converged},
                        {"r_l", log.r_l},
                        {"kkt_residual", log.kkt_residual},
                        {"iterations", log.iterations}});
    }
    return logs;
}

json result_json(const hmdesign::SolveResult& res) {
    return {{"r_h", res.r_h_achieved},     {"r_l", res.r_l_achieved},
            {"power", res.power_used},     {"papr", res.papr_used},
            {"kkt_residual", res.kkt_residual}, {"starts", start_logs_json(res)}};
}

int run_optimize(const OptimizeArgs& a, bool hqam_family) {
    if (a.r_star >= a.m_h) {
        std::cerr << "optimize: infeasible, r_star >= m_h exceeds the BICM rate bound ("
                  << a.m_h << " bits)\n";
        return kExitInfeasible;
    }
    hmdesign::ProblemSpec spec;
    spec.m_h = a.m_h;
    spec.m_l = a.m_l;
    spec.snr_h_db = a.snr_h;
    spec.snr_l_db = a.snr_l;
    spec.r_star = a.r_star;
    spec.power = a.power;
    spec.papr_limit = a.papr;
    if (a.symmetry == "central") {
        spec.symmetry = hmdesign::Symmetry::central;
    } else if (!a.symmetry.empty() && a.symmetry != "none") {
        std::cerr << "optimize: --symmetry must be 'none' or 'central'\n";
        return kExitArgs;
    }
    hmdesign::SolverConfig cfg;
    cfg.starts = a.starts;
    cfg.seed = a.seed;
    hmdesign::QuadratureSpec q;
    q.nodes_per_dim = a.nodes;

    const std::string command = hqam_family ? "hqam" : "optimize";
    Manifest manifest(command, a.manifest_path.empty()
                                   ? manifest_path_for(a.out_path, command)
                                   : a.manifest_path);
    manifest.params() = {{"mh", a.m_h},       {"ml", a.m_l},     {"snr_h", a.snr_h},
                         {"snr_l", a.snr_l},  {"rstar", a.r_star}, {"power", a.power},
                         {"starts", a.starts}, {"nodes", a.nodes}};
    if (a.papr) manifest.params()["papr"] = *a.papr;
    if (!a.symmetry.empty()) manifest.params()["symmetry"] = a.symmetry;
    if (!a.out_path.empty()) manifest.params()["out"] = a.out_path;
    manifest.set_seed(a.seed);

    json out;
    hmdesign::SolveResult res = [&]() {
        if (hqam_family) {
            auto [params, r] = hmdesign::optimize_hqam(spec, cfg, q);
            out["d1"] = params.d1;
            out["d2"] = params.d2;
            return r;
        }
        return hmdesign::solve(spec, cfg, q);
    }();
    out.update(result_json(res));

    if (!a.out_path.empty()) {
        hmdesign::save_constellation(res.constellation, a.out_path);
        manifest.add_output(a.out_path);
        out["constellation_file"] = a.out_path;
    }
    std::cout << out.dump(2) << "\n";
    manifest.write();
    return kExitOk;
}

// ---- region -----------------------------------------------------------------

struct RegionArgs {
    int m_h = 2;
    int m_l = 2;
    double snr_h = 0.0;
    double snr_l = 0.0;
    double power = 1.0;
    int points = 10;
    std::string schemes = "hm,hqam,td,hull";
    int starts = 8;
    std::uint64_t seed = 0;
    int nodes = 24;
    int td_grid = 200;
    std::string out_path;
    std::string manifest_path;
};

int run_region(const RegionArgs& a) {
    if (a.points < 2) {
        std::cerr << "region: --points must be >= 2\n";
        return kExitArgs;
    }
    std::vector<std::string> schemes;
    {
        std::string rest = a.schemes;
        while (!rest.empty()) {
            const size_t comma = rest.find(',');
            schemes.push_back(rest.substr(0, comma));
            if (comma == std::string::npos) break;
            rest = rest.substr(comma + 1);
        }
        for (const std::string& s : schemes) {
            if (s != "hm" && s != "hqam" && s != "td" && s != "hull") {
                std::cerr << "region: unknown scheme '" << s << "'\n";
                return kExitArgs;
            }
        }
    }

    hmdesign::ProblemSpec base;
    base.m_h = a.m_h;
    base.m_l = a.m_l;
    base.snr_h_db = a.snr_h;
    base.snr_l_db = a.snr_l;
    base.power = a.power;
    hmdesign::SolverConfig cfg;
    cfg.starts = a.starts;
    cfg.seed = a.seed;
    hmdesign::QuadratureSpec q;
    q.nodes_per_dim = a.nodes;

    std::filesystem::path base_path(a.out_path.empty() ? std::string("region.csv") : a.out_path);
    base_path.replace_extension();
    const std::string stem = base_path.string();

    Manifest manifest("region", a.manifest_path.empty() ? stem + ".manifest.json"
                                                        : a.manifest_path);
    manifest.params() = {{"mh", a.m_h},         {"ml", a.m_l},       {"snr_h", a.snr_h},
                         {"snr_l", a.snr_l},    {"power", a.power},  {"points", a.points},
                         {"schemes", a.schemes}, {"starts", a.starts}, {"nodes", a.nodes},
                         {"td_grid", a.td_grid}, {"out", a.out_path}};
    manifest.set_seed(a.seed);

    const std::vector<double> thresholds = hmdesign::default_thresholds(base, a.points, q);

    json summary;
    summary["thresholds"] = thresholds;
    int attempted = 0;
    int succeeded = 0;
    std::vector<hmdesign::RegionFrontier> computed;
    std::optional<hmdesign::RegionFrontier> hm, td;

    auto emit = [&](const hmdesign::RegionFrontier& fr) {
        const std::string path = stem + "_" + hmdesign::scheme_name(fr.scheme) + ".csv";
        write_file_atomic(path, hmdesign::frontier_csv(fr));
        manifest.add_output(path);
        summary["schemes"][hmdesign::scheme_name(fr.scheme)] = {
            {"file", path},
            {"points", fr.points.size()},
            {"skipped_thresholds", fr.skipped_thresholds}};
    };

    for (const std::string& s : schemes) {
        if (s == "hm") {
            hm = hmdesign::hm_frontier(base, thresholds, cfg, q);
            attempted += a.points;
            succeeded += static_cast<int>(hm->points.size());
            computed.push_back(*hm);
            emit(*hm);
        } else if (s == "hqam") {
            const auto fr = hmdesign::hqam_frontier(base, thresholds, cfg, q);
            attempted += a.points;
            succeeded += static_cast<int>(fr.points.size());
            computed.push_back(fr);
            emit(fr);
        } else if (s == "td") {
            td = hmdesign::td_frontier(a.snr_h, a.snr_l, a.power, a.td_grid);
            computed.push_back(*td);
            emit(*td);
        }
    }
    for (const std::string& s : schemes) {
        if (s == "hull" && !computed.empty()) {
            const auto fr = hmdesign::convex_hull(computed);
            emit(fr);
        }
    }

    // dominance witnesses: HM frontier points strictly above the TD frontier
    if (hm && td) {
        json witnesses = json::array();
        for (const auto& pt : hm->points) {
            if (hmdesign::dominates(pt.r_h, pt.r_l, *td, 0.0)) {
                double td_rl = 0.0;
                for (size_t i = 1; i < td->points.size(); ++i) {
                    if (pt.r_h <= td->points[i].r_h) {
                        const double span = td->points[i].r_h - td->points[i - 1].r_h;
                        const double t = span > 0 ? (pt.r_h - td->points[i - 1].r_h) / span : 0.0;
                        td_rl = td->points[i - 1].r_l + t * (td->points[i].r_l - td->points[i - 1].r_l);
                        break;
                    }
                }
                witnesses.push_back({{"r_star", pt.r_star},
                                     {"r_h", pt.r_h},
                                     {"r_l", pt.r_l},
                                     {"td_r_l", td_rl},
                                     {"gap", pt.r_l - td_rl}});
            }
        }
        summary["dominance_witnesses"] = witnesses;
    }

    const std::string summary_path = stem + "_summary.json";
    write_file_atomic(summary_path, summary.dump(2) + "\n");
    manifest.add_output(summary_path);
    manifest.write();
    std::cout << summary.dump(2) << "\n";

    if (attempted > 0 && succeeded * 2 < attempted) return kExitNumerical;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical-modulation constellation design for AWGN broadcast"};
    app.set_version_flag("--version", HMDESIGN_VERSION);
    app.require_subcommand(1);

    CoverageArgs cov;
    auto* cov_cmd = app.add_subcommand("coverage", "Percentile SNR of the shadowed path-loss model");
    cov_cmd->add_option("--percent", cov.percent, "Coverage percentage in (0, 100)");
    cov_cmd->add_option("--snr", cov.snr, "SNR in dB whose coverage fraction is wanted");
    cov_cmd->add_option("--ps", cov.params.ps_dbm, "Transmit power in dBm");
    cov_cmd->add_option("--pn", cov.params.pn_dbm, "Noise power in dBm");
    cov_cmd->add_option("--radius", cov.params.radius_km, "Cell radius in km");
    cov_cmd->add_option("--sigma", cov.params.shadow_sigma_db, "Shadowing sigma in dB");
    cov_cmd->add_option("--pl-a", cov.params.pl_a, "Path-loss intercept in dB");
    cov_cmd->add_option("--pl-b", cov.params.pl_b, "Path-loss slope in dB/decade");
    cov_cmd->add_option("--manifest", cov.manifest_path, "Manifest output path");

    CapacityArgs cap;
    auto* cap_cmd = app.add_subcommand("capacity", "BICM-SIC rates of a constellation file");
    cap_cmd->add_option("--constellation", cap.constellation_path, "Constellation JSON")
        ->required();
    cap_cmd->add_option("--snr-h", cap.snr_h, "HP design SNR in dB")->required();
    cap_cmd->add_option("--snr-l", cap.snr_l, "LP design SNR in dB");
    cap_cmd->add_option("--nodes", cap.nodes, "Gauss-Hermite nodes per dimension");
    cap_cmd->add_flag("--mc-check", cap.mc_check, "Also print Monte-Carlo estimates");
    cap_cmd->add_option("--mc-samples", cap.mc_samples, "Monte-Carlo sample count");
    cap_cmd->add_option("--seed", cap.seed, "Monte-Carlo seed");
    cap_cmd->add_option("--manifest", cap.manifest_path, "Manifest output path");

    OptimizeArgs opt;
    auto* opt_cmd = app.add_subcommand("optimize", "Optimize a free HM constellation");
    opt_cmd->add_option("--mh", opt.m_h, "HP bits per symbol")->required();
    opt_cmd->add_option("--ml", opt.m_l, "LP bits per symbol")->required();
    opt_cmd->add_option("--snr-h", opt.snr_h, "HP design SNR in dB")->required();
    opt_cmd->add_option("--snr-l", opt.snr_l, "LP design SNR in dB")->required();
    opt_cmd->add_option("--rstar", opt.r_star, "HP rate threshold r*")->required();
    opt_cmd->add_option("--power", opt.power, "Average power budget")->required();
    opt_cmd->add_option("--papr", opt.papr, "PAPR cap (>= 1)");
    opt_cmd->add_option("--symmetry", opt.symmetry, "none | central");
    opt_cmd->add_option("--starts", opt.starts, "Multi-start count");
    opt_cmd->add_option("--seed", opt.seed, "Start-sampling seed");
    opt_cmd->add_option("--nodes", opt.nodes, "Gauss-Hermite nodes per dimension");
    opt_cmd->add_option("--out", opt.out_path, "Optimized constellation JSON path")->required();
    opt_cmd->add_option("--manifest", opt.manifest_path, "Manifest output path");

    OptimizeArgs hq;
    auto* hq_cmd = app.add_subcommand("hqam", "Optimize the H-QAM scaling pair (d1, d2)");
    hq_cmd->add_option("--ml", hq.m_l, "LP bits per symbol (2 or 3)")->required();
    hq_cmd->add_option("--snr-h", hq.snr_h, "HP design SNR in dB")->required();
    hq_cmd->add_option("--snr-l", hq.snr_l, "LP design SNR in dB")->required();
    hq_cmd->add_option("--rstar", hq.r_star, "HP rate threshold r*")->required();
    hq_cmd->add_option("--power", hq.power, "Average power budget")->required();
    hq_cmd->add_option("--papr", hq.papr, "PAPR cap (>= 1)");
    hq_cmd->add_option("--starts", hq.starts, "Angle seed count");
    hq_cmd->add_option("--seed", hq.seed, "Seed");
    hq_cmd->add_option("--nodes", hq.nodes, "Gauss-Hermite nodes per dimension");
    hq_cmd->add_option("--out", hq.out_path, "Optimized constellation JSON path");
    hq_cmd->add_option("--manifest", hq.manifest_path, "Manifest output path");

    RegionArgs reg;
    auto* reg_cmd = app.add_subcommand("region", "Rate-region frontier sweep");
    reg_cmd->add_option("--mh", reg.m_h, "HP bits per symbol")->required();
    reg_cmd->add_option("--ml", reg.m_l, "LP bits per symbol")->required();
    reg_cmd->add_option("--snr-h", reg.snr_h, "HP design SNR in dB")->required();
    reg_cmd->add_option("--snr-l", reg.snr_l, "LP design SNR in dB")->required();
    reg_cmd->add_option("--power", reg.power, "Average power budget")->required();
    reg_cmd->add_option("--points", reg.points, "Number of r* thresholds")->required();
    reg_cmd->add_option("--schemes", reg.schemes, "Comma list of hm,hqam,td,hull");
    reg_cmd->add_option("--starts", reg.starts, "Multi-start count per threshold");
    reg_cmd->add_option("--seed", reg.seed, "Seed");
    reg_cmd->add_option("--nodes", reg.nodes, "Gauss-Hermite nodes per dimension");
    reg_cmd->add_option("--td-grid", reg.td_grid, "TD frontier grid size");
    reg_cmd->add_option("--out", reg.out_path, "Output CSV base path")->required();
    reg_cmd->add_option("--manifest", reg.manifest_path, "Manifest output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitArgs;
    }

    try {
        if (cov_cmd->parsed()) return run_coverage(cov);
        if (cap_cmd->parsed()) return run_capacity(cap);
        if (opt_cmd->parsed()) return run_optimize(opt, false);
        if (hq_cmd->parsed()) {
            OptimizeArgs args = hq;
            args.m_h = 2;
            return run_optimize(args, true);
        }
        if (reg_cmd->parsed()) return run_region(reg);
    } catch (const hmdesign::Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return map_error(e);
    }
    return kExitArgs;
}
