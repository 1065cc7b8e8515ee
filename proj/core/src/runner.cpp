#include "invar/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace invar {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions& opts) {
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.horizon) cfg.horizon = *opts.horizon;
    if (opts.dt) cfg.dt_sim = *opts.dt;
    return cfg;
}

void write_plot_csvs(const RunResult& result, const RunSpec& spec, const fs::path& dir) {
    // Trajectory against the safe-set boundaries in the selected plane.
    {
        std::ofstream f(dir / "plot_trajectory_xy.csv");
        f << "t,px,py,h\n";
        for (const auto& r : result.log.rows)
            f << fmt(r.t) << ',' << fmt(r.x(0)) << ',' << fmt(r.x(1)) << ',' << fmt(r.h) << '\n';
    }
    {
        std::ofstream f(dir / "plot_boundaries.csv");
        f << "angle,bx,by,mx,my\n";
        // Outer circle h = 0 and inner activation circle h = mu_x.
        const double r_outer = std::sqrt(std::max(0.0, spec.controller.h.value(
                                                            Eigen::VectorXd::Zero(spec.plant.n))));
        const double mu = spec.controller.gains.mu_x;
        const double r2_inner = r_outer * r_outer - mu;
        const double r_inner = r2_inner > 0.0 ? std::sqrt(r2_inner) : 0.0;
        for (int i = 0; i <= 256; ++i) {
            const double a = 2.0 * M_PI * static_cast<double>(i) / 256.0;
            f << fmt(a) << ',' << fmt(r_outer * std::cos(a)) << ',' << fmt(r_outer * std::sin(a))
              << ',' << fmt(r_inner * std::cos(a)) << ',' << fmt(r_inner * std::sin(a)) << '\n';
        }
    }
    {
        std::ofstream f(dir / "plot_e2.csv");
        f << "t,e2_norm,h_v\n";
        for (const auto& r : result.log.rows)
            f << fmt(r.t) << ',' << fmt(r.e2_norm) << ',' << fmt(r.h_v) << '\n';
    }
    {
        std::ofstream f(dir / "plot_rho1.csv");
        f << "t,rho1,j\n";
        for (const auto& r : result.log.rows)
            f << fmt(r.t) << ',' << (r.rho.empty() ? '1' : r.rho[0]) << ',' << r.j << '\n';
    }
    {
        std::ofstream f(dir / "plot_inputs.csv");
        f << "t";
        for (int i = 1; i <= result.log.m; ++i) f << ",u_" << i;
        f << '\n';
        for (const auto& r : result.log.rows) {
            f << fmt(r.t);
            for (Eigen::Index i = 0; i < r.u.size(); ++i) f << ',' << fmt(r.u(i));
            f << '\n';
        }
    }
    {
        std::ofstream f(dir / "plot_ghat_err.csv");
        f << "t,ghat_err,wg_max\n";
        for (const auto& r : result.log.rows)
            f << fmt(r.t) << ',' << fmt(r.ghat_err) << ',' << fmt(r.wg_max) << '\n';
    }
}

} // namespace

std::string default_output_dir(const ScenarioConfig& cfg, const RunOptions& opts) {
    if (opts.out_dir) return *opts.out_dir;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv("INVAR_OUT_DIR"))
        return std::string(env) + "/" + cfg.name;
    return "out/" + cfg.name;
}

std::string summary_text(const RunSummary& s) {
    std::ostringstream os;
    os << "scenario=" << s.scenario << '\n';
    os << "status=" << (s.aborted ? "aborted" : s.violation ? "violation" : "ok") << '\n';
    if (s.aborted) os << "abort_reason=" << s.abort_reason << '\n';
    os << "rows=" << s.rows << '\n';
    os << "min_h=" << fmt(s.min_h) << '\n';
    os << "min_h_v=" << fmt(s.min_h_v) << '\n';
    os << "max_e2=" << fmt(s.max_e2) << '\n';
    os << "max_j=" << s.max_j << '\n';
    for (std::size_t i = 0; i < s.drop_counts.size(); ++i)
        if (s.drop_counts[i] || s.restore_counts[i])
            os << "switches_rho" << (i + 1) << "=" << s.drop_counts[i] << "/"
               << s.restore_counts[i] << '\n';
    os << "mean_ghat_err=" << fmt(s.mean_ghat_err) << '\n';
    os << "final_ghat_err=" << fmt(s.final_ghat_err) << '\n';
    os << "estimator_violations=" << s.estimator_violations << '\n';
    os << "wall_ms=" << fmt(s.wall_ms) << '\n';
    return os.str();
}

std::string aggregate_header() {
    return "scenario,status,rows,min_h,min_h_v,max_e2,max_j,drops_total,restores_total,"
           "mean_ghat_err,final_ghat_err,estimator_violations";
}

std::string aggregate_row(const RunSummary& s) {
    int drops = 0, restores = 0;
    for (int d : s.drop_counts) drops += d;
    for (int r : s.restore_counts) restores += r;
    std::ostringstream os;
    os << s.scenario << ',' << (s.aborted ? "aborted" : s.violation ? "violation" : "ok") << ','
       << s.rows << ',' << fmt(s.min_h) << ',' << fmt(s.min_h_v) << ',' << fmt(s.max_e2) << ','
       << s.max_j << ',' << drops << ',' << restores << ',' << fmt(s.mean_ghat_err) << ','
       << fmt(s.final_ghat_err) << ',' << s.estimator_violations;
    return os.str();
}

void write_run_artifacts(const RunResult& result, const RunSpec& spec, const std::string& dir,
                         bool plots) {
    fs::create_directories(dir);
    {
        std::ofstream f(fs::path(dir) / "trajectory.csv");
        write_trajectory_csv(f, result.log);
    }
    {
        std::ofstream f(fs::path(dir) / "events.csv");
        write_events_csv(f, result.events);
    }
    {
        std::ofstream f(fs::path(dir) / "summary.txt");
        f << summary_text(result.summary);
    }
    if (plots) write_plot_csvs(result, spec, dir);
}

int cmd_validate(const std::string& path, std::ostream& report) {
    ScenarioConfig cfg;
    try {
        cfg = load_scenario(path);
    } catch (const Error& e) {
        report << "parse error: " << e.what() << '\n';
        return kExitInvalid;
    }
    bool all = true;
    for (const auto& c : validate_scenario(cfg)) {
        report << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": " << c.detail << '\n';
        all = all && c.pass;
    }
    report << (all ? "scenario valid" : "scenario INVALID") << '\n';
    return all ? kExitOk : kExitInvalid;
}

int cmd_run(const std::string& path, const RunOptions& opts, std::ostream& report) {
    ScenarioConfig cfg;
    try {
        cfg = apply_overrides(load_scenario(path), opts);
    } catch (const Error& e) {
        report << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    RunSpec spec;
    try {
        spec = build_run_spec(cfg);
    } catch (const Error& e) {
        report << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    spec.safety_enabled = !opts.no_safety;

    RunResult result;
    try {
        result = run_closed_loop(spec);
    } catch (const Error& e) {
        report << "run failed: " << e.what() << '\n';
        return kExitRunError;
    }
    const std::string dir = default_output_dir(cfg, opts);
    write_run_artifacts(result, spec, dir, opts.plots);
    report << summary_text(result.summary);
    report << "artifacts=" << dir << '\n';
    if (result.summary.aborted) return kExitRunError;
    return result.summary.violation ? kExitSafetyViolation : kExitOk;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    const fs::path p(pattern);
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    const std::string mask = p.filename().string();

    // Filename glob with '*' and '?'.
    auto matches = [](const std::string& name, const std::string& mask) {
        std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) {
            while (j < mask.size()) {
                if (mask[j] == '*') {
                    for (std::size_t k = i; k <= name.size(); ++k)
                        if (rec(k, j + 1)) return true;
                    return false;
                }
                if (i >= name.size()) return false;
                if (mask[j] != '?' && mask[j] != name[i]) return false;
                ++i;
                ++j;
            }
            return i == name.size();
        };
        return rec(0, 0);
    };

    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (matches(entry.path().filename().string(), mask))
            out.push_back(entry.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_batch(const std::string& pattern, int jobs, const RunOptions& opts, std::ostream& report) {
    const std::vector<std::string> paths = expand_glob(pattern);
    if (paths.empty()) {
        report << "error: no scenario matches '" << pattern << "'\n";
        return kExitInvalid;
    }
    if (jobs < 1) jobs = 1;

    std::vector<std::string> rows(paths.size());
    std::vector<int> codes(paths.size(), kExitOk);
    std::mutex mtx;
    std::size_t next = 0;

    auto worker = [&]() {
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(mtx);
                if (next >= paths.size()) return;
                idx = next++;
            }
            const std::string& path = paths[idx];
            std::string name = fs::path(path).stem().string();
            try {
                ScenarioConfig cfg = apply_overrides(load_scenario(path), opts);
                RunSpec spec = build_run_spec(cfg);
                spec.safety_enabled = !opts.no_safety;
                RunResult result = run_closed_loop(spec);
                RunOptions per_run;
                if (opts.out_dir) per_run.out_dir = *opts.out_dir + "/" + name;
                const std::string dir = default_output_dir(cfg, per_run);
                write_run_artifacts(result, spec, dir, opts.plots);
                rows[idx] = aggregate_row(result.summary);
                codes[idx] = result.summary.aborted        ? kExitRunError
                             : result.summary.violation    ? kExitSafetyViolation
                                                           : kExitOk;
            } catch (const std::exception& e) {
                std::string what = e.what();
                std::replace(what.begin(), what.end(), ',', ';');
                std::replace(what.begin(), what.end(), '\n', ' ');
                rows[idx] = name + ",error,0,nan,nan,nan,0,0,0,nan,nan,0";
                codes[idx] = kExitRunError;
            }
        }
    };

    std::vector<std::thread> pool;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), paths.size());
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    report << aggregate_header() << '\n';
    for (const auto& r : rows) report << r << '\n';

    if (opts.out_dir) {
        fs::create_directories(*opts.out_dir);
        std::ofstream f(fs::path(*opts.out_dir) / "aggregate.csv");
        f << aggregate_header() << '\n';
        for (const auto& r : rows) f << r << '\n';
    }

    int worst = kExitOk;
    for (int c : codes) worst = std::max(worst, c);
    return worst;
}

} // namespace invar
