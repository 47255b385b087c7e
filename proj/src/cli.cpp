// SPDX-License-Identifier: Apache-2.0
//
// pathskel - path-skeleton beam tracking simulator for mobile mmWave links
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "pathskel/cli.hpp"
#include "pathskel/config.hpp"
#include "pathskel/text_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>

namespace pathskel
{

namespace
{

namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 42;

std::string utc_now()
{
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class OutputDir
{
  public:
    OutputDir(const std::string &dir, bool force) : dir_(dir)
    {
        if (dir.empty())
            throw std::invalid_argument("--out is required");
        if (fs::exists(dir_) && !fs::is_directory(dir_))
            throw std::invalid_argument("output path '" + dir + "' exists and is not a directory");
        if (fs::exists(dir_) && !fs::is_empty(dir_) && !force)
            throw std::invalid_argument("output directory '" + dir + "' is not empty (use --force to overwrite)");
        fs::create_directories(dir_);
    }

    std::ofstream open(const std::string &name)
    {
        std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
        files_.push_back(name);
        return f;
    }

    const fs::path &path() const { return dir_; }
    const std::vector<std::string> &files() const { return files_; }

  private:
    fs::path dir_;
    std::vector<std::string> files_;
};

struct Manifest
{
    std::string command;
    std::string config;
    std::uint64_t seed = 0;
    std::string started;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    void write(OutputDir &dir)
    {
        nlohmann::ordered_json j;
        j["tool"] = "pathskel";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["config"] = config;
        j["seed"] = seed;
        j["output_dir"] = dir.path().string();
        j["started_utc"] = started;
        j["finished_utc"] = utc_now();
        for (auto &[k, v] : extra.items())
            j[k] = v;
        auto files = dir.files();
        auto f = dir.open("manifest.json");
        j["files"] = files;
        f << j.dump(2) << '\n';
    }
};

std::uint64_t resolve_seed(const CommonOptions &opts, const ExperimentConfig &cfg)
{
    if (opts.seed)
        return *opts.seed;
    if (cfg.seed)
        return *cfg.seed;
    return kDefaultSeed;
}

ExperimentConfig load_resolved(const CommonOptions &opts, std::uint64_t &seed)
{
    if (opts.config.empty())
        throw std::invalid_argument("--config is required");
    auto cfg = load_config(opts.config);
    seed = resolve_seed(opts, cfg);
    cfg.scenario.seed = seed;
    cfg.maintenance.seed = seed;
    return cfg;
}

std::size_t total_locations(const PreparedScenario &prep)
{
    std::size_t m = 0;
    for (const auto &t : prep.trajectories)
        m += t.points.size();
    return m;
}

int default_u_max(const PreparedScenario &prep)
{
    return static_cast<int>(std::ceil(0.36 * static_cast<double>(total_locations(prep))));
}

// Runs `body`, mapping exceptions to exit codes with a one-line diagnostic.
int guarded(std::ostream &err, const std::function<int()> &body)
{
    try
    {
        return body();
    }
    catch (const ParseError &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    catch (const std::invalid_argument &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    catch (const InfeasibleBudget &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    catch (const std::exception &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

struct PolicyRow
{
    std::string name;
    std::string parameter;
    ScenarioReport report;
};

double max_abs(const std::vector<double> &v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

} // namespace

int cmd_run(const CommonOptions &opts, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] {
        Manifest manifest{"run", opts.config, 0, utc_now()};
        auto cfg = load_resolved(opts, manifest.seed);
        OutputDir dir(opts.out_dir, opts.force);
        const auto &s = cfg.scenario;
        auto prep = prepare_scenario(s);

        // Per-transmitter thresholds: explicit values win, the rest come from the search.
        std::map<int, double> thresholds;
        bool need_search = false;
        for (const auto &tx : s.txs)
        {
            if (cfg.threshold)
                thresholds[tx.id] = *cfg.threshold;
            else if (tx.threshold)
                thresholds[tx.id] = *tx.threshold;
            else
                need_search = true;
        }
        const int u_max = cfg.u_max.value_or(default_u_max(prep));
        if (need_search)
        {
            auto found = optimize_scenario_thresholds(prep, u_max);
            for (const auto &[id, search] : found)
                if (search && !thresholds.contains(id))
                    thresholds[id] = search->t_star;
        }
        for (const auto &tx : s.txs)
            if (!thresholds.contains(tx.id))
                thresholds[tx.id] = std::numeric_limits<double>::infinity(); // never serving

        std::vector<PolicyRow> rows;
        std::string t_desc;
        for (const auto &tx : s.txs)
            t_desc += (t_desc.empty() ? "" : " ") + std::to_string(tx.id) + ":" + format_number(thresholds[tx.id]);
        rows.push_back({"skeleton_distance", t_desc, run_prepared(prep, SkeletonDistancePolicy{1.0}, thresholds)});
        rows.push_back({"every_location", "", run_prepared(prep, EveryLocationPolicy{})});
        rows.push_back({"fixed_euclidean", format_number(cfg.euclidean_step_m),
                        run_prepared(prep, FixedEuclideanPolicy{cfg.euclidean_step_m})});
        rows.push_back({"never_update", "", run_prepared(prep, never_update())});

        std::size_t primary = 0;
        if (std::holds_alternative<EveryLocationPolicy>(s.policy))
            primary = 1;
        else if (std::holds_alternative<FixedEuclideanPolicy>(s.policy))
            primary = 2;
        else if (auto *p = std::get_if<SkeletonDistancePolicy>(&s.policy); p && std::isinf(p->threshold))
            primary = 3;

        for (std::size_t t = 0; t < prep.trajectories.size(); ++t)
        {
            auto f = dir.open(t == 0 ? "records.csv" : "records_" + std::to_string(t) + ".csv");
            write_records_csv(f, rows[primary].report.trajectories[t]);
        }

        // Exhaustive codebook search: best rate, but every pair is a pilot.
        const auto fb = make_grid_codebook(ArraySide::Tx, s.params.n_tx_antennas, cfg.tx_oversampling);
        const auto wb = make_grid_codebook(ArraySide::Rx, s.params.n_rx_antennas, cfg.rx_oversampling);
        const int exhaustive_pilots = static_cast<int>(fb.size() * wb.size());
        std::vector<std::vector<double>> exhaustive_rates;
        for (std::size_t t = 0; t < prep.trajectories.size(); ++t)
        {
            std::vector<double> r;
            for (const auto &res : exhaustive_benchmark(prep, t, fb, wb))
                r.push_back(res.rate_bps);
            exhaustive_rates.push_back(std::move(r));
        }

        {
            auto f = dir.open("summary.csv");
            f << "policy,parameter,U,sum_rate_bps,mean_rate_bps,throughput_bits,pilots,overhead_exceeded,"
                 "max_abs_diff_nr\n";
            for (const auto &row : rows)
            {
                double sum = 0.0, bits = 0.0, mx = 0.0;
                long long pilots = 0, n = 0, exceeded = 0;
                for (const auto &tr : row.report.trajectories)
                {
                    for (const auto &r : tr.records)
                    {
                        sum += r.rate_bps;
                        pilots += r.pilots_sent;
                        auto tp = throughput_bits(r.rate_bps, cfg.frame, r.pilots_sent, r.updated);
                        bits += tp.bits;
                        exceeded += tp.overhead_exceeded ? 1 : 0;
                        ++n;
                    }
                    mx = std::max(mx, max_abs(tr.diff_nr));
                }
                f << row.name << ',' << row.parameter << ',' << row.report.total_queries() << ','
                  << format_number(sum) << ',' << format_number(n ? sum / static_cast<double>(n) : 0.0) << ','
                  << format_number(bits) << ',' << pilots << ',' << exceeded << ',' << format_number(mx) << '\n';
            }
            double sum = 0.0, bits = 0.0, mx = 0.0;
            long long n = 0, exceeded = 0;
            for (const auto &rates : exhaustive_rates)
            {
                for (double r : rates)
                {
                    sum += r;
                    auto tp = throughput_bits(r, cfg.frame, exhaustive_pilots, false);
                    bits += tp.bits;
                    exceeded += tp.overhead_exceeded ? 1 : 0;
                    ++n;
                }
                mx = std::max(mx, max_abs(diff_nr(rates)));
            }
            f << "exhaustive," << fb.size() << 'x' << wb.size() << ",0," << format_number(sum) << ','
              << format_number(n ? sum / static_cast<double>(n) : 0.0) << ',' << format_number(bits) << ','
              << n * exhaustive_pilots << ',' << exceeded << ',' << format_number(mx) << '\n';
        }

        {
            auto f = dir.open("diffnr.csv");
            f << "trajectory,index";
            for (const auto &row : rows)
                f << ',' << row.name;
            f << ",exhaustive\n";
            for (std::size_t t = 0; t < prep.trajectories.size(); ++t)
            {
                auto ex = diff_nr(exhaustive_rates[t]);
                for (std::size_t i = 0; i < ex.size(); ++i)
                {
                    f << t << ',' << i + 1;
                    for (const auto &row : rows)
                        f << ',' << format_number(row.report.trajectories[t].diff_nr[i]);
                    f << ',' << format_number(ex[i]) << '\n';
                }
            }
        }

        {
            auto f = dir.open("thresholds.csv");
            f << "tx_id,threshold,U\n";
            for (const auto &tx : s.txs)
                f << tx.id << ',' << format_number(thresholds[tx.id]) << ','
                  << rows[0].report.queries_per_tx.at(tx.id) << '\n';
        }

        manifest.extra["u_max"] = u_max;
        manifest.extra["locations"] = total_locations(prep);
        manifest.write(dir);

        out << "locations " << total_locations(prep) << ", U_max " << u_max << '\n';
        for (const auto &row : rows)
            out << row.name << ": U = " << row.report.total_queries() << '\n';
        out << "wrote " << dir.path().string() << '\n';
        return kExitOk;
    });
}

int cmd_optimize_threshold(const CommonOptions &opts, std::optional<int> u_max_flag, std::ostream &out,
                           std::ostream &err)
{
    return guarded(err, [&] {
        Manifest manifest{"optimize-threshold", opts.config, 0, utc_now()};
        auto cfg = load_resolved(opts, manifest.seed);
        if (u_max_flag && *u_max_flag < 1)
            throw std::invalid_argument("--u-max must be at least 1");
        OutputDir dir(opts.out_dir, opts.force);
        auto prep = prepare_scenario(cfg.scenario);
        const int u_max = u_max_flag.value_or(cfg.u_max.value_or(default_u_max(prep)));
        auto found = optimize_scenario_thresholds(prep, u_max);

        {
            auto f = dir.open("tgrid.csv");
            f << "tx_id,T,U,sum_rate_bps,feasible\n";
            for (const auto &[id, search] : found)
                if (search)
                    for (const auto &ev : search->grid)
                        f << id << ',' << format_number(ev.threshold) << ',' << ev.queries << ','
                          << format_number(ev.sum_rate_bps) << ',' << (ev.feasible ? 1 : 0) << '\n';
        }
        {
            auto f = dir.open("tstar.csv");
            f << "tx_id,t_star,U,sum_rate_bps\n";
            for (const auto &[id, search] : found)
            {
                if (!search)
                    continue;
                f << id << ',' << format_number(search->t_star) << ',' << search->queries << ','
                  << format_number(search->sum_rate_bps) << '\n';
                out << "tx " << id << ": T* = " << format_number(search->t_star) << " (U = " << search->queries
                    << ")\n";
            }
        }
        manifest.extra["u_max"] = u_max;
        manifest.write(dir);
        return kExitOk;
    });
}

int cmd_maintenance(const CommonOptions &opts, const std::vector<int> &user_counts, std::optional<int> trials,
                    std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] {
        Manifest manifest{"maintenance", opts.config, 0, utc_now()};
        auto cfg = load_resolved(opts, manifest.seed);
        if (cfg.maintenance.routes.empty())
            throw std::invalid_argument(cfg.path + ": no 'maintenance_route' given");
        if (trials && *trials < 1)
            throw std::invalid_argument("--trials must be at least 1");
        const auto counts = user_counts.empty() ? cfg.maintenance_users : user_counts;
        for (int c : counts)
            if (c < 1)
                throw std::invalid_argument("user counts must be at least 1");
        OutputDir dir(opts.out_dir, opts.force);

        const auto &s = cfg.scenario;
        RayEnvironment finder(s.map, s.txs.front().location, s.params, s.environment);
        auto rows = overhead_vs_users(counts, cfg.maintenance, trials.value_or(cfg.maintenance_trials), finder,
                                      [&](int n, int trial, const MaintenanceStats &stats) {
                                          auto rf = dir.open("requests_n" + std::to_string(n) + "_t" +
                                                             std::to_string(trial) + ".csv");
                                          write_requests_csv(rf, stats);
                                      });

        auto f = dir.open("overhead.csv");
        f << "n_users,mean_C,std_C\n";
        for (const auto &r : rows)
        {
            f << r.n_users << ',' << format_number(r.mean_c) << ',' << format_number(r.std_c) << '\n';
            out << r.n_users << " users: mean C = " << format_number(r.mean_c) << '\n';
        }
        f.close();
        manifest.extra["trials"] = trials.value_or(cfg.maintenance_trials);
        manifest.write(dir);
        return kExitOk;
    });
}

int cmd_trace(const CommonOptions &opts, int tx_index, double x, double y, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] {
        std::uint64_t seed = 0;
        auto cfg = load_resolved(opts, seed);
        const auto &s = cfg.scenario;
        if (tx_index < 0 || static_cast<std::size_t>(tx_index) >= s.txs.size())
            throw std::invalid_argument("--tx " + std::to_string(tx_index) + " is out of range (0.." +
                                        std::to_string(s.txs.size() - 1) + ")");
        const Vec2 rx{x, y};
        if (!s.map->bounds().contains(rx))
            throw std::invalid_argument("location (" + format_number(x) + ", " + format_number(y) +
                                        ") is outside the map bounds");
        RayEnvironment env(s.map, s.txs[static_cast<std::size_t>(tx_index)].location, s.params, s.environment);
        const auto model = s.params.propagation();
        out << "kind,order,length_m,aod_deg,aoa_deg,penetration_db,reflection_db,pathloss_db\n";
        for (const auto &r : env.rays(rx))
        {
            out << to_string(r.kind) << ',' << r.reflection_order << ',' << format_number(r.length_m) << ','
                << format_number(r.aod_deg) << ',' << format_number(r.aoa_deg) << ','
                << format_number(r.penetration_loss_db) << ',' << format_number(r.reflection_loss_db) << ',';
            if (r.length_m >= 1.0)
                out << format_number(pathloss_db(r, model));
            out << '\n';
        }
        return kExitOk;
    });
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Path-skeleton beam tracking simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CommonOptions opts;
    auto add_common = [&](CLI::App *sub, bool with_out) {
        sub->add_option("--config", opts.config, "Scenario config file")->required();
        if (with_out)
        {
            sub->add_option("--out", opts.out_dir, "Output directory")->required();
            sub->add_flag("--force", opts.force, "Overwrite a non-empty output directory");
        }
        sub->add_option("--seed", opts.seed, "Seed (overrides the config)");
    };

    auto *run = app.add_subcommand("run", "Track every trajectory under all update policies");
    add_common(run, true);

    std::optional<int> u_max;
    auto *opt = app.add_subcommand("optimize-threshold", "Search the skeleton-distance threshold under a budget");
    add_common(opt, true);
    opt->add_option("--u-max", u_max, "Query budget (U <= u_max - 1)");

    std::string users;
    std::optional<int> trials;
    auto *maint = app.add_subcommand("maintenance", "Database maintenance overhead versus user count");
    add_common(maint, true);
    maint->add_option("--users", users, "Comma-separated user counts, e.g. 10,50,100");
    maint->add_option("--trials", trials, "Trials per user count");

    int tx_index = 0;
    double x = 0.0, y = 0.0;
    auto *trace = app.add_subcommand("trace", "Print the ray paths between one Tx and a point");
    add_common(trace, false);
    trace->add_option("--tx", tx_index, "Transmitter index in config order")->required();
    trace->add_option("--x", x, "Receiver x [m]")->required();
    trace->add_option("--y", y, "Receiver y [m]")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        if (e.get_exit_code() == 0)
        {
            app.exit(e, out, err);
            return kExitOk;
        }
        app.exit(e, out, err);
        return kExitValidation;
    }

    if (*run)
        return cmd_run(opts, out, err);
    if (*opt)
        return cmd_optimize_threshold(opts, u_max, out, err);
    if (*maint)
    {
        std::vector<int> counts;
        if (!users.empty())
        {
            for (const auto &tok : split(users, ','))
            {
                long long n = 0;
                if (!parse_int(trim(tok), n) || n < 1)
                {
                    err << "error: invalid --users entry '" << tok << "'\n";
                    return kExitValidation;
                }
                counts.push_back(static_cast<int>(n));
            }
        }
        return cmd_maintenance(opts, counts, trials, out, err);
    }
    return cmd_trace(opts, tx_index, x, y, out, err);
}

} // namespace pathskel
