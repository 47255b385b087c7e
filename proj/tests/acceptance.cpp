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


// Acceptance checks A1..A9. Prints one PASS/FAIL line per criterion; exit
// status is non-zero when any selected criterion fails.

#include "pathskel/beamforming.hpp"
#include "pathskel/channel.hpp"
#include "pathskel/cli.hpp"
#include "pathskel/config.hpp"
#include "pathskel/database.hpp"
#include "pathskel/geometry.hpp"
#include "pathskel/random.hpp"
#include "pathskel/scenario.hpp"
#include "pathskel/text_io.hpp"
#include "pathskel/tracking.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace pathskel;
namespace fs = std::filesystem;

namespace
{

const std::string kData = PATHSKEL_DATA_DIR;
constexpr double kPi = std::numbers::pi;

struct Verdict
{
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) { return format_number(v); }

double rad(double deg) { return deg * kPi / 180.0; }

double mean_rate(const ScenarioReport &r)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &t : r.trajectories)
        for (const auto &rec : t.records)
        {
            sum += rec.rate_bps;
            ++n;
        }
    return sum / static_cast<double>(n);
}

double max_abs_diff(const ScenarioReport &r)
{
    double m = 0.0;
    for (const auto &t : r.trajectories)
        for (double d : t.diff_nr)
            m = std::max(m, std::abs(d));
    return m;
}

// A1: single path, beams toward the strongest (only) path
Verdict a1()
{
    Rng rng(derive_seed(2024, {1}));
    std::uniform_real_distribution<double> angle(0.0, 360.0), pl(60.0, 140.0), fd(-300.0, 300.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i)
    {
        PathParams p;
        p.aoa_deg = angle(rng);
        p.aod_deg = angle(rng);
        p.pathloss_db = pl(rng);
        p.doppler_hz = fd(rng);
        p.gain = sample_gain(p.pathloss_db, rng);
        auto h = synthesize_channel(std::span(&p, 1), 8, 8, 1e-3);
        PathSkeleton ps{{0, 0}, {{p.aoa_deg, p.aod_deg, std::pow(10.0, -p.pathloss_db / 20.0)}}};
        auto g = measure_skeleton_gains(h, ps);
        auto beams = strongest_path_beams(ps, g, 8, 8);
        double got = link_gain(h, beams.f, beams.w);
        double want = 64.0 * std::norm(p.gain);
        worst = std::max(worst, std::abs(got - want) / want);
    }
    return {worst <= 1e-9, "200 channels, worst relative error " + fmt(worst)};
}

double gain_by_hand(const ChannelMatrix &h, double tx_deg, double rx_deg)
{
    const int nt = h.n_tx(), nr = h.n_rx();
    std::complex<double> acc = 0.0;
    for (int r = 0; r < nr; ++r)
        for (int c = 0; c < nt; ++c)
        {
            auto w = std::polar(1.0 / std::sqrt(double(nr)), -kPi * r * std::sin(rad(rx_deg)));
            auto f = std::polar(1.0 / std::sqrt(double(nt)), -kPi * c * std::sin(rad(tx_deg)));
            acc += std::conj(w) * h(r, c) * f;
        }
    return std::norm(acc);
}

// A2: codebook search vs a plain double loop
Verdict a2()
{
    Rng rng(derive_seed(2024, {2}));
    std::normal_distribution<double> n01(0.0, 1.0);
    auto fb = make_grid_codebook(ArraySide::Tx, 8, 8);
    auto wb = make_grid_codebook(ArraySide::Rx, 8, 8);
    if (fb.size() != 64 || wb.size() != 64)
        return {false, "codebooks are not 64 entries"};
    const RadioParams radio{1.0, 1.0, 1.0};
    int agree = 0;
    for (int i = 0; i < 100; ++i)
    {
        Eigen::MatrixXcd m(8, 8);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c)
                m(r, c) = {n01(rng), n01(rng)};
        ChannelMatrix h(m);
        double best = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t a = 0; a < fb.size(); ++a)
            for (std::size_t b = 0; b < wb.size(); ++b)
            {
                double g = gain_by_hand(h, fb.angles_deg[a], wb.angles_deg[b]);
                if (g > best)
                {
                    best = g;
                    bi = a;
                    bj = b;
                }
            }
        auto res = exhaustive_search(h, fb, wb, radio);
        if (res.pair.tx_angle_deg == fb.angles_deg[bi] && res.pair.rx_angle_deg == wb.angles_deg[bj])
            ++agree;
    }
    return {agree == 100, std::to_string(agree) + "/100 argmax pairs agree"};
}

// A3: scenario 1, T* under U_max = ceil(0.36 M)
Verdict a3()
{
    auto cfg = load_config(kData + "/scenario1/run.cfg");
    auto prep = prepare_scenario(cfg.scenario);
    std::size_t m = 0;
    for (const auto &t : prep.trajectories)
        m += t.points.size();
    const int u_max = static_cast<int>(std::ceil(0.36 * static_cast<double>(m)));
    auto found = optimize_scenario_thresholds(prep, u_max);
    std::map<int, double> thresholds;
    for (const auto &[id, s] : found)
        if (s)
            thresholds[id] = s->t_star;
    auto sd = run_prepared(prep, SkeletonDistancePolicy{1.0}, thresholds);
    auto el = run_prepared(prep, EveryLocationPolicy{});
    double ratio = mean_rate(sd) / mean_rate(el);
    int u = sd.total_queries();
    return {m == 140 && ratio >= 0.95 && u <= u_max - 1,
            "M " + std::to_string(m) + ", U " + std::to_string(u) + " (U_max " + std::to_string(u_max) +
                "), mean rate " + fmt(ratio) + " of every-location"};
}

// A4: wall fixture, skeleton distance vs fixed step at no larger budget
Verdict a4()
{
    auto cfg = load_config(kData + "/wall/run.cfg");
    auto prep = prepare_scenario(cfg.scenario);
    auto fe = run_prepared(prep, FixedEuclideanPolicy{cfg.euclidean_step_m});
    const int u_fe = fe.total_queries();
    auto found = optimize_scenario_thresholds(prep, u_fe + 1);
    std::map<int, double> thresholds;
    for (const auto &[id, s] : found)
        if (s)
            thresholds[id] = s->t_star;
    auto sd = run_prepared(prep, SkeletonDistancePolicy{1.0}, thresholds);
    double fe_max = max_abs_diff(fe), sd_max = max_abs_diff(sd);
    double ratio = fe_max / sd_max;
    return {sd.total_queries() <= u_fe && ratio >= 2.0,
            "U " + std::to_string(sd.total_queries()) + " vs " + std::to_string(u_fe) + ", max|DiffNR| FE " +
                fmt(fe_max) + " / SD " + fmt(sd_max) + " = " + fmt(ratio)};
}

// A5: U(T) over the 64-point grid
Verdict a5()
{
    int violations = 0, grids = 0;
    std::size_t points = 0;
    for (const char *fixture : {"/scenario1/run.cfg", "/wall/run.cfg", "/handover/run.cfg"})
    {
        auto cfg = load_config(kData + fixture);
        auto prep = prepare_scenario(cfg.scenario);
        for (const auto &[id, s] : optimize_scenario_thresholds(prep, 1 << 20))
        {
            if (!s)
                continue;
            ++grids;
            points = std::max(points, s->grid.size());
            for (std::size_t i = 1; i < s->grid.size(); ++i)
            {
                if (!(s->grid[i].threshold > s->grid[i - 1].threshold))
                    ++violations;
                if (s->grid[i].queries > s->grid[i - 1].queries)
                    ++violations;
            }
            if (s->grid.size() != 64)
                ++violations;
        }
    }
    return {violations == 0 && grids >= 3,
            std::to_string(grids) + " grids of " + std::to_string(points) + " points, " +
                std::to_string(violations) + " violations"};
}

// A6 and the conservation half of A7 share one sweep
struct Sweep
{
    std::vector<OverheadRow> rows;
    long long sum_c = 0;
    long long dispatches = 0;
    int mismatched_trials = 0;
};

const Sweep &maintenance_sweep()
{
    static const Sweep sweep = [] {
        Sweep s;
        auto cfg = load_config(kData + "/maintenance/run.cfg");
        const auto &sc = cfg.scenario;
        RayEnvironment finder(sc.map, sc.txs.front().location, sc.params, sc.environment);
        s.rows = overhead_vs_users(cfg.maintenance_users, cfg.maintenance, cfg.maintenance_trials, finder,
                                   [&](int, int, const MaintenanceStats &st) {
                                       long long c = 0;
                                       for (const auto &[id, n] : st.requests)
                                           c += n;
                                       s.sum_c += c;
                                       s.dispatches += st.dispatches;
                                       if (c != st.dispatches)
                                           ++s.mismatched_trials;
                                   });
        return s;
    }();
    return sweep;
}

Verdict a6()
{
    const auto &s = maintenance_sweep();
    std::string detail = "mean_C";
    int inversions = 0;
    for (std::size_t i = 0; i < s.rows.size(); ++i)
    {
        detail += " " + std::to_string(s.rows[i].n_users) + ":" + fmt(s.rows[i].mean_c);
        if (i > 0 && !(s.rows[i].mean_c < s.rows[i - 1].mean_c))
            ++inversions;
    }
    bool expected_counts = s.rows.size() == 4 && s.rows.front().n_users == 10 && s.rows.back().n_users == 100;
    bool ratio = expected_counts && s.rows.back().mean_c < 0.25 * s.rows.front().mean_c;
    detail += ", inversions " + std::to_string(inversions);
    return {expected_counts && inversions <= 1 && ratio, detail};
}

struct TempDir
{
    fs::path path;
    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("pathskel_acc_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args, std::string &stdout_text)
{
    args.insert(args.begin(), "pathskel");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    stdout_text = out.str();
    return code;
}

// file name -> hash, manifest left out (it carries wall-clock times)
std::map<std::string, std::size_t> hash_dir(const fs::path &dir)
{
    std::map<std::string, std::size_t> h;
    for (const auto &e : fs::directory_iterator(dir))
        if (e.path().filename() != "manifest.json")
            h[e.path().filename().string()] = std::hash<std::string>{}(slurp(e.path()));
    return h;
}

Verdict a7()
{
    const auto &s = maintenance_sweep();
    bool conserved = s.mismatched_trials == 0 && s.sum_c == s.dispatches && s.dispatches > 0;
    std::string detail = "sum C " + std::to_string(s.sum_c) + " = dispatches " + std::to_string(s.dispatches);

    TempDir tmp;
    struct Command
    {
        std::string name;
        std::vector<std::string> args;
        bool writes_files;
    };
    const std::vector<Command> commands = {
        {"run", {"run", "--config", kData + "/handover/run.cfg"}, true},
        {"optimize-threshold", {"optimize-threshold", "--config", kData + "/scenario1/run.cfg"}, true},
        {"maintenance", {"maintenance", "--config", kData + "/maintenance/run.cfg"}, true},
        {"trace", {"trace", "--config", kData + "/trace/mirror.cfg", "--tx", "0", "--x", "40", "--y", "20"}, false},
    };
    int identical = 0;
    for (const auto &c : commands)
    {
        std::map<std::string, std::size_t> hashes[2];
        bool ok = true;
        for (int rep = 0; rep < 2; ++rep)
        {
            auto args = c.args;
            auto out_dir = tmp.path / (c.name + std::to_string(rep));
            if (c.writes_files)
            {
                args.push_back("--out");
                args.push_back(out_dir.string());
            }
            std::string text;
            ok = ok && cli(args, text) == kExitOk;
            if (!c.writes_files)
                hashes[rep]["stdout"] = std::hash<std::string>{}(text);
            else if (ok)
                hashes[rep] = hash_dir(out_dir);
        }
        if (ok && !hashes[0].empty() && hashes[0] == hashes[1])
            ++identical;
        else
            detail += ", " + c.name + " differs";
    }
    detail += ", " + std::to_string(identical) + "/" + std::to_string(commands.size()) + " commands reproducible";
    return {conserved && identical == static_cast<int>(commands.size()), detail};
}

// angle between v and the wall direction, folded to [0, 90]
double angle_to_line_deg(Vec2 v, Vec2 line)
{
    double c = std::abs(dot(v, line)) / (norm(v) * norm(line));
    return std::acos(std::min(1.0, c)) * 180.0 / kPi;
}

double angle_gap_deg(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
}

Verdict a8()
{
    Rng rng(derive_seed(2024, {8}));
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    const Rect bounds{{-100.0, -100.0}, {100.0, 100.0}};

    // specular law at every bounce
    int fixtures = 0, attempts = 0, bad_reflect = 0;
    double worst_reflect = 0.0;
    TraceOptions one;
    one.max_reflections = 1;
    while (fixtures < 500 && attempts < 200000)
    {
        ++attempts;
        Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)}, tx{u(rng), u(rng)}, rx{u(rng), u(rng)};
        if (distance(a, b) < 1.0 || distance(tx, rx) < 1.0)
            continue;
        BuildingMap map(bounds, {{a, b, brick()}});
        for (const auto &p : trace_paths(map, tx, rx, one))
        {
            if (p.kind != PathKind::Reflected)
                continue;
            Vec2 line = b - a;
            double in = angle_to_line_deg(p.vertices[0] - p.vertices[1], line);
            double out = angle_to_line_deg(p.vertices[2] - p.vertices[1], line);
            worst_reflect = std::max(worst_reflect, std::abs(in - out));
            if (std::abs(in - out) > 1e-6)
                ++bad_reflect;
            ++fixtures;
        }
    }

    // reciprocity on random multi-wall maps
    int checks = 0, bad_recip = 0;
    double worst_m = 0.0, worst_deg = 0.0;
    TraceOptions two;
    two.max_reflections = 2;
    attempts = 0;
    while (checks < 500 && attempts < 200000)
    {
        ++attempts;
        std::vector<WallSegment> walls;
        for (int i = 0; i < 3; ++i)
        {
            Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
            if (distance(a, b) >= 1.0)
                walls.push_back({a, b, i % 2 ? glass() : brick()});
        }
        Vec2 tx{u(rng), u(rng)}, rx{u(rng), u(rng)};
        if (walls.empty() || distance(tx, rx) < 1.0)
            continue;
        BuildingMap map(bounds, walls);
        auto fwd = trace_paths(map, tx, rx, two);
        auto rev = trace_paths(map, rx, tx, two);
        bool ok = fwd.size() == rev.size();
        for (const auto &p : fwd)
        {
            if (!ok)
                break;
            const RayPath *match = nullptr;
            double match_m = 0.0;
            for (const auto &q : rev)
            {
                if (q.vertices.size() != p.vertices.size())
                    continue;
                double dm = 0.0;
                for (std::size_t i = 0; i < q.vertices.size(); ++i)
                    dm = std::max(dm, distance(q.vertices[i], p.vertices[p.vertices.size() - 1 - i]));
                if (dm <= 1e-6)
                {
                    match = &q;
                    match_m = dm;
                    break;
                }
            }
            if (!match)
            {
                ok = false;
                break;
            }
            double dd = std::max(angle_gap_deg(match->aod_deg, p.aoa_deg), angle_gap_deg(match->aoa_deg, p.aod_deg));
            worst_m = std::max({worst_m, match_m, std::abs(match->length_m - p.length_m)});
            worst_deg = std::max(worst_deg, dd);
            ok = dd <= 1e-6 && std::abs(match->length_m - p.length_m) <= 1e-6;
        }
        if (!ok)
            ++bad_recip;
        ++checks;
    }
    return {fixtures >= 500 && checks >= 500 && bad_reflect == 0 && bad_recip == 0,
            std::to_string(fixtures) + " reflections (worst " + fmt(worst_reflect) + " deg), " +
                std::to_string(checks) + " reciprocity checks (" + std::to_string(bad_recip) + " failed, worst " +
                fmt(worst_m) + " m / " + fmt(worst_deg) + " deg)"};
}

Verdict a9()
{
    double n = noise_power_dbm(500e6, -174.0);
    return {std::abs(n - (-86.99)) <= 0.01, "noise power " + fmt(n) + " dBm, expected -86.99 +/- 0.01"};
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"pathskel acceptance checks"};
    std::vector<std::string> only;
    app.add_option("--only", only, "Criteria to run, e.g. A3")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
        {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9},
    };
    for (const auto &id : only)
        if (std::none_of(criteria.begin(), criteria.end(), [&](const auto &c) { return c.first == id; }))
        {
            std::cerr << "unknown criterion '" << id << "'\n";
            return 2;
        }

    int failed = 0;
    for (const auto &[id, check] : criteria)
    {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
            continue;
        Verdict v;
        try
        {
            v = check();
        }
        catch (const std::exception &e)
        {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::cout << id << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
        failed += v.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
