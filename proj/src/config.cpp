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

#include "pathskel/config.hpp"
#include "pathskel/text_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace pathskel
{

namespace
{

struct LineContext
{
    const std::string &source;
    std::size_t line;

    [[noreturn]] void fail(const std::string &what) const { throw ParseError(source, line, what); }

    double number(const std::string &key, const std::string &v) const
    {
        double d = 0.0;
        if (!parse_double(v, d))
            fail("invalid number '" + v + "' for " + key);
        return d;
    }

    double positive(const std::string &key, const std::string &v) const
    {
        double d = number(key, v);
        if (!(d > 0.0))
            fail(key + " must be positive");
        return d;
    }

    long long integer(const std::string &key, const std::string &v, long long min) const
    {
        long long n = 0;
        if (!parse_int(v, n))
            fail("invalid integer '" + v + "' for " + key);
        if (n < min)
            fail(key + " must be at least " + std::to_string(min));
        return n;
    }

    bool boolean(const std::string &key, const std::string &v) const
    {
        if (v == "true" || v == "1" || v == "on")
            return true;
        if (v == "false" || v == "0" || v == "off")
            return false;
        fail("invalid boolean '" + v + "' for " + key);
    }

    std::vector<double> numbers(const std::string &key, const std::string &v) const
    {
        std::vector<double> out;
        for (const auto &tok : split_whitespace(v))
            out.push_back(number(key, tok));
        return out;
    }

    std::vector<double> number_list(const std::string &key, const std::string &v) const
    {
        std::vector<double> out;
        for (const auto &tok : split(v, ','))
            out.push_back(positive(key, std::string(trim(tok))));
        if (out.empty())
            fail(key + " needs at least one value");
        return out;
    }
};

std::string resolve(const std::string &base_dir, const std::string &p)
{
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty())
        path = std::filesystem::path(base_dir) / path;
    return path.string();
}

} // namespace

ExperimentConfig parse_config(std::istream &in, const std::string &source, const std::string &base_dir)
{
    ExperimentConfig cfg;
    cfg.path = source;
    auto &s = cfg.scenario;
    std::optional<Rect> coverage;
    std::optional<std::size_t> map_line;
    bool has_speeds = false;

    using Handler = std::function<void(const LineContext &, const std::string &, const std::string &)>;
    const std::map<std::string, Handler> handlers = {
        {"map",
         [&](const LineContext &, const std::string &, const std::string &v) {
             s.map = std::make_shared<BuildingMap>(load_map(resolve(base_dir, v)));
         }},
        {"trajectory",
         [&](const LineContext &, const std::string &, const std::string &v) {
             s.trajectories.push_back(load_trajectory(resolve(base_dir, v)));
         }},
        {"tx",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             auto tok = split_whitespace(v);
             if (tok.size() != 3 && tok.size() != 4)
                 c.fail("tx expects 'id x y [threshold]'");
             TxSite site;
             site.id = static_cast<int>(c.integer(k, tok[0], 0));
             site.location = {c.number(k, tok[1]), c.number(k, tok[2])};
             if (tok.size() == 4)
                 site.threshold = c.positive(k, tok[3]);
             s.txs.push_back(site);
         }},
        {"seed",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.seed = static_cast<std::uint64_t>(c.integer(k, v, 0));
         }},
        {"tx_power_dbm",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.tx_power_w = dbm_to_watts(c.number(k, v));
         }},
        {"pathloss_exponent",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.pathloss_exponent = c.positive(k, v);
         }},
        {"carrier_hz",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.carrier_hz = c.positive(k, v);
         }},
        {"bandwidth_hz",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.bandwidth_hz = c.positive(k, v);
         }},
        {"noise_dbm_per_hz",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.noise_n0_w_per_hz = dbm_to_watts(c.number(k, v));
         }},
        {"n_tx",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.n_tx_antennas = static_cast<int>(c.integer(k, v, 1));
         }},
        {"n_rx",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.n_rx_antennas = static_cast<int>(c.integer(k, v, 1));
         }},
        {"rx_height_m",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.rx_height_m = c.positive(k, v);
         }},
        {"tx_height_m",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.tx_height_m = c.positive(k, v);
         }},
        {"use_height_difference",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.params.use_height_difference = c.boolean(k, v);
         }},
        {"max_reflections",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.environment.trace.max_reflections = static_cast<int>(c.integer(k, v, 0));
         }},
        {"max_wall_crossings",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.environment.trace.max_wall_crossings = static_cast<int>(c.integer(k, v, 0));
         }},
        {"reflection_loss_db",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             double d = c.number(k, v);
             if (d < 0.0)
                 c.fail(k + " must be non-negative");
             s.environment.trace.reflection_loss_db = d;
         }},
        {"skeleton_paths",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.environment.skeleton_paths = static_cast<int>(c.integer(k, v, 1));
         }},
        {"doppler_time_s",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.environment.doppler_time_s = c.number(k, v);
         }},
        {"policy",
         [&](const LineContext &c, const std::string &, const std::string &v) {
             if (v == "skeleton_distance")
                 s.policy = SkeletonDistancePolicy{};
             else if (v == "every_location")
                 s.policy = EveryLocationPolicy{};
             else if (v == "fixed_euclidean")
                 s.policy = FixedEuclideanPolicy{};
             else if (v == "never")
                 s.policy = never_update();
             else
                 c.fail("unknown policy '" + v +
                        "' (skeleton_distance, every_location, fixed_euclidean, never)");
         }},
        {"threshold",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             if (v == "auto")
                 cfg.threshold.reset();
             else
                 cfg.threshold = c.positive(k, v);
         }},
        {"u_max",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             if (v == "auto")
                 cfg.u_max.reset();
             else
                 cfg.u_max = static_cast<int>(c.integer(k, v, 1));
         }},
        {"euclidean_step_m",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.euclidean_step_m = c.positive(k, v);
         }},
        {"distance_norm",
         [&](const LineContext &c, const std::string &, const std::string &v) {
             if (v == "frobenius")
                 s.norm = DistanceNorm::Frobenius;
             else if (v == "spectral")
                 s.norm = DistanceNorm::Spectral;
             else
                 c.fail("unknown distance_norm '" + v + "' (frobenius, spectral)");
         }},
        {"blocked_snr_db",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.blocked_snr_linear = std::pow(10.0, c.number(k, v) / 10.0);
         }},
        {"hysteresis_db",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             double d = c.number(k, v);
             if (d < 0.0)
                 c.fail(k + " must be non-negative");
             s.hysteresis_db = d;
         }},
        {"database",
         [&](const LineContext &c, const std::string &, const std::string &v) {
             if (v == "exact")
                 s.database = DatabaseMode::Exact;
             else if (v == "grid")
                 s.database = DatabaseMode::Grid;
             else
                 c.fail("unknown database mode '" + v + "' (exact, grid)");
         }},
        {"grid_size_m",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.grid_size_m = c.positive(k, v);
             cfg.maintenance.grid_size_m = s.grid_size_m;
         }},
        {"t_aging_s",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             s.t_aging_s = c.positive(k, v);
             cfg.maintenance.t_aging_s = s.t_aging_s;
         }},
        {"tx_oversampling",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.tx_oversampling = static_cast<int>(c.integer(k, v, 1));
         }},
        {"rx_oversampling",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.rx_oversampling = static_cast<int>(c.integer(k, v, 1));
         }},
        {"frame_ms",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.frame.frame_duration_s = c.positive(k, v) * 1e-3;
         }},
        {"pilot_slot_us",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.frame.pilot_slot_s = c.positive(k, v) * 1e-6;
         }},
        {"query_overhead_ms",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             double d = c.number(k, v);
             if (d < 0.0)
                 c.fail(k + " must be non-negative");
             cfg.frame.query_overhead_s = d * 1e-3;
         }},
        {"maintenance_route",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             auto xs = c.numbers(k, v);
             if (xs.size() < 4 || xs.size() % 2 != 0)
                 c.fail("maintenance_route expects 'x1 y1 x2 y2 ...'");
             std::vector<Vec2> route;
             for (std::size_t i = 0; i < xs.size(); i += 2)
                 route.push_back({xs[i], xs[i + 1]});
             cfg.maintenance.routes.push_back(std::move(route));
         }},
        {"maintenance_coverage",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             auto xs = c.numbers(k, v);
             if (xs.size() != 4 || !(xs[2] > xs[0]) || !(xs[3] > xs[1]))
                 c.fail("maintenance_coverage expects 'x0 y0 x1 y1' with x1 > x0, y1 > y0");
             coverage = Rect{{xs[0], xs[1]}, {xs[2], xs[3]}};
         }},
        {"maintenance_speeds_kmh",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.maintenance.speeds_mps.clear();
             for (double kmh : c.number_list(k, v))
                 cfg.maintenance.speeds_mps.push_back(kmh / 3.6);
             has_speeds = true;
         }},
        {"maintenance_horizon_s",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.maintenance.horizon_s = c.positive(k, v);
         }},
        {"maintenance_dt_s",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.maintenance.dt_s = c.positive(k, v);
         }},
        {"maintenance_confirm",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             double d = c.number(k, v);
             if (!(d > 0.0 && d <= 1.0))
                 c.fail(k + " must lie in (0, 1]");
             cfg.maintenance.confirm_probability = d;
         }},
        {"maintenance_users",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.maintenance_users.clear();
             for (const auto &tok : split(v, ','))
                 cfg.maintenance_users.push_back(static_cast<int>(c.integer(k, std::string(trim(tok)), 1)));
         }},
        {"maintenance_trials",
         [&](const LineContext &c, const std::string &k, const std::string &v) {
             cfg.maintenance_trials = static_cast<int>(c.integer(k, v, 1));
         }},
    };

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw))
    {
        ++line_no;
        auto line = trim(strip_comment(raw));
        if (line.empty())
            continue;
        LineContext ctx{source, line_no};
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            ctx.fail("expected 'key = value'");
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (value.empty())
            ctx.fail("missing value for '" + key + "'");
        auto h = handlers.find(key);
        if (h == handlers.end())
            ctx.fail("unknown key '" + key + "'");
        if (key == "map")
        {
            if (map_line)
                ctx.fail("map given twice (first on line " + std::to_string(*map_line) + ")");
            map_line = line_no;
        }
        try
        {
            h->second(ctx, key, value);
        }
        catch (const ParseError &)
        {
            throw;
        }
        catch (const std::invalid_argument &e)
        {
            ctx.fail(e.what());
        }
        catch (const std::runtime_error &e)
        {
            // unreadable map or trajectory file
            ctx.fail(e.what());
        }
    }

    LineContext end{source, line_no};
    if (!s.map)
        end.fail("no 'map' given");
    if (s.txs.empty())
        end.fail("no 'tx' given");
    if (s.trajectories.empty())
        end.fail("no 'trajectory' given");
    if (std::holds_alternative<SkeletonDistancePolicy>(s.policy) && cfg.threshold)
        s.policy = SkeletonDistancePolicy{*cfg.threshold};
    if (std::holds_alternative<FixedEuclideanPolicy>(s.policy))
        s.policy = FixedEuclideanPolicy{cfg.euclidean_step_m};
    if (cfg.seed)
        s.seed = *cfg.seed;

    cfg.maintenance.coverage = coverage.value_or(s.map->bounds());
    if (!has_speeds)
        cfg.maintenance.speeds_mps = {5.0 / 3.6, 30.0 / 3.6};
    cfg.maintenance.seed = s.seed;

    try
    {
        s.validate();
        cfg.frame.validate(1);
    }
    catch (const std::invalid_argument &e)
    {
        end.fail(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path + "'");
    auto base = std::filesystem::path(path).parent_path().string();
    return parse_config(in, path, base);
}

} // namespace pathskel
