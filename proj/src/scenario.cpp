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

#include "pathskel/scenario.hpp"
#include "pathskel/text_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace pathskel
{

namespace
{

constexpr double kArcSlack = 1e-9;

std::uint64_t key(long long v) { return static_cast<std::uint64_t>(v); }

double effective_threshold(const UpdatePolicy &policy, const TxSite &tx, const std::map<int, double> &thresholds)
{
    if (auto it = thresholds.find(tx.id); it != thresholds.end())
        return it->second;
    if (tx.threshold)
        return *tx.threshold;
    return std::get<SkeletonDistancePolicy>(policy).threshold;
}

} // namespace

// ---------------------------------------------------------------- parameters

SystemParams SystemParams::defaults()
{
    SystemParams p;
    p.tx_power_w = dbm_to_watts(30.0);
    p.noise_n0_w_per_hz = dbm_to_watts(-174.0);
    return p;
}

void SystemParams::validate() const
{
    auto positive = [](double v, const char *what) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(what) + " must be positive.");
    };
    positive(tx_power_w, "Transmit power");
    positive(pathloss_exponent, "Pathloss exponent");
    positive(carrier_hz, "Carrier frequency");
    positive(bandwidth_hz, "Bandwidth");
    positive(noise_n0_w_per_hz, "Noise spectral density");
    positive(rx_height_m, "Rx height");
    positive(tx_height_m, "Tx height");
    if (n_tx_antennas < 1 || n_rx_antennas < 1)
        throw std::invalid_argument("Antenna counts must be at least 1.");
}

RadioParams SystemParams::radio() const { return {tx_power_w, bandwidth_hz, noise_n0_w_per_hz}; }

PropagationModel SystemParams::propagation() const
{
    PropagationModel m;
    m.exponent = pathloss_exponent;
    m.carrier_hz = carrier_hz;
    m.height_difference_m = use_height_difference ? tx_height_m - rx_height_m : 0.0;
    return m;
}

LinkConfig SystemParams::link() const
{
    LinkConfig l;
    l.n_tx = n_tx_antennas;
    l.n_rx = n_rx_antennas;
    l.radio = radio();
    return l;
}

// --------------------------------------------------------------- trajectories

void Trajectory::validate() const
{
    if (waypoints.size() < 2)
        throw std::invalid_argument("Trajectory needs at least two waypoints.");
    for (std::size_t i = 1; i < waypoints.size(); ++i)
        if (distance(waypoints[i - 1], waypoints[i]) <= 0.0)
            throw std::invalid_argument("Consecutive trajectory waypoints " + std::to_string(i - 1) + " and " +
                                        std::to_string(i) + " coincide.");
    if (!(speed_mps > 0.0) || !std::isfinite(speed_mps))
        throw std::invalid_argument("Trajectory speed must be positive.");
    if (!(sample_spacing_m > 0.0) || !std::isfinite(sample_spacing_m))
        throw std::invalid_argument("Trajectory sample spacing must be positive.");
}

std::vector<Vec2> sample_trajectory(const Trajectory &t)
{
    t.validate();
    std::vector<Vec2> out;
    for (std::size_t i = 1; i < t.waypoints.size(); ++i)
    {
        const Vec2 a = t.waypoints[i - 1];
        const Vec2 b = t.waypoints[i];
        const double len = distance(a, b);
        for (long long k = 0;; ++k)
        {
            const double s = static_cast<double>(k) * t.sample_spacing_m;
            if (s >= len - kArcSlack)
                break;
            out.push_back(a + (s / len) * (b - a));
        }
    }
    out.push_back(t.waypoints.back());
    return out;
}

Trajectory parse_trajectory(std::istream &in, const std::string &source)
{
    Trajectory t;
    std::string raw;
    std::size_t line_no = 0;
    int stage = 0; // 0: expect header, 1: expect speed/spacing, 2: expect x,y header, 3: points
    while (std::getline(in, raw))
    {
        ++line_no;
        auto line = trim(strip_comment(raw));
        if (line.empty())
            continue;
        auto cols = split(line, ',');
        for (auto &c : cols)
            c = std::string(trim(c));
        if (cols.size() != 2)
            throw ParseError(source, line_no, "expected two comma-separated columns");
        switch (stage)
        {
        case 0:
            if (cols[0] != "speed_kmh" || cols[1] != "spacing_m")
                throw ParseError(source, line_no, "expected header 'speed_kmh,spacing_m'");
            break;
        case 1: {
            double kmh = 0.0, spacing = 0.0;
            if (!parse_double(cols[0], kmh) || !parse_double(cols[1], spacing))
                throw ParseError(source, line_no, "invalid speed or spacing");
            if (!(kmh > 0.0) || !(spacing > 0.0))
                throw ParseError(source, line_no, "speed and spacing must be positive");
            t.speed_mps = kmh / 3.6;
            t.sample_spacing_m = spacing;
            break;
        }
        case 2:
            if (cols[0] != "x" || cols[1] != "y")
                throw ParseError(source, line_no, "expected header 'x,y'");
            break;
        default: {
            Vec2 p;
            if (!parse_double(cols[0], p.x) || !parse_double(cols[1], p.y))
                throw ParseError(source, line_no, "invalid waypoint");
            if (!t.waypoints.empty() && t.waypoints.back() == p)
                throw ParseError(source, line_no, "waypoint repeats the previous one");
            t.waypoints.push_back(p);
            break;
        }
        }
        if (stage < 3)
            ++stage;
    }
    if (t.waypoints.size() < 2)
        throw ParseError(source, line_no, "trajectory needs at least two waypoints");
    return t;
}

Trajectory load_trajectory(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open trajectory file '" + path + "'");
    return parse_trajectory(in, path);
}

// ---------------------------------------------------------------- environment

RayEnvironment::RayEnvironment(std::shared_ptr<const BuildingMap> map, Vec2 tx, SystemParams params,
                               EnvironmentOptions opts)
    : map_(std::move(map)), tx_(tx), params_(params), opts_(opts)
{
    if (!map_)
        throw std::invalid_argument("Environment needs a building map.");
    if (!map_->bounds().contains(tx_))
        throw std::invalid_argument("Transmitter (" + format_number(tx.x) + ", " + format_number(tx.y) +
                                    ") lies outside the map bounds.");
    if (opts_.skeleton_paths < 1)
        throw std::invalid_argument("Skeleton size must be at least 1.");
    params_.validate();
}

std::vector<RayPath> RayEnvironment::rays(const Vec2 &rx) const { return trace_paths(*map_, tx_, rx, opts_.trace); }

std::optional<PathSkeleton> RayEnvironment::skeleton(const Vec2 &rx) const
{
    auto r = rays(rx);
    if (r.empty())
        return std::nullopt;
    return skeleton_from_rays(r, opts_.skeleton_paths, params_.propagation(), rx);
}

ChannelMatrix RayEnvironment::channel(const Vec2 &rx, double speed_mps, double motion_dir_deg,
                                      std::uint64_t fading_seed) const
{
    auto r = rays(rx);
    if (r.empty())
        return ChannelMatrix(params_.n_rx_antennas, params_.n_tx_antennas);
    const auto model = params_.propagation();
    const double lambda = wavelength_m(params_.carrier_hz);
    Rng rng(fading_seed);
    std::vector<PathParams> paths;
    paths.reserve(r.size());
    for (const auto &ray : r)
    {
        PathParams p;
        p.aoa_deg = ray.aoa_deg;
        p.aod_deg = ray.aod_deg;
        p.pathloss_db = pathloss_db(ray, model);
        p.doppler_hz = doppler_hz(speed_mps, motion_dir_deg, ray.aoa_deg, lambda);
        p.gain = sample_gain(p.pathloss_db, rng);
        paths.push_back(p);
    }
    return synthesize_channel(paths, params_.n_tx_antennas, params_.n_rx_antennas, opts_.doppler_time_s);
}

std::optional<PathSkeleton> RayEnvironment::discover(const Vec2 &point)
{
    const std::pair<double, double> k{point.x, point.y};
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = cache_.find(k); it != cache_.end())
            return it->second;
    }
    auto ps = skeleton(point);
    std::lock_guard lock(cache_mutex_);
    cache_.emplace(k, ps);
    return ps;
}

LinkTrace::LinkTrace(const RayEnvironment &env, std::span<const Vec2> points, double speed_mps,
                     std::uint64_t fading_seed)
{
    skeletons_.reserve(points.size());
    channels_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        double dir = 0.0;
        if (i + 1 < points.size())
            dir = direction_deg(points[i], points[i + 1]);
        else if (i > 0)
            dir = direction_deg(points[i - 1], points[i]);
        skeletons_.push_back(env.skeleton(points[i]));
        channels_.push_back(env.channel(points[i], speed_mps, dir, derive_seed(fading_seed, {key(i)})));
    }
}

std::optional<PathSkeleton> LinkTrace::skeleton_at(std::size_t step, const Vec2 &) const
{
    return skeletons_.at(step);
}

ChannelMatrix LinkTrace::channel_at(std::size_t step, const Vec2 &) const { return channels_.at(step); }

std::optional<double> LinkTrace::best_gain_db(std::size_t step) const
{
    const auto &ps = skeletons_.at(step);
    if (!ps)
        return std::nullopt;
    return 20.0 * std::log10(ps->strongest_amplitude());
}

// ------------------------------------------------------------------- serving

CoverageHole::CoverageHole(std::size_t index, Vec2 location)
    : std::runtime_error("coverage hole at location index " + std::to_string(index) + " (" +
                         format_number(location.x) + ", " + format_number(location.y) + ")"),
      index_(index)
{
}

std::optional<std::size_t> serving_tx(std::span<const std::optional<double>> gains_db,
                                      std::optional<std::size_t> incumbent, double hysteresis_db)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < gains_db.size(); ++i)
        if (gains_db[i] && (!best || *gains_db[i] > *gains_db[*best]))
            best = i;
    if (!best)
        return std::nullopt;
    if (incumbent && *incumbent < gains_db.size() && gains_db[*incumbent])
    {
        if (*gains_db[*best] > *gains_db[*incumbent] + hysteresis_db)
            return best;
        return incumbent;
    }
    return best;
}

// ------------------------------------------------------------------ scenario

void Scenario::validate() const
{
    if (!map)
        throw std::invalid_argument("Scenario has no building map.");
    if (txs.empty())
        throw std::invalid_argument("Scenario needs at least one transmitter.");
    std::set<int> ids;
    for (const auto &tx : txs)
    {
        if (!ids.insert(tx.id).second)
            throw std::invalid_argument("Duplicate transmitter id " + std::to_string(tx.id) + ".");
        if (!map->bounds().contains(tx.location))
            throw std::invalid_argument("Transmitter " + std::to_string(tx.id) + " lies outside the map bounds.");
        if (tx.threshold && !(*tx.threshold > 0.0))
            throw std::invalid_argument("Threshold of transmitter " + std::to_string(tx.id) + " must be positive.");
    }
    if (trajectories.empty())
        throw std::invalid_argument("Scenario needs at least one trajectory.");
    for (const auto &t : trajectories)
    {
        t.validate();
        for (const auto &p : t.waypoints)
            if (!map->bounds().contains(p))
                throw std::invalid_argument("Trajectory waypoint (" + format_number(p.x) + ", " +
                                            format_number(p.y) + ") lies outside the map bounds.");
    }
    params.validate();
    if (environment.skeleton_paths < 1)
        throw std::invalid_argument("Skeleton size must be at least 1.");
    if (!std::holds_alternative<SkeletonDistancePolicy>(policy))
        pathskel::validate(policy);
    if (!(hysteresis_db >= 0.0))
        throw std::invalid_argument("Handover hysteresis must be non-negative.");
    if (!(grid_size_m > 0.0) || !(t_aging_s > 0.0))
        throw std::invalid_argument("Grid size and aging threshold must be positive.");
}

LinkConfig Scenario::link_config() const
{
    LinkConfig l = params.link();
    l.norm = norm;
    l.blocked_snr_linear = blocked_snr_linear;
    return l;
}

int ScenarioReport::total_queries() const
{
    int u = 0;
    for (const auto &[id, q] : queries_per_tx)
        u += q;
    return u;
}

PreparedScenario prepare_scenario(const Scenario &s)
{
    s.validate();
    PreparedScenario prep;
    prep.scenario = &s;
    for (const auto &tx : s.txs)
        prep.environments.push_back(std::make_unique<RayEnvironment>(s.map, tx.location, s.params, s.environment));

    for (std::size_t ti = 0; ti < s.trajectories.size(); ++ti)
    {
        const auto &traj = s.trajectories[ti];
        PreparedTrajectory pt;
        pt.points = sample_trajectory(traj);
        for (std::size_t k = 0; k < s.txs.size(); ++k)
            pt.links.push_back(std::make_unique<LinkTrace>(*prep.environments[k], pt.points, traj.speed_mps,
                                                           derive_seed(s.seed, {key(ti), key(s.txs[k].id)})));

        std::optional<std::size_t> incumbent;
        std::vector<std::optional<double>> gains(s.txs.size());
        for (std::size_t i = 0; i < pt.points.size(); ++i)
        {
            for (std::size_t k = 0; k < s.txs.size(); ++k)
                gains[k] = pt.links[k]->best_gain_db(i);
            incumbent = serving_tx(gains, incumbent, s.hysteresis_db);
            if (!incumbent)
                throw CoverageHole(i, pt.points[i]);
            pt.serving.push_back(*incumbent);
        }
        prep.trajectories.push_back(std::move(pt));
    }
    return prep;
}

namespace
{

struct Segment
{
    std::size_t tx = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<Segment> segments_of(const std::vector<std::size_t> &serving)
{
    std::vector<Segment> out;
    for (std::size_t i = 0; i < serving.size(); ++i)
    {
        if (out.empty() || out.back().tx != serving[i])
            out.push_back({serving[i], i, i + 1});
        else
            out.back().end = i + 1;
    }
    return out;
}

} // namespace

ScenarioReport run_prepared(const PreparedScenario &prep, const UpdatePolicy &policy,
                            const std::map<int, double> &thresholds)
{
    if (prep.scenario == nullptr)
        throw std::invalid_argument("Scenario was not prepared.");
    const Scenario &s = *prep.scenario;
    const LinkConfig link = s.link_config();

    ScenarioReport report;
    report.policy = policy_name(policy);
    for (const auto &tx : s.txs)
        report.queries_per_tx[tx.id] = 0;

    // One database per transmitter, shared by every trajectory of this run.
    std::vector<SkeletonDatabase> databases;
    if (s.database == DatabaseMode::Grid)
        for (std::size_t k = 0; k < s.txs.size(); ++k)
            databases.emplace_back(s.map->bounds(), s.grid_size_m, s.t_aging_s);

    for (std::size_t ti = 0; ti < prep.trajectories.size(); ++ti)
    {
        const auto &pt = prep.trajectories[ti];
        TrajectoryReport tr;
        tr.records.reserve(pt.points.size());
        const auto segments = segments_of(pt.serving);
        tr.handovers = static_cast<int>(segments.size()) - 1;

        for (const auto &seg : segments)
        {
            const auto &tx = s.txs[seg.tx];
            UpdatePolicy p = policy;
            if (std::holds_alternative<SkeletonDistancePolicy>(policy))
                p = SkeletonDistancePolicy{effective_threshold(policy, tx, thresholds)};

            std::span<const Vec2> pts(pt.points.data() + seg.begin, seg.end - seg.begin);
            const LinkTrace &trace = *pt.links[seg.tx];
            TrajectoryRun run;
            if (s.database == DatabaseMode::Grid)
            {
                DatabaseSkeletonSource source(databases[seg.tx], *prep.environments[seg.tx], static_cast<int>(ti),
                                              derive_seed(s.seed, {key(ti), key(tx.id), key(seg.begin)}));
                run = run_trajectory(pts, p, source, trace, link, seg.begin);
            }
            else
            {
                run = run_trajectory(pts, p, trace, trace, link, seg.begin);
            }
            report.queries_per_tx[tx.id] += run.queries;
            for (auto &r : run.records)
            {
                r.serving_tx = tx.id;
                tr.records.push_back(r);
            }
        }

        std::vector<double> rates;
        rates.reserve(tr.records.size());
        for (const auto &r : tr.records)
            rates.push_back(r.rate_bps);
        tr.diff_nr = diff_nr(rates);
        report.trajectories.push_back(std::move(tr));
    }
    return report;
}

ScenarioReport run_scenario(const Scenario &s)
{
    auto prep = prepare_scenario(s);
    return run_prepared(prep, s.policy);
}

std::vector<TxSegments> serving_segments(const PreparedScenario &prep)
{
    const Scenario &s = *prep.scenario;
    std::vector<TxSegments> out(s.txs.size());
    for (std::size_t k = 0; k < s.txs.size(); ++k)
        out[k].tx_id = s.txs[k].id;
    for (const auto &pt : prep.trajectories)
        for (const auto &seg : segments_of(pt.serving))
        {
            TrainingTrajectory t;
            t.points = std::span<const Vec2>(pt.points.data() + seg.begin, seg.end - seg.begin);
            t.source = pt.links[seg.tx].get();
            t.oracle = pt.links[seg.tx].get();
            t.first_step = seg.begin;
            out[seg.tx].parts.push_back(t);
        }
    return out;
}

std::map<int, std::optional<ThresholdSearch>> optimize_scenario_thresholds(const PreparedScenario &prep, int u_max,
                                                                          std::span<const double> t_grid)
{
    auto segments = serving_segments(prep);
    return per_tx_thresholds(segments, u_max, prep.scenario->link_config(), t_grid);
}

std::vector<LinkBudgetResult> exhaustive_benchmark(const PreparedScenario &prep, std::size_t trajectory,
                                                   const Codebook &f_book, const Codebook &w_book)
{
    const auto &pt = prep.trajectories.at(trajectory);
    const auto radio = prep.scenario->params.radio();
    std::vector<LinkBudgetResult> out;
    out.reserve(pt.points.size());
    for (std::size_t i = 0; i < pt.points.size(); ++i)
        out.push_back(exhaustive_search(pt.links[pt.serving[i]]->channel_at(i, pt.points[i]), f_book, w_book, radio));
    return out;
}

void write_records_csv(std::ostream &out, const TrajectoryReport &report)
{
    out << "index,x,y,serving_tx,d,updated,rate_bps,diff_nr,U_cum,forced_refresh,pilots,snr_linear\n";
    int u = 0;
    for (std::size_t i = 0; i < report.records.size(); ++i)
    {
        const auto &r = report.records[i];
        if (r.updated)
            ++u;
        out << r.index << ',' << format_number(r.location.x) << ',' << format_number(r.location.y) << ','
            << r.serving_tx << ',' << format_number(r.distance) << ',' << (r.updated ? 1 : 0) << ','
            << format_number(r.rate_bps) << ',';
        // diff_nr starts at the second location
        if (i > 0 && i - 1 < report.diff_nr.size())
            out << format_number(report.diff_nr[i - 1]);
        out << ',' << u << ',' << (r.forced_refresh ? 1 : 0) << ',' << r.pilots_sent << ','
            << format_number(r.snr_linear) << '\n';
    }
}

} // namespace pathskel
