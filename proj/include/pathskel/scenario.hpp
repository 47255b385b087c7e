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

#ifndef PATHSKEL_SCENARIO_HPP
#define PATHSKEL_SCENARIO_HPP

#include "pathskel/beamforming.hpp"
#include "pathskel/channel.hpp"
#include "pathskel/database.hpp"
#include "pathskel/geometry.hpp"
#include "pathskel/tracking.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathskel
{

struct SystemParams
{
    double tx_power_w = 1.0;               // 30 dBm
    double pathloss_exponent = 3.0;
    double carrier_hz = 28e9;
    double bandwidth_hz = 500e6;
    double noise_n0_w_per_hz = 0.0;        // -174 dBm/Hz, set by defaults()
    int n_tx_antennas = 8;
    int n_rx_antennas = 8;
    double rx_height_m = 1.5;
    double tx_height_m = 6.0;
    bool use_height_difference = false;    // fold (tx_h - rx_h) into every path length

    static SystemParams defaults();

    void validate() const;
    RadioParams radio() const;
    PropagationModel propagation() const;
    LinkConfig link() const;
};

struct Trajectory
{
    std::vector<Vec2> waypoints;
    double speed_mps = 5.0 / 3.6;
    double sample_spacing_m = 1.0;

    void validate() const;
};

// Resamples every leg at sample_spacing_m from its start and always keeps the
// leg end, so corners and both endpoints are present.
std::vector<Vec2> sample_trajectory(const Trajectory &t);

// Trajectory file:
//   speed_kmh,spacing_m
//   5,1
//   x,y
//   0,10
//   ...
Trajectory parse_trajectory(std::istream &in, const std::string &source = "<trajectory>");
Trajectory load_trajectory(const std::string &path);

struct EnvironmentOptions
{
    TraceOptions trace;
    int skeleton_paths = 3;        // L_max
    double doppler_time_s = 1e-3;  // one coherence interval
};

// Ray-traced propagation between one transmitter and arbitrary receiver points.
// Also acts as the skeleton finder for the transmitter's grid database (results
// per point are cached, the cache is guarded by a mutex).
class RayEnvironment : public SkeletonFinder
{
  public:
    RayEnvironment(std::shared_ptr<const BuildingMap> map, Vec2 tx, SystemParams params, EnvironmentOptions opts);

    Vec2 tx() const { return tx_; }
    const SystemParams &params() const { return params_; }
    const EnvironmentOptions &options() const { return opts_; }

    std::vector<RayPath> rays(const Vec2 &rx) const;
    std::optional<PathSkeleton> skeleton(const Vec2 &rx) const;

    // Faded channel for one coherence interval. Zero matrix when nothing arrives.
    ChannelMatrix channel(const Vec2 &rx, double speed_mps, double motion_dir_deg, std::uint64_t fading_seed) const;

    std::optional<PathSkeleton> discover(const Vec2 &point) override;

  private:
    std::shared_ptr<const BuildingMap> map_;
    Vec2 tx_;
    SystemParams params_;
    EnvironmentOptions opts_;
    std::mutex cache_mutex_;
    std::map<std::pair<double, double>, std::optional<PathSkeleton>> cache_;
};

// Skeletons and faded channels of one transmitter precomputed along a sampled
// trajectory, indexed by location step. Immutable once built.
class LinkTrace : public SkeletonSource, public ChannelOracle
{
  public:
    LinkTrace(const RayEnvironment &env, std::span<const Vec2> points, double speed_mps, std::uint64_t fading_seed);

    std::size_t size() const { return skeletons_.size(); }
    std::optional<PathSkeleton> skeleton_at(std::size_t step, const Vec2 &location) const override;
    ChannelMatrix channel_at(std::size_t step, const Vec2 &location) const override;

    // 20*log10 of the strongest skeleton amplitude; nullopt when no path arrives.
    std::optional<double> best_gain_db(std::size_t step) const;

  private:
    std::vector<std::optional<PathSkeleton>> skeletons_;
    std::vector<ChannelMatrix> channels_;
};

struct TxSite
{
    int id = 0;
    Vec2 location;
    std::optional<double> threshold; // per-transmitter T for the skeleton-distance policy
};

class CoverageHole : public std::runtime_error
{
  public:
    CoverageHole(std::size_t index, Vec2 location);
    std::size_t index() const { return index_; }

  private:
    std::size_t index_;
};

// Index into `gains_db` of the serving transmitter. The strongest candidate wins
// (lowest index on ties); an incumbent is kept unless the challenger beats it by
// more than hysteresis_db. Returns nullopt when no candidate has a path.
std::optional<std::size_t> serving_tx(std::span<const std::optional<double>> gains_db,
                                      std::optional<std::size_t> incumbent, double hysteresis_db);

enum class DatabaseMode
{
    Exact, // every location's own skeleton is known up front
    Grid   // grid database filled on demand by the tracked user
};

struct Scenario
{
    std::shared_ptr<const BuildingMap> map;
    std::vector<TxSite> txs;
    std::vector<Trajectory> trajectories;
    SystemParams params = SystemParams::defaults();
    EnvironmentOptions environment;
    UpdatePolicy policy = EveryLocationPolicy{};
    std::uint64_t seed = 42;
    double hysteresis_db = 3.0;
    DatabaseMode database = DatabaseMode::Exact;
    double grid_size_m = 2.0;
    double t_aging_s = 120.0;
    DistanceNorm norm = DistanceNorm::Frobenius;
    double blocked_snr_linear = 1.0;

    void validate() const;
    LinkConfig link_config() const;
};

struct PreparedTrajectory
{
    std::vector<Vec2> points;
    std::vector<std::unique_ptr<LinkTrace>> links; // one per transmitter, scenario order
    std::vector<std::size_t> serving;              // transmitter index per location
};

// Ray tracing, fading draws and serving-transmitter resolution, shared by every
// policy evaluated on the same scenario.
struct PreparedScenario
{
    const Scenario *scenario = nullptr;
    std::vector<std::unique_ptr<RayEnvironment>> environments;
    std::vector<PreparedTrajectory> trajectories;
};

PreparedScenario prepare_scenario(const Scenario &s);

struct TrajectoryReport
{
    std::vector<LocationRecord> records;
    std::vector<double> diff_nr; // size records - 1
    int handovers = 0;
};

struct ScenarioReport
{
    std::string policy;
    std::vector<TrajectoryReport> trajectories;
    std::map<int, int> queries_per_tx;

    int total_queries() const;
};

// thresholds override the policy threshold per transmitter id when the policy is
// skeleton-distance (TxSite::threshold is used otherwise, then the policy's own).
ScenarioReport run_prepared(const PreparedScenario &prep, const UpdatePolicy &policy,
                            const std::map<int, double> &thresholds = {});

ScenarioReport run_scenario(const Scenario &s);

// Serving segments of every trajectory grouped per transmitter, for the
// per-transmitter threshold search.
std::vector<TxSegments> serving_segments(const PreparedScenario &prep);

std::map<int, std::optional<ThresholdSearch>> optimize_scenario_thresholds(const PreparedScenario &prep, int u_max,
                                                                          std::span<const double> t_grid = {});

// Per-location exhaustive codebook search over the serving transmitter's channel.
std::vector<LinkBudgetResult> exhaustive_benchmark(const PreparedScenario &prep, std::size_t trajectory,
                                                   const Codebook &f_book, const Codebook &w_book);

// index,x,y,serving_tx,d,updated,rate_bps,diff_nr,U_cum  (diff_nr of row i is
// relative to row i-1 and empty on the first row)
void write_records_csv(std::ostream &out, const TrajectoryReport &report);

} // namespace pathskel

#endif
