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

// Skeleton-distance beam tracking along a trajectory, the two benchmark update
// policies, Diff-NR and the query-budgeted threshold search.
//
// A tracker keeps a reference skeleton. At every location it sounds the live
// channel along the reference paths and steers toward the strongest one. The
// reference is replaced (one query, U += 1) when the policy fires: the distance
// between the current location's skeleton and the reference reaches T, every
// location, or every fixed Euclidean step.

#ifndef PATHSKEL_TRACKING_HPP
#define PATHSKEL_TRACKING_HPP

#include "pathskel/beamforming.hpp"
#include "pathskel/channel.hpp"

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace pathskel
{

struct SkeletonDistancePolicy
{
    double threshold = 0.0;
};

struct EveryLocationPolicy
{
};

struct FixedEuclideanPolicy
{
    double step_m = 3.0;
};

using UpdatePolicy = std::variant<SkeletonDistancePolicy, EveryLocationPolicy, FixedEuclideanPolicy>;

// SkeletonDistance with an infinite threshold: the reference never changes.
inline UpdatePolicy never_update()
{
    return SkeletonDistancePolicy{std::numeric_limits<double>::infinity()};
}

void validate(const UpdatePolicy &policy);
std::string policy_name(const UpdatePolicy &policy);

// Per-location skeleton lookup. `step` is the global location index along the
// trajectory; implementations may key on it, on the location, or both.
// Implementations used by optimize_threshold must tolerate concurrent calls.
class SkeletonSource
{
  public:
    virtual ~SkeletonSource() = default;
    virtual std::optional<PathSkeleton> skeleton_at(std::size_t step, const Vec2 &location) const = 0;
};

// Live (small-scale faded) channel at a location.
class ChannelOracle
{
  public:
    virtual ~ChannelOracle() = default;
    virtual ChannelMatrix channel_at(std::size_t step, const Vec2 &location) const = 0;
};

// The source has no skeleton for the location; a skeleton finder must run first.
class SkeletonFinderRequired : public std::runtime_error
{
  public:
    SkeletonFinderRequired(std::size_t step, Vec2 location);

    std::size_t step() const { return step_; }
    Vec2 location() const { return location_; }

  private:
    std::size_t step_;
    Vec2 location_;
};

struct LinkConfig
{
    int n_tx = 8;
    int n_rx = 8;
    RadioParams radio;
    DistanceNorm norm = DistanceNorm::Frobenius;
    // Sounded SNR below this (linear) on every reference path forces a refresh.
    double blocked_snr_linear = 1.0;
};

struct TrackerState
{
    Vec2 reference_location;
    std::size_t reference_step = 0;
    PathSkeleton reference_skeleton;
    int queries = 0;
};

struct LocationRecord
{
    std::size_t index = 0;
    Vec2 location;
    int serving_tx = 0;
    double distance = 0.0;    // skeleton distance to the reference before any update
    bool updated = false;
    bool forced_refresh = false; // update caused by all reference paths being blocked
    double gain = 0.0;        // |w^H H f|^2 with the chosen beams
    double snr_linear = 0.0;
    double rate_bps = 0.0;
    int pilots_sent = 0;
};

struct StepResult
{
    BeamPair beams;
    LocationRecord record;
    TrackerState state;
};

// Reference initialised to the skeleton of the first location, U = 0.
TrackerState init_tracker(std::size_t step, const Vec2 &location, const SkeletonSource &source);

StepResult track_step(const TrackerState &state, std::size_t step, const Vec2 &location,
                      const SkeletonSource &source, const ChannelOracle &oracle, const UpdatePolicy &policy,
                      const LinkConfig &link);

struct TrajectoryRun
{
    std::vector<LocationRecord> records;
    int queries = 0;
};

// Steps are numbered first_step, first_step + 1, ...
TrajectoryRun run_trajectory(std::span<const Vec2> trajectory, const UpdatePolicy &policy,
                             const SkeletonSource &source, const ChannelOracle &oracle, const LinkConfig &link,
                             std::size_t first_step = 0);

class ZeroRateError : public std::runtime_error
{
  public:
    explicit ZeroRateError(std::size_t index);
    std::size_t index() const { return index_; }

  private:
    std::size_t index_;
};

// (R[i+1] - R[i]) / R[i]; throws ZeroRateError on a non-positive rate.
std::vector<double> diff_nr(std::span<const double> rates);

struct TrainingTrajectory
{
    std::span<const Vec2> points;
    const SkeletonSource *source = nullptr;
    const ChannelOracle *oracle = nullptr;
    std::size_t first_step = 0;
};

struct ThresholdEvaluation
{
    double threshold = 0.0;
    int queries = 0;
    double sum_rate_bps = 0.0;
    bool feasible = false;
};

struct ThresholdSearch
{
    double t_star = 0.0;
    int queries = 0;
    double sum_rate_bps = 0.0;
    std::vector<ThresholdEvaluation> grid;
};

class InfeasibleBudget : public std::runtime_error
{
  public:
    InfeasibleBudget(int u_max, int min_queries);
    int min_queries() const { return min_queries_; }

  private:
    int min_queries_;
};

// Feasible means U <= u_max - 1. Returns the feasible T with the largest total
// rate over all trajectories, smallest T on ties. Grid points run in parallel.
ThresholdSearch optimize_threshold(std::span<const TrainingTrajectory> trajectories, int u_max,
                                   std::span<const double> t_grid, const LinkConfig &link);

// `points` log-spaced values over [1e-3, 10] x median skeleton distance between
// each location and the first location of its trajectory.
std::vector<double> default_threshold_grid(std::span<const TrainingTrajectory> trajectories, const LinkConfig &link,
                                           std::size_t points = 64);

// Largest-remainder split of `total` proportional to `weights`.
std::vector<int> split_budget(std::span<const std::size_t> weights, int total);

struct TxSegments
{
    int tx_id = 0;
    std::vector<TrainingTrajectory> parts; // possibly empty
};

// Splits u_max_total over the transmitters proportionally to their location
// counts and runs optimize_threshold per transmitter. Transmitters without
// locations map to nullopt. An explicit grid applies to every transmitter;
// otherwise each gets its default grid.
std::map<int, std::optional<ThresholdSearch>> per_tx_thresholds(std::span<const TxSegments> segments,
                                                                int u_max_total, const LinkConfig &link,
                                                                std::span<const double> t_grid = {});

} // namespace pathskel

#endif
