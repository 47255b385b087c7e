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

// Grid skeleton database kept by one transmitter.
//
// The coverage rectangle is cut into square cells, each represented by its
// center point. A cell is either Normal (fresh skeleton, aging counter running)
// or Watch (needs a skeleton finder run). Every cell starts in Watch. When a
// Watch cell holds at least one user, one of them is picked uniformly at random
// and asked to discover the skeleton; on confirmation the cell moves to Normal
// with age 0 and that user's request count C goes up by one. Cells whose age
// reaches the aging threshold drop back to Watch.

#ifndef PATHSKEL_DATABASE_HPP
#define PATHSKEL_DATABASE_HPP

#include "pathskel/channel.hpp"
#include "pathskel/random.hpp"
#include "pathskel/tracking.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace pathskel
{

enum class CellStatus
{
    Normal,
    Watch
};

const char *to_string(CellStatus s);

struct GridCell
{
    int id = 0;
    Vec2 center;
    CellStatus status = CellStatus::Watch;
    std::optional<PathSkeleton> skeleton;
    double age_s = 0.0;
};

// Stand-in for the over-the-air discovery procedure run by a user.
class SkeletonFinder
{
  public:
    virtual ~SkeletonFinder() = default;
    // nullopt when no path reaches the point.
    virtual std::optional<PathSkeleton> discover(const Vec2 &point) = 0;
};

struct NeedsDiscovery
{
    int cell_id = 0;
};

using SkeletonQuery = std::variant<PathSkeleton, NeedsDiscovery>;

struct Discovery
{
    PathSkeleton skeleton;
    int user_id = 0;
};

class OutOfCoverage : public std::out_of_range
{
  public:
    explicit OutOfCoverage(Vec2 p);
};

class SkeletonDatabase
{
  public:
    SkeletonDatabase(Rect area, double grid_size_m, double t_aging_s);

    const Rect &area() const { return area_; }
    double grid_size_m() const { return grid_; }
    double t_aging_s() const { return t_aging_; }
    int columns() const { return nx_; }
    int rows() const { return ny_; }
    std::size_t size() const { return cells_.size(); }

    const GridCell &cell(int id) const;
    const std::vector<GridCell> &cells() const { return cells_; }

    // Cells are closed on their upper x/y edges, so a point on an edge shared by
    // two cells belongs to the lower-left one. Throws OutOfCoverage.
    int grid_of(const Vec2 &location) const;

    SkeletonQuery query_skeleton(const Vec2 &location) const;

    // Picks one of `users` uniformly; each user confirms with its probability
    // (missing entries mean 1). On confirmation the finder runs at the cell
    // center; a found skeleton is stored and the cell turns Normal.
    std::optional<Discovery> dispatch_discovery(int cell_id, std::span<const int> users, Rng &rng,
                                                SkeletonFinder &finder,
                                                const std::map<int, double> &confirm_probability = {});

    // Ages Normal cells by dt; those reaching t_aging turn Watch. Returns them.
    std::vector<int> tick(double dt_s);

    std::uint64_t completed_discoveries() const { return completed_; }

    // One line per cell: id,cx,cy,status,age_s,L
    void dump(std::ostream &out) const;

  private:
    Rect area_;
    double grid_;
    double t_aging_;
    int nx_ = 0;
    int ny_ = 0;
    std::vector<GridCell> cells_;
    std::uint64_t completed_ = 0;
};

SkeletonDatabase partition_coverage(const Rect &area, double grid_size_m, double t_aging_s);

// SkeletonSource over a database. A Watch cell is resolved by dispatching the
// discovery to the tracked user itself, so lookups never come back empty unless
// the finder finds no path. Not safe for concurrent use.
class DatabaseSkeletonSource : public SkeletonSource
{
  public:
    DatabaseSkeletonSource(SkeletonDatabase &db, SkeletonFinder &finder, int user_id, std::uint64_t seed);

    std::optional<PathSkeleton> skeleton_at(std::size_t step, const Vec2 &location) const override;

  private:
    SkeletonDatabase *db_;
    SkeletonFinder *finder_;
    int user_id_;
    mutable Rng rng_;
};

struct MaintenanceUser
{
    int id = 0;
    std::vector<Vec2> route; // polyline walked back and forth
    double speed_mps = 0.0;
    double start_offset_m = 0.0; // arc length at t = 0, along the out-and-back cycle
    double confirm_probability = 1.0;
};

// Arc-length position of a user at time t on its out-and-back route.
Vec2 position_on_route(const MaintenanceUser &user, double t_s);

struct MaintenanceStats
{
    std::map<int, int> requests; // user id -> C
    double duration_s = 0.0;
    std::uint64_t dispatches = 0;
};

// Time-stepped: at each step every Watch cell holding users gets a discovery,
// then the database ages by dt.
// user_id,C
void write_requests_csv(std::ostream &out, const MaintenanceStats &stats);

MaintenanceStats run_maintenance_sim(SkeletonDatabase &db, std::span<const MaintenanceUser> users, double duration_s,
                                     double dt_s, Rng &rng, SkeletonFinder &finder);

struct MaintenanceScenario
{
    Rect coverage;
    std::vector<std::vector<Vec2>> routes;
    std::vector<double> speeds_mps;
    double grid_size_m = 2.0;
    double t_aging_s = 120.0;
    double horizon_s = 420.0;
    double dt_s = 0.1;
    double confirm_probability = 1.0;
    std::uint64_t seed = 42;
};

struct OverheadRow
{
    int n_users = 0;
    double mean_c = 0.0;
    double std_c = 0.0;
};

// Random users (route, start offset and speed drawn per user) for one trial.
std::vector<MaintenanceUser> random_users(const MaintenanceScenario &scenario, int count, Rng &rng);

using TrialObserver = std::function<void(int n_users, int trial, const MaintenanceStats &stats)>;

// Mean and population standard deviation of C over all users of all trials.
// `observer`, when set, sees the raw stats of every trial.
std::vector<OverheadRow> overhead_vs_users(std::span<const int> user_counts, const MaintenanceScenario &scenario,
                                           int trials, SkeletonFinder &finder, const TrialObserver &observer = {});

} // namespace pathskel

#endif
