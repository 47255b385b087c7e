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

#include "pathskel/database.hpp"
#include "pathskel/text_io.hpp"

#include <algorithm>
#include <cmath>

namespace pathskel
{

namespace
{

// Accumulated dt rounding must not postpone an expiry by a whole step.
constexpr double kAgeSlack = 1e-9;

int cell_index(double offset, double grid, int count)
{
    // Upper-closed cells: (k*g, (k+1)*g], with the lower boundary folded into cell 0.
    int k = static_cast<int>(std::ceil(offset / grid)) - 1;
    return std::clamp(k, 0, count - 1);
}

double polyline_length(const std::vector<Vec2> &pts)
{
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        len += distance(pts[i - 1], pts[i]);
    return len;
}

Vec2 point_at_arc(const std::vector<Vec2> &pts, double s)
{
    for (std::size_t i = 1; i < pts.size(); ++i)
    {
        double seg = distance(pts[i - 1], pts[i]);
        if (s <= seg)
            return pts[i - 1] + (s / seg) * (pts[i] - pts[i - 1]);
        s -= seg;
    }
    return pts.back();
}

} // namespace

const char *to_string(CellStatus s) { return s == CellStatus::Normal ? "normal" : "watch"; }

OutOfCoverage::OutOfCoverage(Vec2 p)
    : std::out_of_range("location (" + format_number(p.x) + ", " + format_number(p.y) + ") is outside the coverage area")
{
}

SkeletonDatabase::SkeletonDatabase(Rect area, double grid_size_m, double t_aging_s)
    : area_(area), grid_(grid_size_m), t_aging_(t_aging_s)
{
    if (!(grid_size_m > 0.0))
        throw std::invalid_argument("Grid size must be positive.");
    if (!(t_aging_s > 0.0))
        throw std::invalid_argument("Aging threshold must be positive.");
    if (!(area.width() > 0.0) || !(area.height() > 0.0))
        throw std::invalid_argument("Coverage area must have positive width and height.");

    nx_ = std::max(1, static_cast<int>(std::ceil(area.width() / grid_ - 1e-9)));
    ny_ = std::max(1, static_cast<int>(std::ceil(area.height() / grid_ - 1e-9)));
    cells_.reserve(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
    for (int iy = 0; iy < ny_; ++iy)
    {
        double y0 = area.min.y + iy * grid_;
        double y1 = std::min(y0 + grid_, area.max.y);
        for (int ix = 0; ix < nx_; ++ix)
        {
            double x0 = area.min.x + ix * grid_;
            double x1 = std::min(x0 + grid_, area.max.x);
            GridCell c;
            c.id = iy * nx_ + ix;
            c.center = {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
            cells_.push_back(std::move(c));
        }
    }
}

const GridCell &SkeletonDatabase::cell(int id) const
{
    if (id < 0 || static_cast<std::size_t>(id) >= cells_.size())
        throw std::out_of_range("Unknown grid cell id " + std::to_string(id) + ".");
    return cells_[static_cast<std::size_t>(id)];
}

int SkeletonDatabase::grid_of(const Vec2 &location) const
{
    if (!area_.contains(location))
        throw OutOfCoverage(location);
    int ix = cell_index(location.x - area_.min.x, grid_, nx_);
    int iy = cell_index(location.y - area_.min.y, grid_, ny_);
    return iy * nx_ + ix;
}

SkeletonQuery SkeletonDatabase::query_skeleton(const Vec2 &location) const
{
    const auto &c = cells_[static_cast<std::size_t>(grid_of(location))];
    if (c.status == CellStatus::Normal)
        return *c.skeleton;
    return NeedsDiscovery{c.id};
}

std::optional<Discovery> SkeletonDatabase::dispatch_discovery(int cell_id, std::span<const int> users, Rng &rng,
                                                              SkeletonFinder &finder,
                                                              const std::map<int, double> &confirm_probability)
{
    (void)cell(cell_id);
    if (users.empty())
        return std::nullopt;

    std::uniform_int_distribution<std::size_t> pick(0, users.size() - 1);
    const int user = users[pick(rng)];

    auto p = confirm_probability.find(user);
    if (p != confirm_probability.end() && p->second < 1.0)
    {
        std::bernoulli_distribution confirm(std::max(0.0, p->second));
        if (!confirm(rng))
            return std::nullopt;
    }

    auto &c = cells_[static_cast<std::size_t>(cell_id)];
    auto ps = finder.discover(c.center);
    if (!ps)
        return std::nullopt;
    c.skeleton = *ps;
    c.status = CellStatus::Normal;
    c.age_s = 0.0;
    ++completed_;
    return Discovery{std::move(*ps), user};
}

std::vector<int> SkeletonDatabase::tick(double dt_s)
{
    if (!(dt_s > 0.0))
        throw std::invalid_argument("Tick interval must be positive.");
    std::vector<int> expired;
    for (auto &c : cells_)
    {
        if (c.status != CellStatus::Normal)
            continue;
        c.age_s += dt_s;
        if (c.age_s >= t_aging_ - kAgeSlack)
        {
            c.status = CellStatus::Watch;
            expired.push_back(c.id);
        }
    }
    return expired;
}

void SkeletonDatabase::dump(std::ostream &out) const
{
    out << "id,cx,cy,status,age_s,L\n";
    for (const auto &c : cells_)
        out << c.id << ',' << format_number(c.center.x) << ',' << format_number(c.center.y) << ','
            << to_string(c.status) << ',' << format_number(c.age_s) << ','
            << (c.skeleton ? c.skeleton->size() : 0) << '\n';
}

SkeletonDatabase partition_coverage(const Rect &area, double grid_size_m, double t_aging_s)
{
    return SkeletonDatabase(area, grid_size_m, t_aging_s);
}

DatabaseSkeletonSource::DatabaseSkeletonSource(SkeletonDatabase &db, SkeletonFinder &finder, int user_id,
                                               std::uint64_t seed)
    : db_(&db), finder_(&finder), user_id_(user_id), rng_(seed)
{
}

std::optional<PathSkeleton> DatabaseSkeletonSource::skeleton_at(std::size_t, const Vec2 &location) const
{
    auto q = db_->query_skeleton(location);
    if (auto *ps = std::get_if<PathSkeleton>(&q))
        return *ps;
    const int users[] = {user_id_};
    auto found = db_->dispatch_discovery(std::get<NeedsDiscovery>(q).cell_id, users, rng_, *finder_);
    if (!found)
        return std::nullopt;
    return found->skeleton;
}

Vec2 position_on_route(const MaintenanceUser &user, double t_s)
{
    if (user.route.empty())
        throw std::invalid_argument("User route is empty.");
    const double len = polyline_length(user.route);
    if (len <= 0.0)
        return user.route.front();
    double s = std::fmod(user.start_offset_m + user.speed_mps * t_s, 2.0 * len);
    if (s < 0.0)
        s += 2.0 * len;
    if (s > len)
        s = 2.0 * len - s;
    return point_at_arc(user.route, s);
}

MaintenanceStats run_maintenance_sim(SkeletonDatabase &db, std::span<const MaintenanceUser> users, double duration_s,
                                     double dt_s, Rng &rng, SkeletonFinder &finder)
{
    if (users.empty())
        throw std::invalid_argument("Maintenance simulation needs at least one user.");
    if (duration_s < 0.0 || !(dt_s > 0.0))
        throw std::invalid_argument("Simulation duration must be non-negative and the step positive.");

    MaintenanceStats stats;
    stats.duration_s = duration_s;
    std::map<int, double> confirm;
    for (const auto &u : users)
    {
        stats.requests[u.id] = 0;
        if (u.confirm_probability < 1.0)
            confirm[u.id] = u.confirm_probability;
    }

    const auto steps = static_cast<long long>(std::llround(duration_s / dt_s));
    std::map<int, std::vector<int>> occupancy;
    for (long long k = 0; k < steps; ++k)
    {
        const double t = static_cast<double>(k) * dt_s;
        occupancy.clear();
        for (const auto &u : users)
        {
            Vec2 p = position_on_route(u, t);
            if (db.area().contains(p))
                occupancy[db.grid_of(p)].push_back(u.id);
        }
        for (const auto &[cell_id, in_cell] : occupancy)
        {
            if (db.cell(cell_id).status != CellStatus::Watch)
                continue;
            auto found = db.dispatch_discovery(cell_id, in_cell, rng, finder, confirm);
            if (found)
            {
                ++stats.requests[found->user_id];
                ++stats.dispatches;
            }
        }
        db.tick(dt_s);
    }
    return stats;
}

std::vector<MaintenanceUser> random_users(const MaintenanceScenario &scenario, int count, Rng &rng)
{
    if (scenario.routes.empty() || scenario.speeds_mps.empty())
        throw std::invalid_argument("Maintenance scenario needs routes and speeds.");
    std::uniform_int_distribution<std::size_t> pick_route(0, scenario.routes.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_speed(0, scenario.speeds_mps.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<MaintenanceUser> users;
    users.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
    {
        MaintenanceUser u;
        u.id = i;
        u.route = scenario.routes[pick_route(rng)];
        u.speed_mps = scenario.speeds_mps[pick_speed(rng)];
        u.start_offset_m = unit(rng) * 2.0 * polyline_length(u.route);
        u.confirm_probability = scenario.confirm_probability;
        users.push_back(std::move(u));
    }
    return users;
}

void write_requests_csv(std::ostream &out, const MaintenanceStats &stats)
{
    out << "user_id,C\n";
    for (const auto &[id, c] : stats.requests)
        out << id << ',' << c << '\n';
}

std::vector<OverheadRow> overhead_vs_users(std::span<const int> user_counts, const MaintenanceScenario &scenario,
                                           int trials, SkeletonFinder &finder, const TrialObserver &observer)
{
    if (trials < 1)
        throw std::invalid_argument("At least one trial is required.");
    std::vector<OverheadRow> rows;
    for (int count : user_counts)
    {
        if (count < 1)
            throw std::invalid_argument("User counts must be at least 1.");
        std::vector<double> c_values;
        for (int trial = 0; trial < trials; ++trial)
        {
            Rng rng(derive_seed(scenario.seed, {static_cast<std::uint64_t>(count), static_cast<std::uint64_t>(trial)}));
            auto users = random_users(scenario, count, rng);
            auto db = partition_coverage(scenario.coverage, scenario.grid_size_m, scenario.t_aging_s);
            auto stats = run_maintenance_sim(db, users, scenario.horizon_s, scenario.dt_s, rng, finder);
            if (observer)
                observer(count, trial, stats);
            for (const auto &[id, c] : stats.requests)
                c_values.push_back(static_cast<double>(c));
        }
        double mean = 0.0;
        for (double c : c_values)
            mean += c;
        mean /= static_cast<double>(c_values.size());
        double var = 0.0;
        for (double c : c_values)
            var += (c - mean) * (c - mean);
        var /= static_cast<double>(c_values.size());
        rows.push_back({count, mean, std::sqrt(var)});
    }
    return rows;
}

} // namespace pathskel
