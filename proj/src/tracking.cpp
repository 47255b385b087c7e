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

#include "pathskel/tracking.hpp"
#include "pathskel/text_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace pathskel
{

namespace
{

// Sampled trajectories accumulate rounding; a 3 m step must fire at 2.9999999 m.
constexpr double kEuclideanSlack = 1e-9;

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

PathSkeleton require_skeleton(const SkeletonSource &source, std::size_t step, const Vec2 &location)
{
    auto ps = source.skeleton_at(step, location);
    if (!ps)
        throw SkeletonFinderRequired(step, location);
    return std::move(*ps);
}

bool policy_fires(const UpdatePolicy &policy, const TrackerState &state, std::size_t step, const Vec2 &location,
                  double d)
{
    return std::visit(overloaded{
                          [&](const SkeletonDistancePolicy &p) { return d >= p.threshold; },
                          [&](const EveryLocationPolicy &) { return step != state.reference_step; },
                          [&](const FixedEuclideanPolicy &p) {
                              return distance(location, state.reference_location) >= p.step_m - kEuclideanSlack;
                          },
                      },
                      policy);
}

} // namespace

void validate(const UpdatePolicy &policy)
{
    std::visit(overloaded{
                   [](const SkeletonDistancePolicy &p) {
                       if (!(p.threshold > 0.0))
                           throw std::invalid_argument("Skeleton-distance threshold must be positive.");
                   },
                   [](const EveryLocationPolicy &) {},
                   [](const FixedEuclideanPolicy &p) {
                       if (!(p.step_m > 0.0) || !std::isfinite(p.step_m))
                           throw std::invalid_argument("Euclidean update step must be positive.");
                   },
               },
               policy);
}

std::string policy_name(const UpdatePolicy &policy)
{
    return std::visit(overloaded{
                          [](const SkeletonDistancePolicy &p) {
                              return std::isinf(p.threshold) ? std::string("never_update")
                                                             : "skeleton_distance(" + format_number(p.threshold) + ")";
                          },
                          [](const EveryLocationPolicy &) { return std::string("every_location"); },
                          [](const FixedEuclideanPolicy &p) {
                              return "fixed_euclidean(" + format_number(p.step_m) + ")";
                          },
                      },
                      policy);
}

SkeletonFinderRequired::SkeletonFinderRequired(std::size_t step, Vec2 location)
    : std::runtime_error("skeleton finder required at location index " + std::to_string(step) + " (" +
                         format_number(location.x) + ", " + format_number(location.y) + ")"),
      step_(step), location_(location)
{
}

ZeroRateError::ZeroRateError(std::size_t index)
    : std::runtime_error("zero rate at location index " + std::to_string(index)), index_(index)
{
}

InfeasibleBudget::InfeasibleBudget(int u_max, int min_queries)
    : std::runtime_error("no threshold satisfies U < " + std::to_string(u_max) + "; minimum achievable U is " +
                         std::to_string(min_queries)),
      min_queries_(min_queries)
{
}

TrackerState init_tracker(std::size_t step, const Vec2 &location, const SkeletonSource &source)
{
    TrackerState s;
    s.reference_location = location;
    s.reference_step = step;
    s.reference_skeleton = require_skeleton(source, step, location);
    s.queries = 0;
    return s;
}

StepResult track_step(const TrackerState &state, std::size_t step, const Vec2 &location,
                      const SkeletonSource &source, const ChannelOracle &oracle, const UpdatePolicy &policy,
                      const LinkConfig &link)
{
    StepResult out;
    out.state = state;
    auto &rec = out.record;
    rec.index = step;
    rec.location = location;

    PathSkeleton current = require_skeleton(source, step, location);
    rec.distance = skeleton_distance(current, state.reference_skeleton, link.n_tx, link.n_rx, link.norm);

    ChannelMatrix h = oracle.channel_at(step, location);
    auto gains = measure_skeleton_gains(h, state.reference_skeleton);
    rec.pilots_sent = static_cast<int>(state.reference_skeleton.size());

    bool update = policy_fires(policy, state, step, location, rec.distance);
    if (!update && step != state.reference_step)
    {
        // pilot power is shared by the L sounded paths
        double best = std::norm(gains[strongest_path_index(gains)]);
        double pilot_w = link.radio.tx_power_w / static_cast<double>(state.reference_skeleton.size());
        double snr = snr_linear(best, pilot_w, link.radio.bandwidth_hz, link.radio.noise_n0_w_per_hz);
        if (snr < link.blocked_snr_linear)
        {
            update = true;
            rec.forced_refresh = true;
        }
    }

    if (update)
    {
        out.state.reference_location = location;
        out.state.reference_step = step;
        out.state.reference_skeleton = std::move(current);
        out.state.queries += 1;
        gains = measure_skeleton_gains(h, out.state.reference_skeleton);
        rec.pilots_sent += static_cast<int>(out.state.reference_skeleton.size());
        rec.updated = true;
    }

    out.beams = strongest_path_beams(out.state.reference_skeleton, gains, link.n_tx, link.n_rx);
    rec.gain = link_gain(h, out.beams.f, out.beams.w);
    rec.snr_linear = snr_linear(rec.gain, link.radio.tx_power_w, link.radio.bandwidth_hz, link.radio.noise_n0_w_per_hz);
    rec.rate_bps = rate_bps(rec.snr_linear, link.radio.bandwidth_hz);
    return out;
}

TrajectoryRun run_trajectory(std::span<const Vec2> trajectory, const UpdatePolicy &policy,
                             const SkeletonSource &source, const ChannelOracle &oracle, const LinkConfig &link,
                             std::size_t first_step)
{
    if (trajectory.empty())
        throw std::invalid_argument("Trajectory must contain at least one location.");
    validate(policy);

    TrajectoryRun run;
    run.records.reserve(trajectory.size());
    TrackerState state = init_tracker(first_step, trajectory[0], source);
    for (std::size_t i = 0; i < trajectory.size(); ++i)
    {
        auto step = track_step(state, first_step + i, trajectory[i], source, oracle, policy, link);
        state = std::move(step.state);
        run.records.push_back(step.record);
    }
    run.queries = state.queries;
    return run;
}

std::vector<double> diff_nr(std::span<const double> rates)
{
    std::vector<double> out;
    if (rates.size() < 2)
        return out;
    out.reserve(rates.size() - 1);
    for (std::size_t i = 0; i + 1 < rates.size(); ++i)
    {
        if (!(rates[i] > 0.0))
            throw ZeroRateError(i);
        out.push_back((rates[i + 1] - rates[i]) / rates[i]);
    }
    if (!(rates.back() > 0.0))
        throw ZeroRateError(rates.size() - 1);
    return out;
}

ThresholdSearch optimize_threshold(std::span<const TrainingTrajectory> trajectories, int u_max,
                                   std::span<const double> t_grid, const LinkConfig &link)
{
    if (t_grid.empty())
        throw std::invalid_argument("Threshold grid must not be empty.");
    if (u_max < 1)
        throw std::invalid_argument("Query budget must be at least 1.");
    for (std::size_t i = 0; i < t_grid.size(); ++i)
    {
        if (!(t_grid[i] > 0.0))
            throw std::invalid_argument("Threshold grid values must be positive.");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("Threshold grid must be strictly increasing.");
    }
    for (const auto &t : trajectories)
        if (t.source == nullptr || t.oracle == nullptr)
            throw std::invalid_argument("Training trajectory is missing its skeleton source or channel oracle.");

    ThresholdSearch result;
    result.grid.resize(t_grid.size());

    auto evaluate = [&](std::size_t g) {
        ThresholdEvaluation ev;
        ev.threshold = t_grid[g];
        for (const auto &t : trajectories)
        {
            if (t.points.empty())
                continue;
            auto run = run_trajectory(t.points, SkeletonDistancePolicy{t_grid[g]}, *t.source, *t.oracle, link,
                                      t.first_step);
            ev.queries += run.queries;
            for (const auto &r : run.records)
                ev.sum_rate_bps += r.rate_bps;
        }
        ev.feasible = ev.queries <= u_max - 1;
        result.grid[g] = ev;
    };

    // Each grid point writes only its own slot, so the outcome is order-independent.
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(t_grid.size(), 1));
    if (workers <= 1)
    {
        for (std::size_t g = 0; g < t_grid.size(); ++g)
            evaluate(g);
    }
    else
    {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t g = next++; g < t_grid.size() && !failed; g = next++)
                {
                    try
                    {
                        evaluate(g);
                    }
                    catch (...)
                    {
                        if (!failed.exchange(true))
                            failure = std::current_exception();
                    }
                }
            });
        pool.clear();
        if (failure)
            std::rethrow_exception(failure);
    }

    int min_u = std::numeric_limits<int>::max();
    std::optional<std::size_t> best;
    for (std::size_t g = 0; g < result.grid.size(); ++g)
    {
        const auto &ev = result.grid[g];
        min_u = std::min(min_u, ev.queries);
        if (ev.feasible && (!best || ev.sum_rate_bps > result.grid[*best].sum_rate_bps))
            best = g;
    }
    if (!best)
        throw InfeasibleBudget(u_max, min_u);
    result.t_star = result.grid[*best].threshold;
    result.queries = result.grid[*best].queries;
    result.sum_rate_bps = result.grid[*best].sum_rate_bps;
    return result;
}

std::vector<double> default_threshold_grid(std::span<const TrainingTrajectory> trajectories, const LinkConfig &link,
                                           std::size_t points)
{
    if (points < 2)
        throw std::invalid_argument("Threshold grid needs at least two points.");
    std::vector<double> d;
    for (const auto &t : trajectories)
    {
        if (t.points.empty())
            continue;
        auto first = require_skeleton(*t.source, t.first_step, t.points[0]);
        for (std::size_t i = 1; i < t.points.size(); ++i)
        {
            auto ps = require_skeleton(*t.source, t.first_step + i, t.points[i]);
            double v = skeleton_distance(ps, first, link.n_tx, link.n_rx, link.norm);
            if (v > 0.0)
                d.push_back(v);
        }
    }
    double median = 1.0;
    if (!d.empty())
    {
        auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
        std::nth_element(d.begin(), mid, d.end());
        median = *mid;
    }
    const double lo = std::log(1e-3 * median);
    const double hi = std::log(10.0 * median);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    return grid;
}

std::vector<int> split_budget(std::span<const std::size_t> weights, int total)
{
    std::vector<int> out(weights.size(), 0);
    const double sum = static_cast<double>(std::accumulate(weights.begin(), weights.end(), std::size_t{0}));
    if (sum <= 0.0 || total <= 0)
        return out;
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i)
    {
        double exact = total * static_cast<double>(weights[i]) / sum;
        out[i] = static_cast<int>(std::floor(exact));
        assigned += out[i];
        remainders.push_back({exact - out[i], i});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto &a, const auto &b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned)
        ++out[remainders[k].second];
    return out;
}

std::map<int, std::optional<ThresholdSearch>> per_tx_thresholds(std::span<const TxSegments> segments,
                                                                int u_max_total, const LinkConfig &link,
                                                                std::span<const double> t_grid)
{
    std::vector<std::size_t> weights;
    for (const auto &s : segments)
    {
        std::size_t n = 0;
        for (const auto &p : s.parts)
            n += p.points.size();
        weights.push_back(n);
    }
    auto budgets = split_budget(weights, u_max_total);

    std::map<int, std::optional<ThresholdSearch>> out;
    for (std::size_t i = 0; i < segments.size(); ++i)
    {
        if (weights[i] == 0)
        {
            out[segments[i].tx_id] = std::nullopt;
            continue;
        }
        if (budgets[i] < 1)
            throw std::invalid_argument("Query budget " + std::to_string(u_max_total) +
                                        " leaves transmitter " + std::to_string(segments[i].tx_id) +
                                        " without any queries.");
        std::vector<double> grid(t_grid.begin(), t_grid.end());
        if (grid.empty())
            grid = default_threshold_grid(segments[i].parts, link);
        out[segments[i].tx_id] = optimize_threshold(segments[i].parts, budgets[i], grid, link);
    }
    return out;
}

} // namespace pathskel
