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

#include "pathskel/channel.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace pathskel
{

namespace
{
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

BeamVector ula_response(double angle_deg, int n)
{
    if (n < 1)
        throw std::invalid_argument("Array size must be at least 1.");
    const double s = std::sin(angle_deg * kDegToRad);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    BeamVector a(n);
    for (int k = 0; k < n; ++k)
        a(k) = scale * std::polar(1.0, -std::numbers::pi * k * s);
    return a;
}

double wavelength_m(double freq_hz)
{
    if (!(freq_hz > 0.0))
        throw std::invalid_argument("Carrier frequency must be positive.");
    return kSpeedOfLight / freq_hz;
}

double fspl_1m_db(double freq_hz)
{
    return 20.0 * std::log10(4.0 * std::numbers::pi / wavelength_m(freq_hz));
}

double pathloss_db(const RayPath &ray, const PropagationModel &model)
{
    double length = ray.length_m;
    if (model.height_difference_m != 0.0)
        length = std::hypot(length, model.height_difference_m);
    if (!(length >= 1.0))
        throw std::invalid_argument("Path length is below the 1 m reference distance.");
    return fspl_1m_db(model.carrier_hz) + 10.0 * model.exponent * std::log10(length) + ray.penetration_loss_db +
           ray.reflection_loss_db;
}

double doppler_hz(double speed_mps, double motion_dir_deg, double aoa_deg, double wavelength)
{
    if (!(wavelength > 0.0))
        throw std::invalid_argument("Wavelength must be positive.");
    return speed_mps / wavelength * std::cos((aoa_deg - motion_dir_deg) * kDegToRad);
}

cplx sample_gain(double pathloss_db, Rng &rng)
{
    const double sigma = std::sqrt(0.5 * std::pow(10.0, -0.1 * pathloss_db));
    std::normal_distribution<double> n01(0.0, 1.0);
    double re = n01(rng);
    double im = n01(rng);
    return {sigma * re, sigma * im};
}

ChannelMatrix synthesize_channel(std::span<const PathParams> paths, int n_tx, int n_rx, double doppler_time_s)
{
    if (paths.empty())
        throw std::invalid_argument("Cannot synthesize a channel without paths.");
    const double scale = std::sqrt(static_cast<double>(n_tx) * n_rx / static_cast<double>(paths.size()));
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n_rx, n_tx);
    for (const auto &p : paths)
    {
        cplx coeff = p.gain * std::polar(1.0, 2.0 * std::numbers::pi * p.doppler_hz * doppler_time_s);
        h += coeff * ula_response(p.aoa_deg, n_rx) * ula_response(p.aod_deg, n_tx).adjoint();
    }
    return ChannelMatrix(scale * h);
}

void validate(const PathSkeleton &ps)
{
    if (ps.entries.empty())
        throw std::invalid_argument("Path skeleton must contain at least one path.");
    for (std::size_t i = 0; i < ps.entries.size(); ++i)
    {
        const auto &e = ps.entries[i];
        if (!std::isfinite(e.amplitude) || !(e.amplitude > 0.0))
            throw std::invalid_argument("Skeleton amplitudes must be finite and positive.");
        if (i > 0 && e.amplitude > ps.entries[i - 1].amplitude)
            throw std::invalid_argument("Skeleton entries must be sorted by descending amplitude.");
    }
}

PathSkeleton skeleton_from_rays(std::span<const RayPath> rays, int l_max, const PropagationModel &model,
                                Vec2 location)
{
    if (rays.empty())
        throw std::invalid_argument("no paths at location");
    if (l_max < 1)
        throw std::invalid_argument("Skeleton size must be at least 1.");

    struct Scored
    {
        double pl;
        std::size_t index;
    };
    std::vector<Scored> scored;
    scored.reserve(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i)
        scored.push_back({pathloss_db(rays[i], model), i});
    // Stable on ties so the tracer's ordering decides.
    std::stable_sort(scored.begin(), scored.end(), [](const Scored &a, const Scored &b) { return a.pl < b.pl; });

    PathSkeleton ps;
    ps.location = location;
    const auto keep = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(l_max));
    for (std::size_t i = 0; i < keep; ++i)
    {
        const auto &r = rays[scored[i].index];
        ps.entries.push_back({r.aoa_deg, r.aod_deg, std::pow(10.0, -scored[i].pl / 20.0)});
    }
    return ps;
}

ChannelMatrix skeleton_matrix(const PathSkeleton &ps, int n_tx, int n_rx)
{
    validate(ps);
    const double scale = std::sqrt(static_cast<double>(n_tx) * n_rx / static_cast<double>(ps.size()));
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n_rx, n_tx);
    for (const auto &e : ps.entries)
        h += e.amplitude * ula_response(e.aoa_deg, n_rx) * ula_response(e.aod_deg, n_tx).adjoint();
    return ChannelMatrix(scale * h);
}

double matrix_distance(const ChannelMatrix &a, const ChannelMatrix &b, DistanceNorm norm)
{
    if (a.n_rx() != b.n_rx() || a.n_tx() != b.n_tx())
        throw std::invalid_argument("Channel matrices have different array sizes.");
    Eigen::MatrixXcd diff = a.matrix() - b.matrix();
    if (norm == DistanceNorm::Frobenius)
        return diff.norm();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(diff);
    return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

double skeleton_distance(const PathSkeleton &a, const PathSkeleton &b, int n_tx, int n_rx, DistanceNorm norm)
{
    return matrix_distance(skeleton_matrix(a, n_tx, n_rx), skeleton_matrix(b, n_tx, n_rx), norm);
}

} // namespace pathskel
