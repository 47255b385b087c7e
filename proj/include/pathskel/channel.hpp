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

// Narrowband cluster channel, path skeletons and the skeleton distance.
//
// Angles are in degrees, counterclockwise from +x (the same convention as the
// ray tracer). Array responses follow a half-wavelength ULA steered by sin(angle),
// so a(angle) and a(180 - angle) coincide.

#ifndef PATHSKEL_CHANNEL_HPP
#define PATHSKEL_CHANNEL_HPP

#include "pathskel/geometry.hpp"
#include "pathskel/random.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace pathskel
{

using cplx = std::complex<double>;
using BeamVector = Eigen::VectorXcd;

inline constexpr double kSpeedOfLight = 299792458.0;

// Unit-norm response (1/sqrt(n)) * exp(-j*pi*k*sin(angle)), k = 0..n-1.
BeamVector ula_response(double angle_deg, int n);

double wavelength_m(double freq_hz);

// Free-space loss at the 1 m reference distance, 20*log10(4*pi/lambda).
double fspl_1m_db(double freq_hz);

struct PropagationModel
{
    double exponent = 3.0;
    double carrier_hz = 28e9;
    double height_difference_m = 0.0; // folded into the 2D length when non-zero
};

// Reference-distance model plus the ray's material and bounce losses.
// Throws std::invalid_argument below the 1 m reference distance.
double pathloss_db(const RayPath &ray, const PropagationModel &model);

double doppler_hz(double speed_mps, double motion_dir_deg, double aoa_deg, double wavelength);

// Circularly-symmetric complex Gaussian with variance 10^(-pathloss_db/10).
cplx sample_gain(double pathloss_db, Rng &rng);

struct PathParams
{
    double aoa_deg = 0.0;
    double aod_deg = 0.0;
    double pathloss_db = 0.0;
    double doppler_hz = 0.0;
    cplx gain{0.0, 0.0};
};

class ChannelMatrix
{
  public:
    ChannelMatrix(int n_rx, int n_tx) : h_(Eigen::MatrixXcd::Zero(n_rx, n_tx)) {}
    explicit ChannelMatrix(Eigen::MatrixXcd h) : h_(std::move(h)) {}

    int n_rx() const { return static_cast<int>(h_.rows()); }
    int n_tx() const { return static_cast<int>(h_.cols()); }
    const Eigen::MatrixXcd &matrix() const { return h_; }
    cplx operator()(int r, int c) const { return h_(r, c); }

  private:
    Eigen::MatrixXcd h_;
};

// sqrt(n_tx*n_rx/L) * sum_l g_l * exp(j*2*pi*fd_l*t) * a_rx(aoa_l) * a_tx(aod_l)^H
ChannelMatrix synthesize_channel(std::span<const PathParams> paths, int n_tx, int n_rx, double doppler_time_s);

struct SkeletonEntry
{
    double aoa_deg = 0.0;
    double aod_deg = 0.0;
    double amplitude = 0.0; // linear large-scale amplitude, 10^(-PL/20)
};

struct PathSkeleton
{
    Vec2 location;
    std::vector<SkeletonEntry> entries; // strongest first

    std::size_t size() const { return entries.size(); }
    double strongest_amplitude() const { return entries.front().amplitude; }
};

// Checks L >= 1, finite positive amplitudes sorted in descending order.
void validate(const PathSkeleton &ps);

// Keeps the l_max lowest-loss rays. Throws std::invalid_argument("no paths at location")
// for an empty ray list.
PathSkeleton skeleton_from_rays(std::span<const RayPath> rays, int l_max, const PropagationModel &model,
                                Vec2 location = {});

// Large-scale channel of the skeleton: no fading, no Doppler.
ChannelMatrix skeleton_matrix(const PathSkeleton &ps, int n_tx, int n_rx);

enum class DistanceNorm
{
    Frobenius,
    Spectral
};

// Throws std::invalid_argument on mismatched dimensions.
double matrix_distance(const ChannelMatrix &a, const ChannelMatrix &b, DistanceNorm norm = DistanceNorm::Frobenius);

double skeleton_distance(const PathSkeleton &a, const PathSkeleton &b, int n_tx, int n_rx,
                         DistanceNorm norm = DistanceNorm::Frobenius);

} // namespace pathskel

#endif
