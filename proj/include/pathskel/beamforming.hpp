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

#ifndef PATHSKEL_BEAMFORMING_HPP
#define PATHSKEL_BEAMFORMING_HPP

#include "pathskel/channel.hpp"

#include <span>
#include <vector>

namespace pathskel
{

enum class ArraySide
{
    Tx,
    Rx
};

struct Codebook
{
    ArraySide side = ArraySide::Tx;
    int n_antennas = 0;
    std::vector<double> angles_deg; // ascending sin(angle), each in [0, 360)

    std::size_t size() const { return angles_deg.size(); }
};

// n*oversampling beams with sin(angle) = -1 + 2k/(n*oversampling).
Codebook make_grid_codebook(ArraySide side, int n, int oversampling);

struct BeamPair
{
    BeamVector f; // Tx beamformer
    BeamVector w; // Rx combiner
    double tx_angle_deg = 0.0;
    double rx_angle_deg = 0.0;
};

BeamPair make_beam_pair(double tx_angle_deg, double rx_angle_deg, int n_tx, int n_rx);

// |w^H H f|^2
double link_gain(const ChannelMatrix &h, const BeamVector &f, const BeamVector &w);

struct RadioParams
{
    double tx_power_w = 1.0;
    double bandwidth_hz = 500e6;
    double noise_n0_w_per_hz = 0.0;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double w);

// B * N0 in dBm for N0 given in dBm/Hz.
double noise_power_dbm(double bandwidth_hz, double n0_dbm_per_hz);

double snr_linear(double gain, double p_watts, double b_hz, double n0_w_per_hz);
double rate_bps(double snr, double b_hz);

struct LinkBudgetResult
{
    BeamPair pair;
    double gain = 0.0;
    double snr_linear = 0.0;
    double rate_bps = 0.0;
};

LinkBudgetResult evaluate_link(const ChannelMatrix &h, BeamPair pair, const RadioParams &radio);

// Full F x W sweep; ties go to the lexicographically smallest (tx_angle, rx_angle).
LinkBudgetResult exhaustive_search(const ChannelMatrix &h, const Codebook &f_book, const Codebook &w_book,
                                   const RadioParams &radio);

// Entry l is w(aoa_l)^H H f(aod_l), the gain sounded along skeleton path l.
std::vector<cplx> measure_skeleton_gains(const ChannelMatrix &h, const PathSkeleton &ps);

// argmax |g_l|, lowest index on ties.
std::size_t strongest_path_index(std::span<const cplx> gains);

BeamPair strongest_path_beams(const PathSkeleton &ps, std::span<const cplx> measured_gains, int n_tx, int n_rx);

struct FrameModel
{
    double frame_duration_s = 10e-3;
    double pilot_slot_s = 10e-6;
    double query_overhead_s = 1e-3;

    // Throws std::invalid_argument unless max_pilots slots fit in one frame.
    void validate(int max_pilots) const;
};

struct Throughput
{
    double bits = 0.0;
    bool overhead_exceeded = false;
};

// rate * (frame - pilots*slot - query), clamped at zero with overhead_exceeded set.
Throughput throughput_bits(double rate_bps, const FrameModel &frame, int pilots_sent, bool db_query);

} // namespace pathskel

#endif
