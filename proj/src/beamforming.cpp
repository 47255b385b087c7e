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

#include "pathskel/beamforming.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pathskel
{

Codebook make_grid_codebook(ArraySide side, int n, int oversampling)
{
    if (n < 1)
        throw std::invalid_argument("Codebook needs at least one antenna.");
    if (oversampling < 1)
        throw std::invalid_argument("Codebook oversampling must be at least 1.");
    Codebook book;
    book.side = side;
    book.n_antennas = n;
    const int count = n * oversampling;
    book.angles_deg.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k)
    {
        double s = -1.0 + 2.0 * k / static_cast<double>(count);
        book.angles_deg.push_back(normalize_deg(std::asin(s) * 180.0 / std::numbers::pi));
    }
    return book;
}

BeamPair make_beam_pair(double tx_angle_deg, double rx_angle_deg, int n_tx, int n_rx)
{
    return {ula_response(tx_angle_deg, n_tx), ula_response(rx_angle_deg, n_rx), tx_angle_deg, rx_angle_deg};
}

double link_gain(const ChannelMatrix &h, const BeamVector &f, const BeamVector &w)
{
    if (f.size() != h.n_tx() || w.size() != h.n_rx())
        throw std::invalid_argument("Beam vector sizes do not match the channel matrix.");
    return std::norm(w.dot(h.matrix() * f)); // Eigen's dot conjugates the left operand
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

double noise_power_dbm(double bandwidth_hz, double n0_dbm_per_hz)
{
    if (!(bandwidth_hz > 0.0))
        throw std::invalid_argument("Bandwidth must be positive.");
    return n0_dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
}

double snr_linear(double gain, double p_watts, double b_hz, double n0_w_per_hz)
{
    if (!(b_hz > 0.0))
        throw std::invalid_argument("Bandwidth must be positive.");
    if (!(n0_w_per_hz > 0.0))
        throw std::invalid_argument("Noise spectral density must be positive.");
    return p_watts * gain / (b_hz * n0_w_per_hz);
}

double rate_bps(double snr, double b_hz)
{
    if (snr < 0.0)
        throw std::invalid_argument("SNR cannot be negative.");
    return b_hz * std::log2(1.0 + snr);
}

LinkBudgetResult evaluate_link(const ChannelMatrix &h, BeamPair pair, const RadioParams &radio)
{
    LinkBudgetResult r;
    r.gain = link_gain(h, pair.f, pair.w);
    r.snr_linear = snr_linear(r.gain, radio.tx_power_w, radio.bandwidth_hz, radio.noise_n0_w_per_hz);
    r.rate_bps = rate_bps(r.snr_linear, radio.bandwidth_hz);
    r.pair = std::move(pair);
    return r;
}

LinkBudgetResult exhaustive_search(const ChannelMatrix &h, const Codebook &f_book, const Codebook &w_book,
                                   const RadioParams &radio)
{
    if (f_book.n_antennas != h.n_tx() || w_book.n_antennas != h.n_rx())
        throw std::invalid_argument("Codebook antenna counts do not match the channel matrix.");
    if (f_book.angles_deg.empty() || w_book.angles_deg.empty())
        throw std::invalid_argument("Codebooks must not be empty.");

    std::vector<BeamVector> w_vecs;
    w_vecs.reserve(w_book.size());
    for (double a : w_book.angles_deg)
        w_vecs.push_back(ula_response(a, w_book.n_antennas));

    double best = -1.0;
    std::size_t best_f = 0;
    std::size_t best_w = 0;
    for (std::size_t i = 0; i < f_book.size(); ++i)
    {
        BeamVector hf = h.matrix() * ula_response(f_book.angles_deg[i], f_book.n_antennas);
        for (std::size_t j = 0; j < w_book.size(); ++j)
        {
            double g = std::norm(w_vecs[j].dot(hf));
            bool better = g > best;
            if (!better && g == best)
            {
                double ta = f_book.angles_deg[i], ra = w_book.angles_deg[j];
                double tb = f_book.angles_deg[best_f], rb = w_book.angles_deg[best_w];
                better = ta < tb || (ta == tb && ra < rb);
            }
            if (better)
            {
                best = g;
                best_f = i;
                best_w = j;
            }
        }
    }
    return evaluate_link(h, make_beam_pair(f_book.angles_deg[best_f], w_book.angles_deg[best_w], h.n_tx(), h.n_rx()),
                         radio);
}

std::vector<cplx> measure_skeleton_gains(const ChannelMatrix &h, const PathSkeleton &ps)
{
    std::vector<cplx> out;
    out.reserve(ps.size());
    for (const auto &e : ps.entries)
    {
        BeamVector f = ula_response(e.aod_deg, h.n_tx());
        BeamVector w = ula_response(e.aoa_deg, h.n_rx());
        out.push_back(w.dot(h.matrix() * f));
    }
    return out;
}

std::size_t strongest_path_index(std::span<const cplx> gains)
{
    if (gains.empty())
        throw std::invalid_argument("No sounded gains to choose from.");
    std::size_t best = 0;
    for (std::size_t i = 1; i < gains.size(); ++i)
        if (std::abs(gains[i]) > std::abs(gains[best]))
            best = i;
    return best;
}

BeamPair strongest_path_beams(const PathSkeleton &ps, std::span<const cplx> measured_gains, int n_tx, int n_rx)
{
    if (measured_gains.size() != ps.size())
        throw std::invalid_argument("Number of sounded gains does not match the skeleton size.");
    const auto &e = ps.entries[strongest_path_index(measured_gains)];
    return make_beam_pair(e.aod_deg, e.aoa_deg, n_tx, n_rx);
}

void FrameModel::validate(int max_pilots) const
{
    if (!(frame_duration_s > 0.0) || pilot_slot_s < 0.0 || query_overhead_s < 0.0)
        throw std::invalid_argument("Frame timings must be non-negative with a positive frame duration.");
    if (!(pilot_slot_s * max_pilots < frame_duration_s))
        throw std::invalid_argument("Pilot slots do not fit in one frame.");
}

Throughput throughput_bits(double rate_bps, const FrameModel &frame, int pilots_sent, bool db_query)
{
    double data_time = frame.frame_duration_s - pilots_sent * frame.pilot_slot_s -
                       (db_query ? frame.query_overhead_s : 0.0);
    if (data_time <= 0.0)
        return {0.0, true};
    return {rate_bps * data_time, false};
}

} // namespace pathskel
