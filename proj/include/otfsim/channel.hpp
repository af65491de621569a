// SPDX-License-Identifier: Apache-2.0
//
// otfsim: link-level simulator for RCP-OTFS, block OFDM and VSB-OFDM
// Copyright (C) 2026 The otfsim Authors
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

#ifndef OTFSIM_CHANNEL_HPP
#define OTFSIM_CHANNEL_HPP

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "otfsim/grid.hpp"
#include "otfsim/otfs_modem.hpp"
#include "otfsim/types.hpp"

namespace otfsim {

using Rng = std::mt19937_64;

// Tapped delay line profile. Delays are normalized and scaled by the delay
// spread when a realization is drawn.
struct TdlProfile {
    std::string name;
    std::vector<double> normalized_delays;
    std::vector<double> powers_db;
    double delay_spread_s = 0.0;
    bool rayleigh = true; // false: deterministic tap amplitudes
    std::string reference;

    // Linear tap powers normalized to unit sum.
    std::vector<double> normalized_powers() const;
    double max_delay_s() const;
    void validate() const;
};

// Reads the JSON profile schema:
//   {"name", "delays", "powers_db", "reference",
//    optional "delay_spread_s", optional "fading": "rayleigh" | "none"}
TdlProfile load_profile(const std::filesystem::path& path);

// Single unit tap at zero delay: an ideal channel.
TdlProfile identity_profile();

struct PathTap {
    cdouble gain;
    int delay_bin = 0;   // l_p, in samples at rate 1/B
    int doppler_bin = 0; // k_p, signed, in units of 1/(N T)
};

struct ChannelRealization {
    std::vector<PathTap> taps;
    int M = 0;
    int N = 0;

    int max_delay_bin() const;
    int max_abs_doppler_bin() const;
};

// Draws one frame's taps: complex Gaussian gains with the profile powers,
// delay bins round(tau M df), and one Jakes draw per tap,
// nu = nu_max cos(theta), Doppler bin round(nu N T). Taps sharing a
// (delay, Doppler) bin are merged.
// Throws AliasingError unless nu_max N T < N / 2.
ChannelRealization sample_channel(const TdlProfile& profile, double nu_max_hz,
                                  const FrameParams& params, Rng& rng);

// Maximum Doppler shift f_c v / c.
double max_doppler_hz(double carrier_freq_hz, double speed_kmph);

// H = sum_p h_p Pi^{l_p} Delta^{k_p} acting on MN-sample vectors, applied
// without forming the matrix.
class ChannelOperator {
public:
    explicit ChannelOperator(ChannelRealization ch);

    const ChannelRealization& realization() const { return ch_; }
    int size() const { return ch_.M * ch_.N; }

    CVector apply(const CVector& s) const;   // H s
    CVector adjoint(const CVector& r) const; // H^H r

private:
    ChannelRealization ch_;
};

// Explicit MN x MN channel matrix; small frames only.
CMatrix build_channel_matrix(const ChannelRealization& ch);

// sigma_n^2 = signal_power / 10^(snr/10); zero for infinite SNR.
double noise_variance(double signal_power, double snr_db);

// Adds CN(0, variance) samples.
void add_awgn(CVector& x, double variance, Rng& rng);

// Linear time-varying convolution of a transmitted stream. Sample t of the
// output is sum_p h_p exp(j 2 pi k_p (t - origin - l_p) / (M N)) x[t - l_p];
// `origin` is the index of the first body sample, so that after CP removal
// the result equals H applied to the body.
CVector apply_ltv(const CVector& stream, const ChannelRealization& ch, Eigen::Index origin);

// Channel plus AWGN on a CP-carrying frame.
// Throws ConfigError when the CP is shorter than the largest delay.
TimeDomainFrame apply_channel(const TimeDomainFrame& tx, const ChannelRealization& ch,
                              double noise_var, Rng& rng);

// Time-frequency response at subcarrier m of symbol n for the numerology in
// params: sum_p h_p exp(j 2 pi (nu_p n T_mu - m df_mu tau_p)).
cdouble tf_response(const ChannelRealization& ch, int m, int n, const FrameParams& params);

} // namespace otfsim

#endif // OTFSIM_CHANNEL_HPP
