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

#ifndef OTFSIM_ESTIMATION_HPP
#define OTFSIM_ESTIMATION_HPP

#include "otfsim/channel.hpp"
#include "otfsim/grid.hpp"
#include "otfsim/types.hpp"

namespace otfsim {

// Embedded-pilot estimate: the taps read off the received delay-Doppler
// grid. Empty when nothing crossed the threshold.
struct OtfsChannelEstimate {
    ChannelRealization channel;

    bool empty() const { return channel.taps.empty(); }
};

// Detection threshold applied to |Y(k, l)|: three noise standard deviations.
inline double otfs_detection_threshold(double sigma_n) { return 3.0 * sigma_n; }

// Scans k in [K_p - k_nu, K_p + k_nu], l in [L_p, L_p + l_tau] of the
// received grid `rx` (M x N, same layout as the transmit grid) and keeps
// every cell with |Y| > 3 sigma_n as a tap at (l - L_p, k - K_p).
// Gains are divided by the pilot amplitude and by the deterministic phase
// exp(j 2 pi k L_p / (M N)) that the Doppler ramp imprints on the pilot
// row, so a noiseless single-tap channel is recovered exactly.
OtfsChannelEstimate otfs_estimate(const CMatrix& rx, const PilotConfig& pilot,
                                  double pilot_amplitude, double sigma_n);

// Only the RS cells of a grid: data values are not visible to the
// estimator.
TimeFrequencyGrid make_reference_grid(const TimeFrequencyGrid& tx);

// RS-based estimate for VSB-OFDM over the PRB area of the grid:
//   1. MMSE at each RS, h = x^* y / (|x|^2 + sigma_v^2).
//   2. Per RS-bearing symbol, DFT interpolation across frequency: the RS
//      estimates are fitted with a delay profile of min(L_mu, #RS) taps
//      (least squares on the DFT basis) and re-evaluated on every
//      subcarrier.
//   3. Linear interpolation in time between RS-bearing symbols, holding
//      the nearest estimate before the first and after the last.
// Cells outside whole PRBs are left at zero.
// Throws ConfigError when the grid carries no RS.
CMatrix ofdm_estimate(const CMatrix& rx, const TimeFrequencyGrid& reference, double noise_var,
                      const FrameParams& params);

} // namespace otfsim

#endif // OTFSIM_ESTIMATION_HPP
