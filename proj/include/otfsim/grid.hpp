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

#ifndef OTFSIM_GRID_HPP
#define OTFSIM_GRID_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "otfsim/types.hpp"

namespace otfsim {

// Dimensional parameters of one frame. The frame is critically sampled:
// bandwidth = M * subcarrier_spacing and duration = N / subcarrier_spacing.
struct FrameParams {
    double carrier_freq_hz = 6e9;
    double subcarrier_spacing_hz = 15e3;
    int num_subcarriers = 512; // M
    int num_symbols = 128;     // N
    int numerology = 0;        // mu, VSB-OFDM only
    double cp_duration_s = 4.69e-6;

    double bandwidth_hz() const { return num_subcarriers * subcarrier_spacing_hz; }
    double symbol_duration_s() const { return 1.0 / subcarrier_spacing_hz; }
    double frame_duration_s() const { return num_symbols * symbol_duration_s(); }
    int frame_samples() const { return num_subcarriers * num_symbols; }

    // L = ceil(T_cp * B), in samples at rate 1/B.
    int cp_len_samples() const;

    // Throws ConfigError on non-positive dimensions.
    void validate() const;
};

// Builds frame parameters from the Table I style inputs.
FrameParams make_frame(int num_subcarriers, int num_symbols,
                       double subcarrier_spacing_hz = 15e3,
                       double cp_duration_s = 4.69e-6,
                       double carrier_freq_hz = 6e9);

struct VsbDims {
    int subcarriers;          // 2^-mu M
    int symbols;              // 2^mu N
    double symbol_duration_s; // 2^-mu T
    int cp_len;               // ceil(2^-mu T_cp B)
};

// Grid dimensions of VSB-OFDM for params.numerology.
// Throws NumerologyError when 2^mu does not divide M.
VsbDims derive_vsb_dims(const FrameParams& params);

// Whole 12x14 PRBs that fit in the frame for params.numerology.
int num_prb(const FrameParams& params);

// Embedded pilot geometry in the delay-Doppler grid.
struct PilotConfig {
    int doppler_index = 0; // K_p
    int delay_index = 0;   // L_p
    int k_nu = 0;          // maximum Doppler length
    int l_tau = 0;         // maximum delay length
    double delta_p_db = 28.0;

    // Throws ConfigError if (K_p, L_p) is outside the admissible range
    // for an M x N grid.
    void validate(int num_subcarriers, int num_symbols) const;
};

// k_nu = ceil(nu_max N T).
int max_doppler_length(double nu_max_hz, const FrameParams& params);
// l_tau = ceil(tau_max M df).
int max_delay_length(double tau_max_s, const FrameParams& params);

// Zero guard cells around the impulse: (4 k_nu + 1)(2 l_tau + 1) - 1.
int count_otfs_pilot_cells(const PilotConfig& p);

// Data cells left in an M x N grid after the pilot region.
int count_otfs_data_cells(const PilotConfig& p, const FrameParams& params);

enum class DdRole : std::uint8_t { Data, NonzeroPilot, ZeroGuard };
enum class TfRole : std::uint8_t { Data, ReferenceSignal, Unused };

// Delay-Doppler symbols: M rows (delay l) by N columns (Doppler k).
// Column-major storage, so the flat index of (l, k) is k * M + l, which is
// the vec{} ordering used by the modulators.
struct DelayDopplerGrid {
    CMatrix values;
    Eigen::Matrix<DdRole, Eigen::Dynamic, Eigen::Dynamic> roles;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
};

// Time-frequency cells of VSB-OFDM: subcarriers x OFDM symbols.
struct TimeFrequencyGrid {
    CMatrix values;
    Eigen::Matrix<TfRole, Eigen::Dynamic, Eigen::Dynamic> roles;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
};

// Cell roles for the embedded pilot layout: the guard covers
// |k - K_p| <= 2 k_nu and |l - L_p| <= l_tau.
Eigen::Matrix<DdRole, Eigen::Dynamic, Eigen::Dynamic>
otfs_roles(const PilotConfig& p, const FrameParams& params);

// Per-symbol data power that keeps the nominal frame energy at M N
// when the pilot carries 10^(dP/10) times the data power.
double otfs_data_power(const PilotConfig& p, const FrameParams& params);

// Places unit-power data symbols around the embedded pilot. Data cells are
// scaled by sqrt(otfs_data_power) and filled delay-fastest; the pilot gets
// the configured power ratio; guard cells are zero.
DelayDopplerGrid place_otfs_frame(std::span<const cdouble> data,
                                  const PilotConfig& p,
                                  const FrameParams& params);

// Inverse of the data placement: the data cells with the power scaling undone.
std::vector<cdouble> extract_otfs_data(const DelayDopplerGrid& grid, const PilotConfig& p,
                                       const FrameParams& params);

// Flat vec{} indices of the data cells, in fill order.
std::vector<int> otfs_data_indices(const PilotConfig& p, const FrameParams& params);

// RS positions inside a PRB, (subcarrier, symbol).
inline constexpr int kPrbSubcarriers = 12;
inline constexpr int kPrbSymbols = 14;
inline constexpr int kRsPerPrb = 8;
inline constexpr int kRsPositions[kRsPerPrb][2] = {
    {0, 0}, {6, 0}, {3, 4}, {9, 4}, {0, 7}, {6, 7}, {3, 11}, {9, 11}};

Eigen::Matrix<TfRole, Eigen::Dynamic, Eigen::Dynamic> ofdm_roles(const FrameParams& params);

// Unit-magnitude QPSK reference symbols from a seeded generator.
std::vector<cdouble> make_reference_symbols(int count, std::uint64_t seed);

// Tiles PRBs frequency-first. data fills the Data cells column-major,
// rs fills the RS cells column-major. Cells outside whole PRBs stay zero.
TimeFrequencyGrid place_ofdm_frame(std::span<const cdouble> data,
                                   std::span<const cdouble> rs,
                                   const FrameParams& params);

std::vector<cdouble> extract_ofdm_data(const TimeFrequencyGrid& grid);

// Per-cell power that puts the nominal VSB-OFDM frame energy at M N.
double ofdm_cell_power(const FrameParams& params);

// Pilot-to-data power ratio (dB) for which the single OTFS pilot carries
// the same power as all RS cells of a VSB-OFDM frame of equal per-symbol
// power, i.e. 10 log10(8 N_PRB).
double equal_pilot_power_delta_p_db(const FrameParams& params);

} // namespace otfsim

#endif // OTFSIM_GRID_HPP
