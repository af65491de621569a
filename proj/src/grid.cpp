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

#include "otfsim/grid.hpp"

#include <cmath>
#include <random>
#include <string>

namespace otfsim {

namespace {

// ceil() that ignores representation noise just above an integer.
int ceil_samples(double x)
{
    return static_cast<int>(std::ceil(x - 1e-9));
}

} // namespace

int FrameParams::cp_len_samples() const
{
    return ceil_samples(cp_duration_s * bandwidth_hz());
}

void FrameParams::validate() const
{
    if (num_subcarriers <= 0 || num_symbols <= 0)
        throw ConfigError("frame dimensions must be positive");
    if (!(subcarrier_spacing_hz > 0.0))
        throw ConfigError("subcarrier spacing must be positive");
    if (cp_duration_s < 0.0)
        throw ConfigError("CP duration must be non-negative");
    if (numerology < 0)
        throw NumerologyError("numerology must be >= 0");
}

FrameParams make_frame(int num_subcarriers, int num_symbols, double subcarrier_spacing_hz,
                       double cp_duration_s, double carrier_freq_hz)
{
    FrameParams p;
    p.num_subcarriers = num_subcarriers;
    p.num_symbols = num_symbols;
    p.subcarrier_spacing_hz = subcarrier_spacing_hz;
    p.cp_duration_s = cp_duration_s;
    p.carrier_freq_hz = carrier_freq_hz;
    p.validate();
    return p;
}

VsbDims derive_vsb_dims(const FrameParams& params)
{
    const int mu = params.numerology;
    if (mu < 0 || mu > 30)
        throw NumerologyError("numerology out of range: " + std::to_string(mu));
    const long scale = 1L << mu;
    if (params.num_subcarriers % scale != 0)
        throw NumerologyError("2^mu = " + std::to_string(scale) + " does not divide M = " +
                              std::to_string(params.num_subcarriers));
    VsbDims d{};
    d.subcarriers = static_cast<int>(params.num_subcarriers / scale);
    d.symbols = static_cast<int>(params.num_symbols * scale);
    d.symbol_duration_s = params.symbol_duration_s() / static_cast<double>(scale);
    d.cp_len = ceil_samples(params.cp_duration_s / static_cast<double>(scale) * params.bandwidth_hz());
    return d;
}

int num_prb(const FrameParams& params)
{
    const VsbDims d = derive_vsb_dims(params);
    return (d.subcarriers / kPrbSubcarriers) * (d.symbols / kPrbSymbols);
}

void PilotConfig::validate(int num_subcarriers, int num_symbols) const
{
    if (k_nu < 0 || l_tau < 0)
        throw ConfigError("k_nu and l_tau must be non-negative");
    const int k_lo = 2 * k_nu + 1, k_hi = num_symbols - 2 * k_nu - 2;
    const int l_lo = l_tau + 1, l_hi = num_subcarriers - l_tau - 2;
    if (doppler_index < k_lo || doppler_index > k_hi)
        throw ConfigError("pilot Doppler index " + std::to_string(doppler_index) + " outside [" +
                          std::to_string(k_lo) + ", " + std::to_string(k_hi) + "]");
    if (delay_index < l_lo || delay_index > l_hi)
        throw ConfigError("pilot delay index " + std::to_string(delay_index) + " outside [" +
                          std::to_string(l_lo) + ", " + std::to_string(l_hi) + "]");
}

int max_doppler_length(double nu_max_hz, const FrameParams& params)
{
    return ceil_samples(nu_max_hz * params.frame_duration_s());
}

int max_delay_length(double tau_max_s, const FrameParams& params)
{
    return ceil_samples(tau_max_s * params.bandwidth_hz());
}

int count_otfs_pilot_cells(const PilotConfig& p)
{
    return (4 * p.k_nu + 1) * (2 * p.l_tau + 1) - 1;
}

int count_otfs_data_cells(const PilotConfig& p, const FrameParams& params)
{
    return params.frame_samples() - count_otfs_pilot_cells(p) - 1;
}

Eigen::Matrix<DdRole, Eigen::Dynamic, Eigen::Dynamic> otfs_roles(const PilotConfig& p,
                                                                 const FrameParams& params)
{
    p.validate(params.num_subcarriers, params.num_symbols);
    const int M = params.num_subcarriers, N = params.num_symbols;
    Eigen::Matrix<DdRole, Eigen::Dynamic, Eigen::Dynamic> roles(M, N);
    roles.setConstant(DdRole::Data);
    for (int k = p.doppler_index - 2 * p.k_nu; k <= p.doppler_index + 2 * p.k_nu; ++k)
        for (int l = p.delay_index - p.l_tau; l <= p.delay_index + p.l_tau; ++l)
            roles(l, k) = DdRole::ZeroGuard;
    roles(p.delay_index, p.doppler_index) = DdRole::NonzeroPilot;
    return roles;
}

double otfs_data_power(const PilotConfig& p, const FrameParams& params)
{
    const double ratio = std::pow(10.0, p.delta_p_db / 10.0);
    return params.frame_samples() / (count_otfs_data_cells(p, params) + ratio);
}

std::vector<int> otfs_data_indices(const PilotConfig& p, const FrameParams& params)
{
    const auto roles = otfs_roles(p, params);
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(roles.size()));
    for (int i = 0; i < roles.size(); ++i)
        if (roles.data()[i] == DdRole::Data)
            idx.push_back(i);
    return idx;
}

DelayDopplerGrid place_otfs_frame(std::span<const cdouble> data, const PilotConfig& p,
                                  const FrameParams& params)
{
    const int expected = count_otfs_data_cells(p, params);
    if (static_cast<int>(data.size()) != expected)
        throw SizeError("OTFS data length " + std::to_string(data.size()) + ", expected " +
                        std::to_string(expected));

    DelayDopplerGrid grid;
    grid.roles = otfs_roles(p, params);
    grid.values = CMatrix::Zero(params.num_subcarriers, params.num_symbols);

    const double data_power = otfs_data_power(p, params);
    const double data_amp = std::sqrt(data_power);
    std::size_t next = 0;
    for (int i = 0; i < grid.roles.size(); ++i) {
        if (grid.roles.data()[i] == DdRole::Data)
            grid.values.data()[i] = data_amp * data[next++];
    }
    grid.values(p.delay_index, p.doppler_index) =
        std::sqrt(data_power * std::pow(10.0, p.delta_p_db / 10.0));
    return grid;
}

std::vector<cdouble> extract_otfs_data(const DelayDopplerGrid& grid, const PilotConfig& p,
                                       const FrameParams& params)
{
    const double inv_amp = 1.0 / std::sqrt(otfs_data_power(p, params));
    std::vector<cdouble> out;
    for (int i = 0; i < grid.roles.size(); ++i)
        if (grid.roles.data()[i] == DdRole::Data)
            out.push_back(inv_amp * grid.values.data()[i]);
    return out;
}

Eigen::Matrix<TfRole, Eigen::Dynamic, Eigen::Dynamic> ofdm_roles(const FrameParams& params)
{
    const VsbDims d = derive_vsb_dims(params);
    Eigen::Matrix<TfRole, Eigen::Dynamic, Eigen::Dynamic> roles(d.subcarriers, d.symbols);
    roles.setConstant(TfRole::Unused);
    const int prb_f = d.subcarriers / kPrbSubcarriers;
    const int prb_t = d.symbols / kPrbSymbols;
    roles.topLeftCorner(prb_f * kPrbSubcarriers, prb_t * kPrbSymbols).setConstant(TfRole::Data);
    for (int bt = 0; bt < prb_t; ++bt)
        for (int bf = 0; bf < prb_f; ++bf)
            for (const auto& pos : kRsPositions)
                roles(bf * kPrbSubcarriers + pos[0], bt * kPrbSymbols + pos[1]) =
                    TfRole::ReferenceSignal;
    return roles;
}

std::vector<cdouble> make_reference_symbols(int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const double a = 1.0 / std::sqrt(2.0);
    std::vector<cdouble> rs(static_cast<std::size_t>(count));
    for (auto& v : rs) {
        const auto bits = rng();
        v = cdouble((bits & 1) ? -a : a, (bits & 2) ? -a : a);
    }
    return rs;
}

TimeFrequencyGrid place_ofdm_frame(std::span<const cdouble> data, std::span<const cdouble> rs,
                                   const FrameParams& params)
{
    const int prbs = num_prb(params);
    const auto data_cells = static_cast<std::size_t>(prbs * (kPrbSubcarriers * kPrbSymbols - kRsPerPrb));
    const auto rs_cells = static_cast<std::size_t>(prbs * kRsPerPrb);
    if (data.size() != data_cells)
        throw SizeError("OFDM data length " + std::to_string(data.size()) + ", expected " +
                        std::to_string(data_cells));
    if (rs.size() != rs_cells)
        throw SizeError("RS length " + std::to_string(rs.size()) + ", expected " +
                        std::to_string(rs_cells));

    TimeFrequencyGrid grid;
    grid.roles = ofdm_roles(params);
    grid.values = CMatrix::Zero(grid.roles.rows(), grid.roles.cols());
    std::size_t next_data = 0, next_rs = 0;
    for (int i = 0; i < grid.roles.size(); ++i) {
        switch (grid.roles.data()[i]) {
        case TfRole::Data: grid.values.data()[i] = data[next_data++]; break;
        case TfRole::ReferenceSignal: grid.values.data()[i] = rs[next_rs++]; break;
        case TfRole::Unused: break;
        }
    }
    return grid;
}

std::vector<cdouble> extract_ofdm_data(const TimeFrequencyGrid& grid)
{
    std::vector<cdouble> out;
    for (int i = 0; i < grid.roles.size(); ++i)
        if (grid.roles.data()[i] == TfRole::Data)
            out.push_back(grid.values.data()[i]);
    return out;
}

double ofdm_cell_power(const FrameParams& params)
{
    const int prbs = num_prb(params);
    if (prbs == 0)
        throw ConfigError("frame holds no whole PRB for numerology " +
                          std::to_string(params.numerology));
    return static_cast<double>(params.frame_samples()) / (prbs * kPrbSubcarriers * kPrbSymbols);
}

double equal_pilot_power_delta_p_db(const FrameParams& params)
{
    return 10.0 * std::log10(static_cast<double>(kRsPerPrb * num_prb(params)));
}

} // namespace otfsim
