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

#include "otfsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace otfsim {

OtfsChannelEstimate otfs_estimate(const CMatrix& rx, const PilotConfig& pilot,
                                  double pilot_amplitude, double sigma_n)
{
    const int M = static_cast<int>(rx.rows()), N = static_cast<int>(rx.cols());
    pilot.validate(M, N);
    if (!(pilot_amplitude > 0.0))
        throw ConfigError("pilot amplitude must be positive");

    const double threshold = otfs_detection_threshold(sigma_n);
    const double mn = static_cast<double>(M) * N;
    OtfsChannelEstimate est;
    est.channel.M = M;
    est.channel.N = N;
    for (int k = pilot.doppler_index - pilot.k_nu; k <= pilot.doppler_index + pilot.k_nu; ++k) {
        const int dk = k - pilot.doppler_index;
        const cdouble ramp = std::polar(1.0, kTwoPi * dk * pilot.delay_index / mn);
        for (int l = pilot.delay_index; l <= pilot.delay_index + pilot.l_tau; ++l) {
            const cdouble y = rx(l, k);
            if (std::abs(y) > threshold)
                est.channel.taps.push_back({y / (pilot_amplitude * ramp), l - pilot.delay_index, dk});
        }
    }
    return est;
}

TimeFrequencyGrid make_reference_grid(const TimeFrequencyGrid& tx)
{
    TimeFrequencyGrid ref;
    ref.roles = tx.roles;
    ref.values = CMatrix::Zero(tx.rows(), tx.cols());
    for (int i = 0; i < tx.roles.size(); ++i)
        if (tx.roles.data()[i] == TfRole::ReferenceSignal)
            ref.values.data()[i] = tx.values.data()[i];
    return ref;
}

namespace {

// Maps estimates on the RS subcarriers of one symbol onto every subcarrier
// of the band through a truncated delay profile.
class DftInterpolator {
public:
    DftInterpolator(const std::vector<int>& rs_subcarriers, int band, int fft_size, int taps)
    {
        const int p = static_cast<int>(rs_subcarriers.size());
        const int d = std::clamp(taps, 1, p);
        CMatrix basis_rs(p, d);
        for (int i = 0; i < p; ++i)
            for (int t = 0; t < d; ++t)
                basis_rs(i, t) = std::polar(1.0, -kTwoPi * rs_subcarriers[i] * t / fft_size);
        CMatrix basis_band(band, d);
        for (int m = 0; m < band; ++m)
            for (int t = 0; t < d; ++t)
                basis_band(m, t) = std::polar(1.0, -kTwoPi * static_cast<double>(m) * t / fft_size);
        const CMatrix pinv = basis_rs.completeOrthogonalDecomposition().pseudoInverse();
        map_ = basis_band * pinv;
    }

    CVector operator()(const CVector& rs_estimates) const { return map_ * rs_estimates; }

private:
    CMatrix map_;
};

} // namespace

CMatrix ofdm_estimate(const CMatrix& rx, const TimeFrequencyGrid& reference, double noise_var,
                      const FrameParams& params)
{
    const VsbDims dims = derive_vsb_dims(params);
    if (rx.rows() != reference.rows() || rx.cols() != reference.cols() ||
        rx.rows() != dims.subcarriers || rx.cols() != dims.symbols)
        throw SizeError("received grid does not match the reference grid");

    const int band = (dims.subcarriers / kPrbSubcarriers) * kPrbSubcarriers;
    const int span = (dims.symbols / kPrbSymbols) * kPrbSymbols;
    const int taps = dims.cp_len;

    // RS-bearing symbols and their interpolated frequency responses.
    std::vector<int> rs_cols;
    std::vector<CVector> rs_freq;
    std::map<std::vector<int>, DftInterpolator> interpolators;
    for (int n = 0; n < span; ++n) {
        std::vector<int> subcarriers;
        for (int m = 0; m < band; ++m)
            if (reference.roles(m, n) == TfRole::ReferenceSignal)
                subcarriers.push_back(m);
        if (subcarriers.empty())
            continue;
        CVector h(static_cast<Eigen::Index>(subcarriers.size()));
        for (std::size_t i = 0; i < subcarriers.size(); ++i) {
            const cdouble x = reference.values(subcarriers[i], n);
            const cdouble y = rx(subcarriers[i], n);
            h(static_cast<Eigen::Index>(i)) = std::conj(x) * y / (std::norm(x) + noise_var);
        }
        auto it = interpolators.find(subcarriers);
        if (it == interpolators.end())
            it = interpolators.emplace(subcarriers,
                                       DftInterpolator(subcarriers, band, dims.subcarriers, taps)).first;
        rs_cols.push_back(n);
        rs_freq.push_back(it->second(h));
    }
    if (rs_cols.empty())
        throw ConfigError("frame carries no reference signals");

    CMatrix est = CMatrix::Zero(rx.rows(), rx.cols());
    std::size_t j = 0;
    for (int n = 0; n < span; ++n) {
        while (j + 1 < rs_cols.size() && rs_cols[j + 1] <= n)
            ++j;
        if (n <= rs_cols.front()) {
            est.col(n).head(band) = rs_freq.front();
        } else if (j + 1 >= rs_cols.size()) {
            est.col(n).head(band) = rs_freq.back();
        } else {
            const double w = static_cast<double>(n - rs_cols[j]) / (rs_cols[j + 1] - rs_cols[j]);
            est.col(n).head(band) = (1.0 - w) * rs_freq[j] + w * rs_freq[j + 1];
        }
    }
    return est;
}

} // namespace otfsim
