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

#include "otfsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

namespace otfsim {

namespace {

// exp(j 2 pi k j / n) for j in [0, n), exponent reduced modulo n.
CVector doppler_phases(int k, int n)
{
    CVector ph(n);
    const long kk = ((static_cast<long>(k) % n) + n) % n;
    for (int j = 0; j < n; ++j) {
        const long e = (kk * j) % n;
        ph(j) = std::polar(1.0, kTwoPi * static_cast<double>(e) / n);
    }
    return ph;
}

} // namespace

std::vector<double> TdlProfile::normalized_powers() const
{
    std::vector<double> p(powers_db.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::pow(10.0, powers_db[i] / 10.0);
        total += p[i];
    }
    for (auto& v : p)
        v /= total;
    return p;
}

double TdlProfile::max_delay_s() const
{
    double m = 0.0;
    for (double d : normalized_delays)
        m = std::max(m, d * delay_spread_s);
    return m;
}

void TdlProfile::validate() const
{
    if (normalized_delays.empty())
        throw ConfigError("profile '" + name + "' has no taps");
    if (normalized_delays.size() != powers_db.size())
        throw ConfigError("profile '" + name + "': delays and powers differ in length");
    for (double d : normalized_delays)
        if (d < 0.0)
            throw ConfigError("profile '" + name + "': negative delay");
    if (delay_spread_s < 0.0)
        throw ConfigError("profile '" + name + "': negative delay spread");
}

TdlProfile load_profile(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open channel profile " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed channel profile " + path.string() + ": " + e.what());
    }
    TdlProfile p;
    try {
        p.name = j.at("name").get<std::string>();
        p.normalized_delays = j.at("delays").get<std::vector<double>>();
        p.powers_db = j.at("powers_db").get<std::vector<double>>();
        p.reference = j.value("reference", std::string{});
        p.delay_spread_s = j.value("delay_spread_s", 0.0);
        const auto fading = j.value("fading", std::string("rayleigh"));
        if (fading != "rayleigh" && fading != "none")
            throw ConfigError("unknown fading '" + fading + "' in " + path.string());
        p.rayleigh = fading == "rayleigh";
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("channel profile " + path.string() + ": " + e.what());
    }
    p.validate();
    return p;
}

TdlProfile identity_profile()
{
    TdlProfile p;
    p.name = "identity";
    p.normalized_delays = {0.0};
    p.powers_db = {0.0};
    p.rayleigh = false;
    p.reference = "ideal channel";
    return p;
}

int ChannelRealization::max_delay_bin() const
{
    int m = 0;
    for (const auto& t : taps)
        m = std::max(m, t.delay_bin);
    return m;
}

int ChannelRealization::max_abs_doppler_bin() const
{
    int m = 0;
    for (const auto& t : taps)
        m = std::max(m, std::abs(t.doppler_bin));
    return m;
}

double max_doppler_hz(double carrier_freq_hz, double speed_kmph)
{
    constexpr double c = 3e8;
    return carrier_freq_hz * (speed_kmph / 3.6) / c;
}

ChannelRealization sample_channel(const TdlProfile& profile, double nu_max_hz,
                                  const FrameParams& params, Rng& rng)
{
    profile.validate();
    const int M = params.num_subcarriers, N = params.num_symbols;
    const double nu_bins = nu_max_hz * params.frame_duration_s();
    if (!(nu_bins < N / 2.0))
        throw AliasingError("nu_max N T = " + std::to_string(nu_bins) +
                            " does not fit in N / 2 = " + std::to_string(N / 2.0));

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    const auto powers = profile.normalized_powers();

    // Ordered map keeps the merged tap list deterministic.
    std::map<std::pair<int, int>, cdouble> bins;
    for (std::size_t p = 0; p < powers.size(); ++p) {
        cdouble gain;
        if (profile.rayleigh) {
            const double s = std::sqrt(powers[p] / 2.0);
            const double re = gauss(rng);
            const double im = gauss(rng);
            gain = cdouble(s * re, s * im);
        } else {
            gain = std::sqrt(powers[p]);
        }
        const double theta = angle(rng);
        const double tau = profile.normalized_delays[p] * profile.delay_spread_s;
        const int l = static_cast<int>(std::lround(tau * params.bandwidth_hz()));
        const int k = static_cast<int>(std::lround(nu_max_hz * std::cos(theta) * params.frame_duration_s()));
        if (l >= M)
            throw ConfigError("tap delay exceeds the frame");
        bins[{l, k}] += gain;
    }

    ChannelRealization ch;
    ch.M = M;
    ch.N = N;
    for (const auto& [key, gain] : bins)
        ch.taps.push_back({gain, key.first, key.second});
    return ch;
}

ChannelOperator::ChannelOperator(ChannelRealization ch) : ch_(std::move(ch))
{
    if (ch_.M <= 0 || ch_.N <= 0)
        throw SizeError("channel dimensions must be positive");
}

CVector ChannelOperator::apply(const CVector& s) const
{
    const int n = size();
    if (s.size() != n)
        throw SizeError("channel apply: length mismatch");
    CVector r = CVector::Zero(n);
    for (const auto& tap : ch_.taps) {
        const CVector ph = doppler_phases(tap.doppler_bin, n);
        const int l = ((tap.delay_bin % n) + n) % n;
        // r[i] += h s[i - l] ph[i - l], indices modulo n.
        for (int i = 0; i < n; ++i) {
            const int j = i >= l ? i - l : i - l + n;
            r(i) += tap.gain * ph(j) * s(j);
        }
    }
    return r;
}

CVector ChannelOperator::adjoint(const CVector& r) const
{
    const int n = size();
    if (r.size() != n)
        throw SizeError("channel adjoint: length mismatch");
    CVector s = CVector::Zero(n);
    for (const auto& tap : ch_.taps) {
        const CVector ph = doppler_phases(tap.doppler_bin, n);
        const int l = ((tap.delay_bin % n) + n) % n;
        for (int j = 0; j < n; ++j) {
            const int i = j + l < n ? j + l : j + l - n;
            s(j) += std::conj(tap.gain * ph(j)) * r(i);
        }
    }
    return s;
}

CMatrix build_channel_matrix(const ChannelRealization& ch)
{
    const int n = ch.M * ch.N;
    CMatrix h = CMatrix::Zero(n, n);
    for (const auto& tap : ch.taps) {
        const CVector ph = doppler_phases(tap.doppler_bin, n);
        const int l = ((tap.delay_bin % n) + n) % n;
        for (int j = 0; j < n; ++j)
            h((j + l) % n, j) += tap.gain * ph(j);
    }
    return h;
}

double noise_variance(double signal_power, double snr_db)
{
    if (std::isinf(snr_db) && snr_db > 0)
        return 0.0;
    return signal_power / std::pow(10.0, snr_db / 10.0);
}

void add_awgn(CVector& x, double variance, Rng& rng)
{
    if (variance <= 0.0)
        return;
    std::normal_distribution<double> gauss(0.0, std::sqrt(variance / 2.0));
    for (auto& v : x) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += cdouble(re, im);
    }
}

CVector apply_ltv(const CVector& stream, const ChannelRealization& ch, Eigen::Index origin)
{
    const long n = static_cast<long>(ch.M) * ch.N;
    const Eigen::Index len = stream.size();
    CVector out = CVector::Zero(len);
    for (const auto& tap : ch.taps) {
        const long k = ((static_cast<long>(tap.doppler_bin) % n) + n) % n;
        for (Eigen::Index t = tap.delay_bin; t < len; ++t) {
            // Phase index of the transmitted sample, reduced modulo M N.
            const long rel = static_cast<long>(t - origin - tap.delay_bin);
            const long e = ((k * (((rel % n) + n) % n)) % n);
            out(t) += tap.gain * std::polar(1.0, kTwoPi * static_cast<double>(e) / static_cast<double>(n)) *
                      stream(t - tap.delay_bin);
        }
    }
    return out;
}

TimeDomainFrame apply_channel(const TimeDomainFrame& tx, const ChannelRealization& ch,
                              double noise_var, Rng& rng)
{
    if (tx.cp_len < ch.max_delay_bin())
        throw ConfigError("CP of " + std::to_string(tx.cp_len) + " samples is shorter than the " +
                          std::to_string(ch.max_delay_bin()) + "-sample channel delay");
    TimeDomainFrame rx{apply_ltv(tx.samples, ch, tx.cp_len), tx.cp_len};
    add_awgn(rx.samples, noise_var, rng);
    return rx;
}

cdouble tf_response(const ChannelRealization& ch, int m, int n, const FrameParams& params)
{
    const VsbDims d = derive_vsb_dims(params);
    if (m < 0 || m >= d.subcarriers || n < 0 || n >= d.symbols)
        throw SizeError("tf_response index out of range");
    const double scale = std::ldexp(1.0, params.numerology);
    cdouble h = 0.0;
    for (const auto& tap : ch.taps) {
        // nu_p n T_mu = k_p n / (2^mu N); m df_mu tau_p = m 2^mu l_p / M.
        const double phase = static_cast<double>(tap.doppler_bin) * n / (scale * ch.N) -
                             static_cast<double>(m) * scale * tap.delay_bin / ch.M;
        h += tap.gain * std::polar(1.0, kTwoPi * phase);
    }
    return h;
}

} // namespace otfsim
