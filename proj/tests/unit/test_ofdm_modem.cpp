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

#include <doctest.h>

#include <random>

#include "otfsim/channel.hpp"
#include "otfsim/ofdm_modem.hpp"

using namespace otfsim;

namespace {

CMatrix random_matrix(int rows, int cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    CMatrix x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x.data()[i] = {g(rng), g(rng)};
    return x;
}

FrameParams desk(int mu)
{
    FrameParams p = make_frame(64, 16);
    p.numerology = mu;
    return p;
}

// Time-invariant multipath by direct summation, zero before the stream.
CVector convolve(const CVector& x, const std::vector<PathTap>& taps)
{
    CVector y = CVector::Zero(x.size());
    for (Eigen::Index t = 0; t < x.size(); ++t)
        for (const auto& tap : taps)
            if (t >= tap.delay_bin)
                y(t) += tap.gain * x(t - tap.delay_bin);
    return y;
}

} // namespace

TEST_CASE("DC tone")
{
    FrameParams p = make_frame(4, 1);
    CMatrix x = CMatrix::Zero(4, 1);
    x(0, 0) = 1.0;
    const auto frame = ofdm_modulate(x, p);
    REQUIRE(frame.symbols.size() == 1);
    const int L = frame.cp_len;
    CHECK((frame.symbols[0].tail(4).array() - 0.5).abs().maxCoeff() < 1e-12);
    CHECK(frame.symbols[0].size() == 4 + L);
    CHECK(ofdm_modulate(CMatrix::Zero(4, 1), p).stream().norm() == 0.0);
}

TEST_CASE("per-symbol cyclic prefix and sample budget")
{
    std::mt19937_64 rng(1);
    for (int mu = 0; mu <= 3; ++mu) {
        const FrameParams p = desk(mu);
        const VsbDims d = derive_vsb_dims(p);
        const auto frame = ofdm_modulate(random_matrix(d.subcarriers, d.symbols, rng), p);
        CHECK(static_cast<int>(frame.symbols.size()) == (16 << mu));
        CHECK(frame.total_samples() == (16L << mu) * ((64 >> mu) + d.cp_len));
        CHECK(vsb_frame_samples(p) == frame.total_samples());
        CHECK(frame.stream().size() == frame.total_samples());
        for (const auto& s : frame.symbols)
            CHECK((s.head(d.cp_len) - s.tail(d.cp_len)).norm() == 0.0);
    }
    // Table I: 37-sample CP per 512-sample symbol at mu = 0.
    CHECK(vsb_frame_samples(make_frame(512, 128)) == 128L * (512 + 37));
}

TEST_CASE("modulation is unitary per symbol")
{
    std::mt19937_64 rng(2);
    const FrameParams p = desk(1);
    const CMatrix x = random_matrix(32, 32, rng);
    const auto frame = ofdm_modulate(x, p);
    double body = 0.0;
    for (const auto& s : frame.symbols)
        body += s.tail(32).squaredNorm();
    CHECK(body == doctest::Approx(x.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("round trip over an ideal channel")
{
    std::mt19937_64 rng(3);
    for (int mu = 0; mu <= 3; ++mu) {
        const FrameParams p = desk(mu);
        const VsbDims d = derive_vsb_dims(p);
        const CMatrix x = random_matrix(d.subcarriers, d.symbols, rng);
        CHECK((ofdm_demodulate(ofdm_modulate(x, p).stream(), p) - x).norm() < 1e-10);
    }
    CHECK_THROWS_AS(ofdm_demodulate(CVector::Zero(100), desk(0)), SizeError);
}

TEST_CASE("single-tap gain")
{
    std::mt19937_64 rng(4);
    const FrameParams p = desk(0);
    const CMatrix x = random_matrix(64, 16, rng);
    const cdouble g(0.3, -1.1);
    const CMatrix y = ofdm_demodulate(g * ofdm_modulate(x, p).stream(), p);
    CHECK((y - g * x).norm() < 1e-10);
}

TEST_CASE("pure delay rotates each tone")
{
    const FrameParams p = desk(0);
    const int d = 3, tone = 5; // L_0 = 5 samples
    CMatrix x = CMatrix::Zero(64, 16);
    x.row(tone).setOnes();
    const CVector rx = convolve(ofdm_modulate(x, p).stream(), {{1.0, d, 0}});
    const CMatrix y = ofdm_demodulate(rx, p);
    const cdouble expect = std::polar(1.0, -kTwoPi * tone * d / 64.0);
    CHECK((y.row(tone).array() - expect).abs().maxCoeff() < 1e-10);
    CHECK(y.norm() == doctest::Approx(4.0));
}

TEST_CASE("CP absorbs the delay spread")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int mu = 0; mu <= 3; ++mu) {
        const FrameParams p = desk(mu);
        const VsbDims d = derive_vsb_dims(p);
        for (int trial = 0; trial < 10; ++trial) {
            ChannelRealization ch;
            ch.M = 64;
            ch.N = 16;
            for (int l = 0; l <= d.cp_len; ++l)
                ch.taps.push_back({{u(rng), u(rng)}, l, 0});
            const CMatrix x = random_matrix(d.subcarriers, d.symbols, rng);
            const CVector stream = ofdm_modulate(x, p).stream();
            const CVector rx = apply_ltv(stream, ch, d.cp_len);
            CHECK((rx - convolve(stream, ch.taps)).norm() < 1e-9);
            const CMatrix y = ofdm_demodulate(rx, p);
            double err = 0.0;
            for (int m = 0; m < d.subcarriers; ++m)
                for (int n = 0; n < d.symbols; ++n)
                    err = std::max(err, std::abs(y(m, n) - tf_response(ch, m, n, p) * x(m, n)));
            CHECK(err < 1e-9);
        }
    }
}

TEST_CASE("AWGN keeps its variance per cell")
{
    std::mt19937_64 rng(6);
    const FrameParams p = desk(0);
    const Eigen::Index n = vsb_frame_samples(p);
    double power = 0.0;
    const int frames = 100;
    for (int f = 0; f < frames; ++f) {
        CVector noise = CVector::Zero(n);
        add_awgn(noise, 0.5, rng);
        power += ofdm_demodulate(noise, p).squaredNorm() / (64 * 16);
    }
    CHECK(power / frames == doctest::Approx(0.5).epsilon(0.01));
}
