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

#include <memory>
#include <random>

#include "otfsim/metrics.hpp"
#include "otfsim/otfs_modem.hpp"

using namespace otfsim;

TEST_CASE("CP energy loss")
{
    CHECK(cp_snr_loss_db(512, 37) == doctest::Approx(10.0 * std::log10(549.0 / 512.0)).epsilon(1e-12));
    CHECK(std::abs(cp_snr_loss_db(512, 37) - 0.30) < 0.01);
    CHECK(std::abs(cp_snr_loss_db(65536, 37) - 0.00245) < 0.00001);
    CHECK(cp_snr_loss_db(512, 0) == 0.0);
    CHECK(cp_snr_loss_db(512, 38) > cp_snr_loss_db(512, 37));
    CHECK(cp_snr_loss_db(1024, 37) < cp_snr_loss_db(512, 37));
    CHECK_THROWS_AS(cp_snr_loss_db(0, 3), ConfigError);
    CHECK_THROWS_AS(cp_snr_loss_db(8, -1), ConfigError);
}

TEST_CASE("PAPR")
{
    CHECK(papr_db(CVector::Constant(16, cdouble(0.3, 0.4))) == doctest::Approx(0.0).epsilon(1e-12));
    CVector spike = CVector::Zero(40);
    spike(7) = 2.0;
    CHECK(papr_db(spike) == doctest::Approx(10.0 * std::log10(40.0)));
    CHECK_THROWS_AS(papr_db(CVector::Zero(5)), Error);
    CHECK_THROWS_AS(papr_db(CVector()), Error);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    CVector s(128);
    for (auto& v : s)
        v = {g(rng), g(rng)};
    CHECK(papr_db(3.5 * s) == doctest::Approx(papr_db(s)).epsilon(1e-12));
    CHECK(papr_db(interleave(s, 16, 8)) == papr_db(s));
    CHECK(papr_db(deinterleave(s, 16, 8)) == papr_db(s));
}

TEST_CASE("oversampling")
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    CVector s(64);
    for (auto& v : s)
        v = {g(rng), g(rng)};
    CHECK(oversample(s, 1) == s);
    const CVector up = oversample(s, 4);
    REQUIRE(up.size() == 256);
    // Energy per sample is kept and the original samples are interpolated through.
    CHECK(up.squaredNorm() / 256 == doctest::Approx(s.squaredNorm() / 64).epsilon(0.05));
    CHECK(papr_db(up) >= papr_db(s) - 0.5);
    CHECK_THROWS_AS(oversample(s, 0), ConfigError);
}

TEST_CASE("empirical CCDF")
{
    const std::vector<double> two{3.0, 5.0};
    const std::vector<double> t{4.0};
    CHECK(ccdf(two, t).probabilities == std::vector<double>{0.5});

    const std::vector<double> same(10, 6.0);
    const std::vector<double> grid{5.0, 5.99, 6.0, 6.01, 7.0};
    CHECK(ccdf(same, grid).probabilities == std::vector<double>{1.0, 1.0, 0.0, 0.0, 0.0});

    std::mt19937_64 rng(3);
    std::exponential_distribution<double> e;
    std::vector<double> x(1000), th;
    for (auto& v : x)
        v = 10.0 * e(rng);
    for (double a = 0.0; a < 60.0; a += 0.5)
        th.push_back(a);
    const auto c = ccdf(x, th);
    for (std::size_t i = 1; i < c.probabilities.size(); ++i)
        CHECK(c.probabilities[i] <= c.probabilities[i - 1]);
    CHECK_THROWS_AS(ccdf(std::vector<double>{}, t), Error);
}

TEST_CASE("streaming CCDF")
{
    std::vector<double> th;
    for (double a = 0.0; a <= 12.0; a += 0.25)
        th.push_back(a);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 12.0);
    std::vector<double> x(3000);
    for (auto& v : x)
        v = u(rng);

    CcdfAccumulator all(th), a(th), b(th), c(th);
    for (std::size_t i = 0; i < x.size(); ++i) {
        all.add(x[i]);
        (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add(x[i]);
    }
    CcdfAccumulator ab = a;
    ab.merge(b);
    ab.merge(c);
    CcdfAccumulator cb = c;
    cb.merge(b);
    cb.merge(a);
    CHECK(ab.samples() == 3000);
    CHECK(ab.curve().probabilities == all.curve().probabilities);
    CHECK(cb.curve().probabilities == all.curve().probabilities);
    CHECK(all.curve().probabilities == ccdf(x, th).probabilities);

    const double q = all.quantile_db(0.1);
    CHECK(q == doctest::Approx(10.75).epsilon(0.05));
    CHECK_THROWS_AS(ab.merge(CcdfAccumulator({1.0})), ConfigError);
    CHECK_THROWS_AS(CcdfAccumulator({2.0, 1.0}), ConfigError);
}

TEST_CASE("BLER accounting")
{
    BlerPoint p;
    std::vector<bool> flags(30, true);
    flags[0] = flags[9] = flags[29] = false;
    // std::vector<bool> has no contiguous storage; copy into a plain array.
    std::unique_ptr<bool[]> raw(new bool[30]);
    std::copy(flags.begin(), flags.end(), raw.get());
    p = bler_accumulate(std::span<const bool>(raw.get(), 30), p);
    CHECK(p.block_errors == 3);
    CHECK(p.blocks == 30);
    CHECK(p.bler == doctest::Approx(0.1));

    const bool ok[4] = {true, true, true, true};
    const bool bad[4] = {false, false, false, false};
    CHECK(bler_accumulate(ok, {}).bler == 0.0);
    CHECK(bler_accumulate(bad, {}).bler == 1.0);

    BlerPoint q = bler_accumulate(bad, {});
    q.merge(p);
    CHECK(q.block_errors == 7);
    CHECK(q.blocks == 34);
    CHECK(q.bler == doctest::Approx(7.0 / 34.0));
}

TEST_CASE("Wilson interval")
{
    // Hand evaluation for 3 / 30 at z = 1.96.
    const auto ci = wilson_interval(3, 30);
    CHECK(ci.lo == doctest::Approx(0.03459).epsilon(1e-3));
    CHECK(ci.hi == doctest::Approx(0.25621).epsilon(1e-3));
    const auto z = wilson_interval(0, 50);
    CHECK(z.lo == 0.0);
    CHECK(z.hi > 0.0);
    CHECK(wilson_interval(0, 0).lo == 0.0);
    CHECK(wilson_interval(0, 0).hi == 1.0);

    // Quadrupling the trials roughly halves the width.
    const auto w1 = wilson_interval(100, 1000), w4 = wilson_interval(400, 4000);
    CHECK((w1.hi - w1.lo) / (w4.hi - w4.lo) == doctest::Approx(2.0).epsilon(0.02));
}
