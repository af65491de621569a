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

#include "otfsim/equalization.hpp"

using namespace otfsim;

namespace {

CVector random_vector(int n, Rng& rng, double var = 1.0)
{
    std::normal_distribution<double> g(0.0, std::sqrt(var / 2.0));
    CVector v(n);
    for (auto& x : v)
        x = {g(rng), g(rng)};
    return v;
}

ChannelRealization random_channel(int M, int N, Rng& rng, int taps = 4)
{
    std::uniform_int_distribution<int> l(0, std::min(3, M * N - 1)), k(-std::max(0, N / 2 - 1), std::max(0, N / 2 - 1));
    std::normal_distribution<double> g(0.0, std::sqrt(0.5 / taps));
    ChannelRealization ch;
    ch.M = M;
    ch.N = N;
    for (int i = 0; i < taps; ++i)
        ch.taps.push_back({{g(rng), g(rng)}, l(rng), k(rng)});
    return ch;
}

// x = G^H (G G^H + rho I)^{-1} r and noise_var * rownorm^2 of that matrix, G = H A.
struct Oracle {
    CVector x;
    RVector var;
};

Oracle brute_force(const CVector& r, const ChannelRealization& ch, const FrameTransform& a,
                   double noise_var, double data_var)
{
    const int n = ch.M * ch.N;
    const CMatrix g = build_channel_matrix(ch) * a.dense();
    const CMatrix w =
        g.adjoint() * (g * g.adjoint() + (noise_var / data_var) * CMatrix::Identity(n, n)).fullPivLu().inverse();
    return {w * r, noise_var * w.rowwise().squaredNorm()};
}

LmmseOptions with(LmmseSolver s)
{
    LmmseOptions o;
    o.solver = s;
    o.cg_tolerance = 1e-12;
    return o;
}

} // namespace

TEST_CASE("scalar LMMSE")
{
    const ChannelRealization ch{{{cdouble(0.6, -0.3), 0, 0}}, 1, 1};
    const FrameTransform a(FrameTransform::Kind::Otfs, 1, 1);
    const cdouble h(0.6, -0.3), r(0.2, 1.1);
    const double sn2 = 0.3, sd2 = 2.0;
    for (auto s : {LmmseSolver::Dense, LmmseSolver::Sparse, LmmseSolver::Iterative}) {
        const auto eq = lmmse_equalize(CVector::Constant(1, r), ChannelOperator(ch), a, sn2, sd2, with(s));
        const cdouble expect = std::conj(h) * r / (std::norm(h) + sn2 / sd2);
        CHECK(std::abs(eq.symbols(0) - expect) < 1e-12);
        CHECK(eq.noise_vars(0) == doctest::Approx(sn2 * std::norm(h) / std::pow(std::norm(h) + sn2 / sd2, 2)));
    }
}

TEST_CASE("identity channel inverts the transform")
{
    Rng rng(1);
    const ChannelRealization ch{{{1.0, 0, 0}}, 8, 4};
    for (auto kind : {FrameTransform::Kind::Otfs, FrameTransform::Kind::BlockOfdm}) {
        const FrameTransform a(kind, 8, 4);
        const CVector x = random_vector(32, rng);
        const CVector r = a.apply(x);
        for (auto s : {LmmseSolver::Dense, LmmseSolver::Sparse, LmmseSolver::Iterative}) {
            const auto eq = lmmse_equalize(r, ChannelOperator(ch), a, 0.0, 1.0, with(s));
            CHECK((eq.symbols - x).norm() < 1e-10);
            CHECK_FALSE(eq.regularized);
            const auto noisy = lmmse_equalize(r, ChannelOperator(ch), a, 0.5, 1.0, with(s));
            CHECK((noisy.symbols - x / 1.5).norm() < 1e-10);
            CHECK((noisy.noise_vars.array() - 0.5 / 2.25).abs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("solvers agree with the brute-force expression")
{
    Rng rng(2);
    for (auto [M, N] : {std::pair{2, 2}, {8, 8}, {16, 4}}) {
        for (auto kind : {FrameTransform::Kind::Otfs, FrameTransform::Kind::BlockOfdm}) {
            for (int trial = 0; trial < 5; ++trial) {
                const auto ch = random_channel(M, N, rng);
                const FrameTransform a(kind, M, N);
                const CVector r = random_vector(M * N, rng);
                const double sn2 = 0.05, sd2 = 1.3;
                const Oracle o = brute_force(r, ch, a, sn2, sd2);
                for (auto s : {LmmseSolver::Dense, LmmseSolver::Sparse}) {
                    const auto eq = lmmse_equalize(r, ChannelOperator(ch), a, sn2, sd2, with(s));
                    CHECK((eq.symbols - o.x).cwiseAbs().maxCoeff() < 1e-8);
                    CHECK((eq.noise_vars - o.var).cwiseAbs().maxCoeff() < 1e-8);
                }
                const auto it = lmmse_equalize(r, ChannelOperator(ch), a, sn2, sd2, with(LmmseSolver::Iterative));
                CHECK((it.symbols - o.x).cwiseAbs().maxCoeff() < 1e-8);
                CHECK(it.noise_vars(0) == doctest::Approx(o.var.mean()).epsilon(0.2));
                CHECK(it.iterations > 0);
            }
        }
    }
}

TEST_CASE("iterative and dense agree at 1024 cells")
{
    Rng rng(3);
    const auto ch = random_channel(64, 16, rng, 6);
    const FrameTransform a(FrameTransform::Kind::Otfs, 64, 16);
    const CVector r = random_vector(1024, rng);
    LmmseOptions it = with(LmmseSolver::Iterative);
    it.cg_tolerance = 1e-10;
    const auto d = lmmse_equalize(r, ChannelOperator(ch), a, 0.1, 1.0, with(LmmseSolver::Dense));
    const auto s = lmmse_equalize(r, ChannelOperator(ch), a, 0.1, 1.0, with(LmmseSolver::Sparse));
    const auto c = lmmse_equalize(r, ChannelOperator(ch), a, 0.1, 1.0, it);
    CHECK((c.symbols - d.symbols).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((s.symbols - d.symbols).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((s.noise_vars - d.noise_vars).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(c.noise_vars(0) == doctest::Approx(d.noise_vars.mean()).epsilon(0.1));
}

TEST_CASE("zero-forcing limit")
{
    Rng rng(4);
    const ChannelRealization ch{{{1.0, 0, 0}, {cdouble(0.3, 0.2), 1, 1}, {cdouble(-0.2, 0.1), 2, -1}}, 8, 8};
    const FrameTransform a(FrameTransform::Kind::Otfs, 8, 8);
    const CVector x = random_vector(64, rng);
    const CVector r = ChannelOperator(ch).apply(a.apply(x));
    for (auto s : {LmmseSolver::Dense, LmmseSolver::Sparse, LmmseSolver::Iterative}) {
        const auto eq = lmmse_equalize(r, ChannelOperator(ch), a, 1e-12, 1.0, with(s));
        CHECK((eq.symbols - x).norm() / x.norm() < 1e-6);
    }
}

TEST_CASE("singular noiseless channel is regularized")
{
    // I - Pi annihilates the all-ones vector.
    const ChannelRealization ch{{{1.0, 0, 0}, {-1.0, 1, 0}}, 4, 4};
    const FrameTransform a(FrameTransform::Kind::Otfs, 4, 4);
    Rng rng(5);
    const CVector r = random_vector(16, rng);
    for (auto s : {LmmseSolver::Dense, LmmseSolver::Sparse, LmmseSolver::Iterative}) {
        const auto eq = lmmse_equalize(r, ChannelOperator(ch), a, 0.0, 1.0, with(s));
        CHECK(eq.regularized);
        CHECK(eq.symbols.allFinite());
        CHECK((eq.noise_vars.array() > 0.0).all());
    }
}

TEST_CASE("LMMSE beats perturbed filters")
{
    Rng rng(6);
    const int M = 4, N = 4, n = 16;
    const auto ch = random_channel(M, N, rng);
    const FrameTransform a(FrameTransform::Kind::Otfs, M, N);
    const double sn2 = 0.2, sd2 = 1.0;
    const ChannelOperator h(ch);
    CMatrix w(n, n);
    for (int j = 0; j < n; ++j)
        w.col(j) = lmmse_equalize(CVector::Unit(n, j), h, a, sn2, sd2, with(LmmseSolver::Dense)).symbols;

    std::vector<CVector> xs, rs;
    for (int d = 0; d < 1000; ++d) {
        xs.push_back(random_vector(n, rng, sd2));
        rs.push_back(h.apply(a.apply(xs.back())) + random_vector(n, rng, sn2));
    }
    auto mse = [&](const CMatrix& f) {
        double e = 0.0;
        for (std::size_t d = 0; d < xs.size(); ++d)
            e += (f * rs[d] - xs[d]).squaredNorm();
        return e;
    };
    const double best = mse(w);
    for (int p = 0; p < 20; ++p) {
        CMatrix delta(n, n);
        for (Eigen::Index i = 0; i < delta.size(); ++i)
            delta.data()[i] = random_vector(1, rng)(0);
        CHECK(mse(w + 0.1 * w.norm() / delta.norm() * delta) > best);
    }
}

TEST_CASE("single-tap equalizer")
{
    Eigen::Matrix<TfRole, Eigen::Dynamic, Eigen::Dynamic> roles(2, 2);
    roles << TfRole::Data, TfRole::ReferenceSignal, TfRole::Data, TfRole::Data;
    CMatrix h(2, 2), y(2, 2);
    h << 2.0, 1.0, 1.0, 1e-15;
    y << cdouble(2.0, 4.0), 9.0, cdouble(0.5, -0.5), 3.0;
    const auto eq = single_tap_equalize(y, h, roles, 0.8);
    REQUIRE(eq.size() == 3);
    CHECK(eq.symbols(0) == cdouble(1.0, 2.0));
    CHECK(eq.noise_vars(0) == doctest::Approx(0.2));
    CHECK(eq.symbols(1) == cdouble(0.5, -0.5));
    CHECK(eq.noise_vars(1) == doctest::Approx(0.8));
    CHECK_FALSE(eq.erasures[1]);
    CHECK(eq.erasures[2]);

    const auto llr = compute_llrs(eq, Constellation::qam(4));
    CHECK(llr.row(2).isZero());
    CHECK_THROWS_AS(single_tap_equalize(y, CMatrix::Ones(2, 3), roles, 0.8), SizeError);
}

TEST_CASE("QAM constellations")
{
    for (int bits : {2, 4, 6}) {
        const auto c = Constellation::qam(bits);
        CHECK(c.size() == (1 << bits));
        CHECK(c.average_energy() == doctest::Approx(1.0).epsilon(1e-12));
        // Gray labeling: nearest neighbours differ in one bit.
        const double dmin = 2.0 / std::sqrt(2.0 * ((1 << bits) - 1) / 3.0);
        for (int i = 0; i < c.size(); ++i)
            for (int j = 0; j < c.size(); ++j)
                if (std::abs(std::abs(c.points()[i] - c.points()[j]) - dmin) < 1e-9)
                    CHECK(std::popcount(static_cast<unsigned>(i ^ j)) == 1);
    }
    const auto q = Constellation::qam(4);
    const std::vector<std::uint8_t> bits{0, 0, 0, 0, 1, 1, 1, 1};
    const auto s = q.map(bits);
    CHECK(s[0] == q.points()[0]);
    CHECK(s[1] == q.points()[15]);
    // MSB half picks the in-phase level.
    CHECK(q.points()[0b0000].real() == q.points()[0b0011].real());
    CHECK(q.points()[0b0000].imag() == q.points()[0b1100].imag());
    CHECK_THROWS_AS(q.map(std::vector<std::uint8_t>(3)), SizeError);
    CHECK_THROWS_AS(Constellation::from_name("8psk"), ConfigError);
    CHECK(Constellation::from_name("64qam").size() == 64);
}

TEST_CASE("LLRs")
{
    const Constellation pam({1.0, -1.0}, 1);
    EqualizedFrame eq;
    eq.symbols = CVector{{1.0, -1.0}};
    eq.noise_vars = RVector{{1.0, 1.0}};
    const auto l = compute_llrs(eq, pam);
    CHECK(l(0, 0) == doctest::Approx(4.0));
    CHECK(l(1, 0) == doctest::Approx(-4.0));

    eq.noise_vars = RVector{{1e30, 1e30}};
    CHECK(compute_llrs(eq, pam).cwiseAbs().maxCoeff() < 1e-25);

    // Hard decisions reproduce the nearest label, and scaling cancels.
    Rng rng(7);
    for (int bits : {2, 4, 6}) {
        const auto c = Constellation::qam(bits);
        EqualizedFrame f;
        f.symbols = random_vector(500, rng, 1.5);
        f.noise_vars = RVector::Constant(500, 0.3);
        const RMatrix llr = compute_llrs(f, c);
        for (int i = 0; i < 500; ++i) {
            const int label = c.nearest(f.symbols(i));
            for (int j = 0; j < bits; ++j)
                CHECK((llr(i, j) < 0.0) == static_cast<bool>((label >> (bits - 1 - j)) & 1));
        }
        for (int i = 0; i < c.size(); ++i) {
            EqualizedFrame p;
            p.symbols = CVector::Constant(1, c.points()[i]);
            p.noise_vars = RVector::Constant(1, 1e-4);
            const RMatrix li = compute_llrs(p, c);
            for (int j = 0; j < bits; ++j)
                CHECK((li(0, j) < 0.0) == static_cast<bool>((i >> (bits - 1 - j)) & 1));
        }

        const double s = 3.7;
        std::vector<cdouble> scaled = c.points();
        for (auto& v : scaled)
            v *= s;
        EqualizedFrame g = f;
        g.symbols *= s;
        g.noise_vars *= s * s;
        CHECK((compute_llrs(g, Constellation(scaled, bits)) - llr).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + llr.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("cell selection")
{
    EqualizedFrame eq;
    eq.symbols = CVector{{1.0, 2.0, 3.0}};
    eq.noise_vars = RVector{{0.1, 0.2, 0.3}};
    eq.erasures = {false, true, false};
    const std::vector<int> keep{2, 1};
    const auto s = select_cells(eq, keep);
    CHECK(s.symbols == CVector{{3.0, 2.0}});
    CHECK(s.noise_vars == RVector{{0.3, 0.2}});
    CHECK(s.erasures == std::vector<bool>{false, true});
    const std::vector<int> bad{3};
    CHECK_THROWS_AS(select_cells(eq, bad), SizeError);
}

TEST_CASE("solver names")
{
    CHECK(parse_lmmse_solver("iterative") == LmmseSolver::Iterative);
    CHECK(parse_lmmse_solver("auto") == LmmseSolver::Auto);
    CHECK_THROWS_AS(parse_lmmse_solver("qr"), ConfigError);
}
