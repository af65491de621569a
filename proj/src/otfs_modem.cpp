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

#include "otfsim/otfs_modem.hpp"

#include <cmath>
#include <string>

#include "otfsim/dft.hpp"

namespace otfsim {

namespace {

void check_length(Eigen::Index got, Eigen::Index want, const char* what)
{
    if (got != want)
        throw SizeError(std::string(what) + ": length " + std::to_string(got) + ", expected " +
                        std::to_string(want));
}

CVector flatten(const CMatrix& m)
{
    return Eigen::Map<const CVector>(m.data(), m.size());
}

CMatrix reshape(const CVector& v, int rows, int cols)
{
    return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

} // namespace

CMatrix isfft(const CMatrix& dd)
{
    return dft::idft_rows(dft::dft_columns(dd));
}

CMatrix sfft(const CMatrix& tf)
{
    return dft::dft_rows(dft::idft_columns(tf));
}

TimeDomainFrame otfs_modulate(const CMatrix& dd)
{
    return {flatten(dft::idft_rows(dd)), 0};
}

TimeDomainFrame block_ofdm_modulate(const CMatrix& tf)
{
    return {flatten(dft::idft_columns(tf.transpose())), 0};
}

CVector interleave(const CVector& in, int M, int N)
{
    check_length(in.size(), static_cast<Eigen::Index>(M) * N, "interleave");
    CVector out(in.size());
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
            out(n * M + m) = in(m * N + n);
    return out;
}

CVector deinterleave(const CVector& in, int M, int N)
{
    check_length(in.size(), static_cast<Eigen::Index>(M) * N, "deinterleave");
    CVector out(in.size());
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
            out(m * N + n) = in(n * M + m);
    return out;
}

TimeDomainFrame add_cp(const TimeDomainFrame& body, int L)
{
    if (body.cp_len != 0)
        throw SizeError("frame already carries a cyclic prefix");
    if (L < 0 || L >= body.samples.size())
        throw SizeError("CP length " + std::to_string(L) + " must be below body length " +
                        std::to_string(body.samples.size()));
    TimeDomainFrame out;
    out.cp_len = L;
    out.samples.resize(body.samples.size() + L);
    out.samples << body.samples.tail(L), body.samples;
    return out;
}

TimeDomainFrame remove_cp(const TimeDomainFrame& frame, int L)
{
    if (L < 0 || L >= frame.samples.size())
        throw SizeError("CP length " + std::to_string(L) + " must be below frame length " +
                        std::to_string(frame.samples.size()));
    return {frame.samples.tail(frame.samples.size() - L), 0};
}

CMatrix otfs_demodulate(const CVector& r, int M, int N)
{
    check_length(r.size(), static_cast<Eigen::Index>(M) * N, "otfs_demodulate");
    return dft::dft_rows(reshape(r, M, N));
}

CMatrix block_ofdm_demodulate(const CVector& r, int M, int N)
{
    check_length(r.size(), static_cast<Eigen::Index>(M) * N, "block_ofdm_demodulate");
    return dft::dft_columns(reshape(r, N, M)).transpose();
}

FrameTransform::FrameTransform(Kind kind, int M, int N) : kind_(kind), M_(M), N_(N)
{
    if (M <= 0 || N <= 0)
        throw SizeError("transform dimensions must be positive");
}

CVector FrameTransform::apply(const CVector& x) const
{
    check_length(x.size(), size(), "FrameTransform::apply");
    const CMatrix X = reshape(x, M_, N_);
    return kind_ == Kind::Otfs ? otfs_modulate(X).samples : block_ofdm_modulate(X).samples;
}

CVector FrameTransform::adjoint(const CVector& s) const
{
    const CMatrix X = kind_ == Kind::Otfs ? otfs_demodulate(s, M_, N_)
                                          : block_ofdm_demodulate(s, M_, N_);
    return flatten(X);
}

std::vector<std::pair<int, cdouble>> FrameTransform::column(int eta) const
{
    if (eta < 0 || eta >= size())
        throw SizeError("column index out of range");
    // vec index eta = k M + l. OTFS sample n M + l carries W_N[k, n].
    const int l = eta % M_, k = eta / M_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(N_));
    std::vector<std::pair<int, cdouble>> col;
    col.reserve(static_cast<std::size_t>(N_));
    for (int n = 0; n < N_; ++n) {
        const long e = (static_cast<long>(k) * n) % N_;
        const cdouble w = std::polar(scale, kTwoPi * static_cast<double>(e) / N_);
        const int row = kind_ == Kind::Otfs ? n * M_ + l : l * N_ + n;
        col.emplace_back(row, w);
    }
    return col;
}

CMatrix FrameTransform::dense() const
{
    CMatrix a = CMatrix::Zero(size(), size());
    for (int eta = 0; eta < size(); ++eta)
        for (const auto& [row, v] : column(eta))
            a(row, eta) = v;
    return a;
}

CMatrix otfs_transform_matrix(int M, int N)
{
    const CMatrix w = dft::idft_matrix(N);
    CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(M) * N, static_cast<Eigen::Index>(M) * N);
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c)
            a.block(static_cast<Eigen::Index>(r) * M, static_cast<Eigen::Index>(c) * M, M, M) =
                w(r, c) * CMatrix::Identity(M, M);
    return a;
}

} // namespace otfsim
