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

#include "otfsim/dft.hpp"

#include <cmath>

#include <unsupported/Eigen/FFT>

namespace otfsim::dft {

namespace {

// Eigen::FFT caches twiddles per size; one instance per thread.
Eigen::FFT<double>& engine()
{
    thread_local Eigen::FFT<double> fft;
    return fft;
}

// Eigen's fwd() is exp(-j...) unscaled, inv() is exp(+j...) scaled by 1/L.
CVector forward_unitary(const CVector& x)
{
    if (x.size() <= 1)
        return x;
    CVector out(x.size());
    engine().fwd(out, x);
    return out / std::sqrt(static_cast<double>(x.size()));
}

CVector inverse_unitary(const CVector& x)
{
    if (x.size() <= 1)
        return x;
    CVector out(x.size());
    engine().inv(out, x);
    return out * std::sqrt(static_cast<double>(x.size()));
}

} // namespace

CVector idft(const CVector& x) { return inverse_unitary(x); }
CVector dft(const CVector& x) { return forward_unitary(x); }

CMatrix idft_columns(const CMatrix& x)
{
    CMatrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        out.col(c) = inverse_unitary(x.col(c));
    return out;
}

CMatrix dft_columns(const CMatrix& x)
{
    CMatrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        out.col(c) = forward_unitary(x.col(c));
    return out;
}

CMatrix idft_rows(const CMatrix& x)
{
    CMatrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        out.row(r) = inverse_unitary(x.row(r).transpose()).transpose();
    return out;
}

CMatrix dft_rows(const CMatrix& x)
{
    CMatrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        out.row(r) = forward_unitary(x.row(r).transpose()).transpose();
    return out;
}

CMatrix idft_matrix(int size)
{
    CMatrix w(size, size);
    const double scale = 1.0 / std::sqrt(static_cast<double>(size));
    for (int a = 0; a < size; ++a)
        for (int b = 0; b < size; ++b) {
            // Reduce the exponent first so large sizes keep full precision.
            const long e = (static_cast<long>(a) * b) % size;
            w(a, b) = std::polar(scale, kTwoPi * static_cast<double>(e) / size);
        }
    return w;
}

} // namespace otfsim::dft
