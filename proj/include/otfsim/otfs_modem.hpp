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

#ifndef OTFSIM_OTFS_MODEM_HPP
#define OTFSIM_OTFS_MODEM_HPP

#include <utility>
#include <vector>

#include "otfsim/types.hpp"

namespace otfsim {

// Time-domain samples of one frame, optionally with a cyclic prefix.
struct TimeDomainFrame {
    CVector samples;
    int cp_len = 0;

    Eigen::Index body_len() const { return samples.size() - cp_len; }
    auto body() const { return samples.tail(body_len()); }
};

// Delay-Doppler (M x N) to time-frequency (M x N): Z = W_M^H X W_N.
CMatrix isfft(const CMatrix& dd);
// Inverse of isfft: X = W_M Z W_N^H.
CMatrix sfft(const CMatrix& tf);

// RCP-OTFS body without CP: s = vec{X W_N} = (W_N kron I_M) vec{X}.
TimeDomainFrame otfs_modulate(const CMatrix& dd);

// Block OFDM with N subcarriers and M symbols carrying the same matrix:
// s_bofdm = vec{W_N X^T}. No CP.
TimeDomainFrame block_ofdm_modulate(const CMatrix& tf);

// out(n M + m) = in(m N + n): block OFDM sample order to OTFS order.
CVector interleave(const CVector& in, int M, int N);
// Inverse permutation of interleave.
CVector deinterleave(const CVector& in, int M, int N);

// Prepends the last L samples of the body.
// Throws SizeError if the frame already has a CP or L >= body length.
TimeDomainFrame add_cp(const TimeDomainFrame& body, int L);
// Drops the first L samples.
TimeDomainFrame remove_cp(const TimeDomainFrame& frame, int L);
inline TimeDomainFrame remove_cp(const TimeDomainFrame& frame) { return remove_cp(frame, frame.cp_len); }

// y = A^H r reshaped to the M x N delay-Doppler grid (same layout as the
// transmit grid, so that demodulate(modulate(X)) == X).
CMatrix otfs_demodulate(const CVector& r, int M, int N);
CMatrix block_ofdm_demodulate(const CVector& r, int M, int N);

// The unitary frame transform used by the joint equalizer, s = A x with
// x = vec{X}. RCP-OTFS uses A = W_N kron I_M; block OFDM uses the same
// matrix with the rows deinterleaved.
class FrameTransform {
public:
    enum class Kind { Otfs, BlockOfdm };

    FrameTransform(Kind kind, int M, int N);

    Kind kind() const { return kind_; }
    int rows() const { return M_; }
    int cols() const { return N_; }
    int size() const { return M_ * N_; }

    CVector apply(const CVector& x) const;   // A x
    CVector adjoint(const CVector& s) const; // A^H s

    // Nonzero entries (row, value) of column eta of A. Every column has N.
    std::vector<std::pair<int, cdouble>> column(int eta) const;

    // Explicit MN x MN matrix; only sensible for small frames.
    CMatrix dense() const;

private:
    Kind kind_;
    int M_;
    int N_;
};

// Explicit W_N kron I_M.
CMatrix otfs_transform_matrix(int M, int N);

} // namespace otfsim

#endif // OTFSIM_OTFS_MODEM_HPP
