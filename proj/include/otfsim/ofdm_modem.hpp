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

#ifndef OTFSIM_OFDM_MODEM_HPP
#define OTFSIM_OFDM_MODEM_HPP

#include <vector>

#include "otfsim/grid.hpp"
#include "otfsim/types.hpp"

namespace otfsim {

// VSB-OFDM frame: 2^mu N symbols of 2^-mu M + L_mu samples each.
struct VsbOfdmFrame {
    std::vector<CVector> symbols; // each with its CP in front
    int cp_len = 0;
    int numerology = 0;

    CVector stream() const;
    Eigen::Index total_samples() const;
};

// Total samples of a VSB-OFDM frame: 2^mu N (2^-mu M + L_mu).
Eigen::Index vsb_frame_samples(const FrameParams& params);

// IDFT of every grid column (unitary, size 2^-mu M), per-symbol CP.
VsbOfdmFrame ofdm_modulate(const CMatrix& tf, const FrameParams& params);

// Strips each CP and applies the unitary DFT. Returns the
// 2^-mu M x 2^mu N received grid.
CMatrix ofdm_demodulate(const CVector& rx, const FrameParams& params);

} // namespace otfsim

#endif // OTFSIM_OFDM_MODEM_HPP
