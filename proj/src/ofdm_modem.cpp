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

#include "otfsim/ofdm_modem.hpp"

#include <string>

#include "otfsim/dft.hpp"

namespace otfsim {

CVector VsbOfdmFrame::stream() const
{
    CVector out(total_samples());
    Eigen::Index pos = 0;
    for (const auto& sym : symbols) {
        out.segment(pos, sym.size()) = sym;
        pos += sym.size();
    }
    return out;
}

Eigen::Index VsbOfdmFrame::total_samples() const
{
    Eigen::Index n = 0;
    for (const auto& sym : symbols)
        n += sym.size();
    return n;
}

Eigen::Index vsb_frame_samples(const FrameParams& params)
{
    const VsbDims d = derive_vsb_dims(params);
    return static_cast<Eigen::Index>(d.symbols) * (d.subcarriers + d.cp_len);
}

VsbOfdmFrame ofdm_modulate(const CMatrix& tf, const FrameParams& params)
{
    const VsbDims d = derive_vsb_dims(params);
    if (tf.rows() != d.subcarriers || tf.cols() != d.symbols)
        throw SizeError("OFDM grid is " + std::to_string(tf.rows()) + "x" + std::to_string(tf.cols()) +
                        ", expected " + std::to_string(d.subcarriers) + "x" + std::to_string(d.symbols));
    if (d.cp_len >= d.subcarriers)
        throw ConfigError("CP longer than the OFDM symbol");

    VsbOfdmFrame frame;
    frame.cp_len = d.cp_len;
    frame.numerology = params.numerology;
    frame.symbols.reserve(static_cast<std::size_t>(d.symbols));
    for (int n = 0; n < d.symbols; ++n) {
        const CVector body = dft::idft(tf.col(n));
        CVector sym(d.subcarriers + d.cp_len);
        sym << body.tail(d.cp_len), body;
        frame.symbols.push_back(std::move(sym));
    }
    return frame;
}

CMatrix ofdm_demodulate(const CVector& rx, const FrameParams& params)
{
    const VsbDims d = derive_vsb_dims(params);
    const Eigen::Index want = vsb_frame_samples(params);
    if (rx.size() != want)
        throw SizeError("OFDM stream length " + std::to_string(rx.size()) + ", expected " +
                        std::to_string(want));
    const int stride = d.subcarriers + d.cp_len;
    CMatrix out(d.subcarriers, d.symbols);
    for (int n = 0; n < d.symbols; ++n)
        out.col(n) = dft::dft(rx.segment(static_cast<Eigen::Index>(n) * stride + d.cp_len, d.subcarriers));
    return out;
}

} // namespace otfsim
