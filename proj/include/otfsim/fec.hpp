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

#ifndef OTFSIM_FEC_HPP
#define OTFSIM_FEC_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "otfsim/types.hpp"

namespace otfsim {

using Bits = std::vector<std::uint8_t>;

// LLR assigned to known filler bits (bit 0). The decoder saturates inputs at
// this magnitude, so +inf is accepted too.
inline constexpr double kFillerLlr = 1e6;

struct DecoderOptions {
    int max_iterations = 50;
    double scaling = 0.75; // normalized min-sum factor
};

struct DecodeResult {
    Bits codeword;        // hard decisions on all n bits
    bool success = false; // every parity check satisfied at exit
    int iterations = 0;
};

// Binary quasi-cyclic LDPC code built from a base matrix of cyclic shifts.
// Block (i, j) with shift s >= 0 is the Z x Z identity rotated so that row r
// has its one in column (r + s) mod Z; -1 is the zero block.
class LdpcCode {
public:
    LdpcCode(std::vector<std::vector<int>> base, int lifting);

    // Text format: '#' comments, a "lifting Z" line, then one row of shifts
    // per line. Throws ConfigError on malformed or non-encodable codes.
    static LdpcCode load(const std::filesystem::path& path);
    // The bundled rate-2/3, n = 1944 code.
    static LdpcCode standard_r23_n1944();

    int codeword_length() const { return n_; }
    int message_length() const { return k_; }
    int check_count() const { return m_; }
    int lifting() const { return z_; }
    double rate() const { return static_cast<double>(k_) / n_; }

    // Column indices of parity check `row`.
    const std::vector<int>& check(int row) const { return checks_[static_cast<std::size_t>(row)]; }
    // Codeword positions that carry the message, in message order.
    const std::vector<int>& message_positions() const { return info_; }

    // Systematic encoding of exactly message_length() bits.
    Bits encode(std::span<const std::uint8_t> message) const;
    Bits extract_message(std::span<const std::uint8_t> codeword) const;
    bool satisfies_checks(std::span<const std::uint8_t> codeword) const;

    // Normalized min-sum with a flooding schedule; LLR > 0 favors bit 0.
    // Exits as soon as the hard decisions satisfy every check (possibly
    // before the first iteration).
    DecodeResult decode(std::span<const double> llr, const DecoderOptions& options = {}) const;

private:
    int z_;
    int n_;
    int m_;
    int k_;
    std::vector<std::vector<int>> checks_;
    std::vector<int> info_;
    std::vector<int> parity_;
    // Row i gives parity bit parity_[i] as the XOR of the message bits set in it.
    std::vector<std::vector<std::uint64_t>> generator_;
};

// Codewords stored one per column: n x N_cw.
struct CodedPayload {
    std::vector<Bits> codewords;

    int count() const { return static_cast<int>(codewords.size()); }
    // Bits in segmentation order: codeword 0 first.
    Bits flatten() const;
};

// Encodes a message whose length is a multiple of message_length().
// Throws SizeError otherwise.
CodedPayload encode(std::span<const std::uint8_t> message, const LdpcCode& code);

// Decodes every column of an n x N_cw LLR matrix.
std::vector<DecodeResult> decode(const RMatrix& llr, const LdpcCode& code,
                                 const DecoderOptions& options = {});

// Column-major reshape of a flat LLR stream into n x N_cw.
// Throws SizeError when the length is not a multiple of n.
RMatrix reshape_llrs(std::span<const double> flat, int codeword_length);

} // namespace otfsim

#endif // OTFSIM_FEC_HPP
