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

#ifndef OTFSIM_EQUALIZATION_HPP
#define OTFSIM_EQUALIZATION_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otfsim/channel.hpp"
#include "otfsim/grid.hpp"
#include "otfsim/otfs_modem.hpp"
#include "otfsim/types.hpp"

namespace otfsim {

// Labeled symbol alphabet. Label bit j (j = 0 first) is bit
// (label >> (bits - 1 - j)) & 1, so a label reads MSB first.
class Constellation {
public:
    Constellation(std::vector<cdouble> points, int bits_per_symbol);

    // Square Gray-labeled QAM with unit average energy: 2 (QPSK), 4, 6 bits.
    // The first half of the label selects the in-phase level.
    static Constellation qam(int bits_per_symbol);
    // "qpsk", "16qam", "64qam". Throws ConfigError otherwise.
    static Constellation from_name(const std::string& name);

    int bits_per_symbol() const { return bits_; }
    int size() const { return static_cast<int>(points_.size()); }
    const std::vector<cdouble>& points() const { return points_; }
    double average_energy() const;

    // Maps bits (0/1), bits_per_symbol at a time. Throws SizeError if the
    // length is not a multiple of bits_per_symbol.
    std::vector<cdouble> map(std::span<const std::uint8_t> bits) const;
    // Label of the nearest point.
    int nearest(cdouble x) const;

private:
    std::vector<cdouble> points_;
    int bits_;
};

struct EqualizedFrame {
    CVector symbols;
    RVector noise_vars;          // > 0 everywhere
    std::vector<bool> erasures;  // cells whose LLRs are forced to zero
    double condition_estimate = 1.0; // reciprocal condition estimate; NaN if not estimated
    bool regularized = false;        // true when the regularization fallback kicked in
    int iterations = 0;              // CG iterations (iterative solver only)

    Eigen::Index size() const { return symbols.size(); }
};

enum class LmmseSolver {
    Auto,      // dense for small frames, sparse direct otherwise
    Dense,     // literal MN x MN algebra; small frames only
    Sparse,    // sparse LDL^H of H^H H + rho I, exact noise variances
    Iterative, // matrix-free conjugate gradient
};

// "auto", "dense", "sparse", "iterative".
LmmseSolver parse_lmmse_solver(const std::string& name);

struct LmmseOptions {
    LmmseSolver solver = LmmseSolver::Auto;
    int dense_limit = 256;          // Auto picks Dense up to this many cells
    double cg_tolerance = 1e-8;     // relative residual
    int cg_max_iterations = 2000;
    int trace_probes = 16;          // Hutchinson probes for the iterative noise variance
    std::uint64_t probe_seed = 0x5eed;
};

// x = (H A)^H [(H A)(H A)^H + rho I]^{-1} r with rho = noise_var / data_var,
// and per-cell noise variance noise_var * diag(H_mmse H_mmse^H).
// `r` is the received body after CP removal (length MN); the output has one
// entry per delay-Doppler cell in vec order.
// Since A is unitary the solvers work with D = H^H H + rho I:
// x = A^H D^{-1} H^H r and diag = a^H D^{-1} a - rho |D^{-1} a|^2 per
// column a of A. The iterative solver reports the mean of that diagonal
// for every cell.
// With noise_var = 0 and a singular H the system is regularized with a
// tiny rho and `regularized` is set.
EqualizedFrame lmmse_equalize(const CVector& r, const ChannelOperator& h, const FrameTransform& a,
                              double noise_var, double data_var, const LmmseOptions& options = {});

// |h| below this floor marks the cell as an erasure.
inline constexpr double kErasureFloor = 1e-12;

// x = y / h and noise_var / |h|^2 on every Data cell of `roles`, in the
// column-major order used by extract_ofdm_data.
EqualizedFrame single_tap_equalize(const CMatrix& rx, const CMatrix& h_est,
                                   const Eigen::Matrix<TfRole, Eigen::Dynamic, Eigen::Dynamic>& roles,
                                   double noise_var);

// Keeps the listed cells (e.g. the OTFS data cells) of an equalized frame.
EqualizedFrame select_cells(const EqualizedFrame& eq, std::span<const int> cells);

// Max-log LLRs, cells x bits_per_symbol:
//   L = min_{s: b=1} |x - s|^2 / s2 - min_{s: b=0} |x - s|^2 / s2,
// positive when bit 0 is more likely. This is the negative of the
// textbook difference written with the bit-0 set first; the decoder uses
// the positive-means-zero convention throughout. Erased cells give 0.
RMatrix compute_llrs(const EqualizedFrame& eq, const Constellation& constellation);

} // namespace otfsim

#endif // OTFSIM_EQUALIZATION_HPP
