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

#ifndef OTFSIM_DFT_HPP
#define OTFSIM_DFT_HPP

#include "otfsim/types.hpp"

namespace otfsim::dft {

// Unitary transforms. W_L denotes the normalized IDFT matrix,
// W_L[a, b] = exp(+j 2 pi a b / L) / sqrt(L), so idft(x) = W_L x and
// dft(x) = W_L^H x.
CVector idft(const CVector& x);
CVector dft(const CVector& x);

// Column-wise transforms of a matrix.
CMatrix idft_columns(const CMatrix& x);
CMatrix dft_columns(const CMatrix& x);
// Row-wise: idft_rows(X) = X W_L (W_L is symmetric).
CMatrix idft_rows(const CMatrix& x);
CMatrix dft_rows(const CMatrix& x);

// Explicit W_L, for cross-checks at small sizes.
CMatrix idft_matrix(int size);

} // namespace otfsim::dft

#endif // OTFSIM_DFT_HPP
