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

#ifndef OTFSIM_METRICS_HPP
#define OTFSIM_METRICS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "otfsim/types.hpp"

namespace otfsim {

// 10 log10(max |s|^2 / mean |s|^2). Throws Error on an all-zero signal.
double papr_db(const CVector& samples);

// Band-limited interpolation by zero-padding the spectrum; factor 1 returns
// the input unchanged.
CVector oversample(const CVector& samples, int factor);

struct CcdfCurve {
    std::vector<double> thresholds_db;
    std::vector<double> probabilities; // P(PAPR > threshold)
};

// Empirical P(x > threshold). Throws Error on an empty sample set.
CcdfCurve ccdf(std::span<const double> samples, std::span<const double> thresholds_db);

// Streaming CCDF on a fixed threshold grid; merging is exact and
// order-independent.
class CcdfAccumulator {
public:
    explicit CcdfAccumulator(std::vector<double> thresholds_db);

    void add(double papr);
    void merge(const CcdfAccumulator& other);

    std::uint64_t samples() const { return total_; }
    const std::vector<double>& thresholds() const { return thresholds_; }
    CcdfCurve curve() const;
    // Smallest grid threshold whose exceedance probability is <= p; the
    // largest threshold if none is.
    double quantile_db(double p) const;

private:
    std::vector<double> thresholds_;
    std::vector<std::uint64_t> exceed_;
    std::uint64_t total_ = 0;
};

// Energy spent on the CP: 10 log10((body + cp) / body).
double cp_snr_loss_db(int body_len, int cp_len);

struct BlerPoint {
    double snr_db = 0.0;
    std::uint64_t block_errors = 0;
    std::uint64_t blocks = 0;
    double bler = 0.0;

    void merge(const BlerPoint& other);
};

BlerPoint bler_accumulate(std::span<const bool> successes, BlerPoint point);

struct Interval {
    double lo;
    double hi;
};

// Wilson score interval for `errors` out of `trials` at normal quantile z
// (1.96 for 95 %). [0, 1] when trials is zero.
Interval wilson_interval(std::uint64_t errors, std::uint64_t trials, double z = 1.959963984540054);

} // namespace otfsim

#endif // OTFSIM_METRICS_HPP
