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

#include "otfsim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "otfsim/dft.hpp"

namespace otfsim {

double papr_db(const CVector& samples)
{
    if (samples.size() == 0)
        throw Error("PAPR of an empty signal");
    const RVector p = samples.cwiseAbs2();
    const double mean = p.mean();
    if (!(mean > 0.0))
        throw Error("PAPR of an all-zero signal");
    return 10.0 * std::log10(p.maxCoeff() / mean);
}

CVector oversample(const CVector& samples, int factor)
{
    if (factor < 1)
        throw ConfigError("oversampling factor must be at least 1");
    if (factor == 1)
        return samples;
    const Eigen::Index n = samples.size();
    const CVector spec = dft::dft(samples);
    CVector padded = CVector::Zero(n * factor);
    const Eigen::Index pos = (n + 1) / 2; // nonnegative frequencies incl. DC
    padded.head(pos) = spec.head(pos);
    padded.tail(n - pos) = spec.tail(n - pos);
    return dft::idft(padded) * std::sqrt(static_cast<double>(factor));
}

CcdfCurve ccdf(std::span<const double> samples, std::span<const double> thresholds_db)
{
    if (samples.empty())
        throw Error("CCDF of an empty sample set");
    CcdfCurve c;
    c.thresholds_db.assign(thresholds_db.begin(), thresholds_db.end());
    for (double t : thresholds_db) {
        const auto above = std::count_if(samples.begin(), samples.end(), [t](double x) { return x > t; });
        c.probabilities.push_back(static_cast<double>(above) / static_cast<double>(samples.size()));
    }
    return c;
}

CcdfAccumulator::CcdfAccumulator(std::vector<double> thresholds_db)
    : thresholds_(std::move(thresholds_db)), exceed_(thresholds_.size(), 0)
{
    if (!std::is_sorted(thresholds_.begin(), thresholds_.end()))
        throw ConfigError("CCDF thresholds must be sorted");
}

void CcdfAccumulator::add(double papr)
{
    ++total_;
    // Thresholds strictly below the sample.
    const auto n = std::lower_bound(thresholds_.begin(), thresholds_.end(), papr) - thresholds_.begin();
    for (std::ptrdiff_t i = 0; i < n; ++i)
        ++exceed_[static_cast<std::size_t>(i)];
}

void CcdfAccumulator::merge(const CcdfAccumulator& other)
{
    if (other.thresholds_ != thresholds_)
        throw ConfigError("cannot merge CCDFs on different threshold grids");
    for (std::size_t i = 0; i < exceed_.size(); ++i)
        exceed_[i] += other.exceed_[i];
    total_ += other.total_;
}

CcdfCurve CcdfAccumulator::curve() const
{
    CcdfCurve c;
    c.thresholds_db = thresholds_;
    for (auto e : exceed_)
        c.probabilities.push_back(total_ ? static_cast<double>(e) / static_cast<double>(total_) : 0.0);
    return c;
}

double CcdfAccumulator::quantile_db(double p) const
{
    const auto c = curve();
    for (std::size_t i = 0; i < c.probabilities.size(); ++i)
        if (c.probabilities[i] <= p)
            return thresholds_[i];
    return thresholds_.empty() ? 0.0 : thresholds_.back();
}

double cp_snr_loss_db(int body_len, int cp_len)
{
    if (body_len <= 0 || cp_len < 0)
        throw ConfigError("CP loss needs a positive body and a nonnegative CP");
    return 10.0 * std::log10(static_cast<double>(body_len + cp_len) / body_len);
}

void BlerPoint::merge(const BlerPoint& other)
{
    block_errors += other.block_errors;
    blocks += other.blocks;
    bler = blocks ? static_cast<double>(block_errors) / static_cast<double>(blocks) : 0.0;
}

BlerPoint bler_accumulate(std::span<const bool> successes, BlerPoint point)
{
    for (bool ok : successes) {
        ++point.blocks;
        if (!ok)
            ++point.block_errors;
    }
    point.bler = point.blocks ? static_cast<double>(point.block_errors) / static_cast<double>(point.blocks) : 0.0;
    return point;
}

Interval wilson_interval(std::uint64_t errors, std::uint64_t trials, double z)
{
    if (trials == 0)
        return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // The bounds touch 0 and 1 exactly at the extremes; rounding would miss them.
    return {errors == 0 ? 0.0 : std::max(0.0, centre - half),
            errors == trials ? 1.0 : std::min(1.0, centre + half)};
}

} // namespace otfsim
