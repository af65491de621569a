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

#ifndef OTFSIM_TYPES_HPP
#define OTFSIM_TYPES_HPP

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace otfsim {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Vector or grid dimensions disagree with what an operation expects.
class SizeError : public Error {
public:
    using Error::Error;
};

// Numerology that does not divide the frame into whole subcarriers/symbols.
class NumerologyError : public Error {
public:
    using Error::Error;
};

// Doppler spread too large for the Doppler bins of the frame.
class AliasingError : public Error {
public:
    using Error::Error;
};

// Inconsistent or missing configuration (files, CP length, RS layout, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace otfsim

#endif // OTFSIM_TYPES_HPP
