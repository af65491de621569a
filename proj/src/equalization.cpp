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

#include "otfsim/equalization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace otfsim {

namespace {

// Keeps noise variances strictly positive on noiseless runs.
constexpr double kNoiseVarFloor = 1e-30;
// Below this reciprocal condition number a noiseless system is regularized.
constexpr double kSingularRcond = 1e-13;
constexpr double kFallbackRho = 1e-10;

int gray(int i) { return i ^ (i >> 1); }

using SparseC = Eigen::SparseMatrix<cdouble>;

SparseC sparse_channel(const ChannelRealization& ch)
{
    const int n = ch.M * ch.N;
    std::vector<Eigen::Triplet<cdouble>> t;
    t.reserve(ch.taps.size() * static_cast<std::size_t>(n));
    for (const auto& tap : ch.taps) {
        const long k = ((static_cast<long>(tap.doppler_bin) % n) + n) % n;
        const int l = ((tap.delay_bin % n) + n) % n;
        for (int j = 0; j < n; ++j) {
            const long e = (k * j) % n;
            const cdouble v = tap.gain * std::polar(1.0, kTwoPi * static_cast<double>(e) / n);
            t.emplace_back((j + l) % n, j, v);
        }
    }
    SparseC h(n, n);
    h.setFromTriplets(t.begin(), t.end());
    h.makeCompressed();
    return h;
}

RVector floor_noise(RVector v)
{
    for (auto& x : v)
        x = std::max(x, kNoiseVarFloor);
    return v;
}

EqualizedFrame lmmse_dense(const CVector& r, const ChannelOperator& h, const FrameTransform& a,
                           double noise_var, double rho)
{
    const int n = h.size();
    const CMatrix g = build_channel_matrix(h.realization()) * a.dense();
    CMatrix s = g * g.adjoint();
    Eigen::LDLT<CMatrix> ldlt(s + rho * CMatrix::Identity(n, n));

    // LDLT's rcond misses exact rank loss, so the pivot spread is checked too.
    auto condition = [&]() {
        if (ldlt.info() != Eigen::Success)
            return 0.0;
        const RVector piv = ldlt.vectorD().real().cwiseAbs();
        const double spread = piv.maxCoeff() > 0.0 ? piv.minCoeff() / piv.maxCoeff() : 0.0;
        return std::min(ldlt.rcond(), spread);
    };

    EqualizedFrame eq;
    eq.condition_estimate = condition();
    if (rho == 0.0 && !(eq.condition_estimate > kSingularRcond)) {
        const double scale = std::max(s.diagonal().real().mean(), 1e-300);
        rho = kFallbackRho * scale;
        ldlt.compute(s + rho * CMatrix::Identity(n, n));
        eq.condition_estimate = condition();
        eq.regularized = true;
    }
    const CMatrix hm = g.adjoint() * ldlt.solve(CMatrix::Identity(n, n));
    eq.symbols = hm * r;
    eq.noise_vars = floor_noise(noise_var * hm.rowwise().squaredNorm());
    eq.erasures.assign(static_cast<std::size_t>(n), false);
    return eq;
}

EqualizedFrame lmmse_sparse(const CVector& r, const ChannelOperator& h, const FrameTransform& a,
                            double noise_var, double rho)
{
    const int n = h.size();
    const SparseC hs = sparse_channel(h.realization());
    const SparseC hh = hs.adjoint();
    const SparseC gram = (hh * hs).pruned();
    SparseC ident(n, n);
    ident.setIdentity();

    Eigen::SimplicialLDLT<SparseC, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    auto factor = [&](double rr) {
        const SparseC d = gram + rr * ident;
        ldlt.compute(d);
        if (ldlt.info() != Eigen::Success)
            return 0.0;
        const RVector piv = ldlt.vectorD().real().cwiseAbs();
        return piv.maxCoeff() > 0.0 ? piv.minCoeff() / piv.maxCoeff() : 0.0;
    };

    EqualizedFrame eq;
    eq.condition_estimate = factor(rho);
    if (rho == 0.0 && !(eq.condition_estimate > kSingularRcond)) {
        double scale = 0.0;
        for (int i = 0; i < n; ++i)
            scale += std::real(gram.coeff(i, i));
        rho = kFallbackRho * std::max(scale / n, 1e-300);
        eq.condition_estimate = factor(rho);
        eq.regularized = true;
    }
    if (ldlt.info() != Eigen::Success)
        throw Error("LMMSE factorization failed");

    const CVector u = ldlt.solve(hh * r);
    eq.symbols = a.adjoint(u);

    // diag = a^H D^{-1} a - rho |D^{-1} a|^2, solved a block of columns at a time.
    RVector diag(n);
    constexpr int kBlock = 64;
    for (int first = 0; first < n; first += kBlock) {
        const int cols = std::min(kBlock, n - first);
        CMatrix rhs = CMatrix::Zero(n, cols);
        for (int c = 0; c < cols; ++c)
            for (const auto& [row, v] : a.column(first + c))
                rhs(row, c) = v;
        const CMatrix w = ldlt.solve(rhs);
        for (int c = 0; c < cols; ++c)
            diag(first + c) = std::real(rhs.col(c).dot(w.col(c))) - rho * w.col(c).squaredNorm();
    }
    eq.noise_vars = floor_noise(noise_var * diag);
    eq.erasures.assign(static_cast<std::size_t>(n), false);
    return eq;
}

// Conjugate gradient on (H^H H + rho I) u = b. Returns the iteration count
// and leaves the relative residual in `rel`.
int conjugate_gradient(const ChannelOperator& h, double rho, const CVector& b, CVector& u,
                       double tol, int max_iter, double& rel)
{
    auto apply_d = [&](const CVector& v) -> CVector { return h.adjoint(h.apply(v)) + rho * v; };
    u = CVector::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        rel = 0.0;
        return 0;
    }
    CVector res = b;
    CVector p = res;
    double rs = res.squaredNorm();
    int it = 0;
    for (; it < max_iter; ++it) {
        if (std::sqrt(rs) <= tol * bnorm)
            break;
        const CVector dp = apply_d(p);
        const double pdp = std::real(p.dot(dp));
        if (!(pdp > 0.0))
            break;
        const double alpha = rs / pdp;
        u += alpha * p;
        res -= alpha * dp;
        const double rs_new = res.squaredNorm();
        p = res + (rs_new / rs) * p;
        rs = rs_new;
    }
    rel = std::sqrt(rs) / bnorm;
    return it;
}

EqualizedFrame lmmse_iterative(const CVector& r, const ChannelOperator& h, const FrameTransform& a,
                               double noise_var, double rho, const LmmseOptions& opt)
{
    const int n = h.size();
    EqualizedFrame eq;
    eq.condition_estimate = std::numeric_limits<double>::quiet_NaN();
    const CVector b = h.adjoint(r);
    const int probes = std::max(1, opt.trace_probes);

    // Solves for the symbols and the Hutchinson estimate of
    // tr(D^{-1} - rho D^{-2}) / n with +-1 probes. A singular D still lets
    // CG converge on b, which lies in its range, but not on the probes.
    CVector u;
    double rel = 0.0, mean_diag = 0.0;
    auto solve = [&](double rr) {
        eq.iterations = conjugate_gradient(h, rr, b, u, opt.cg_tolerance, opt.cg_max_iterations, rel);
        bool converged = rel <= opt.cg_tolerance;
        std::mt19937_64 rng(opt.probe_seed);
        std::bernoulli_distribution coin(0.5);
        double acc = 0.0;
        for (int q = 0; q < probes; ++q) {
            CVector z(n);
            for (auto& v : z)
                v = coin(rng) ? 1.0 : -1.0;
            CVector w;
            double prel = 0.0;
            conjugate_gradient(h, rr, z, w, opt.cg_tolerance, opt.cg_max_iterations, prel);
            converged = converged && prel <= opt.cg_tolerance;
            acc += std::real(z.dot(w)) - rr * w.squaredNorm();
        }
        mean_diag = acc / (static_cast<double>(probes) * n);
        return converged;
    };

    if (!solve(rho) && rho == 0.0) {
        double scale = 0.0;
        for (const auto& tap : h.realization().taps)
            scale += std::norm(tap.gain);
        solve(kFallbackRho * std::max(scale, 1e-300));
        eq.regularized = true;
    }
    if (!(rel <= opt.cg_tolerance))
        throw Error("LMMSE conjugate gradient did not converge (relative residual " +
                    std::to_string(rel) + ")");
    eq.symbols = a.adjoint(u);
    eq.noise_vars = floor_noise(RVector::Constant(n, noise_var * mean_diag));
    eq.erasures.assign(static_cast<std::size_t>(n), false);
    return eq;
}

} // namespace

Constellation::Constellation(std::vector<cdouble> points, int bits_per_symbol)
    : points_(std::move(points)), bits_(bits_per_symbol)
{
    if (bits_ < 1 || points_.size() != (std::size_t{1} << bits_))
        throw ConfigError("constellation needs 2^bits points");
}

Constellation Constellation::qam(int bits_per_symbol)
{
    if (bits_per_symbol != 2 && bits_per_symbol != 4 && bits_per_symbol != 6)
        throw ConfigError("square QAM needs 2, 4 or 6 bits per symbol");
    const int half = bits_per_symbol / 2;
    const int levels = 1 << half;
    const double scale = 1.0 / std::sqrt(2.0 * (levels * levels - 1) / 3.0);
    std::vector<cdouble> pts(std::size_t{1} << bits_per_symbol);
    for (int i = 0; i < levels; ++i)
        for (int q = 0; q < levels; ++q) {
            const int label = (gray(i) << half) | gray(q);
            pts[static_cast<std::size_t>(label)] =
                scale * cdouble(2.0 * i - (levels - 1), 2.0 * q - (levels - 1));
        }
    return Constellation(std::move(pts), bits_per_symbol);
}

Constellation Constellation::from_name(const std::string& name)
{
    if (name == "qpsk")
        return qam(2);
    if (name == "16qam")
        return qam(4);
    if (name == "64qam")
        return qam(6);
    throw ConfigError("unknown modulation '" + name + "'");
}

double Constellation::average_energy() const
{
    double e = 0.0;
    for (const auto& p : points_)
        e += std::norm(p);
    return e / static_cast<double>(points_.size());
}

std::vector<cdouble> Constellation::map(std::span<const std::uint8_t> bits) const
{
    if (bits.size() % static_cast<std::size_t>(bits_) != 0)
        throw SizeError("bit count is not a multiple of the bits per symbol");
    std::vector<cdouble> out(bits.size() / static_cast<std::size_t>(bits_));
    for (std::size_t s = 0; s < out.size(); ++s) {
        int label = 0;
        for (int j = 0; j < bits_; ++j)
            label = (label << 1) | (bits[s * static_cast<std::size_t>(bits_) + static_cast<std::size_t>(j)] & 1);
        out[s] = points_[static_cast<std::size_t>(label)];
    }
    return out;
}

int Constellation::nearest(cdouble x) const
{
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size(); ++i) {
        const double d = std::norm(x - points_[static_cast<std::size_t>(i)]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

LmmseSolver parse_lmmse_solver(const std::string& name)
{
    if (name == "auto")
        return LmmseSolver::Auto;
    if (name == "dense")
        return LmmseSolver::Dense;
    if (name == "sparse")
        return LmmseSolver::Sparse;
    if (name == "iterative")
        return LmmseSolver::Iterative;
    throw ConfigError("unknown LMMSE solver '" + name + "'");
}

EqualizedFrame lmmse_equalize(const CVector& r, const ChannelOperator& h, const FrameTransform& a,
                              double noise_var, double data_var, const LmmseOptions& options)
{
    const int n = h.size();
    if (a.size() != n || r.size() != n)
        throw SizeError("LMMSE: received vector, channel and transform sizes differ");
    if (!(data_var > 0.0))
        throw ConfigError("LMMSE: data variance must be positive");
    if (noise_var < 0.0)
        throw ConfigError("LMMSE: negative noise variance");
    const double rho = noise_var / data_var;

    LmmseSolver solver = options.solver;
    if (solver == LmmseSolver::Auto)
        solver = n <= options.dense_limit ? LmmseSolver::Dense : LmmseSolver::Sparse;
    switch (solver) {
    case LmmseSolver::Dense: return lmmse_dense(r, h, a, noise_var, rho);
    case LmmseSolver::Sparse: return lmmse_sparse(r, h, a, noise_var, rho);
    case LmmseSolver::Iterative: return lmmse_iterative(r, h, a, noise_var, rho, options);
    case LmmseSolver::Auto: break;
    }
    throw ConfigError("LMMSE: unresolved solver");
}

EqualizedFrame single_tap_equalize(const CMatrix& rx, const CMatrix& h_est,
                                   const Eigen::Matrix<TfRole, Eigen::Dynamic, Eigen::Dynamic>& roles,
                                   double noise_var)
{
    if (rx.rows() != h_est.rows() || rx.cols() != h_est.cols() || rx.rows() != roles.rows() ||
        rx.cols() != roles.cols())
        throw SizeError("single-tap equalizer: grid sizes differ");
    std::vector<cdouble> sym;
    std::vector<double> var;
    std::vector<bool> erased;
    for (Eigen::Index i = 0; i < roles.size(); ++i) {
        if (roles.data()[i] != TfRole::Data)
            continue;
        const cdouble hv = h_est.data()[i];
        if (std::abs(hv) < kErasureFloor) {
            sym.push_back(0.0);
            var.push_back(1.0);
            erased.push_back(true);
        } else {
            sym.push_back(rx.data()[i] / hv);
            var.push_back(std::max(noise_var / std::norm(hv), kNoiseVarFloor));
            erased.push_back(false);
        }
    }
    EqualizedFrame eq;
    eq.symbols = Eigen::Map<const CVector>(sym.data(), static_cast<Eigen::Index>(sym.size()));
    eq.noise_vars = Eigen::Map<const RVector>(var.data(), static_cast<Eigen::Index>(var.size()));
    eq.erasures = std::move(erased);
    return eq;
}

EqualizedFrame select_cells(const EqualizedFrame& eq, std::span<const int> cells)
{
    EqualizedFrame out;
    out.symbols.resize(static_cast<Eigen::Index>(cells.size()));
    out.noise_vars.resize(static_cast<Eigen::Index>(cells.size()));
    out.erasures.resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const int c = cells[i];
        if (c < 0 || c >= eq.size())
            throw SizeError("cell index out of range");
        out.symbols(static_cast<Eigen::Index>(i)) = eq.symbols(c);
        out.noise_vars(static_cast<Eigen::Index>(i)) = eq.noise_vars(c);
        out.erasures[i] = eq.erasures.empty() ? false : eq.erasures[static_cast<std::size_t>(c)];
    }
    out.condition_estimate = eq.condition_estimate;
    out.regularized = eq.regularized;
    out.iterations = eq.iterations;
    return out;
}

RMatrix compute_llrs(const EqualizedFrame& eq, const Constellation& constellation)
{
    if (eq.noise_vars.size() != eq.symbols.size())
        throw SizeError("equalized symbols and noise variances differ in length");
    const int bits = constellation.bits_per_symbol();
    const int m = constellation.size();
    const auto& pts = constellation.points();
    RMatrix llr = RMatrix::Zero(eq.size(), bits);
    std::vector<double> metric(static_cast<std::size_t>(m));
    for (Eigen::Index c = 0; c < eq.size(); ++c) {
        if (!eq.erasures.empty() && eq.erasures[static_cast<std::size_t>(c)])
            continue;
        const double s2 = eq.noise_vars(c);
        for (int i = 0; i < m; ++i)
            metric[static_cast<std::size_t>(i)] = std::norm(eq.symbols(c) - pts[static_cast<std::size_t>(i)]) / s2;
        for (int j = 0; j < bits; ++j) {
            const int shift = bits - 1 - j;
            double min0 = std::numeric_limits<double>::infinity();
            double min1 = min0;
            for (int i = 0; i < m; ++i) {
                const double d = metric[static_cast<std::size_t>(i)];
                if ((i >> shift) & 1)
                    min1 = std::min(min1, d);
                else
                    min0 = std::min(min0, d);
            }
            llr(c, j) = min1 - min0;
        }
    }
    return llr;
}

} // namespace otfsim
