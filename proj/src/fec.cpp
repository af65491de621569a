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

#include "otfsim/fec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace otfsim {

namespace {

using Row = std::vector<std::uint64_t>;

bool test_bit(const Row& r, int c) { return (r[static_cast<std::size_t>(c) >> 6] >> (c & 63)) & 1U; }
void set_bit(Row& r, int c) { r[static_cast<std::size_t>(c) >> 6] |= std::uint64_t{1} << (c & 63); }

void xor_into(Row& dst, const Row& src)
{
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] ^= src[i];
}

} // namespace

LdpcCode::LdpcCode(std::vector<std::vector<int>> base, int lifting) : z_(lifting)
{
    if (z_ < 1)
        throw ConfigError("LDPC lifting size must be positive");
    if (base.empty() || base.front().empty())
        throw ConfigError("empty LDPC base matrix");
    const std::size_t bcols = base.front().size();
    for (const auto& row : base) {
        if (row.size() != bcols)
            throw ConfigError("LDPC base matrix rows differ in length");
        for (int s : row)
            if (s < -1 || s >= z_)
                throw ConfigError("LDPC shift " + std::to_string(s) + " outside [-1, Z)");
    }
    m_ = static_cast<int>(base.size()) * z_;
    n_ = static_cast<int>(bcols) * z_;

    checks_.assign(static_cast<std::size_t>(m_), {});
    for (std::size_t bi = 0; bi < base.size(); ++bi)
        for (std::size_t bj = 0; bj < bcols; ++bj) {
            const int s = base[bi][bj];
            if (s < 0)
                continue;
            for (int r = 0; r < z_; ++r)
                checks_[bi * static_cast<std::size_t>(z_) + static_cast<std::size_t>(r)].push_back(
                    static_cast<int>(bj) * z_ + (r + s) % z_);
        }
    for (auto& c : checks_)
        std::sort(c.begin(), c.end());

    // Reduced row echelon form over GF(2), pivoting on the rightmost
    // columns first so that a standard layout keeps the message in front.
    const std::size_t words = (static_cast<std::size_t>(n_) + 63) / 64;
    std::vector<Row> h(static_cast<std::size_t>(m_), Row(words, 0));
    for (int r = 0; r < m_; ++r)
        for (int c : checks_[static_cast<std::size_t>(r)])
            set_bit(h[static_cast<std::size_t>(r)], c);

    int rank = 0;
    std::vector<int> pivot_col;
    for (int c = n_ - 1; c >= 0 && rank < m_; --c) {
        int pr = -1;
        for (int r = rank; r < m_; ++r)
            if (test_bit(h[static_cast<std::size_t>(r)], c)) {
                pr = r;
                break;
            }
        if (pr < 0)
            continue;
        std::swap(h[static_cast<std::size_t>(pr)], h[static_cast<std::size_t>(rank)]);
        for (int r = 0; r < m_; ++r)
            if (r != rank && test_bit(h[static_cast<std::size_t>(r)], c))
                xor_into(h[static_cast<std::size_t>(r)], h[static_cast<std::size_t>(rank)]);
        pivot_col.push_back(c);
        ++rank;
    }

    std::vector<bool> is_pivot(static_cast<std::size_t>(n_), false);
    for (int c : pivot_col)
        is_pivot[static_cast<std::size_t>(c)] = true;
    for (int c = 0; c < n_; ++c)
        if (!is_pivot[static_cast<std::size_t>(c)])
            info_.push_back(c);
    k_ = static_cast<int>(info_.size());
    if (k_ == 0)
        throw ConfigError("LDPC code has no message bits");
    parity_ = pivot_col;

    const std::size_t mwords = (static_cast<std::size_t>(k_) + 63) / 64;
    generator_.assign(static_cast<std::size_t>(rank), Row(mwords, 0));
    for (int i = 0; i < rank; ++i)
        for (int t = 0; t < k_; ++t)
            if (test_bit(h[static_cast<std::size_t>(i)], info_[static_cast<std::size_t>(t)]))
                set_bit(generator_[static_cast<std::size_t>(i)], t);
}

LdpcCode LdpcCode::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open LDPC code file " + path.string());
    int lifting = 0;
    std::vector<std::vector<int>> base;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first))
            continue;
        if (first == "lifting") {
            if (!(ss >> lifting))
                throw ConfigError("bad lifting line in " + path.string());
            continue;
        }
        std::vector<int> row;
        try {
            row.push_back(std::stoi(first));
        } catch (const std::exception&) {
            throw ConfigError("unexpected token '" + first + "' in " + path.string());
        }
        int v;
        while (ss >> v)
            row.push_back(v);
        if (!ss.eof())
            throw ConfigError("non-numeric entry in " + path.string());
        base.push_back(std::move(row));
    }
    if (lifting == 0)
        throw ConfigError("missing lifting size in " + path.string());
    return LdpcCode(std::move(base), lifting);
}

LdpcCode LdpcCode::standard_r23_n1944()
{
    static const LdpcCode code =
        load(std::filesystem::path(OTFSIM_DATA_DIR) / "codes" / "ieee80211n_r23_n1944.txt");
    return code;
}

Bits LdpcCode::encode(std::span<const std::uint8_t> message) const
{
    if (static_cast<int>(message.size()) != k_)
        throw SizeError("LDPC message must have " + std::to_string(k_) + " bits, got " +
                        std::to_string(message.size()));
    Row msg((static_cast<std::size_t>(k_) + 63) / 64, 0);
    Bits cw(static_cast<std::size_t>(n_), 0);
    for (int t = 0; t < k_; ++t) {
        const std::uint8_t b = message[static_cast<std::size_t>(t)] & 1U;
        cw[static_cast<std::size_t>(info_[static_cast<std::size_t>(t)])] = b;
        if (b)
            set_bit(msg, t);
    }
    for (std::size_t i = 0; i < generator_.size(); ++i) {
        int ones = 0;
        for (std::size_t w = 0; w < msg.size(); ++w)
            ones += std::popcount(generator_[i][w] & msg[w]);
        cw[static_cast<std::size_t>(parity_[i])] = static_cast<std::uint8_t>(ones & 1);
    }
    return cw;
}

Bits LdpcCode::extract_message(std::span<const std::uint8_t> codeword) const
{
    if (static_cast<int>(codeword.size()) != n_)
        throw SizeError("codeword length mismatch");
    Bits msg(static_cast<std::size_t>(k_));
    for (int t = 0; t < k_; ++t)
        msg[static_cast<std::size_t>(t)] = codeword[static_cast<std::size_t>(info_[static_cast<std::size_t>(t)])];
    return msg;
}

bool LdpcCode::satisfies_checks(std::span<const std::uint8_t> codeword) const
{
    if (static_cast<int>(codeword.size()) != n_)
        throw SizeError("codeword length mismatch");
    for (const auto& c : checks_) {
        std::uint8_t p = 0;
        for (int v : c)
            p ^= codeword[static_cast<std::size_t>(v)] & 1U;
        if (p)
            return false;
    }
    return true;
}

DecodeResult LdpcCode::decode(std::span<const double> llr, const DecoderOptions& options) const
{
    if (static_cast<int>(llr.size()) != n_)
        throw SizeError("LLR length " + std::to_string(llr.size()) + ", expected " + std::to_string(n_));

    std::vector<double> channel(static_cast<std::size_t>(n_));
    for (int v = 0; v < n_; ++v) {
        const double x = llr[static_cast<std::size_t>(v)];
        channel[static_cast<std::size_t>(v)] = std::isnan(x) ? 0.0 : std::clamp(x, -kFillerLlr, kFillerLlr);
    }

    std::vector<std::size_t> start(checks_.size() + 1, 0);
    for (std::size_t c = 0; c < checks_.size(); ++c)
        start[c + 1] = start[c] + checks_[c].size();
    std::vector<double> c2v(start.back(), 0.0);
    std::vector<double> total = channel;

    DecodeResult res;
    res.codeword.assign(static_cast<std::size_t>(n_), 0);
    // A zero posterior is a tie: decided as 0 but never counted as reliable.
    auto harden = [&] {
        bool ties = false;
        for (int v = 0; v < n_; ++v) {
            const double t = total[static_cast<std::size_t>(v)];
            res.codeword[static_cast<std::size_t>(v)] = t < 0.0 ? 1 : 0;
            ties = ties || t == 0.0;
        }
        return !ties && satisfies_checks(res.codeword);
    };

    res.success = harden();
    while (!res.success && res.iterations < options.max_iterations) {
        ++res.iterations;
        for (std::size_t c = 0; c < checks_.size(); ++c) {
            const auto& vars = checks_[c];
            double min1 = std::numeric_limits<double>::infinity(), min2 = min1;
            std::size_t arg = 0;
            bool negative = false;
            for (std::size_t e = 0; e < vars.size(); ++e) {
                const double q = total[static_cast<std::size_t>(vars[e])] - c2v[start[c] + e];
                const double a = std::abs(q);
                negative ^= q < 0.0;
                if (a < min1) {
                    min2 = min1;
                    min1 = a;
                    arg = e;
                } else if (a < min2) {
                    min2 = a;
                }
            }
            for (std::size_t e = 0; e < vars.size(); ++e) {
                const double q = total[static_cast<std::size_t>(vars[e])] - c2v[start[c] + e];
                const bool sign = negative ^ (q < 0.0);
                const double mag = options.scaling * (e == arg ? min2 : min1);
                c2v[start[c] + e] = sign ? -mag : mag;
            }
        }
        total = channel;
        for (std::size_t c = 0; c < checks_.size(); ++c)
            for (std::size_t e = 0; e < checks_[c].size(); ++e)
                total[static_cast<std::size_t>(checks_[c][e])] += c2v[start[c] + e];
        res.success = harden();
    }
    return res;
}

Bits CodedPayload::flatten() const
{
    Bits out;
    for (const auto& cw : codewords)
        out.insert(out.end(), cw.begin(), cw.end());
    return out;
}

CodedPayload encode(std::span<const std::uint8_t> message, const LdpcCode& code)
{
    const std::size_t k = static_cast<std::size_t>(code.message_length());
    if (message.size() % k != 0)
        throw SizeError("message length " + std::to_string(message.size()) +
                        " is not a multiple of " + std::to_string(k));
    CodedPayload out;
    for (std::size_t off = 0; off < message.size(); off += k)
        out.codewords.push_back(code.encode(message.subspan(off, k)));
    return out;
}

std::vector<DecodeResult> decode(const RMatrix& llr, const LdpcCode& code, const DecoderOptions& options)
{
    if (llr.rows() != code.codeword_length())
        throw SizeError("LLR matrix must have one row per code bit");
    std::vector<DecodeResult> out;
    out.reserve(static_cast<std::size_t>(llr.cols()));
    for (Eigen::Index c = 0; c < llr.cols(); ++c) {
        const RVector col = llr.col(c);
        out.push_back(code.decode(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                  options));
    }
    return out;
}

RMatrix reshape_llrs(std::span<const double> flat, int codeword_length)
{
    if (codeword_length <= 0 || flat.size() % static_cast<std::size_t>(codeword_length) != 0)
        throw SizeError("LLR stream length " + std::to_string(flat.size()) +
                        " is not a multiple of the codeword length");
    const auto cols = static_cast<Eigen::Index>(flat.size() / static_cast<std::size_t>(codeword_length));
    return Eigen::Map<const RMatrix>(flat.data(), codeword_length, cols);
}

} // namespace otfsim
