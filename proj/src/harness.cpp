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

#include "otfsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "otfsim/estimation.hpp"
#include "otfsim/ofdm_modem.hpp"
#include "otfsim/otfs_modem.hpp"

#ifndef OTFSIM_GIT_VERSION
#define OTFSIM_GIT_VERSION "unknown"
#endif

namespace otfsim {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

std::uint64_t link_code(const LinkId& link)
{
    switch (link.waveform) {
    case Waveform::RcpOtfs: return 1;
    case Waveform::BlockOfdm: return 2;
    case Waveform::VsbOfdm: return 16 + static_cast<std::uint64_t>(link.mu);
    }
    return 0;
}

// Keeps apart the seed streams of BLER trials and PAPR frames.
constexpr std::uint64_t kPaprStream = 0x70617072ULL;

std::filesystem::path resolve(const std::string& name, const std::filesystem::path& base,
                              const std::string& subdir)
{
    const std::filesystem::path p(name);
    if (p.is_absolute())
        return p;
    if (!base.empty() && std::filesystem::exists(base / p))
        return std::filesystem::weakly_canonical(base / p);
    const auto bundled = data_dir() / subdir / p;
    if (std::filesystem::exists(bundled))
        return bundled;
    throw ConfigError("cannot find '" + name + "' (looked in " + (base.empty() ? std::string{} : base.string() + ", ") +
                      (data_dir() / subdir).string() + ")");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

double snr_from_json(const json& v)
{
    if (v.is_number())
        return v.get<double>();
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "+inf"))
        return std::numeric_limits<double>::infinity();
    throw ConfigError("SNR values must be numbers or \"inf\"");
}

json snr_to_json(double v)
{
    if (std::isinf(v))
        return "inf";
    return v;
}

std::string format_double(double v, int digits = 10)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

Bits random_bits(std::size_t count, Rng& rng)
{
    Bits b(count);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (i % 64 == 0)
            word = rng();
        b[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
    }
    return b;
}

struct Payload {
    Bits message;
    int codewords = 0;
    std::vector<cdouble> symbols; // unit average energy
};

Payload make_payload(int cells, const LdpcCode& code, const Constellation& constellation, Rng& rng)
{
    const int bits = constellation.bits_per_symbol();
    Payload p;
    p.codewords = cells * bits / code.codeword_length();
    if (p.codewords == 0)
        throw ConfigError("frame of " + std::to_string(cells) + " cells cannot hold one codeword");
    p.message = random_bits(static_cast<std::size_t>(p.codewords) * static_cast<std::size_t>(code.message_length()), rng);
    Bits coded = encode(p.message, code).flatten();
    // Cells past the last codeword get random filler. A constant filler would
    // put the same symbol on hundreds of cells and add up to a spurious peak.
    const Bits filler = random_bits(static_cast<std::size_t>(cells) * static_cast<std::size_t>(bits) - coded.size(), rng);
    coded.insert(coded.end(), filler.begin(), filler.end());
    p.symbols = constellation.map(coded);
    return p;
}

std::vector<bool> decode_payload(const RMatrix& llr, const Payload& p, const LdpcCode& code,
                                 const DecoderOptions& options)
{
    // Cell-major bit order, matching Constellation::map.
    const std::size_t used = static_cast<std::size_t>(p.codewords) * static_cast<std::size_t>(code.codeword_length());
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(llr.size()));
    for (Eigen::Index c = 0; c < llr.rows(); ++c)
        for (Eigen::Index j = 0; j < llr.cols(); ++j)
            flat.push_back(llr(c, j));
    if (flat.size() < used)
        throw SizeError("fewer LLRs than coded bits");
    flat.resize(used);
    const RMatrix shaped = reshape_llrs(flat, code.codeword_length());
    const auto decoded = decode(shaped, code, options);

    std::vector<bool> ok(decoded.size());
    const std::size_t k = static_cast<std::size_t>(code.message_length());
    for (std::size_t i = 0; i < decoded.size(); ++i) {
        const Bits msg = code.extract_message(decoded[i].codeword);
        ok[i] = std::equal(msg.begin(), msg.end(), p.message.begin() + static_cast<std::ptrdiff_t>(i * k));
    }
    return ok;
}

void check_fairness(double nominal, double target)
{
    if (std::abs(nominal - target) > 1e-9 * target)
        throw Error("frame energy " + format_double(nominal) + " differs from " + format_double(target));
}

// Runs `count` jobs on up to `threads` workers; rethrows the failure with the
// lowest index so errors are reproducible too.
template <typename Fn>
void parallel_for(std::uint64_t count, int threads, Fn&& fn)
{
    if (count == 0)
        return;
    if (threads <= 1 || count == 1) {
        for (std::uint64_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = static_cast<int>(std::min<std::uint64_t>(count, static_cast<std::uint64_t>(threads)));
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace

std::string to_string(Waveform w)
{
    switch (w) {
    case Waveform::RcpOtfs: return "rcp_otfs";
    case Waveform::BlockOfdm: return "block_ofdm";
    case Waveform::VsbOfdm: return "vsb_ofdm";
    }
    return "?";
}

Waveform parse_waveform(const std::string& name)
{
    if (name == "rcp_otfs" || name == "otfs")
        return Waveform::RcpOtfs;
    if (name == "block_ofdm")
        return Waveform::BlockOfdm;
    if (name == "vsb_ofdm")
        return Waveform::VsbOfdm;
    throw ConfigError("unknown waveform '" + name + "'");
}

std::string LinkId::label() const
{
    if (waveform == Waveform::VsbOfdm)
        return "vsb_ofdm_mu" + std::to_string(mu);
    return to_string(waveform);
}

std::filesystem::path data_dir()
{
    if (const char* env = std::getenv("OTFSIM_DATA_DIR"); env && *env)
        return env;
    return OTFSIM_DATA_DIR;
}

std::filesystem::path bundled_profile(const std::string& file_name)
{
    return data_dir() / "profiles" / file_name;
}

void RunConfig::apply_full_scale()
{
    frame.num_subcarriers = 512;
    frame.num_symbols = 128;
    pilot.doppler_index = 64;
    pilot.delay_index = 16;
    derive_pilot_lengths = true;
    equalizer.solver = LmmseSolver::Iterative;
}

double RunConfig::max_doppler_hz() const
{
    return nu_max_hz ? *nu_max_hz : otfsim::max_doppler_hz(frame.carrier_freq_hz, ue_speed_kmph);
}

std::vector<LinkId> RunConfig::links() const
{
    std::vector<LinkId> out;
    for (auto w : waveforms) {
        if (w == Waveform::VsbOfdm) {
            for (int mu : numerologies)
                out.push_back({w, mu});
        } else {
            out.push_back({w, 0});
        }
    }
    return out;
}

std::vector<double> RunConfig::papr_thresholds() const
{
    std::vector<double> t;
    const auto steps = static_cast<long>(std::floor((papr_max_db - papr_min_db) / papr_step_db + 1e-9));
    for (long i = 0; i <= steps; ++i)
        t.push_back(papr_min_db + static_cast<double>(i) * papr_step_db);
    return t;
}

void RunConfig::validate() const
{
    frame.validate();
    if (waveforms.empty())
        throw ConfigError("no waveforms configured");
    if (snr_db.empty())
        throw ConfigError("SNR grid is empty");
    if (trials_per_point < 1)
        throw ConfigError("trials_per_point must be at least 1");
    if (std::find(waveforms.begin(), waveforms.end(), Waveform::VsbOfdm) != waveforms.end() && numerologies.empty())
        throw ConfigError("VSB-OFDM needs at least one numerology");
    for (int mu : numerologies)
        if (mu < 0)
            throw NumerologyError("negative numerology");
    if (!profile_path.empty() && !std::filesystem::exists(profile_path))
        throw ConfigError("channel profile not found: " + profile_path.string());
    if (!code_path.empty() && !std::filesystem::exists(code_path))
        throw ConfigError("code file not found: " + code_path.string());
    if (!(papr_step_db > 0.0) || papr_max_db < papr_min_db)
        throw ConfigError("bad PAPR threshold grid");
    if (papr_oversampling < 1)
        throw ConfigError("PAPR oversampling must be at least 1");
    if (decoder.max_iterations < 1 || !(decoder.scaling > 0.0))
        throw ConfigError("bad decoder settings");
    Constellation::from_name(modulation);
}

RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    RunConfig c;
    try {
        check_keys(j,
                   {"waveforms", "numerologies", "frame", "pilot", "channel", "snr_db", "snr_cp_adjust",
                    "modulation", "fec", "equalizer", "trials_per_point", "min_block_errors", "master_seed",
                    "papr"},
                   "config");
        if (j.contains("waveforms")) {
            c.waveforms.clear();
            for (const auto& w : j.at("waveforms"))
                c.waveforms.push_back(parse_waveform(w.get<std::string>()));
        }
        if (j.contains("numerologies"))
            c.numerologies = j.at("numerologies").get<std::vector<int>>();
        if (j.contains("frame")) {
            const auto& f = j.at("frame");
            check_keys(f, {"num_subcarriers", "num_symbols", "subcarrier_spacing_hz", "cp_duration_s",
                           "carrier_freq_hz"},
                       "frame");
            c.frame.num_subcarriers = f.value("num_subcarriers", c.frame.num_subcarriers);
            c.frame.num_symbols = f.value("num_symbols", c.frame.num_symbols);
            c.frame.subcarrier_spacing_hz = f.value("subcarrier_spacing_hz", c.frame.subcarrier_spacing_hz);
            c.frame.cp_duration_s = f.value("cp_duration_s", c.frame.cp_duration_s);
            c.frame.carrier_freq_hz = f.value("carrier_freq_hz", c.frame.carrier_freq_hz);
        }
        if (j.contains("pilot")) {
            const auto& p = j.at("pilot");
            check_keys(p, {"doppler_index", "delay_index", "delta_p_db", "k_nu", "l_tau"}, "pilot");
            c.pilot.doppler_index = p.value("doppler_index", c.pilot.doppler_index);
            c.pilot.delay_index = p.value("delay_index", c.pilot.delay_index);
            c.pilot.delta_p_db = p.value("delta_p_db", c.pilot.delta_p_db);
            if (p.contains("k_nu") != p.contains("l_tau"))
                throw ConfigError("give both k_nu and l_tau or neither");
            if (p.contains("k_nu")) {
                c.pilot.k_nu = p.at("k_nu").get<int>();
                c.pilot.l_tau = p.at("l_tau").get<int>();
                c.derive_pilot_lengths = false;
            }
        }
        if (j.contains("channel")) {
            const auto& ch = j.at("channel");
            check_keys(ch, {"profile", "delay_spread_s", "ue_speed_kmph", "nu_max_hz"}, "channel");
            if (ch.contains("profile"))
                c.profile_path = resolve(ch.at("profile").get<std::string>(), base_dir, "profiles");
            if (ch.contains("delay_spread_s"))
                c.delay_spread_s = ch.at("delay_spread_s").get<double>();
            c.ue_speed_kmph = ch.value("ue_speed_kmph", c.ue_speed_kmph);
            if (ch.contains("nu_max_hz"))
                c.nu_max_hz = ch.at("nu_max_hz").get<double>();
        }
        if (j.contains("snr_db")) {
            c.snr_db.clear();
            for (const auto& v : j.at("snr_db"))
                c.snr_db.push_back(snr_from_json(v));
        }
        c.snr_cp_adjust = j.value("snr_cp_adjust", c.snr_cp_adjust);
        c.modulation = j.value("modulation", c.modulation);
        if (j.contains("fec")) {
            const auto& f = j.at("fec");
            check_keys(f, {"code", "max_iterations", "scaling"}, "fec");
            if (f.contains("code"))
                c.code_path = resolve(f.at("code").get<std::string>(), base_dir, "codes");
            c.decoder.max_iterations = f.value("max_iterations", c.decoder.max_iterations);
            c.decoder.scaling = f.value("scaling", c.decoder.scaling);
        }
        if (j.contains("equalizer")) {
            const auto& e = j.at("equalizer");
            check_keys(e, {"solver", "dense_limit", "cg_tolerance", "cg_max_iterations", "trace_probes"},
                       "equalizer");
            if (e.contains("solver"))
                c.equalizer.solver = parse_lmmse_solver(e.at("solver").get<std::string>());
            c.equalizer.dense_limit = e.value("dense_limit", c.equalizer.dense_limit);
            c.equalizer.cg_tolerance = e.value("cg_tolerance", c.equalizer.cg_tolerance);
            c.equalizer.cg_max_iterations = e.value("cg_max_iterations", c.equalizer.cg_max_iterations);
            c.equalizer.trace_probes = e.value("trace_probes", c.equalizer.trace_probes);
        }
        c.trials_per_point = j.value("trials_per_point", c.trials_per_point);
        c.min_block_errors = j.value("min_block_errors", c.min_block_errors);
        c.master_seed = j.value("master_seed", c.master_seed);
        if (j.contains("papr")) {
            const auto& p = j.at("papr");
            check_keys(p, {"frames", "min_db", "max_db", "step_db", "oversampling"}, "papr");
            c.papr_frames = p.value("frames", c.papr_frames);
            c.papr_min_db = p.value("min_db", c.papr_min_db);
            c.papr_max_db = p.value("max_db", c.papr_max_db);
            c.papr_step_db = p.value("step_db", c.papr_step_db);
            c.papr_oversampling = p.value("oversampling", c.papr_oversampling);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str(), std::filesystem::absolute(path).parent_path());
}

std::string run_config_to_json(const RunConfig& c)
{
    json j;
    j["waveforms"] = json::array();
    for (auto w : c.waveforms)
        j["waveforms"].push_back(to_string(w));
    j["numerologies"] = c.numerologies;
    j["frame"] = {{"num_subcarriers", c.frame.num_subcarriers},
                  {"num_symbols", c.frame.num_symbols},
                  {"subcarrier_spacing_hz", c.frame.subcarrier_spacing_hz},
                  {"cp_duration_s", c.frame.cp_duration_s},
                  {"carrier_freq_hz", c.frame.carrier_freq_hz}};
    j["pilot"] = {{"doppler_index", c.pilot.doppler_index},
                  {"delay_index", c.pilot.delay_index},
                  {"delta_p_db", c.pilot.delta_p_db}};
    if (!c.derive_pilot_lengths) {
        j["pilot"]["k_nu"] = c.pilot.k_nu;
        j["pilot"]["l_tau"] = c.pilot.l_tau;
    }
    j["channel"] = {{"ue_speed_kmph", c.ue_speed_kmph}};
    if (!c.profile_path.empty())
        j["channel"]["profile"] = c.profile_path.filename().string();
    if (c.delay_spread_s)
        j["channel"]["delay_spread_s"] = *c.delay_spread_s;
    if (c.nu_max_hz)
        j["channel"]["nu_max_hz"] = *c.nu_max_hz;
    j["snr_db"] = json::array();
    for (double s : c.snr_db)
        j["snr_db"].push_back(snr_to_json(s));
    j["snr_cp_adjust"] = c.snr_cp_adjust;
    j["modulation"] = c.modulation;
    j["fec"] = {{"max_iterations", c.decoder.max_iterations}, {"scaling", c.decoder.scaling}};
    if (!c.code_path.empty())
        j["fec"]["code"] = c.code_path.filename().string();
    static const char* solvers[] = {"auto", "dense", "sparse", "iterative"};
    j["equalizer"] = {{"solver", solvers[static_cast<int>(c.equalizer.solver)]},
                      {"dense_limit", c.equalizer.dense_limit},
                      {"cg_tolerance", c.equalizer.cg_tolerance},
                      {"cg_max_iterations", c.equalizer.cg_max_iterations},
                      {"trace_probes", c.equalizer.trace_probes}};
    j["trials_per_point"] = c.trials_per_point;
    j["min_block_errors"] = c.min_block_errors;
    j["master_seed"] = c.master_seed;
    j["papr"] = {{"frames", c.papr_frames},
                 {"min_db", c.papr_min_db},
                 {"max_db", c.papr_max_db},
                 {"step_db", c.papr_step_db},
                 {"oversampling", c.papr_oversampling}};
    return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg)
{
    const std::string canonical = json::parse(run_config_to_json(cfg)).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

TrialError::TrialError(std::string link, std::uint64_t trial, std::string stage, const std::string& cause)
    : Error(link + " trial " + std::to_string(trial) + ", stage " + stage + ": " + cause),
      link_(std::move(link)), trial_(trial), stage_(std::move(stage))
{
}

std::uint64_t trial_seed(std::uint64_t master_seed, const LinkId& link, std::uint64_t snr_index,
                         std::uint64_t trial_index)
{
    return combine(combine(combine(splitmix64(master_seed), link_code(link)), snr_index), trial_index);
}

namespace {

TdlProfile load_configured_profile(const RunConfig& cfg)
{
    TdlProfile p = load_profile(cfg.profile_path.empty() ? bundled_profile("tdl_a.json") : cfg.profile_path);
    if (cfg.delay_spread_s)
        p.delay_spread_s = *cfg.delay_spread_s;
    return p;
}

LdpcCode load_configured_code(const RunConfig& cfg)
{
    return cfg.code_path.empty() ? LdpcCode::standard_r23_n1944() : LdpcCode::load(cfg.code_path);
}

RunConfig finalize(RunConfig cfg, const TdlProfile& profile)
{
    cfg.validate();
    if (cfg.derive_pilot_lengths) {
        cfg.pilot.k_nu = max_doppler_length(cfg.max_doppler_hz(), cfg.frame);
        cfg.pilot.l_tau = max_delay_length(profile.max_delay_s(), cfg.frame);
    }
    cfg.pilot.validate(cfg.frame.num_subcarriers, cfg.frame.num_symbols);
    return cfg;
}

} // namespace

LinkSimulator::LinkSimulator(RunConfig cfg)
    : profile_(load_configured_profile(cfg)),
      code_(load_configured_code(cfg)),
      constellation_(Constellation::from_name(cfg.modulation))
{
    cfg_ = finalize(std::move(cfg), profile_);
    for (const auto& link : cfg_.links()) {
        if (link.waveform == Waveform::VsbOfdm && num_prb(frame_for(link)) == 0)
            throw ConfigError(link.label() + ": the frame holds no whole PRB");
        if (codewords_per_frame(link) < 1)
            throw ConfigError(link.label() + ": the frame cannot carry a single codeword");
    }
}

FrameParams LinkSimulator::frame_for(const LinkId& link) const
{
    FrameParams p = cfg_.frame;
    p.numerology = link.waveform == Waveform::VsbOfdm ? link.mu : 0;
    return p;
}

double LinkSimulator::snr_offset_db(const LinkId& link) const
{
    if (!cfg_.snr_cp_adjust)
        return 0.0;
    if (link.waveform == Waveform::VsbOfdm) {
        const VsbDims d = derive_vsb_dims(frame_for(link));
        return cp_snr_loss_db(d.subcarriers, d.cp_len);
    }
    return cp_snr_loss_db(cfg_.frame.frame_samples(), cfg_.frame.cp_len_samples());
}

int LinkSimulator::codewords_per_frame(const LinkId& link) const
{
    int cells = 0;
    if (link.waveform == Waveform::VsbOfdm)
        cells = num_prb(frame_for(link)) * (kPrbSubcarriers * kPrbSymbols - kRsPerPrb);
    else
        cells = count_otfs_data_cells(cfg_.pilot, cfg_.frame);
    return cells * constellation_.bits_per_symbol() / code_.codeword_length();
}

namespace {

struct OtfsTransmit {
    Payload payload;
    DelayDopplerGrid grid;
    CMatrix pilot_grid; // pilot cell only
    double data_power = 0.0;
    double pilot_amplitude = 0.0;
    TimeDomainFrame tx;
    double nominal_energy = 0.0;
};

OtfsTransmit otfs_transmit(const RunConfig& cfg, Waveform w, const LdpcCode& code,
                           const Constellation& constellation, Rng& rng)
{
    const FrameParams& fp = cfg.frame;
    OtfsTransmit t;
    t.payload = make_payload(count_otfs_data_cells(cfg.pilot, fp), code, constellation, rng);
    t.grid = place_otfs_frame(t.payload.symbols, cfg.pilot, fp);
    t.data_power = otfs_data_power(cfg.pilot, fp);
    t.pilot_amplitude = std::sqrt(t.data_power * std::pow(10.0, cfg.pilot.delta_p_db / 10.0));
    t.pilot_grid = CMatrix::Zero(fp.num_subcarriers, fp.num_symbols);
    t.pilot_grid(cfg.pilot.delay_index, cfg.pilot.doppler_index) = t.pilot_amplitude;
    const TimeDomainFrame body =
        w == Waveform::RcpOtfs ? otfs_modulate(t.grid.values) : block_ofdm_modulate(t.grid.values);
    t.tx = add_cp(body, fp.cp_len_samples());
    t.nominal_energy = t.data_power * static_cast<double>(t.payload.symbols.size()) +
                       t.pilot_amplitude * t.pilot_amplitude;
    return t;
}

struct VsbTransmit {
    Payload payload;
    TimeFrequencyGrid grid;
    double cell_power = 0.0;
    VsbOfdmFrame frame;
    double nominal_energy = 0.0;
};

VsbTransmit vsb_transmit(const FrameParams& fp, const LdpcCode& code, const Constellation& constellation,
                         Rng& rng)
{
    VsbTransmit t;
    const auto roles = ofdm_roles(fp);
    int n_data = 0, n_rs = 0;
    for (Eigen::Index i = 0; i < roles.size(); ++i) {
        n_data += roles.data()[i] == TfRole::Data;
        n_rs += roles.data()[i] == TfRole::ReferenceSignal;
    }
    t.cell_power = ofdm_cell_power(fp);
    const double a = std::sqrt(t.cell_power);
    t.payload = make_payload(n_data, code, constellation, rng);
    std::vector<cdouble> data = t.payload.symbols;
    for (auto& v : data)
        v *= a;
    std::vector<cdouble> rs = make_reference_symbols(n_rs, rng());
    for (auto& v : rs)
        v *= a;
    t.grid = place_ofdm_frame(data, rs, fp);
    t.frame = ofdm_modulate(t.grid.values, fp);
    t.nominal_energy = t.cell_power * (n_data + n_rs);
    return t;
}

} // namespace

TrialResult LinkSimulator::run_trial(const LinkId& link, double snr_db, std::uint64_t seed,
                                     std::uint64_t trial_index) const
{
    std::string stage = "setup";
    try {
        Rng rng(seed);
        TrialResult res;
        const FrameParams fp = frame_for(link);
        const double target = static_cast<double>(cfg_.frame.frame_samples());
        const double noise_var = noise_variance(1.0, snr_db - snr_offset_db(link));

        stage = "channel";
        const ChannelRealization ch = sample_channel(profile_, cfg_.max_doppler_hz(), cfg_.frame, rng);

        if (link.waveform == Waveform::VsbOfdm) {
            stage = "transmit";
            const VsbTransmit t = vsb_transmit(fp, code_, constellation_, rng);
            const CVector stream = t.frame.stream();
            res.papr_db = papr_db(oversample(stream, cfg_.papr_oversampling));
            res.nominal_energy = t.nominal_energy;
            res.actual_energy = 0.0;
            for (const auto& sym : t.frame.symbols)
                res.actual_energy += sym.tail(sym.size() - t.frame.cp_len).squaredNorm();
            check_fairness(res.nominal_energy, target);

            stage = "channel";
            if (t.frame.cp_len < ch.max_delay_bin())
                throw ConfigError("CP of " + std::to_string(t.frame.cp_len) + " samples is shorter than the " +
                                  std::to_string(ch.max_delay_bin()) + "-sample channel delay");
            CVector rx = apply_ltv(stream, ch, t.frame.cp_len);
            add_awgn(rx, noise_var, rng);

            stage = "demodulate";
            const CMatrix y = ofdm_demodulate(rx, fp);

            stage = "estimate";
            const CMatrix h = ofdm_estimate(y, make_reference_grid(t.grid), noise_var, fp);

            stage = "equalize";
            EqualizedFrame eq = single_tap_equalize(y, h, t.grid.roles, noise_var);
            eq.symbols /= std::sqrt(t.cell_power);
            eq.noise_vars /= t.cell_power;

            stage = "decode";
            res.success = decode_payload(compute_llrs(eq, constellation_), t.payload, code_, cfg_.decoder);
            return res;
        }

        stage = "transmit";
        const OtfsTransmit t = otfs_transmit(cfg_, link.waveform, code_, constellation_, rng);
        res.papr_db = papr_db(oversample(t.tx.samples, cfg_.papr_oversampling));
        res.nominal_energy = t.nominal_energy;
        res.actual_energy = t.tx.body().squaredNorm();
        check_fairness(res.nominal_energy, target);

        stage = "channel";
        const TimeDomainFrame rx = apply_channel(t.tx, ch, noise_var, rng);
        const CVector r = remove_cp(rx).samples;

        stage = "estimate";
        const int M = fp.num_subcarriers, N = fp.num_symbols;
        CMatrix y;
        if (link.waveform == Waveform::RcpOtfs) {
            y = otfs_demodulate(r, M, N);
        } else {
            // Block OFDM has no embedded pilot of its own: the channel is
            // probed with a pilot-only OTFS frame through the same
            // realization and fresh noise of the same variance.
            const TimeDomainFrame probe = add_cp(otfs_modulate(t.pilot_grid), fp.cp_len_samples());
            const TimeDomainFrame probe_rx = apply_channel(probe, ch, noise_var, rng);
            y = otfs_demodulate(remove_cp(probe_rx).samples, M, N);
        }
        const OtfsChannelEstimate est = otfs_estimate(y, cfg_.pilot, t.pilot_amplitude, std::sqrt(noise_var));
        if (est.empty()) {
            res.success.assign(static_cast<std::size_t>(t.payload.codewords), false);
            return res;
        }

        stage = "equalize";
        const FrameTransform a(link.waveform == Waveform::RcpOtfs ? FrameTransform::Kind::Otfs
                                                                   : FrameTransform::Kind::BlockOfdm,
                               M, N);
        const ChannelOperator h(est.channel);
        const CVector pilot_vec = Eigen::Map<const CVector>(t.pilot_grid.data(), t.pilot_grid.size());
        const CVector cleaned = r - h.apply(a.apply(pilot_vec));
        const EqualizedFrame full = lmmse_equalize(cleaned, h, a, noise_var, t.data_power, cfg_.equalizer);
        const auto cells = otfs_data_indices(cfg_.pilot, fp);
        EqualizedFrame eq = select_cells(full, cells);
        eq.symbols /= std::sqrt(t.data_power);
        eq.noise_vars /= t.data_power;

        stage = "decode";
        res.success = decode_payload(compute_llrs(eq, constellation_), t.payload, code_, cfg_.decoder);
        return res;
    } catch (const TrialError&) {
        throw;
    } catch (const std::exception& e) {
        throw TrialError(link.label(), trial_index, stage, e.what());
    }
}

double LinkSimulator::transmit_papr(const LinkId& link, std::uint64_t seed) const
{
    Rng rng(seed);
    if (link.waveform == Waveform::VsbOfdm) {
        const VsbTransmit t = vsb_transmit(frame_for(link), code_, constellation_, rng);
        return papr_db(oversample(t.frame.stream(), cfg_.papr_oversampling));
    }
    const OtfsTransmit t = otfs_transmit(cfg_, link.waveform, code_, constellation_, rng);
    return papr_db(oversample(t.tx.samples, cfg_.papr_oversampling));
}

PointResult run_point(const LinkSimulator& sim, const LinkId& link, double snr_db, std::uint64_t snr_index,
                      int threads)
{
    const RunConfig& cfg = sim.config();
    PointResult pr;
    pr.link = link;
    pr.snr_db = snr_db;
    pr.bler.snr_db = snr_db;

    const std::uint64_t batch_size = std::max<std::uint64_t>(8, 4 * static_cast<std::uint64_t>(std::max(threads, 1)));
    std::uint64_t done = 0;
    bool stop = false;
    while (!stop && done < cfg.trials_per_point) {
        const std::uint64_t batch = std::min(batch_size, cfg.trials_per_point - done);
        std::vector<std::vector<bool>> outcomes(batch);
        parallel_for(batch, threads, [&](std::uint64_t i) {
            const std::uint64_t t = done + i;
            outcomes[i] = sim.run_trial(link, snr_db, trial_seed(cfg.master_seed, link, snr_index, t), t).success;
        });
        // Accept trials in index order up to the stopping trial.
        for (std::uint64_t i = 0; i < batch; ++i) {
            const std::vector<bool>& o = outcomes[i];
            for (bool ok : o) {
                ++pr.bler.blocks;
                pr.bler.block_errors += ok ? 0 : 1;
            }
            ++pr.frames;
            if (pr.bler.block_errors >= cfg.min_block_errors) {
                stop = true;
                break;
            }
        }
        done += batch;
    }
    pr.bler.bler = pr.bler.blocks ? static_cast<double>(pr.bler.block_errors) / static_cast<double>(pr.bler.blocks) : 0.0;
    pr.ci = wilson_interval(pr.bler.block_errors, pr.bler.blocks);
    return pr;
}

RunResult run_sweep(const RunConfig& cfg, int threads)
{
    const LinkSimulator sim(cfg);
    RunResult out;
    out.config_hash = config_hash(sim.config());
    out.master_seed = cfg.master_seed;
    out.version = OTFSIM_GIT_VERSION;
    for (const auto& link : sim.config().links())
        for (std::size_t s = 0; s < cfg.snr_db.size(); ++s)
            out.points.push_back(run_point(sim, link, cfg.snr_db[s], s, threads));
    return out;
}

std::vector<PaprResult> run_papr(const RunConfig& cfg, int threads)
{
    const LinkSimulator sim(cfg);
    std::vector<PaprResult> out;
    const auto thresholds = cfg.papr_thresholds();
    for (const auto& link : sim.config().links()) {
        std::vector<double> values(cfg.papr_frames);
        parallel_for(cfg.papr_frames, threads, [&](std::uint64_t f) {
            values[f] = sim.transmit_papr(link, trial_seed(cfg.master_seed ^ kPaprStream, link, 0, f));
        });
        CcdfAccumulator acc(thresholds);
        for (double v : values)
            acc.add(v);
        out.push_back({link, std::move(acc)});
    }
    return out;
}

void write_bler_csv(const RunResult& result, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError("cannot write " + path.string());
    os << "waveform,mu,snr_db,trials,block_errors,bler,ci_lo,ci_hi\n";
    for (const auto& p : result.points) {
        os << to_string(p.link.waveform) << ','
           << (p.link.waveform == Waveform::VsbOfdm ? std::to_string(p.link.mu) : std::string{}) << ','
           << format_double(p.snr_db) << ',' << p.frames << ',' << p.bler.block_errors << ','
           << format_double(p.bler.bler) << ',' << format_double(p.ci.lo) << ',' << format_double(p.ci.hi)
           << '\n';
    }
}

void write_papr_csv(const std::vector<PaprResult>& result, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError("cannot write " + path.string());
    os << "waveform,threshold_db,ccdf\n";
    for (const auto& r : result) {
        const auto c = r.ccdf.curve();
        for (std::size_t i = 0; i < c.thresholds_db.size(); ++i)
            os << r.link.label() << ',' << format_double(c.thresholds_db[i], 6) << ','
               << format_double(c.probabilities[i]) << '\n';
    }
}

void write_meta_json(const RunConfig& cfg, const RunResult& result, const std::filesystem::path& path)
{
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, result.config_hash);
    json j;
    j["config_hash"] = hash;
    j["master_seed"] = result.master_seed;
    j["version"] = result.version;
    j["snr_cp_adjust"] = cfg.snr_cp_adjust;
    j["config"] = json::parse(run_config_to_json(cfg));
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

} // namespace otfsim
