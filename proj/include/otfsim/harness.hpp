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

#ifndef OTFSIM_HARNESS_HPP
#define OTFSIM_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "otfsim/channel.hpp"
#include "otfsim/equalization.hpp"
#include "otfsim/fec.hpp"
#include "otfsim/grid.hpp"
#include "otfsim/metrics.hpp"

namespace otfsim {

enum class Waveform { RcpOtfs, BlockOfdm, VsbOfdm };

std::string to_string(Waveform w);
Waveform parse_waveform(const std::string& name);

// One curve of a sweep: a waveform, plus the numerology for VSB-OFDM.
struct LinkId {
    Waveform waveform = Waveform::RcpOtfs;
    int mu = 0; // ignored unless waveform == VsbOfdm

    std::string label() const; // "rcp_otfs", "block_ofdm", "vsb_ofdm_mu2"
    bool operator==(const LinkId&) const = default;
};

struct RunConfig {
    std::vector<Waveform> waveforms{Waveform::RcpOtfs, Waveform::BlockOfdm, Waveform::VsbOfdm};
    std::vector<int> numerologies{0};

    FrameParams frame;        // numerology field unused; see `numerologies`
    PilotConfig pilot{64, 16, 0, 0, 28.0};
    bool derive_pilot_lengths = true; // k_nu, l_tau from nu_max and the profile

    std::filesystem::path profile_path; // empty: bundled TDL-A
    std::optional<double> delay_spread_s; // overrides the profile file
    double ue_speed_kmph = 500.0;
    std::optional<double> nu_max_hz;      // overrides the speed

    std::vector<double> snr_db{0, 5, 10, 15, 20, 25};
    bool snr_cp_adjust = true;
    std::string modulation = "16qam";

    std::filesystem::path code_path; // empty: bundled rate-2/3, n = 1944 code
    DecoderOptions decoder;
    LmmseOptions equalizer;

    std::uint64_t trials_per_point = 1000; // frames
    std::uint64_t min_block_errors = 100;  // early stop
    std::uint64_t master_seed = 1;

    std::uint64_t papr_frames = 20000;
    double papr_min_db = 0.0;
    double papr_max_db = 20.0;
    double papr_step_db = 0.05;
    int papr_oversampling = 1;

    // Table I frame and pilot with the iterative equalizer.
    void apply_full_scale();

    double max_doppler_hz() const;
    std::vector<LinkId> links() const;
    std::vector<double> papr_thresholds() const;

    // Throws ConfigError on inconsistent settings or missing files.
    void validate() const;
};

// Parses the JSON config; relative paths resolve against the config file's
// directory first and then the bundled data directory. Missing keys keep
// the defaults above.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
std::string run_config_to_json(const RunConfig& cfg);
// FNV-1a of the canonical JSON form.
std::uint64_t config_hash(const RunConfig& cfg);

std::filesystem::path data_dir();
std::filesystem::path bundled_profile(const std::string& file_name);

// Stage and trial attached to any failure inside a trial.
class TrialError : public Error {
public:
    TrialError(std::string link, std::uint64_t trial, std::string stage, const std::string& cause);

    const std::string& link() const { return link_; }
    std::uint64_t trial() const { return trial_; }
    const std::string& stage() const { return stage_; }

private:
    std::string link_;
    std::uint64_t trial_;
    std::string stage_;
};

std::uint64_t trial_seed(std::uint64_t master_seed, const LinkId& link, std::uint64_t snr_index,
                         std::uint64_t trial_index);

struct TrialResult {
    std::vector<bool> success; // one flag per codeword: message bits recovered
    double papr_db = 0.0;      // transmit frame including the CP
    double nominal_energy = 0.0;
    double actual_energy = 0.0; // sum |s|^2 over the body
};

// Everything that stays fixed across the trials of a sweep.
class LinkSimulator {
public:
    explicit LinkSimulator(RunConfig cfg);

    const RunConfig& config() const { return cfg_; }
    const LdpcCode& code() const { return code_; }
    const TdlProfile& profile() const { return profile_; }

    FrameParams frame_for(const LinkId& link) const;
    // Reported-to-body SNR correction, 0 when the adjustment is off.
    double snr_offset_db(const LinkId& link) const;
    int codewords_per_frame(const LinkId& link) const;

    // Full chain for one frame. Deterministic in (link, snr, seed).
    // Throws TrialError.
    TrialResult run_trial(const LinkId& link, double snr_db, std::uint64_t seed,
                          std::uint64_t trial_index = 0) const;

    // Transmit side only.
    double transmit_papr(const LinkId& link, std::uint64_t seed) const;

private:
    RunConfig cfg_;
    TdlProfile profile_;
    LdpcCode code_;
    Constellation constellation_;
};

struct PointResult {
    LinkId link;
    double snr_db = 0.0;
    std::uint64_t frames = 0;
    BlerPoint bler;
    Interval ci{0.0, 1.0};
};

struct RunResult {
    std::vector<PointResult> points;
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
    std::string version;
};

// Runs every (link, snr) point. A point stops at the first trial index whose
// cumulative block errors reach min_block_errors, or at trials_per_point;
// trials past that index are discarded so the result does not depend on
// the number of threads.
RunResult run_sweep(const RunConfig& cfg, int threads = 1);
PointResult run_point(const LinkSimulator& sim, const LinkId& link, double snr_db,
                      std::uint64_t snr_index, int threads = 1);

struct PaprResult {
    LinkId link;
    CcdfAccumulator ccdf;
};

std::vector<PaprResult> run_papr(const RunConfig& cfg, int threads = 1);

void write_bler_csv(const RunResult& result, const std::filesystem::path& path);
void write_papr_csv(const std::vector<PaprResult>& result, const std::filesystem::path& path);
void write_meta_json(const RunConfig& cfg, const RunResult& result, const std::filesystem::path& path);

} // namespace otfsim

#endif // OTFSIM_HARNESS_HPP
