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

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "otfsim/harness.hpp"
#include "otfsim/ofdm_modem.hpp"

using namespace otfsim;

namespace {

RunConfig desk_config()
{
    RunConfig c;
    c.frame = make_frame(64, 16);
    c.pilot = {8, 16, 0, 0, 28.0};
    c.numerologies = {0, 1, 2};
    c.master_seed = 99;
    return c;
}

RunConfig loopback_config()
{
    RunConfig c = desk_config();
    c.profile_path = bundled_profile("identity.json");
    c.nu_max_hz = 0.0;
    return c;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const LinkId kOtfs{Waveform::RcpOtfs, 0};
const LinkId kBofdm{Waveform::BlockOfdm, 0};

} // namespace

TEST_CASE("link labels and parsing")
{
    CHECK(kOtfs.label() == "rcp_otfs");
    CHECK(kBofdm.label() == "block_ofdm");
    CHECK(LinkId{Waveform::VsbOfdm, 2}.label() == "vsb_ofdm_mu2");
    CHECK(parse_waveform("vsb_ofdm") == Waveform::VsbOfdm);
    CHECK_THROWS_AS(parse_waveform("gfdm"), ConfigError);
    const auto links = desk_config().links();
    CHECK(links.size() == 5);
    CHECK(links.back() == LinkId{Waveform::VsbOfdm, 2});
}

TEST_CASE("frame accounting")
{
    const LinkSimulator sim(loopback_config());
    // 985 data cells of 16-QAM hold 3940 bits: two 1944-bit codewords.
    CHECK(sim.codewords_per_frame(kOtfs) == 2);
    CHECK(sim.codewords_per_frame(kBofdm) == 2);
    // 5 PRBs of 160 data cells: 3200 bits.
    CHECK(sim.codewords_per_frame({Waveform::VsbOfdm, 0}) == 1);
    CHECK(sim.snr_offset_db(kOtfs) == doctest::Approx(cp_snr_loss_db(1024, 5)));
    CHECK(sim.snr_offset_db({Waveform::VsbOfdm, 0}) == doctest::Approx(cp_snr_loss_db(64, 5)));
    CHECK(sim.snr_offset_db({Waveform::VsbOfdm, 1}) == doctest::Approx(cp_snr_loss_db(32, 3)));

    RunConfig flat = loopback_config();
    flat.snr_cp_adjust = false;
    CHECK(LinkSimulator(flat).snr_offset_db(kOtfs) == 0.0);
}

TEST_CASE("loopback over an ideal channel")
{
    const LinkSimulator sim(loopback_config());
    for (const auto& link : sim.config().links()) {
        for (std::uint64_t t = 0; t < 5; ++t) {
            const auto r = sim.run_trial(link, 40.0, trial_seed(99, link, 0, t), t);
            CHECK(r.success.size() == static_cast<std::size_t>(sim.codewords_per_frame(link)));
            for (bool ok : r.success)
                CHECK(ok);
            CHECK(r.nominal_energy == doctest::Approx(1024.0).epsilon(1e-12));
            CHECK(r.papr_db > 0.0);
        }
    }
}

TEST_CASE("noise-dominated link fails")
{
    RunConfig cfg = desk_config();
    cfg.snr_db = {-20.0};
    cfg.waveforms = {Waveform::RcpOtfs};
    cfg.trials_per_point = 100;
    cfg.min_block_errors = 1000;
    const auto res = run_sweep(cfg, 2);
    REQUIRE(res.points.size() == 1);
    CHECK(res.points[0].frames == 100);
    CHECK(res.points[0].bler.bler > 0.97);
}

TEST_CASE("trial determinism")
{
    const LinkSimulator sim(desk_config());
    const LinkId vsb{Waveform::VsbOfdm, 1};
    for (const auto& link : {kOtfs, kBofdm, vsb}) {
        const auto a = sim.run_trial(link, 14.0, 1234);
        const auto b = sim.run_trial(link, 14.0, 1234);
        CHECK(a.success == b.success);
        CHECK(a.papr_db == b.papr_db);
        CHECK(a.actual_energy == b.actual_energy);
    }
    CHECK(sim.transmit_papr(kOtfs, 5) == sim.transmit_papr(kOtfs, 5));
    CHECK(sim.transmit_papr(kOtfs, 5) != sim.transmit_papr(kOtfs, 6));
}

TEST_CASE("per-trial seeds")
{
    std::set<std::uint64_t> seen;
    for (const auto& link : desk_config().links())
        for (std::uint64_t s = 0; s < 4; ++s)
            for (std::uint64_t t = 0; t < 50; ++t)
                seen.insert(trial_seed(7, link, s, t));
    CHECK(seen.size() == 5 * 4 * 50);
    CHECK(trial_seed(7, kOtfs, 0, 0) != trial_seed(8, kOtfs, 0, 0));
}

TEST_CASE("sweep output does not depend on the thread count")
{
    RunConfig cfg = desk_config();
    cfg.snr_db = {12.0, 18.0};
    cfg.numerologies = {1};
    cfg.trials_per_point = 24;
    cfg.min_block_errors = 6;
    const auto dir = std::filesystem::temp_directory_path() / "otfsim_harness_test";
    std::filesystem::create_directories(dir);

    const auto one = run_sweep(cfg, 1);
    const auto four = run_sweep(cfg, 4);
    write_bler_csv(one, dir / "a.csv");
    write_bler_csv(four, dir / "b.csv");
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(one.points.size() == 3 * 2);
    for (const auto& p : one.points) {
        CHECK(p.frames <= 24);
        CHECK(p.ci.lo <= p.bler.bler);
        CHECK(p.ci.hi >= p.bler.bler);
    }

    const std::string csv = slurp(dir / "a.csv");
    CHECK(csv.rfind("waveform,mu,snr_db,trials,block_errors,bler,ci_lo,ci_hi\n", 0) == 0);

    write_meta_json(cfg, one, dir / "meta.json");
    const std::string meta = slurp(dir / "meta.json");
    CHECK(meta.find("config_hash") != std::string::npos);
    CHECK(meta.find("master_seed") != std::string::npos);
}

TEST_CASE("single point sweep")
{
    RunConfig cfg = loopback_config();
    cfg.waveforms = {Waveform::RcpOtfs};
    cfg.snr_db = {30.0};
    cfg.trials_per_point = 1;
    const auto res = run_sweep(cfg, 1);
    REQUIRE(res.points.size() == 1);
    CHECK(res.points[0].frames == 1);
    CHECK(res.points[0].bler.blocks == 2);
    CHECK(res.points[0].bler.block_errors == 0);
    CHECK(res.config_hash == config_hash(cfg));
    CHECK(res.master_seed == 99);
}

TEST_CASE("PAPR sweep")
{
    RunConfig cfg = desk_config();
    cfg.waveforms = {Waveform::RcpOtfs, Waveform::VsbOfdm};
    cfg.numerologies = {0};
    cfg.papr_frames = 200;
    const auto a = run_papr(cfg, 1);
    const auto b = run_papr(cfg, 3);
    REQUIRE(a.size() == 2);
    CHECK(a[0].ccdf.samples() == 200);
    CHECK(a[0].ccdf.curve().probabilities == b[0].ccdf.curve().probabilities);
    CHECK(a[1].ccdf.curve().probabilities == b[1].ccdf.curve().probabilities);
    const auto dir = std::filesystem::temp_directory_path() / "otfsim_harness_test";
    std::filesystem::create_directories(dir);
    write_papr_csv(a, dir / "papr.csv");
    CHECK(slurp(dir / "papr.csv").rfind("waveform,threshold_db,ccdf\n", 0) == 0);
}

TEST_CASE("config parsing")
{
    const auto cfg = load_run_config(std::filesystem::path(OTFSIM_DATA_DIR) / ".." / "configs" / "desk.json");
    CHECK(cfg.frame.num_subcarriers == 64);
    CHECK(cfg.numerologies == std::vector<int>{0, 1, 2});
    CHECK(cfg.master_seed == 2026);
    CHECK(std::filesystem::exists(cfg.profile_path));

    const auto again = run_config_from_json(run_config_to_json(cfg));
    CHECK(config_hash(again) == config_hash(cfg));
    CHECK(run_config_to_json(again) == run_config_to_json(cfg));

    const auto inf = run_config_from_json(R"({"snr_db": ["inf", 10]})");
    CHECK(std::isinf(inf.snr_db[0]));

    CHECK_THROWS_AS(run_config_from_json(R"({"snr_dB": [1]})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"frame": {"M": 64}})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"channel": {"profile": "no_such_profile.json"}})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json("{not json"), ConfigError);

    RunConfig bad = desk_config();
    bad.snr_db.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = desk_config();
    bad.trials_per_point = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    RunConfig seeded = desk_config();
    seeded.master_seed = 100;
    CHECK(config_hash(seeded) != config_hash(desk_config()));
}

TEST_CASE("full-scale settings")
{
    RunConfig cfg = desk_config();
    cfg.apply_full_scale();
    CHECK(cfg.frame.num_subcarriers == 512);
    CHECK(cfg.frame.num_symbols == 128);
    CHECK(cfg.equalizer.solver == LmmseSolver::Iterative);
    CHECK(cfg.max_doppler_hz() == doctest::Approx(2777.78).epsilon(1e-5));
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("VSB-OFDM without a whole PRB is rejected")
{
    RunConfig cfg = loopback_config();
    cfg.numerologies = {3};
    cfg.waveforms = {Waveform::VsbOfdm};
    CHECK_THROWS_AS(LinkSimulator{cfg}, ConfigError);
}

TEST_CASE("trial errors carry their context")
{
    RunConfig cfg = desk_config();
    cfg.frame.cp_duration_s = 0.0;
    cfg.delay_spread_s = 3e-6;
    cfg.derive_pilot_lengths = false;
    cfg.pilot = {8, 16, 3, 3, 28.0};
    cfg.waveforms = {Waveform::RcpOtfs};
    try {
        LinkSimulator sim(cfg);
        sim.run_trial(kOtfs, 10.0, 1, 17);
        FAIL("expected a trial error");
    } catch (const TrialError& e) {
        CHECK(e.trial() == 17);
        CHECK(e.link() == "rcp_otfs");
        CHECK(e.stage() == "channel");
    }
}
