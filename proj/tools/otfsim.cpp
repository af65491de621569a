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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "otfsim/harness.hpp"

namespace fs = std::filesystem;
using namespace otfsim;

namespace {

int default_threads()
{
    return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

RunConfig prepare(const std::string& path, bool full_scale)
{
    RunConfig cfg = load_run_config(path);
    if (full_scale)
        cfg.apply_full_scale();
    return cfg;
}

void print_point(const PointResult& p)
{
    std::printf("%-14s snr %6.2f dB  frames %6llu  errors %5llu/%-6llu  bler %.4g  [%.4g, %.4g]\n",
                p.link.label().c_str(), p.snr_db, static_cast<unsigned long long>(p.frames),
                static_cast<unsigned long long>(p.bler.block_errors),
                static_cast<unsigned long long>(p.bler.blocks), p.bler.bler, p.ci.lo, p.ci.hi);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"otfsim: link-level simulator for RCP-OTFS, block OFDM and VSB-OFDM"};
    app.require_subcommand(1);

    std::string config;
    std::string out = ".";
    int threads = default_threads();
    bool full_scale = false;

    auto* run = app.add_subcommand("run", "BLER sweep; writes bler.csv and meta.json");
    run->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory");
    run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    run->add_flag("--full-scale", full_scale, "Table I frame (512 x 128) with the iterative equalizer");

    auto* papr = app.add_subcommand("papr", "PAPR CCDF of the transmit frames; writes papr.csv");
    papr->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    papr->add_option("--out", out, "output directory");
    papr->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    papr->add_flag("--full-scale", full_scale, "Table I frame (512 x 128)");

    auto* profiles = app.add_subcommand("profiles", "bundled channel profiles");
    profiles->require_subcommand(1);
    auto* list = profiles->add_subcommand("list", "list bundled profiles");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const RunConfig cfg = prepare(config, full_scale);
            fs::create_directories(out);
            RunResult result;
            const LinkSimulator sim(cfg);
            result.config_hash = config_hash(sim.config());
            result.master_seed = cfg.master_seed;
            result.version = OTFSIM_GIT_VERSION;
            for (const auto& link : sim.config().links())
                for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
                    result.points.push_back(run_point(sim, link, cfg.snr_db[s], s, threads));
                    print_point(result.points.back());
                }
            write_bler_csv(result, fs::path(out) / "bler.csv");
            write_meta_json(sim.config(), result, fs::path(out) / "meta.json");
            std::printf("wrote %s and %s\n", (fs::path(out) / "bler.csv").c_str(),
                        (fs::path(out) / "meta.json").c_str());
        } else if (*papr) {
            const RunConfig cfg = prepare(config, full_scale);
            fs::create_directories(out);
            const auto result = run_papr(cfg, threads);
            for (const auto& r : result)
                std::printf("%-14s %llu frames, PAPR at 1e-3: %.2f dB\n", r.link.label().c_str(),
                            static_cast<unsigned long long>(r.ccdf.samples()), r.ccdf.quantile_db(1e-3));
            write_papr_csv(result, fs::path(out) / "papr.csv");
            std::printf("wrote %s\n", (fs::path(out) / "papr.csv").c_str());
        } else if (*list) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(data_dir() / "profiles"))
                if (e.path().extension() == ".json")
                    files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                const TdlProfile p = load_profile(f);
                std::printf("%-16s %-14s %2zu taps  DS %.3g s  %s\n", f.filename().c_str(), p.name.c_str(),
                            p.normalized_delays.size(), p.delay_spread_s, p.reference.c_str());
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "otfsim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
