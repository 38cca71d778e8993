/*
 * Copyright 2026 The ropemr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ropemr/io.hpp"

namespace fs = std::filesystem;
using namespace ropemr;

namespace
{

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        throw DataError("cannot write " + path.string());
    }
    out << text;
}

io::json read_json(const fs::path& path, std::string& raw)
{
    raw = io::read_file(path);
    try
    {
        return io::json::parse(raw);
    }
    catch (const io::json::parse_error& e)
    {
        throw ContractViolation("config " + path.string() + ": " + e.what());
    }
}

int run_analyze(const fs::path& data_path, const fs::path& config_path, const std::vector<std::string>& covariates,
                const fs::path& out_dir)
{
    std::string raw_config;
    const auto cfg = io::analysis_from_json(read_json(config_path, raw_config));
    const std::string raw_data = io::read_file(data_path);
    const Dataset data = io::parse_dataset(raw_data, io::LoadOptions{covariates});
    const auto report = io::analyze(data, cfg, io::digest(raw_config), io::digest(raw_data));
    fs::create_directories(out_dir);
    write_text(out_dir / "report.json", io::to_json(report).dump(2) + "\n");
    write_text(out_dir / "report.txt", io::to_text(report));
    std::cout << io::to_text(report);
    return EXIT_SUCCESS;
}

int run_experiment_cmd(const fs::path& config_path, const fs::path& out_dir, LossMode mode)
{
    std::string raw_config;
    const auto cfg = io::experiment_from_json(read_json(config_path, raw_config), mode);
    const ExperimentResult result = run_experiment(cfg);
    fs::create_directories(out_dir);
    std::ostringstream csv;
    io::write_loss_csv(csv, result.reports);
    write_text(out_dir / "loss.csv", csv.str());
    const fs::path manifest = out_dir / "failures.json";
    if (!result.failures.empty())
    {
        write_text(manifest, io::failures_to_json(result.failures).dump(2) + "\n");
        std::cerr << result.failures.size() << " replicate(s) failed; see " << manifest.string() << '\n';
        return EXIT_FAILURE;
    }
    fs::remove(manifest);
    std::cout << "wrote " << result.reports.size() << " rows to " << (out_dir / "loss.csv").string() << '\n';
    return EXIT_SUCCESS;
}

int run_freq(const fs::path& data_path, const std::string& mode, const fs::path& out_dir)
{
    const Dataset data = io::load_dataset(data_path);
    FreqEstimate est;
    Method method;
    if (mode == "2sls")
    {
        method = Method::Frequentist2SLS;
        est = two_stage_least_squares(data);
    }
    else
    {
        // Rows with observed x form the exposure sample; the rest give outcomes.
        method = Method::FrequentistIVW;
        if (data.missing_count() == 0)
        {
            throw DataError("ivw mode needs rows with empty x to serve as the outcome sample");
        }
        est = ivw_estimate(data.subset(data.observed_rows()), data.subset(data.missing_rows()));
    }
    fs::create_directories(out_dir);
    const std::string text = io::to_json(est, method).dump(2) + "\n";
    write_text(out_dir / "freq.json", text);
    std::cout << text;
    return EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ropemr: Bayesian Mendelian randomization with ROPE interval-null decisions"};
    app.require_subcommand(1);

    fs::path data_path, config_path, out_dir;
    std::vector<std::string> covariates;
    std::string freq_mode;

    auto* analyze = app.add_subcommand("analyze", "Sample the posterior and apply the ROPE decision rule");
    analyze->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    analyze->add_option("--config", config_path, "Analysis JSON")->required()->check(CLI::ExistingFile);
    analyze->add_option("--covariates", covariates, "Covariate column names")->delimiter(',');
    analyze->add_option("--out", out_dir, "Output directory")->required();

    auto* simulate = app.add_subcommand("simulate", "Simulation grid with random (T, a) per replicate");
    simulate->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", out_dir, "Output directory")->required();

    auto* calibrate = app.add_subcommand("calibrate", "Simulation grid evaluated on a fixed (T, a) grid");
    calibrate->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
    calibrate->add_option("--out", out_dir, "Output directory")->required();

    auto* freq = app.add_subcommand("freq", "Frequentist 2SLS or IVW estimate");
    freq->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    freq->add_option("--mode", freq_mode, "2sls or ivw")->required()->check(CLI::IsMember({"2sls", "ivw"}));
    freq->add_option("--out", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*analyze)
        {
            return run_analyze(data_path, config_path, covariates, out_dir);
        }
        if (*simulate)
        {
            return run_experiment_cmd(config_path, out_dir, LossMode::Random);
        }
        if (*calibrate)
        {
            return run_experiment_cmd(config_path, out_dir, LossMode::Grid);
        }
        return run_freq(data_path, freq_mode, out_dir);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
}
