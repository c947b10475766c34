#pragma once

#include <string>

#include "json.hpp"
#include "mmlab/backtest.hpp"
#include "mmlab/portfolio.hpp"
#include "mmlab/predictor.hpp"
#include "mmlab/sim.hpp"

namespace mmlab {

using Json = nlohmann::ordered_json;

// Reproducibility envelope embedded in every CLI output. Two runs with
// identical inputs differ only in the wall times.
struct RunManifest {
    std::string command;
    std::string config_digest;
    std::string engine_version;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_digests;  // path -> digest
    std::string started;
    std::string finished;
};

Json to_json(const RunManifest& m);
Json to_json(const RunReport& r);
Json to_json(const BacktestReport& r);
Json to_json(const EvalReport& r);
Json to_json(const RankingReport& r);

std::string agents_csv(const RunReport& r);
std::string plot_csv(const BacktestReport& r);  // strategy,pnl,return,fills
std::string predictions_csv(const EvalReport& r);
std::string metrics_csv(const std::vector<AssetMetrics>& metrics);

// FNV-1a 64 over file/string contents, hex encoded.
std::string digest_string(const std::string& data);
std::string digest_file(const std::string& path);

// write-temp-then-rename
void atomic_write(const std::string& path, const std::string& data);

std::string engine_version();

}  // namespace mmlab
