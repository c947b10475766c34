#include "mmlab/reports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmlab {

std::string engine_version() { return "mmlab 0.1.0"; }

Json to_json(const RunManifest& m) {
    Json j;
    j["command"] = m.command;
    j["config_digest"] = m.config_digest;
    j["engine_version"] = m.engine_version;
    j["seed"] = m.seed;
    Json inputs = Json::object();
    for (const auto& [path, digest] : m.input_digests) inputs[path] = digest;
    j["input_digests"] = inputs;
    j["started"] = m.started;
    j["finished"] = m.finished;
    return j;
}

namespace {

Json agent_json(const AgentResult& a) {
    Json j;
    j["id"] = a.id;
    j["strategy"] = a.strategy;
    j["initial_value"] = a.initial_value;
    j["final_value"] = a.final_value;
    j["pnl"] = a.pnl;
    j["return"] = a.ret;
    j["fills"] = a.fills;
    j["volume"] = a.volume;
    j["final_base"] = a.final_base;
    j["final_quote"] = a.final_quote;
    j["rejected_actions"] = a.rejected_actions;
    j["used_oracle"] = a.used_oracle;
    return j;
}

}  // namespace

Json to_json(const RunReport& r) {
    Json j;
    Json agents = Json::array();
    for (const auto& a : r.agents) agents.push_back(agent_json(a));
    j["agents"] = agents;
    j["total_trades"] = r.total_trades;
    j["burned_quote_fees"] = r.burned_quote_fees;
    j["burned_base_fees"] = r.burned_base_fees;
    j["conservation_residue_base"] = r.conservation_residue_base;
    j["conservation_residue_quote"] = r.conservation_residue_quote;
    j["final_price"] = r.final_price;
    if (!r.fills.empty()) {
        Json fills = Json::array();
        for (const auto& f : r.fills)
            fills.push_back({{"ts", f.ts},
                             {"maker_order_id", f.maker_order_id},
                             {"taker_order_id", f.taker_order_id},
                             {"price", f.price},
                             {"qty", f.qty},
                             {"maker_agent", f.maker_agent},
                             {"taker_agent", f.taker_agent}});
        j["fills"] = fills;
    }
    return j;
}

Json to_json(const BacktestReport& r) {
    Json j;
    Json agents = Json::array();
    for (const auto& a : r.agents) {
        Json aj = agent_json(a);
        aj["orders_placed"] = a.orders_placed;
        aj["orders_filled"] = a.orders_filled;
        aj["fill_ratio"] = a.fill_ratio;
        agents.push_back(aj);
    }
    j["agents"] = agents;
    j["hodl_return"] = r.hodl_return;
    j["tape_trades"] = r.tape_trades;
    j["first_price"] = r.first_price;
    j["last_price"] = r.last_price;
    return j;
}

Json to_json(const EvalReport& r) {
    Json j;
    j["mae_model"] = r.mae_model;
    j["mae_baseline"] = r.mae_baseline;
    j["improvement"] = r.improvement;
    j["prediction_count"] = r.prediction_count;
    j["gaps_filled"] = r.gaps_filled;
    j["mae_model_by_horizon"] = r.mae_model_by_horizon;
    j["mae_baseline_by_horizon"] = r.mae_baseline_by_horizon;
    return j;
}

Json to_json(const RankingReport& r) {
    Json j;
    Json metrics = Json::array();
    for (const auto& m : r.metrics)
        metrics.push_back({{"symbol", m.symbol},
                           {"ret", m.ret},
                           {"stdn", m.stdn},
                           {"sharpe", m.sharpe},
                           {"msharpe", m.msharpe}});
    j["metrics"] = metrics;
    Json bt = Json::array();
    for (const auto& b : r.backtests)
        bt.push_back({{"symbol", b.symbol},
                      {"hodl_return", b.hodl_return},
                      {"best_return", b.best_return},
                      {"best_strategy", b.best_strategy}});
    j["backtests"] = bt;
    j["msharpe_order"] = r.msharpe_order;
    j["backtest_order"] = r.backtest_order;
    return j;
}

namespace {
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}
}  // namespace

std::string agents_csv(const RunReport& r) {
    std::ostringstream out;
    out << "agent,strategy,initial_value,final_value,pnl,return,fills,volume\n";
    for (const auto& a : r.agents)
        out << a.id << ',' << a.strategy << ',' << a.initial_value << ',' << a.final_value
            << ',' << a.pnl << ',' << fmt_double(a.ret) << ',' << a.fills << ',' << a.volume
            << '\n';
    return out.str();
}

std::string plot_csv(const BacktestReport& r) {
    std::ostringstream out;
    out << "strategy,pnl,return,fills\n";
    for (const auto& a : r.agents)
        out << a.strategy << ',' << a.pnl << ',' << fmt_double(a.ret) << ',' << a.fills << '\n';
    out << "hodl," << "0," << fmt_double(r.hodl_return) << ",0\n";
    return out.str();
}

std::string predictions_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "ts,horizon,predicted,actual,baseline\n";
    for (const auto& row : r.rows)
        out << row.ts << ',' << row.horizon << ',' << row.predicted << ',' << row.actual << ','
            << row.baseline << '\n';
    return out.str();
}

std::string metrics_csv(const std::vector<AssetMetrics>& metrics) {
    std::ostringstream out;
    out << "symbol,ret,stdn,sharpe,msharpe\n";
    for (const auto& m : metrics)
        out << m.symbol << ',' << fmt_double(m.ret) << ',' << fmt_double(m.stdn) << ','
            << fmt_double(m.sharpe) << ',' << fmt_double(m.msharpe) << '\n';
    return out.str();
}

std::string digest_string(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return digest_string(ss.str());
}

void atomic_write(const std::string& path, const std::string& data) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << data;
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("rename failed for " + path);
}

}  // namespace mmlab
