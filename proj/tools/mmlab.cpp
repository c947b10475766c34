// mmlab command-line front end: simulate | backtest | predict | evaluate.
// Every output embeds a manifest (config digest, input digests, seed); the
// payload section is byte-identical across re-runs with equal inputs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mmlab/backtest.hpp"
#include "mmlab/portfolio.hpp"
#include "mmlab/predictor.hpp"
#include "mmlab/reports.hpp"
#include "mmlab/sim.hpp"

using namespace mmlab;

namespace {

std::string now_iso() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Plain-text key-value config: `section.key = value`, '#' comments.
std::map<std::string, std::string> parse_kv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t row = 0;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++row;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("bad config line " + std::to_string(row) + " in " + path);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::string kv_digest(const std::map<std::string, std::string>& kv) {
    std::ostringstream ss;
    for (const auto& [k, v] : kv) ss << k << '=' << v << '\n';
    return digest_string(ss.str());
}

std::string need(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing key " + key);
    return it->second;
}

std::string get_or(const std::map<std::string, std::string>& kv, const std::string& key,
                   const std::string& def) {
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
}

bool truthy(const std::string& s) { return s == "true" || s == "1" || s == "yes"; }

InstrumentSpec instrument_from(const std::map<std::string, std::string>& kv) {
    return InstrumentSpec::make(get_or(kv, "instrument.symbol", "SYM"),
                                get_or(kv, "instrument.tick_size", "1"),
                                get_or(kv, "instrument.lot_size", "1"));
}

CurveSpec curve_from(const std::map<std::string, std::string>& kv) {
    CurveSpec c;
    c.kind = curve_kind_from_string(need(kv, "curve.kind"));
    c.p0 = std::stoll(get_or(kv, "curve.p0", "1"));
    c.slope = std::stod(get_or(kv, "curve.slope", "0"));
    c.amplitude = std::stod(get_or(kv, "curve.amplitude", "0"));
    c.period = std::stod(get_or(kv, "curve.period", "1"));
    c.vol = std::stod(get_or(kv, "curve.vol", "0"));
    c.drift = std::stod(get_or(kv, "curve.drift", "0"));
    c.path = get_or(kv, "curve.path", "");
    c.seed = std::stoull(get_or(kv, "curve.seed", "0"));
    c.n = std::stoll(get_or(kv, "curve.n", "1"));
    c.step_ms = std::stoll(get_or(kv, "curve.step_ms", "1000"));
    return c;
}

PredictorConfig predictor_from(const std::map<std::string, std::string>& kv) {
    PredictorConfig p;
    p.training_interval = std::stoll(get_or(kv, "predictor.T", "0"));
    p.period = std::stoll(get_or(kv, "predictor.P", "0"));
    p.historical_interval = std::stoll(get_or(kv, "predictor.H", "0"));
    p.batch = std::stoll(get_or(kv, "predictor.B", "0"));
    if (kv.count("predictor.model")) p.model = model_kind_from_string(kv.at("predictor.model"));
    p.lambda = std::stod(get_or(kv, "predictor.lambda", "0"));
    p.normalization = get_or(kv, "predictor.normalization", "returns") == "raw"
                          ? Normalization::Raw
                          : Normalization::Returns;
    p.iterative = truthy(get_or(kv, "predictor.iterative", "false"));
    return p;
}

std::vector<AgentSpec> agents_from(const std::map<std::string, std::string>& kv,
                                   const InstrumentSpec& instrument) {
    std::vector<AgentSpec> agents;
    for (int i = 0;; ++i) {
        std::string prefix = "agent." + std::to_string(i) + ".";
        auto it = kv.find(prefix + "strategy");
        if (it == kv.end()) break;
        AgentSpec a;
        a.strategy = it->second;
        a.base = std::stoll(get_or(kv, prefix + "base", "0"));
        if (kv.count(prefix + "quote"))
            a.quote = instrument.quote_to_atoms(kv.at(prefix + "quote"));
        a.income_rate = std::stoll(get_or(kv, prefix + "income_rate", "0"));
        a.predictor = get_or(kv, prefix + "predictor", "none");
        a.horizon = std::stoi(get_or(kv, prefix + "horizon", "1"));
        for (const auto& [k, v] : kv) {
            if (k.rfind(prefix, 0) != 0) continue;
            std::string leaf = k.substr(prefix.size());
            if (leaf == "strategy" || leaf == "base" || leaf == "quote" ||
                leaf == "income_rate" || leaf == "predictor" || leaf == "horizon")
                continue;
            a.params[leaf] = v;
        }
        agents.push_back(std::move(a));
    }
    return agents;
}

RunManifest make_manifest(const std::string& command, const std::string& config_digest,
                          std::uint64_t seed, const std::vector<std::string>& inputs) {
    RunManifest m;
    m.command = command;
    m.config_digest = config_digest;
    m.engine_version = engine_version();
    m.seed = seed;
    for (const auto& p : inputs) m.input_digests[p] = digest_file(p);
    m.started = now_iso();
    return m;
}

void write_report(const std::string& out, RunManifest manifest, const Json& payload) {
    manifest.finished = now_iso();
    Json doc;
    doc["manifest"] = to_json(manifest);
    doc["payload"] = payload;
    atomic_write(out, doc.dump(2) + "\n");
}

std::string sibling(const std::string& out, const std::string& suffix) {
    auto dot = out.rfind('.');
    std::string stem = dot == std::string::npos ? out : out.substr(0, dot);
    return stem + suffix;
}

// --- subcommands -------------------------------------------------------------

struct GlobalOpts {
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
    bool allow_oracle = false;
};

int cmd_simulate(const std::string& config_path, const std::string& out, const GlobalOpts& g) {
    auto kv = parse_kv(config_path);
    SimConfig cfg;
    cfg.spec = instrument_from(kv);
    cfg.curve = curve_from(kv);
    cfg.steps = std::stoll(get_or(kv, "sim.steps", "1"));
    cfg.seed = g.seed_set ? g.seed : std::stoull(get_or(kv, "sim.seed", "0"));
    cfg.maker_fee_bps = std::stoi(get_or(kv, "sim.maker_fee_bps", "0"));
    cfg.taker_fee_bps = std::stoi(get_or(kv, "sim.taker_fee_bps", "0"));
    cfg.allow_self_match = truthy(get_or(kv, "sim.allow_self_match", "false"));
    cfg.allow_oracle = g.allow_oracle || truthy(get_or(kv, "sim.allow_oracle", "false"));
    cfg.predictor = predictor_from(kv);
    cfg.agents = agents_from(kv, cfg.spec);

    RunManifest manifest = make_manifest("simulate", kv_digest(kv), cfg.seed, {config_path});
    RunReport report = run_simulation(cfg);
    write_report(out, manifest, to_json(report));
    atomic_write(sibling(out, ".agents.csv"), agents_csv(report));
    return 0;
}

struct BacktestOpts {
    std::string trades_path, snapshots_path;
    std::vector<std::string> strategies;
    std::string predictor = "none";
    int horizon = 1;
    std::string tick = "1", lot = "1", symbol = "SYM", quote = "1000000";
    std::int64_t cadence_ms = 0, bucket_ms = 60'000;
    FillRuleFlags flags;
    std::int64_t T = 0, P = 0, H = 0, B = 0;
    std::string model = "persistence";
    double lambda = 0.0;
    Lots order_size = 1;
};

int cmd_backtest(const BacktestOpts& o, const std::string& out, const GlobalOpts& g) {
    if (o.predictor == "oracle" && !g.allow_oracle)
        throw ConfigError("oracle predictor requires --allow-oracle");

    MarketHistory hist;
    hist.spec = InstrumentSpec::make(o.symbol, o.tick, o.lot);
    hist.trades = load_trades(o.trades_path, hist.spec);
    std::vector<std::string> inputs = {o.trades_path};
    if (!o.snapshots_path.empty()) {
        hist.snapshots = load_snapshots(o.snapshots_path, hist.spec);
        inputs.push_back(o.snapshots_path);
    }
    hist.candles = resample(hist.trades, o.bucket_ms);

    BacktestConfig cfg;
    cfg.history = &hist;
    cfg.cadence_ms = o.cadence_ms;
    cfg.candle_bucket_ms = o.bucket_ms;
    cfg.flags = o.flags;
    cfg.allow_oracle = g.allow_oracle;
    cfg.seed = g.seed;
    QuoteAtoms quote = hist.spec.quote_to_atoms(o.quote);
    cfg.benchmark_quote = quote;
    if (o.T > 0) {
        cfg.predictor.training_interval = o.T;
        cfg.predictor.period = o.P;
        cfg.predictor.historical_interval = o.H;
        cfg.predictor.batch = o.B;
        cfg.predictor.model = model_kind_from_string(o.model);
        cfg.predictor.lambda = o.lambda;
    }
    for (const auto& name : o.strategies) {
        AgentSpec a;
        a.strategy = name;
        a.quote = quote;
        a.params["order_size"] = std::to_string(o.order_size);
        if (strategy_uses_prediction(name)) {
            a.predictor = o.predictor;
            a.horizon = o.horizon;
        }
        cfg.agents.push_back(std::move(a));
    }

    std::ostringstream cfgtext;
    cfgtext << o.trades_path << '|' << o.snapshots_path << '|' << o.predictor << '|'
            << o.horizon << '|' << o.cadence_ms << '|' << o.bucket_ms << '|'
            << o.flags.require_price_improvement << o.flags.deplete_trade_qty
            << o.flags.fill_at_trade_price << '|' << o.quote << '|' << o.T << ',' << o.P << ','
            << o.H << ',' << o.B << ',' << o.model;
    for (const auto& s : o.strategies) cfgtext << '|' << s;
    RunManifest manifest = make_manifest("backtest", digest_string(cfgtext.str()), g.seed, inputs);

    BacktestReport report = run_backtest(cfg);
    write_report(out, manifest, to_json(report));
    atomic_write(sibling(out, ".plot.csv"), plot_csv(report));
    return 0;
}

struct PredictOpts {
    std::string candles_path;
    std::string model = "persistence";
    std::int64_t T = 0, P = 0, H = 0, B = 0;
    double lambda = 0.0;
    std::string normalization = "returns";
    bool iterative = false;
    std::string tick = "1", lot = "1";
};

int cmd_predict(const PredictOpts& o, const std::string& out, const GlobalOpts& g) {
    PredictorConfig cfg;
    cfg.training_interval = o.T;
    cfg.period = o.P;
    cfg.historical_interval = o.H;
    cfg.batch = o.B;
    cfg.model = model_kind_from_string(o.model);
    cfg.lambda = o.lambda;
    cfg.normalization = o.normalization == "raw" ? Normalization::Raw : Normalization::Returns;
    cfg.iterative = o.iterative;
    validate(cfg);

    InstrumentSpec spec = InstrumentSpec::make("SYM", o.tick, o.lot);
    auto candles = load_candles(o.candles_path, spec);

    std::ostringstream cfgtext;
    cfgtext << o.candles_path << '|' << o.model << '|' << o.T << ',' << o.P << ',' << o.H << ','
            << o.B << '|' << o.lambda << '|' << o.normalization << '|' << o.iterative;
    RunManifest manifest =
        make_manifest("predict", digest_string(cfgtext.str()), g.seed, {o.candles_path});

    EvalReport report = evaluate(candles, cfg);
    write_report(out, manifest, to_json(report));
    atomic_write(sibling(out, ".predictions.csv"), predictions_csv(report));
    return 0;
}

struct EvaluateOpts {
    std::vector<std::string> candle_paths;
    std::string window;  // start:end in ms
    std::vector<std::string> strategies;
    std::string predictor = "oracle";
    int horizon = 1;
    std::string tick = "1", lot = "1", quote = "1000000";
    std::int64_t cadence_ms = 1000, bucket_ms = 60'000;
};

std::string path_stem(const std::string& path) {
    auto slash = path.find_last_of('/');
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = name.rfind('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

int cmd_evaluate(const EvaluateOpts& o, const std::string& out, const GlobalOpts& g) {
    auto colon = o.window.find(':');
    if (colon == std::string::npos) throw ConfigError("window must be start:end");
    TimeWindow window{std::stoll(o.window.substr(0, colon)),
                      std::stoll(o.window.substr(colon + 1))};

    InstrumentSpec spec = InstrumentSpec::make("SYM", o.tick, o.lot);
    std::map<std::string, std::vector<Candle>> candle_map;
    for (const auto& path : o.candle_paths) {
        std::string symbol = path_stem(path);
        auto candles = load_candles(path, spec);
        bool covers = !candles.empty() && candles.front().ts <= window.start &&
                      candles.back().ts >= window.end;
        if (!covers) throw ConfigError("window not covered by " + symbol);
        candle_map[symbol] = std::move(candles);
    }

    std::vector<AssetMetrics> metrics;
    for (const auto& [symbol, candles] : candle_map)
        metrics.push_back(asset_metrics(symbol, candles, window));

    std::ostringstream cfgtext;
    for (const auto& p : o.candle_paths) cfgtext << p << '|';
    cfgtext << o.window << '|' << o.predictor << '|' << o.horizon;
    for (const auto& s : o.strategies) cfgtext << '|' << s;
    RunManifest manifest =
        make_manifest("evaluate", digest_string(cfgtext.str()), g.seed, o.candle_paths);

    Json payload;
    Json jm = Json::array();
    for (const auto& m : metrics)
        jm.push_back({{"symbol", m.symbol},
                      {"ret", m.ret},
                      {"stdn", m.stdn},
                      {"sharpe", m.sharpe},
                      {"msharpe", m.msharpe}});
    payload["metrics"] = jm;

    if (!o.strategies.empty()) {
        if (o.predictor == "oracle" && !g.allow_oracle)
            throw ConfigError("oracle predictor requires --allow-oracle");

        // candle files carry no tape, so each close becomes one synthetic trade
        std::map<std::string, MarketHistory> histories;
        for (const auto& [symbol, candles] : candle_map) {
            MarketHistory h;
            h.spec = spec;
            h.spec.symbol = symbol;
            for (const auto& c : candles)
                h.trades.push_back({c.ts, c.close, std::max<Lots>(c.volume, 1), Side::Buy});
            h.candles = candles;
            histories[symbol] = std::move(h);
        }

        std::vector<AgentSpec> strategy_set;
        for (const auto& name : o.strategies) {
            AgentSpec a;
            a.strategy = name;
            if (strategy_uses_prediction(name)) {
                a.predictor = o.predictor;
                a.horizon = o.horizon;
            }
            strategy_set.push_back(std::move(a));
        }

        BacktestRankOptions opts;
        opts.initial_quote = spec.quote_to_atoms(o.quote);
        opts.cadence_ms = o.cadence_ms;
        opts.candle_bucket_ms = o.bucket_ms;
        opts.allow_oracle = g.allow_oracle;
        opts.seed = g.seed;

        RankingReport ranking;
        if (g.jobs > 1) {
            // per-asset backtests are independent; fan out, then merge by
            // symbol and rebuild the orderings
            std::vector<std::future<RankingReport>> futures;
            for (const auto& [symbol, hist] : histories) {
                std::map<std::string, MarketHistory> one;
                one[symbol] = hist;
                futures.push_back(std::async(std::launch::async, [one = std::move(one), window,
                                                                  strategy_set, opts]() {
                    return backtest_rank(one, window, strategy_set, opts);
                }));
            }
            for (auto& f : futures) {
                RankingReport part = f.get();
                ranking.metrics.push_back(part.metrics.front());
                ranking.backtests.push_back(part.backtests.front());
            }
            std::sort(ranking.metrics.begin(), ranking.metrics.end(),
                      [](const AssetMetrics& a, const AssetMetrics& b) {
                          return a.symbol < b.symbol;
                      });
            std::sort(ranking.backtests.begin(), ranking.backtests.end(),
                      [](const BacktestOutcome& a, const BacktestOutcome& b) {
                          return a.symbol < b.symbol;
                      });
            for (const auto& r :
                 rank_assets(candle_map, window, RankCriterion::Msharpe).order)
                ranking.msharpe_order.push_back(r.symbol);
            std::vector<const BacktestOutcome*> by_best;
            for (const auto& o2 : ranking.backtests) by_best.push_back(&o2);
            std::sort(by_best.begin(), by_best.end(),
                      [](const BacktestOutcome* a, const BacktestOutcome* b) {
                          if (a->best_return != b->best_return)
                              return a->best_return > b->best_return;
                          return a->symbol < b->symbol;
                      });
            for (const auto* o2 : by_best) ranking.backtest_order.push_back(o2->symbol);
        } else {
            ranking = backtest_rank(histories, window, strategy_set, opts);
        }
        payload["ranking"] = to_json(ranking);
        metrics = ranking.metrics;
    }

    write_report(out, manifest, payload);
    atomic_write(sibling(out, ".metrics.csv"), metrics_csv(metrics));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"market-making laboratory: simulation, backtesting, prediction, ranking"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    std::string out = "report.json";
    app.add_option("--seed", g.seed, "run seed")->each([&](const std::string&) {
        g.seed_set = true;
    });
    app.add_option("--jobs", g.jobs, "parallel independent runs");
    app.add_flag("--allow-oracle", g.allow_oracle, "permit perfect-foresight predictors");

    auto* sim = app.add_subcommand("simulate", "run a multi-agent market simulation");
    std::string sim_config;
    sim->add_option("--config", sim_config, "key-value config file")->required();
    sim->add_option("--out", out, "output report path");

    auto* bt = app.add_subcommand("backtest", "replay strategies against a historical tape");
    BacktestOpts bo;
    bt->add_option("--trades", bo.trades_path, "trades CSV")->required();
    bt->add_option("--snapshots", bo.snapshots_path, "snapshots JSON Lines");
    bt->add_option("--strategy", bo.strategies, "strategy name (repeatable)")
        ->required()
        ->delimiter(',');
    bt->add_option("--predictor", bo.predictor, "none|oracle|model");
    bt->add_option("--horizon", bo.horizon, "prediction horizon in buckets");
    bt->add_option("--tick", bo.tick, "tick size");
    bt->add_option("--lot", bo.lot, "lot size");
    bt->add_option("--symbol", bo.symbol, "symbol");
    bt->add_option("--quote", bo.quote, "initial quote balance per agent");
    bt->add_option("--cadence", bo.cadence_ms, "decision cadence ms");
    bt->add_option("--bucket", bo.bucket_ms, "candle bucket ms");
    bt->add_option("--order-size", bo.order_size, "MM order size in lots");
    bt->add_flag("--require-price-improvement", bo.flags.require_price_improvement);
    bt->add_flag("--deplete-trade-qty", bo.flags.deplete_trade_qty);
    bt->add_flag("--fill-at-trade-price", bo.flags.fill_at_trade_price);
    bt->add_option("--T", bo.T, "training interval (model predictor)");
    bt->add_option("--P", bo.P, "period");
    bt->add_option("--H", bo.H, "historical interval");
    bt->add_option("--B", bo.B, "batch");
    bt->add_option("--model", bo.model, "persistence|linreg|ridge");
    bt->add_option("--lambda", bo.lambda, "ridge lambda");
    bt->add_option("--out", out, "output report path");

    auto* pr = app.add_subcommand("predict", "walk-forward prediction evaluation");
    PredictOpts po;
    pr->add_option("--candles", po.candles_path, "candles CSV")->required();
    pr->add_option("--model", po.model, "persistence|linreg|ridge");
    pr->add_option("--T", po.T, "training interval")->required();
    pr->add_option("--P", po.P, "period")->required();
    pr->add_option("--H", po.H, "historical interval")->required();
    pr->add_option("--B", po.B, "batch")->required();
    pr->add_option("--lambda", po.lambda, "ridge lambda");
    pr->add_option("--normalization", po.normalization, "returns|raw");
    pr->add_flag("--iterative", po.iterative, "iterative one-step prediction");
    pr->add_option("--tick", po.tick, "tick size");
    pr->add_option("--lot", po.lot, "lot size");
    pr->add_option("--out", out, "output report path");

    auto* ev = app.add_subcommand("evaluate", "asset metrics and ranking");
    EvaluateOpts eo;
    ev->add_option("--candles", eo.candle_paths, "candle CSVs, one per asset")
        ->required()
        ->delimiter(',');
    ev->add_option("--window", eo.window, "start:end in ms")->required();
    ev->add_option("--strategies", eo.strategies, "strategies for backtest ranking")
        ->delimiter(',');
    ev->add_option("--predictor", eo.predictor, "none|oracle|model");
    ev->add_option("--horizon", eo.horizon, "prediction horizon in buckets");
    ev->add_option("--tick", eo.tick, "tick size");
    ev->add_option("--lot", eo.lot, "lot size");
    ev->add_option("--quote", eo.quote, "initial quote per backtest");
    ev->add_option("--cadence", eo.cadence_ms, "decision cadence ms");
    ev->add_option("--bucket", eo.bucket_ms, "candle bucket ms");
    ev->add_option("--out", out, "output report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_config, out, g);
        if (bt->parsed()) return cmd_backtest(bo, out, g);
        if (pr->parsed()) return cmd_predict(po, out, g);
        if (ev->parsed()) return cmd_evaluate(eo, out, g);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
