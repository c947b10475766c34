#include "mmlab/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mmlab {

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "persistence") return ModelKind::Persistence;
    if (s == "linreg") return ModelKind::Linreg;
    if (s == "ridge") return ModelKind::Ridge;
    throw ConfigError("unknown model '" + s + "'");
}

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Persistence: return "persistence";
        case ModelKind::Linreg: return "linreg";
        case ModelKind::Ridge: return "ridge";
    }
    return "?";
}

const char* to_string(Normalization n) {
    return n == Normalization::Returns ? "returns" : "raw";
}

void validate(const PredictorConfig& cfg) {
    const auto T = cfg.training_interval, P = cfg.period, H = cfg.historical_interval,
               B = cfg.batch;
    if (B < 1) throw ConfigError("batch must satisfy B >= 1");
    if (B > P) throw ConfigError("batch exceeds period (B <= P required)");
    if (P > T) throw ConfigError("period exceeds training interval (P <= T required)");
    if (H < 1) throw ConfigError("historical interval must satisfy H >= 1");
    if (T < H + B) throw ConfigError("training interval too short (T >= H + B required)");
    if (cfg.lambda < 0) throw ConfigError("ridge lambda must be >= 0");
    if (cfg.frame_stride < 0) throw ConfigError("frame_stride must be >= 0");
}

std::vector<ScheduleEvent> schedule(std::int64_t span, const PredictorConfig& cfg) {
    validate(cfg);
    if (span < cfg.training_interval) throw ConfigError("insufficient history");
    std::vector<ScheduleEvent> events;
    for (std::int64_t t = cfg.training_interval; t <= span; t += cfg.period) {
        events.push_back({ScheduleEvent::Kind::Train, t});
        for (std::int64_t s = t; s < t + cfg.period && s <= span; s += cfg.batch)
            events.push_back({ScheduleEvent::Kind::Predict, s});
    }
    return events;
}

// --- least squares -----------------------------------------------------------

namespace {

// Cholesky solve of A x = b for symmetric positive definite A (row-major,
// n x n). Returns false if the factorization breaks down.
bool solve_spd(std::vector<double> a, std::vector<double> b, std::size_t n,
               std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) {
        double d = a[k * n + k];
        for (std::size_t j = 0; j < k; ++j) d -= a[k * n + j] * a[k * n + j];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        d = std::sqrt(d);
        a[k * n + k] = d;
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = a[i * n + k];
            for (std::size_t j = 0; j < k; ++j) v -= a[i * n + j] * a[k * n + j];
            a[i * n + k] = v / d;
        }
    }
    // forward: L y = b
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t j = 0; j < i; ++j) v -= a[i * n + j] * b[j];
        b[i] = v / a[i * n + i];
    }
    // backward: L^T x = y
    out.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double v = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) v -= a[j * n + ii] * out[j];
        out[ii] = v / a[ii * n + ii];
    }
    return true;
}

struct Frame {
    std::vector<double> features;  // without intercept
    std::vector<double> targets;   // one per horizon
};

std::vector<double> featurize(std::span<const double> inputs, Normalization norm) {
    if (norm == Normalization::Raw) return {inputs.begin(), inputs.end()};
    std::vector<double> f;
    f.reserve(inputs.size() > 0 ? inputs.size() - 1 : 0);
    for (std::size_t i = 1; i < inputs.size(); ++i)
        f.push_back(std::log(inputs[i] / inputs[i - 1]));
    return f;
}

double targetize(double future, double last, Normalization norm) {
    return norm == Normalization::Raw ? future : std::log(future / last);
}

}  // namespace

FittedModel fit(std::span<const Ticks> window, const PredictorConfig& cfg,
                std::int64_t trained_at) {
    validate(cfg);
    const std::int64_t T = cfg.training_interval, H = cfg.historical_interval;
    const std::int64_t B_fit = cfg.iterative ? 1 : cfg.batch;
    if (static_cast<std::int64_t>(window.size()) != T)
        throw ConfigError("training window length must equal T");
    for (Ticks p : window)
        if (p <= 0) throw ConfigError("nonpositive price in training window");

    FittedModel model;
    model.kind = cfg.model;
    model.normalization = cfg.normalization;
    model.historical_interval = H;
    model.batch = cfg.batch;
    model.iterative = cfg.iterative;
    model.trained_at = trained_at;

    const std::size_t n_feat = cfg.normalization == Normalization::Raw
                                   ? static_cast<std::size_t>(H)
                                   : static_cast<std::size_t>(H - 1);
    const std::size_t dim = n_feat + 1;

    if (cfg.model == ModelKind::Persistence) {
        // Fixed select-last-input form: raw -> unit weight on the last price,
        // returns -> all zeros (zero predicted log-return keeps the last price).
        model.weights.assign(static_cast<std::size_t>(B_fit), std::vector<double>(dim, 0.0));
        if (cfg.normalization == Normalization::Raw)
            for (auto& row : model.weights) row[dim - 1] = 1.0;
        model.frames = 0;
        return model;
    }

    std::vector<double> prices(window.begin(), window.end());
    const std::int64_t stride = cfg.frame_stride > 0 ? cfg.frame_stride : cfg.batch;
    std::vector<Frame> frames;
    for (std::int64_t s = 0; s + H + B_fit <= T; s += stride) {
        Frame fr;
        fr.features = featurize({prices.data() + s, static_cast<std::size_t>(H)},
                                cfg.normalization);
        double last = prices[static_cast<std::size_t>(s + H - 1)];
        for (std::int64_t j = 0; j < B_fit; ++j)
            fr.targets.push_back(
                targetize(prices[static_cast<std::size_t>(s + H + j)], last, cfg.normalization));
        frames.push_back(std::move(fr));
    }
    if (frames.size() < 2) throw ConfigError("training window too short for H+B");
    model.frames = static_cast<std::int64_t>(frames.size());

    // Normal equations, shared across horizons: (X^T X + lambda I') w = X^T y,
    // intercept unpenalized.
    std::vector<double> xtx(dim * dim, 0.0);
    for (const auto& fr : frames) {
        std::vector<double> x(dim);
        x[0] = 1.0;
        std::copy(fr.features.begin(), fr.features.end(), x.begin() + 1);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i; j < dim; ++j) xtx[i * dim + j] += x[i] * x[j];
    }
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < i; ++j) xtx[i * dim + j] = xtx[j * dim + i];

    double lambda = cfg.model == ModelKind::Ridge ? cfg.lambda : 0.0;
    auto solve_all = [&](double lam, std::vector<std::vector<double>>& rows) {
        std::vector<double> a = xtx;
        for (std::size_t i = 1; i < dim; ++i) a[i * dim + i] += lam;
        rows.clear();
        for (std::int64_t j = 0; j < B_fit; ++j) {
            std::vector<double> xty(dim, 0.0);
            for (const auto& fr : frames) {
                std::vector<double> x(dim);
                x[0] = 1.0;
                std::copy(fr.features.begin(), fr.features.end(), x.begin() + 1);
                for (std::size_t i = 0; i < dim; ++i)
                    xty[i] += x[i] * fr.targets[static_cast<std::size_t>(j)];
            }
            std::vector<double> w;
            if (!solve_spd(a, xty, dim, w)) return false;
            rows.push_back(std::move(w));
        }
        return true;
    };

    if (!solve_all(lambda, model.weights)) {
        // singular normal matrix: fall back to a tiny ridge
        model.ridge_fallback = true;
        if (!solve_all(std::max(lambda, 1e-8), model.weights))
            throw ConfigError("normal matrix not solvable even with ridge fallback");
    }
    return model;
}

std::vector<Ticks> predict_batch(const FittedModel& model, std::span<const Ticks> recent) {
    if (static_cast<std::int64_t>(recent.size()) != model.historical_interval)
        throw ConfigError("recent window length must equal H");
    for (Ticks p : recent)
        if (p <= 0) throw ConfigError("nonpositive price in recent window");

    std::vector<double> prices(recent.begin(), recent.end());
    std::vector<Ticks> out;
    out.reserve(static_cast<std::size_t>(model.batch));

    auto apply_row = [&](const std::vector<double>& row, std::span<const double> window) {
        std::vector<double> f = featurize(window, model.normalization);
        double y = row[0];
        for (std::size_t i = 0; i < f.size(); ++i) y += row[i + 1] * f[i];
        double last = window[window.size() - 1];
        double price = model.normalization == Normalization::Raw ? y : last * std::exp(y);
        if (!std::isfinite(price))
            throw ConfigError(std::string("model blow-up (") + to_string(model.kind) + ", " +
                              to_string(model.normalization) + ")");
        return price;
    };

    if (model.iterative) {
        std::vector<double> window = prices;
        for (std::int64_t j = 0; j < model.batch; ++j) {
            double p = apply_row(model.weights[0], window);
            p = std::max(p, 1.0);
            out.push_back(static_cast<Ticks>(std::floor(p + 0.5)));
            window.erase(window.begin());
            window.push_back(p);
        }
        return out;
    }

    for (std::int64_t j = 0; j < model.batch; ++j) {
        double p = apply_row(model.weights[static_cast<std::size_t>(j)], prices);
        out.push_back(static_cast<Ticks>(std::floor(std::max(p, 1.0) + 0.5)));
    }
    return out;
}

// --- model file --------------------------------------------------------------

void save_model(const std::string& path, const FittedModel& model) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "mmlab-model v1\n";
    out << "kind " << to_string(model.kind) << '\n';
    out << "normalization " << to_string(model.normalization) << '\n';
    out << "H " << model.historical_interval << '\n';
    out << "B " << model.batch << '\n';
    out << "iterative " << (model.iterative ? 1 : 0) << '\n';
    out << "trained_at " << model.trained_at << '\n';
    out << "frames " << model.frames << '\n';
    out << "weights " << model.weights.size() << ' '
        << (model.weights.empty() ? 0 : model.weights[0].size()) << '\n';
    char buf[32];
    for (const auto& row : model.weights) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
            out << (i ? " " : "") << buf;
        }
        out << '\n';
    }
}

FittedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "mmlab-model v1") throw ParseError("bad model file header");
    FittedModel m;
    std::string key, val;
    std::size_t rows = 0, cols = 0;
    while (in >> key) {
        if (key == "kind") { in >> val; m.kind = model_kind_from_string(val); }
        else if (key == "normalization") {
            in >> val;
            m.normalization = val == "raw" ? Normalization::Raw : Normalization::Returns;
        }
        else if (key == "H") in >> m.historical_interval;
        else if (key == "B") in >> m.batch;
        else if (key == "iterative") { int v; in >> v; m.iterative = v != 0; }
        else if (key == "trained_at") in >> m.trained_at;
        else if (key == "frames") in >> m.frames;
        else if (key == "weights") { in >> rows >> cols; break; }
        else throw ParseError("unknown model file key '" + key + "'");
    }
    m.weights.assign(rows, std::vector<double>(cols, 0.0));
    for (auto& row : m.weights)
        for (auto& w : row)
            if (!(in >> w)) throw ParseError("truncated model weights");
    return m;
}

// --- walk-forward evaluation ---------------------------------------------------

EvalReport evaluate(std::span<const Candle> series, const PredictorConfig& cfg) {
    validate(cfg);
    if (static_cast<std::int64_t>(series.size()) < cfg.training_interval + cfg.batch)
        throw ConfigError("insufficient history (need at least T + B candles)");

    // Forward-fill the close series onto a uniform grid inferred from the
    // smallest positive spacing.
    TsMs bucket = 0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        TsMs d = series[i].ts - series[i - 1].ts;
        if (d > 0 && (bucket == 0 || d < bucket)) bucket = d;
    }
    if (bucket == 0) bucket = 1;

    std::vector<Ticks> closes;
    std::vector<TsMs> times;
    std::int64_t gaps = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (i > 0) {
            TsMs expect = times.back() + bucket;
            while (expect < series[i].ts) {
                closes.push_back(closes.back());
                times.push_back(expect);
                expect += bucket;
                ++gaps;
            }
        }
        closes.push_back(series[i].close);
        times.push_back(series[i].ts);
    }

    const std::int64_t span = static_cast<std::int64_t>(closes.size());
    auto events = schedule(span, cfg);

    EvalReport rep;
    rep.gaps_filled = gaps;
    rep.mae_model_by_horizon.assign(static_cast<std::size_t>(cfg.batch), 0.0);
    rep.mae_baseline_by_horizon.assign(static_cast<std::size_t>(cfg.batch), 0.0);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(cfg.batch), 0);
    double sum_model = 0.0, sum_base = 0.0;
    std::int64_t n = 0;

    std::optional<FittedModel> model;
    for (const auto& ev : events) {
        if (ev.kind == ScheduleEvent::Kind::Train) {
            std::span<const Ticks> window(closes.data() + (ev.step - cfg.training_interval),
                                          static_cast<std::size_t>(cfg.training_interval));
            model = fit(window, cfg, ev.step);
            continue;
        }
        const std::int64_t s = ev.step;
        if (s + 1 > span) continue;  // no target in-series
        std::span<const Ticks> recent(closes.data() + (s - cfg.historical_interval),
                                      static_cast<std::size_t>(cfg.historical_interval));
        auto preds = predict_batch(*model, recent);
        Ticks baseline = closes[static_cast<std::size_t>(s - 1)];
        for (std::int64_t j = 1; j <= cfg.batch; ++j) {
            std::int64_t target = s + j - 1;
            if (target >= span) break;
            Ticks actual = closes[static_cast<std::size_t>(target)];
            Ticks pred = preds[static_cast<std::size_t>(j - 1)];
            double em = std::abs(static_cast<double>(pred - actual));
            double eb = std::abs(static_cast<double>(baseline - actual));
            rep.mae_model_by_horizon[static_cast<std::size_t>(j - 1)] += em;
            rep.mae_baseline_by_horizon[static_cast<std::size_t>(j - 1)] += eb;
            ++counts[static_cast<std::size_t>(j - 1)];
            sum_model += em;
            sum_base += eb;
            ++n;
            rep.rows.push_back({times[static_cast<std::size_t>(target)], static_cast<int>(j),
                                pred, actual, baseline});
        }
    }

    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] > 0) {
            rep.mae_model_by_horizon[j] /= static_cast<double>(counts[j]);
            rep.mae_baseline_by_horizon[j] /= static_cast<double>(counts[j]);
        }
    }
    rep.prediction_count = n;
    if (n > 0) {
        rep.mae_model = sum_model / static_cast<double>(n);
        rep.mae_baseline = sum_base / static_cast<double>(n);
    }
    rep.improvement = rep.mae_baseline > 0.0 ? 1.0 - rep.mae_model / rep.mae_baseline : 0.0;
    return rep;
}

// --- streaming engine -----------------------------------------------------------

PredictionEngine::PredictionEngine(PredictorConfig cfg) : cfg_(cfg) { validate(cfg_); }

void PredictionEngine::push_close(Ticks close) {
    closes_.push_back(close);
    std::int64_t sz = static_cast<std::int64_t>(closes_.size());
    if (sz >= cfg_.training_interval &&
        (sz - cfg_.training_interval) % cfg_.period == 0) {
        std::span<const Ticks> window(closes_.data() + (sz - cfg_.training_interval),
                                      static_cast<std::size_t>(cfg_.training_interval));
        model_ = fit(window, cfg_, sz);
    }
}

std::optional<Ticks> PredictionEngine::predict(int horizon) {
    if (!model_ || horizon < 1 || horizon > cfg_.batch) return std::nullopt;
    std::int64_t sz = static_cast<std::int64_t>(closes_.size());
    if (sz < cfg_.historical_interval) return std::nullopt;
    if (cached_at_ != sz) {
        std::span<const Ticks> recent(closes_.data() + (sz - cfg_.historical_interval),
                                      static_cast<std::size_t>(cfg_.historical_interval));
        cached_batch_ = predict_batch(*model_, recent);
        cached_at_ = sz;
    }
    return cached_batch_[static_cast<std::size_t>(horizon - 1)];
}

}  // namespace mmlab
