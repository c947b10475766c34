#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmlab/marketdata.hpp"
#include "mmlab/types.hpp"

namespace mmlab {

enum class ModelKind { Persistence, Linreg, Ridge };
enum class Normalization { Returns, Raw };

ModelKind model_kind_from_string(const std::string& s);
const char* to_string(ModelKind k);
const char* to_string(Normalization n);

// The rolling-window algebra: models retrain on the last T steps every P
// steps; each prediction consumes the last H steps and emits the next B.
struct PredictorConfig {
    std::int64_t training_interval = 0;   // T
    std::int64_t period = 0;              // P
    std::int64_t historical_interval = 0; // H
    std::int64_t batch = 0;               // B
    ModelKind model = ModelKind::Persistence;
    double lambda = 0.0;  // ridge only
    Normalization normalization = Normalization::Returns;
    bool iterative = false;       // one-step model applied B times, feeding back
    std::int64_t frame_stride = 0;  // 0 -> batch
};

// Throws ConfigError naming the violated inequality.
void validate(const PredictorConfig& cfg);

struct ScheduleEvent {
    enum class Kind { Train, Predict } kind;
    std::int64_t step;  // number of data points known when the event fires
    bool operator==(const ScheduleEvent&) const = default;
};

// Train events at T, T+P, ... <= span; predict events every B steps within
// each period, first at T. Throws on span < T ("insufficient history").
std::vector<ScheduleEvent> schedule(std::int64_t span, const PredictorConfig& cfg);

struct FittedModel {
    ModelKind kind = ModelKind::Persistence;
    Normalization normalization = Normalization::Returns;
    std::int64_t historical_interval = 0;
    std::int64_t batch = 0;
    bool iterative = false;
    // One row per horizon (1 row when iterative), columns = [intercept,
    // features...]. Persistence carries the fixed select-last-input form.
    std::vector<std::vector<double>> weights;
    std::int64_t trained_at = 0;
    std::int64_t frames = 0;
    bool ridge_fallback = false;  // linreg hit a singular normal matrix
};

// window.size() must equal T; frames slide with the configured stride.
FittedModel fit(std::span<const Ticks> window, const PredictorConfig& cfg,
                std::int64_t trained_at = 0);

// recent.size() must equal H; outputs quantized round-half-up to ticks.
std::vector<Ticks> predict_batch(const FittedModel& model, std::span<const Ticks> recent);

void save_model(const std::string& path, const FittedModel& model);
FittedModel load_model(const std::string& path);

struct PredictionRow {
    TsMs ts = 0;      // time the prediction targets
    int horizon = 0;  // 1..B
    Ticks predicted = 0;
    Ticks actual = 0;
    Ticks baseline = 0;
};

struct EvalReport {
    std::vector<double> mae_model_by_horizon;
    std::vector<double> mae_baseline_by_horizon;
    double mae_model = 0.0;
    double mae_baseline = 0.0;
    // 1 - mae_model / mae_baseline; 0 when both MAEs are 0.
    double improvement = 0.0;
    std::int64_t prediction_count = 0;
    std::int64_t gaps_filled = 0;
    std::vector<PredictionRow> rows;
};

// Walk-forward evaluation over candle closes against the last-known-price
// baseline on identical prediction points. Gaps in the candle grid are
// forward-filled internally and counted.
EvalReport evaluate(std::span<const Candle> series, const PredictorConfig& cfg);

// Streaming feed for prediction-fed strategies: push one close per step,
// retraining per the schedule; predictions always use the latest model and
// only pushed data.
class PredictionEngine {
public:
    explicit PredictionEngine(PredictorConfig cfg);
    void push_close(Ticks close);
    std::optional<Ticks> predict(int horizon);
    std::int64_t steps_seen() const { return static_cast<std::int64_t>(closes_.size()); }

private:
    PredictorConfig cfg_;
    std::vector<Ticks> closes_;
    std::optional<FittedModel> model_;
    std::vector<Ticks> cached_batch_;
    std::int64_t cached_at_ = -1;
};

}  // namespace mmlab
