#pragma once
// Prediction-error measurement: per-window horizon errors, percentile and CDF
// statistics, event-conditioned summaries, per-subject profiles, boxplot
// statistics, and the inference benchmark.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/events.hpp"
#include "gazepred/models.hpp"
#include "gazepred/rng.hpp"
#include "gazepred/signal.hpp"

namespace gazepred {

struct ErrorSample {
    std::int64_t anchor_index = 0;
    std::int64_t target_index = 0; // anchor + pi_samples
    double error_deg = 0.0;
    int target_class = static_cast<int>(EventClass::OTHER);
};

struct ErrorSeries {
    std::string subject_id;
    double sample_rate_hz = 0.0;
    int pi_samples = 0;
    std::vector<ErrorSample> samples; // ascending anchor order
};

namespace detail {

// Shared scaffolding: window extraction plus error assembly. The callback
// receives each batch of windows and writes predicted deltas for the final
// horizon step into (dx, dy) per row.
template <typename PredictFn>
ErrorSeries windowed_errors(const GazeRecording& rec, const FeatureSeries& features,
                            const std::vector<int>& labels, int window_len, int pi_samples,
                            PredictFn&& predict_batch) {
    auto windows = build_windows(features, rec, labels, window_len, pi_samples);
    ErrorSeries out;
    out.subject_id = rec.subject_id;
    out.sample_rate_hz = rec.sample_rate_hz;
    out.pi_samples = pi_samples;
    out.samples.reserve(windows.size());
    const std::int64_t batch = 256;
    std::vector<double> dx(static_cast<std::size_t>(batch)), dy(static_cast<std::size_t>(batch));
    for (std::size_t start = 0; start < windows.size(); start += static_cast<std::size_t>(batch)) {
        const auto m =
            std::min<std::size_t>(static_cast<std::size_t>(batch), windows.size() - start);
        predict_batch(&windows[start], m, dx.data(), dy.data());
        for (std::size_t i = 0; i < m; ++i) {
            const WindowSample& w = windows[start + i];
            const auto t = static_cast<std::size_t>(w.anchor_index);
            const auto ti = t + static_cast<std::size_t>(pi_samples);
            const double px = rec.x_deg[t] + dx[i];
            const double py = rec.y_deg[t] + dy[i];
            const double err = std::hypot(px - rec.x_deg[ti], py - rec.y_deg[ti]);
            if (!std::isfinite(err))
                throw NumericError("non-finite prediction error at sample " +
                                   std::to_string(w.anchor_index) + " of subject " +
                                   rec.subject_id);
            ErrorSample s;
            s.anchor_index = w.anchor_index;
            s.target_index = static_cast<std::int64_t>(ti);
            s.error_deg = err;
            s.target_class = w.target_labels.back();
            out.samples.push_back(s);
        }
    }
    return out;
}

} // namespace detail

// Model prediction error at the final horizon step for every valid window.
inline ErrorSeries horizon_errors(Forecaster<float>& model, const GazeRecording& rec,
                                  const FeatureSeries& features, const std::vector<int>& labels) {
    const ModelConfig& cfg = model.config();
    return detail::windowed_errors(
        rec, features, labels, cfg.window_len, cfg.pi_samples,
        [&](const WindowSample* ws, std::size_t m, double* dx, double* dy) {
            Tensor<float> x({static_cast<std::int64_t>(m), cfg.in_channels(), cfg.window_len});
            for (std::size_t i = 0; i < m; ++i)
                fill_input(x, static_cast<std::int64_t>(i), ws[i], cfg);
            Tensor<float> pred = model.forward(x, false); // [m, pi, 2]
            for (std::size_t i = 0; i < m; ++i) {
                const std::int64_t row =
                    (static_cast<std::int64_t>(i) * cfg.pi_samples + cfg.pi_samples - 1) * 2;
                dx[i] = static_cast<double>(pred[row]);
                dy[i] = static_cast<double>(pred[row + 1]);
            }
        });
}

// Zero-displacement baseline: predicted position equals the anchor position.
inline ErrorSeries zero_baseline_errors(const GazeRecording& rec, const FeatureSeries& features,
                                        const std::vector<int>& labels, int window_len,
                                        int pi_samples) {
    return detail::windowed_errors(rec, features, labels, window_len, pi_samples,
                                   [](const WindowSample*, std::size_t m, double* dx, double* dy) {
                                       for (std::size_t i = 0; i < m; ++i)
                                           dx[i] = dy[i] = 0.0;
                                   });
}

// Linear-interpolation percentile at rank q/100 * (n-1) on the sorted array.
inline double percentile(std::vector<double> values, double q) {
    if (values.empty())
        throw ConfigError("percentile of an empty array");
    if (!(q >= 0.0 && q <= 100.0))
        throw ConfigError("percentile level " + std::to_string(q) + " outside [0, 100]");
    std::sort(values.begin(), values.end());
    const double r = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(r);
    if (lo + 1 >= values.size())
        return values.back();
    const double frac = r - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

struct CdfPoint {
    double error_deg = 0.0;
    double fraction = 0.0;
};

// Empirical CDF sampled at n_points equally spaced quantile levels ending at 1.
inline std::vector<CdfPoint> cdf_curve(std::vector<double> values, int n_points) {
    if (values.empty())
        throw ConfigError("cdf of an empty array");
    if (n_points < 1)
        throw ConfigError("cdf needs at least 1 point");
    std::sort(values.begin(), values.end());
    std::vector<CdfPoint> out(static_cast<std::size_t>(n_points));
    const auto n = static_cast<double>(values.size());
    for (int i = 0; i < n_points; ++i) {
        const double f = static_cast<double>(i + 1) / static_cast<double>(n_points);
        const double r = f * (n - 1.0);
        const auto lo = static_cast<std::size_t>(r);
        double e;
        if (lo + 1 >= values.size())
            e = values.back();
        else
            e = values[lo] + (r - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
        out[static_cast<std::size_t>(i)] = {e, f};
    }
    return out;
}

enum class EventKind { FIXATION = 0, SACCADE = 1, CEP = 2 };

inline const char* event_kind_name(EventKind k) {
    switch (k) {
    case EventKind::FIXATION:
        return "fixation";
    case EventKind::SACCADE:
        return "saccade";
    case EventKind::CEP:
        return "cep";
    }
    return "?";
}

struct EventErrorSummary {
    EventKind kind = EventKind::FIXATION;
    int event_index = -1; // index into the segment (or cep) list
    std::string subject_id;
    double p50_deg = 0.0;
    double p95_deg = 0.0;
    int n_samples = 0;
    double duration_ms = 0.0;   // from the source segment
    double amplitude_deg = 0.0; // saccades only
};

namespace detail {

// Errors whose target sample falls in [start, end].
inline std::vector<double> errors_in_range(const ErrorSeries& errors, std::int64_t start,
                                           std::int64_t end) {
    ErrorSample probe;
    probe.target_index = start;
    auto lo = std::lower_bound(errors.samples.begin(), errors.samples.end(), probe,
                               [](const ErrorSample& a, const ErrorSample& b) {
                                   return a.target_index < b.target_index;
                               });
    std::vector<double> vals;
    for (auto it = lo; it != errors.samples.end() && it->target_index <= end; ++it)
        vals.push_back(it->error_deg);
    return vals;
}

} // namespace detail

// Per-event P50/P95 of the error samples landing inside each fixation,
// saccade, and post-saccadic window. Events with no error samples are skipped.
inline std::vector<EventErrorSummary> event_summaries(const ErrorSeries& errors,
                                                      const std::vector<EventSegment>& segments,
                                                      const std::vector<CepSegment>& ceps) {
    std::vector<EventErrorSummary> out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const EventSegment& seg = segments[i];
        if (seg.cls != EventClass::FIXATION && seg.cls != EventClass::SACCADE)
            continue;
        auto vals = detail::errors_in_range(errors, seg.start_idx, seg.end_idx);
        if (vals.empty())
            continue;
        EventErrorSummary s;
        s.kind = seg.cls == EventClass::FIXATION ? EventKind::FIXATION : EventKind::SACCADE;
        s.event_index = static_cast<int>(i);
        s.subject_id = errors.subject_id;
        s.p50_deg = percentile(vals, 50.0);
        s.p95_deg = percentile(vals, 95.0);
        s.n_samples = static_cast<int>(vals.size());
        s.duration_ms = seg.duration_ms;
        s.amplitude_deg = seg.amplitude_deg;
        out.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < ceps.size(); ++i) {
        auto vals = detail::errors_in_range(errors, ceps[i].start_idx, ceps[i].end_idx);
        if (vals.empty())
            continue;
        EventErrorSummary s;
        s.kind = EventKind::CEP;
        s.event_index = static_cast<int>(i);
        s.subject_id = errors.subject_id;
        s.p50_deg = percentile(vals, 50.0);
        s.p95_deg = percentile(vals, 95.0);
        s.n_samples = static_cast<int>(vals.size());
        s.duration_ms =
            static_cast<double>(ceps[i].end_idx - ceps[i].start_idx) * 1000.0 / errors.sample_rate_hz;
        out.push_back(std::move(s));
    }
    return out;
}

// A subject's median-of-event-percentiles per event type.
struct SubjectProfile {
    struct Cell {
        bool present = false;
        double p50_median_deg = 0.0;
        double p95_median_deg = 0.0;
        int n_events = 0;
    };
    std::string subject_id;
    Cell fixation, cep, sac_small, sac_large;
};

inline constexpr const char* kProfileEventTypes[4] = {"fixation", "cep", "sac_small", "sac_large"};

// Event types follow the report bins: all fixations, post-saccadic windows,
// and saccades split by amplitude at the given threshold (boundary -> small).
inline std::vector<SubjectProfile> subject_profiles(const std::vector<EventErrorSummary>& summaries,
                                                    double saccade_split_deg = 2.0) {
    std::map<std::string, std::array<std::vector<const EventErrorSummary*>, 4>> by_subject;
    for (const auto& s : summaries) {
        int slot;
        if (s.kind == EventKind::FIXATION)
            slot = 0;
        else if (s.kind == EventKind::CEP)
            slot = 1;
        else
            slot = s.amplitude_deg <= saccade_split_deg ? 2 : 3;
        by_subject[s.subject_id][static_cast<std::size_t>(slot)].push_back(&s);
    }
    std::vector<SubjectProfile> out;
    for (const auto& [sid, slots] : by_subject) {
        SubjectProfile p;
        p.subject_id = sid;
        SubjectProfile::Cell* cells[4] = {&p.fixation, &p.cep, &p.sac_small, &p.sac_large};
        for (int k = 0; k < 4; ++k) {
            const auto& events = slots[static_cast<std::size_t>(k)];
            if (events.empty())
                continue;
            std::vector<double> p50s, p95s;
            for (const auto* e : events) {
                p50s.push_back(e->p50_deg);
                p95s.push_back(e->p95_deg);
            }
            cells[k]->present = true;
            cells[k]->p50_median_deg = percentile(p50s, 50.0);
            cells[k]->p95_median_deg = percentile(p95s, 50.0);
            cells[k]->n_events = static_cast<int>(events.size());
        }
        out.push_back(std::move(p));
    }
    return out;
}

struct BoxStats {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double mean = 0.0;
    double whisker_lo = 0.0;
    double whisker_hi = 0.0;
    int outliers = 0;
    int n = 0;
};

// Tukey box statistics; whiskers at 1.5 IQR clamped to the data range.
inline BoxStats boxplot_stats(const std::vector<double>& values) {
    if (values.empty())
        throw ConfigError("boxplot of an empty array");
    BoxStats b;
    b.q1 = percentile(values, 25.0);
    b.median = percentile(values, 50.0);
    b.q3 = percentile(values, 75.0);
    double sum = 0.0;
    for (double v : values)
        sum += v;
    b.mean = sum / static_cast<double>(values.size());
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.q3;
    b.whisker_hi = b.q1;
    bool any = false;
    for (double v : values)
        if (v >= lo_fence && v <= hi_fence) {
            b.whisker_lo = any ? std::min(b.whisker_lo, v) : v;
            b.whisker_hi = any ? std::max(b.whisker_hi, v) : v;
            any = true;
        }
    for (double v : values)
        if (v < b.whisker_lo || v > b.whisker_hi)
            ++b.outliers;
    b.n = static_cast<int>(values.size());
    return b;
}

// Sample errors routed into the report bins. A sample may appear in several
// bins: every sample is in `full`, and post-saccadic samples also stay in
// their enclosing fixation bin.
struct BinnedSampleErrors {
    std::vector<double> full;
    std::vector<double> fix_short, fix_long;
    std::vector<double> sac_small, sac_large;
    std::vector<double> cep;
};

inline BinnedSampleErrors collect_sample_bins(const ErrorSeries& errors,
                                              const std::vector<EventSegment>& segments,
                                              const std::vector<CepSegment>& ceps,
                                              double fixation_split_ms = 400.0,
                                              double saccade_split_deg = 2.0) {
    BinnedSampleErrors bins;
    std::vector<const EventSegment*> seg_of;
    if (!segments.empty()) {
        seg_of.assign(static_cast<std::size_t>(segments.back().end_idx + 1), nullptr);
        for (const auto& seg : segments)
            for (std::int64_t t = seg.start_idx; t <= seg.end_idx; ++t)
                seg_of[static_cast<std::size_t>(t)] = &seg;
    }
    std::vector<std::uint8_t> in_cep(seg_of.size(), 0);
    for (const auto& c : ceps)
        for (std::int64_t t = c.start_idx; t <= c.end_idx && t < static_cast<std::int64_t>(in_cep.size()); ++t)
            in_cep[static_cast<std::size_t>(t)] = 1;
    for (const auto& s : errors.samples) {
        bins.full.push_back(s.error_deg);
        const auto ti = static_cast<std::size_t>(s.target_index);
        const EventSegment* seg = ti < seg_of.size() ? seg_of[ti] : nullptr;
        if (seg) {
            if (seg->cls == EventClass::FIXATION)
                (seg->duration_ms <= fixation_split_ms ? bins.fix_short : bins.fix_long)
                    .push_back(s.error_deg);
            else if (seg->cls == EventClass::SACCADE)
                (seg->amplitude_deg <= saccade_split_deg ? bins.sac_small : bins.sac_large)
                    .push_back(s.error_deg);
        }
        if (ti < in_cep.size() && in_cep[ti])
            bins.cep.push_back(s.error_deg);
    }
    return bins;
}

struct BenchResult {
    double mean_ms = 0.0;
    double std_ms = 0.0;
    std::vector<double> timings_ms; // exactly `runs` entries
};

// Timed single-window inference: `warmup` untimed forwards, then `runs`
// timed forwards on the same fixed random input.
inline BenchResult bench_inference(Forecaster<float>& model, int warmup = 10, int runs = 100,
                                   std::uint64_t seed = 0) {
    if (warmup < 0 || runs < 1)
        throw ConfigError("bench needs warmup >= 0 and runs >= 1");
    const ModelConfig& cfg = model.config();
    Rng rng(mix_seed(seed, 4040));
    Tensor<float> x({1, cfg.in_channels(), cfg.window_len});
    for (std::int64_t i = 0; i < x.numel(); ++i)
        x[i] = static_cast<float>(rng.normal(0.0, 1.0));
    for (int i = 0; i < warmup; ++i)
        model.forward(x, false);
    BenchResult r;
    r.timings_ms.reserve(static_cast<std::size_t>(runs));
    for (int i = 0; i < runs; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        model.forward(x, false);
        const auto t1 = std::chrono::steady_clock::now();
        r.timings_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    double sum = 0.0;
    for (double t : r.timings_ms)
        sum += t;
    r.mean_ms = sum / static_cast<double>(runs);
    double var = 0.0;
    for (double t : r.timings_ms)
        var += (t - r.mean_ms) * (t - r.mean_ms);
    r.std_ms = std::sqrt(var / static_cast<double>(runs));
    return r;
}

} // namespace gazepred
