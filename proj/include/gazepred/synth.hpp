#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/events.hpp"
#include "gazepred/rng.hpp"
#include "gazepred/signal.hpp"

namespace gazepred {

struct SubjectParams {
    double fixation_noise_rms_deg = 0.15;
    double saccade_latency_mean_ms = 200.0;
    double saccade_latency_sd_ms = 30.0;
    double undershoot_prob = 0.1;
    double blink_rate_per_min = 4.0;
    double main_sequence_slope_ms_per_deg = 2.2;
    double main_sequence_intercept_ms = 21.0;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (fixation_noise_rms_deg < 0.01 || fixation_noise_rms_deg > 1.0)
            throw ConfigError("fixation_noise_rms_deg out of [0.01, 1.0]");
        if (saccade_latency_mean_ms < 120.0 || saccade_latency_mean_ms > 350.0)
            throw ConfigError("saccade_latency_mean_ms out of [120, 350]");
        if (undershoot_prob < 0.0 || undershoot_prob > 0.3)
            throw ConfigError("undershoot_prob out of [0, 0.3]");
    }
};

struct TargetEvent {
    double x_deg = 0.0;
    double y_deg = 0.0;
    double onset_ms = 0.0;
};

struct SyntheticRecording {
    GazeRecording recording;
    std::vector<int> true_labels;
    std::vector<TargetEvent> target_positions;
};

// horizontal/vertical grid extent of the displayed target, degrees
constexpr double kGridHalfWidthDeg = 25.0;
constexpr double kGridHalfHeightDeg = 20.0;
constexpr double kGridStepDeg = 5.0;
// gaze may not launch sooner than this after a target jump
constexpr double kMinLatencyMs = 80.0;
// an undershooting primary saccade covers this fraction of the step
constexpr double kUndershootCoverage = 0.9;
// the corrective saccade launches this long after the primary's onset
constexpr double kCorrectiveDelayMs = 150.0;

// Deterministic subject draw; the documented ranges sit inside the
// SubjectParams invariants.
inline SubjectParams sample_subject_params(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 101));
    SubjectParams p;
    p.fixation_noise_rms_deg = rng.uniform(0.02, 0.40);
    p.saccade_latency_mean_ms = rng.uniform(150.0, 300.0);
    p.saccade_latency_sd_ms = rng.uniform(10.0, 40.0);
    p.undershoot_prob = rng.uniform(0.0, 0.25);
    p.blink_rate_per_min = rng.uniform(2.0, 10.0);
    p.main_sequence_slope_ms_per_deg = rng.uniform(2.0, 2.6);
    p.main_sequence_intercept_ms = rng.uniform(20.0, 26.0);
    p.rng_seed = seed;
    return p;
}

inline double saccade_duration_ms(double amplitude_deg, const SubjectParams& p) {
    return p.main_sequence_intercept_ms + p.main_sequence_slope_ms_per_deg * amplitude_deg;
}

// raised-cosine displacement along the saccade, s(0)=0, s(0.5)=A/2, s(1)=A
inline double raised_cosine_offset(double amplitude_deg, double tau) {
    tau = std::min(1.0, std::max(0.0, tau));
    return amplitude_deg * (1.0 - std::cos(M_PI * tau)) / 2.0;
}

// closed-form peak speed of the raised-cosine profile, deg/s
inline double saccade_peak_speed_dps(double amplitude_deg, const SubjectParams& p) {
    const double dur_s = saccade_duration_ms(amplitude_deg, p) / 1000.0;
    return amplitude_deg * M_PI / (2.0 * dur_s);
}

// 2-D position offsets at 1/fs spacing along the profile; the final sample is
// pinned to the full amplitude.
inline std::vector<std::array<double, 2>> saccade_trajectory(double amplitude_deg,
                                                             double direction_rad, double fs,
                                                             const SubjectParams& p) {
    if (amplitude_deg <= 0.0)
        throw ConfigError("saccade amplitude must be positive, got " +
                          std::to_string(amplitude_deg));
    const double dur_ms = saccade_duration_ms(amplitude_deg, p);
    const int n = std::max(1, static_cast<int>(std::lround(dur_ms * fs / 1000.0)));
    const double dt_ms = 1000.0 / fs;
    const double ux = std::cos(direction_rad), uy = std::sin(direction_rad);
    std::vector<std::array<double, 2>> out(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        const double s = k == n ? amplitude_deg
                                : raised_cosine_offset(amplitude_deg, k * dt_ms / dur_ms);
        out[static_cast<std::size_t>(k - 1)] = {s * ux, s * uy};
    }
    return out;
}

namespace detail {

struct Motion {
    double onset_ms = 0.0;
    double duration_ms = 0.0;
    double sx = 0.0, sy = 0.0;
    double ex = 0.0, ey = 0.0;
};

} // namespace detail

// Random-saccade task: the target jumps across a 5-degree grid every
// 1.0-1.5 s, gaze follows after a subject-specific latency, optionally
// undershooting with a corrective saccade. Labels come from the generator's
// own mechanics, never from the classifier.
inline SyntheticRecording generate_recording(const SubjectParams& params, double duration_s,
                                             double fs, const std::string& subject_id = "",
                                             const std::string& task_id = "random_saccades") {
    if (duration_s < 5.0)
        throw ConfigError("synthetic recordings need duration_s >= 5, got " +
                          std::to_string(duration_s));
    params.validate();
    Rng target_rng(mix_seed(params.rng_seed, 1));
    Rng latency_rng(mix_seed(params.rng_seed, 2));
    Rng chance_rng(mix_seed(params.rng_seed, 3));
    Rng noise_rng(mix_seed(params.rng_seed, 4));
    Rng blink_rng(mix_seed(params.rng_seed, 5));

    const double total_ms = duration_s * 1000.0;
    const double dt_ms = 1000.0 / fs;
    const std::int64_t n = static_cast<std::int64_t>(std::llround(duration_s * fs));

    const int nx = static_cast<int>(2 * kGridHalfWidthDeg / kGridStepDeg) + 1;
    const int ny = static_cast<int>(2 * kGridHalfHeightDeg / kGridStepDeg) + 1;
    auto grid_x = [&](int ix) { return -kGridHalfWidthDeg + ix * kGridStepDeg; };
    auto grid_y = [&](int iy) { return -kGridHalfHeightDeg + iy * kGridStepDeg; };

    SyntheticRecording out;
    int cx = static_cast<int>(target_rng.integer(nx));
    int cy = static_cast<int>(target_rng.integer(ny));
    out.target_positions.push_back({grid_x(cx), grid_y(cy), 0.0});
    for (double t = target_rng.uniform(1000.0, 1500.0); t < total_ms;
         t += target_rng.uniform(1000.0, 1500.0)) {
        int jx = cx, jy = cy;
        while (jx == cx && jy == cy) {
            jx = static_cast<int>(target_rng.integer(nx));
            jy = static_cast<int>(target_rng.integer(ny));
        }
        cx = jx;
        cy = jy;
        out.target_positions.push_back({grid_x(cx), grid_y(cy), t});
    }

    std::vector<detail::Motion> motions;
    double px = out.target_positions.front().x_deg;
    double py = out.target_positions.front().y_deg;
    for (std::size_t k = 1; k < out.target_positions.size(); ++k) {
        const TargetEvent& tgt = out.target_positions[k];
        const double dx = tgt.x_deg - px, dy = tgt.y_deg - py;
        const double amp = std::sqrt(dx * dx + dy * dy);
        const double latency =
            std::max(kMinLatencyMs,
                     latency_rng.normal(params.saccade_latency_mean_ms,
                                        params.saccade_latency_sd_ms));
        double onset = tgt.onset_ms + latency;
        if (!motions.empty())
            onset = std::max(onset, motions.back().onset_ms + motions.back().duration_ms + dt_ms);
        const bool undershoot = chance_rng.uniform() < params.undershoot_prob;
        if (undershoot) {
            const double lx = px + kUndershootCoverage * dx;
            const double ly = py + kUndershootCoverage * dy;
            const double amp1 = kUndershootCoverage * amp;
            motions.push_back(
                {onset, saccade_duration_ms(amp1, params), px, py, lx, ly});
            const double amp2 = (1.0 - kUndershootCoverage) * amp;
            double onset2 = onset + kCorrectiveDelayMs;
            onset2 = std::max(onset2, motions.back().onset_ms + motions.back().duration_ms + dt_ms);
            motions.push_back(
                {onset2, saccade_duration_ms(amp2, params), lx, ly, tgt.x_deg, tgt.y_deg});
        } else {
            motions.push_back(
                {onset, saccade_duration_ms(amp, params), px, py, tgt.x_deg, tgt.y_deg});
        }
        px = tgt.x_deg;
        py = tgt.y_deg;
    }

    GazeRecording& rec = out.recording;
    rec.subject_id = subject_id.empty() ? "subj" + std::to_string(params.rng_seed) : subject_id;
    rec.task_id = task_id;
    rec.sample_rate_hz = fs;
    rec.t_ms.resize(static_cast<std::size_t>(n));
    rec.x_deg.resize(static_cast<std::size_t>(n));
    rec.y_deg.resize(static_cast<std::size_t>(n));
    rec.valid.assign(static_cast<std::size_t>(n), 1);
    out.true_labels.assign(static_cast<std::size_t>(n),
                           static_cast<int>(EventClass::FIXATION));

    std::size_t mi = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double tm = static_cast<double>(i) * dt_ms;
        rec.t_ms[static_cast<std::size_t>(i)] = tm;
        while (mi + 1 < motions.size() && motions[mi + 1].onset_ms < tm)
            ++mi;
        double x, y;
        bool flight = false;
        if (motions.empty() || tm <= motions[mi].onset_ms) {
            x = motions.empty() ? out.target_positions.front().x_deg : motions[mi].sx;
            y = motions.empty() ? out.target_positions.front().y_deg : motions[mi].sy;
        } else if (tm < motions[mi].onset_ms + motions[mi].duration_ms) {
            const detail::Motion& m = motions[mi];
            const double tau = (tm - m.onset_ms) / m.duration_ms;
            const double frac = (1.0 - std::cos(M_PI * tau)) / 2.0;
            x = m.sx + (m.ex - m.sx) * frac;
            y = m.sy + (m.ey - m.sy) * frac;
            flight = true;
        } else {
            x = motions[mi].ex;
            y = motions[mi].ey;
            flight = tm <= motions[mi].onset_ms + motions[mi].duration_ms;
        }
        if (flight) {
            out.true_labels[static_cast<std::size_t>(i)] =
                static_cast<int>(EventClass::SACCADE);
        } else if (params.fixation_noise_rms_deg > 0.0) {
            x += noise_rng.normal(0.0, params.fixation_noise_rms_deg);
            y += noise_rng.normal(0.0, params.fixation_noise_rms_deg);
        }
        rec.x_deg[static_cast<std::size_t>(i)] = x;
        rec.y_deg[static_cast<std::size_t>(i)] = y;
    }

    if (params.blink_rate_per_min > 0.0) {
        const double mean_gap_ms = 60000.0 / params.blink_rate_per_min;
        double t = -mean_gap_ms * std::log(1.0 - blink_rng.uniform());
        const double nan = std::numeric_limits<double>::quiet_NaN();
        while (t < total_ms) {
            const double dur = blink_rng.uniform(100.0, 300.0);
            const std::int64_t first = static_cast<std::int64_t>(std::ceil(t / dt_ms));
            const std::int64_t last =
                std::min<std::int64_t>(n - 1, static_cast<std::int64_t>((t + dur) / dt_ms));
            for (std::int64_t i = std::max<std::int64_t>(0, first); i <= last; ++i) {
                rec.valid[static_cast<std::size_t>(i)] = 0;
                rec.x_deg[static_cast<std::size_t>(i)] = nan;
                rec.y_deg[static_cast<std::size_t>(i)] = nan;
                out.true_labels[static_cast<std::size_t>(i)] =
                    static_cast<int>(EventClass::INVALID);
            }
            t += dur + -mean_gap_ms * std::log(1.0 - blink_rng.uniform());
        }
    }
    return out;
}

} // namespace gazepred
