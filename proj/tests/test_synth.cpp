#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/events.hpp"
#include "gazepred/synth.hpp"

using namespace gazepred;

TEST_CASE("subject parameter sampling stays in the documented ranges") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SubjectParams p = sample_subject_params(seed);
        REQUIRE(p.rng_seed == seed);
        REQUIRE(p.fixation_noise_rms_deg >= 0.02);
        REQUIRE(p.fixation_noise_rms_deg <= 0.40);
        REQUIRE(p.saccade_latency_mean_ms >= 150.0);
        REQUIRE(p.saccade_latency_mean_ms <= 300.0);
        REQUIRE(p.saccade_latency_sd_ms >= 10.0);
        REQUIRE(p.saccade_latency_sd_ms <= 40.0);
        REQUIRE(p.undershoot_prob >= 0.0);
        REQUIRE(p.undershoot_prob <= 0.25);
        REQUIRE(p.blink_rate_per_min >= 2.0);
        REQUIRE(p.blink_rate_per_min <= 10.0);
        REQUIRE(p.main_sequence_slope_ms_per_deg >= 2.0);
        REQUIRE(p.main_sequence_slope_ms_per_deg <= 2.6);
        REQUIRE(p.main_sequence_intercept_ms >= 20.0);
        REQUIRE(p.main_sequence_intercept_ms <= 26.0);
        REQUIRE_NOTHROW(p.validate());
    }
    SubjectParams a = sample_subject_params(9), b = sample_subject_params(9);
    REQUIRE(a.fixation_noise_rms_deg == b.fixation_noise_rms_deg);
    REQUIRE(a.blink_rate_per_min == b.blink_rate_per_min);
}

TEST_CASE("subject parameter validation") {
    SubjectParams p;
    p.fixation_noise_rms_deg = 2.0;
    REQUIRE_THROWS_AS(p.validate(), ConfigError);
    p = SubjectParams{};
    p.saccade_latency_mean_ms = 50.0;
    REQUIRE_THROWS_AS(p.validate(), ConfigError);
    p = SubjectParams{};
    p.undershoot_prob = 0.5;
    REQUIRE_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("main sequence closed forms") {
    SubjectParams p;
    p.main_sequence_slope_ms_per_deg = 2.2;
    p.main_sequence_intercept_ms = 21.0;
    REQUIRE(saccade_duration_ms(10.0, p) == Catch::Approx(43.0));
    REQUIRE(saccade_duration_ms(1.0, p) == Catch::Approx(23.2));

    // raised cosine: s(0)=0, s(1/2)=A/2, s(1)=A, peak speed = A*pi/(2*dur)
    REQUIRE(raised_cosine_offset(8.0, 0.0) == 0.0);
    REQUIRE(raised_cosine_offset(8.0, 0.5) == Catch::Approx(4.0));
    REQUIRE(raised_cosine_offset(8.0, 1.0) == Catch::Approx(8.0));
    const double dur_s = saccade_duration_ms(10.0, p) / 1000.0;
    REQUIRE(saccade_peak_speed_dps(10.0, p) == Catch::Approx(10.0 * M_PI / (2.0 * dur_s)));
    // peak speed clears the detection threshold for amplitudes >= ~1 deg
    for (double amp = 1.05; amp < 30.0; amp *= 1.5)
        REQUIRE(saccade_peak_speed_dps(amp, p) > 70.0);
}

TEST_CASE("saccade trajectory ends exactly on the amplitude") {
    SubjectParams p;
    auto traj = saccade_trajectory(7.0, M_PI / 3.0, 90.0, p);
    REQUIRE_FALSE(traj.empty());
    const auto& last = traj.back();
    REQUIRE(std::hypot(last[0], last[1]) == Catch::Approx(7.0).margin(1e-9));
    REQUIRE(std::atan2(last[1], last[0]) == Catch::Approx(M_PI / 3.0).margin(1e-9));
    // monotone progress along the direction
    double prev = 0.0;
    for (const auto& pt : traj) {
        const double s = std::hypot(pt[0], pt[1]);
        REQUIRE(s >= prev - 1e-12);
        prev = s;
    }
    REQUIRE_THROWS_AS(saccade_trajectory(0.0, 0.0, 90.0, p), ConfigError);
}

TEST_CASE("generated recording basic structure") {
    SubjectParams p = sample_subject_params(3);
    SyntheticRecording syn = generate_recording(p, 30.0, 90.0, "s03");
    const GazeRecording& rec = syn.recording;

    REQUIRE(rec.subject_id == "s03");
    REQUIRE(rec.size() == 2700);
    REQUIRE(syn.true_labels.size() == 2700);
    REQUIRE(rec.sample_rate_hz == 90.0);
    REQUIRE(syn.target_positions.size() >= 15); // jumps every 1.0-1.5 s

    for (std::int64_t i = 0; i < rec.size(); ++i) {
        const auto t = static_cast<std::size_t>(i);
        REQUIRE(rec.t_ms[t] == Catch::Approx(static_cast<double>(i) * 1000.0 / 90.0));
        if (rec.valid[t]) {
            REQUIRE(std::isfinite(rec.x_deg[t]));
            REQUIRE(std::abs(rec.x_deg[t]) < 25.0 + 5.0); // grid + noise margin
            REQUIRE(std::abs(rec.y_deg[t]) < 20.0 + 5.0);
        } else {
            REQUIRE(syn.true_labels[t] == static_cast<int>(EventClass::INVALID));
        }
    }
    for (const auto& tgt : syn.target_positions) {
        REQUIRE(std::abs(tgt.x_deg) <= 25.0);
        REQUIRE(std::abs(tgt.y_deg) <= 25.0);
        // grid positions are multiples of 5 degrees
        REQUIRE(std::abs(tgt.x_deg / 5.0 - std::round(tgt.x_deg / 5.0)) < 1e-9);
        REQUIRE(std::abs(tgt.y_deg / 5.0 - std::round(tgt.y_deg / 5.0)) < 1e-9);
    }
}

namespace {

// bit-level equality; NaN gaps from blinks would defeat operator==
bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        return false;
    return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("generated recordings are deterministic in the seed") {
    SubjectParams p = sample_subject_params(11);
    SyntheticRecording a = generate_recording(p, 12.0, 90.0, "x");
    SyntheticRecording b = generate_recording(p, 12.0, 90.0, "x");
    REQUIRE(same_bits(a.recording.x_deg, b.recording.x_deg));
    REQUIRE(same_bits(a.recording.y_deg, b.recording.y_deg));
    REQUIRE(a.recording.valid == b.recording.valid);
    REQUIRE(a.true_labels == b.true_labels);

    SubjectParams q = sample_subject_params(12);
    SyntheticRecording c = generate_recording(q, 12.0, 90.0, "x");
    REQUIRE(!same_bits(a.recording.x_deg, c.recording.x_deg));
}

TEST_CASE("true saccade segments follow the main sequence") {
    SubjectParams p = sample_subject_params(4);
    p.blink_rate_per_min = 0.0; // keep segments clean for the duration check
    p.undershoot_prob = 0.0;
    SyntheticRecording syn = generate_recording(p, 60.0, 90.0, "s");

    auto segs = segment(syn.true_labels, syn.recording);
    int checked = 0;
    for (const auto& s : segs) {
        if (s.cls != EventClass::SACCADE || s.amplitude_deg < 2.0)
            continue;
        const double expected = saccade_duration_ms(s.amplitude_deg, p);
        // label quantization adds at most about one sample interval per edge
        REQUIRE(s.duration_ms == Catch::Approx(expected).margin(2.5 * 1000.0 / 90.0));
        ++checked;
    }
    REQUIRE(checked >= 10);
}

TEST_CASE("fixation noise magnitude tracks the configured rms") {
    SubjectParams p;
    p.fixation_noise_rms_deg = 0.2;
    p.blink_rate_per_min = 0.0;
    p.undershoot_prob = 0.0;
    p.rng_seed = 21;
    SyntheticRecording syn = generate_recording(p, 60.0, 90.0, "s");

    auto segs = segment(syn.true_labels, syn.recording);
    double sq = 0.0;
    std::int64_t n = 0;
    for (const auto& s : segs) {
        if (s.cls != EventClass::FIXATION || s.length() < 20)
            continue;
        // rms around the per-fixation mean isolates the additive noise
        double mx = 0.0, my = 0.0;
        for (std::int64_t i = s.start_idx; i <= s.end_idx; ++i) {
            mx += syn.recording.x_deg[static_cast<std::size_t>(i)];
            my += syn.recording.y_deg[static_cast<std::size_t>(i)];
        }
        mx /= static_cast<double>(s.length());
        my /= static_cast<double>(s.length());
        for (std::int64_t i = s.start_idx; i <= s.end_idx; ++i) {
            const double dx = syn.recording.x_deg[static_cast<std::size_t>(i)] - mx;
            const double dy = syn.recording.y_deg[static_cast<std::size_t>(i)] - my;
            sq += dx * dx + dy * dy;
            n += 2;
        }
    }
    REQUIRE(n > 1000);
    const double rms = std::sqrt(sq / static_cast<double>(n));
    REQUIRE(rms == Catch::Approx(0.2).epsilon(0.15));
}

TEST_CASE("blinks mark invalid spans at roughly the configured rate") {
    SubjectParams p;
    p.blink_rate_per_min = 6.0;
    p.rng_seed = 5;
    SyntheticRecording syn = generate_recording(p, 120.0, 90.0, "s");
    int blinks = 0;
    for (std::size_t i = 1; i < syn.recording.valid.size(); ++i)
        if (!syn.recording.valid[i] && syn.recording.valid[i - 1])
            ++blinks;
    // Poisson with mean 12 over two minutes; allow a wide deterministic band
    REQUIRE(blinks >= 4);
    REQUIRE(blinks <= 24);
    bool any_nan = false;
    for (std::size_t i = 0; i < syn.recording.valid.size(); ++i)
        if (!syn.recording.valid[i])
            any_nan |= std::isnan(syn.recording.x_deg[i]);
    REQUIRE(any_nan);
}

TEST_CASE("undershoot produces corrective saccades") {
    SubjectParams p;
    p.undershoot_prob = 0.25; // validation ceiling: every saccade undershoots
    p.blink_rate_per_min = 0.0;
    p.fixation_noise_rms_deg = 0.05;
    p.rng_seed = 8;
    SyntheticRecording with = generate_recording(p, 60.0, 90.0, "s");
    p.undershoot_prob = 0.0;
    SyntheticRecording without = generate_recording(p, 60.0, 90.0, "s");

    auto count_saccades = [](const SyntheticRecording& syn) {
        int c = 0;
        for (const auto& s : segment(syn.true_labels, syn.recording))
            if (s.cls == EventClass::SACCADE)
                ++c;
        return c;
    };
    REQUIRE(count_saccades(with) > count_saccades(without));
}

TEST_CASE("generator rejects bad durations") {
    SubjectParams p;
    REQUIRE_THROWS_AS(generate_recording(p, 2.0, 90.0), ConfigError);
}

TEST_CASE("synthetic recordings survive the io pipeline") {
    SubjectParams p = sample_subject_params(14);
    SyntheticRecording syn = generate_recording(p, 10.0, 90.0, "s14");
    // the full feature path accepts generator output
    KinematicSeries kin = compute_kinematics(syn.recording);
    FeatureSeries f = make_features(kin, FeatureSet::VEL_HEADING_4);
    auto windows = build_windows(f, syn.recording, syn.true_labels, 12, 4);
    REQUIRE_FALSE(windows.empty());
}
