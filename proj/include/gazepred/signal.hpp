#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gazepred/csv.hpp"
#include "gazepred/error.hpp"
#include "gazepred/tensor.hpp"

namespace gazepred {

struct GazeRecording {
    std::string subject_id;
    std::string task_id;
    double sample_rate_hz = 90.0;
    std::vector<double> t_ms;
    std::vector<double> x_deg;
    std::vector<double> y_deg;
    std::vector<std::uint8_t> valid;

    std::int64_t size() const { return static_cast<std::int64_t>(t_ms.size()); }
};

struct KinematicSeries {
    std::vector<double> vx_dps;
    std::vector<double> vy_dps;
    std::vector<double> speed_dps;
    std::vector<double> heading_rad;
    // false where the sample or a neighbor is invalid; velocities are 0 there
    std::vector<std::uint8_t> valid;

    std::int64_t size() const { return static_cast<std::int64_t>(vx_dps.size()); }
};

enum class FeatureSet { VEL_HEADING_3 = 3, VEL_HEADING_4 = 4 };

inline int feature_channels(FeatureSet fs) { return static_cast<int>(fs); }

inline std::string feature_set_name(FeatureSet fs) {
    return fs == FeatureSet::VEL_HEADING_3 ? "vel_heading_3" : "vel_heading_4";
}

inline FeatureSet parse_feature_set(const std::string& s) {
    if (s == "vel_heading_3")
        return FeatureSet::VEL_HEADING_3;
    if (s == "vel_heading_4")
        return FeatureSet::VEL_HEADING_4;
    throw ConfigError("unknown feature_set '" + s + "'");
}

struct Normalization {
    std::vector<double> mean;
    std::vector<double> std_dev;

    bool empty() const { return mean.empty(); }
};

struct FeatureSeries {
    FeatureSet feature_set = FeatureSet::VEL_HEADING_3;
    // [n_channels, n_samples], row-major
    std::vector<double> channels;
    std::int64_t n_samples = 0;
    std::vector<std::uint8_t> valid; // kinematic validity, copied from the source series
    Normalization normalization;     // populated once apply_normalization has run

    int n_channels() const { return feature_channels(feature_set); }
    double& at(int c, std::int64_t t) { return channels[static_cast<std::size_t>(c) * n_samples + t]; }
    double at(int c, std::int64_t t) const {
        return channels[static_cast<std::size_t>(c) * n_samples + t];
    }
};

struct WindowSample {
    Tensor<float> features;      // [n_channels, window_len]
    Tensor<float> target_deltas; // [pi_samples, 2]
    std::vector<int> target_labels;
    std::vector<int> input_labels; // event classes over the input span
    std::int64_t anchor_index = 0;
    std::string subject_id;
};

struct WindowDataset {
    std::vector<WindowSample> samples;
    FeatureSet feature_set = FeatureSet::VEL_HEADING_3;
    int window_len = 0;
    int pi_samples = 0;

    std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }
};

// ---------------------------------------------------------------- recording I/O

// Format: subject_id,task_id,t_ms,x_deg,y_deg,valid. Rows with valid=0 or a
// non-finite position are kept with valid=false.
inline GazeRecording load_recording(const std::string& path, double sample_rate_hz) {
    csv::Table table = csv::read_table(path);
    static const char* kCols[6] = {"subject_id", "task_id", "t_ms", "x_deg", "y_deg", "valid"};
    if (table.header.size() != 6)
        throw FormatError(path + ": expected 6 columns, got " +
                          std::to_string(table.header.size()));
    for (int i = 0; i < 6; ++i)
        if (table.header[static_cast<std::size_t>(i)] != kCols[i])
            throw FormatError(path + ": column " + std::to_string(i + 1) + " is '" +
                              table.header[static_cast<std::size_t>(i)] + "', expected '" +
                              kCols[i] + "'");
    if (table.rows.size() < 2)
        throw DataError(path + ": recording needs at least 2 samples, got " +
                        std::to_string(table.rows.size()));

    GazeRecording rec;
    rec.sample_rate_hz = sample_rate_hz;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != 6)
            throw FormatError(path + ": row " + std::to_string(r + 1) + " has " +
                              std::to_string(row.size()) + " fields");
        if (r == 0) {
            rec.subject_id = row[0];
            rec.task_id = row[1];
        } else if (row[0] != rec.subject_id || row[1] != rec.task_id) {
            throw DataError(path + ": row " + std::to_string(r + 1) +
                            " changes subject or task id");
        }
        double t = std::stod(row[2]);
        bool v = row[5] == "1";
        double x = row[3].empty() ? nan : std::stod(row[3]);
        double y = row[4].empty() ? nan : std::stod(row[4]);
        if (!std::isfinite(x) || !std::isfinite(y))
            v = false;
        if (!rec.t_ms.empty() && t <= rec.t_ms.back())
            throw DataError(path + ": t_ms not increasing at row " + std::to_string(r + 1));
        rec.t_ms.push_back(t);
        rec.x_deg.push_back(x);
        rec.y_deg.push_back(y);
        rec.valid.push_back(v ? 1 : 0);
    }

    std::vector<double> gaps;
    for (std::size_t i = 1; i < rec.t_ms.size(); ++i)
        gaps.push_back(rec.t_ms[i] - rec.t_ms[i - 1]);
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    const double median_gap = gaps[gaps.size() / 2];
    const double nominal = 1000.0 / sample_rate_hz;
    if (std::abs(median_gap - nominal) > 0.2 * nominal)
        throw DataError(path + ": median sample interval " + std::to_string(median_gap) +
                        " ms is more than 20% off the nominal " + std::to_string(nominal) +
                        " ms");
    return rec;
}

inline void save_recording(const GazeRecording& rec, const std::string& path) {
    csv::Writer w(path);
    w.row({"subject_id", "task_id", "t_ms", "x_deg", "y_deg", "valid"});
    for (std::int64_t i = 0; i < rec.size(); ++i) {
        const bool v = rec.valid[static_cast<std::size_t>(i)] != 0;
        w.row({rec.subject_id, rec.task_id, csv::fmt(rec.t_ms[static_cast<std::size_t>(i)], 4),
               v ? csv::fmt(rec.x_deg[static_cast<std::size_t>(i)], 6) : "",
               v ? csv::fmt(rec.y_deg[static_cast<std::size_t>(i)], 6) : "", v ? "1" : "0"});
    }
    w.close();
}

// ---------------------------------------------------------------- kinematics

// Central differences inside, one-sided at the recording ends; samples that
// are invalid or touch an invalid neighbor get zero velocity and valid=false.
inline KinematicSeries differentiate(const GazeRecording& rec) {
    const std::int64_t n = rec.size();
    const double fs = rec.sample_rate_hz;
    KinematicSeries kin;
    kin.vx_dps.assign(static_cast<std::size_t>(n), 0.0);
    kin.vy_dps.assign(static_cast<std::size_t>(n), 0.0);
    kin.speed_dps.assign(static_cast<std::size_t>(n), 0.0);
    kin.heading_rad.assign(static_cast<std::size_t>(n), 0.0);
    kin.valid.assign(static_cast<std::size_t>(n), 0);

    std::int64_t longest_run = 0, run = 0;
    for (std::int64_t t = 0; t < n; ++t) {
        run = rec.valid[static_cast<std::size_t>(t)] ? run + 1 : 0;
        longest_run = std::max(longest_run, run);
    }
    if (longest_run < 3)
        throw DataError("recording has no span of 3 consecutive valid samples");

    auto ok = [&](std::int64_t t) {
        return t >= 0 && t < n && rec.valid[static_cast<std::size_t>(t)] != 0;
    };
    for (std::int64_t t = 0; t < n; ++t) {
        if (!ok(t) || (t > 0 && !ok(t - 1)) || (t < n - 1 && !ok(t + 1)))
            continue;
        double vx, vy;
        if (t == 0) {
            vx = (rec.x_deg[1] - rec.x_deg[0]) * fs;
            vy = (rec.y_deg[1] - rec.y_deg[0]) * fs;
        } else if (t == n - 1) {
            vx = (rec.x_deg[static_cast<std::size_t>(n - 1)] -
                  rec.x_deg[static_cast<std::size_t>(n - 2)]) *
                 fs;
            vy = (rec.y_deg[static_cast<std::size_t>(n - 1)] -
                  rec.y_deg[static_cast<std::size_t>(n - 2)]) *
                 fs;
        } else {
            vx = (rec.x_deg[static_cast<std::size_t>(t + 1)] -
                  rec.x_deg[static_cast<std::size_t>(t - 1)]) *
                 fs / 2.0;
            vy = (rec.y_deg[static_cast<std::size_t>(t + 1)] -
                  rec.y_deg[static_cast<std::size_t>(t - 1)]) *
                 fs / 2.0;
        }
        kin.vx_dps[static_cast<std::size_t>(t)] = vx;
        kin.vy_dps[static_cast<std::size_t>(t)] = vy;
        kin.speed_dps[static_cast<std::size_t>(t)] = std::sqrt(vx * vx + vy * vy);
        kin.valid[static_cast<std::size_t>(t)] = 1;
    }
    return kin;
}

// atan2 of the velocity where speed clears the epsilon, carried forward
// (starting at 0) where it does not.
inline void fill_heading(KinematicSeries& kin, double low_speed_eps_dps = 1.0) {
    double last = 0.0;
    for (std::size_t t = 0; t < kin.speed_dps.size(); ++t) {
        if (kin.valid[t] && kin.speed_dps[t] >= low_speed_eps_dps)
            last = std::atan2(kin.vy_dps[t], kin.vx_dps[t]);
        kin.heading_rad[t] = last;
    }
}

inline KinematicSeries compute_kinematics(const GazeRecording& rec,
                                          double low_speed_eps_dps = 1.0) {
    KinematicSeries kin = differentiate(rec);
    fill_heading(kin, low_speed_eps_dps);
    return kin;
}

// ---------------------------------------------------------------- features

inline FeatureSeries make_features(const KinematicSeries& kin, FeatureSet fs) {
    FeatureSeries f;
    f.feature_set = fs;
    f.n_samples = kin.size();
    f.valid = kin.valid;
    f.channels.assign(static_cast<std::size_t>(f.n_channels()) * f.n_samples, 0.0);
    for (std::int64_t t = 0; t < f.n_samples; ++t) {
        f.at(0, t) = kin.vx_dps[static_cast<std::size_t>(t)];
        f.at(1, t) = kin.vy_dps[static_cast<std::size_t>(t)];
        if (fs == FeatureSet::VEL_HEADING_3) {
            f.at(2, t) = kin.heading_rad[static_cast<std::size_t>(t)];
        } else {
            f.at(2, t) = std::sin(kin.heading_rad[static_cast<std::size_t>(t)]);
            f.at(3, t) = std::cos(kin.heading_rad[static_cast<std::size_t>(t)]);
        }
    }
    return f;
}

// Per-channel mean/std over the kinematically valid samples of the training
// series only.
inline Normalization fit_normalization(const std::vector<const FeatureSeries*>& training) {
    if (training.empty())
        throw DataError("cannot fit normalization on an empty training set");
    const int nc = training.front()->n_channels();
    Normalization norm;
    norm.mean.assign(static_cast<std::size_t>(nc), 0.0);
    norm.std_dev.assign(static_cast<std::size_t>(nc), 0.0);
    std::int64_t count = 0;
    for (const FeatureSeries* f : training) {
        if (f->n_channels() != nc)
            throw ShapeError("mixed channel counts while fitting normalization");
        for (std::int64_t t = 0; t < f->n_samples; ++t) {
            if (!f->valid[static_cast<std::size_t>(t)])
                continue;
            ++count;
            for (int c = 0; c < nc; ++c)
                norm.mean[static_cast<std::size_t>(c)] += f->at(c, t);
        }
    }
    if (count == 0)
        throw DataError("no valid samples while fitting normalization");
    for (int c = 0; c < nc; ++c)
        norm.mean[static_cast<std::size_t>(c)] /= static_cast<double>(count);
    for (const FeatureSeries* f : training)
        for (std::int64_t t = 0; t < f->n_samples; ++t) {
            if (!f->valid[static_cast<std::size_t>(t)])
                continue;
            for (int c = 0; c < nc; ++c) {
                const double d = f->at(c, t) - norm.mean[static_cast<std::size_t>(c)];
                norm.std_dev[static_cast<std::size_t>(c)] += d * d;
            }
        }
    for (int c = 0; c < nc; ++c) {
        double s = std::sqrt(norm.std_dev[static_cast<std::size_t>(c)] /
                             static_cast<double>(count));
        norm.std_dev[static_cast<std::size_t>(c)] = s < 1e-12 ? 1.0 : s;
    }
    return norm;
}

inline void apply_normalization(FeatureSeries& f, const Normalization& norm) {
    if (static_cast<int>(norm.mean.size()) != f.n_channels())
        throw ShapeError("normalization has " + std::to_string(norm.mean.size()) +
                         " channels, features have " + std::to_string(f.n_channels()));
    for (int c = 0; c < f.n_channels(); ++c)
        for (std::int64_t t = 0; t < f.n_samples; ++t)
            f.at(c, t) = (f.at(c, t) - norm.mean[static_cast<std::size_t>(c)]) /
                         norm.std_dev[static_cast<std::size_t>(c)];
    f.normalization = norm;
}

// ---------------------------------------------------------------- windows

// round(pi_ms * fs / 1000), at least 1 sample
inline int pi_to_samples(double pi_ms, double sample_rate_hz) {
    if (pi_ms <= 0.0)
        throw ConfigError("prediction interval must be positive, got " + std::to_string(pi_ms));
    const int k = static_cast<int>(std::lround(pi_ms * sample_rate_hz / 1000.0));
    return std::max(1, k);
}

// One window per anchor t (stride 1) with t >= window_len-1 and
// t + pi_samples < n, spanning only kinematically valid samples. Targets are
// deltas relative to the anchor position.
inline std::vector<WindowSample> build_windows(const FeatureSeries& features,
                                               const GazeRecording& rec,
                                               const std::vector<int>& labels, int window_len,
                                               int pi_samples) {
    if (window_len < 1 || pi_samples < 1)
        throw ConfigError("window_len and pi_samples must be >= 1");
    const std::int64_t n = rec.size();
    if (features.n_samples != n || static_cast<std::int64_t>(labels.size()) != n)
        throw ShapeError("features/labels length " + std::to_string(features.n_samples) + "/" +
                         std::to_string(labels.size()) + " vs recording length " +
                         std::to_string(n));
    const int nc = features.n_channels();
    std::vector<WindowSample> out;
    for (std::int64_t t = window_len - 1; t + pi_samples < n; ++t) {
        bool usable = true;
        for (std::int64_t i = t - window_len + 1; i <= t + pi_samples; ++i)
            if (!features.valid[static_cast<std::size_t>(i)]) {
                usable = false;
                break;
            }
        if (!usable)
            continue;
        WindowSample w;
        w.anchor_index = t;
        w.subject_id = rec.subject_id;
        w.features = Tensor<float>({nc, window_len});
        for (int c = 0; c < nc; ++c)
            for (int j = 0; j < window_len; ++j)
                w.features[static_cast<std::int64_t>(c) * window_len + j] =
                    static_cast<float>(features.at(c, t - window_len + 1 + j));
        w.input_labels.resize(static_cast<std::size_t>(window_len));
        for (int j = 0; j < window_len; ++j)
            w.input_labels[static_cast<std::size_t>(j)] = labels[static_cast<std::size_t>(t - window_len + 1 + j)];
        w.target_deltas = Tensor<float>({pi_samples, 2});
        w.target_labels.resize(static_cast<std::size_t>(pi_samples));
        for (int k = 0; k < pi_samples; ++k) {
            const std::size_t ti = static_cast<std::size_t>(t + k + 1);
            w.target_deltas[2 * k] =
                static_cast<float>(rec.x_deg[ti] - rec.x_deg[static_cast<std::size_t>(t)]);
            w.target_deltas[2 * k + 1] =
                static_cast<float>(rec.y_deg[ti] - rec.y_deg[static_cast<std::size_t>(t)]);
            w.target_labels[static_cast<std::size_t>(k)] = labels[ti];
        }
        out.push_back(std::move(w));
    }
    return out;
}

} // namespace gazepred
