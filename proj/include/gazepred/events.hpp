#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gazepred/csv.hpp"
#include "gazepred/error.hpp"
#include "gazepred/signal.hpp"

namespace gazepred {

enum class EventClass : int { FIXATION = 0, SACCADE = 1, OTHER = 2, INVALID = 3 };

inline const char* event_class_name(EventClass c) {
    switch (c) {
    case EventClass::FIXATION: return "fixation";
    case EventClass::SACCADE: return "saccade";
    case EventClass::OTHER: return "other";
    default: return "invalid";
    }
}

struct EventSegment {
    EventClass cls = EventClass::OTHER;
    std::int64_t start_idx = 0;
    std::int64_t end_idx = 0; // inclusive
    double duration_ms = 0.0; // (end_idx - start_idx) * 1000 / fs
    double amplitude_deg = 0.0;
    std::string subject_id;

    std::int64_t length() const { return end_idx - start_idx + 1; }
};

struct CepSegment {
    int source_segment = -1; // index into the segment list
    std::int64_t start_idx = 0;
    std::int64_t end_idx = 0; // inclusive
    double cep_ms = 110.0;
};

struct ClassifierParams {
    double onset_threshold_dps = 70.0;
    double offset_threshold_dps = 30.0;
    double min_saccade_ms = 22.0;
    double min_fixation_ms = 55.0;
    double merge_gap_ms = 22.0;

    void validate() const {
        if (onset_threshold_dps <= 0 || offset_threshold_dps <= 0 || min_saccade_ms <= 0 ||
            min_fixation_ms <= 0 || merge_gap_ms <= 0)
            throw ConfigError("classifier thresholds must be positive");
        if (onset_threshold_dps <= offset_threshold_dps)
            throw ConfigError("hysteresis requires onset threshold (" +
                              std::to_string(onset_threshold_dps) + ") > offset threshold (" +
                              std::to_string(offset_threshold_dps) + ")");
    }
};

// ---------------------------------------------------------------- classification

// Velocity hysteresis: a saccade core opens where speed > onset and extends
// in both directions while speed > offset. Duration minima are applied to
// run length * sample interval.
inline std::vector<int> classify_events(const KinematicSeries& kin, const GazeRecording& rec,
                                        const ClassifierParams& params) {
    params.validate();
    const std::int64_t n = kin.size();
    if (n != rec.size())
        throw ShapeError("kinematics length " + std::to_string(n) + " vs recording length " +
                         std::to_string(rec.size()));
    const double dt_ms = 1000.0 / rec.sample_rate_hz;
    const int kFix = static_cast<int>(EventClass::FIXATION);
    const int kSac = static_cast<int>(EventClass::SACCADE);
    const int kOther = static_cast<int>(EventClass::OTHER);
    const int kInvalid = static_cast<int>(EventClass::INVALID);

    std::vector<int> labels(static_cast<std::size_t>(n), kFix);
    for (std::int64_t t = 0; t < n; ++t)
        if (!kin.valid[static_cast<std::size_t>(t)])
            labels[static_cast<std::size_t>(t)] = kInvalid;

    // saccade cores + hysteresis extension
    for (std::int64_t t = 0; t < n; ++t) {
        if (labels[static_cast<std::size_t>(t)] != kFix ||
            kin.speed_dps[static_cast<std::size_t>(t)] <= params.onset_threshold_dps)
            continue;
        std::int64_t lo = t, hi = t;
        while (lo > 0 && labels[static_cast<std::size_t>(lo - 1)] != kInvalid &&
               kin.speed_dps[static_cast<std::size_t>(lo - 1)] > params.offset_threshold_dps)
            --lo;
        while (hi < n - 1 && labels[static_cast<std::size_t>(hi + 1)] != kInvalid &&
               kin.speed_dps[static_cast<std::size_t>(hi + 1)] > params.offset_threshold_dps)
            ++hi;
        for (std::int64_t i = lo; i <= hi; ++i)
            labels[static_cast<std::size_t>(i)] = kSac;
    }

    auto relabel_short_runs = [&](int from, int to, double min_ms) {
        std::int64_t t = 0;
        while (t < n) {
            if (labels[static_cast<std::size_t>(t)] != from) {
                ++t;
                continue;
            }
            std::int64_t e = t;
            while (e + 1 < n && labels[static_cast<std::size_t>(e + 1)] == from)
                ++e;
            if (static_cast<double>(e - t + 1) * dt_ms < min_ms)
                for (std::int64_t i = t; i <= e; ++i)
                    labels[static_cast<std::size_t>(i)] = to;
            t = e + 1;
        }
    };
    relabel_short_runs(kSac, kOther, params.min_saccade_ms);
    relabel_short_runs(kFix, kOther, params.min_fixation_ms);

    // merge fixations across OTHER gaps no longer than merge_gap_ms
    std::int64_t t = 0;
    while (t < n) {
        if (labels[static_cast<std::size_t>(t)] != kOther) {
            ++t;
            continue;
        }
        std::int64_t e = t;
        while (e + 1 < n && labels[static_cast<std::size_t>(e + 1)] == kOther)
            ++e;
        const bool fix_before = t > 0 && labels[static_cast<std::size_t>(t - 1)] == kFix;
        const bool fix_after = e < n - 1 && labels[static_cast<std::size_t>(e + 1)] == kFix;
        if (fix_before && fix_after && static_cast<double>(e - t + 1) * dt_ms <= params.merge_gap_ms)
            for (std::int64_t i = t; i <= e; ++i)
                labels[static_cast<std::size_t>(i)] = kFix;
        t = e + 1;
    }
    return labels;
}

// ---------------------------------------------------------------- segmentation

inline std::vector<EventSegment> segment(const std::vector<int>& labels,
                                         const GazeRecording& rec) {
    const std::int64_t n = static_cast<std::int64_t>(labels.size());
    if (n != rec.size())
        throw ShapeError("labels length " + std::to_string(n) + " vs recording length " +
                         std::to_string(rec.size()));
    std::vector<EventSegment> out;
    std::int64_t t = 0;
    while (t < n) {
        std::int64_t e = t;
        while (e + 1 < n && labels[static_cast<std::size_t>(e + 1)] == labels[static_cast<std::size_t>(t)])
            ++e;
        EventSegment seg;
        seg.cls = static_cast<EventClass>(labels[static_cast<std::size_t>(t)]);
        seg.start_idx = t;
        seg.end_idx = e;
        seg.duration_ms = static_cast<double>(e - t) * 1000.0 / rec.sample_rate_hz;
        seg.subject_id = rec.subject_id;
        if (seg.cls == EventClass::SACCADE) {
            const double dx = rec.x_deg[static_cast<std::size_t>(e)] -
                              rec.x_deg[static_cast<std::size_t>(t)];
            const double dy = rec.y_deg[static_cast<std::size_t>(e)] -
                              rec.y_deg[static_cast<std::size_t>(t)];
            seg.amplitude_deg = std::sqrt(dx * dx + dy * dy);
        }
        out.push_back(std::move(seg));
        t = e + 1;
    }
    return out;
}

// ---------------------------------------------------------------- CEP extraction

// One CEP per saccade that has following samples: indices strictly after the
// offset whose time distance stays within cep_ms, truncated at the next
// saccade onset or the recording end.
inline std::vector<CepSegment> extract_ceps(const std::vector<EventSegment>& segments, double fs,
                                            double cep_ms = 110.0) {
    const double dt_ms = 1000.0 / fs;
    std::vector<CepSegment> out;
    if (segments.empty())
        return out;
    const std::int64_t n = segments.back().end_idx + 1;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (segments[s].cls != EventClass::SACCADE)
            continue;
        const std::int64_t off = segments[s].end_idx;
        std::int64_t limit = n - 1;
        for (std::size_t next = s + 1; next < segments.size(); ++next)
            if (segments[next].cls == EventClass::SACCADE) {
                limit = segments[next].start_idx - 1;
                break;
            }
        std::int64_t last = off + static_cast<std::int64_t>(std::floor(cep_ms / dt_ms + 1e-9));
        last = std::min(last, limit);
        if (last <= off)
            continue;
        CepSegment cep;
        cep.source_segment = static_cast<int>(s);
        cep.start_idx = off + 1;
        cep.end_idx = last;
        cep.cep_ms = cep_ms;
        out.push_back(cep);
    }
    return out;
}

// ---------------------------------------------------------------- binning

struct BinnedEvents {
    std::vector<EventSegment> fixations_short;
    std::vector<EventSegment> fixations_long;
    std::vector<EventSegment> saccades_small;
    std::vector<EventSegment> saccades_large;
};

// Boundary values land in the lower bin.
inline BinnedEvents bin_events(const std::vector<EventSegment>& segments,
                               double fixation_split_ms = 400.0,
                               double saccade_split_deg = 2.0) {
    BinnedEvents bins;
    for (const auto& seg : segments) {
        if (seg.cls == EventClass::FIXATION) {
            (seg.duration_ms <= fixation_split_ms ? bins.fixations_short : bins.fixations_long)
                .push_back(seg);
        } else if (seg.cls == EventClass::SACCADE) {
            (seg.amplitude_deg <= saccade_split_deg ? bins.saccades_small : bins.saccades_large)
                .push_back(seg);
        }
    }
    return bins;
}

// ---------------------------------------------------------------- label I/O

inline void save_labels(const std::vector<int>& labels, const std::string& path) {
    csv::Writer w(path);
    w.row({"idx", "class"});
    for (std::size_t i = 0; i < labels.size(); ++i)
        w.row({std::to_string(i), std::to_string(labels[i])});
    w.close();
}

inline std::vector<int> load_labels(const std::string& path) {
    csv::Table t = csv::read_table(path);
    if (t.header.size() != 2 || t.header[0] != "idx" || t.header[1] != "class")
        throw FormatError(path + ": expected header idx,class");
    std::vector<int> labels;
    labels.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int cls = std::stoi(t.rows[r][1]);
        if (cls < 0 || cls > 3)
            throw DataError(path + ": class " + std::to_string(cls) + " out of range at row " +
                            std::to_string(r + 1));
        if (std::stoll(t.rows[r][0]) != static_cast<long long>(r))
            throw DataError(path + ": non-contiguous idx at row " + std::to_string(r + 1));
        labels.push_back(cls);
    }
    return labels;
}

} // namespace gazepred
