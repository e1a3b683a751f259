#pragma once
// Report emission. CSV files are the source of truth; SVG plots mirror them
// and are optional. All numeric output uses %.9g so identical inputs produce
// byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/evaluation.hpp"
#include "gazepred/training.hpp"

namespace gazepred {

inline constexpr const char* kReportBins[6] = {"full",      "fix_short", "fix_long",
                                               "sac_small", "sac_large", "cep"};

namespace detail {

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path + " for writing");
    return f;
}

} // namespace detail

inline void write_cdf_csv(const std::string& path, const std::vector<CdfPoint>& curve,
                          const std::string& note = "") {
    auto f = detail::open_out(path);
    if (!note.empty())
        f << "# " << note << '\n';
    f << "error_deg,fraction\n";
    for (const auto& p : curve)
        f << detail::fmt_g(p.error_deg) << ',' << detail::fmt_g(p.fraction) << '\n';
    if (!f)
        throw IoError("write failed for " + path);
}

inline void write_profiles_csv(const std::string& path,
                               const std::vector<SubjectProfile>& profiles) {
    auto f = detail::open_out(path);
    f << "subject_id,event_type,p50_median_deg,p95_median_deg,n_events\n";
    for (const auto& p : profiles) {
        const SubjectProfile::Cell* cells[4] = {&p.fixation, &p.cep, &p.sac_small, &p.sac_large};
        for (int k = 0; k < 4; ++k) {
            if (!cells[k]->present)
                continue;
            f << p.subject_id << ',' << kProfileEventTypes[k] << ','
              << detail::fmt_g(cells[k]->p50_median_deg) << ','
              << detail::fmt_g(cells[k]->p95_median_deg) << ',' << cells[k]->n_events << '\n';
        }
    }
    if (!f)
        throw IoError("write failed for " + path);
}

inline void write_boxplots_csv(const std::string& path,
                               const std::vector<std::pair<std::string, BoxStats>>& rows) {
    auto f = detail::open_out(path);
    f << "bin,n,mean,q1,median,q3,whisker_lo,whisker_hi,outliers\n";
    for (const auto& [bin, b] : rows)
        f << bin << ',' << b.n << ',' << detail::fmt_g(b.mean) << ',' << detail::fmt_g(b.q1) << ','
          << detail::fmt_g(b.median) << ',' << detail::fmt_g(b.q3) << ','
          << detail::fmt_g(b.whisker_lo) << ',' << detail::fmt_g(b.whisker_hi) << ','
          << b.outliers << '\n';
    if (!f)
        throw IoError("write failed for " + path);
}

inline void write_bench_csv(const std::string& path, const std::string& model,
                            const std::string& input_shape, const BenchResult& bench,
                            std::int64_t macs, std::int64_t params) {
    auto f = detail::open_out(path);
    f << "model,input_shape,mean_ms,std_ms,macs,params\n";
    f << model << ',' << input_shape << ',' << detail::fmt_g(bench.mean_ms) << ','
      << detail::fmt_g(bench.std_ms) << ',' << macs << ',' << params << '\n';
    if (!f)
        throw IoError("write failed for " + path);
}

inline void write_history_csv(const std::string& path, const TrainHistory& hist) {
    auto f = detail::open_out(path);
    f << "epoch,train_loss,val_loss,seconds\n";
    for (std::size_t e = 0; e < hist.train_loss.size(); ++e)
        f << (e + 1) << ',' << detail::fmt_g(hist.train_loss[e]) << ','
          << detail::fmt_g(hist.val_loss[e]) << ',' << detail::fmt_g(hist.seconds[e]) << '\n';
    if (!f)
        throw IoError("write failed for " + path);
}

// ------------------------------------------------------------------- plots

namespace detail {

struct Series {
    std::string label;
    std::vector<CdfPoint> points;
};

inline const char* series_color(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf"};
    return colors[i % 7];
}

inline void write_line_svg(const std::string& path, const std::string& title,
                           const std::vector<Series>& series) {
    const double w = 640, h = 420, ml = 60, mr = 150, mt = 40, mb = 50;
    double xmax = 1e-9;
    for (const auto& s : series)
        for (const auto& p : s.points)
            xmax = std::max(xmax, p.error_deg);
    auto px = [&](double x) { return ml + (w - ml - mr) * (x / xmax); };
    auto py = [&](double y) { return h - mb - (h - mt - mb) * y; };
    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    f << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
    f << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\""
      << h - mt - mb << "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (int g = 0; g <= 4; ++g) {
        const double fr = g / 4.0;
        f << "<text x=\"" << ml - 8 << "\" y=\"" << py(fr) + 4
          << "\" text-anchor=\"end\">" << fmt_g(fr) << "</text>\n";
        f << "<text x=\"" << px(fr * xmax) << "\" y=\"" << h - mb + 18
          << "\" text-anchor=\"middle\">" << fmt_g(fr * xmax) << "</text>\n";
    }
    f << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\">error (deg)</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        f << "<polyline fill=\"none\" stroke=\"" << series_color(i) << "\" points=\"";
        for (const auto& p : series[i].points)
            f << fmt_g(px(p.error_deg)) << ',' << fmt_g(py(p.fraction)) << ' ';
        f << "\"/>\n";
        f << "<text x=\"" << w - mr + 10 << "\" y=\"" << mt + 16 + 16 * static_cast<double>(i)
          << "\" fill=\"" << series_color(i) << "\">" << series[i].label << "</text>\n";
    }
    f << "</svg>\n";
}

inline void write_box_svg(const std::string& path, const std::string& title,
                          const std::vector<std::pair<std::string, BoxStats>>& rows) {
    const double w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 70;
    double ymax = 1e-9;
    for (const auto& [name, b] : rows)
        ymax = std::max(ymax, b.whisker_hi);
    auto py = [&](double y) { return h - mb - (h - mt - mb) * (y / ymax); };
    const double slot = (w - ml - mr) / static_cast<double>(rows.size());
    auto f = open_out(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    f << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
    for (int g = 0; g <= 4; ++g) {
        const double v = ymax * g / 4.0;
        f << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
          << fmt_g(v) << "</text>\n";
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& b = rows[i].second;
        const double cx = ml + slot * (static_cast<double>(i) + 0.5);
        const double bw = slot * 0.5;
        f << "<line x1=\"" << cx << "\" y1=\"" << py(b.whisker_lo) << "\" x2=\"" << cx
          << "\" y2=\"" << py(b.whisker_hi) << "\" stroke=\"#333\"/>\n";
        f << "<rect x=\"" << cx - bw / 2 << "\" y=\"" << py(b.q3) << "\" width=\"" << bw
          << "\" height=\"" << py(b.q1) - py(b.q3)
          << "\" fill=\"#9ecae1\" stroke=\"#333\"/>\n";
        f << "<line x1=\"" << cx - bw / 2 << "\" y1=\"" << py(b.median) << "\" x2=\""
          << cx + bw / 2 << "\" y2=\"" << py(b.median) << "\" stroke=\"#d62728\"/>\n";
        f << "<text x=\"" << cx << "\" y=\"" << py(b.mean) + 4
          << "\" text-anchor=\"middle\" fill=\"#333\">x</text>\n";
        f << "<text x=\"" << cx << "\" y=\"" << h - mb + 18
          << "\" text-anchor=\"middle\" transform=\"rotate(30 " << cx << ' ' << h - mb + 18
          << ")\">" << rows[i].first << "</text>\n";
    }
    f << "</svg>\n";
}

} // namespace detail

// --------------------------------------------------- evaluation report body

struct SubjectEvaluation {
    ErrorSeries errors;
    std::vector<EventSegment> segments;
    std::vector<CepSegment> ceps;
};

struct ReportOptions {
    int cdf_points = 200;
    double fixation_split_ms = 400.0;
    double saccade_split_deg = 2.0;
    bool plots = false;
};

// Writes every evaluation artifact into out_dir and returns the file list.
inline std::vector<std::string> write_evaluation_report(const std::string& out_dir,
                                                        const std::vector<SubjectEvaluation>& subjects,
                                                        const ReportOptions& opt) {
    std::vector<std::string> written;
    auto emit_cdf = [&](const std::string& name, const std::vector<double>& values,
                        const std::string& note) {
        const std::string path = out_dir + "/" + name + ".csv";
        if (values.empty())
            write_cdf_csv(path, {}, note.empty() ? "no samples in this bin" : note);
        else
            write_cdf_csv(path, cdf_curve(values, opt.cdf_points), note);
        written.push_back(path);
    };

    // sample-level bins pooled over subjects
    BinnedSampleErrors bins;
    std::vector<EventErrorSummary> summaries;
    std::vector<double> p95_1s; // full-signal per-1-second-window p95
    for (const auto& s : subjects) {
        auto b = collect_sample_bins(s.errors, s.segments, s.ceps, opt.fixation_split_ms,
                                     opt.saccade_split_deg);
        auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
            dst.insert(dst.end(), src.begin(), src.end());
        };
        append(bins.full, b.full);
        append(bins.fix_short, b.fix_short);
        append(bins.fix_long, b.fix_long);
        append(bins.sac_small, b.sac_small);
        append(bins.sac_large, b.sac_large);
        append(bins.cep, b.cep);
        auto es = event_summaries(s.errors, s.segments, s.ceps);
        summaries.insert(summaries.end(), es.begin(), es.end());

        const auto spw = static_cast<std::int64_t>(std::lround(s.errors.sample_rate_hz));
        std::map<std::int64_t, std::vector<double>> windows_1s;
        for (const auto& e : s.errors.samples)
            windows_1s[e.target_index / spw].push_back(e.error_deg);
        for (auto& [k, vals] : windows_1s)
            p95_1s.push_back(percentile(vals, 95.0));
    }

    const std::vector<double>* sample_bins[6] = {&bins.full,      &bins.fix_short,
                                                 &bins.fix_long,  &bins.sac_small,
                                                 &bins.sac_large, &bins.cep};
    for (int i = 0; i < 6; ++i)
        emit_cdf(std::string("cdf_") + kReportBins[i], *sample_bins[i], "");

    // event-level p95 values per bin
    std::vector<double> p95_by_bin[6];
    p95_by_bin[0] = p95_1s;
    for (const auto& s : summaries) {
        if (s.kind == EventKind::FIXATION)
            p95_by_bin[s.duration_ms <= opt.fixation_split_ms ? 1 : 2].push_back(s.p95_deg);
        else if (s.kind == EventKind::SACCADE)
            p95_by_bin[s.amplitude_deg <= opt.saccade_split_deg ? 3 : 4].push_back(s.p95_deg);
        else
            p95_by_bin[5].push_back(s.p95_deg);
    }
    for (int i = 0; i < 6; ++i)
        emit_cdf(std::string("cdf_p95_") + kReportBins[i], p95_by_bin[i],
                 i == 0 ? "p95 per non-overlapping 1-second window of the full signal"
                        : "p95 per event");

    // subject profiles
    auto profiles = subject_profiles(summaries, opt.saccade_split_deg);
    const std::string profiles_path = out_dir + "/profiles.csv";
    write_profiles_csv(profiles_path, profiles);
    written.push_back(profiles_path);

    // boxplots: standard bins plus amplitude-resolved saccades [0,2], (2,10], (10,inf)
    std::vector<double> sac_2_10, sac_10_inf;
    for (const auto& s : subjects) {
        if (s.segments.empty())
            continue;
        std::vector<const EventSegment*> seg_of(
            static_cast<std::size_t>(s.segments.back().end_idx + 1), nullptr);
        for (const auto& seg : s.segments)
            for (std::int64_t t = seg.start_idx; t <= seg.end_idx; ++t)
                seg_of[static_cast<std::size_t>(t)] = &seg;
        for (const auto& e : s.errors.samples) {
            const auto ti = static_cast<std::size_t>(e.target_index);
            const EventSegment* seg = ti < seg_of.size() ? seg_of[ti] : nullptr;
            if (!seg || seg->cls != EventClass::SACCADE)
                continue;
            if (seg->amplitude_deg > opt.saccade_split_deg && seg->amplitude_deg <= 10.0)
                sac_2_10.push_back(e.error_deg);
            else if (seg->amplitude_deg > 10.0)
                sac_10_inf.push_back(e.error_deg);
        }
    }
    std::vector<std::pair<std::string, BoxStats>> box_rows;
    auto add_box = [&](const std::string& name, const std::vector<double>& vals) {
        if (!vals.empty())
            box_rows.emplace_back(name, boxplot_stats(vals));
    };
    add_box("full", bins.full);
    add_box("fix_short", bins.fix_short);
    add_box("fix_long", bins.fix_long);
    add_box("cep", bins.cep);
    add_box("sac_0_2", bins.sac_small);
    add_box("sac_2_10", sac_2_10);
    add_box("sac_10_inf", sac_10_inf);
    const std::string box_path = out_dir + "/boxplots.csv";
    write_boxplots_csv(box_path, box_rows);
    written.push_back(box_path);

    if (opt.plots) {
        std::vector<detail::Series> cdf_series, p95_series;
        for (int i = 0; i < 6; ++i) {
            if (!sample_bins[i]->empty())
                cdf_series.push_back({kReportBins[i], cdf_curve(*sample_bins[i], opt.cdf_points)});
            if (!p95_by_bin[i].empty())
                p95_series.push_back({kReportBins[i], cdf_curve(p95_by_bin[i], opt.cdf_points)});
        }
        const std::string cdf_svg = out_dir + "/cdf.svg";
        detail::write_line_svg(cdf_svg, "prediction error CDF", cdf_series);
        written.push_back(cdf_svg);
        const std::string p95_svg = out_dir + "/cdf_p95.svg";
        detail::write_line_svg(p95_svg, "event-level p95 CDF", p95_series);
        written.push_back(p95_svg);
        if (!box_rows.empty()) {
            const std::string bsvg = out_dir + "/boxplots.svg";
            detail::write_box_svg(bsvg, "error by event bin", box_rows);
            written.push_back(bsvg);
        }
    }
    return written;
}

} // namespace gazepred
