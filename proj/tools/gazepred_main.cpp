// gazepred command-line tool: synthesis, classification, training, evaluation,
// benchmarking, and report rendering.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "gazepred/checkpoint.hpp"
#include "gazepred/error.hpp"
#include "gazepred/evaluation.hpp"
#include "gazepred/events.hpp"
#include "gazepred/manifest.hpp"
#include "gazepred/models.hpp"
#include "gazepred/report.hpp"
#include "gazepred/signal.hpp"
#include "gazepred/synth.hpp"
#include "gazepred/training.hpp"
#include "gazepred/version.hpp"

namespace fs = std::filesystem;
using namespace gazepred;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 1;
    bool plots = false;
};

std::string two_digit_subject(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%02d", i);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory " + dir + ": " + ec.message());
    if (!fs::is_directory(dir))
        throw IoError(dir + " is not a directory");
}

// Reads a flat key = value config file as ordered pairs.
std::vector<std::pair<std::string, std::string>> read_config_pairs(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open config file " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        pairs.emplace_back(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    return pairs;
}

// Assembles the run config: per-arch defaults, then config file, then flags.
RunConfig resolve_run_config(const GlobalOpts& g, const std::string& arch_flag) {
    std::vector<std::pair<std::string, std::string>> pairs;
    if (!g.config_path.empty())
        pairs = read_config_pairs(g.config_path);
    std::string arch_name_str = arch_flag;
    if (arch_name_str.empty())
        for (const auto& [k, v] : pairs)
            if (k == "arch")
                arch_name_str = v;
    if (arch_name_str.empty())
        arch_name_str = "lstm";
    RunConfig cfg;
    cfg.model = default_config(parse_arch(arch_name_str));
    for (const auto& [k, v] : pairs)
        apply_config_key(cfg, k, v);
    cfg.model.arch = parse_arch(arch_name_str);
    return cfg;
}

std::vector<std::pair<std::string, std::string>> config_pairs(const RunConfig& cfg) {
    auto d = [](double v) { return detail::fmt_g(v); };
    std::vector<std::pair<std::string, std::string>> p;
    p.emplace_back("arch", arch_name(cfg.model.arch));
    p.emplace_back("feature_set", feature_set_name(cfg.model.feature_set));
    p.emplace_back("window_len", std::to_string(cfg.model.window_len));
    p.emplace_back("pi_samples", std::to_string(cfg.model.pi_samples));
    p.emplace_back("hidden_size", std::to_string(cfg.model.hidden_size));
    p.emplace_back("n_layers", std::to_string(cfg.model.n_layers));
    p.emplace_back("d_model", std::to_string(cfg.model.d_model));
    p.emplace_back("n_heads", std::to_string(cfg.model.n_heads));
    p.emplace_back("ffn_dim", std::to_string(cfg.model.ffn_dim));
    p.emplace_back("tcn_channels", std::to_string(cfg.model.tcn_channels));
    p.emplace_back("tcn_kernel", std::to_string(cfg.model.tcn_kernel));
    std::string dil;
    for (std::size_t i = 0; i < cfg.model.tcn_dilations.size(); ++i)
        dil += (i ? "," : "") + std::to_string(cfg.model.tcn_dilations[i]);
    p.emplace_back("tcn_dilations", dil);
    p.emplace_back("dropout", d(cfg.model.dropout));
    p.emplace_back("n_classes", std::to_string(cfg.model.n_classes));
    p.emplace_back("lambda_cls", d(cfg.model.lambda_cls));
    p.emplace_back("labels_as_input", cfg.model.labels_as_input ? "true" : "false");
    p.emplace_back("batch_size", std::to_string(cfg.train.batch_size));
    p.emplace_back("lr", d(cfg.train.lr));
    p.emplace_back("epochs", std::to_string(cfg.train.epochs));
    p.emplace_back("seed", std::to_string(cfg.train.seed));
    p.emplace_back("train_fraction", d(cfg.train.train_fraction));
    p.emplace_back("pi_ms", d(cfg.train.pi_ms));
    p.emplace_back("shuffle", cfg.train.shuffle ? "true" : "false");
    return p;
}

bool is_recording_csv(const fs::path& p) {
    if (p.extension() != ".csv")
        return false;
    const std::string stem = p.stem().string();
    if (stem.size() > 7 && stem.substr(stem.size() - 7) == "_labels")
        return false;
    static const char* reserved[] = {"history", "boxplots", "profiles", "bench", "segments"};
    for (const char* r : reserved)
        if (stem == r)
            return false;
    return stem.rfind("cdf_", 0) != 0;
}

std::vector<fs::path> list_recording_files(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw IoError("data directory " + dir + " does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_recording_csv(e.path()))
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError("no recording files in " + dir);
    return files;
}

struct LoadedRecording {
    GazeRecording rec;
    std::vector<int> labels;
    std::string path;
};

std::vector<LoadedRecording> load_dataset(const std::string& dir, double fs_hz,
                                          bool need_labels = true) {
    std::vector<LoadedRecording> out;
    for (const auto& p : list_recording_files(dir)) {
        LoadedRecording lr;
        lr.path = p.string();
        lr.rec = load_recording(lr.path, fs_hz);
        if (need_labels) {
            fs::path lp = p.parent_path() / (p.stem().string() + "_labels.csv");
            if (!fs::exists(lp))
                throw DataError("missing label file " + lp.string() +
                                " (run the classify command or keep synth labels beside the data)");
            lr.labels = load_labels(lp.string());
            if (lr.labels.size() != lr.rec.size())
                throw DataError(lp.string() + ": " + std::to_string(lr.labels.size()) +
                                " labels for " + std::to_string(lr.rec.size()) + " samples");
        }
        out.push_back(std::move(lr));
    }
    return out;
}

FeatureSeries features_for(const GazeRecording& rec, FeatureSet fset) {
    KinematicSeries kin = differentiate(rec);
    fill_heading(kin);
    return make_features(kin, fset);
}

// ----------------------------------------------------------------- commands

int cmd_synth(const GlobalOpts& g, int subjects, double duration_s, double fs_hz,
              const std::string& out_dir) {
    if (subjects < 1)
        throw ConfigError("--subjects must be >= 1, got " + std::to_string(subjects));
    RunManifest man;
    man.command = "synth";
    man.seed = g.seed;
    man.config_path = g.config_path;
    man.started_at = utc_timestamp();
    ensure_dir(out_dir);
    man.effective_config.emplace_back("subjects", std::to_string(subjects));
    man.effective_config.emplace_back("duration_s", detail::fmt_g(duration_s));
    man.effective_config.emplace_back("sample_rate_hz", detail::fmt_g(fs_hz));
    for (int i = 1; i <= subjects; ++i) {
        const std::string sid = two_digit_subject(i);
        SubjectParams params = sample_subject_params(mix_seed(g.seed, 9000 + static_cast<std::uint64_t>(i)));
        SyntheticRecording syn = generate_recording(params, duration_s, fs_hz, sid);
        const std::string rec_path = out_dir + "/" + sid + ".csv";
        const std::string lab_path = out_dir + "/" + sid + "_labels.csv";
        save_recording(syn.recording, rec_path);
        save_labels(syn.true_labels, lab_path);
        man.outputs.push_back(rec_path);
        man.outputs.push_back(lab_path);
    }
    man.finished_at = utc_timestamp();
    write_manifest(out_dir, man);
    std::printf("wrote %d subjects to %s\n", subjects, out_dir.c_str());
    return 0;
}

int cmd_classify(const GlobalOpts& g, const std::string& data_dir, const std::string& out_dir,
                 double fs_hz) {
    RunManifest man;
    man.command = "classify";
    man.seed = g.seed;
    man.config_path = g.config_path;
    man.started_at = utc_timestamp();
    ensure_dir(out_dir);
    ClassifierParams params;
    auto dataset = load_dataset(data_dir, fs_hz, false);
    const std::string seg_path = out_dir + "/segments.csv";
    std::ofstream segf(seg_path, std::ios::binary);
    if (!segf)
        throw IoError("cannot open " + seg_path + " for writing");
    segf << "subject_id,class,start_idx,end_idx,duration_ms,amplitude_deg\n";
    for (const auto& lr : dataset) {
        man.inputs.push_back(lr.path);
        KinematicSeries kin = differentiate(lr.rec);
        fill_heading(kin);
        auto labels = classify_events(kin, lr.rec, params);
        const std::string lab_path = out_dir + "/" + lr.rec.subject_id + "_labels.csv";
        save_labels(labels, lab_path);
        man.outputs.push_back(lab_path);
        for (const auto& seg : segment(labels, lr.rec))
            segf << seg.subject_id << ',' << event_class_name(seg.cls) << ',' << seg.start_idx
                 << ',' << seg.end_idx << ',' << detail::fmt_g(seg.duration_ms) << ','
                 << detail::fmt_g(seg.amplitude_deg) << '\n';
    }
    if (!segf)
        throw IoError("write failed for " + seg_path);
    man.outputs.push_back(seg_path);
    man.finished_at = utc_timestamp();
    write_manifest(out_dir, man);
    std::printf("classified %zu recordings into %s\n", dataset.size(), out_dir.c_str());
    return 0;
}

int cmd_train(const GlobalOpts& g, RunConfig cfg, const std::string& data_dir,
              const std::string& out_dir, double fs_hz) {
    RunManifest man;
    man.command = "train";
    man.seed = g.seed;
    man.config_path = g.config_path;
    man.started_at = utc_timestamp();

    auto dataset = load_dataset(data_dir, fs_hz);
    std::map<std::string, std::vector<const LoadedRecording*>> by_subject;
    for (const auto& lr : dataset) {
        by_subject[lr.rec.subject_id].push_back(&lr);
        man.inputs.push_back(lr.path);
    }
    if (by_subject.size() < 2)
        throw ConfigError("training needs at least 2 subjects, found " +
                          std::to_string(by_subject.size()));

    std::vector<std::string> ids;
    for (const auto& [sid, recs] : by_subject)
        ids.push_back(sid);
    auto [train_side, test_side] = split_subjects(ids, cfg.train.train_fraction, cfg.train.seed);

    // hold out ~10% of training subjects (at least one when possible) for the
    // validation curve; the test side stays untouched until evaluation
    std::vector<std::string> val_ids, core_ids = train_side;
    if (train_side.size() >= 2) {
        Rng vr(mix_seed(cfg.train.seed, 1717));
        std::vector<std::string> shuffled = train_side;
        for (std::size_t i = shuffled.size() - 1; i > 0; --i)
            std::swap(shuffled[i], shuffled[static_cast<std::size_t>(vr.integer(i + 1))]);
        auto n_val = static_cast<std::size_t>(
            std::max<std::int64_t>(1, std::lround(0.1 * static_cast<double>(shuffled.size()))));
        n_val = std::min(n_val, shuffled.size() - 1);
        val_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
        core_ids.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
        std::sort(val_ids.begin(), val_ids.end());
        std::sort(core_ids.begin(), core_ids.end());
    }

    cfg.model.pi_samples = pi_to_samples(cfg.train.pi_ms, fs_hz);

    // features; normalization fitted on core training subjects only
    std::map<std::string, std::vector<FeatureSeries>> feats;
    std::vector<const FeatureSeries*> fit_set;
    for (const auto& [sid, recs] : by_subject)
        for (const auto* lr : recs)
            feats[sid].push_back(features_for(lr->rec, cfg.model.feature_set));
    for (const auto& sid : core_ids)
        for (const auto& f : feats[sid])
            fit_set.push_back(&f);
    Normalization norm = fit_normalization(fit_set);
    for (auto& [sid, fv] : feats)
        for (auto& f : fv)
            apply_normalization(f, norm);

    auto windows_of = [&](const std::vector<std::string>& side) {
        std::vector<WindowSample> out;
        for (const auto& sid : side) {
            const auto& recs = by_subject[sid];
            for (std::size_t r = 0; r < recs.size(); ++r) {
                auto w = build_windows(feats[sid][r], recs[r]->rec, recs[r]->labels,
                                       cfg.model.window_len, cfg.model.pi_samples);
                out.insert(out.end(), std::make_move_iterator(w.begin()),
                           std::make_move_iterator(w.end()));
            }
        }
        return out;
    };
    auto train_windows = windows_of(core_ids);
    auto val_windows = windows_of(val_ids);

    auto model = build_forecaster<float>(cfg.model, cfg.train.seed);
    TrainHistory hist = train(*model, train_windows, val_windows, cfg.train);

    ensure_dir(out_dir);
    const std::string ckpt_path = out_dir + "/model.ckpt";
    const std::string hist_path = out_dir + "/history.csv";
    const std::string split_path = out_dir + "/split.txt";
    save_checkpoint(ckpt_path, *model, norm, cfg.train.seed);
    write_history_csv(hist_path, hist);
    {
        std::ofstream sf(split_path, std::ios::binary);
        if (!sf)
            throw IoError("cannot open " + split_path + " for writing");
        for (const auto& sid : core_ids)
            sf << "train " << sid << '\n';
        for (const auto& sid : val_ids)
            sf << "val " << sid << '\n';
        for (const auto& sid : test_side)
            sf << "test " << sid << '\n';
        if (!sf)
            throw IoError("write failed for " + split_path);
    }
    man.outputs = {ckpt_path, hist_path, split_path};
    man.effective_config = config_pairs(cfg);
    man.finished_at = utc_timestamp();
    write_manifest(out_dir, man);
    std::printf("trained %s for %d epochs (final train %.5f, val %.5f) -> %s\n",
                arch_name(cfg.model.arch), cfg.train.epochs,
                hist.train_loss.empty() ? 0.0 : hist.train_loss.back(),
                hist.val_loss.empty() ? 0.0 : hist.val_loss.back(), ckpt_path.c_str());
    return 0;
}

std::vector<std::string> read_split_side(const std::string& path, const std::string& side) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open split file " + path);
    std::vector<std::string> out;
    std::string kind, sid;
    while (f >> kind >> sid)
        if (kind == side)
            out.push_back(sid);
    return out;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& ckpt_path, const std::string& data_dir,
                 const std::string& out_dir, std::string split_path, double fs_hz) {
    RunManifest man;
    man.command = "evaluate";
    man.seed = g.seed;
    man.config_path = g.config_path;
    man.started_at = utc_timestamp();

    CheckpointData ckpt = load_checkpoint(ckpt_path);
    man.inputs.push_back(ckpt_path);
    if (!g.config_path.empty()) {
        RunConfig rc = resolve_run_config(g, arch_name(ckpt.config.arch));
        if (rc.model.feature_set != ckpt.config.feature_set)
            throw ConfigError(std::string("config feature_set ") +
                              feature_set_name(rc.model.feature_set) +
                              " does not match checkpoint feature_set " +
                              feature_set_name(ckpt.config.feature_set));
    }

    if (split_path.empty()) {
        fs::path guess = fs::path(ckpt_path).parent_path() / "split.txt";
        if (fs::exists(guess))
            split_path = guess.string();
    }
    std::vector<std::string> test_ids;
    if (!split_path.empty()) {
        test_ids = read_split_side(split_path, "test");
        man.inputs.push_back(split_path);
        if (test_ids.empty())
            throw DataError("split file " + split_path + " lists no test subjects");
    }

    auto dataset = load_dataset(data_dir, fs_hz);
    std::vector<SubjectEvaluation> subs;
    for (const auto& lr : dataset) {
        if (!test_ids.empty() &&
            std::find(test_ids.begin(), test_ids.end(), lr.rec.subject_id) == test_ids.end())
            continue;
        man.inputs.push_back(lr.path);
        FeatureSeries f = features_for(lr.rec, ckpt.config.feature_set);
        apply_normalization(f, ckpt.normalization);
        SubjectEvaluation se;
        se.errors = horizon_errors(*ckpt.model, lr.rec, f, lr.labels);
        se.segments = segment(lr.labels, lr.rec);
        se.ceps = extract_ceps(se.segments, fs_hz);
        subs.push_back(std::move(se));
    }
    if (subs.empty())
        throw DataError("no test recordings to evaluate in " + data_dir);

    ensure_dir(out_dir);
    ReportOptions opt;
    opt.plots = g.plots;
    man.outputs = write_evaluation_report(out_dir, subs, opt);
    man.effective_config.emplace_back("arch", arch_name(ckpt.config.arch));
    man.effective_config.emplace_back("feature_set", feature_set_name(ckpt.config.feature_set));
    man.effective_config.emplace_back("pi_samples", std::to_string(ckpt.config.pi_samples));
    man.finished_at = utc_timestamp();
    write_manifest(out_dir, man);
    std::printf("evaluated %zu recordings -> %s\n", subs.size(), out_dir.c_str());
    return 0;
}

int cmd_bench(const GlobalOpts& g, const std::string& ckpt_path, const std::string& arch_flag,
              int warmup, int runs, const std::string& out_dir) {
    RunManifest man;
    man.command = "bench";
    man.seed = g.seed;
    man.config_path = g.config_path;
    man.started_at = utc_timestamp();

    std::unique_ptr<Forecaster<float>> model;
    if (!ckpt_path.empty()) {
        model = load_checkpoint(ckpt_path).model;
        man.inputs.push_back(ckpt_path);
    } else {
        RunConfig rc = resolve_run_config(g, arch_flag.empty() ? "lstm" : arch_flag);
        model = build_forecaster<float>(rc.model, g.seed);
    }
    const ModelConfig& cfg = model->config();
    BenchResult bench = bench_inference(*model, warmup, runs, g.seed);

    ensure_dir(out_dir);
    const std::string path = out_dir + "/bench.csv";
    const std::string shape =
        std::to_string(cfg.in_channels()) + "x" + std::to_string(cfg.window_len);
    write_bench_csv(path, arch_name(cfg.arch), shape, bench, count_macs(cfg),
                    count_params(*model));
    man.outputs.push_back(path);
    man.effective_config.emplace_back("warmup", std::to_string(warmup));
    man.effective_config.emplace_back("runs", std::to_string(runs));
    man.finished_at = utc_timestamp();
    write_manifest(out_dir, man);
    std::printf("%s: %.4f ms mean, %.4f ms std (%d runs) -> %s\n", arch_name(cfg.arch),
                bench.mean_ms, bench.std_ms, runs, path.c_str());
    return 0;
}

std::vector<CdfPoint> read_cdf_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open " + path);
    std::vector<CdfPoint> out;
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError(path + ": malformed row '" + line + "'");
        out.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    return out;
}

int cmd_report(const GlobalOpts& g, const std::string& in_dir, std::string out_dir) {
    if (out_dir.empty())
        out_dir = in_dir;
    RunManifest man;
    man.command = "report";
    man.seed = g.seed;
    man.config_path = g.config_path;
    man.started_at = utc_timestamp();
    ensure_dir(out_dir);

    std::vector<detail::Series> cdf_series, p95_series;
    for (const char* bin : kReportBins) {
        const std::string sample_path = in_dir + "/cdf_" + bin + ".csv";
        const std::string p95_path = in_dir + "/cdf_p95_" + bin + ".csv";
        if (fs::exists(sample_path)) {
            auto pts = read_cdf_csv(sample_path);
            man.inputs.push_back(sample_path);
            if (!pts.empty())
                cdf_series.push_back({bin, std::move(pts)});
        }
        if (fs::exists(p95_path)) {
            auto pts = read_cdf_csv(p95_path);
            man.inputs.push_back(p95_path);
            if (!pts.empty())
                p95_series.push_back({bin, std::move(pts)});
        }
    }
    if (cdf_series.empty() && p95_series.empty())
        throw DataError("no cdf_*.csv files found in " + in_dir);

    std::string summary_path = out_dir + "/summary.txt";
    {
        std::ofstream sf(summary_path, std::ios::binary);
        if (!sf)
            throw IoError("cannot open " + summary_path + " for writing");
        sf << "prediction error summary (degrees)\n";
        auto level = [](const std::vector<CdfPoint>& pts, double frac) {
            for (const auto& p : pts)
                if (p.fraction >= frac)
                    return p.error_deg;
            return pts.back().error_deg;
        };
        for (const auto& s : cdf_series)
            sf << "  " << s.label << ": p50 " << detail::fmt_g(level(s.points, 0.5)) << ", p95 "
               << detail::fmt_g(level(s.points, 0.95)) << '\n';
        if (!sf)
            throw IoError("write failed for " + summary_path);
    }
    man.outputs.push_back(summary_path);

    if (!cdf_series.empty()) {
        const std::string p = out_dir + "/cdf.svg";
        detail::write_line_svg(p, "prediction error CDF", cdf_series);
        man.outputs.push_back(p);
    }
    if (!p95_series.empty()) {
        const std::string p = out_dir + "/cdf_p95.svg";
        detail::write_line_svg(p, "event-level p95 CDF", p95_series);
        man.outputs.push_back(p);
    }
    const std::string box_csv = in_dir + "/boxplots.csv";
    if (fs::exists(box_csv)) {
        std::ifstream bf(box_csv);
        std::vector<std::pair<std::string, BoxStats>> rows;
        std::string line;
        std::getline(bf, line);
        while (std::getline(bf, line)) {
            std::vector<std::string> cols;
            std::string cur;
            for (char ch : line + ",") {
                if (ch == ',') {
                    cols.push_back(cur);
                    cur.clear();
                } else
                    cur += ch;
            }
            if (cols.size() != 9)
                throw FormatError(box_csv + ": malformed row '" + line + "'");
            BoxStats b;
            b.n = std::stoi(cols[1]);
            b.mean = std::stod(cols[2]);
            b.q1 = std::stod(cols[3]);
            b.median = std::stod(cols[4]);
            b.q3 = std::stod(cols[5]);
            b.whisker_lo = std::stod(cols[6]);
            b.whisker_hi = std::stod(cols[7]);
            b.outliers = std::stoi(cols[8]);
            rows.emplace_back(cols[0], b);
        }
        man.inputs.push_back(box_csv);
        if (!rows.empty()) {
            const std::string p = out_dir + "/boxplots.svg";
            detail::write_box_svg(p, "error by event bin", rows);
            man.outputs.push_back(p);
        }
    }
    man.finished_at = utc_timestamp();
    write_manifest(out_dir, man);
    std::printf("report rendered into %s\n", out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"short-horizon gaze forecasting toolkit"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "flat key = value config file");
    app.add_option("--seed", g.seed, "base random seed")->default_val(0);
    app.add_option("--threads", g.threads, "worker threads (1 = bit-reproducible)")
        ->default_val(1)
        ->check(CLI::PositiveNumber);
    app.add_flag("--plots", g.plots, "also write SVG plots");

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic recordings");
    int subjects = 8;
    double duration_s = 120.0, fs_hz = 90.0;
    std::string out_dir = "out";
    synth->add_option("--subjects", subjects, "number of subjects")->default_val(8);
    synth->add_option("--duration-s", duration_s, "seconds per subject")->default_val(120.0);
    synth->add_option("--sample-rate", fs_hz, "sampling rate in Hz")->default_val(90.0);
    synth->add_option("--out", out_dir, "output directory")->required();

    // classify
    auto* classify = app.add_subcommand("classify", "detect fixations and saccades");
    std::string data_dir;
    classify->add_option("--data", data_dir, "directory of recording CSVs")->required();
    classify->add_option("--out", out_dir, "output directory")->required();
    classify->add_option("--sample-rate", fs_hz, "sampling rate in Hz")->default_val(90.0);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a forecaster");
    std::string arch_flag;
    double pi_ms = -1.0, lr_flag = -1.0, train_fraction_flag = -1.0;
    int epochs_flag = -1, batch_flag = -1;
    train_cmd->add_option("--data", data_dir, "directory of recordings + labels")->required();
    train_cmd->add_option("--out", out_dir, "output directory")->required();
    train_cmd->add_option("--arch", arch_flag, "lstm, tf or clpr");
    train_cmd->add_option("--pi-ms", pi_ms, "prediction interval in ms");
    train_cmd->add_option("--epochs", epochs_flag, "training epochs");
    train_cmd->add_option("--batch-size", batch_flag, "mini-batch size");
    train_cmd->add_option("--lr", lr_flag, "learning rate");
    train_cmd->add_option("--train-fraction", train_fraction_flag, "subject train fraction");
    train_cmd->add_option("--sample-rate", fs_hz, "sampling rate in Hz")->default_val(90.0);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "event-conditioned error report");
    std::string ckpt_path, split_path;
    eval_cmd->add_option("--checkpoint", ckpt_path, "trained model checkpoint")->required();
    eval_cmd->add_option("--data", data_dir, "directory of recordings + labels")->required();
    eval_cmd->add_option("--out", out_dir, "output directory")->required();
    eval_cmd->add_option("--split", split_path, "split file (default: beside the checkpoint)");
    eval_cmd->add_option("--sample-rate", fs_hz, "sampling rate in Hz")->default_val(90.0);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "single-window inference timing");
    int warmup = 10, runs = 100;
    bench_cmd->add_option("--checkpoint", ckpt_path, "trained model checkpoint");
    bench_cmd->add_option("--arch", arch_flag, "bench a freshly built default model");
    bench_cmd->add_option("--warmup", warmup, "untimed warmup passes")->default_val(10);
    bench_cmd->add_option("--runs", runs, "timed passes")->default_val(100);
    bench_cmd->add_option("--out", out_dir, "output directory")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "render plots from evaluation CSVs");
    std::string in_dir, report_out;
    report_cmd->add_option("--in", in_dir, "evaluation output directory")->required();
    report_cmd->add_option("--out", report_out, "render directory (default: --in)");

    for (CLI::App* sc : app.get_subcommands(nullptr))
        sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(g, subjects, duration_s, fs_hz, out_dir);
        if (classify->parsed())
            return cmd_classify(g, data_dir, out_dir, fs_hz);
        if (train_cmd->parsed()) {
            RunConfig cfg = resolve_run_config(g, arch_flag);
            cfg.train.seed = g.seed;
            if (pi_ms > 0)
                cfg.train.pi_ms = pi_ms;
            if (epochs_flag > 0)
                cfg.train.epochs = epochs_flag;
            if (batch_flag > 0)
                cfg.train.batch_size = batch_flag;
            if (lr_flag >= 0)
                cfg.train.lr = lr_flag;
            if (train_fraction_flag > 0)
                cfg.train.train_fraction = train_fraction_flag;
            return cmd_train(g, cfg, data_dir, out_dir, fs_hz);
        }
        if (eval_cmd->parsed())
            return cmd_evaluate(g, ckpt_path, data_dir, out_dir, split_path, fs_hz);
        if (bench_cmd->parsed())
            return cmd_bench(g, ckpt_path, arch_flag, warmup, runs, out_dir);
        if (report_cmd->parsed())
            return cmd_report(g, in_dir, report_out);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
