#pragma once
// Model checkpoints.
//
// A checkpoint is a text header followed by raw tensor data:
//
//   gazepred checkpoint v1
//   key = value            (model configuration, normalization, train seed)
//   tensor_count = N
//   end_header
//   <name> <rank> <dim0> <dim1> ...\n  followed by numel float32 values
//
// Tensor payloads are little-endian IEEE float32 in row-major order. Floating
// point header fields are printed with enough digits to round-trip exactly, so
// a save/load/save cycle is byte-identical.

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/models.hpp"
#include "gazepred/signal.hpp"

namespace gazepred {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

inline constexpr const char* kCheckpointMagic = "gazepred checkpoint v1";

struct CheckpointData {
    ModelConfig config;
    Normalization normalization; // per-channel mean and standard deviation
    std::uint64_t train_seed = 0;
    std::unique_ptr<Forecaster<float>> model;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

} // namespace detail

inline void save_checkpoint(const std::string& path, Forecaster<float>& model,
                            const Normalization& normalization, std::uint64_t train_seed) {
    const ModelConfig& cfg = model.config();
    if (normalization.mean.size() != normalization.std_dev.size() ||
        static_cast<int>(normalization.mean.size()) != feature_channels(cfg.feature_set))
        throw ShapeError("checkpoint: " + std::to_string(normalization.mean.size()) +
                         " normalization entries for " +
                         std::to_string(feature_channels(cfg.feature_set)) + " channels");
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path + " for writing");

    auto params = model.parameters();
    std::ostringstream h;
    h << kCheckpointMagic << '\n';
    h << "arch = " << arch_name(cfg.arch) << '\n';
    h << "feature_set = " << feature_set_name(cfg.feature_set) << '\n';
    h << "window_len = " << cfg.window_len << '\n';
    h << "pi_samples = " << cfg.pi_samples << '\n';
    h << "hidden_size = " << cfg.hidden_size << '\n';
    h << "n_layers = " << cfg.n_layers << '\n';
    h << "d_model = " << cfg.d_model << '\n';
    h << "n_heads = " << cfg.n_heads << '\n';
    h << "ffn_dim = " << cfg.ffn_dim << '\n';
    h << "tcn_channels = " << cfg.tcn_channels << '\n';
    h << "tcn_kernel = " << cfg.tcn_kernel << '\n';
    h << "tcn_dilations = " << detail::join_ints(cfg.tcn_dilations) << '\n';
    h << "dropout = " << detail::format_double(cfg.dropout) << '\n';
    h << "n_classes = " << cfg.n_classes << '\n';
    h << "lambda_cls = " << detail::format_double(cfg.lambda_cls) << '\n';
    h << "labels_as_input = " << (cfg.labels_as_input ? 1 : 0) << '\n';
    std::string means, stds;
    for (std::size_t i = 0; i < normalization.mean.size(); ++i) {
        if (i) {
            means += ',';
            stds += ',';
        }
        means += detail::format_double(normalization.mean[i]);
        stds += detail::format_double(normalization.std_dev[i]);
    }
    h << "norm_mean = " << means << '\n';
    h << "norm_std = " << stds << '\n';
    h << "train_seed = " << train_seed << '\n';
    h << "tensor_count = " << params.size() << '\n';
    h << "end_header\n";
    f << h.str();

    for (const auto* p : params) {
        f << p->name << ' ' << p->value.rank();
        for (std::int64_t d : p->value.shape())
            f << ' ' << d;
        f << '\n';
        f.write(reinterpret_cast<const char*>(&p->value[0]),
                static_cast<std::streamsize>(p->value.numel()) * 4);
    }
    f.flush();
    if (!f)
        throw IoError("write failed for " + path);
}

inline CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != kCheckpointMagic)
        throw FormatError(path + ": not a checkpoint file");

    std::map<std::string, std::string> kv;
    while (std::getline(f, line)) {
        if (line == "end_header")
            break;
        auto eq = line.find(" = ");
        if (eq == std::string::npos)
            throw FormatError(path + ": malformed header line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    if (line != "end_header")
        throw FormatError(path + ": missing end_header");

    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            throw FormatError(path + ": missing header field '" + key + "'");
        return it->second;
    };

    CheckpointData out;
    ModelConfig cfg;
    try {
        cfg.arch = parse_arch(need("arch"));
        cfg.feature_set = parse_feature_set(need("feature_set"));
        cfg.window_len = std::stoi(need("window_len"));
        cfg.pi_samples = std::stoi(need("pi_samples"));
        cfg.hidden_size = std::stoi(need("hidden_size"));
        cfg.n_layers = std::stoi(need("n_layers"));
        cfg.d_model = std::stoi(need("d_model"));
        cfg.n_heads = std::stoi(need("n_heads"));
        cfg.ffn_dim = std::stoi(need("ffn_dim"));
        cfg.tcn_channels = std::stoi(need("tcn_channels"));
        cfg.tcn_kernel = std::stoi(need("tcn_kernel"));
        cfg.tcn_dilations.clear();
        for (const std::string& tok : detail::split_list(need("tcn_dilations")))
            cfg.tcn_dilations.push_back(std::stoi(tok));
        cfg.dropout = std::stod(need("dropout"));
        cfg.n_classes = std::stoi(need("n_classes"));
        cfg.lambda_cls = std::stod(need("lambda_cls"));
        cfg.labels_as_input = std::stoi(need("labels_as_input")) != 0;
        out.train_seed = std::stoull(need("train_seed"));
        auto means = detail::split_list(need("norm_mean"));
        auto stds = detail::split_list(need("norm_std"));
        if (means.size() != stds.size())
            throw FormatError(path + ": norm_mean and norm_std differ in length");
        for (std::size_t i = 0; i < means.size(); ++i) {
            out.normalization.mean.push_back(std::stod(means[i]));
            out.normalization.std_dev.push_back(std::stod(stds[i]));
        }
    } catch (const std::invalid_argument&) {
        throw FormatError(path + ": malformed numeric header field");
    } catch (const std::out_of_range&) {
        throw FormatError(path + ": header field out of range");
    }
    if (static_cast<int>(out.normalization.mean.size()) != feature_channels(cfg.feature_set))
        throw FormatError(path + ": " + std::to_string(out.normalization.mean.size()) +
                          " normalization entries for " +
                          std::to_string(feature_channels(cfg.feature_set)) + " channels");

    const std::size_t tensor_count = std::stoul(need("tensor_count"));
    out.config = cfg;
    out.model = build_forecaster<float>(cfg, out.train_seed);

    std::map<std::string, nn::Parameter<float>*> by_name;
    for (auto* p : out.model->parameters())
        by_name[p->name] = p;
    if (by_name.size() != tensor_count)
        throw FormatError(path + ": checkpoint has " + std::to_string(tensor_count) +
                          " tensors, model expects " + std::to_string(by_name.size()));

    std::map<std::string, bool> loaded;
    for (std::size_t i = 0; i < tensor_count; ++i) {
        if (!std::getline(f, line))
            throw FormatError(path + ": truncated tensor table");
        std::istringstream ls(line);
        std::string name;
        int rank = -1;
        ls >> name >> rank;
        if (name.empty() || rank < 0)
            throw FormatError(path + ": malformed tensor record '" + line + "'");
        std::vector<std::int64_t> shape(static_cast<std::size_t>(rank));
        for (auto& d : shape)
            if (!(ls >> d))
                throw FormatError(path + ": malformed tensor record '" + line + "'");
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw FormatError(path + ": unknown tensor '" + name + "'");
        if (loaded[name])
            throw FormatError(path + ": duplicate tensor '" + name + "'");
        if (it->second->value.shape() != shape)
            throw FormatError(path + ": tensor '" + name + "' has shape " + shape_str(shape) +
                              ", model expects " + shape_str(it->second->value.shape()));
        f.read(reinterpret_cast<char*>(&it->second->value[0]),
               static_cast<std::streamsize>(it->second->value.numel()) * 4);
        if (!f)
            throw FormatError(path + ": truncated data for tensor '" + name + "'");
        loaded[name] = true;
    }
    for (const auto& [name, p] : by_name)
        if (!loaded[name])
            throw FormatError(path + ": missing tensor '" + name + "'");
    return out;
}

} // namespace gazepred
