#pragma once
// Run manifests: every command writes one next to its outputs so a result can
// be reproduced from the manifest alone.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/version.hpp"

namespace gazepred {

struct RunManifest {
    std::string command;
    std::string config_path; // empty when no config file was given
    std::vector<std::pair<std::string, std::string>> effective_config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> notes;
};

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Written atomically: the full content goes to a temp file which is then
// renamed over <dir>/manifest.txt.
inline void write_manifest(const std::string& dir, const RunManifest& m) {
    const std::string path = dir + "/manifest.txt";
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f)
            throw IoError("cannot open " + tmp + " for writing");
        f << "tool = " << kToolName << ' ' << kToolVersion << '\n';
        f << "command = " << m.command << '\n';
        f << "seed = " << m.seed << '\n';
        f << "started_at = " << m.started_at << '\n';
        f << "finished_at = " << m.finished_at << '\n';
        if (!m.config_path.empty())
            f << "config_file = " << m.config_path << '\n';
        for (const auto& [k, v] : m.effective_config)
            f << "config." << k << " = " << v << '\n';
        for (const auto& p : m.inputs)
            f << "input = " << p << '\n';
        for (const auto& p : m.outputs)
            f << "output = " << p << '\n';
        for (const auto& n : m.notes)
            f << "note = " << n << '\n';
        f.flush();
        if (!f)
            throw IoError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename " + tmp + " to " + path);
}

} // namespace gazepred
