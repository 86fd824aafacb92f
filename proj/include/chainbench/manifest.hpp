#pragma once

// Run manifest: one manifest.json per output directory, one section per
// pipeline stage, enough to re-execute the run byte-identically given the
// same caches and journals.

#include <filesystem>
#include <string>

#include "chainbench/jsonl.hpp"
#include "chainbench/util.hpp"

namespace chainbench {

inline const char* kToolVersion = "0.1.0";

inline std::string hash_file(const std::string& path) {
    return "fnv1a64:" + fnv1a64_hex(read_file(path));
}

inline void update_manifest(const std::string& run_dir, const std::string& stage,
                            Json stage_data) {
    const std::string path = (std::filesystem::path(run_dir) / "manifest.json").string();
    Json manifest;
    if (file_exists(path)) {
        manifest = Json::parse(read_file(path), nullptr, false);
        if (manifest.is_discarded() || !manifest.is_object()) manifest = Json::object();
    } else {
        manifest = Json::object();
    }
    manifest["tool_version"] = kToolVersion;
    manifest["updated"] = iso8601_utc_now();
    if (!manifest.contains("created")) manifest["created"] = manifest["updated"];
    stage_data["timestamp"] = iso8601_utc_now();
    if (!manifest.contains("stages")) manifest["stages"] = Json::object();
    manifest["stages"][stage] = std::move(stage_data);
    write_file(path, manifest.dump(2) + "\n");
}

}  // namespace chainbench
