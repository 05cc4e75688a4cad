#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "unpaired_sr/stage1.hpp"
#include "unpaired_sr/stage2.hpp"

namespace unpaired_sr {

struct DataConfig {
    std::filesystem::path lr_dir;
    std::filesystem::path hr_dir;
    /// Generated-pair manifest for train-sr; empty means `<out_dir>/pairs/pairs.tsv`.
    std::filesystem::path pairs;
    int scale = 4;
    bool augment = false;
};

struct RunSection {
    uint64_t seed = 0;
    std::filesystem::path out_dir = "run";
    int64_t tile = 128;
    int64_t overlap = 16;
    int64_t border_crop = -1;  ///< -1 means the scale factor
    std::string metric_plugin;
};

/// Everything one pipeline run needs. Stage configs already carry the shared
/// seed, scale, weights and network specs.
struct RunConfig {
    DataConfig data;
    Stage1Config stage1;
    Stage2Config stage2;
    RunSection run;

    /// Throws ConfigError on any invariant violation.
    void validate() const;
    [[nodiscard]] TileOptions tiles() const { return {run.tile, run.overlap}; }
    [[nodiscard]] int64_t border_crop() const { return run.border_crop < 0 ? data.scale : run.border_crop; }
};

/// Parses a config document. `overrides` are `section.key=value` strings applied after the
/// file, in order. Errors name the key and line (`<origin>:<line>`, or `--set` for overrides).
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>",
                            const std::vector<std::string>& overrides = {});
RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Defaults only, with overrides applied.
RunConfig default_config(const std::vector<std::string>& overrides = {});

/// Every accepted `section.key`, in documentation order.
std::vector<std::string> config_keys();

}  // namespace unpaired_sr
