#include "unpaired_sr/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace unpaired_sr::log {

namespace {

std::shared_ptr<spdlog::logger> logger() {
    static auto instance = [] {
        auto l = spdlog::stderr_color_mt("unpaired_sr");
        l->set_pattern("[%H:%M:%S] [%^%l%$] %v");
        return l;
    }();
    return instance;
}

}  // namespace

void write(Level level, const std::string& message) {
    switch (level) {
        case Level::debug: logger()->debug(message); break;
        case Level::info: logger()->info(message); break;
        case Level::warn: logger()->warn(message); break;
        case Level::error: logger()->error(message); break;
    }
}

void configure_from_env() {
    const char* env = std::getenv("UNPAIRED_SR_LOG");
    const std::string level = env != nullptr ? env : "info";
    if (level == "quiet") {
        logger()->set_level(spdlog::level::off);
    } else if (level == "debug") {
        logger()->set_level(spdlog::level::debug);
    } else {
        logger()->set_level(spdlog::level::info);
        if (level != "info") logger()->warn("UNPAIRED_SR_LOG='{}' not recognised, using info", level);
    }
}

}  // namespace unpaired_sr::log
