// Copyright 2026 The geotile Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "geotile/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace geotile {

namespace {
std::once_flag g_init;
}

void init_logging() {
  std::call_once(g_init, [] {
    auto logger = spdlog::get("geotile");
    if (!logger) logger = spdlog::stderr_color_mt("geotile");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);

    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("GEOTILE_LOG")) level = spdlog::level::from_str(env);
    spdlog::set_level(level);
  });
}

void log_debug(const std::string& msg) {
  init_logging();
  spdlog::debug(msg);
}

void log_info(const std::string& msg) {
  init_logging();
  spdlog::info(msg);
}

void log_warn(const std::string& msg) {
  init_logging();
  spdlog::warn(msg);
}

}  // namespace geotile
