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

#pragma once

#include <string>

namespace geotile {

/// Routes library logging to stderr at the level named by the GEOTILE_LOG
/// environment variable (trace, debug, info, warn, error, off; default warn).
void init_logging();

/// Library diagnostics. Logging is initialized on first use.
void log_debug(const std::string& msg);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace geotile
