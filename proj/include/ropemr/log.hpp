/*
 * Copyright 2026 The ropemr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace ropemr::log
{

using Sink = std::function<void(const std::string&)>;

namespace detail
{
inline std::mutex& mutex()
{
    static std::mutex m;
    return m;
}

inline Sink& sink()
{
    static Sink s = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}
}  // namespace detail

// Replaces the warning sink and returns the previous one.
inline Sink set_warning_sink(Sink sink)
{
    std::lock_guard lock(detail::mutex());
    return std::exchange(detail::sink(), std::move(sink));
}

inline void warn(const std::string& message)
{
    std::lock_guard lock(detail::mutex());
    if (detail::sink())
    {
        detail::sink()(message);
    }
}

}  // namespace ropemr::log
