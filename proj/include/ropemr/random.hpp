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

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ropemr
{

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a path of indices
// (e.g. cell, replicate, chain). Order of the path matters.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t h = mix64(master);
    for (auto p : path)
    {
        h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    }
    return h;
}

inline double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace ropemr
