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

#include <stdexcept>
#include <string>

namespace ropemr
{

// Caller broke a documented precondition (dimension mismatch, bad config value).
class ContractViolation : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Input data failed validation; message carries row/column context.
class DataError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class SamplerError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Design matrix is rank deficient.
class SingularDesign : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Logistic fit diverged (complete or quasi-complete separation).
class SeparationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition)
    {
        throw ContractViolation(message);
    }
}

}  // namespace ropemr
