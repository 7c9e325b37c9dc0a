/*
    Copyright (c) 2026 The procwatt Authors
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
        http://www.apache.org/licenses/LICENSE-2.0
    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace procwatt {

// Runtime failure (bad data, numeric breakdown, I/O). Maps to exit code 1
// in the CLI.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Caller misuse of a command-line surface (bad flag combination, impossible
// parameter). Maps to exit code 2 in the CLI.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what) {}
};

} // namespace procwatt
