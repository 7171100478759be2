/*
 * Copyright 2026 The dronefuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
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

namespace dronefuse {

/// Base class for every error raised by the library. The kind maps onto a
/// CLI exit code (see tools/dronefuse.cpp).
class Error : public std::runtime_error {
 public:
  enum class Kind { Size, Config, Parse, Domain, Dimension, Index, Io, Divergence, Spec };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

#define DRONEFUSE_DEFINE_ERROR(Name, K)                                  \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(Kind::K, what) {}     \
  };

DRONEFUSE_DEFINE_ERROR(SizeError, Size)
DRONEFUSE_DEFINE_ERROR(ConfigError, Config)
DRONEFUSE_DEFINE_ERROR(ParseError, Parse)
DRONEFUSE_DEFINE_ERROR(DomainError, Domain)
DRONEFUSE_DEFINE_ERROR(DimensionError, Dimension)
DRONEFUSE_DEFINE_ERROR(IndexError, Index)
DRONEFUSE_DEFINE_ERROR(IoError, Io)
DRONEFUSE_DEFINE_ERROR(DivergenceError, Divergence)
DRONEFUSE_DEFINE_ERROR(SpecError, Spec)

#undef DRONEFUSE_DEFINE_ERROR

}  // namespace dronefuse
