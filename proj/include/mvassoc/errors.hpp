/*
 * Copyright 2026 The mvassoc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
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

namespace mvassoc {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scene or report file does not follow its JSON schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A value is well-formed but violates a domain invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// A binary embedding sidecar is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An embedding required by a scorer is absent from the table.
class MissingEmbeddingError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of its allowed range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class GeometryFault {
  kBehindCamera,
  kZeroBaseline,
  kEpipoleDegeneracy,
  kDegeneratePlane,
};

class GeometryError : public Error {
 public:
  GeometryError(GeometryFault fault, const std::string& what)
      : Error(what), fault_(fault) {}

  GeometryFault fault() const noexcept { return fault_; }

 private:
  GeometryFault fault_;
};

}  // namespace mvassoc
