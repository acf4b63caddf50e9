// Copyright 2026 The medfed Authors. All Rights Reserved.
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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace medfed {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A token id falls outside the vocabulary or embedding table.
class OutOfVocabularyError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf appeared at an operation boundary.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class EmptySequenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (CSV, text pairs, JSON manifests).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (sizes, counts, fractions).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss. Epoch and batch are 1-based.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string what, std::optional<int> client_id,
                  std::optional<std::size_t> round, std::size_t epoch,
                  std::size_t batch)
      : Error(std::move(what)),
        client_id_(client_id),
        round_(round),
        epoch_(epoch),
        batch_(batch) {}

  std::optional<int> client_id() const { return client_id_; }
  std::optional<std::size_t> round() const { return round_; }
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::optional<int> client_id_;
  std::optional<std::size_t> round_;
  std::size_t epoch_;
  std::size_t batch_;
};

/// File system failures (missing artifacts, unwritable directories).
class IoError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint / wire decoding failures. Each cause has its own kind so
/// callers can tell corruption from truncation.
class DecodeError : public Error {
 public:
  enum class Kind { kTruncated, kBadMagic, kBadVersion, kBadChecksum, kMalformed };

  DecodeError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Transport-level failures of the coordinator protocol.
class TransportError : public Error {
 public:
  enum class Kind {
    kTimeout,
    kConnectionRefused,
    kMalformedFrame,
    kDisconnected,
    kRemote,
  };

  TransportError(Kind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }
  bool retryable() const {
    return kind_ == Kind::kTimeout || kind_ == Kind::kConnectionRefused ||
           kind_ == Kind::kDisconnected;
  }

 private:
  Kind kind_;
};

}  // namespace medfed
