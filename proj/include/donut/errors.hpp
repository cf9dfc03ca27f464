// Copyright 2026 The DONUT Authors.
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

#include <stdexcept>
#include <string>

namespace donut {

// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class MissingMeta : public Error {
 public:
  explicit MissingMeta(const std::string& id) : Error("missing meta row for series '" + id + "'"), id(id) {}
  std::string id;
};

class NonFiniteValue : public Error {
 public:
  NonFiniteValue(const std::string& id, std::size_t index)
      : Error("non-finite value in series '" + id + "' at index " + std::to_string(index)), id(id), index(index) {}
  std::string id;
  std::size_t index;
};

class TooShort : public Error {
 public:
  explicit TooShort(const std::string& id) : Error("series '" + id + "' has fewer than 3 observations"), id(id) {}
  std::string id;
};

class TooShortForSplit : public Error {
 public:
  explicit TooShortForSplit(const std::string& id)
      : Error("series '" + id + "' is too short for a holdout of length h (need n > h + 2)"), id(id) {}
  std::string id;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateScale : public Error {
 public:
  DegenerateScale() : Error("MASE scale is zero (seasonal differences all vanish)") {}
};

class NMustExceedM : public Error {
 public:
  NMustExceedM() : Error("MASE requires the training length to exceed the seasonal period") {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class UntrainedModel : public Error {
 public:
  UntrainedModel() : Error("model has not been trained") {}
};

class DivergenceDetected : public Error {
 public:
  using Error::Error;
};

class MissingPart : public Error {
 public:
  MissingPart(const std::string& id, const std::string& part)
      : Error("series '" + id + "' is missing its " + part + " features"), id(id), part(part) {}
  std::string id;
  std::string part;
};

class NegativePLoss : public Error {
 public:
  explicit NegativePLoss(double value)
      : Error("weighting loss came out negative (" + std::to_string(value) + "); oracle is not optimal"),
        value(value) {}
  double value;
};

class SingleSeriesCorpus : public Error {
 public:
  SingleSeriesCorpus() : Error("permutation importance needs at least two series") {}
};

class UnpairedSeries : public Error {
 public:
  using Error::Error;
};

class StageFailed : public Error {
 public:
  StageFailed(const std::string& stage, const std::string& cause)
      : Error("stage '" + stage + "' failed: " + cause), stage(stage) {}
  std::string stage;
};

}  // namespace donut
