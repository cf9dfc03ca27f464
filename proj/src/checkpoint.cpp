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

#include "donut/checkpoint.hpp"

#include "donut/errors.hpp"

namespace donut::nn {

namespace {

nlohmann::json tensor_json(const Tensor2& t) {
  return nlohmann::json::array({t.rows(), t.cols()});
}

nlohmann::json values_json(const Tensor2& t) { return std::vector<double>(t.data(), t.data() + t.size()); }

void load_tensor(const nlohmann::json& values, Tensor2& t, const std::string& what) {
  const auto v = values.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != t.size())
    throw ParseError("checkpoint tensor '" + what + "' has " + std::to_string(v.size()) + " values, expected " +
                     std::to_string(t.size()));
  std::copy(v.begin(), v.end(), t.data());
}

}  // namespace

nlohmann::json params_to_json(const ParamList& params) {
  auto out = nlohmann::json::array();
  for (const auto* p : params)
    out.push_back({{"name", p->name}, {"shape", tensor_json(p->value)}, {"values", values_json(p->value)}});
  return out;
}

void params_from_json(const nlohmann::json& layers, const ParamList& params) {
  if (!layers.is_array() || layers.size() != params.size())
    throw ParseError("checkpoint layer list does not match the model");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& entry = layers[k];
    auto& p = *params[k];
    if (entry.at("name").get<std::string>() != p.name)
      throw ParseError("checkpoint layer '" + entry.at("name").get<std::string>() + "' where '" + p.name +
                       "' was expected");
    const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols())
      throw ParseError("checkpoint layer '" + p.name + "' has the wrong shape");
    load_tensor(entry.at("values"), p.value, p.name);
  }
}

nlohmann::json optimizer_to_json(const AdamW& opt) {
  const auto& c = opt.config();
  nlohmann::json j = {{"lr", c.lr},       {"weight_decay", c.weight_decay}, {"beta1", c.beta1},
                      {"beta2", c.beta2}, {"eps", c.eps},                   {"step", opt.steps()}};
  auto m = nlohmann::json::array();
  auto v = nlohmann::json::array();
  for (const auto& t : opt.first_moments()) m.push_back(values_json(t));
  for (const auto& t : opt.second_moments()) v.push_back(values_json(t));
  j["m"] = std::move(m);
  j["v"] = std::move(v);
  return j;
}

void optimizer_from_json(const nlohmann::json& j, AdamW& opt) {
  auto& m = opt.first_moments();
  auto& v = opt.second_moments();
  if (j.at("m").size() != m.size() || j.at("v").size() != v.size())
    throw ParseError("optimizer state does not match the model");
  for (std::size_t k = 0; k < m.size(); ++k) {
    load_tensor(j["m"][k], m[k], "m");
    load_tensor(j["v"][k], v[k], "v");
  }
  opt.set_steps(j.at("step").get<std::int64_t>());
}

nlohmann::json make_checkpoint(const ParamList& params, const AdamW& opt, std::uint64_t seed, int epoch) {
  return {{"schema_version", kCheckpointSchema},
          {"layers", params_to_json(params)},
          {"optimizer", optimizer_to_json(opt)},
          {"seed", seed},
          {"epoch", epoch}};
}

}  // namespace donut::nn
