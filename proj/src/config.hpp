/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The scatsim Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
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

#ifndef SCATSIM_SRC_CONFIG_HPP
#define SCATSIM_SRC_CONFIG_HPP

#include <set>
#include <string>

#include <json.hpp>

#include "scatsim/experiment.hpp"

namespace scatsim::detail {

using nlohmann::json;

/// Reads optional fields of one JSON object and rejects keys nobody asked for.
class JsonReader {
 public:
  JsonReader(const json& j, std::string context);

  template <class T>
  void get(const char* key, T& dst) {
    used_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument(context_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& child(const char* key);
  std::string path(const char* key) const { return context_ + "." + key; }
  /// Throws on unknown keys.
  void finish() const;

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> used_;
};

json parse_json(std::string_view text, const std::string& what);

Psf psf_from_json(const json& j, const std::string& ctx, double fs, double c);
json to_json(const Psf& p);
ScattererModel model_from_json(const json& j, const std::string& ctx);
json to_json(const ScattererModel& m);
ShapeGenConfig shapes_from_json(const json& j, const std::string& ctx);
json to_json(const ShapeGenConfig& s);
TrainingDataConfig training_data_from_json(const json& j, const std::string& ctx);
json to_json(const TrainingDataConfig& d);
NetworkOptions network_from_json(const json& j, const std::string& ctx);
json to_json(const NetworkOptions& n);
/// TrainConfig minus data, which lives in its own section.
TrainConfig train_from_json(const json& j, const std::string& ctx);
json to_json(const TrainConfig& t);
RladConfig rlad_from_json(const json& j, const std::string& ctx);
json to_json(const RladConfig& r);
WienerConfig wiener_from_json(const json& j, const std::string& ctx);
json to_json(const WienerConfig& w);
InclusionPhantomConfig phantom_from_json(const json& j, const std::string& ctx);
json to_json(const InclusionPhantomConfig& p);
ExperimentConfig experiment_from_json(const json& j, const std::string& ctx);
json to_json(const ExperimentConfig& e);

}  // namespace scatsim::detail

#endif  // SCATSIM_SRC_CONFIG_HPP
