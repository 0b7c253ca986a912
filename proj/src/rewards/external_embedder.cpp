/* Copyright 2026 The Partsketch Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <nlohmann/json.hpp>

#include "partsketch/raster.hpp"
#include "partsketch/rewards.hpp"
#include "partsketch/util.hpp"

// After Eigen: resolv.h defines a _res macro that collides with Eigen internals.
#include <httplib.h>

namespace partsketch::rewards {

ExternalEmbedder::ExternalEmbedder(std::string endpoint) : endpoint_(std::move(endpoint)) {}

Eigen::VectorXd ExternalEmbedder::embed(const raster::Bitmap& image) const {
  const auto scheme_end = endpoint_.find("://");
  const auto path_start =
      endpoint_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = endpoint_.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  httplib::Client cli(base);
  cli.set_connection_timeout(10);
  cli.set_read_timeout(120);
  const nlohmann::json body = {{"image", base64_encode(raster::encode_png(image))}};
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res) throw std::runtime_error("embedding request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw std::runtime_error("embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_object() && reply.contains("embedding")) reply = reply["embedding"];
  if (!reply.is_array() || reply.empty()) {
    throw std::runtime_error("embedding endpoint did not return a numeric array");
  }
  Eigen::VectorXd out(reply.size());
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (!reply[i].is_number()) throw std::runtime_error("embedding contains a non-number");
    out(static_cast<Eigen::Index>(i)) = reply[i].get<double>();
  }
  return out;
}

}  // namespace partsketch::rewards
