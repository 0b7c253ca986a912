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

#include <cstdlib>

#include "partsketch/annopipe.hpp"
#include "partsketch/raster.hpp"
#include "partsketch/util.hpp"

// After Eigen: resolv.h defines a _res macro that collides with Eigen internals.
#include <httplib.h>

namespace partsketch::annopipe {
namespace {

using nlohmann::json;

std::string bitmap_bytes(const raster::Bitmap& b) {
  std::string out = std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                    std::to_string(b.channel_count()) + ":";
  out.append(reinterpret_cast<const char*>(b.pixels.data()), b.pixels.size());
  return out;
}

// Splits "http(s)://host[:port]/path" into the scheme-host part httplib
// wants and the request path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

int VlmRequest::image_count() const {
  int n = 0;
  for (const auto& item : content) n += std::holds_alternative<raster::Bitmap>(item);
  return n;
}

std::vector<const raster::Bitmap*> VlmRequest::images() const {
  std::vector<const raster::Bitmap*> out;
  for (const auto& item : content) {
    if (const auto* b = std::get_if<raster::Bitmap>(&item)) out.push_back(b);
  }
  return out;
}

std::string VlmRequest::prompt_text() const {
  std::string out;
  int image = 0;
  for (const auto& item : content) {
    if (!out.empty()) out += '\n';
    if (const auto* text = std::get_if<std::string>(&item)) {
      out += *text;
    } else {
      out += "<image " + std::to_string(++image) + ">";
    }
  }
  return out;
}

std::vector<std::string> VlmRequest::image_digests() const {
  std::vector<std::string> out;
  for (const auto* b : images()) out.push_back(sha256_hex(bitmap_bytes(*b)));
  return out;
}

std::string VlmRequest::digest() const {
  std::string material = stage + '\0';
  for (const auto& item : content) {
    if (const auto* text = std::get_if<std::string>(&item)) {
      material += "T" + *text + '\0';
    } else {
      material += "I" + bitmap_bytes(std::get<raster::Bitmap>(item)) + '\0';
    }
  }
  material += schema.dump();
  return sha256_hex(material);
}

ScriptedClient::ScriptedClient(std::map<std::string, std::vector<std::string>> script)
    : script_(std::move(script)) {}

ScriptedClient ScriptedClient::from_json(const json& script) {
  std::map<std::string, std::vector<std::string>> parsed;
  for (const auto& [stage, responses] : script.items()) {
    for (const auto& r : responses) {
      parsed[stage].push_back(r.is_string() ? r.get<std::string>() : r.dump());
    }
  }
  return ScriptedClient(std::move(parsed));
}

std::string ScriptedClient::request(const VlmRequest& req) {
  requests_.push_back(req);
  auto it = script_.find(req.stage);
  if (it == script_.end() || it->second.empty()) {
    throw ClientError("mock script has no response for " + req.stage, req.stage);
  }
  std::size_t& cur = cursor_[req.stage];
  const std::string& out = it->second[std::min(cur, it->second.size() - 1)];
  ++cur;
  return out;
}

RemoteVlmClient::RemoteVlmClient(std::string endpoint, std::string api_key, std::string model)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_(std::move(model)) {}

std::unique_ptr<RemoteVlmClient> RemoteVlmClient::from_env() {
  const char* endpoint = std::getenv("VLM_ENDPOINT");
  if (!endpoint || !*endpoint) throw ClientError("VLM_ENDPOINT is not set");
  const char* key = std::getenv("VLM_API_KEY");
  const char* model = std::getenv("VLM_MODEL");
  return std::make_unique<RemoteVlmClient>(endpoint, key ? key : "",
                                           model && *model ? model : "remote-vlm");
}

json RemoteVlmClient::request_body(const VlmRequest& req, const std::string& model) {
  json content = json::array();
  for (const auto& item : req.content) {
    if (const auto* text = std::get_if<std::string>(&item)) {
      content.push_back({{"type", "text"}, {"text", *text}});
    } else {
      content.push_back({{"type", "image"},
                         {"media_type", "image/png"},
                         {"data", base64_encode(raster::encode_png(std::get<raster::Bitmap>(item)))}});
    }
  }
  return {{"model", model}, {"stage", req.stage}, {"content", content}, {"response_schema", req.schema}};
}

std::string RemoteVlmClient::request(const VlmRequest& req) {
  const auto [base, path] = split_url(endpoint_);
  httplib::Client cli(base);
  cli.set_connection_timeout(10);
  cli.set_read_timeout(300);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(path, headers, request_body(req, model_).dump(), "application/json");
  if (!res) {
    throw ClientError("VLM request failed: " + httplib::to_string(res.error()), req.stage);
  }
  if (res->status != 200) {
    throw ClientError("VLM endpoint returned HTTP " + std::to_string(res->status), req.stage);
  }
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_object() && reply.contains("text") && reply["text"].is_string()) {
    return reply["text"].get<std::string>();
  }
  return res->body;
}

json CritiqueReport::to_json() const {
  json issues_json = json::array();
  for (const auto& issue : issues) {
    json j = {{"type", issue.type}, {"reason", issue.reason}};
    if (issue.severity) j["severity"] = *issue.severity;
    if (issue.suggested_fix) j["suggested_fix"] = *issue.suggested_fix;
    issues_json.push_back(std::move(j));
  }
  return {{"issues", issues_json}, {"summary", summary}, {"should_revise", should_revise}};
}

CritiqueReport CritiqueReport::from_json(const json& j) {
  CritiqueReport r;
  for (const auto& issue : j.at("issues")) {
    CritiqueIssue ci;
    ci.type = issue.at("type").get<std::string>();
    ci.reason = issue.at("reason").get<std::string>();
    if (issue.contains("severity")) ci.severity = issue["severity"].get<std::string>();
    if (issue.contains("suggested_fix") && issue["suggested_fix"].is_string()) {
      ci.suggested_fix = issue["suggested_fix"].get<std::string>();
    }
    r.issues.push_back(std::move(ci));
  }
  r.summary = j.at("summary").get<std::string>();
  r.should_revise = j.at("should_revise").get<bool>();
  return r;
}

json trace_to_json(const StageTrace& trace) {
  json arr = json::array();
  for (const auto& rec : trace) {
    arr.push_back({{"stage", rec.stage},
                   {"request_digest", rec.request_digest},
                   {"prompt", rec.prompt},
                   {"image_digests", rec.image_digests},
                   {"raw_response", rec.raw_response},
                   {"accepted", rec.accepted},
                   {"rejection", rec.rejection}});
  }
  return arr;
}

StageTrace trace_from_json(const json& j) {
  StageTrace out;
  for (const auto& item : j) {
    StageRecord rec;
    rec.stage = item.at("stage").get<std::string>();
    rec.request_digest = item.at("request_digest").get<std::string>();
    rec.prompt = item.value("prompt", "");
    rec.image_digests = item.value("image_digests", std::vector<std::string>{});
    rec.raw_response = item.at("raw_response").get<std::string>();
    rec.accepted = item.at("accepted").get<bool>();
    rec.rejection = item.value("rejection", "");
    out.push_back(std::move(rec));
  }
  return out;
}

ReplayClient::ReplayClient(StageTrace trace)
    : trace_(std::move(trace)), used_(trace_.size(), false) {}

std::string ReplayClient::request(const VlmRequest& req) {
  const std::string digest = req.digest();
  for (std::size_t i = 0; i < trace_.size(); ++i) {
    if (!used_[i] && trace_[i].request_digest == digest) {
      used_[i] = true;
      return trace_[i].raw_response;
    }
  }
  throw ClientError("no recorded response for request " + digest.substr(0, 12), req.stage);
}

}  // namespace partsketch::annopipe
