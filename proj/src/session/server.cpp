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

#include <atomic>

#include "partsketch/raster.hpp"
#include "partsketch/session.hpp"

// After Eigen: resolv.h defines a _res macro that collides with Eigen internals.
#include <httplib.h>

namespace partsketch::session {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  extra["code"] = code;
  send_json(res, status, extra);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw SessionValidationError("request body must be a JSON object");
  }
  return body;
}

std::string string_field(const json& body, const char* key, const std::string& fallback) {
  if (!body.contains(key)) return fallback;
  if (!body[key].is_string()) throw SessionValidationError(std::string(key) + " must be a string");
  return body[key].get<std::string>();
}

// Maps service exceptions onto HTTP statuses.
template <typename Handler>
httplib::Server::Handler guarded(Handler&& handler) {
  return [handler = std::forward<Handler>(handler)](const httplib::Request& req,
                                                    httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const NotFound& e) {
      send_error(res, 404, "not-found", e.what());
    } catch (const UnknownPart& e) {
      send_error(res, 404, "unknown-part", e.what());
    } catch (const TurnIndexError& e) {
      send_error(res, 404, "index", e.what());
    } catch (const Exhausted& e) {
      send_error(res, 409, "exhausted", e.what());
    } catch (const BackendInvalid& e) {
      json detail = {{"verdict",
                      {{"error_kind", std::string(to_string(*e.verdict().error_kind))},
                       {"line_index", e.verdict().line_index.value_or(0)}}},
                     {"response", e.response()}};
      send_error(res, 422, "backend-invalid", e.what(), detail);
    } catch (const SessionValidationError& e) {
      send_error(res, 400, "validation", e.what());
    } catch (const annopipe::ClientError& e) {
      send_error(res, 502, "backend-unavailable", e.what());
    } catch (const annopipe::SchemaError& e) {
      send_error(res, 502, "backend-schema", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  SessionService& service;
  annopipe::PipelineConfig pipeline;
  httplib::Server server;
  std::atomic<bool> serving{false};

  Impl(SessionService& s, annopipe::PipelineConfig p) : service(s), pipeline(std::move(p)) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });

    server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& s : service.list()) {
        json parent = nullptr;
        if (s.parent) parent = {{"session_id", s.parent->session_id}, {"turn_index", s.parent->turn_index}};
        out.push_back({{"id", s.id},
                       {"caption", s.caption},
                       {"turns", s.turns.size()},
                       {"parts", s.queue.size()},
                       {"parent", parent}});
      }
      send_json(res, 200, out);
    }));

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      if (!body.contains("parts") || !body["parts"].is_array()) {
        throw SessionValidationError("parts must be an array of descriptions");
      }
      std::vector<std::string> parts;
      for (const auto& p : body["parts"]) {
        if (!p.is_string()) throw SessionValidationError("parts must be strings");
        parts.push_back(p.get<std::string>());
      }
      CanvasConfig canvas;
      if (body.contains("canvas") && body["canvas"].is_object()) {
        canvas.width = body["canvas"].value("width", canvas.width);
        canvas.height = body["canvas"].value("height", canvas.height);
        canvas.stroke_width = body["canvas"].value("stroke_width", canvas.stroke_width);
      }
      send_json(res, 201, state_json(service.create(string_field(body, "caption", ""), parts, canvas)));
    }));

    server.Get(R"(/sessions/([A-Za-z0-9_-]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, state_json(service.get(req.matches[1])));
               }));

    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/canvas\.svg)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 res.set_content(export_svg(service.get(req.matches[1]).canvas_sketch()),
                                 "image/svg+xml");
               }));

    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/canvas\.png)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const Session s = service.get(req.matches[1]);
                 res.set_content(raster::encode_png(raster::rasterize(s.canvas_sketch())),
                                 "image/png");
               }));

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/step)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  auto [s, strokes] = service.step(req.matches[1], string_field(body, "backend", "random"));
                  json out = state_json(s);
                  out["new_strokes"] = emit_strokes(strokes);
                  send_json(res, 200, out);
                }));

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/turns/(-?\d+)/regenerate)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const int k = std::stoi(req.matches[2]);
                  send_json(res, 201,
                            state_json(service.regenerate(req.matches[1], k,
                                                          string_field(body, "backend", "random"))));
                }));

    server.Delete(R"(/sessions/([A-Za-z0-9_-]+)/parts/([A-Za-z0-9]+))",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, 200, state_json(service.remove_part(req.matches[1], req.matches[2])));
                  }));

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/parts/([A-Za-z0-9]+)/replace)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  if (!body.contains("description")) throw SessionValidationError("description is required");
                  send_json(res, 200,
                            state_json(service.replace_part(req.matches[1], req.matches[2],
                                                            string_field(body, "description", ""),
                                                            string_field(body, "backend", "random"))));
                }));

    // Optional: proposes part descriptions for an SVG sketch via stage 1.
    server.Post("/decompose", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      auto client = service.backends().vlm_client();
      if (!client) {
        send_error(res, 503, "unavailable", "no VLM client is configured");
        return;
      }
      const std::string svg = string_field(body, "svg", "");
      if (svg.empty()) throw SessionValidationError("svg is required");
      Sketch sketch;
      try {
        sketch = import_svg(svg);
      } catch (const SvgError& e) {
        throw SessionValidationError(e.what());
      }
      const auto parts = annopipe::stage1_decompose(*client, raster::rasterize(sketch), pipeline);
      json out = json::array();
      for (const auto& p : parts) out.push_back(p.description);
      send_json(res, 200, {{"parts", out}});
    }));
  }
};

HttpServer::HttpServer(SessionService& service, annopipe::PipelineConfig pipeline)
    : impl_(std::make_unique<Impl>(service, std::move(pipeline))) {}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) {
  impl_->serving = true;
  const bool ok = impl_->server.listen(host, port);
  impl_->serving = false;
  return ok;
}

int HttpServer::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpServer::serve() {
  impl_->serving = true;
  const bool ok = impl_->server.listen_after_bind();
  impl_->serving = false;
  return ok;
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace partsketch::session
