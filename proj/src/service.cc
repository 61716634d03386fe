/* Copyright 2026 The respclass Authors. All Rights Reserved.

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

#include "respclass/service.h"

#include <chrono>
#include <ctime>

#include "httplib.h"
#include "json.hpp"
#include "respclass/selective.h"

namespace respclass {
namespace {

using nlohmann::json;

constexpr const char* kFallbackIndex =
    "<!doctype html><html><head><meta charset=\"utf-8\">"
    "<title>respclass merge service</title></head><body>"
    "<h1>respclass merge service</h1>"
    "<p>No UI bundle is configured. API endpoints:</p><ul>"
    "<li>GET /api/session/next</li><li>POST /api/session/action</li>"
    "<li>GET /api/classes/export</li><li>POST /api/suggest</li></ul>"
    "</body></html>";

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int status_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kConflict:
      return 409;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kDataError:
    case ErrorKind::kFailedPrecondition:
      return 400;
    case ErrorKind::kUnavailable:
      return 503;
    case ErrorKind::kIo:
      return 500;
  }
  return 500;
}

json classes_payload(const std::vector<ResponseClass>& classes) {
  json arr = json::array();
  for (const auto& c : classes) {
    arr.push_back({{"id", c.id}, {"name", c.name}, {"exemplar", c.exemplar_text}});
  }
  return arr;
}

}  // namespace

MergeService::MergeService(MergeSession base, std::filesystem::path action_log,
                           std::optional<SoftmaxModel> model,
                           std::optional<Catalog> catalog, ServiceOptions options)
    : session_(std::move(base)),
      log_(std::move(action_log)),
      model_(std::move(model)),
      catalog_(std::move(catalog)),
      options_(std::move(options)) {
  session_ = session_.replay(log_.read_all());
  if (model_ && catalog_) check_catalog(*model_, *catalog_);
  if (model_ && !catalog_) {
    throw Error(ErrorKind::kFailedPrecondition,
                "a model was loaded without the catalog it predicts into");
  }
  server_ = std::make_unique<httplib::Server>();
  install_routes();
}

MergeService::~MergeService() { stop(); }

void MergeService::install_routes() {
  httplib::Server& srv = *server_;

  srv.Get("/api/session/next", [this](const httplib::Request&, httplib::Response& res) {
    std::shared_lock lock(mu_);
    json body = {{"complete", session_.complete()},
                 {"cursor", session_.log().size()},
                 {"reviewed", session_.cursor()},
                 {"queue_length", session_.queue().size()},
                 {"classes", classes_payload(session_.classes())}};
    if (auto view = session_.next_centroid()) {
      json members = json::array();
      for (const auto& m : view->members)
        members.push_back({{"text", m.text}, {"count", m.count}});
      body["cluster"] = {{"id", view->cluster_id},
                         {"centroid_text", view->centroid_text},
                         {"total_count", view->total_count},
                         {"members", std::move(members)}};
    } else {
      body["cluster"] = nullptr;
    }
    reply_json(res, 200, body);
  });

  srv.Post("/api/session/action", [this](const httplib::Request& req,
                                         httplib::Response& res) {
    json body;
    MergeAction action;
    size_t cursor = 0;
    try {
      body = json::parse(req.body);
      cursor = body.at("cursor").get<size_t>();
      const json& a = body.at("action");
      action.kind = parse_action_kind(a.at("kind").get<std::string>());
      action.class_id = a.value("class_id", -1);
      action.name = a.value("name", "");
      action.exemplar = a.value("exemplar", "");
      action.actor = body.value("actor", options_.default_actor);
    } catch (const std::exception& e) {
      reply_json(res, 400, {{"error", std::string("malformed action: ") + e.what()}});
      return;
    }
    std::unique_lock lock(mu_);
    const size_t token = session_.log().size();
    if (cursor != token) {
      reply_json(res, 409, {{"error", "stale cursor"}, {"cursor", token}});
      return;
    }
    if (action.kind != ActionKind::kUndo) {
      if (auto view = session_.next_centroid()) action.cluster_id = view->cluster_id;
    }
    action.timestamp = now_utc();
    MergeSession next = session_;
    try {
      next.apply(action);
      log_.append(next.log().back());
    } catch (const Error& e) {
      reply_json(res, status_for(e), {{"error", e.what()}, {"cursor", token}});
      return;
    }
    session_ = std::move(next);
    json reply = {{"cursor", session_.log().size()}, {"complete", session_.complete()}};
    if (action.kind == ActionKind::kCreate)
      reply["class_id"] = session_.log().back().class_id;
    reply_json(res, 200, reply);
  });

  srv.Get("/api/classes/export", [this](const httplib::Request&, httplib::Response& res) {
    std::shared_lock lock(mu_);
    const Catalog catalog = session_.catalog();
    if (catalog.classes.empty()) {
      reply_json(res, 409, {{"error", "no classes have been created yet"}});
      return;
    }
    res.status = 200;
    res.set_content(catalog_to_json(catalog), "application/json");
  });

  srv.Post("/api/suggest", [this](const httplib::Request& req, httplib::Response& res) {
    if (!model_) {
      reply_json(res, 503, {{"error", "no model loaded"}});
      return;
    }
    std::vector<Turn> turns;
    double threshold = 0.0;
    try {
      json body = json::parse(req.body);
      for (const json& t : body.at("turns")) {
        turns.push_back({parse_speaker(t.at("speaker").get<std::string>()),
                         t.at("text").get<std::string>()});
      }
      threshold = body.value("threshold", 0.0);
      if (turns.empty()) throw Error(ErrorKind::kInvalidArgument, "no turns");
      const SuggestionResult r = suggest(*model_, *catalog_, turns, threshold, options_.placeholders);
      json out = {{"opted_out", r.opted_out}, {"confidence", r.confidence}};
      if (r.class_id) out["class_id"] = *r.class_id;
      if (r.exemplar_text) out["exemplar"] = *r.exemplar_text;
      reply_json(res, 200, out);
    } catch (const Error& e) {
      reply_json(res, status_for(e), {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply_json(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
    }
  });

  if (!options_.static_dir.empty() && std::filesystem::is_directory(options_.static_dir)) {
    srv.set_mount_point("/", options_.static_dir.string());
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kFallbackIndex, "text/html");
    });
  }
}

int MergeService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void MergeService::listen(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  server_->listen_after_bind();
}

void MergeService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

MergeSession MergeService::session_snapshot() const {
  std::shared_lock lock(mu_);
  return session_;
}

size_t MergeService::cursor_token() const {
  std::shared_lock lock(mu_);
  return session_.log().size();
}

}  // namespace respclass
