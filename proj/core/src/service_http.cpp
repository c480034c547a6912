#include "clrmix/service.h"

#include <httplib.h>

#include "clrmix/errors.h"

namespace clrmix {

namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

void mount_routes(httplib::Server& server, PredictionService& service,
                  const ServerOptions& options) {
  server.set_default_headers({
      {"Access-Control-Allow-Origin", options.cors_origin},
      {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
      {"Access-Control-Allow-Headers", "Content-Type"},
  });

  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.Get("/model", [&service](const httplib::Request&, httplib::Response& res) {
    send(res, service.get_model());
  });
  server.Post("/predict", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.predict(req.body));
  });
  server.Post("/sweep", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.sweep(req.body));
  });
  server.Post("/elicitation", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.submit_elicitation(req.body));
  });
  server.Get("/elicitation/summary", [&service](const httplib::Request&, httplib::Response& res) {
    send(res, service.elicitation_summary());
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    nlohmann::json body = {{"error", {{"message", "HTTP " + std::to_string(res.status)}}}};
    res.set_content(body.dump(), "application/json");
  });
}

void run_server(PredictionService& service, const ServerOptions& options) {
  httplib::Server server;
  mount_routes(server, service, options);
  if (!server.listen(options.host, options.port)) {
    throw StorageError("cannot listen on " + options.host + ":" + std::to_string(options.port));
  }
}

}  // namespace clrmix
