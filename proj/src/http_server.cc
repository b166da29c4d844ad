#include "ecranno/http_server.h"

#include "httplib.h"

namespace ecranno {

namespace {

using nlohmann::json;

void Send(httplib::Response &res, const ApiResponse &api) {
  res.status = api.status;
  if (api.status == 204 || api.body.is_null()) return;
  res.set_content(api.body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(AnnotationService &service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  httplib::Server &s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});

  s.Options(R"(/.*)", [](const httplib::Request &, httplib::Response &res) {
    res.status = 204;
  });

  s.Post("/sessions", [this](const httplib::Request &req, httplib::Response &res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      Send(res, {422, json{{"error", "request body is not valid JSON"}}});
      return;
    }
    Send(res, service_.CreateSession(body));
  });

  s.Get("/sessions", [this](const httplib::Request &, httplib::Response &res) {
    Send(res, service_.ListSessions());
  });

  s.Get(R"(/sessions/([A-Za-z0-9_-]+)/next)",
        [this](const httplib::Request &req, httplib::Response &res) {
          Send(res, service_.Next(req.matches[1]));
        });

  s.Post(R"(/sessions/([A-Za-z0-9_-]+)/decision)",
         [this](const httplib::Request &req, httplib::Response &res) {
           json body = json::parse(req.body, nullptr, false);
           if (body.is_discarded()) {
             Send(res, {422, json{{"error", "request body is not valid JSON"}}});
             return;
           }
           Send(res, service_.SubmitDecision(req.matches[1], body));
         });

  s.Get(R"(/sessions/([A-Za-z0-9_-]+)/export)",
        [this](const httplib::Request &req, httplib::Response &res) {
          Send(res, service_.Export(req.matches[1]));
        });

  s.Get(R"(/sessions/([A-Za-z0-9_-]+)/metrics)",
        [this](const httplib::Request &req, httplib::Response &res) {
          Send(res, service_.Metrics(req.matches[1]));
        });

  s.set_exception_handler(
      [](const httplib::Request &, httplib::Response &res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
          if (ep) std::rethrow_exception(ep);
        } catch (const std::exception &e) {
          message = e.what();
        } catch (...) {
        }
        Send(res, {500, json{{"error", message}}});
      });
}

HttpServer::~HttpServer() = default;

bool HttpServer::Listen(const std::string &host, int port) {
  return server_->listen(host, port);
}

int HttpServer::BindToAnyPort(const std::string &host) {
  return server_->bind_to_any_port(host);
}

bool HttpServer::ListenAfterBind() { return server_->listen_after_bind(); }

void HttpServer::Stop() { server_->stop(); }

bool HttpServer::is_running() const { return server_->is_running(); }

}  // namespace ecranno
