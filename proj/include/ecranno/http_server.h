#ifndef ECRANNO_HTTP_SERVER_H_
#define ECRANNO_HTTP_SERVER_H_

#include <memory>
#include <string>

#include "ecranno/service.h"

namespace httplib {
class Server;
}

namespace ecranno {

// Binds AnnotationService to HTTP:
//   POST /sessions
//   GET  /sessions
//   GET  /sessions/{id}/next
//   POST /sessions/{id}/decision
//   GET  /sessions/{id}/export
//   GET  /sessions/{id}/metrics
// Every response carries permissive CORS headers.
class HttpServer {
 public:
  explicit HttpServer(AnnotationService &service);
  ~HttpServer();

  // Blocks until Stop().
  bool Listen(const std::string &host, int port);

  // Binds an ephemeral port and returns it (or -1); serve with
  // ListenAfterBind().
  int BindToAnyPort(const std::string &host);
  bool ListenAfterBind();

  void Stop();
  bool is_running() const;

 private:
  AnnotationService &service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace ecranno

#endif  // ECRANNO_HTTP_SERVER_H_
