#include "server.hpp"

#include <csignal>
#include <iostream>

#include <httplib.h>

namespace semcube::tools {

namespace {
httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int serve(api::Api& api, const std::string& host, int port) {
  httplib::Server server;
  auto forward = [&api](const httplib::Request& req, httplib::Response& res) {
    api::Params params(req.params.begin(), req.params.end());
    auto out = api.handle(req.method, req.path, params, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json; charset=utf-8");
  };
  server.Get(".*", forward);
  server.Post(".*", forward);

  if (!server.bind_to_port(host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving on " << host << ":" << port << "\n";
  server.listen_after_bind();
  g_server = nullptr;
  return 0;
}

}  // namespace semcube::tools
