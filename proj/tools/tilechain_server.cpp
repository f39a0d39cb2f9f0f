// HTTP API server for interactive sessions.

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <iostream>

#include "tilechain/service.hpp"

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Session API server"};
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string data_dir = ".";
  std::string origin = "*";
  app.add_option("--port", port, "Listen port");
  app.add_option("--host", host, "Listen address");
  app.add_option("--data-dir", data_dir, "Directory holding dataset files")->check(CLI::ExistingDirectory);
  app.add_option("--cors-origin", origin, "Allowed CORS origin");
  CLI11_PARSE(app, argc, argv);

  tilechain::ApiService service({data_dir, origin});
  httplib::Server server;
  service.mount(server);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  std::cout << "listening on " << host << ":" << port << std::endl;
  if (!server.listen(host, port)) {
    std::cerr << "internal: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  service.drain();
  return 0;
}
