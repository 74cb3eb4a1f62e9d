#pragma once

#include <memory>
#include <string>

#include "lexloop/error.hpp"
#include "lexloop/session.hpp"

namespace lexloop {

int http_status(ErrorCode code);

/// JSON endpoints for a SessionService under /v1.
class HttpApi {
 public:
  explicit HttpApi(SessionService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lexloop
