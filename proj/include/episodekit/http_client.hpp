#pragma once

#include <chrono>
#include <map>
#include <string>

#include "episodekit/error.hpp"

namespace episodekit::http {

// Connection, TLS or timeout failure (no HTTP status was received).
class TransportError : public Error {
 public:
  using Error::Error;
};

struct Response {
  int status = 0;
  std::string body;
};

// POSTs a JSON body to base_url + path. `base_url` may carry a path prefix,
// e.g. "https://api.example.com/v1". Throws TransportError.
Response post_json(const std::string& base_url, const std::string& path, const std::string& body,
                   const std::map<std::string, std::string>& headers, std::chrono::milliseconds timeout);

// Value of the named environment variable, or empty.
std::string env_or_empty(const std::string& name);

}  // namespace episodekit::http
