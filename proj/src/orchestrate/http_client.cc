// SPDX-License-Identifier: Apache-2.0

#include <regex>

#include "httplib.h"
#include "toxbench/orchestrate/orchestrate.h"

namespace toxbench::orchestrate {

namespace {

class HttpTransport: public Transport {
public:
  HttpTransport(std::string host_port, std::string path): client_(host_port), path_(std::move(path)) {}

  TransportResponse post_predict(const std::string &body, double timeout_seconds) override {
    const auto sec = static_cast<time_t>(timeout_seconds);
    const auto usec = static_cast<time_t>((timeout_seconds - static_cast<double>(sec)) * 1e6);
    client_.set_connection_timeout(sec, usec);
    client_.set_read_timeout(sec, usec);
    client_.set_write_timeout(sec, usec);
    auto res = client_.Post(path_, body, "application/json");
    if (!res) throw TransportError("POST " + path_ + ": " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

private:
  httplib::Client client_;
  std::string path_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string &url) {
  static const std::regex kUrl(R"(^http://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\])(:([0-9]{1,5}))?(/[^?#]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl))
    throw std::invalid_argument("endpoint URL must look like http://host[:port][/path], got '" + url + "'");
  std::string host_port = "http://" + m[1].str() + (m[3].matched ? ":" + m[3].str() : "");
  std::string path = m[4].matched ? m[4].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (path.size() < 8 || path.substr(path.size() - 8) != "/predict") path += "/predict";
  return std::make_unique<HttpTransport>(host_port, path);
}

}  // namespace toxbench::orchestrate
