// Copyright 2026 The Diverlink Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "diverlink/telemetry_server.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "diverlink/error.hpp"

namespace diverlink {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Client;

}  // namespace

struct TelemetryServer::Impl : std::enable_shared_from_this<TelemetryServer::Impl> {
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::thread runner;
  std::size_t client_queue;
  ControlHandler handler;
  mutable std::mutex clients_mu;
  std::set<std::shared_ptr<Client>> clients;
  std::atomic<std::uint64_t> dropped{0};
  std::atomic<bool> stopped{false};

  void accept();
  void add(std::shared_ptr<Client> c) {
    std::lock_guard lock(clients_mu);
    clients.insert(std::move(c));
  }
  void remove(const std::shared_ptr<Client>& c) {
    std::lock_guard lock(clients_mu);
    clients.erase(c);
  }
};

namespace {

class Client : public std::enable_shared_from_this<Client> {
 public:
  Client(tcp::socket socket, std::shared_ptr<TelemetryServer::Impl> server)
      : ws_(std::move(socket)), server_(std::move(server)) {}

  void start() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

  void enqueue(std::string msg) {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (outbox_.size() >= capacity()) {
      outbox_.pop_front();
      server_->dropped.fetch_add(1);
    }
    outbox_.push_back(std::move(msg));
    if (!writing_ && open_) {
      writing_ = true;
      asio::post(ws_.get_executor(), [self = shared_from_this()] { self->write_next(); });
    }
  }

 private:
  std::size_t capacity() const { return server_->client_queue; }

  void on_request(beast::error_code ec) {
    if (ec) return;
    if (!websocket::is_upgrade(request_) || request_.target() != "/ws") {
      respond(request_.target() == "/ws" ? http::status::upgrade_required : http::status::not_found,
              "diverlink telemetry: open a WebSocket at /ws\n");
      return;
    }
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec2) {
      if (ec2) return;
      {
        std::lock_guard lock(self->mu_);
        self->open_ = true;
      }
      self->server_->add(self);
      self->read();
      std::lock_guard lock(self->mu_);
      if (!self->outbox_.empty() && !self->writing_) {
        self->writing_ = true;
        asio::post(self->ws_.get_executor(), [self] { self->write_next(); });
      }
    });
  }

  void respond(http::status status, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
    res->set(http::field::content_type, "text/plain");
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  void read() {
    ws_.async_read(inbox_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      std::string text = beast::buffers_to_string(self->inbox_.data());
      self->inbox_.consume(self->inbox_.size());
      std::size_t pos = 0;
      while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos && self->server_->handler) {
          self->enqueue(self->server_->handler(line));
        }
        pos = nl + 1;
      }
      self->read();
    });
  }

  void write_next() {
    {
      std::lock_guard lock(mu_);
      if (outbox_.empty() || closed_) {
        writing_ = false;
        return;
      }
      current_ = std::move(outbox_.front());
      outbox_.pop_front();
    }
    ws_.async_write(asio::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      self->write_next();
    });
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
      outbox_.clear();
    }
    server_->remove(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<TelemetryServer::Impl> server_;
  beast::flat_buffer buffer_;
  beast::flat_buffer inbox_;
  http::request<http::string_body> request_;
  std::mutex mu_;
  std::deque<std::string> outbox_;
  std::string current_;
  bool writing_ = false;
  bool open_ = false;
  bool closed_ = false;
};

}  // namespace

void TelemetryServer::Impl::accept() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Client>(std::move(socket), self)->start();
    self->accept();
  });
}

TelemetryServer::TelemetryServer(const std::string& bind, std::uint16_t port, std::size_t client_queue,
                                 ControlHandler handler)
    : impl_(std::make_shared<Impl>()) {
  impl_->client_queue = client_queue == 0 ? 1 : client_queue;
  impl_->handler = std::move(handler);
  beast::error_code ec;
  const auto address = asio::ip::make_address(bind, ec);
  if (ec) throw ArgumentError("invalid telemetry bind address '" + bind + "'");
  const tcp::endpoint endpoint(address, port);
  auto fail = [&](const char* what) {
    throw RuntimeError("telemetry endpoint " + bind + ":" + std::to_string(port) + " unavailable (" + what +
                       ": " + ec.message() + ")");
  };
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (ec) fail("open");
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (ec) fail("set_option");
  impl_->acceptor.bind(endpoint, ec);
  if (ec) fail("bind");
  impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) fail("listen");
  impl_->accept();
  impl_->runner = std::thread([impl = impl_] { impl->ioc.run(); });
}

TelemetryServer::~TelemetryServer() { stop(); }

std::uint16_t TelemetryServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t TelemetryServer::client_count() const {
  std::lock_guard lock(impl_->clients_mu);
  return impl_->clients.size();
}

void TelemetryServer::publish(std::string message) {
  std::vector<std::shared_ptr<Client>> targets;
  {
    std::lock_guard lock(impl_->clients_mu);
    targets.assign(impl_->clients.begin(), impl_->clients.end());
  }
  for (auto& c : targets) c->enqueue(message);
}

std::uint64_t TelemetryServer::dropped() const { return impl_->dropped.load(); }

void TelemetryServer::stop() {
  if (impl_->stopped.exchange(true)) return;
  asio::post(impl_->ioc, [impl = impl_] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  if (impl_->runner.joinable()) impl_->runner.join();
  std::lock_guard lock(impl_->clients_mu);
  impl_->clients.clear();
}

}  // namespace diverlink
