// Copyright 2026 The sched-decode Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Newline-delimited JSON protocol for external logit providers.
//
//   server -> {"type":"hello","vocab_size":n,"mask_id":m,"name":s}   (first line)
//   client -> {"type":"logits","step":t,"budget":T,"prompt":[..],"gen":[..],
//              "want_full":b,"want_entropy":b}                        (-1 = mask)
//   server -> {"type":"logits","positions":[{"i":..,"argmax":..,"top1":..,
//              "top2":..,"entropy":..?,"row":[..]?}, ...]}
//   server -> {"type":"error","message":s}
//
// Floats are written as the shortest decimal that round-trips a double.

#include <netdb.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <csignal>
#include <cstring>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sched/diffusion.hpp"
#include "sched/error.hpp"
#include "sched/provider.hpp"

namespace sched::wire {

using nlohmann::json;

inline constexpr Token kWireMask = -1;

inline void append_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw ProtocolError("cannot encode a non-finite number");
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ProtocolError("number formatting failed");
  out.append(buf, end);
}

struct Hello {
  std::int64_t vocab_size = 0;
  Token mask_id = 0;
  std::string name;
};

inline std::string encode_hello(const Vocabulary& vocab, const std::string& name) {
  json j = {{"type", "hello"},
            {"vocab_size", vocab.size()},
            {"mask_id", vocab.mask_id()},
            {"name", name}};
  return j.dump();
}

inline std::string encode_error(const std::string& message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

inline json parse_line(const std::string& line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("malformed protocol line: " + line);
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("message without type");
  if (j["type"] == "error") {
    throw TransportError("provider reported: " + j.value("message", std::string("unknown error")));
  }
  return j;
}

inline Hello decode_hello(const std::string& line) {
  const json j = parse_line(line);
  if (j["type"] != "hello") throw ProtocolError("expected hello, got " + j["type"].dump());
  try {
    Hello h;
    h.vocab_size = j.at("vocab_size").get<std::int64_t>();
    h.mask_id = j.at("mask_id").get<Token>();
    h.name = j.value("name", std::string());
    return h;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad hello: ") + e.what());
  }
}

inline std::string encode_request(const Canvas& canvas, const QueryOptions& options) {
  std::vector<Token> gen = canvas.gen();
  for (Token& t : gen) {
    if (t == canvas.vocab().mask_id()) t = kWireMask;
  }
  json j = {{"type", "logits"},     {"step", canvas.step()},
            {"budget", canvas.budget()}, {"prompt", canvas.prompt()},
            {"gen", gen},           {"want_full", options.want_full},
            {"want_entropy", options.want_entropy}};
  return j.dump();
}

struct Request {
  Canvas canvas;
  QueryOptions options;
};

inline Request decode_request(const std::string& line, const Vocabulary& vocab) {
  const json j = parse_line(line);
  if (j["type"] != "logits") throw ProtocolError("expected logits request");
  try {
    auto gen = j.at("gen").get<std::vector<Token>>();
    for (Token& t : gen) {
      if (t == kWireMask) t = vocab.mask_id();
    }
    QueryOptions options;
    options.want_full = j.value("want_full", false);
    options.want_entropy = j.value("want_entropy", false);
    return {Canvas::from_state(vocab, j.at("prompt").get<std::vector<Token>>(), std::move(gen),
                               j.at("step").get<int>(), j.at("budget").get<int>()),
            options};
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad logits request: ") + e.what());
  } catch (const InvalidInputError& e) {
    throw ProtocolError(std::string("bad logits request: ") + e.what());
  } catch (const RangeError& e) {
    throw ProtocolError(std::string("bad logits request: ") + e.what());
  }
}

inline std::string encode_response(const LogitBundle& bundle) {
  std::string out = R"({"type":"logits","positions":[)";
  for (std::size_t n = 0; n < bundle.positions.size(); ++n) {
    const auto& e = bundle.positions[n];
    if (n) out += ',';
    out += R"({"i":)" + std::to_string(e.position) + R"(,"argmax":)" + std::to_string(e.argmax);
    out += R"(,"top1":)";
    append_double(out, e.top1);
    out += R"(,"top2":)";
    append_double(out, e.top2);
    if (e.entropy) {
      out += R"(,"entropy":)";
      append_double(out, *e.entropy);
    }
    if (e.row) {
      out += R"(,"row":[)";
      for (std::size_t v = 0; v < e.row->size(); ++v) {
        if (v) out += ',';
        append_double(out, (*e.row)[v]);
      }
      out += ']';
    }
    out += '}';
  }
  out += "]}";
  return out;
}

inline LogitBundle decode_response(const std::string& line) {
  const json j = parse_line(line);
  if (j["type"] != "logits") throw ProtocolError("expected logits response");
  try {
    LogitBundle bundle;
    for (const auto& p : j.at("positions")) {
      PositionEvidence e;
      e.position = p.at("i").get<std::size_t>();
      e.argmax = p.at("argmax").get<Token>();
      e.top1 = p.at("top1").get<double>();
      e.top2 = p.at("top2").get<double>();
      if (p.contains("entropy") && !p["entropy"].is_null()) e.entropy = p["entropy"].get<double>();
      if (p.contains("row") && !p["row"].is_null()) e.row = p["row"].get<std::vector<double>>();
      bundle.positions.push_back(std::move(e));
    }
    return bundle;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad logits response: ") + e.what());
  }
}

// A bidirectional line-oriented byte stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  // nullopt at end of stream.
  virtual std::optional<std::string> read_line() = 0;
};

// Channel over a pair of file descriptors (pipes or a socket).
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool owns) : read_fd_(read_fd), write_fd_(write_fd), owns_(owns) {}
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;
  ~FdChannel() override { close_fds(); }

  void write_line(const std::string& line) override {
    std::string data = line + '\n';
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      const ssize_t n = ::write(write_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("write failed: ") + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> read_line() override {
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        if (buffer_.empty()) return std::nullopt;
        return std::exchange(buffer_, std::string());
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_fds() {
    if (!owns_) return;
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    read_fd_ = write_fd_ = -1;
  }

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
  std::string buffer_;
};

// Child process speaking the protocol on its stdin/stdout.
class ProcessChannel final : public FdChannel {
 public:
  ProcessChannel(int read_fd, int write_fd, pid_t pid) : FdChannel(read_fd, write_fd, true), pid_(pid) {}
  ~ProcessChannel() override {
    close_fds();
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

 private:
  pid_t pid_;
};

inline std::unique_ptr<LineChannel> spawn_process(const std::vector<std::string>& argv) {
  if (argv.empty()) throw TransportError("empty provider command");
  // A dead peer must surface as EPIPE, not kill the process.
  std::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw TransportError("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, to_child[1]);
  posix_spawn_file_actions_addclose(&actions, from_child[0]);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    throw TransportError("cannot start provider '" + argv[0] + "': " + std::strerror(rc));
  }
  return std::make_unique<ProcessChannel>(from_child[0], to_child[1], pid);
}

class SocketChannel final : public FdChannel {
 public:
  explicit SocketChannel(int fd) : FdChannel(fd, fd, true), fd_(fd) {}

  void write_line(const std::string& line) override {
    std::string data = line + '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

 private:
  int fd_;
};

inline std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
  for (addrinfo* a = res; a; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) return std::make_unique<SocketChannel>(fd);
    ::close(fd);
  }
  throw TransportError("cannot connect to " + host + ":" + service);
}

// Channel over C++ streams; used for in-process servers and replay fixtures.
class StreamChannel final : public LineChannel {
 public:
  StreamChannel(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

  void write_line(const std::string& line) override {
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw TransportError("output stream failed");
  }

  std::optional<std::string> read_line() override {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    return line;
  }

 private:
  std::istream& in_;
  std::ostream& out_;
};

// Provider backed by one protocol connection. Requests on the connection are
// serialized.
class WireClient final : public LogitProvider {
 public:
  explicit WireClient(std::unique_ptr<LineChannel> channel) : channel_(std::move(channel)) {
    auto line = channel_->read_line();
    if (!line) throw TransportError("provider closed the stream before the handshake");
    const Hello hello = decode_hello(*line);
    try {
      vocab_.emplace(hello.vocab_size, hello.mask_id);
    } catch (const InvalidVocabularyError& e) {
      throw ProtocolError(std::string("handshake: ") + e.what());
    }
    name_ = hello.name;
  }

  const Vocabulary& vocabulary() const override { return *vocab_; }
  std::string name() const override { return name_; }
  bool concurrent_safe() const override { return true; }

  LogitBundle query(const Canvas& canvas, const QueryOptions& options) override {
    std::lock_guard lock(mutex_);
    channel_->write_line(encode_request(canvas, options));
    auto line = channel_->read_line();
    if (!line) throw TransportError("provider closed the stream mid-decode");
    LogitBundle bundle = decode_response(*line);
    check_bundle(bundle, canvas);
    return bundle;
  }

 private:
  std::unique_ptr<LineChannel> channel_;
  std::optional<Vocabulary> vocab_;
  std::string name_;
  std::mutex mutex_;
};

// Several connections to equivalent servers; each query borrows an idle one.
class WireClientPool final : public LogitProvider {
 public:
  explicit WireClientPool(std::vector<std::unique_ptr<WireClient>> clients)
      : clients_(std::move(clients)) {
    if (clients_.empty()) throw ConfigError("connection pool needs at least one client");
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      if (!(clients_[i]->vocabulary() == clients_.front()->vocabulary())) {
        throw ProtocolError("pooled providers disagree on the vocabulary");
      }
      idle_.push_back(i);
    }
  }

  const Vocabulary& vocabulary() const override { return clients_.front()->vocabulary(); }
  std::string name() const override { return clients_.front()->name(); }
  bool concurrent_safe() const override { return true; }
  std::size_t size() const noexcept { return clients_.size(); }

  LogitBundle query(const Canvas& canvas, const QueryOptions& options) override {
    std::size_t slot = 0;
    {
      std::unique_lock lock(mutex_);
      ready_.wait(lock, [&] { return !idle_.empty(); });
      slot = idle_.back();
      idle_.pop_back();
    }
    struct Release {
      WireClientPool* pool;
      std::size_t slot;
      ~Release() {
        {
          std::lock_guard lock(pool->mutex_);
          pool->idle_.push_back(slot);
        }
        pool->ready_.notify_one();
      }
    } release{this, slot};
    return clients_[slot]->query(canvas, options);
  }

 private:
  std::vector<std::unique_ptr<WireClient>> clients_;
  std::vector<std::size_t> idle_;
  std::mutex mutex_;
  std::condition_variable ready_;
};

// Reference server loop: handshake, then answer requests until end of
// stream. Malformed requests get an error reply and the loop continues; a
// provider failure gets an error reply and ends the loop with status 1.
inline int serve(LogitProvider& provider, LineChannel& channel) {
  channel.write_line(encode_hello(provider.vocabulary(), provider.name()));
  while (auto line = channel.read_line()) {
    if (line->empty()) continue;
    std::optional<Request> req;
    try {
      req.emplace(decode_request(*line, provider.vocabulary()));
    } catch (const Error& e) {
      channel.write_line(encode_error(e.what()));
      continue;
    }
    try {
      channel.write_line(encode_response(provider.query(req->canvas, req->options)));
    } catch (const Error& e) {
      channel.write_line(encode_error(e.what()));
      return 1;
    }
  }
  return 0;
}

}  // namespace sched::wire
