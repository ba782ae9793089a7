#include "pizero/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "pizero/error.hpp"
#include "pizero/wire.hpp"

namespace pizero::es {

// ---------------------------------------------------------------- in-process

struct InProcessHub::Shared {
  explicit Shared(std::size_t world) : world(world), queues(world * world) {}

  std::size_t world;
  std::mutex mutex;
  std::condition_variable cv;
  // queues[from * world + to]
  std::vector<std::deque<std::vector<std::byte>>> queues;
};

namespace {

class InProcessEndpoint final : public Transport {
 public:
  InProcessEndpoint(std::shared_ptr<InProcessHub::Shared> shared, std::size_t rank)
      : shared_(std::move(shared)), rank_(rank) {}

  std::size_t rank() const override { return rank_; }
  std::size_t world() const override { return shared_->world; }

  void send(std::size_t peer, std::span<const std::byte> message) override {
    {
      std::lock_guard lock(shared_->mutex);
      shared_->queues.at(rank_ * shared_->world + peer)
          .emplace_back(message.begin(), message.end());
    }
    bytes_sent_ += message.size();
    shared_->cv.notify_all();
  }

  std::vector<std::byte> receive(std::size_t peer, std::chrono::milliseconds timeout) override {
    std::unique_lock lock(shared_->mutex);
    auto& queue = shared_->queues.at(peer * shared_->world + rank_);
    if (!shared_->cv.wait_for(lock, timeout, [&] { return !queue.empty(); })) {
      throw TransportTimeout("rank " + std::to_string(rank_) + ": no message from rank " +
                             std::to_string(peer));
    }
    auto message = std::move(queue.front());
    queue.pop_front();
    return message;
  }

 private:
  std::shared_ptr<InProcessHub::Shared> shared_;
  std::size_t rank_;
};

}  // namespace

InProcessHub::InProcessHub(std::size_t world) : shared_(std::make_shared<Shared>(world)) {}
InProcessHub::~InProcessHub() = default;

std::unique_ptr<Transport> InProcessHub::endpoint(std::size_t rank) {
  if (rank >= shared_->world) throw ConfigError("InProcessHub: rank out of range");
  return std::make_unique<InProcessEndpoint>(shared_, rank);
}

// ---------------------------------------------------------------- TCP

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::byte* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("send");
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void read_all(int fd, std::byte* data, std::size_t size,
              std::chrono::steady_clock::time_point deadline, std::size_t peer) {
  while (size > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      throw TransportTimeout("timed out waiting for rank " + std::to_string(peer));
    }
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail("poll");
    }
    if (ready == 0) continue;
    const ssize_t n = ::recv(fd, data, size, 0);
    if (n == 0) throw ProtocolError("rank " + std::to_string(peer) + " closed the connection");
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("recv");
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* info = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &info) != 0 || !info) {
    throw ConfigError("cannot resolve host '" + host + "'");
  }
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(info->ai_addr);
  ::freeaddrinfo(info);
  addr.sin_port = htons(port);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

std::array<std::byte, 4> le32(std::uint32_t v) {
  return {std::byte(v & 0xff), std::byte((v >> 8) & 0xff), std::byte((v >> 16) & 0xff),
          std::byte((v >> 24) & 0xff)};
}

std::uint32_t from_le32(const std::array<std::byte, 4>& b) {
  return std::to_integer<std::uint32_t>(b[0]) | std::to_integer<std::uint32_t>(b[1]) << 8 |
         std::to_integer<std::uint32_t>(b[2]) << 16 | std::to_integer<std::uint32_t>(b[3]) << 24;
}

}  // namespace

std::pair<std::string, std::uint16_t> split_host_port(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ConfigError("peer address '" + address + "' is not host:port");
  }
  const unsigned long port = std::stoul(address.substr(colon + 1));
  if (port > 65535) throw ConfigError("peer address '" + address + "' has an invalid port");
  return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) fail("bind");
  if (::listen(fd_, 64) != 0) fail("listen");
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpListener::TcpListener(TcpListener&& other) noexcept : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
}

int TcpListener::release() {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

TcpTransport::TcpTransport(std::size_t rank, std::vector<std::string> peers,
                           TcpListener listener, std::chrono::milliseconds connect_timeout)
    : rank_(rank), peers_(std::move(peers)), sockets_(peers_.size(), -1) {
  if (rank_ >= peers_.size()) throw ConfigError("rank is outside the peer list");
  const int listen_fd = listener.release();
  const auto deadline = std::chrono::steady_clock::now() + connect_timeout;

  try {
    // Connect to every lower rank, announcing our rank.
    for (std::size_t peer = 0; peer < rank_; ++peer) {
      const auto [host, port] = split_host_port(peers_[peer]);
      const sockaddr_in addr = resolve(host, port);
      for (;;) {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) fail("socket");
        if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
          set_nodelay(fd);
          const auto hello = le32(static_cast<std::uint32_t>(rank_));
          write_all(fd, hello.data(), hello.size());
          sockets_[peer] = fd;
          break;
        }
        ::close(fd);
        if (std::chrono::steady_clock::now() > deadline) {
          throw TransportTimeout("could not connect to rank " + std::to_string(peer) + " at " +
                                 peers_[peer]);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
    }
    // Accept every higher rank.
    for (std::size_t accepted = rank_ + 1; accepted < peers_.size(); ++accepted) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      pollfd pfd{listen_fd, POLLIN, 0};
      if (left.count() <= 0 || ::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) {
        throw TransportTimeout("timed out waiting for higher ranks to connect");
      }
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) fail("accept");
      set_nodelay(fd);
      std::array<std::byte, 4> hello{};
      read_all(fd, hello.data(), hello.size(), deadline, accepted);
      const std::uint32_t peer = from_le32(hello);
      if (peer <= rank_ || peer >= peers_.size() || sockets_[peer] >= 0) {
        ::close(fd);
        throw ProtocolError("unexpected handshake from rank " + std::to_string(peer));
      }
      sockets_[peer] = fd;
    }
  } catch (...) {
    ::close(listen_fd);
    for (int fd : sockets_) {
      if (fd >= 0) ::close(fd);
    }
    throw;
  }
  ::close(listen_fd);
}

TcpTransport::~TcpTransport() {
  for (int fd : sockets_) {
    if (fd >= 0) ::close(fd);
  }
}

void TcpTransport::send(std::size_t peer, std::span<const std::byte> message) {
  const auto prefix = le32(static_cast<std::uint32_t>(message.size()));
  write_all(sockets_.at(peer), prefix.data(), prefix.size());
  write_all(sockets_.at(peer), message.data(), message.size());
  bytes_sent_ += prefix.size() + message.size();
}

std::vector<std::byte> TcpTransport::receive(std::size_t peer,
                                             std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::array<std::byte, 4> prefix{};
  read_all(sockets_.at(peer), prefix.data(), prefix.size(), deadline, peer);
  const std::uint32_t size = from_le32(prefix);
  if (size > (1u << 30)) throw ProtocolError("frame too large from rank " + std::to_string(peer));
  std::vector<std::byte> message(size);
  read_all(sockets_.at(peer), message.data(), size, deadline, peer);
  return message;
}

// ---------------------------------------------------------------- allgather

Allgather::Allgather(Transport& transport, std::chrono::milliseconds timeout)
    : transport_(transport), timeout_(timeout), last_generation_(transport.world()) {}

std::vector<std::vector<double>> Allgather::run(std::uint64_t generation,
                                                std::span<const double> payload) {
  const std::size_t rank = transport_.rank();
  const std::size_t world = transport_.world();
  const auto bytes = encode_message(
      {generation, static_cast<std::uint32_t>(rank), {payload.begin(), payload.end()}});
  for (std::size_t peer = 0; peer < world; ++peer) {
    if (peer != rank) transport_.send(peer, bytes);
  }

  std::vector<std::vector<double>> gathered(world);
  gathered[rank].assign(payload.begin(), payload.end());
  for (std::size_t peer = 0; peer < world; ++peer) {
    if (peer == rank) continue;
    WireMessage message = decode_message(transport_.receive(peer, timeout_));
    if (message.rank != peer) {
      throw ProtocolError("message on rank " + std::to_string(peer) + "'s channel claims rank " +
                          std::to_string(message.rank));
    }
    auto& last = last_generation_[peer];
    if (last && message.generation == *last) {
      throw ProtocolError("duplicate message for generation " +
                          std::to_string(message.generation) + " from rank " +
                          std::to_string(peer));
    }
    if (message.generation != generation) {
      throw ProtocolError("out-of-order message from rank " + std::to_string(peer) +
                          ": generation " + std::to_string(message.generation) + ", expected " +
                          std::to_string(generation));
    }
    last = message.generation;
    gathered[peer] = std::move(message.values);
  }
  return gathered;
}

}  // namespace pizero::es
